#include "riskit/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace riskit {

namespace {

using real = long double;

void check_user(const StatisticalCsi& csi, std::size_t k)
{
    if (k >= csi.users)
        throw std::out_of_range(fmt::format("user index {} outside 0..{}", k, csi.users - 1));
}

void check_gains(const StatisticalCsi& csi, std::span<const std::complex<double>> gains)
{
    if (gains.size() != csi.users)
        throw ValidationError("array gains must have one entry per user");
}

}  // namespace

double composite_loss(const Scenario& s, std::size_t k)
{
    const double delta = s.fading.ris_bs_rician;
    const double eps = s.fading.user_ris_rician.at(k);
    return s.fading.ris_bs_loss * s.fading.user_ris_loss[k] / ((delta + 1.0) * (eps + 1.0));
}

double phase_offset(const Scenario& s, std::size_t n, std::size_t k)
{
    const std::size_t elements = s.dims.ris_elements;
    if (n >= elements)
        throw std::out_of_range(fmt::format("element index {} outside 0..{}", n, elements - 1));
    if (k >= s.dims.users)
        throw std::out_of_range(fmt::format("user index {} outside 0..{}", k, s.dims.users - 1));
    const auto& a = s.angles;
    const std::size_t side = integer_sqrt(elements);
    const double row = static_cast<double>(n / side);
    const double col = static_cast<double>(n % side);
    const double row_step = std::sin(a.ris_arrival_elevation[k]) * std::sin(a.ris_arrival_azimuth[k]) -
                            std::sin(a.ris_departure_elevation) * std::sin(a.ris_departure_azimuth);
    const double col_step = std::cos(a.ris_arrival_elevation[k]) - std::cos(a.ris_departure_elevation);
    return kTwoPi * s.budget.spacing_ratio * (row * row_step + col * col_step);
}

StatisticalCsi make_statistical_csi(const Scenario& s)
{
    validate(s);
    StatisticalCsi csi;
    csi.bs_antennas = s.dims.bs_antennas;
    csi.ris_elements = s.dims.ris_elements;
    csi.users = s.dims.users;
    csi.delta = s.fading.ris_bs_rician;
    csi.epsilon = s.fading.user_ris_rician;
    csi.user_ris_loss = s.fading.user_ris_loss;
    csi.direct_loss = s.fading.direct_loss;
    csi.tx_power_w = s.budget.tx_power_w;
    csi.noise_power_w = s.budget.noise_power_w;

    csi.composite_loss.resize(csi.users);
    csi.phase_offset.resize(csi.users * csi.ris_elements);
    for (std::size_t k = 0; k < csi.users; ++k) {
        csi.composite_loss[k] = composite_loss(s, k);
        for (std::size_t n = 0; n < csi.ris_elements; ++n)
            csi.phase_offset[k * csi.ris_elements + n] = phase_offset(s, n, k);
    }

    const LosComponents los = los_components(s);
    csi.los_gram.resize(csi.users * csi.users);
    for (std::size_t k = 0; k < csi.users; ++k)
        for (std::size_t i = 0; i < csi.users; ++i)
            csi.los_gram[k * csi.users + i] = los.user_ris[k].dot(los.user_ris[i]);
    return csi;
}

std::complex<double> array_gain(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k)
{
    check_user(csi, k);
    if (phases.size() != csi.ris_elements)
        throw ValidationError(fmt::format("phase vector has {} entries, RIS has {}", phases.size(),
                                          csi.ris_elements));
    std::complex<double> sum = 0.0;
    for (std::size_t n = 0; n < csi.ris_elements; ++n)
        sum += std::polar(1.0, csi.zeta(n, k) + phases[n]);
    return sum;
}

std::vector<std::complex<double>> array_gains(const StatisticalCsi& csi, const PhaseShifts& phases)
{
    std::vector<std::complex<double>> gains(csi.users);
    for (std::size_t k = 0; k < csi.users; ++k)
        gains[k] = array_gain(csi, phases, k);
    return gains;
}

double signal_term(const StatisticalCsi& csi, std::span<const std::complex<double>> gains,
                   std::size_t k)
{
    check_user(csi, k);
    check_gains(csi, gains);
    const real M = csi.bs_antennas;
    const real N = csi.ris_elements;
    const real c = csi.composite_loss[k];
    const real d = csi.delta;
    const real e = csi.epsilon[k];
    const real g = csi.direct_loss[k];
    const real f2 = std::norm(gains[k]);

    const real t1 = M * M * c * c * d * d * e * e * f2 * f2;
    const real t2 = 2 * c * M * d * e * f2 *
                    (c * (2 * M * N * d + M * N * e + M * N + 2 * M + N * e + N + 2) + g * (M + 1));
    const real t3 = c * c * M * M * N * N * (2 * d * d + e * e + 2 * d * e + 2 * d + 2 * e + 1);
    const real t4 = c * c * M * N * N * (e * e + 2 * d * e + 2 * d + 2 * e + 1);
    const real t5 = c * M * N * (M + 1) * (c * (2 * d + 2 * e + 1) + 2 * g * (d + e + 1));
    const real t6 = g * g * (M * M + M);
    return static_cast<double>(t1 + t2 + t3 + t4 + t5 + t6);
}

double interference_term(const StatisticalCsi& csi, std::span<const std::complex<double>> gains,
                         std::size_t k, std::size_t i)
{
    check_user(csi, k);
    check_user(csi, i);
    check_gains(csi, gains);
    if (i == k)
        throw std::invalid_argument("interference term needs two distinct users");
    const real M = csi.bs_antennas;
    const real N = csi.ris_elements;
    const real d = csi.delta;
    const real ck = csi.composite_loss[k];
    const real ci = csi.composite_loss[i];
    const real ek = csi.epsilon[k];
    const real ei = csi.epsilon[i];
    const real gk = csi.direct_loss[k];
    const real gi = csi.direct_loss[i];
    const real fk2 = std::norm(gains[k]);
    const real fi2 = std::norm(gains[i]);
    const real los_overlap = std::norm(csi.gram(k, i));
    // Re{ f_k^* f_i  h_bar_i^H h_bar_k }
    const real cross = std::real(std::conj(gains[k]) * gains[i] * csi.gram(i, k));

    const real t1 = M * M * ck * ci * d * d * ek * ei * fk2 * fi2;
    const real t2 = M * ck * d * ek * fk2 * (ci * (d * M * N + N * ei + N + 2 * M) + gi);
    const real t3 = M * ci * d * ei * fi2 * (ck * (d * M * N + N * ek + N + 2 * M) + gk);
    const real t4 = M * N * N * ck * ci * (M * d * d + d * (ei + ek + 2) + (ek + 1) * (ei + 1));
    const real t5 = M * M * N * ck * ci * (2 * d + ei + ek + 1);
    const real t6 = M * M * ck * ci * ek * ei * los_overlap;
    const real t7 = 2 * M * M * ck * ci * d * ek * ei * cross;
    const real t8 = M * (ci * gk * N * (d + ei + 1) + ck * gi * N * (d + ek + 1) + gi * gk);
    return static_cast<double>(t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8);
}

double noise_term(const StatisticalCsi& csi, std::span<const std::complex<double>> gains,
                  std::size_t k)
{
    check_user(csi, k);
    check_gains(csi, gains);
    const real M = csi.bs_antennas;
    const real N = csi.ris_elements;
    const real c = csi.composite_loss[k];
    const real d = csi.delta;
    const real e = csi.epsilon[k];
    const real g = csi.direct_loss[k];
    const real f2 = std::norm(gains[k]);
    return static_cast<double>(M * (c * d * e * f2 + c * (d + e + 1) * N + g));
}

double signal_term(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k)
{
    const auto gains = array_gains(csi, phases);
    return signal_term(csi, gains, k);
}

double interference_term(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k,
                         std::size_t i)
{
    const auto gains = array_gains(csi, phases);
    return interference_term(csi, gains, k, i);
}

double noise_term(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k)
{
    const auto gains = array_gains(csi, phases);
    return noise_term(csi, gains, k);
}

double SinrFraction::value() const
{
    if (denominator == 0.0L) {
        if (numerator == 0.0L)
            return 0.0;
        throw std::domain_error("SINR denominator is zero");
    }
    return static_cast<double>(numerator / denominator);
}

double SinrFraction::rate() const
{
    return std::log2(1.0 + value());
}

SinrFraction sinr_fraction(const StatisticalCsi& csi, std::span<const std::complex<double>> gains,
                           std::size_t k)
{
    SinrFraction out;
    out.numerator = static_cast<real>(csi.tx_power_w[k]) * signal_term(csi, gains, k);
    real denominator = static_cast<real>(csi.noise_power_w) * noise_term(csi, gains, k);
    for (std::size_t i = 0; i < csi.users; ++i)
        if (i != k)
            denominator += static_cast<real>(csi.tx_power_w[i]) * interference_term(csi, gains, k, i);
    out.denominator = denominator;
    return out;
}

RateBreakdown rate_breakdown(const StatisticalCsi& csi, const PhaseShifts& phases)
{
    const auto gains = array_gains(csi, phases);
    const std::size_t users = csi.users;
    RateBreakdown out;
    out.signal.resize(users);
    out.noise.resize(users);
    out.sinr.resize(users);
    out.rate.resize(users);
    out.interference.assign(users * users, 0.0);
    for (std::size_t k = 0; k < users; ++k) {
        out.signal[k] = signal_term(csi, gains, k);
        out.noise[k] = noise_term(csi, gains, k);
        for (std::size_t i = 0; i < users; ++i)
            if (i != k)
                out.interference[k * users + i] = interference_term(csi, gains, k, i);
        const SinrFraction f = sinr_fraction(csi, gains, k);
        out.sinr[k] = f.value();
        out.rate[k] = f.rate();
        out.sum_rate += out.rate[k];
    }
    return out;
}

double ergodic_rate(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k)
{
    check_user(csi, k);
    const auto gains = array_gains(csi, phases);
    return sinr_fraction(csi, gains, k).rate();
}

double sum_rate(const StatisticalCsi& csi, const PhaseShifts& phases)
{
    const auto gains = array_gains(csi, phases);
    double total = 0.0;
    for (std::size_t k = 0; k < csi.users; ++k)
        total += sinr_fraction(csi, gains, k).rate();
    return total;
}

double ergodic_rate(const Scenario& scenario, const PhaseShifts& phases, std::size_t k)
{
    return ergodic_rate(make_statistical_csi(scenario), phases, k);
}

double sum_rate(const Scenario& scenario, const PhaseShifts& phases)
{
    return sum_rate(make_statistical_csi(scenario), phases);
}

PhaseShifts aligned_phases(const StatisticalCsi& csi, std::size_t k)
{
    check_user(csi, k);
    std::vector<double> theta(csi.ris_elements);
    for (std::size_t n = 0; n < csi.ris_elements; ++n)
        theta[n] = -csi.zeta(n, k);
    return PhaseShifts(std::move(theta));
}

SinrFraction sinr_no_ris(const StatisticalCsi& csi, std::size_t k)
{
    check_user(csi, k);
    const real M = csi.bs_antennas;
    SinrFraction out;
    out.numerator = static_cast<real>(csi.tx_power_w[k]) * (M + 1) * csi.direct_loss[k];
    real denominator = csi.noise_power_w;
    for (std::size_t i = 0; i < csi.users; ++i)
        if (i != k)
            denominator += static_cast<real>(csi.tx_power_w[i]) * csi.direct_loss[i];
    out.denominator = denominator;
    return out;
}

double rate_no_ris(const StatisticalCsi& csi, std::size_t k)
{
    return sinr_no_ris(csi, k).rate();
}

double sum_rate_no_ris(const StatisticalCsi& csi)
{
    double total = 0.0;
    for (std::size_t k = 0; k < csi.users; ++k)
        total += rate_no_ris(csi, k);
    return total;
}

SinrFraction sinr_nlos_fraction(const StatisticalCsi& csi, std::size_t k)
{
    check_user(csi, k);
    const real M = csi.bs_antennas;
    const real N = csi.ris_elements;
    const real ck = csi.composite_loss[k];
    const real gk = csi.direct_loss[k];
    SinrFraction out;
    out.numerator = static_cast<real>(csi.tx_power_w[k]) *
                    (ck * ck * (M * N * N + N * N + M * N + N) + 2 * ck * gk * N * (M + 1) +
                     gk * gk * (M + 1));
    real denominator = static_cast<real>(csi.noise_power_w) * (ck * N + gk);
    for (std::size_t i = 0; i < csi.users; ++i) {
        if (i == k)
            continue;
        const real ci = csi.composite_loss[i];
        const real gi = csi.direct_loss[i];
        denominator += static_cast<real>(csi.tx_power_w[i]) *
                       (ck * ci * (N * N + M * N) + ck * gi * N + ci * gk * N + gk * gi);
    }
    out.denominator = denominator;
    return out;
}

double sinr_nlos(const StatisticalCsi& csi, std::size_t k)
{
    return sinr_nlos_fraction(csi, k).value();
}

double sinr_random_limit(const StatisticalCsi& csi, std::size_t k)
{
    check_user(csi, k);
    if (csi.users < 2)
        throw std::domain_error("random-phase limit needs at least two users");
    const real M = csi.bs_antennas;
    const real d = csi.delta;
    auto user_ris_weight = [&](std::size_t u) {
        return static_cast<real>(csi.tx_power_w[u]) * csi.user_ris_loss[u];
    };
    const real numerator = user_ris_weight(k) * (M * (2 * d * d + 2 * d + 1) + 2 * d + 1);
    real denominator = 0;
    for (std::size_t i = 0; i < csi.users; ++i)
        if (i != k)
            denominator += user_ris_weight(i) * (M * d * d + 2 * d + 1);
    if (denominator == 0)
        throw std::domain_error("random-phase limit has no interference power");
    return static_cast<double>(numerator / denominator);
}

NlosCrossover nlos_crossover(const SymmetricPair& pair)
{
    if (pair.bs_antennas < 2)
        throw std::domain_error("crossover needs at least two BS antennas");
    if (!(pair.composite_loss > 0.0) || !(pair.direct_loss > 0.0))
        throw std::domain_error("crossover needs c > 0 and gamma > 0");
    const double m1 = static_cast<double>(pair.bs_antennas) - 1.0;
    const double n = static_cast<double>(pair.ris_elements);
    NlosCrossover out;
    out.snr_threshold = (n + 1.0) / (pair.direct_loss * m1) + 1.0 / (pair.composite_loss * m1);
    out.element_threshold = pair.direct_loss * (pair.snr * m1 - 1.0 / pair.composite_loss) - 1.0;
    return out;
}

double random_crossover(const SymmetricPair& pair)
{
    if (pair.bs_antennas < 2)
        throw std::domain_error("crossover needs at least two BS antennas");
    if (!(pair.delta > 0.0))
        throw std::domain_error("crossover needs delta > 0");
    const double M = static_cast<double>(pair.bs_antennas);
    const double d = pair.delta;
    return ((2 * d * d + 2 * d + 1) * M + (2 * d + 1)) / (d * d * (M * M - M));
}

CascadedMoments cascaded_moments(const StatisticalCsi& csi, const PhaseShifts& phases,
                                 std::size_t k, std::size_t i)
{
    check_user(csi, k);
    check_user(csi, i);
    StatisticalCsi blocked = csi;
    std::fill(blocked.direct_loss.begin(), blocked.direct_loss.end(), 0.0);
    const auto gains = array_gains(blocked, phases);
    CascadedMoments out;
    out.second = noise_term(blocked, gains, k);
    out.fourth = signal_term(blocked, gains, k);
    out.cross = i == k ? 0.0 : interference_term(blocked, gains, k, i);
    return out;
}

}  // namespace riskit
