#include "riskit/channel.hpp"

#include <cmath>

#include <fmt/format.h>

namespace riskit {

PhaseShifts::PhaseShifts(std::vector<double> theta) : theta_(std::move(theta))
{
    for (double& t : theta_)
        t = normalize_angle(t);
}

PhaseShifts PhaseShifts::zeros(std::size_t count)
{
    return PhaseShifts(std::vector<double>(count, 0.0));
}

PhaseShifts PhaseShifts::random(std::size_t count, Stream& rng)
{
    std::vector<double> theta(count);
    for (double& t : theta)
        t = uniform_angle(rng);
    return PhaseShifts(std::move(theta));
}

Eigen::VectorXcd PhaseShifts::phasors() const
{
    Eigen::VectorXcd out(static_cast<Eigen::Index>(theta_.size()));
    for (std::size_t n = 0; n < theta_.size(); ++n)
        out[static_cast<Eigen::Index>(n)] = std::polar(1.0, theta_[n]);
    return out;
}

SteeringVector steering_vector(std::size_t count, double azimuth, double elevation,
                               double spacing_ratio)
{
    if (count == 0 || !is_perfect_square(count))
        throw ValidationError(fmt::format("steering vector size {} is not a perfect square", count));
    const std::size_t side = integer_sqrt(count);
    const double row_step = std::sin(elevation) * std::sin(azimuth);
    const double col_step = std::cos(elevation);
    SteeringVector a(static_cast<Eigen::Index>(count));
    for (std::size_t n = 0; n < count; ++n) {
        const double x = static_cast<double>(n / side);
        const double y = static_cast<double>(n % side);
        const double phase = kTwoPi * spacing_ratio * (x * row_step + y * col_step);
        a[static_cast<Eigen::Index>(n)] = std::polar(1.0, phase);
    }
    return a;
}

LosComponents los_components(const Scenario& s)
{
    const auto& ang = s.angles;
    const double r = s.budget.spacing_ratio;
    LosComponents los;
    los.user_ris.reserve(s.dims.users);
    for (std::size_t k = 0; k < s.dims.users; ++k)
        los.user_ris.push_back(steering_vector(s.dims.ris_elements, ang.ris_arrival_azimuth[k],
                                               ang.ris_arrival_elevation[k], r));
    const SteeringVector bs = steering_vector(s.dims.bs_antennas, ang.bs_arrival_azimuth,
                                              ang.bs_arrival_elevation, r);
    const SteeringVector ris = steering_vector(s.dims.ris_elements, ang.ris_departure_azimuth,
                                               ang.ris_departure_elevation, r);
    los.ris_bs = bs * ris.adjoint();
    return los;
}

ChannelRealization sample_realization(const Scenario& s, const LosComponents& los, Stream& rng)
{
    const auto m = static_cast<Eigen::Index>(s.dims.bs_antennas);
    const auto n = static_cast<Eigen::Index>(s.dims.ris_elements);
    const std::size_t users = s.dims.users;
    ComplexGaussian cn;

    ChannelRealization out;
    const double delta = s.fading.ris_bs_rician;
    const double beta_root = std::sqrt(s.fading.ris_bs_loss);
    const double h2_los = beta_root * std::sqrt(delta / (delta + 1.0));
    const double h2_nlos = beta_root * std::sqrt(1.0 / (delta + 1.0));
    out.ris_bs.resize(m, n);
    for (Eigen::Index col = 0; col < n; ++col)
        for (Eigen::Index row = 0; row < m; ++row)
            out.ris_bs(row, col) = h2_los * los.ris_bs(row, col) + h2_nlos * cn(rng);

    out.user_ris.resize(users);
    for (std::size_t k = 0; k < users; ++k) {
        const double eps = s.fading.user_ris_rician[k];
        const double alpha_root = std::sqrt(s.fading.user_ris_loss[k]);
        const double w_los = alpha_root * std::sqrt(eps / (eps + 1.0));
        const double w_nlos = alpha_root * std::sqrt(1.0 / (eps + 1.0));
        Eigen::VectorXcd h(n);
        for (Eigen::Index e = 0; e < n; ++e)
            h[e] = w_los * los.user_ris[k][e] + w_nlos * cn(rng);
        out.user_ris[k] = std::move(h);
    }

    out.direct.resize(users);
    for (std::size_t k = 0; k < users; ++k) {
        const double w = std::sqrt(s.fading.direct_loss[k]);
        Eigen::VectorXcd d(m);
        for (Eigen::Index a = 0; a < m; ++a)
            d[a] = w * cn(rng);
        out.direct[k] = std::move(d);
    }
    return out;
}

ChannelRealization sample_realization(const Scenario& s, Stream& rng)
{
    return sample_realization(s, los_components(s), rng);
}

std::vector<Eigen::VectorXcd> cascaded(const ChannelRealization& r, const PhaseShifts& phases)
{
    if (static_cast<std::size_t>(r.ris_bs.cols()) != phases.size())
        throw ValidationError(fmt::format("phase vector has {} entries, RIS has {}", phases.size(),
                                          r.ris_bs.cols()));
    const Eigen::VectorXcd phi = phases.phasors();
    std::vector<Eigen::VectorXcd> g;
    g.reserve(r.user_ris.size());
    for (const auto& h : r.user_ris) {
        if (h.size() != phi.size())
            throw ValidationError("user-RIS channel length does not match the RIS");
        g.push_back(r.ris_bs * phi.cwiseProduct(h));
    }
    return g;
}

}  // namespace riskit
