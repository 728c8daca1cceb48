// Shared fixtures and an independent re-derivation of the closed-form moments
// (matrix form of the array gain, long-double transcription of each term).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "riskit/channel.hpp"
#include "riskit/scenario.hpp"

namespace testing {

using cld = std::complex<long double>;

// Linear-unit config with O(1) path losses so moments are well conditioned.
inline riskit::ScenarioConfig linear_config(std::size_t m, std::size_t n, std::size_t k)
{
    riskit::ScenarioConfig c;
    c.bs_antennas = m;
    c.ris_elements = n;
    c.users = k;
    c.delta = 1.5;
    c.epsilon.resize(k);
    c.alpha = std::vector<double>(k);
    c.gamma = std::vector<double>(k);
    c.p_w = std::vector<double>(k);
    for (std::size_t u = 0; u < k; ++u) {
        c.epsilon[u] = 0.5 + 1.25 * static_cast<double>(u);
        (*c.alpha)[u] = 0.8 + 0.3 * static_cast<double>(u);
        (*c.gamma)[u] = 0.4 + 0.2 * static_cast<double>(u);
        (*c.p_w)[u] = 1.0 + 0.5 * static_cast<double>(u);
    }
    c.beta = 0.9;
    c.sigma2_w = 0.7;
    return c;
}

inline riskit::Scenario small_scenario(std::size_t m, std::size_t n, std::size_t k, std::uint64_t seed = 7)
{
    return riskit::build_scenario(linear_config(m, n, k), seed);
}

inline riskit::ScenarioConfig reference_config()
{
    riskit::ScenarioConfig c;
    c.bs_antennas = 49;
    c.ris_elements = 49;
    c.users = 4;
    c.delta = 1.0;
    c.epsilon.assign(4, 10.0);
    c.p_dbm.assign(4, 30.0);
    c.sigma2_dbm = -104.0;
    c.d_ui = 20.0;
    c.d_ib = 1000.0;
    c.seed = 1;
    return c;
}

// 1-based index map: x = floor((n-1)/sqrt X), y = (n-1) mod sqrt X.
inline std::vector<cld> oracle_steering(std::size_t count, long double az, long double el, long double ratio)
{
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<long double>(count))));
    const long double two_pi = 2.0L * 3.141592653589793238462643383279502884L;
    std::vector<cld> a(count);
    for (std::size_t n = 1; n <= count; ++n) {
        const long double x = static_cast<long double>((n - 1) / side);
        const long double y = static_cast<long double>((n - 1) % side);
        const long double phase = two_pi * ratio * (x * std::sin(el) * std::sin(az) + y * std::cos(el));
        a[n - 1] = std::polar(1.0L, phase);
    }
    return a;
}

struct Oracle {
    long double m = 0, n = 0, delta = 0;
    std::vector<long double> eps, c, gamma, p;
    long double sigma2 = 0;
    std::vector<cld> f;                   // a_N^H Phi h_bar_k
    std::vector<std::vector<cld>> gram;   // h_bar_k^H h_bar_i

    long double signal(std::size_t k) const
    {
        const long double M = m, N = n, d = delta, e = eps[k], ck = c[k], g = gamma[k];
        const long double f2 = std::norm(f[k]);
        return M * M * ck * ck * d * d * e * e * f2 * f2 +
               2 * ck * M * d * e * f2 *
                   (ck * (2 * M * N * d + M * N * e + M * N + 2 * M + N * e + N + 2) + g * (M + 1)) +
               ck * ck * M * M * N * N * (2 * d * d + e * e + 2 * d * e + 2 * d + 2 * e + 1) +
               ck * ck * M * N * N * (e * e + 2 * d * e + 2 * d + 2 * e + 1) +
               ck * M * N * (M + 1) * (ck * (2 * d + 2 * e + 1) + 2 * g * (d + e + 1)) + g * g * (M * M + M);
    }

    long double interference(std::size_t k, std::size_t i) const
    {
        const long double M = m, N = n, d = delta;
        const long double ek = eps[k], ei = eps[i], ck = c[k], ci = c[i], gk = gamma[k], gi = gamma[i];
        const long double fk2 = std::norm(f[k]), fi2 = std::norm(f[i]);
        const long double cross = (std::conj(f[k]) * f[i] * gram[i][k]).real();
        return M * M * ck * ci * d * d * ek * ei * fk2 * fi2 +
               M * ck * d * ek * fk2 * (ci * (d * M * N + N * ei + N + 2 * M) + gi) +
               M * ci * d * ei * fi2 * (ck * (d * M * N + N * ek + N + 2 * M) + gk) +
               M * N * N * ck * ci * (M * d * d + d * (ei + ek + 2) + (ek + 1) * (ei + 1)) +
               M * M * N * ck * ci * (2 * d + ei + ek + 1) + M * M * ck * ci * ek * ei * std::norm(gram[k][i]) +
               2 * M * M * ck * ci * d * ek * ei * cross +
               M * (ci * gk * N * (d + ei + 1) + ck * gi * N * (d + ek + 1) + gi * gk);
    }

    long double noise(std::size_t k) const
    {
        return m * (c[k] * delta * eps[k] * std::norm(f[k]) + c[k] * (delta + eps[k] + 1) * n + gamma[k]);
    }

    long double rate(std::size_t k) const
    {
        long double den = sigma2 * noise(k);
        for (std::size_t i = 0; i < eps.size(); ++i)
            if (i != k)
                den += p[i] * interference(k, i);
        const long double num = p[k] * signal(k);
        if (num == 0.0L)
            return 0.0L;
        return std::log2(1.0L + num / den);
    }
};

inline Oracle make_oracle(const riskit::Scenario& s, const riskit::PhaseShifts& phases)
{
    Oracle o;
    const std::size_t K = s.dims.users, N = s.dims.ris_elements;
    o.m = static_cast<long double>(s.dims.bs_antennas);
    o.n = static_cast<long double>(N);
    o.delta = s.fading.ris_bs_rician;
    o.sigma2 = s.budget.noise_power_w;
    const long double ratio = s.budget.spacing_ratio;
    const auto at = oracle_steering(N, s.angles.ris_departure_azimuth, s.angles.ris_departure_elevation, ratio);
    std::vector<std::vector<cld>> hbar(K);
    for (std::size_t k = 0; k < K; ++k) {
        const long double e = s.fading.user_ris_rician[k];
        o.eps.push_back(e);
        o.c.push_back(static_cast<long double>(s.fading.ris_bs_loss) * s.fading.user_ris_loss[k] /
                      ((o.delta + 1) * (e + 1)));
        o.gamma.push_back(s.fading.direct_loss[k]);
        o.p.push_back(s.budget.tx_power_w[k]);
        hbar[k] = oracle_steering(N, s.angles.ris_arrival_azimuth[k], s.angles.ris_arrival_elevation[k], ratio);
        cld f = 0;
        for (std::size_t n = 0; n < N; ++n)
            f += std::conj(at[n]) * std::polar(1.0L, static_cast<long double>(phases[n])) * hbar[k][n];
        o.f.push_back(f);
    }
    o.gram.assign(K, std::vector<cld>(K));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t n = 0; n < N; ++n)
                o.gram[k][i] += std::conj(hbar[k][n]) * hbar[i][n];
    return o;
}

inline double rel_diff(double a, double b)
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace testing
