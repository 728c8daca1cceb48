// Closed-form ergodic-rate evaluation from statistical CSI only.
//
// The per-user signal, interference and noise terms are the exact moments
// E{||g_k + d_k||^4}, E{|(g_k + d_k)^H (g_i + d_i)|^2} and E{||g_k + d_k||^2}
// of the MRC receiver, expressed through path losses, Rician factors and the
// array gains f_k(Phi). The rate is log2(1 + moment ratio). No channel draws
// are involved.

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "riskit/channel.hpp"
#include "riskit/scenario.hpp"

namespace riskit {

// Everything the closed forms read, precomputed from a Scenario. Fields are
// public so substitution studies (c_k = 0, delta = epsilon = 0, ...) can edit
// a copy directly.
struct StatisticalCsi {
    std::size_t bs_antennas = 0;
    std::size_t ris_elements = 0;
    std::size_t users = 0;
    double delta = 0.0;
    std::vector<double> epsilon;
    std::vector<double> user_ris_loss;    // alpha_k
    std::vector<double> composite_loss;   // c_k = beta alpha_k / ((delta+1)(epsilon_k+1))
    std::vector<double> direct_loss;      // gamma_k
    std::vector<double> tx_power_w;
    double noise_power_w = 0.0;
    std::vector<double> phase_offset;     // zeta_n^k at [k * N + n]
    std::vector<std::complex<double>> los_gram;  // h_bar_k^H h_bar_i at [k * K + i]

    double zeta(std::size_t n, std::size_t k) const { return phase_offset[k * ris_elements + n]; }
    std::complex<double> gram(std::size_t k, std::size_t i) const { return los_gram[k * users + i]; }
};

StatisticalCsi make_statistical_csi(const Scenario& scenario);

double composite_loss(const Scenario& scenario, std::size_t k);

// zeta_n^k for 0-based element n and user k.
double phase_offset(const Scenario& scenario, std::size_t n, std::size_t k);

// f_k(Phi) = sum_n exp(j (zeta_n^k + theta_n)).
std::complex<double> array_gain(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k);
std::vector<std::complex<double>> array_gains(const StatisticalCsi& csi, const PhaseShifts& phases);

// Term evaluations from precomputed array gains (one entry per user).
double signal_term(const StatisticalCsi& csi, std::span<const std::complex<double>> gains,
                   std::size_t k);
double interference_term(const StatisticalCsi& csi, std::span<const std::complex<double>> gains,
                         std::size_t k, std::size_t i);
double noise_term(const StatisticalCsi& csi, std::span<const std::complex<double>> gains,
                  std::size_t k);

double signal_term(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k);
double interference_term(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k,
                         std::size_t i);
double noise_term(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k);

// SINR kept as numerator / denominator so tiny path losses never underflow
// before the division.
struct SinrFraction {
    long double numerator = 0.0L;
    long double denominator = 0.0L;

    // 0/0 evaluates to 0; x/0 with x > 0 throws std::domain_error.
    double value() const;
    double rate() const;  // log2(1 + value())
};

struct RateBreakdown {
    std::vector<double> signal;
    std::vector<double> interference;  // I_ki at [k * K + i], zero on the diagonal
    std::vector<double> noise;
    std::vector<double> sinr;
    std::vector<double> rate;
    double sum_rate = 0.0;

    double interference_at(std::size_t k, std::size_t i) const { return interference[k * signal.size() + i]; }
};

SinrFraction sinr_fraction(const StatisticalCsi& csi, std::span<const std::complex<double>> gains,
                           std::size_t k);

RateBreakdown rate_breakdown(const StatisticalCsi& csi, const PhaseShifts& phases);

double ergodic_rate(const StatisticalCsi& csi, const PhaseShifts& phases, std::size_t k);
double sum_rate(const StatisticalCsi& csi, const PhaseShifts& phases);
double ergodic_rate(const Scenario& scenario, const PhaseShifts& phases, std::size_t k);
double sum_rate(const Scenario& scenario, const PhaseShifts& phases);

// Phases aligning every element with user k's LoS path (theta_n = -zeta_n^k), |f_k| = N.
PhaseShifts aligned_phases(const StatisticalCsi& csi, std::size_t k);

// Rate without an RIS (cascaded links removed).
SinrFraction sinr_no_ris(const StatisticalCsi& csi, std::size_t k);
double rate_no_ris(const StatisticalCsi& csi, std::size_t k);
double sum_rate_no_ris(const StatisticalCsi& csi);

// Pure-NLoS cascaded links (delta = epsilon_k = 0). Evaluates the reduced
// formula with the csi's c_k and gamma_k regardless of its Rician factors.
SinrFraction sinr_nlos_fraction(const StatisticalCsi& csi, std::size_t k);
double sinr_nlos(const StatisticalCsi& csi, std::size_t k);

// Large-N limit with per-block random phases. Requires K >= 2.
double sinr_random_limit(const StatisticalCsi& csi, std::size_t k);

// Two co-located users with identical c, gamma, p.
struct SymmetricPair {
    std::size_t bs_antennas = 0;
    std::size_t ris_elements = 0;
    double composite_loss = 0.0;  // c
    double direct_loss = 0.0;     // gamma
    double snr = 0.0;             // p / sigma^2, linear
    double delta = 0.0;
};

struct NlosCrossover {
    double snr_threshold = 0.0;      // RIS wins when p/sigma^2 is below this
    double element_threshold = 0.0;  // RIS wins when N is above this
};

NlosCrossover nlos_crossover(const SymmetricPair& pair);

// Threshold on gamma p / sigma^2 below which random-phase RIS beats no RIS (N -> inf).
double random_crossover(const SymmetricPair& pair);

struct CascadedMoments {
    double second = 0.0;        // E{||g_k||^2}
    double fourth = 0.0;        // E{||g_k||^4}
    double cross = 0.0;         // E{|g_k^H g_i|^2}, 0 when i == k
};

// Moments of the cascaded channel alone (direct links forced to zero).
CascadedMoments cascaded_moments(const StatisticalCsi& csi, const PhaseShifts& phases,
                                 std::size_t k, std::size_t i);

}  // namespace riskit
