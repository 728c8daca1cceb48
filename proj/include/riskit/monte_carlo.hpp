// Monte Carlo ground truth for the closed forms: ergodic rates from sampled
// channels, the moment-ratio rate approximation, and every expectation the
// closed-form moments are assembled from.
//
// Trial t always draws from make_stream(seed, StreamTag::fading, t) and
// per-trial results are reduced in trial order, so estimates are
// bit-identical for any worker count.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskit/channel.hpp"
#include "riskit/scenario.hpp"

namespace riskit {

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t trials = 0;
};

// Welford accumulator with Chan's merge.
class RunningStats {
public:
    void add(double x);
    void merge(const RunningStats& other);

    std::size_t count() const { return count_; }
    double mean() const { return mean_; }
    double variance() const;  // unbiased, 0 for fewer than two samples
    McEstimate estimate() const;

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Joint mean and covariance of a pair of per-trial quantities.
class RunningCovariance {
public:
    void add(double a, double b);
    void merge(const RunningCovariance& other);

    std::size_t count() const { return count_; }
    double mean_a() const { return mean_a_; }
    double mean_b() const { return mean_b_; }
    double variance_a() const;
    double variance_b() const;
    double covariance() const;

private:
    std::size_t count_ = 0;
    double mean_a_ = 0.0;
    double mean_b_ = 0.0;
    double m2_a_ = 0.0;
    double m2_b_ = 0.0;
    double c_ab_ = 0.0;
};

// p_k ||u_k||^4 / (sum_{i != k} p_i |u_k^H u_i|^2 + sigma^2 ||u_k||^2) with
// u_k = g_k + d_k; an all-zero u_k gives 0.
double instantaneous_sinr(std::span<const Eigen::VectorXcd> combined, const Scenario& scenario,
                          std::size_t k);
double instantaneous_sinr(const ChannelRealization& realization, const PhaseShifts& phases,
                          const Scenario& scenario, std::size_t k);

// g_k + d_k for every user.
std::vector<Eigen::VectorXcd> combined_channels(const ChannelRealization& realization,
                                                const PhaseShifts& phases);

inline constexpr std::size_t kMinRateTrials = 100;
inline constexpr std::size_t kMinMomentTrials = 10'000;

McEstimate ergodic_rate_mc(const Scenario& scenario, const PhaseShifts& phases, std::size_t k,
                           std::size_t trials, std::uint64_t seed);
std::vector<McEstimate> ergodic_rates_mc(const Scenario& scenario, const PhaseShifts& phases,
                                         std::size_t trials, std::uint64_t seed);
// Per-trial sum over users of log2(1 + SINR_k).
McEstimate sum_rate_mc(const Scenario& scenario, const PhaseShifts& phases, std::size_t trials,
                       std::uint64_t seed);

// log2(1 + ratio of sample moments); std_error by the delta method.
McEstimate approx_rate_mc(const Scenario& scenario, const PhaseShifts& phases, std::size_t k,
                          std::size_t trials, std::uint64_t seed);
std::vector<McEstimate> approx_rates_mc(const Scenario& scenario, const PhaseShifts& phases,
                                        std::size_t trials, std::uint64_t seed);

struct MomentEntry {
    std::string name;
    std::size_t k = 0;                // 0-based
    std::optional<std::size_t> i;     // 0-based, pair entries only
    McEstimate estimate;
    double prediction = 0.0;
    double z_score = 0.0;
};

struct MomentReport {
    std::vector<MomentEntry> entries;

    const MomentEntry& find(const std::string& name, std::size_t k,
                            std::optional<std::size_t> i = std::nullopt) const;
    // Entries with |z| above the limit.
    std::vector<const MomentEntry*> flagged(double z_limit = 4.0) const;
};

struct MomentReportOptions {
    std::size_t trials = 200'000;
    std::uint64_t seed = 0;
    // Multiplies the fourth-moment closed forms before comparison. Fault
    // injection only; leave at 1 for real runs.
    double signal_scale = 1.0;
};

MomentReport moment_report(const Scenario& scenario, const PhaseShifts& phases,
                           const MomentReportOptions& options);

// name,k,i,estimate,std_error,closed_form_prediction,z_score with 1-based k, i.
void write_csv(const MomentReport& report, std::ostream& out);

struct RandomPhaseOptions {
    std::size_t phase_draws = 200;
    // 0: closed-form rate per draw. Otherwise a Monte Carlo ergodic rate with
    // this many fading trials per draw.
    std::size_t fading_trials = 0;
};

// Rate averaged over phase vectors drawn uniformly on [0, 2pi)^N.
McEstimate random_phase_rate(const Scenario& scenario, std::size_t k,
                             const RandomPhaseOptions& options, std::uint64_t seed);
McEstimate random_phase_sum_rate(const Scenario& scenario, const RandomPhaseOptions& options,
                                 std::uint64_t seed);
// Per-draw samples, for diagnostics.
std::vector<double> random_phase_samples(const Scenario& scenario, std::optional<std::size_t> k,
                                         const RandomPhaseOptions& options, std::uint64_t seed);

}  // namespace riskit
