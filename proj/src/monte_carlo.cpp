#include "riskit/monte_carlo.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "riskit/closed_form.hpp"
#include "riskit/parallel.hpp"
#include "riskit/random.hpp"

namespace riskit {

// ---------------------------------------------------------------------------
// Accumulators

void RunningStats::add(double x)
{
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other)
{
    if (other.count_ == 0)
        return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double n_a = static_cast<double>(count_);
    const double n_b = static_cast<double>(other.count_);
    const double n = n_a + n_b;
    const double delta = other.mean_ - mean_;
    mean_ += delta * n_b / n;
    m2_ += other.m2_ + delta * delta * n_a * n_b / n;
    count_ += other.count_;
}

double RunningStats::variance() const
{
    if (count_ < 2)
        return 0.0;
    return std::max(0.0, m2_ / static_cast<double>(count_ - 1));
}

McEstimate RunningStats::estimate() const
{
    McEstimate e;
    e.mean = mean_;
    e.trials = count_;
    e.std_error = count_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(count_));
    return e;
}

void RunningCovariance::add(double a, double b)
{
    ++count_;
    const double n = static_cast<double>(count_);
    const double da = a - mean_a_;
    const double db = b - mean_b_;
    mean_a_ += da / n;
    mean_b_ += db / n;
    m2_a_ += da * (a - mean_a_);
    m2_b_ += db * (b - mean_b_);
    c_ab_ += da * (b - mean_b_);
}

void RunningCovariance::merge(const RunningCovariance& other)
{
    if (other.count_ == 0)
        return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double n_a = static_cast<double>(count_);
    const double n_b = static_cast<double>(other.count_);
    const double n = n_a + n_b;
    const double da = other.mean_a_ - mean_a_;
    const double db = other.mean_b_ - mean_b_;
    mean_a_ += da * n_b / n;
    mean_b_ += db * n_b / n;
    m2_a_ += other.m2_a_ + da * da * n_a * n_b / n;
    m2_b_ += other.m2_b_ + db * db * n_a * n_b / n;
    c_ab_ += other.c_ab_ + da * db * n_a * n_b / n;
    count_ += other.count_;
}

double RunningCovariance::variance_a() const
{
    return count_ < 2 ? 0.0 : std::max(0.0, m2_a_ / static_cast<double>(count_ - 1));
}

double RunningCovariance::variance_b() const
{
    return count_ < 2 ? 0.0 : std::max(0.0, m2_b_ / static_cast<double>(count_ - 1));
}

double RunningCovariance::covariance() const
{
    return count_ < 2 ? 0.0 : c_ab_ / static_cast<double>(count_ - 1);
}

namespace {

constexpr std::size_t kBlockTrials = 256;

template <class Acc>
void merge_into(Acc& into, const Acc& from)
{
    for (std::size_t j = 0; j < into.size(); ++j)
        into[j].merge(from[j]);
}

// Runs `trial(t, rng, acc)` for t in [0, trials) in fixed-size blocks and
// merges the block accumulators in block order.
template <class Acc, class TrialFn>
Acc run_trials(std::size_t trials, std::uint64_t seed, const Acc& zero, TrialFn&& trial)
{
    const std::size_t blocks = (trials + kBlockTrials - 1) / kBlockTrials;
    std::vector<Acc> partial(blocks, zero);
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t end = std::min(trials, (b + 1) * kBlockTrials);
        for (std::size_t t = b * kBlockTrials; t < end; ++t) {
            Stream rng = make_stream(seed, StreamTag::fading, t);
            trial(t, rng, partial[b]);
        }
    });
    Acc total = zero;
    for (const Acc& p : partial)
        merge_into(total, p);
    return total;
}

void require_trials(std::size_t trials, std::size_t minimum)
{
    if (trials < minimum)
        throw std::invalid_argument(fmt::format("need at least {} trials, got {}", minimum, trials));
}

void require_phases(const Scenario& s, const PhaseShifts& phases)
{
    if (phases.size() != s.dims.ris_elements)
        throw ValidationError(fmt::format("phase vector has {} entries, RIS has {}", phases.size(),
                                          s.dims.ris_elements));
}

double combined_sinr_unchecked(std::span<const Eigen::VectorXcd> u, const Scenario& s, std::size_t k)
{
    const double norm2 = u[k].squaredNorm();
    if (norm2 == 0.0)
        return 0.0;
    double interference = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (i != k)
            interference += s.budget.tx_power_w[i] * std::norm(u[k].dot(u[i]));
    return s.budget.tx_power_w[k] * norm2 * norm2 /
           (interference + s.budget.noise_power_w * norm2);
}

double z_score(double estimate, double prediction, double std_error)
{
    const double diff = estimate - prediction;
    if (std_error > 0.0)
        return diff / std_error;
    const double scale = std::max(std::abs(prediction), std::numeric_limits<double>::min());
    if (std::abs(diff) <= 1e-12 * scale)
        return 0.0;
    return diff > 0 ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXcd> combined_channels(const ChannelRealization& r,
                                                const PhaseShifts& phases)
{
    std::vector<Eigen::VectorXcd> u = cascaded(r, phases);
    for (std::size_t k = 0; k < u.size(); ++k)
        u[k] += r.direct.at(k);
    return u;
}

double instantaneous_sinr(std::span<const Eigen::VectorXcd> combined, const Scenario& s,
                          std::size_t k)
{
    if (combined.size() != s.dims.users)
        throw ValidationError("need one combined channel per user");
    if (k >= combined.size())
        throw std::out_of_range("user index out of range");
    for (const auto& u : combined)
        if (static_cast<std::size_t>(u.size()) != s.dims.bs_antennas)
            throw ValidationError("combined channel length does not match the BS array");
    return combined_sinr_unchecked(combined, s, k);
}

double instantaneous_sinr(const ChannelRealization& r, const PhaseShifts& phases,
                          const Scenario& s, std::size_t k)
{
    const auto u = combined_channels(r, phases);
    return instantaneous_sinr(u, s, k);
}

// ---------------------------------------------------------------------------
// Ergodic rates

namespace {

// Per-user rate stats followed by the per-trial sum.
std::vector<RunningStats> rate_stats(const Scenario& s, const PhaseShifts& phases,
                                     std::size_t trials, std::uint64_t seed)
{
    validate(s);
    require_trials(trials, kMinRateTrials);
    require_phases(s, phases);
    const LosComponents los = los_components(s);
    const std::size_t users = s.dims.users;
    const std::vector<RunningStats> zero(users + 1);
    return run_trials(trials, seed, zero, [&](std::size_t, Stream& rng, std::vector<RunningStats>& acc) {
        const ChannelRealization r = sample_realization(s, los, rng);
        const auto u = combined_channels(r, phases);
        double total = 0.0;
        for (std::size_t k = 0; k < users; ++k) {
            const double rate = std::log2(1.0 + combined_sinr_unchecked(u, s, k));
            acc[k].add(rate);
            total += rate;
        }
        acc[users].add(total);
    });
}

}  // namespace

std::vector<McEstimate> ergodic_rates_mc(const Scenario& s, const PhaseShifts& phases,
                                         std::size_t trials, std::uint64_t seed)
{
    const auto stats = rate_stats(s, phases, trials, seed);
    std::vector<McEstimate> out;
    for (std::size_t k = 0; k < s.dims.users; ++k)
        out.push_back(stats[k].estimate());
    return out;
}

McEstimate ergodic_rate_mc(const Scenario& s, const PhaseShifts& phases, std::size_t k,
                           std::size_t trials, std::uint64_t seed)
{
    if (k >= s.dims.users)
        throw std::out_of_range("user index out of range");
    return ergodic_rates_mc(s, phases, trials, seed)[k];
}

McEstimate sum_rate_mc(const Scenario& s, const PhaseShifts& phases, std::size_t trials,
                       std::uint64_t seed)
{
    return rate_stats(s, phases, trials, seed).back().estimate();
}

std::vector<McEstimate> approx_rates_mc(const Scenario& s, const PhaseShifts& phases,
                                        std::size_t trials, std::uint64_t seed)
{
    validate(s);
    require_trials(trials, kMinRateTrials);
    require_phases(s, phases);
    const LosComponents los = los_components(s);
    const std::size_t users = s.dims.users;
    const auto& p = s.budget.tx_power_w;
    const double noise = s.budget.noise_power_w;

    // a = p_k ||u_k||^4, b = sum_i p_i |u_k^H u_i|^2 + sigma^2 ||u_k||^2
    const std::vector<RunningCovariance> zero(users);
    const auto acc = run_trials(trials, seed, zero,
                                [&](std::size_t, Stream& rng, std::vector<RunningCovariance>& cov) {
        const ChannelRealization r = sample_realization(s, los, rng);
        const auto u = combined_channels(r, phases);
        for (std::size_t k = 0; k < users; ++k) {
            const double norm2 = u[k].squaredNorm();
            double b = noise * norm2;
            for (std::size_t i = 0; i < users; ++i)
                if (i != k)
                    b += p[i] * std::norm(u[k].dot(u[i]));
            cov[k].add(p[k] * norm2 * norm2, b);
        }
    });

    std::vector<McEstimate> out(users);
    for (std::size_t k = 0; k < users; ++k) {
        const RunningCovariance& c = acc[k];
        const double a_bar = c.mean_a();
        const double b_bar = c.mean_b();
        McEstimate e;
        e.trials = c.count();
        if (b_bar == 0.0) {
            if (a_bar != 0.0)
                throw std::domain_error("moment ratio has a zero denominator");
            out[k] = e;
            continue;
        }
        const double ratio = a_bar / b_bar;
        e.mean = std::log2(1.0 + ratio);
        const double var_linear = c.variance_a() + ratio * ratio * c.variance_b() -
                                  2.0 * ratio * c.covariance();
        const double ratio_se =
            std::sqrt(std::max(0.0, var_linear) / static_cast<double>(c.count())) / b_bar;
        e.std_error = ratio_se / ((1.0 + ratio) * std::numbers::ln2);
        out[k] = e;
    }
    return out;
}

McEstimate approx_rate_mc(const Scenario& s, const PhaseShifts& phases, std::size_t k,
                          std::size_t trials, std::uint64_t seed)
{
    if (k >= s.dims.users)
        throw std::out_of_range("user index out of range");
    return approx_rates_mc(s, phases, trials, seed)[k];
}

// ---------------------------------------------------------------------------
// Moment report

namespace {

enum UserMoment : std::size_t {
    combined_second,
    combined_fourth,
    cascaded_second,
    cascaded_fourth,
    direct_second,
    direct_fourth,
    direct_cascaded_real_sq,
    cascaded_direct_product,
    user_moment_count,
};

enum PairMoment : std::size_t {
    combined_cross,
    cascaded_cross,
    direct_cascaded_cross,
    cascaded_direct_cross,
    direct_cross,
    pair_moment_count,
};

constexpr const char* kUserMomentNames[] = {
    "combined_second",  "combined_fourth", "cascaded_second",         "cascaded_fourth",
    "direct_second",    "direct_fourth",   "direct_cascaded_real_sq", "cascaded_direct_product",
};

constexpr const char* kPairMomentNames[] = {
    "combined_cross", "cascaded_cross", "direct_cascaded_cross", "cascaded_direct_cross",
    "direct_cross",
};

}  // namespace

const MomentEntry& MomentReport::find(const std::string& name, std::size_t k,
                                      std::optional<std::size_t> i) const
{
    for (const auto& e : entries)
        if (e.name == name && e.k == k && e.i == i)
            return e;
    throw std::out_of_range(fmt::format("no moment entry '{}' for k={}", name, k));
}

std::vector<const MomentEntry*> MomentReport::flagged(double z_limit) const
{
    std::vector<const MomentEntry*> out;
    for (const auto& e : entries)
        if (!(std::abs(e.z_score) <= z_limit))
            out.push_back(&e);
    return out;
}

MomentReport moment_report(const Scenario& s, const PhaseShifts& phases,
                           const MomentReportOptions& options)
{
    validate(s);
    require_trials(options.trials, kMinMomentTrials);
    require_phases(s, phases);
    const LosComponents los = los_components(s);
    const std::size_t users = s.dims.users;
    const std::size_t pair_slots = users * users;

    // Layout: users * user_moment_count, then (k * K + i) * pair_moment_count.
    const std::size_t user_block = users * user_moment_count;
    const std::vector<RunningStats> zero(user_block + pair_slots * pair_moment_count);

    const auto acc = run_trials(options.trials, options.seed, zero,
                                [&](std::size_t, Stream& rng, std::vector<RunningStats>& st) {
        const ChannelRealization r = sample_realization(s, los, rng);
        const auto g = cascaded(r, phases);
        const auto& d = r.direct;
        std::vector<Eigen::VectorXcd> u(users);
        for (std::size_t k = 0; k < users; ++k)
            u[k] = g[k] + d[k];

        for (std::size_t k = 0; k < users; ++k) {
            RunningStats* row = &st[k * user_moment_count];
            const double nu = u[k].squaredNorm();
            const double ng = g[k].squaredNorm();
            const double nd = d[k].squaredNorm();
            const double re = std::real(d[k].dot(g[k]));
            row[combined_second].add(nu);
            row[combined_fourth].add(nu * nu);
            row[cascaded_second].add(ng);
            row[cascaded_fourth].add(ng * ng);
            row[direct_second].add(nd);
            row[direct_fourth].add(nd * nd);
            row[direct_cascaded_real_sq].add(re * re);
            row[cascaded_direct_product].add(ng * nd);
        }
        for (std::size_t k = 0; k < users; ++k) {
            for (std::size_t i = 0; i < users; ++i) {
                if (i == k)
                    continue;
                RunningStats* row = &st[user_block + (k * users + i) * pair_moment_count];
                row[combined_cross].add(std::norm(u[k].dot(u[i])));
                row[cascaded_cross].add(std::norm(g[k].dot(g[i])));
                row[direct_cascaded_cross].add(std::norm(d[k].dot(g[i])));
                row[cascaded_direct_cross].add(std::norm(g[k].dot(d[i])));
                row[direct_cross].add(std::norm(d[k].dot(d[i])));
            }
        }
    });

    const StatisticalCsi csi = make_statistical_csi(s);
    const auto gains = array_gains(csi, phases);
    const double M = static_cast<double>(s.dims.bs_antennas);
    const auto& gamma = s.fading.direct_loss;
    std::vector<double> cascaded_power(users);
    std::vector<double> cascaded_fourth_power(users);
    for (std::size_t k = 0; k < users; ++k) {
        const CascadedMoments cm = cascaded_moments(csi, phases, k, k);
        cascaded_power[k] = cm.second;
        cascaded_fourth_power[k] = cm.fourth;
    }

    MomentReport report;
    auto push = [&](const char* name, std::size_t k, std::optional<std::size_t> i,
                    const RunningStats& stats, double prediction) {
        MomentEntry e;
        e.name = name;
        e.k = k;
        e.i = i;
        e.estimate = stats.estimate();
        e.prediction = prediction;
        e.z_score = z_score(e.estimate.mean, prediction, e.estimate.std_error);
        report.entries.push_back(std::move(e));
    };

    for (std::size_t k = 0; k < users; ++k) {
        const RunningStats* row = &acc[k * user_moment_count];
        const double eg = cascaded_power[k];
        const double predictions[user_moment_count] = {
            noise_term(csi, gains, k),
            options.signal_scale * signal_term(csi, gains, k),
            eg,
            options.signal_scale * cascaded_fourth_power[k],
            M * gamma[k],
            (M * M + M) * gamma[k] * gamma[k],
            0.5 * gamma[k] * eg,
            M * gamma[k] * eg,
        };
        for (std::size_t m = 0; m < user_moment_count; ++m)
            push(kUserMomentNames[m], k, std::nullopt, row[m], predictions[m]);
    }
    for (std::size_t k = 0; k < users; ++k) {
        for (std::size_t i = 0; i < users; ++i) {
            if (i == k)
                continue;
            const RunningStats* row = &acc[user_block + (k * users + i) * pair_moment_count];
            const double predictions[pair_moment_count] = {
                interference_term(csi, gains, k, i),
                cascaded_moments(csi, phases, k, i).cross,
                gamma[k] * cascaded_power[i],
                gamma[i] * cascaded_power[k],
                gamma[i] * gamma[k] * M,
            };
            for (std::size_t m = 0; m < pair_moment_count; ++m)
                push(kPairMomentNames[m], k, i, row[m], predictions[m]);
        }
    }
    return report;
}

void write_csv(const MomentReport& report, std::ostream& out)
{
    out << "name,k,i,estimate,std_error,closed_form_prediction,z_score\n";
    for (const auto& e : report.entries) {
        out << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.6f}\n", e.name, e.k + 1,
                           e.i ? fmt::format("{}", *e.i + 1) : std::string(), e.estimate.mean,
                           e.estimate.std_error, e.prediction, e.z_score);
    }
}

// ---------------------------------------------------------------------------
// Random phases

std::vector<double> random_phase_samples(const Scenario& s, std::optional<std::size_t> k,
                                         const RandomPhaseOptions& options, std::uint64_t seed)
{
    if (options.phase_draws < 10)
        throw std::invalid_argument("need at least 10 phase draws");
    if (k && *k >= s.dims.users)
        throw std::out_of_range("user index out of range");
    const StatisticalCsi csi = make_statistical_csi(s);
    std::vector<double> samples(options.phase_draws);
    auto evaluate = [&](std::size_t draw) {
        Stream rng = make_stream(seed, StreamTag::random_phase, draw);
        const PhaseShifts phases = PhaseShifts::random(s.dims.ris_elements, rng);
        if (options.fading_trials == 0) {
            samples[draw] = k ? ergodic_rate(csi, phases, *k) : sum_rate(csi, phases);
        } else {
            const std::uint64_t fading_seed = derive_seed(seed, StreamTag::fading, draw);
            samples[draw] = k ? ergodic_rate_mc(s, phases, *k, options.fading_trials, fading_seed).mean
                              : sum_rate_mc(s, phases, options.fading_trials, fading_seed).mean;
        }
    };
    if (options.fading_trials == 0) {
        parallel_for(options.phase_draws, evaluate);
    } else {
        // the inner Monte Carlo already parallelizes over trials
        for (std::size_t draw = 0; draw < options.phase_draws; ++draw)
            evaluate(draw);
    }
    return samples;
}

McEstimate random_phase_rate(const Scenario& s, std::size_t k, const RandomPhaseOptions& options,
                             std::uint64_t seed)
{
    RunningStats stats;
    for (double x : random_phase_samples(s, k, options, seed))
        stats.add(x);
    return stats.estimate();
}

McEstimate random_phase_sum_rate(const Scenario& s, const RandomPhaseOptions& options,
                                 std::uint64_t seed)
{
    RunningStats stats;
    for (double x : random_phase_samples(s, std::nullopt, options, seed))
        stats.add(x);
    return stats.estimate();
}

}  // namespace riskit
