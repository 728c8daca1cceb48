// Experiment driver behind the ris_kit executable.
//
//   ris_kit [--config P] [--seed S] [--out P] [--csv] [--trials N] <command> ...
//
// Commands: rate, validate, optimize, sweep, random-baseline. Exit codes:
// 0 success, 1 validation failure (flagged moments), 2 config or usage error.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "riskit/channel.hpp"
#include "riskit/scenario.hpp"

namespace riskit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

// Default scenario: M = N = 49, K = 4, delta = 1, epsilon = 10,
// p = 30 dBm, sigma^2 = -104 dBm, d_ui = 20 m, d_ib = 1000 m.
ScenarioConfig default_config();

// "zeros", "aligned:k" (1-based user), "random:seed" or "file:path".
PhaseShifts resolve_phases(const std::string& source, const Scenario& scenario);

// CSV with header n,theta (n 1-based).
void write_phases_csv(const PhaseShifts& phases, std::ostream& out);
PhaseShifts read_phases_csv(const std::string& path);

enum class SweepVariable { transmit_power_dbm, M, N, d_ib };

struct SweepModes {
    bool optimal_ga = false;
    bool random_phase = false;
    bool no_ris = false;
    bool mc_check = false;
};

struct SweepSpec {
    SweepVariable variable = SweepVariable::transmit_power_dbm;
    std::vector<double> values;
    SweepModes modes;
    // With variable M or N: set both M and N to each value.
    bool joint_mn = false;
    std::size_t ga_generations_per_element = 20;
    std::size_t random_draws = 200;
    std::size_t mc_trials = 10'000;
    std::optional<ScenarioConfig> base;
};

struct ResultRow {
    double value = 0.0;
    std::uint64_t seed = 0;
    std::optional<double> optimal_ga;
    std::optional<double> random_phase;
    std::optional<double> random_phase_std_error;
    std::optional<double> no_ris;
    std::optional<double> mc_sum_rate;
    std::optional<double> mc_std_error;
    double wall_seconds = 0.0;
};

// Fills the default grid and modes when absent; checks ordering and squares.
SweepSpec parse_sweep_spec(const nlohmann::json& doc);
std::string to_string(SweepVariable variable);

std::vector<ResultRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& base, std::uint64_t seed);

// variable,value,seed,optimal_ga,random_phase,random_phase_std_error,no_ris,mc_sum_rate,mc_std_error
void write_sweep_csv(const SweepSpec& spec, const std::vector<ResultRow>& rows, std::ostream& out);

// args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace riskit
