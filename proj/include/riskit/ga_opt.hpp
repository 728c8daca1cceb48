// Genetic-algorithm phase design on the closed-form sum rate.
//
// Each generation: rank by fitness, keep the elites, mutate the culled tail
// into new offspring, and refill the rest by stochastic-universal-sampling
// parent selection followed by two-point crossover.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "riskit/channel.hpp"
#include "riskit/closed_form.hpp"
#include "riskit/random.hpp"

namespace riskit {

struct GaConfig {
    std::size_t population = 200;
    std::size_t elites = 10;
    std::size_t culled = 40;
    std::size_t parents = 300;
    std::size_t crossover_offspring = 150;
    double mutation_prob = 0.1;
    // 0 means 100 * N.
    std::size_t max_generations = 0;
    // Stop after this many generations without a strict improvement of the best fitness.
    std::optional<std::size_t> stagnation_window;
    // Record the best chromosome every this many generations (0 = never).
    std::size_t snapshot_every = 0;

    std::size_t generation_budget(std::size_t ris_elements) const;
    void validate() const;
};

struct Individual {
    PhaseShifts chromosome;
    double fitness = 0.0;
    bool evaluated = false;
};

struct GaState {
    std::vector<Individual> population;
    std::size_t generation = 0;
};

struct GenerationStats {
    std::size_t generation = 0;
    double best_fitness = 0.0;
    double mean_fitness = 0.0;
};

struct GaTrace {
    std::vector<GenerationStats> generations;
    std::vector<std::pair<std::size_t, PhaseShifts>> snapshots;
};

struct GaResult {
    PhaseShifts best;
    double best_fitness = 0.0;
    GaTrace trace;
};

GaState init_population(const StatisticalCsi& csi, const GaConfig& config, std::uint64_t seed);

// Indices into `fitness`, `count` pointers spaced total/count apart from a
// single random offset. All-zero fitness falls back to equal weights.
std::vector<std::size_t> sus_select(std::span<const double> fitness, std::size_t count, Stream& rng);

// a[0..u) ++ b[u..v) ++ a[v..N) with 1 <= u < v <= N-1 (for N = 2 the
// second cut sits at the end). N = 1 returns a copy of a.
PhaseShifts two_point_crossover(const PhaseShifts& a, const PhaseShifts& b, Stream& rng);

// Same as above with explicit cuts, for tests.
PhaseShifts two_point_crossover(const PhaseShifts& a, const PhaseShifts& b, std::size_t u,
                                std::size_t v);

PhaseShifts uniform_mutation(const PhaseShifts& chromosome, double prob, Stream& rng);

// Evaluates every individual whose fitness is not yet known.
void evaluate_population(std::vector<Individual>& population, const StatisticalCsi& csi);

// Individuals ordered by fitness, best first; ties keep the lower index first.
std::vector<std::size_t> fitness_order(const std::vector<Individual>& population);

GaState evolve_generation(const GaState& state, const StatisticalCsi& csi, const GaConfig& config,
                          Stream& rng);

GaResult run_ga(const StatisticalCsi& csi, const GaConfig& config, std::uint64_t seed);

// generation,best_fitness,mean_fitness
void write_trace_csv(const GaTrace& trace, std::ostream& out);

}  // namespace riskit
