#include "riskit/ga_opt.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "riskit/parallel.hpp"

namespace riskit {

std::size_t GaConfig::generation_budget(std::size_t ris_elements) const
{
    return max_generations == 0 ? 100 * ris_elements : max_generations;
}

void GaConfig::validate() const
{
    if (population == 0)
        throw ValidationError("GA population must be positive");
    if (elites + culled + crossover_offspring != population)
        throw ValidationError(fmt::format("elites ({}) + culled ({}) + crossover offspring ({}) must equal "
                                          "the population ({})",
                                          elites, culled, crossover_offspring, population));
    if (parents % 2 != 0)
        throw ValidationError("GA parent count must be even");
    if (parents / 2 != crossover_offspring)
        throw ValidationError("GA needs one crossover child per parent pair");
    if (crossover_offspring > 0 && elites + culled >= population)
        throw ValidationError("GA has no individuals left to select parents from");
    if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0))
        throw ValidationError("mutation probability must lie in [0, 1]");
    if (stagnation_window && *stagnation_window == 0)
        throw ValidationError("stagnation window must be positive");
}

void evaluate_population(std::vector<Individual>& population, const StatisticalCsi& csi)
{
    parallel_for(population.size(), [&](std::size_t t) {
        Individual& ind = population[t];
        if (!ind.evaluated) {
            ind.fitness = sum_rate(csi, ind.chromosome);
            ind.evaluated = true;
        }
    });
}

GaState init_population(const StatisticalCsi& csi, const GaConfig& config, std::uint64_t seed)
{
    config.validate();
    Stream rng = make_stream(seed, StreamTag::ga_init);
    GaState state;
    state.population.resize(config.population);
    for (Individual& ind : state.population)
        ind.chromosome = PhaseShifts::random(csi.ris_elements, rng);
    evaluate_population(state.population, csi);
    return state;
}

std::vector<std::size_t> sus_select(std::span<const double> fitness, std::size_t count, Stream& rng)
{
    if (fitness.empty())
        throw std::invalid_argument("cannot select from an empty population");
    for (double f : fitness)
        if (!(f >= 0.0))
            throw std::invalid_argument("SUS needs non-negative fitness");
    std::vector<std::size_t> chosen;
    chosen.reserve(count);
    if (count == 0)
        return chosen;

    double total = std::accumulate(fitness.begin(), fitness.end(), 0.0);
    const bool uniform = !(total > 0.0);
    if (uniform)
        total = static_cast<double>(fitness.size());
    auto weight = [&](std::size_t t) { return uniform ? 1.0 : fitness[t]; };

    const double spacing = total / static_cast<double>(count);
    const double offset = uniform_unit(rng) * spacing;
    std::size_t t = 0;
    double cumulative = weight(0);
    for (std::size_t p = 0; p < count; ++p) {
        const double pointer = offset + static_cast<double>(p) * spacing;
        while (pointer >= cumulative && t + 1 < fitness.size())
            cumulative += weight(++t);
        chosen.push_back(t);
    }
    return chosen;
}

PhaseShifts two_point_crossover(const PhaseShifts& a, const PhaseShifts& b, std::size_t u,
                                std::size_t v)
{
    if (a.size() != b.size())
        throw ValidationError("crossover parents differ in length");
    if (u > v || v > a.size())
        throw std::out_of_range("crossover cut points out of range");
    std::vector<double> child(a.values().begin(), a.values().end());
    for (std::size_t n = u; n < v; ++n)
        child[n] = b[n];
    return PhaseShifts(std::move(child));
}

PhaseShifts two_point_crossover(const PhaseShifts& a, const PhaseShifts& b, Stream& rng)
{
    if (a.size() != b.size())
        throw ValidationError("crossover parents differ in length");
    const std::size_t n = a.size();
    if (n < 2)
        return a;
    if (n == 2)
        return two_point_crossover(a, b, 1, 2);
    // uniform over pairs 1 <= u < v <= n - 1
    const std::size_t cuts = n - 1;
    const std::size_t pairs = cuts * (cuts - 1) / 2;
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, pairs - 1)(rng);
    std::size_t u = 1;
    while (pick >= cuts - u) {
        pick -= cuts - u;
        ++u;
    }
    const std::size_t v = u + 1 + pick;
    return two_point_crossover(a, b, u, v);
}

PhaseShifts uniform_mutation(const PhaseShifts& chromosome, double prob, Stream& rng)
{
    if (!(prob >= 0.0 && prob <= 1.0))
        throw std::invalid_argument("mutation probability must lie in [0, 1]");
    std::vector<double> genes(chromosome.values().begin(), chromosome.values().end());
    for (double& g : genes)
        if (uniform_unit(rng) < prob)
            g = uniform_angle(rng);
    return PhaseShifts(std::move(genes));
}

std::vector<std::size_t> fitness_order(const std::vector<Individual>& population)
{
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return population[x].fitness > population[y].fitness;
    });
    return order;
}

GaState evolve_generation(const GaState& state, const StatisticalCsi& csi, const GaConfig& config,
                          Stream& rng)
{
    config.validate();
    if (state.population.size() != config.population)
        throw ValidationError("population size does not match the GA config");
    for (const Individual& ind : state.population)
        if (!ind.evaluated)
            throw ValidationError("population contains unevaluated individuals");

    const std::vector<std::size_t> order = fitness_order(state.population);
    const std::size_t middle_end = config.population - config.culled;

    GaState next;
    next.generation = state.generation + 1;
    next.population.reserve(config.population);

    for (std::size_t r = 0; r < config.elites; ++r)
        next.population.push_back(state.population[order[r]]);

    // RNG order: mutations (rank order), SUS offset, crossover cuts (pair order).
    for (std::size_t r = middle_end; r < config.population; ++r) {
        Individual mutant;
        mutant.chromosome = uniform_mutation(state.population[order[r]].chromosome,
                                             config.mutation_prob, rng);
        next.population.push_back(std::move(mutant));
    }

    if (config.crossover_offspring > 0) {
        std::vector<double> middle_fitness;
        middle_fitness.reserve(middle_end - config.elites);
        for (std::size_t r = config.elites; r < middle_end; ++r)
            middle_fitness.push_back(state.population[order[r]].fitness);
        const std::vector<std::size_t> parents = sus_select(middle_fitness, config.parents, rng);
        for (std::size_t p = 0; p + 1 < parents.size(); p += 2) {
            const Individual& a = state.population[order[config.elites + parents[p]]];
            const Individual& b = state.population[order[config.elites + parents[p + 1]]];
            Individual child;
            child.chromosome = two_point_crossover(a.chromosome, b.chromosome, rng);
            next.population.push_back(std::move(child));
        }
    }

    evaluate_population(next.population, csi);
    return next;
}

namespace {

GenerationStats summarize(const GaState& state)
{
    GenerationStats g;
    g.generation = state.generation;
    g.best_fitness = state.population.front().fitness;
    double total = 0.0;
    for (const Individual& ind : state.population) {
        g.best_fitness = std::max(g.best_fitness, ind.fitness);
        total += ind.fitness;
    }
    g.mean_fitness = total / static_cast<double>(state.population.size());
    return g;
}

const Individual& best_of(const GaState& state)
{
    return state.population[fitness_order(state.population).front()];
}

}  // namespace

GaResult run_ga(const StatisticalCsi& csi, const GaConfig& config, std::uint64_t seed)
{
    config.validate();
    const std::size_t budget = config.generation_budget(csi.ris_elements);

    GaResult result;
    GaState state = init_population(csi, config, seed);
    result.trace.generations.push_back(summarize(state));
    if (config.snapshot_every > 0)
        result.trace.snapshots.emplace_back(0, best_of(state).chromosome);

    double incumbent = result.trace.generations.back().best_fitness;
    std::size_t since_improvement = 0;
    for (std::size_t gen = 1; gen <= budget; ++gen) {
        Stream rng = make_stream(seed, StreamTag::ga_generation, gen);
        state = evolve_generation(state, csi, config, rng);
        const GenerationStats stats = summarize(state);
        result.trace.generations.push_back(stats);
        if (config.snapshot_every > 0 && gen % config.snapshot_every == 0)
            result.trace.snapshots.emplace_back(gen, best_of(state).chromosome);

        if (stats.best_fitness > incumbent) {
            incumbent = stats.best_fitness;
            since_improvement = 0;
        } else if (config.stagnation_window && ++since_improvement >= *config.stagnation_window) {
            break;
        }
    }

    const Individual& best = best_of(state);
    result.best = best.chromosome;
    result.best_fitness = best.fitness;
    return result;
}

void write_trace_csv(const GaTrace& trace, std::ostream& out)
{
    out << "generation,best_fitness,mean_fitness\n";
    for (const auto& g : trace.generations)
        out << fmt::format("{},{:.17g},{:.17g}\n", g.generation, g.best_fitness, g.mean_fitness);
}

}  // namespace riskit
