#include "riskit/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <memory>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "riskit/closed_form.hpp"
#include "riskit/ga_opt.hpp"
#include "riskit/monte_carlo.hpp"
#include "riskit/parallel.hpp"
#include "riskit/random.hpp"

namespace riskit {

using nlohmann::json;

ScenarioConfig default_config()
{
    ScenarioConfig c;
    c.bs_antennas = 49;
    c.ris_elements = 49;
    c.users = 4;
    c.delta = 1.0;
    c.epsilon.assign(c.users, 10.0);
    c.p_dbm.assign(c.users, 30.0);
    c.sigma2_dbm = -104.0;
    c.d_ui = 20.0;
    c.d_ib = 1000.0;
    c.spacing_ratio = 0.5;
    c.seed = 1;
    return c;
}

namespace {

std::uint64_t parse_u64(const std::string& text, const std::string& what)
{
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        if (text.empty() || text.front() == '-')
            throw std::invalid_argument(text);
        v = std::stoull(text, &pos);
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", what, text));
    }
    if (pos != text.size())
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", what, text));
    return v;
}

double parse_double(const std::string& text, const std::string& what)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", what, text));
    }
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\r' || text[pos] == '\t'))
        ++pos;
    if (pos != text.size())
        throw ConfigError(fmt::format("{}: '{}' is not a number", what, text));
    return v;
}

std::string cell(const std::optional<double>& v)
{
    return v ? fmt::format("{:.17g}", *v) : std::string();
}

}  // namespace

PhaseShifts resolve_phases(const std::string& source, const Scenario& scenario)
{
    const std::size_t n = scenario.dims.ris_elements;
    const auto colon = source.find(':');
    const std::string kind = source.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : source.substr(colon + 1);

    if (kind == "zeros" && colon == std::string::npos)
        return PhaseShifts::zeros(n);
    if (kind == "random") {
        const std::uint64_t seed = arg.empty() ? scenario.seed : parse_u64(arg, "phases random seed");
        Stream rng = make_stream(seed, StreamTag::phases);
        return PhaseShifts::random(n, rng);
    }
    if (kind == "aligned") {
        const std::uint64_t k = parse_u64(arg, "phases aligned user");
        if (k < 1 || k > scenario.dims.users)
            throw ConfigError(fmt::format("phases aligned user {} outside 1..{}", k, scenario.dims.users));
        return aligned_phases(make_statistical_csi(scenario), k - 1);
    }
    if (kind == "file" && !arg.empty()) {
        PhaseShifts phases = read_phases_csv(arg);
        if (phases.size() != n)
            throw ConfigError(fmt::format("phase file '{}' has {} entries, scenario has N = {}", arg,
                                          phases.size(), n));
        return phases;
    }
    throw ConfigError(fmt::format("unknown phase source '{}' (zeros, aligned:k, random[:seed], file:path)",
                                  source));
}

void write_phases_csv(const PhaseShifts& phases, std::ostream& out)
{
    out << "n,theta\n";
    for (std::size_t n = 0; n < phases.size(); ++n)
        out << fmt::format("{},{:.17g}\n", n + 1, phases[n]);
}

PhaseShifts read_phases_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot open phase file '{}'", path));
    std::vector<double> theta;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (first && line.rfind("n,", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        const auto comma = line.find(',');
        const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
        theta.push_back(parse_double(field, fmt::format("phase file '{}'", path)));
    }
    if (theta.empty())
        throw ConfigError(fmt::format("phase file '{}' is empty", path));
    return PhaseShifts(std::move(theta));
}

std::string to_string(SweepVariable variable)
{
    switch (variable) {
    case SweepVariable::transmit_power_dbm:
        return "transmit_power_dbm";
    case SweepVariable::M:
        return "M";
    case SweepVariable::N:
        return "N";
    case SweepVariable::d_ib:
        return "d_ib";
    }
    return "?";
}

SweepSpec parse_sweep_spec(const json& doc)
{
    auto fail = [](const std::string& key, const std::string& what) -> void {
        throw ConfigError(fmt::format("sweep key '{}': {}", key, what));
    };
    if (!doc.is_object())
        throw ConfigError("sweep spec root must be an object");
    static const char* known[] = {"variable", "values", "modes", "joint_mn", "ga_generations_per_element",
                                  "random_draws", "mc_trials", "base"};
    for (const auto& [key, value] : doc.items())
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            fail(key, "unknown key");

    auto count_at = [&](const char* key, std::size_t& target) {
        if (!doc.contains(key))
            return;
        const json& v = doc.at(key);
        if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
            fail(key, "expected a positive integer");
        target = v.get<std::size_t>();
    };

    SweepSpec spec;
    if (doc.contains("variable")) {
        const json& v = doc.at("variable");
        if (!v.is_string())
            fail("variable", "expected a string");
        const std::string name = v.get<std::string>();
        if (name == "transmit_power_dbm")
            spec.variable = SweepVariable::transmit_power_dbm;
        else if (name == "M")
            spec.variable = SweepVariable::M;
        else if (name == "N")
            spec.variable = SweepVariable::N;
        else if (name == "d_ib")
            spec.variable = SweepVariable::d_ib;
        else
            fail("variable", fmt::format("'{}' is not one of transmit_power_dbm, M, N, d_ib", name));
    }
    if (doc.contains("joint_mn")) {
        if (!doc.at("joint_mn").is_boolean())
            fail("joint_mn", "expected a boolean");
        spec.joint_mn = doc.at("joint_mn").get<bool>();
    }
    count_at("ga_generations_per_element", spec.ga_generations_per_element);
    count_at("random_draws", spec.random_draws);
    count_at("mc_trials", spec.mc_trials);

    if (doc.contains("values")) {
        const json& v = doc.at("values");
        if (!v.is_array())
            fail("values", "expected an array of numbers");
        for (const json& x : v) {
            if (!x.is_number())
                fail("values", "entries must be numbers");
            spec.values.push_back(x.get<double>());
        }
        if (spec.values.empty())
            fail("values", "must not be empty");
    } else {
        switch (spec.variable) {
        case SweepVariable::transmit_power_dbm:
            for (int p = 0; p <= 50; p += 5)
                spec.values.push_back(p);
            break;
        case SweepVariable::M:
        case SweepVariable::N:
            spec.values = {16, 36, 49, 64, 100};
            break;
        case SweepVariable::d_ib:
            spec.values = {100, 300, 500, 700, 1000};
            break;
        }
    }
    for (std::size_t j = 1; j < spec.values.size(); ++j)
        if (!(spec.values[j] > spec.values[j - 1]))
            fail("values", "must be strictly increasing");
    for (double x : spec.values) {
        if (!std::isfinite(x))
            fail("values", "entries must be finite");
        if (spec.variable == SweepVariable::M || spec.variable == SweepVariable::N) {
            if (!(x >= 1.0) || x != std::floor(x) || !is_perfect_square(static_cast<std::size_t>(x)))
                fail("values", fmt::format("{} is not a perfect square", x));
        }
        if (spec.variable == SweepVariable::d_ib && !(x > 0.0))
            fail("values", "distances must be positive");
    }

    if (doc.contains("modes")) {
        const json& v = doc.at("modes");
        if (!v.is_array() || v.empty())
            fail("modes", "expected a nonempty array of strings");
        for (const json& m : v) {
            const std::string name = m.is_string() ? m.get<std::string>() : std::string();
            if (name == "optimal_ga")
                spec.modes.optimal_ga = true;
            else if (name == "random_phase")
                spec.modes.random_phase = true;
            else if (name == "no_ris")
                spec.modes.no_ris = true;
            else if (name == "mc_check")
                spec.modes.mc_check = true;
            else
                fail("modes", fmt::format("'{}' is not one of optimal_ga, random_phase, no_ris, mc_check",
                                          m.dump()));
        }
    } else {
        spec.modes = {true, true, true, false};
    }

    if (doc.contains("base"))
        spec.base = parse_config(doc.at("base"));
    return spec;
}

namespace {

ScenarioConfig point_config(const SweepSpec& spec, const ScenarioConfig& base, double value)
{
    ScenarioConfig c = base;
    switch (spec.variable) {
    case SweepVariable::transmit_power_dbm:
        c.p_dbm.assign(c.users, value);
        c.p_w.reset();
        break;
    case SweepVariable::M:
        c.bs_antennas = static_cast<std::size_t>(value);
        if (spec.joint_mn)
            c.ris_elements = c.bs_antennas;
        break;
    case SweepVariable::N:
        c.ris_elements = static_cast<std::size_t>(value);
        if (spec.joint_mn)
            c.bs_antennas = c.ris_elements;
        break;
    case SweepVariable::d_ib:
        if (!c.d_ui)
            throw ValidationError("a d_ib sweep needs a geometric base config (d_ui and d_ib)");
        c.d_ib = value;
        c.geometry_meta.reset();
        break;
    }
    return c;
}

}  // namespace

std::vector<ResultRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& base, std::uint64_t seed)
{
    // Build every scenario first so a bad point fails before any run.
    std::vector<Scenario> scenarios;
    scenarios.reserve(spec.values.size());
    for (double v : spec.values)
        scenarios.push_back(build_scenario(point_config(spec, base, v), seed));

    std::vector<ResultRow> rows(spec.values.size());
    parallel_for(rows.size(), [&](std::size_t j) {
        const auto start = std::chrono::steady_clock::now();
        const Scenario& s = scenarios[j];
        const StatisticalCsi csi = make_statistical_csi(s);
        ResultRow& row = rows[j];
        row.value = spec.values[j];
        row.seed = derive_seed(seed, StreamTag::sweep_point, j);

        std::optional<PhaseShifts> best;
        if (spec.modes.optimal_ga) {
            GaConfig ga;
            ga.max_generations = spec.ga_generations_per_element * s.dims.ris_elements;
            GaResult result = run_ga(csi, ga, row.seed);
            row.optimal_ga = result.best_fitness;
            best = std::move(result.best);
        }
        if (spec.modes.random_phase) {
            RandomPhaseOptions opts;
            opts.phase_draws = spec.random_draws;
            const McEstimate e = random_phase_sum_rate(s, opts, row.seed);
            row.random_phase = e.mean;
            row.random_phase_std_error = e.std_error;
        }
        if (spec.modes.no_ris)
            row.no_ris = sum_rate_no_ris(csi);
        if (spec.modes.mc_check) {
            PhaseShifts phases;
            if (best) {
                phases = *best;
            } else {
                Stream rng = make_stream(row.seed, StreamTag::phases);
                phases = PhaseShifts::random(s.dims.ris_elements, rng);
            }
            const McEstimate e = sum_rate_mc(s, phases, spec.mc_trials, row.seed);
            row.mc_sum_rate = e.mean;
            row.mc_std_error = e.std_error;
        }
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    return rows;
}

void write_sweep_csv(const SweepSpec& spec, const std::vector<ResultRow>& rows, std::ostream& out)
{
    out << "variable,value,seed,optimal_ga,random_phase,random_phase_std_error,no_ris,mc_sum_rate,"
           "mc_std_error\n";
    const std::string variable = spec.joint_mn && (spec.variable == SweepVariable::M ||
                                                   spec.variable == SweepVariable::N)
                                     ? "MN"
                                     : to_string(spec.variable);
    for (const ResultRow& r : rows)
        out << fmt::format("{},{:.17g},{},{},{},{},{},{},{}\n", variable, r.value, r.seed, cell(r.optimal_ga),
                           cell(r.random_phase), cell(r.random_phase_std_error), cell(r.no_ris),
                           cell(r.mc_sum_rate), cell(r.mc_std_error));
}

namespace {

struct Globals {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    bool csv = false;
    std::size_t trials = 0;
    bool trials_given = false;
};

ScenarioConfig base_config(const Globals& g)
{
    return g.config.empty() ? default_config() : load_config(g.config);
}

std::uint64_t effective_seed(const Globals& g, const ScenarioConfig& c)
{
    return g.seed_given ? g.seed : c.seed.value_or(1);
}

// Primary output goes to --out when given, otherwise to the command stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_)
                throw ConfigError(fmt::format("cannot write '{}'", path));
            stream_ = file_.get();
        }
    }
    std::ostream& stream() { return *stream_; }
    bool to_file() const { return file_ != nullptr; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

void write_text_file(const std::string& path, const std::function<void(std::ostream&)>& fn)
{
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw ConfigError(fmt::format("cannot write '{}'", path));
    fn(file);
}

int cmd_rate(const Globals& g, const std::string& phase_source, std::ostream& out)
{
    const ScenarioConfig cfg = base_config(g);
    const std::uint64_t seed = effective_seed(g, cfg);
    const Scenario s = build_scenario(cfg, seed);
    const StatisticalCsi csi = make_statistical_csi(s);
    const PhaseShifts phases = resolve_phases(phase_source, s);
    const RateBreakdown b = rate_breakdown(csi, phases);
    const std::size_t users = s.dims.users;

    std::vector<McEstimate> mc;
    if (g.trials_given)
        mc = ergodic_rates_mc(s, phases, g.trials, seed);

    std::vector<double> interference(users, 0.0);
    for (std::size_t k = 0; k < users; ++k)
        for (std::size_t i = 0; i < users; ++i)
            if (i != k)
                interference[k] += csi.tx_power_w[i] * b.interference_at(k, i);

    Sink sink(g.out, out);
    std::ostream& o = sink.stream();
    if (g.csv) {
        o << "user,signal,interference,noise,sinr,rate";
        if (!mc.empty())
            o << ",mc_rate,mc_std_error";
        o << '\n';
        for (std::size_t k = 0; k < users; ++k) {
            o << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", k + 1, b.signal[k], interference[k],
                             b.noise[k], b.sinr[k], b.rate[k]);
            if (!mc.empty())
                o << fmt::format(",{:.17g},{:.17g}", mc[k].mean, mc[k].std_error);
            o << '\n';
        }
        o << fmt::format("sum,,,,,{:.17g}", b.sum_rate);
        if (!mc.empty()) {
            double total = 0.0;
            for (const McEstimate& e : mc)
                total += e.mean;
            o << fmt::format(",{:.17g},", total);
        }
        o << '\n';
        return kExitOk;
    }

    o << fmt::format("{:<6}{:>15}{:>15}{:>15}{:>15}{:>11}", "user", "signal", "interference", "noise", "sinr",
                     "rate");
    if (!mc.empty())
        o << fmt::format("{:>11}{:>11}", "mc_rate", "mc_se");
    o << '\n';
    for (std::size_t k = 0; k < users; ++k) {
        o << fmt::format("{:<6}{:>15.6e}{:>15.6e}{:>15.6e}{:>15.6e}{:>11.6f}", k + 1, b.signal[k],
                         interference[k], b.noise[k], b.sinr[k], b.rate[k]);
        if (!mc.empty())
            o << fmt::format("{:>11.6f}{:>11.2e}", mc[k].mean, mc[k].std_error);
        o << '\n';
    }
    o << fmt::format("sum rate: {:.6f} bits/s/Hz\n", b.sum_rate);
    return kExitOk;
}

int cmd_validate(const Globals& g, const std::string& phase_source, double signal_scale, std::ostream& out,
                 std::ostream& err)
{
    const ScenarioConfig cfg = base_config(g);
    const std::uint64_t seed = effective_seed(g, cfg);
    const Scenario s = build_scenario(cfg, seed);
    const PhaseShifts phases = resolve_phases(phase_source, s);

    MomentReportOptions opts;
    opts.trials = g.trials_given ? g.trials : 200'000;
    opts.seed = seed;
    opts.signal_scale = signal_scale;
    if (opts.trials < kMinMomentTrials)
        throw ValidationError(fmt::format("validate needs at least {} trials", kMinMomentTrials));
    const MomentReport report = moment_report(s, phases, opts);
    const auto flagged = report.flagged(4.0);

    Sink sink(g.out, out);
    write_csv(report, sink.stream());
    std::ostream& summary = sink.to_file() ? out : err;
    for (const MomentEntry* e : flagged)
        summary << fmt::format("flagged: {} k={}{} z={:.3f}\n", e->name, e->k + 1,
                               e->i ? fmt::format(" i={}", *e->i + 1) : std::string(), e->z_score);
    summary << fmt::format("{} moments checked, {} flagged (|z| > 4): {}\n", report.entries.size(),
                           flagged.size(), flagged.empty() ? "PASS" : "FAIL");
    return flagged.empty() ? kExitOk : kExitValidation;
}

struct OptimizeFlags {
    std::size_t generations = 0;
    std::size_t stagnation = 0;
    double mutation_prob = 0.1;
    std::size_t random_draws = 200;
    std::string trace;
};

int cmd_optimize(const Globals& g, const OptimizeFlags& f, std::ostream& out)
{
    const ScenarioConfig cfg = base_config(g);
    const std::uint64_t seed = effective_seed(g, cfg);
    const Scenario s = build_scenario(cfg, seed);
    const StatisticalCsi csi = make_statistical_csi(s);

    GaConfig ga;
    ga.max_generations = f.generations;
    ga.mutation_prob = f.mutation_prob;
    if (f.stagnation > 0)
        ga.stagnation_window = f.stagnation;
    const GaResult result = run_ga(csi, ga, seed);

    RandomPhaseOptions opts;
    opts.phase_draws = f.random_draws;
    const McEstimate random = random_phase_sum_rate(s, opts, seed);
    const double no_ris = sum_rate_no_ris(csi);
    const std::size_t generations = result.trace.generations.size() - 1;

    if (!g.out.empty())
        write_text_file(g.out, [&](std::ostream& o) { write_phases_csv(result.best, o); });
    if (!f.trace.empty())
        write_text_file(f.trace, [&](std::ostream& o) { write_trace_csv(result.trace, o); });

    if (g.csv) {
        out << "metric,value\n";
        out << fmt::format("ga_sum_rate,{:.17g}\n", result.best_fitness);
        out << fmt::format("random_phase_sum_rate,{:.17g}\n", random.mean);
        out << fmt::format("random_phase_std_error,{:.17g}\n", random.std_error);
        out << fmt::format("no_ris_sum_rate,{:.17g}\n", no_ris);
        out << fmt::format("generations,{}\n", generations);
    } else {
        out << fmt::format("GA sum rate:           {:.6f} bits/s/Hz ({} generations)\n", result.best_fitness,
                           generations);
        out << fmt::format("random-phase sum rate: {:.6f} +- {:.2e} bits/s/Hz ({} draws)\n", random.mean,
                           random.std_error, f.random_draws);
        out << fmt::format("no-RIS sum rate:       {:.6f} bits/s/Hz\n", no_ris);
    }
    return kExitOk;
}

struct SweepFlags {
    std::string spec;
    bool full_ga_budget = false;
};

int cmd_sweep(const Globals& g, const SweepFlags& f, std::ostream& out, std::ostream& err)
{
    SweepSpec spec;
    if (f.spec.empty()) {
        spec = parse_sweep_spec(json::object());
    } else {
        std::ifstream in(f.spec);
        if (!in)
            throw ConfigError(fmt::format("cannot open sweep spec '{}'", f.spec));
        json doc;
        try {
            doc = json::parse(in, nullptr, true, true);
        } catch (const json::parse_error& e) {
            throw ConfigError(fmt::format("sweep spec '{}': {}", f.spec, e.what()));
        }
        spec = parse_sweep_spec(doc);
    }
    if (f.full_ga_budget)
        spec.ga_generations_per_element = 100;
    if (g.trials_given)
        spec.mc_trials = g.trials;

    ScenarioConfig base = !g.config.empty() ? load_config(g.config) : spec.base.value_or(default_config());
    const std::uint64_t seed = effective_seed(g, base);

    const auto start = std::chrono::steady_clock::now();
    const std::vector<ResultRow> rows = run_sweep(spec, base, seed);
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    Sink sink(g.out, out);
    write_sweep_csv(spec, rows, sink.stream());
    for (const ResultRow& r : rows)
        err << fmt::format("{} = {:g}: {:.2f} s\n", to_string(spec.variable), r.value, r.wall_seconds);
    err << fmt::format("sweep wall time: {:.2f} s\n", total);
    return kExitOk;
}

struct BaselineFlags {
    std::size_t draws = 200;
    std::size_t fading_trials = 0;
};

int cmd_random_baseline(const Globals& g, const BaselineFlags& f, std::ostream& out)
{
    const ScenarioConfig cfg = base_config(g);
    const std::uint64_t seed = effective_seed(g, cfg);
    const Scenario s = build_scenario(cfg, seed);
    RandomPhaseOptions opts;
    opts.phase_draws = f.draws;
    opts.fading_trials = g.trials_given ? g.trials : f.fading_trials;

    std::vector<McEstimate> per_user;
    for (std::size_t k = 0; k < s.dims.users; ++k)
        per_user.push_back(random_phase_rate(s, k, opts, seed));
    const McEstimate total = random_phase_sum_rate(s, opts, seed);

    Sink sink(g.out, out);
    std::ostream& o = sink.stream();
    if (g.csv) {
        o << "user,mean_rate,std_error,draws\n";
        for (std::size_t k = 0; k < per_user.size(); ++k)
            o << fmt::format("{},{:.17g},{:.17g},{}\n", k + 1, per_user[k].mean, per_user[k].std_error,
                             per_user[k].trials);
        o << fmt::format("sum,{:.17g},{:.17g},{}\n", total.mean, total.std_error, total.trials);
    } else {
        o << fmt::format("{:<6}{:>14}{:>12}\n", "user", "mean_rate", "std_error");
        for (std::size_t k = 0; k < per_user.size(); ++k)
            o << fmt::format("{:<6}{:>14.6f}{:>12.2e}\n", k + 1, per_user[k].mean, per_user[k].std_error);
        o << fmt::format("{:<6}{:>14.6f}{:>12.2e}\n", "sum", total.mean, total.std_error);
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"RIS-aided massive MIMO uplink toolkit", args.empty() ? "ris_kit" : args.front()};
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config, "Scenario config (JSON)");
    auto* seed_opt = app.add_option("--seed", g.seed, "Master seed (overrides the config seed)");
    app.add_option("--out", g.out, "Write the primary output to this file");
    app.add_flag("--csv", g.csv, "Machine-readable CSV output");
    auto* trials_opt = app.add_option("--trials", g.trials, "Monte Carlo trials");

    std::string rate_phases = "zeros";
    auto* rate = app.add_subcommand("rate", "Closed-form rate breakdown");
    rate->add_option("--phases", rate_phases, "zeros | aligned:k | random[:seed] | file:path");

    std::string validate_phases = "random";
    double signal_scale = 1.0;
    auto* validate_cmd = app.add_subcommand("validate", "Monte Carlo check of every closed-form moment");
    validate_cmd->add_option("--phases", validate_phases, "zeros | aligned:k | random[:seed] | file:path");
    validate_cmd->add_option("--fault-signal-scale", signal_scale)->group("");

    OptimizeFlags opt_flags;
    auto* optimize = app.add_subcommand("optimize", "Genetic-algorithm phase design");
    optimize->add_option("--generations", opt_flags.generations, "Generation budget (0 = 100 N)");
    optimize->add_option("--stagnation", opt_flags.stagnation,
                         "Stop after this many generations without improvement (0 = off)");
    optimize->add_option("--mutation-prob", opt_flags.mutation_prob, "Per-gene mutation probability");
    optimize->add_option("--random-draws", opt_flags.random_draws, "Phase draws for the random baseline");
    optimize->add_option("--trace", opt_flags.trace, "Write the GA trace CSV here");

    SweepFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "Parameter sweep over power, M, N or d_ib");
    sweep->add_option("--spec", sweep_flags.spec, "Sweep spec (JSON)");
    sweep->add_flag("--full-ga-budget", sweep_flags.full_ga_budget, "Use 100 N GA generations per point");

    BaselineFlags baseline_flags;
    auto* baseline = app.add_subcommand("random-baseline", "Rate averaged over random phase draws");
    baseline->add_option("--draws", baseline_flags.draws, "Phase draws");
    baseline->add_option("--fading-trials", baseline_flags.fading_trials,
                         "Fading trials per draw (0 = closed form)");

    for (CLI::App* sub : {rate, validate_cmd, optimize, sweep, baseline})
        sub->fallthrough();

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    if (args.empty())
        argv.push_back("ris_kit");
    for (const std::string& a : args)
        argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    g.seed_given = seed_opt->count() > 0;
    g.trials_given = trials_opt->count() > 0;

    try {
        if (rate->parsed())
            return cmd_rate(g, rate_phases, out);
        if (validate_cmd->parsed())
            return cmd_validate(g, validate_phases, signal_scale, out, err);
        if (optimize->parsed())
            return cmd_optimize(g, opt_flags, out);
        if (sweep->parsed())
            return cmd_sweep(g, sweep_flags, out, err);
        if (baseline->parsed())
            return cmd_random_baseline(g, baseline_flags, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace riskit
