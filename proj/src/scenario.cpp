#include "riskit/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "riskit/random.hpp"

namespace riskit {

using nlohmann::json;

double dbm_to_watt(double dbm)
{
    if (!std::isfinite(dbm))
        throw ValidationError("power in dBm must be finite");
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double watt_to_dbm(double watt)
{
    if (!std::isfinite(watt) || watt <= 0.0)
        throw ValidationError("power in watts must be finite and positive");
    return 10.0 * std::log10(watt) + 30.0;
}

double user_bs_distance(std::size_t user, std::size_t user_count, double d_ui, double d_ib)
{
    if (user < 1 || user > user_count)
        throw std::out_of_range(fmt::format("user index {} outside 1..{}", user, user_count));
    if (!(d_ui >= 0.0) || !(d_ib > 0.0) || !std::isfinite(d_ui) || !std::isfinite(d_ib))
        throw ValidationError("distances must be finite with d_ui >= 0 and d_ib > 0");
    const double angle = std::numbers::pi / 5.0 * static_cast<double>(user);
    const double along = d_ib - d_ui * std::sin(angle);
    const double across = d_ui * std::cos(angle);
    return std::sqrt(along * along + across * across);
}

PathLossSet path_loss_set(double d_ui, double d_ib, std::size_t user_count)
{
    if (!(d_ui > 0.0) || !(d_ib > 0.0))
        throw ValidationError("path-loss distances must be positive");
    PathLossSet out;
    out.user_ris.assign(user_count, 1e-3 / (d_ui * d_ui));
    out.ris_bs = 1e-3 * std::pow(d_ib, -2.5);
    out.direct.reserve(user_count);
    for (std::size_t k = 1; k <= user_count; ++k)
        out.direct.push_back(1e-3 * std::pow(user_bs_distance(k, user_count, d_ui, d_ib), -4.0));
    return out;
}

std::size_t integer_sqrt(std::size_t value)
{
    auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(value)));
    while (root * root > value)
        --root;
    while ((root + 1) * (root + 1) <= value)
        ++root;
    return root;
}

bool is_perfect_square(std::size_t value)
{
    const std::size_t root = integer_sqrt(value);
    return root * root == value;
}

double normalize_angle(double radians)
{
    if (!std::isfinite(radians))
        throw ValidationError("angle must be finite");
    double wrapped = std::fmod(radians, kTwoPi);
    if (wrapped < 0.0)
        wrapped += kTwoPi;
    // fmod of a value just below a multiple of 2pi can round up to 2pi
    return wrapped < kTwoPi ? wrapped : 0.0;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

[[noreturn]] void schema_error(const std::string& key, const std::string& what)
{
    throw ConfigError(fmt::format("config key '{}': {}", key, what));
}

double number_at(const json& doc, const std::string& key)
{
    const json& v = doc.at(key);
    if (!v.is_number())
        schema_error(key, "expected a number");
    return v.get<double>();
}

std::optional<double> optional_number(const json& doc, const std::string& key)
{
    if (!doc.contains(key) || doc.at(key).is_null())
        return std::nullopt;
    return number_at(doc, key);
}

std::size_t count_at(const json& doc, const std::string& key)
{
    if (!doc.contains(key))
        schema_error(key, "required");
    const json& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1)
        schema_error(key, "expected a positive integer");
    return v.get<std::size_t>();
}

// Accepts either a scalar (broadcast to all users) or an array of length `users`.
std::vector<double> per_user(const json& doc, const std::string& key, std::size_t users)
{
    const json& v = doc.at(key);
    if (v.is_number())
        return std::vector<double>(users, v.get<double>());
    if (!v.is_array())
        schema_error(key, "expected a number or an array of numbers");
    if (v.size() != users)
        schema_error(key, fmt::format("expected {} entries, got {}", users, v.size()));
    std::vector<double> out;
    out.reserve(users);
    for (const auto& e : v) {
        if (!e.is_number())
            schema_error(key, "array entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::optional<std::vector<double>> optional_per_user(const json& doc, const std::string& key,
                                                     std::size_t users)
{
    if (!doc.contains(key) || doc.at(key).is_null())
        return std::nullopt;
    return per_user(doc, key, users);
}

AngleSet parse_angles(const json& v, std::size_t users)
{
    if (!v.is_object())
        schema_error("angles", "expected an object");
    AngleSet a;
    a.bs_arrival_azimuth = number_at(v, "phi_r_a");
    a.bs_arrival_elevation = number_at(v, "phi_r_e");
    a.ris_departure_azimuth = number_at(v, "phi_t_a");
    a.ris_departure_elevation = number_at(v, "phi_t_e");
    a.ris_arrival_azimuth = per_user(v, "phi_kr_a", users);
    a.ris_arrival_elevation = per_user(v, "phi_kr_e", users);
    return a;
}

const char* kKnownKeys[] = {"M", "N", "K", "delta", "epsilon", "p_dbm", "sigma2_dbm", "d_ui",
                            "d_ib", "spacing_ratio", "seed", "alpha", "beta", "gamma", "p_w",
                            "sigma2_w", "angles", "geometry_meta"};

}  // namespace

ScenarioConfig parse_config(const json& doc)
{
    if (!doc.is_object())
        throw ConfigError("config root must be an object");
    for (const auto& [key, value] : doc.items()) {
        bool known = false;
        for (const char* k : kKnownKeys)
            known = known || key == k;
        if (!known)
            schema_error(key, "unknown key");
    }

    try {
        ScenarioConfig c;
        c.bs_antennas = count_at(doc, "M");
        c.ris_elements = count_at(doc, "N");
        c.users = count_at(doc, "K");
        if (!is_perfect_square(c.bs_antennas))
            schema_error("M", fmt::format("{} is not a perfect square", c.bs_antennas));
        if (!is_perfect_square(c.ris_elements))
            schema_error("N", fmt::format("{} is not a perfect square", c.ris_elements));

        if (!doc.contains("delta"))
            schema_error("delta", "required");
        c.delta = number_at(doc, "delta");
        if (!doc.contains("epsilon"))
            schema_error("epsilon", "required");
        c.epsilon = per_user(doc, "epsilon", c.users);

        c.p_w = optional_per_user(doc, "p_w", c.users);
        if (doc.contains("p_dbm"))
            c.p_dbm = per_user(doc, "p_dbm", c.users);
        else if (!c.p_w)
            schema_error("p_dbm", "required (or p_w)");

        c.sigma2_w = optional_number(doc, "sigma2_w");
        c.sigma2_dbm = optional_number(doc, "sigma2_dbm");
        if (!c.sigma2_w && !c.sigma2_dbm)
            schema_error("sigma2_dbm", "required (or sigma2_w)");

        c.d_ui = optional_number(doc, "d_ui");
        c.d_ib = optional_number(doc, "d_ib");
        if (c.d_ui.has_value() != c.d_ib.has_value())
            schema_error(c.d_ui ? "d_ib" : "d_ui", "d_ui and d_ib must be given together");
        c.alpha = optional_per_user(doc, "alpha", c.users);
        c.beta = optional_number(doc, "beta");
        c.gamma = optional_per_user(doc, "gamma", c.users);
        if (!c.d_ui && !(c.alpha && c.beta && c.gamma))
            schema_error("alpha", "path losses need d_ui/d_ib or all of alpha, beta, gamma");

        if (doc.contains("spacing_ratio"))
            c.spacing_ratio = number_at(doc, "spacing_ratio");
        if (doc.contains("seed")) {
            const json& s = doc.at("seed");
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
                schema_error("seed", "expected a non-negative integer");
            c.seed = s.get<std::uint64_t>();
        }
        if (doc.contains("angles"))
            c.angles = parse_angles(doc.at("angles"), c.users);
        if (doc.contains("geometry_meta")) {
            const json& g = doc.at("geometry_meta");
            c.geometry_meta = GeometryMeta{number_at(g, "d_ui"), number_at(g, "d_ib")};
        }
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("malformed config: {}", e.what()));
    }
}

ScenarioConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return parse_config(doc);
}

// ---------------------------------------------------------------------------

void validate(const Scenario& s)
{
    const auto& d = s.dims;
    if (d.bs_antennas < 1 || d.ris_elements < 1 || d.users < 1)
        throw ValidationError("M, N and K must be at least 1");
    if (!is_perfect_square(d.bs_antennas))
        throw ValidationError(fmt::format("M = {} is not a perfect square", d.bs_antennas));
    if (!is_perfect_square(d.ris_elements))
        throw ValidationError(fmt::format("N = {} is not a perfect square", d.ris_elements));

    const std::size_t k = d.users;
    const auto sized = [k](const std::vector<double>& v) { return v.size() == k; };
    const auto finite = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x))
                return false;
        return true;
    };
    const auto& f = s.fading;
    if (!sized(f.user_ris_rician) || !sized(f.user_ris_loss) || !sized(f.direct_loss))
        throw ValidationError("per-user fading arrays must have K entries");
    if (!finite(f.user_ris_rician) || !finite(f.user_ris_loss) || !finite(f.direct_loss) ||
        !std::isfinite(f.ris_bs_rician) || !std::isfinite(f.ris_bs_loss))
        throw ValidationError("fading parameters must be finite");
    if (f.ris_bs_rician < 0.0)
        throw ValidationError("delta must be >= 0");
    for (std::size_t u = 0; u < k; ++u) {
        if (f.user_ris_rician[u] < 0.0)
            throw ValidationError("epsilon must be >= 0");
        if (!(f.user_ris_loss[u] > 0.0))
            throw ValidationError("alpha must be > 0");
        if (f.direct_loss[u] < 0.0)
            throw ValidationError("gamma must be >= 0");
    }
    if (!(f.ris_bs_loss > 0.0))
        throw ValidationError("beta must be > 0");

    const auto& a = s.angles;
    if (!sized(a.ris_arrival_azimuth) || !sized(a.ris_arrival_elevation))
        throw ValidationError("per-user angle arrays must have K entries");

    const auto& b = s.budget;
    if (!sized(b.tx_power_w))
        throw ValidationError("transmit power array must have K entries");
    for (double p : b.tx_power_w)
        if (!std::isfinite(p) || p < 0.0)
            throw ValidationError("transmit powers must be finite and >= 0");
    if (!std::isfinite(b.noise_power_w) || !(b.noise_power_w > 0.0))
        throw ValidationError("noise power must be finite and > 0");
    if (!std::isfinite(b.spacing_ratio) || !(b.spacing_ratio > 0.0))
        throw ValidationError("spacing ratio must be > 0");
}

Scenario build_scenario(const ScenarioConfig& config, std::uint64_t seed)
{
    Scenario s;
    s.seed = seed;
    s.dims = {config.bs_antennas, config.ris_elements, config.users};
    const std::size_t users = config.users;

    s.fading.ris_bs_rician = config.delta;
    s.fading.user_ris_rician = config.epsilon;
    if (config.d_ui && config.d_ib) {
        PathLossSet pl = path_loss_set(*config.d_ui, *config.d_ib, users);
        s.fading.user_ris_loss = std::move(pl.user_ris);
        s.fading.ris_bs_loss = pl.ris_bs;
        s.fading.direct_loss = std::move(pl.direct);
        s.geometry = GeometryMeta{*config.d_ui, *config.d_ib};
    } else {
        if (!config.alpha || !config.beta || !config.gamma)
            throw ValidationError("path losses need d_ui/d_ib or all of alpha, beta, gamma");
        s.fading.user_ris_loss = *config.alpha;
        s.fading.ris_bs_loss = *config.beta;
        s.fading.direct_loss = *config.gamma;
        s.geometry = config.geometry_meta;
    }

    if (config.p_w) {
        s.budget.tx_power_w = *config.p_w;
    } else {
        s.budget.tx_power_w.reserve(users);
        for (double p : config.p_dbm)
            s.budget.tx_power_w.push_back(dbm_to_watt(p));
    }
    s.budget.noise_power_w = config.sigma2_w ? *config.sigma2_w : dbm_to_watt(*config.sigma2_dbm);
    s.budget.spacing_ratio = config.spacing_ratio;

    if (config.angles) {
        s.angles = *config.angles;
        auto wrap = [](double& x) { x = normalize_angle(x); };
        wrap(s.angles.bs_arrival_azimuth);
        wrap(s.angles.bs_arrival_elevation);
        wrap(s.angles.ris_departure_azimuth);
        wrap(s.angles.ris_departure_elevation);
        for (double& x : s.angles.ris_arrival_azimuth)
            wrap(x);
        for (double& x : s.angles.ris_arrival_elevation)
            wrap(x);
    } else {
        // Draw order: BS arrival (az, el), RIS departure (az, el), then per user (az, el).
        Stream rng = make_stream(seed, StreamTag::angles);
        s.angles.bs_arrival_azimuth = uniform_angle(rng);
        s.angles.bs_arrival_elevation = uniform_angle(rng);
        s.angles.ris_departure_azimuth = uniform_angle(rng);
        s.angles.ris_departure_elevation = uniform_angle(rng);
        s.angles.ris_arrival_azimuth.resize(users);
        s.angles.ris_arrival_elevation.resize(users);
        for (std::size_t k = 0; k < users; ++k) {
            s.angles.ris_arrival_azimuth[k] = uniform_angle(rng);
            s.angles.ris_arrival_elevation[k] = uniform_angle(rng);
        }
    }

    validate(s);
    return s;
}

json to_json(const Scenario& s)
{
    json doc;
    doc["M"] = s.dims.bs_antennas;
    doc["N"] = s.dims.ris_elements;
    doc["K"] = s.dims.users;
    doc["delta"] = s.fading.ris_bs_rician;
    doc["epsilon"] = s.fading.user_ris_rician;
    doc["alpha"] = s.fading.user_ris_loss;
    doc["beta"] = s.fading.ris_bs_loss;
    doc["gamma"] = s.fading.direct_loss;
    doc["p_w"] = s.budget.tx_power_w;
    doc["sigma2_w"] = s.budget.noise_power_w;
    doc["spacing_ratio"] = s.budget.spacing_ratio;
    doc["seed"] = s.seed;
    doc["angles"] = {
        {"phi_r_a", s.angles.bs_arrival_azimuth},
        {"phi_r_e", s.angles.bs_arrival_elevation},
        {"phi_t_a", s.angles.ris_departure_azimuth},
        {"phi_t_e", s.angles.ris_departure_elevation},
        {"phi_kr_a", s.angles.ris_arrival_azimuth},
        {"phi_kr_e", s.angles.ris_arrival_elevation},
    };
    if (s.geometry)
        doc["geometry_meta"] = {{"d_ui", s.geometry->user_ris_distance_m},
                                {"d_ib", s.geometry->ris_bs_distance_m}};
    return doc;
}

}  // namespace riskit
