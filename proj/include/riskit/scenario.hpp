// System parameters of an RIS-aided massive-MIMO uplink with direct links.
//
// A Scenario is built once from a parsed config and a seed and is treated as
// a frozen value by everything downstream.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace riskit {

// Thrown when a value violates a documented invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Thrown when a config file cannot be read or does not match the schema.
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Dimensions {
    std::size_t bs_antennas = 1;   // M, perfect square
    std::size_t ris_elements = 1;  // N, perfect square
    std::size_t users = 1;         // K

    bool operator==(const Dimensions&) const = default;
};

struct FadingParams {
    double ris_bs_rician = 0.0;              // delta
    std::vector<double> user_ris_rician;     // epsilon_k
    std::vector<double> user_ris_loss;       // alpha_k, linear
    double ris_bs_loss = 0.0;                // beta, linear
    std::vector<double> direct_loss;         // gamma_k, linear; 0 means blocked

    bool operator==(const FadingParams&) const = default;
};

// Angles in radians, normalized to [0, 2pi).
struct AngleSet {
    double bs_arrival_azimuth = 0.0;         // phi_r^a
    double bs_arrival_elevation = 0.0;       // phi_r^e
    double ris_departure_azimuth = 0.0;      // varphi_t^a
    double ris_departure_elevation = 0.0;    // varphi_t^e
    std::vector<double> ris_arrival_azimuth;    // varphi_kr^a per user
    std::vector<double> ris_arrival_elevation;  // varphi_kr^e per user

    bool operator==(const AngleSet&) const = default;
};

struct LinkBudget {
    std::vector<double> tx_power_w;
    double noise_power_w = 0.0;
    double spacing_ratio = 0.5;  // d / lambda

    bool operator==(const LinkBudget&) const = default;
};

// Distances the path losses were derived from, when the geometric recipe was used.
struct GeometryMeta {
    double user_ris_distance_m = 0.0;
    double ris_bs_distance_m = 0.0;

    bool operator==(const GeometryMeta&) const = default;
};

struct Scenario {
    Dimensions dims;
    FadingParams fading;
    AngleSet angles;
    LinkBudget budget;
    std::optional<GeometryMeta> geometry;
    std::uint64_t seed = 0;

    bool operator==(const Scenario&) const = default;
};

// Parsed (but not yet built) config record. Powers are in dBm unless the
// linear overrides are present; path losses come from the geometry when both
// distances are given, otherwise from the explicit linear overrides.
struct ScenarioConfig {
    std::size_t bs_antennas = 0;
    std::size_t ris_elements = 0;
    std::size_t users = 0;
    double delta = 0.0;
    std::vector<double> epsilon;
    std::vector<double> p_dbm;
    std::optional<double> sigma2_dbm;
    std::optional<double> d_ui;
    std::optional<double> d_ib;
    double spacing_ratio = 0.5;
    std::optional<std::uint64_t> seed;

    std::optional<std::vector<double>> alpha;
    std::optional<double> beta;
    std::optional<std::vector<double>> gamma;
    std::optional<std::vector<double>> p_w;
    std::optional<double> sigma2_w;
    std::optional<AngleSet> angles;
    std::optional<GeometryMeta> geometry_meta;
};

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

// Distance between user `user` (1-based, as in the placement formula) and the BS.
double user_bs_distance(std::size_t user, std::size_t user_count, double d_ui, double d_ib);

struct PathLossSet {
    std::vector<double> user_ris;  // alpha_k
    double ris_bs = 0.0;           // beta
    std::vector<double> direct;    // gamma_k
};

PathLossSet path_loss_set(double d_ui, double d_ib, std::size_t user_count);

bool is_perfect_square(std::size_t value);
std::size_t integer_sqrt(std::size_t value);

// Wraps an angle into [0, 2pi).
double normalize_angle(double radians);

ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);

Scenario build_scenario(const ScenarioConfig& config, std::uint64_t seed);

// Serialized form that rebuilds to the identical Scenario.
nlohmann::json to_json(const Scenario& scenario);

void validate(const Scenario& scenario);

}  // namespace riskit
