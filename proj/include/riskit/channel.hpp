// Channel model: USPA steering vectors, Rician RIS links, Rayleigh direct links,
// and the cascaded user-RIS-BS channel.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "riskit/random.hpp"
#include "riskit/scenario.hpp"

namespace riskit {

// RIS configuration theta in [0, 2pi)^N. Values are wrapped on construction.
class PhaseShifts {
public:
    PhaseShifts() = default;
    explicit PhaseShifts(std::vector<double> theta);

    static PhaseShifts zeros(std::size_t count);
    static PhaseShifts random(std::size_t count, Stream& rng);

    std::size_t size() const { return theta_.size(); }
    double operator[](std::size_t n) const { return theta_[n]; }
    std::span<const double> values() const { return theta_; }

    // e^{j theta_n}
    Eigen::VectorXcd phasors() const;

    bool operator==(const PhaseShifts&) const = default;

private:
    std::vector<double> theta_;
};

using SteeringVector = Eigen::VectorXcd;

// a_X(az, el): entry n has phase 2pi (d/lambda) (x sin(el) sin(az) + y cos(el)),
// x = floor(n / sqrt X), y = n mod sqrt X (0-based n).
SteeringVector steering_vector(std::size_t count, double azimuth, double elevation,
                               double spacing_ratio);

struct LosComponents {
    std::vector<SteeringVector> user_ris;  // h_bar_k, length N
    Eigen::MatrixXcd ris_bs;               // H2_bar, M x N, rank one
};

LosComponents los_components(const Scenario& scenario);

struct ChannelRealization {
    Eigen::MatrixXcd ris_bs;                // H2
    std::vector<Eigen::VectorXcd> user_ris; // h_k
    std::vector<Eigen::VectorXcd> direct;   // d_k
};

// Draw order: H2 NLoS entries column-major, then h_k NLoS per user, then d_k per user.
ChannelRealization sample_realization(const Scenario& scenario, const LosComponents& los,
                                      Stream& rng);
ChannelRealization sample_realization(const Scenario& scenario, Stream& rng);

// g_k = H2 diag(e^{j theta}) h_k for every user.
std::vector<Eigen::VectorXcd> cascaded(const ChannelRealization& realization,
                                       const PhaseShifts& phases);

}  // namespace riskit
