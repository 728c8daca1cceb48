// Seeded random streams.
//
// Every consumer derives an independent stream from (master seed, tag, index),
// so results never depend on the order in which trials or workers run.

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace riskit {

enum class StreamTag : std::uint64_t {
    angles = 1,
    fading = 2,
    phases = 3,
    ga_init = 4,
    ga_generation = 5,
    random_phase = 6,
    sweep_point = 7,
};

using Stream = std::mt19937_64;

Stream make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0);

// Child seed for nested experiments (e.g. one per sweep point).
std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index);

// Uniform on [0, 2pi).
double uniform_angle(Stream& rng);

// Uniform on [0, 1).
double uniform_unit(Stream& rng);

// CN(0, 1): real and imaginary parts i.i.d. N(0, 1/2).
class ComplexGaussian {
public:
    std::complex<double> operator()(Stream& rng);

private:
    std::normal_distribution<double> normal_{0.0, 0.70710678118654752440};
};

}  // namespace riskit
