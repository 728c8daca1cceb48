#include "riskit/random.hpp"

#include "riskit/scenario.hpp"

namespace riskit {

namespace {

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

Stream make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index)
{
    const auto t = static_cast<std::uint64_t>(tag);
    std::seed_seq seq{lo32(seed), hi32(seed), lo32(t), hi32(t), lo32(index), hi32(index)};
    return Stream(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index)
{
    Stream rng = make_stream(seed, tag, index);
    return rng();
}

double uniform_unit(Stream& rng)
{
    // 53 random mantissa bits; never returns 1.0.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_angle(Stream& rng)
{
    const double angle = uniform_unit(rng) * kTwoPi;
    return angle < kTwoPi ? angle : 0.0;
}

std::complex<double> ComplexGaussian::operator()(Stream& rng)
{
    const double re = normal_(rng);
    const double im = normal_(rng);
    return {re, im};
}

}  // namespace riskit
