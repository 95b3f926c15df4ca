#pragma once

#include <cstdint>
#include <random>

namespace ered {

// splitmix64: used to derive independent stream seeds from (seed, index)
// pairs so concurrent jobs never share a generator state.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 0x517cc1b727220a95ull));
}

// Caller-owned seeded stream. Every stochastic operation in the library
// takes one of these explicitly; there is no hidden global RNG.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::mt19937_64& engine() { return engine_; }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    // inclusive bounds
    long uniform_int(long lo, long hi) {
        return std::uniform_int_distribution<long>(lo, hi)(engine_);
    }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    double gamma(double shape, double scale) {
        return std::gamma_distribution<double>(shape, scale)(engine_);
    }
    std::uint64_t next_u64() { return engine_(); }

    Rng fork(std::uint64_t stream) {
        return Rng(derive_seed(engine_(), stream));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ered
