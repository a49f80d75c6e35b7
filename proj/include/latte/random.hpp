#pragma once

#include <cstdint>
#include <string>
#include <random>

namespace latte {

/// Deterministic random stream with a platform-stable output sequence.
///
/// The engine is std::mt19937_64 (its output sequence is pinned by the
/// standard). Distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms unspecified:
///   - uniform01: top 53 bits of one engine draw, scaled to [0,1)
///   - normal:    Box-Muller, two engine draws per sample, no caching
///   - uniform_int: modulo reduction of one engine draw (bias < 2^-57
///     for the ranges used here)
/// Identical seeds therefore give bitwise-identical sequences on every
/// platform and standard library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double uniform01();
    double uniform(double lo, double hi);
    double normal();                       // standard normal
    double normal(double mean, double stddev);
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);  // inclusive
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Derives the seed of a named substream from a base seed. Used so that
/// independent consumers (dataset synthesis, weight init, dropout masks,
/// epoch shuffles) never share a stream. splitmix64 over the base seed
/// xor FNV-1a of the name; extra integer keys are folded in the same way.
std::uint64_t derive_seed(std::uint64_t base, const std::string& name);
std::uint64_t derive_seed(std::uint64_t base, const std::string& name,
                          std::uint64_t k0);
std::uint64_t derive_seed(std::uint64_t base, const std::string& name,
                          std::uint64_t k0, std::uint64_t k1);
std::uint64_t derive_seed(std::uint64_t base, const std::string& name,
                          std::uint64_t k0, std::uint64_t k1, std::uint64_t k2);

}  // namespace latte
