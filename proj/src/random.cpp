#include "latte/random.hpp"

#include <cmath>

namespace latte {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

double RandomStream::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double RandomStream::normal() {
    // Box-Muller; u1 shifted into (0,1] so the log never sees zero.
    double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double RandomStream::normal(double mean, double stddev) {
    return mean + stddev * normal();
}

std::uint64_t RandomStream::uniform_int(std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t range = hi - lo + 1;
    return lo + engine_() % range;
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& name) {
    return splitmix64(base ^ fnv1a(name));
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& name,
                          std::uint64_t k0) {
    return splitmix64(derive_seed(base, name) ^ splitmix64(k0));
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& name,
                          std::uint64_t k0, std::uint64_t k1) {
    return splitmix64(derive_seed(base, name, k0) ^ splitmix64(~k1));
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& name,
                          std::uint64_t k0, std::uint64_t k1, std::uint64_t k2) {
    return splitmix64(derive_seed(base, name, k0, k1) ^ splitmix64(k2 + 0x51ed2701ULL));
}

}  // namespace latte
