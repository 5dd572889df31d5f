#include "vloc/nn/prng.hpp"

#include <cmath>
#include <numbers>

#include "vloc/common/io.hpp"

namespace vloc::nn {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Prng::Prng(std::uint64_t seed, std::string_view stream)
    : seed_(seed), key_(splitmix64(seed ^ fnv1a(stream))), stream_(stream) {}

std::uint64_t Prng::next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

double Prng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Prng::normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Prng::below(std::uint64_t n) {
    if (n <= 1) return 0;
    // rejection keeps the draw unbiased
    const std::uint64_t limit = ~0ULL - (~0ULL % n);
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x < limit) return x % n;
    }
}

Prng Prng::fork(std::string_view label) const {
    return Prng(seed_, stream_ + "/" + std::string(label));
}

} // namespace vloc::nn
