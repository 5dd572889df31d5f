#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vloc::nn {

/// Counter-based generator addressed by (seed, stream label, counter): the
/// same triple always yields the same draw, and streams with different labels
/// are independent.
class Prng {
  public:
    Prng(std::uint64_t seed, std::string_view stream);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits.
    double uniform();
    /// Standard normal (Box-Muller, two draws per value).
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t c) { counter_ = c; }

    /// Derives an independent child stream, e.g. per epoch.
    Prng fork(std::string_view label) const;

  private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::string stream_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace vloc::nn
