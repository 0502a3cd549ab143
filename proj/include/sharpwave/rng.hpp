#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace sharpwave {

// Per-path random stream. One master seed; each Monte Carlo path derives an
// independent stream from (master_seed, path_index). Within a path, draws
// happen in a fixed order, so results are bitwise reproducible regardless of
// how paths are scheduled across threads.
class PathRng {
public:
  PathRng(std::uint64_t master_seed, std::uint64_t path_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(path_index),
                      static_cast<std::uint32_t>(path_index >> 32)};
    gen_.seed(seq);
    have_spare_ = false;
  }

  double uniform() {
    // 53-bit mantissa in (0,1); never returns exactly 0.
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
  }

  // Standard normal via Box-Muller, one cached spare per pair.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t raw() { return gen_(); }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_;
};

}  // namespace sharpwave
