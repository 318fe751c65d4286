#pragma once

#include <cassert>
#include <cstdint>
#include <random>
#include <vector>

namespace cne {

// mt19937_64 with hand-rolled bounded draws. <random> distributions are not
// portable across standard libraries; these are, which keeps seeded runs
// reproducible no matter where the binary was built.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, n), n > 0. Rejection sampling on the top of the range to
  // avoid modulo bias.
  uint64_t uniform_u64(uint64_t n) {
    assert(n > 0);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi) {
    assert(lo <= hi);
    return lo + static_cast<int>(uniform_u64(static_cast<uint64_t>(hi) - lo + 1));
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform_real() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform_real(double lo, double hi) {
    return lo + (hi - lo) * uniform_real();
  }

  // Fisher-Yates; std::shuffle leaves the permutation implementation-defined.
  template <class V>
  void shuffle(std::vector<V>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_u64(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace cne
