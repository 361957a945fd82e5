#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfft {

using cplx = std::complex<double>;
using FreqVec = std::vector<std::int64_t>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// splitmix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline bool is_pow2(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

inline std::uint32_t ilog2(std::uint64_t x) {
  return static_cast<std::uint32_t>(std::bit_width(x) - 1);
}

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// ceil of a non-negative double, guarded against values like 12.000000000001
inline std::uint64_t ceil_u(double x) {
  double r = std::round(x);
  if (std::abs(x - r) < 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

// e^{2 pi i j / n} for j in [0, n)
class Twiddles {
 public:
  Twiddles() = default;
  explicit Twiddles(std::uint32_t n) : n_(n), tab_(n) {
    for (std::uint32_t j = 0; j < n; ++j) {
      // exact values at the quarter points keep sums of aligned phases exact
      if (j * 4 == n) tab_[j] = cplx(0, 1);
      else if (j * 2 == n) tab_[j] = cplx(-1, 0);
      else if (j * 4 == 3 * n) tab_[j] = cplx(0, -1);
      else if (j == 0) tab_[j] = cplx(1, 0);
      else tab_[j] = std::polar(1.0, kTwoPi * static_cast<double>(j) / n);
    }
  }
  const cplx& operator[](std::uint32_t j) const { return tab_[j]; }
  std::uint32_t n() const { return n_; }

 private:
  std::uint32_t n_ = 0;
  std::vector<cplx> tab_;
};

}  // namespace sfft
