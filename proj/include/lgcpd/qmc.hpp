#pragma once

#include <array>
#include <cstdint>

namespace lgcpd {

/// Van der Corput radical inverse of `index` in the given base.
double radical_inverse(std::uint64_t index, unsigned base);

/// 3-D Halton point with bases (2, 3, 5). Index 0 is the origin.
std::array<double, 3> halton_point(std::uint64_t index);

/// 3-D Sobol sequence in Gray-code order (index 0 is the origin).
///
/// Direction numbers: dimension 1 is the base-2 van der Corput sequence;
/// dimension 2 uses the primitive polynomial x + 1 with m1 = 1; dimension 3
/// uses x^2 + x + 1 with (m1, m2) = (1, 3).
class Sobol3 {
 public:
  static constexpr int kBits = 52;

  Sobol3();
  std::array<double, 3> point(std::uint64_t index) const;

 private:
  std::array<std::array<std::uint64_t, kBits>, 3> v_{};
};

/// Point `index` of the n-point 3-D Fibonacci-type lattice: the first axis is
/// (i + 1/2) / n (wrapped for i >= n) and the other two are Kronecker
/// sequences driven by the plastic number, frac((i + 1/2) / rho^k).
std::array<double, 3> fibonacci_point(std::uint64_t index, std::uint64_t n);

}  // namespace lgcpd
