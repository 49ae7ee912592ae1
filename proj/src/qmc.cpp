#include "lgcpd/qmc.hpp"

#include <cmath>

namespace lgcpd {

double radical_inverse(std::uint64_t index, unsigned base) {
  double inv_base = 1.0 / base;
  double factor = inv_base;
  double value = 0.0;
  while (index > 0) {
    value += static_cast<double>(index % base) * factor;
    index /= base;
    factor *= inv_base;
  }
  return value;
}

std::array<double, 3> halton_point(std::uint64_t index) {
  return {radical_inverse(index, 2), radical_inverse(index, 3), radical_inverse(index, 5)};
}

Sobol3::Sobol3() {
  // Direction integers scaled to kBits fractional bits: v_k = m_k / 2^k.
  auto fill = [&](int dim, int degree, std::uint64_t poly_inner, std::array<std::uint64_t, 3> m) {
    auto& v = v_[static_cast<std::size_t>(dim)];
    for (int k = 0; k < kBits; ++k) {
      if (k < degree) {
        v[static_cast<std::size_t>(k)] = m[static_cast<std::size_t>(k)] << (kBits - 1 - k);
        continue;
      }
      std::uint64_t x = v[static_cast<std::size_t>(k - degree)];
      x ^= x >> degree;
      for (int j = 1; j < degree; ++j) {
        if ((poly_inner >> (degree - 1 - j)) & 1U) x ^= v[static_cast<std::size_t>(k - j)];
      }
      v[static_cast<std::size_t>(k)] = x;
    }
  };
  for (int k = 0; k < kBits; ++k) v_[0][static_cast<std::size_t>(k)] = std::uint64_t{1} << (kBits - 1 - k);
  fill(1, 1, 0, {1, 0, 0});
  fill(2, 2, 1, {1, 3, 0});
}

std::array<double, 3> Sobol3::point(std::uint64_t index) const {
  const std::uint64_t gray = index ^ (index >> 1);
  std::array<double, 3> out{};
  for (std::size_t d = 0; d < 3; ++d) {
    std::uint64_t x = 0;
    for (int k = 0; k < kBits; ++k) {
      if ((gray >> k) & 1U) x ^= v_[d][static_cast<std::size_t>(k)];
    }
    out[d] = std::ldexp(static_cast<double>(x), -kBits);
  }
  return out;
}

std::array<double, 3> fibonacci_point(std::uint64_t index, std::uint64_t n) {
  // Plastic number: real root of x^3 = x + 1.
  static const double rho = std::cbrt(0.5 + std::sqrt(69.0) / 18.0) + std::cbrt(0.5 - std::sqrt(69.0) / 18.0);
  const double i = static_cast<double>(index) + 0.5;
  auto frac = [](double x) { return x - std::floor(x); };
  return {frac(i / static_cast<double>(n)), frac(i / rho), frac(i / (rho * rho))};
}

}  // namespace lgcpd
