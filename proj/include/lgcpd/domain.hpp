#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lgcpd {

/// A spatiotemporal coordinate x = (s1, s2, t).
struct SpaceTimePoint {
  double s1 = 0.0;
  double s2 = 0.0;
  double t = 0.0;

  friend bool operator==(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

using Resolution = std::array<std::size_t, 3>;

/// Axis-aligned box [lo, hi] per axis (s1, s2, t).
struct Bounds {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};
};

/// Per-cell admissibility raster covering the domain bounds. Cells are laid
/// out row-major with s1 fastest and t slowest.
class RasterMask {
 public:
  RasterMask(Resolution resolution, std::vector<bool> admissible);

  const Resolution& resolution() const { return resolution_; }
  bool admissible(std::size_t i1, std::size_t i2, std::size_t it) const;
  std::size_t admissible_count() const { return admissible_count_; }
  const std::vector<bool>& cells() const { return cells_; }

 private:
  Resolution resolution_;
  std::vector<bool> cells_;
  std::size_t admissible_count_ = 0;
};

/// Study domain: bounds plus an optional raster mask. Immutable.
class Domain {
 public:
  explicit Domain(Bounds bounds, std::optional<RasterMask> mask = std::nullopt);

  static Domain unit_cube() { return Domain(Bounds{}); }

  const Bounds& bounds() const { return bounds_; }
  const std::optional<RasterMask>& mask() const { return mask_; }

  /// True iff p lies in the closed box and its raster cell is unmasked.
  bool is_admissible(const SpaceTimePoint& p) const;

  SpaceTimePoint to_unit_cube(const SpaceTimePoint& p) const;
  SpaceTimePoint from_unit_cube(const SpaceTimePoint& u) const;

  /// Volume of the bounding box (|D| before masking).
  double volume() const;

 private:
  Bounds bounds_;
  std::optional<RasterMask> mask_;
};

/// Cell index along one axis for half-open-from-below cells (lo + k*h, lo + (k+1)*h];
/// a point on an interior boundary belongs to the lower-index cell.
std::size_t cell_index(double x, double lo, double hi, std::size_t cells);

/// Centers of the admissible cells of a regular lattice over a domain.
struct Grid {
  Resolution resolution{};
  std::vector<SpaceTimePoint> cells;

  std::size_t size() const { return cells.size(); }
};

/// Cell centers of every admissible cell, row-major (s1 fastest, t slowest).
/// Throws Numerical "empty grid" if nothing is admissible.
Grid discretize(const Domain& domain, Resolution resolution);

/// Euclidean distance over all three axes.
double distance(const SpaceTimePoint& a, const SpaceTimePoint& b);

}  // namespace lgcpd
