#include "lgcpd/domain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lgcpd/error.hpp"

namespace lgcpd {

RasterMask::RasterMask(Resolution resolution, std::vector<bool> admissible)
    : resolution_(resolution), cells_(std::move(admissible)) {
  for (auto r : resolution_) require(r >= 1, "mask resolution must be >= 1 per axis");
  require(cells_.size() == resolution_[0] * resolution_[1] * resolution_[2],
          "mask cell count does not match its resolution");
  admissible_count_ = static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), true));
  require(admissible_count_ > 0, "mask has no admissible cell");
}

bool RasterMask::admissible(std::size_t i1, std::size_t i2, std::size_t it) const {
  return cells_[(it * resolution_[1] + i2) * resolution_[0] + i1];
}

std::size_t cell_index(double x, double lo, double hi, std::size_t cells) {
  const double u = (x - lo) / (hi - lo) * static_cast<double>(cells);
  const double k = std::ceil(u) - 1.0;
  if (k <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(k), cells - 1);
}

Domain::Domain(Bounds bounds, std::optional<RasterMask> mask)
    : bounds_(bounds), mask_(std::move(mask)) {
  for (int a = 0; a < 3; ++a) {
    require(std::isfinite(bounds_.lo[a]) && std::isfinite(bounds_.hi[a]),
            "domain bounds must be finite");
    require(bounds_.hi[a] > bounds_.lo[a], "domain bounds need hi > lo on every axis");
  }
}

bool Domain::is_admissible(const SpaceTimePoint& p) const {
  const std::array<double, 3> x{p.s1, p.s2, p.t};
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(x[a]) || x[a] < bounds_.lo[a] || x[a] > bounds_.hi[a]) return false;
  }
  if (!mask_) return true;
  const auto& res = mask_->resolution();
  std::array<std::size_t, 3> idx{};
  for (int a = 0; a < 3; ++a) idx[a] = cell_index(x[a], bounds_.lo[a], bounds_.hi[a], res[a]);
  return mask_->admissible(idx[0], idx[1], idx[2]);
}

SpaceTimePoint Domain::to_unit_cube(const SpaceTimePoint& p) const {
  const auto& b = bounds_;
  return {(p.s1 - b.lo[0]) / (b.hi[0] - b.lo[0]), (p.s2 - b.lo[1]) / (b.hi[1] - b.lo[1]),
          (p.t - b.lo[2]) / (b.hi[2] - b.lo[2])};
}

SpaceTimePoint Domain::from_unit_cube(const SpaceTimePoint& u) const {
  const auto& b = bounds_;
  return {b.lo[0] + u.s1 * (b.hi[0] - b.lo[0]), b.lo[1] + u.s2 * (b.hi[1] - b.lo[1]),
          b.lo[2] + u.t * (b.hi[2] - b.lo[2])};
}

double Domain::volume() const {
  double v = 1.0;
  for (int a = 0; a < 3; ++a) v *= bounds_.hi[a] - bounds_.lo[a];
  return v;
}

Grid discretize(const Domain& domain, Resolution resolution) {
  for (auto r : resolution) require(r >= 1, "grid resolution must be >= 1 per axis");
  const auto& b = domain.bounds();
  Grid grid;
  grid.resolution = resolution;
  auto center = [&](int axis, std::size_t k) {
    const double h = (b.hi[axis] - b.lo[axis]) / static_cast<double>(resolution[axis]);
    return b.lo[axis] + (static_cast<double>(k) + 0.5) * h;
  };
  for (std::size_t it = 0; it < resolution[2]; ++it) {
    for (std::size_t i2 = 0; i2 < resolution[1]; ++i2) {
      for (std::size_t i1 = 0; i1 < resolution[0]; ++i1) {
        SpaceTimePoint p{center(0, i1), center(1, i2), center(2, it)};
        if (domain.is_admissible(p)) grid.cells.push_back(p);
      }
    }
  }
  if (grid.cells.empty()) fail(ErrorCode::Numerical, "empty grid: no admissible cell");
  return grid;
}

double distance(const SpaceTimePoint& a, const SpaceTimePoint& b) {
  const double d1 = a.s1 - b.s1, d2 = a.s2 - b.s2, d3 = a.t - b.t;
  return std::sqrt(d1 * d1 + d2 * d2 + d3 * d3);
}

}  // namespace lgcpd
