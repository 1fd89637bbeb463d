#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "pinchlab/core.hpp"

namespace pinchlab {

namespace detail {

// Uniform grid over a point set for exact nearest-neighbor queries.
struct PointGrid {
  Eigen::MatrixXd P;
  Eigen::Vector3d origin;
  double cell = 1.0;
  Eigen::Vector3i dims;
  std::unordered_map<std::int64_t, std::vector<int>> cells;

  explicit PointGrid(const Eigen::MatrixXd& points) : P(points) {
    Eigen::Vector3d lo = P.colwise().minCoeff();
    Eigen::Vector3d hi = P.colwise().maxCoeff();
    origin = lo;
    double extent = std::max((hi - lo).maxCoeff(), 1e-30);
    // aim for a few points per cell
    double target = extent / std::max(1.0, std::cbrt(static_cast<double>(P.rows())));
    cell = std::max(target, 1e-12 * extent);
    for (int a = 0; a < 3; ++a)
      dims[a] = std::max(1, static_cast<int>(std::floor((hi[a] - lo[a]) / cell)) + 1);
    cells.reserve(static_cast<std::size_t>(P.rows()));
    for (int i = 0; i < P.rows(); ++i) cells[key(index_of(P.row(i)))].push_back(i);
  }

  Eigen::Vector3i index_of(const Eigen::RowVector3d& p) const {
    Eigen::Vector3i idx;
    for (int a = 0; a < 3; ++a) {
      int v = static_cast<int>(std::floor((p[a] - origin[a]) / cell));
      idx[a] = std::clamp(v, 0, dims[a] - 1);
    }
    return idx;
  }

  std::int64_t key(const Eigen::Vector3i& idx) const {
    return (static_cast<std::int64_t>(idx.x()) * dims.y() + idx.y()) * dims.z() + idx.z();
  }

  // Exact distance to the nearest point: expand Chebyshev rings until the
  // ring's lower bound exceeds the best distance found.
  double nearest_distance(const Eigen::RowVector3d& q) const {
    Eigen::Vector3i c = index_of(q);
    double best = std::numeric_limits<double>::infinity();
    int max_ring = dims.maxCoeff();
    for (int ring = 0; ring <= max_ring; ++ring) {
      double ring_bound = (ring - 1) * cell;  // closest possible point in this ring
      if (ring > 0 && best <= ring_bound) break;
      bool any_cell = false;
      for (int dx = -ring; dx <= ring; ++dx) {
        for (int dy = -ring; dy <= ring; ++dy) {
          for (int dz = -ring; dz <= ring; ++dz) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
            Eigen::Vector3i idx = c + Eigen::Vector3i(dx, dy, dz);
            if ((idx.array() < 0).any() || (idx.array() >= dims.array()).any()) continue;
            any_cell = true;
            auto it = cells.find(key(idx));
            if (it == cells.end()) continue;
            for (int i : it->second)
              best = std::min(best, (P.row(i) - q).norm());
          }
        }
      }
      if (!any_cell && ring > 0 && std::isfinite(best)) break;
    }
    return best;
  }
};

}  // namespace detail

// One-sided sup distance sup_{a in A} d(a, B), grid-accelerated and exact.
inline double directed_hausdorff(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() == 0 || B.rows() == 0)
    throw ValidationError("hausdorff distance of an empty point set");
  detail::PointGrid grid(B);
  double worst = 0.0;
  for (int i = 0; i < A.rows(); ++i)
    worst = std::max(worst, grid.nearest_distance(A.row(i)));
  return worst;
}

inline double hausdorff_distance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return std::max(directed_hausdorff(A, B), directed_hausdorff(B, A));
}

// Quadratic-time reference; the accelerated path must match it exactly.
inline double hausdorff_distance_brute(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() == 0 || B.rows() == 0)
    throw ValidationError("hausdorff distance of an empty point set");
  auto directed = [](const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    double worst = 0.0;
    for (int i = 0; i < X.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < Y.rows(); ++j)
        best = std::min(best, (X.row(i) - Y.row(j)).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(A, B), directed(B, A));
}

}  // namespace pinchlab
