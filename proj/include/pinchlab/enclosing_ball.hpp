#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "pinchlab/core.hpp"
#include "pinchlab/mesh.hpp"

namespace pinchlab {

// Minimum enclosing ball of a vertex set; the support holds at most 4
// indices whose own enclosing ball already determines this one.
struct EnclosingBall {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
  std::vector<int> support;
};

namespace detail {

// Exact ball through 1..4 affinely independent points (smallest such ball
// for <= 3 points: through the points with center in their affine hull).
inline EnclosingBall circumball(const Eigen::MatrixXd& P, const std::vector<int>& ids) {
  EnclosingBall ball;
  ball.support = ids;
  const std::size_t k = ids.size();
  if (k == 0) {
    ball.radius = -1.0;  // empty marker: contains nothing
    return ball;
  }
  Eigen::Vector3d p0 = P.row(ids[0]);
  if (k == 1) {
    ball.center = p0;
    ball.radius = 0.0;
    return ball;
  }
  // Solve for the center in the affine hull: (p_i - p0) . c' = |p_i - p0|^2 / 2
  Eigen::MatrixXd A(k - 1, 3);
  Eigen::VectorXd rhs(k - 1);
  for (std::size_t i = 1; i < k; ++i) {
    Eigen::Vector3d d = Eigen::Vector3d(P.row(ids[i])) - p0;
    A.row(i - 1) = d.transpose();
    rhs[i - 1] = 0.5 * d.squaredNorm();
  }
  Eigen::Vector3d offset = A.colPivHouseholderQr().solve(rhs);
  ball.center = p0 + offset;
  ball.radius = 0.0;
  for (int id : ids) ball.radius = std::max(ball.radius, (Eigen::Vector3d(P.row(id)) - ball.center).norm());
  return ball;
}

inline bool ball_contains(const EnclosingBall& ball, const Eigen::Vector3d& p, double slack) {
  if (ball.radius < 0.0) return false;
  return (p - ball.center).norm() <= ball.radius + slack;
}

inline EnclosingBall welzl_recurse(const Eigen::MatrixXd& P, std::vector<int>& order, int n,
                                   std::vector<int>& boundary, double slack) {
  if (n == 0 || boundary.size() == 4) return circumball(P, boundary);
  int p = order[n - 1];
  EnclosingBall ball = welzl_recurse(P, order, n - 1, boundary, slack);
  if (ball_contains(ball, P.row(p), slack)) return ball;
  boundary.push_back(p);
  ball = welzl_recurse(P, order, n - 1, boundary, slack);
  boundary.pop_back();
  // move-to-front keeps recursion depth in check on degenerate inputs
  std::rotate(order.begin(), order.begin() + (n - 1), order.begin() + n);
  return ball;
}

}  // namespace detail

// Randomized incremental minimum enclosing ball (Welzl, move-to-front).
// Deterministic for a fixed seed. The returned support is irredundant:
// dropping any member shrinks the ball of the support.
inline EnclosingBall min_enclosing_ball(const Eigen::MatrixXd& points,
                                        unsigned seed = 20146u) {
  if (points.rows() == 0) throw ValidationError("enclosing ball of an empty point set");
  const int n = static_cast<int>(points.rows());
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, points.row(i).norm());
  const double slack = 1e-13 * std::max(scale, 1.0);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<int> boundary;
  EnclosingBall ball = detail::welzl_recurse(points, order, n, boundary, slack);

  // prune redundant support members (degenerate symmetric inputs can leave
  // a point that the remaining support already covers)
  bool pruned = true;
  while (pruned && ball.support.size() > 1) {
    pruned = false;
    for (std::size_t drop = 0; drop < ball.support.size(); ++drop) {
      std::vector<int> rest;
      for (std::size_t i = 0; i < ball.support.size(); ++i)
        if (i != drop) rest.push_back(ball.support[i]);
      EnclosingBall candidate = detail::circumball(points, rest);
      if (candidate.radius <= ball.radius + slack &&
          detail::ball_contains(candidate, points.row(ball.support[drop]), slack)) {
        ball = candidate;
        pruned = true;
        break;
      }
    }
  }
  std::sort(ball.support.begin(), ball.support.end());
  return ball;
}

inline EnclosingBall extrinsic_radius(const TriangleMesh& mesh, unsigned seed = 20146u) {
  return min_enclosing_ball(mesh.V, seed);
}

}  // namespace pinchlab
