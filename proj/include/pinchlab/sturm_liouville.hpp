#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cmath>
#include <vector>

#include "pinchlab/core.hpp"
#include "pinchlab/profile.hpp"
#include "pinchlab/spectrum.hpp"

namespace pinchlab {

// Tentacle operator P(f) = -f'' - (m-1)(c'/c) f' on [0, l], Dirichlet at 0
// and Neumann at l. Solved in the self-adjoint weighted form
// -(c^{m-1} f')' = nu c^{m-1} f.
struct SturmLiouvilleProblem {
  Profile profile = Profile::constant(0.1, 1.0);
  int m = 2;
};

inline SturmLiouvilleProblem make_sturm_liouville(Profile profile, int m) {
  if (m < 2) throw ValidationError("Sturm-Liouville dimension m must be >= 2");
  return SturmLiouvilleProblem{std::move(profile), m};
}

// k smallest eigenvalues on n_nodes uniform nodes, P1 elements with midpoint
// weight and lumped mass; the Dirichlet row at 0 is eliminated, the Neumann
// condition at l is natural.
inline SpectrumResult sl_spectrum(const SturmLiouvilleProblem& problem, int k,
                                  int n_nodes = 2000, const EigenOptions& opts = {}) {
  if (n_nodes < 16) throw ValidationError("Sturm-Liouville grid needs at least 16 nodes");
  const double l = problem.profile.length();
  const int n_cells = n_nodes - 1;
  const double h = l / n_cells;
  const int n = n_nodes - 1;  // unknowns after removing the Dirichlet node

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * 3);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(n);
  for (int cell = 0; cell < n_cells; ++cell) {
    double t_mid = (cell + 0.5) * h;
    double weight = std::pow(problem.profile.value(t_mid), problem.m - 1);
    double kw = weight / h;
    double mw = 0.5 * weight * h;
    int a = cell - 1, b = cell;  // global node index minus 1 (node 0 eliminated)
    if (a >= 0) {
      triplets.emplace_back(a, a, kw);
      triplets.emplace_back(a, b, -kw);
      triplets.emplace_back(b, a, -kw);
      mass[a] += mw;
    }
    triplets.emplace_back(b, b, kw);
    mass[b] += mw;
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(triplets.begin(), triplets.end());
  return smallest_eigenpairs(K, mass, k, opts);
}

}  // namespace pinchlab
