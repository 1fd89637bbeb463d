#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pinchlab/core.hpp"
#include "pinchlab/laplacian.hpp"
#include "pinchlab/mesh.hpp"

namespace pinchlab {

// Ascending eigenvalues of a generalized pencil with per-pair residuals and
// multiplicity clusters.
struct SpectrumResult {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;                 // ||L f - lambda M f|| / ||M f||
  std::vector<std::vector<int>> clusters;        // indices grouped by relative gap
  double zero_threshold = 0.0;

  int zero_multiplicity() const {
    int k = 0;
    for (double ev : eigenvalues)
      if (ev <= zero_threshold) ++k;
    return k;
  }
  // smallest eigenvalue above the zero threshold
  double first_nonzero() const {
    for (double ev : eigenvalues)
      if (ev > zero_threshold) return ev;
    throw NumericsError("no nonzero eigenvalue in the computed window");
  }
};

struct EigenOptions {
  double residual_tol = 1e-9;
  int max_iterations = 400;
  unsigned seed = 0x5eed;
  double cluster_gap = 1e-3;  // relative gap for multiplicity clustering
};

namespace detail {

inline std::vector<std::vector<int>> cluster_eigenvalues(const std::vector<double>& ev,
                                                         double rel_gap, double floor_scale) {
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < static_cast<int>(ev.size()); ++i) {
    if (!clusters.empty()) {
      double prev = ev[clusters.back().back()];
      double scale = std::max({std::abs(ev[i]), std::abs(prev), floor_scale});
      if (ev[i] - prev <= rel_gap * scale) {
        clusters.back().push_back(i);
        continue;
      }
    }
    clusters.push_back({i});
  }
  return clusters;
}

}  // namespace detail

// k smallest eigenpairs of L f = lambda M f (L sparse symmetric PSD, M diagonal
// positive) by shift-invert subspace iteration with Rayleigh-Ritz projection.
// Deterministic for fixed options.
inline SpectrumResult smallest_eigenpairs(const Eigen::SparseMatrix<double>& L,
                                          const Eigen::VectorXd& M, int k,
                                          const EigenOptions& opts = {}) {
  const Eigen::Index n = L.rows();
  if (k < 1) throw ValidationError("eigenvalue count k must be >= 1");
  if (n != M.size()) throw ValidationError("stiffness and mass sizes differ");
  if (k > n) throw ValidationError("requested more eigenvalues than unknowns");

  // Gershgorin-flavored spectral scale: mean diagonal ratio.
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale += L.coeff(i, i) / M[i];
  scale /= static_cast<double>(n);
  const double sigma = -1e-3 * scale;  // keeps L - sigma M SPD despite the kernel

  Eigen::SparseMatrix<double> shifted = L;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma * M[i];
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw NumericsError("factorization of the shifted stiffness failed");

  const int p = static_cast<int>(std::min<Eigen::Index>(n, std::max(2 * k + 4, k + 8)));
  std::mt19937 rng(opts.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = unit(rng);

  Eigen::VectorXd ritz = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd residuals = Eigen::VectorXd::Constant(p, 1.0);
  for (int iteration = 0; iteration < opts.max_iterations; ++iteration) {
    Eigen::MatrixXd Z = solver.solve(M.asDiagonal() * X);
    // re-orthonormalize so the projected pencil stays well conditioned
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Z);
    Z = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    // Rayleigh-Ritz on span(Z)
    Eigen::MatrixXd A = Z.transpose() * (L * Z);
    Eigen::MatrixXd B = Z.transpose() * (M.asDiagonal() * Z);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> small(A, B);
    if (small.info() != Eigen::Success)
      throw NumericsError("dense Rayleigh-Ritz projection failed");
    X = Z * small.eigenvectors();
    ritz = small.eigenvalues();

    bool converged = true;
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd x = X.col(j);
      Eigen::VectorXd Mx = M.asDiagonal() * x;
      residuals[j] = (L * x - ritz[j] * Mx).norm() / Mx.norm();
      if (residuals[j] > opts.residual_tol) converged = false;
    }
    if (converged) break;
    if (iteration + 1 == opts.max_iterations) {
      std::ostringstream msg;
      msg << "eigensolver did not reach residual tolerance " << opts.residual_tol
          << " after " << opts.max_iterations << " iterations; residuals:";
      for (int j = 0; j < k; ++j) msg << " " << residuals[j];
      throw NumericsError(msg.str());
    }
  }

  SpectrumResult out;
  out.zero_threshold = 1e-8 * scale;
  out.eigenvalues.assign(ritz.data(), ritz.data() + k);
  out.residuals.assign(residuals.data(), residuals.data() + k);
  out.clusters = detail::cluster_eigenvalues(out.eigenvalues, opts.cluster_gap,
                                             out.zero_threshold);
  return out;
}

// k smallest Laplace eigenvalues of a mesh. The zero eigenvalue must show up
// with multiplicity equal to the connected-component count.
inline SpectrumResult mesh_spectrum(const TriangleMesh& mesh, int k,
                                    const EigenOptions& opts = {}) {
  SpectrumResult spec =
      smallest_eigenpairs(cotangent_stiffness(mesh), lumped_mass(mesh), k, opts);
  if (k >= mesh.component_count && spec.zero_multiplicity() != mesh.component_count)
    throw NumericsError("zero eigenvalue multiplicity " +
                        std::to_string(spec.zero_multiplicity()) +
                        " does not match component count " +
                        std::to_string(mesh.component_count));
  return spec;
}

inline double lambda1(const TriangleMesh& mesh, const EigenOptions& opts = {}) {
  return mesh_spectrum(mesh, mesh.component_count + 3, opts).first_nonzero();
}

// Predicted eps -> 0 spectrum of the glued manifold: merge of the base
// spectrum and the tentacle operator spectrum, with multiplicities.
inline SpectrumResult limit_spectrum(const SpectrumResult& base, const SpectrumResult& tube,
                                     int k, double cluster_gap = 1e-3) {
  SpectrumResult out;
  out.zero_threshold = std::max(base.zero_threshold, tube.zero_threshold);
  std::size_t i = 0, j = 0;
  while (static_cast<int>(out.eigenvalues.size()) < k &&
         (i < base.eigenvalues.size() || j < tube.eigenvalues.size())) {
    bool take_base = j >= tube.eigenvalues.size() ||
                     (i < base.eigenvalues.size() && base.eigenvalues[i] <= tube.eigenvalues[j]);
    if (take_base) {
      out.eigenvalues.push_back(base.eigenvalues[i]);
      out.residuals.push_back(base.residuals.empty() ? 0.0 : base.residuals[i]);
      ++i;
    } else {
      out.eigenvalues.push_back(tube.eigenvalues[j]);
      out.residuals.push_back(tube.residuals.empty() ? 0.0 : tube.residuals[j]);
      ++j;
    }
  }
  out.clusters =
      detail::cluster_eigenvalues(out.eigenvalues, cluster_gap, out.zero_threshold);
  return out;
}

}  // namespace pinchlab
