#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cmath>
#include <vector>

#include "pinchlab/mesh.hpp"

namespace pinchlab {

// Cotangent stiffness matrix: symmetric PSD, zero row sums. x^T L x is the
// P1 Dirichlet energy of x over the mesh.
inline Eigen::SparseMatrix<double> cotangent_stiffness(const TriangleMesh& mesh) {
  using Triplet = Eigen::Triplet<double>;
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.n_faces()) * 12);
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) {
    const int i[3] = {mesh.F(f, 0), mesh.F(f, 1), mesh.F(f, 2)};
    Eigen::Vector3d p[3] = {mesh.V.row(i[0]), mesh.V.row(i[1]), mesh.V.row(i[2])};
    double area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).norm();
    if (!(area > 0.0))
      throw NumericsError("degenerate face " + std::to_string(f) +
                          " in stiffness assembly");
    for (int c = 0; c < 3; ++c) {
      // cotangent at corner c weights the opposite edge (a, b)
      int a = (c + 1) % 3, b = (c + 2) % 3;
      Eigen::Vector3d u = p[a] - p[c], v = p[b] - p[c];
      double w = 0.5 * u.dot(v) / (2.0 * area);  // cot / 2
      triplets.emplace_back(i[a], i[b], -w);
      triplets.emplace_back(i[b], i[a], -w);
      triplets.emplace_back(i[a], i[a], w);
      triplets.emplace_back(i[b], i[b], w);
    }
  }
  Eigen::SparseMatrix<double> L(mesh.n_vertices(), mesh.n_vertices());
  L.setFromTriplets(triplets.begin(), triplets.end());
  return L;
}

// Diagonal lumped mass; entries are the one-third vertex areas and sum to v_M.
inline Eigen::VectorXd lumped_mass(const TriangleMesh& mesh) {
  return mesh.vertex_area;
}

}  // namespace pinchlab
