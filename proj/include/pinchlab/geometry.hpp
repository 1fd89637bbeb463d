#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pinchlab/laplacian.hpp"
#include "pinchlab/mesh.hpp"

namespace pinchlab {

// Area-weighted barycenter using the lumped vertex areas.
inline Eigen::Vector3d center_of_mass(const TriangleMesh& mesh) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
    c += mesh.vertex_area[i] * mesh.V.row(i).transpose();
  return c / mesh.total_area;
}

// Mean curvature vector (L X)_i / (2 A_i); kept for the normal-consistency
// diagnostic, the estimates only ever use its magnitude.
inline Eigen::MatrixXd mean_curvature_vector(const TriangleMesh& mesh) {
  Eigen::SparseMatrix<double> L = cotangent_stiffness(mesh);
  Eigen::MatrixXd HV = L * mesh.V;
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
    HV.row(i) /= 2.0 * mesh.vertex_area[i];
  return HV;
}

// |H| per vertex, normalized so the round unit sphere yields 1.
inline VertexField mean_curvature(const TriangleMesh& mesh) {
  Eigen::MatrixXd HV = mean_curvature_vector(mesh);
  return make_field(mesh, HV.rowwise().norm());
}

// Fraction of vertices whose mean-curvature vector points against the
// outward vertex normal; near 0 for convex-ish shapes, diagnostic only.
inline double normal_consistency(const TriangleMesh& mesh) {
  Eigen::MatrixXd HV = mean_curvature_vector(mesh);
  Eigen::Index flipped = 0;
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
    if (HV.row(i).dot(mesh.vertex_normal.row(i)) < 0.0) ++flipped;
  return static_cast<double>(flipped) / static_cast<double>(mesh.n_vertices());
}

// Gauss curvature from the angle defect over the lumped area.
inline VertexField gauss_curvature(const TriangleMesh& mesh) {
  Eigen::VectorXd defect = Eigen::VectorXd::Constant(mesh.n_vertices(), 2.0 * kPi);
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) {
    for (int c = 0; c < 3; ++c) {
      Eigen::Vector3d pc = mesh.V.row(mesh.F(f, c));
      Eigen::Vector3d pa = mesh.V.row(mesh.F(f, (c + 1) % 3));
      Eigen::Vector3d pb = mesh.V.row(mesh.F(f, (c + 2) % 3));
      Eigen::Vector3d u = pa - pc, v = pb - pc;
      defect[mesh.F(f, c)] -= std::atan2(u.cross(v).norm(), u.dot(v));
    }
  }
  return make_field(mesh, defect.cwiseQuotient(mesh.vertex_area));
}

// Sum of angle defects; 2 pi chi(M) for any closed mesh.
inline double total_angle_defect(const TriangleMesh& mesh) {
  VertexField K = gauss_curvature(mesh);
  double total = 0.0;
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
    total += K.values[i] * mesh.vertex_area[i];
  return total;
}

struct SecondFormDiagnostics {
  Eigen::Index clamped_vertices = 0;  // radicand 4H^2 - 2K < 0
};

// |B| from the m = 2 identity |B|^2 = 4H^2 - 2K; negative radicands are
// clamped to zero and tallied.
inline VertexField second_form_norm(const TriangleMesh& mesh,
                                    SecondFormDiagnostics* diagnostics = nullptr) {
  VertexField H = mean_curvature(mesh);
  VertexField K = gauss_curvature(mesh);
  Eigen::VectorXd B(mesh.n_vertices());
  Eigen::Index clamped = 0;
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i) {
    double radicand = 4.0 * H.values[i] * H.values[i] - 2.0 * K.values[i];
    if (radicand < 0.0) {
      radicand = 0.0;
      ++clamped;
    }
    B[i] = std::sqrt(radicand);
  }
  if (diagnostics) diagnostics->clamped_vertices = clamped;
  return make_field(mesh, std::move(B));
}

// Normalized L^p norm ( (1/v_M) \int |f|^p )^{1/p}; p = inf gives the max.
inline double lp_norm(const VertexField& field, double p, const TriangleMesh& mesh) {
  check_binding(field, mesh);
  if (std::isinf(p)) return field.values.cwiseAbs().maxCoeff();
  if (!(p >= 1.0)) throw ValidationError("lp_norm requires p >= 1 or p = inf");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
    acc += mesh.vertex_area[i] * std::pow(std::abs(field.values[i]), p);
  return std::pow(acc / mesh.total_area, 1.0 / p);
}

// Area fraction outside the annulus A_eta around the comparison sphere
// of radius 1/||H||_2 centered at the center of mass.
inline double annulus_volume_fraction(const TriangleMesh& mesh, double eta) {
  VertexField H = mean_curvature(mesh);
  double h2 = lp_norm(H, 2.0, mesh);
  if (!(h2 > 0.0)) throw ValidationError("annulus requires ||H||_2 > 0");
  const double radius = 1.0 / h2;
  Eigen::Vector3d xbar = center_of_mass(mesh);
  double outside = 0.0;
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i) {
    double d = (mesh.V.row(i).transpose() - xbar).norm();
    if (std::abs(d - radius) > eta * radius) outside += mesh.vertex_area[i];
  }
  return outside / mesh.total_area;
}

struct DensitySample {
  double mesh_fraction = 0.0;  // area fraction of M inside B_x(r/||H||_2)
  double cap_fraction = 0.0;   // analytic sphere-cap fraction, min(r^2/4, 1)
};

// Density comparison at a point x of the comparison sphere S_M, at relative
// scale r. The cap fraction follows from the cap height h = r^2/2 at chord
// radius r on the unit 2-sphere.
inline DensitySample ball_density_profile(const TriangleMesh& mesh, const Eigen::Vector3d& x,
                                          double r) {
  if (!(r > 0.0)) throw ValidationError("ball_density_profile requires r > 0");
  VertexField H = mean_curvature(mesh);
  double h2 = lp_norm(H, 2.0, mesh);
  if (!(h2 > 0.0)) throw ValidationError("ball_density_profile requires ||H||_2 > 0");
  const double radius = 1.0 / h2;
  Eigen::Vector3d xbar = center_of_mass(mesh);
  if (std::abs((x - xbar).norm() - radius) > 0.05 * radius)
    throw ValidationError("sample point is not on the comparison sphere S_M");
  const double ball = r * radius;
  double inside = 0.0;
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
    if ((mesh.V.row(i).transpose() - x).norm() <= ball) inside += mesh.vertex_area[i];
  DensitySample out;
  out.mesh_fraction = inside / mesh.total_area;
  out.cap_fraction = std::min(r * r / 4.0, 1.0);
  return out;
}

// inradius / circumradius of the worst triangle; 1/2 for equilateral.
inline double min_triangle_quality(const TriangleMesh& mesh) {
  double worst = std::numeric_limits<double>::infinity();
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) {
    Eigen::Vector3d p0 = mesh.V.row(mesh.F(f, 0));
    Eigen::Vector3d p1 = mesh.V.row(mesh.F(f, 1));
    Eigen::Vector3d p2 = mesh.V.row(mesh.F(f, 2));
    double a = (p1 - p2).norm(), b = (p2 - p0).norm(), c = (p0 - p1).norm();
    double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    double s = 0.5 * (a + b + c);
    double inradius = area / s;
    double circumradius = a * b * c / (4.0 * area);
    worst = std::min(worst, inradius / circumradius);
  }
  return worst;
}

// Integral of |f|^p over the mesh (not normalized), for curvature budgets.
inline double integral_pow(const VertexField& field, double p, const TriangleMesh& mesh) {
  check_binding(field, mesh);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
    acc += mesh.vertex_area[i] * std::pow(std::abs(field.values[i]), p);
  return acc;
}

inline TriangleMesh scaled(const TriangleMesh& mesh, double s) {
  return make_mesh(mesh.V * s, mesh.F, mesh.allow_multiple_components);
}

inline TriangleMesh transformed(const TriangleMesh& mesh, const Eigen::Matrix3d& R,
                                const Eigen::Vector3d& t) {
  Eigen::MatrixXd V = mesh.V * R.transpose();
  V.rowwise() += t.transpose();
  return make_mesh(std::move(V), mesh.F, mesh.allow_multiple_components);
}

}  // namespace pinchlab
