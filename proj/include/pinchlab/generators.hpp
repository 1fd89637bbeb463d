#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pinchlab/core.hpp"
#include "pinchlab/mesh.hpp"
#include "pinchlab/profile.hpp"

namespace pinchlab {

struct GeneratorConfig {
  int subdivision = 4;             // icosphere refinement level of the base sphere
  int ring_vertices = 16;          // tube ring count at the minimum profile value
  double step_factor = 2.0;        // longitudinal step as a multiple of the ring edge
  double elbow_radius_factor = 3.0;   // elbow blend radius in units of epsilon
  double clearance_factor = 3.0;      // required tube clearance in units of epsilon
  double blend_inner = 1.0 / 3.0;  // flatten cutoff support [inner, outer] in units of eps
  double blend_outer = 2.0 / 3.0;
};

// Flat-disk collar left by flatten_near_point; attach_tentacle glues into it.
struct Collar {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d e1 = Eigen::Vector3d::UnitX();
  Eigen::Vector3d e2 = Eigen::Vector3d::UnitY();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double epsilon = 0.0;
  double epsilon0 = 0.0;
};

struct FlattenResult {
  TriangleMesh mesh;
  Collar collar;
};

// Polyline tentacle: straight segments chained tip-to-tip, the first leaving
// the base surface along the outward normal at root. Radius eps * c(t).
struct TentacleSpec {
  Eigen::Vector3d root = Eigen::Vector3d::UnitZ();
  std::vector<Eigen::Vector3d> segments;  // successive endpoints of the chain
  double epsilon = 0.05;
  std::optional<Profile> profile;         // defaults to c = 1/10 over the tree length
  double flatten_radius = 0.0;            // eps0; defaults to epsilon
};

inline double tentacle_length(const TentacleSpec& spec) {
  double total = 0.0;
  Eigen::Vector3d prev = spec.root;
  for (const auto& p : spec.segments) {
    total += (p - prev).norm();
    prev = p;
  }
  return total;
}

inline TentacleSpec make_tentacle(Eigen::Vector3d root, std::vector<Eigen::Vector3d> segments,
                                  double epsilon) {
  TentacleSpec spec;
  spec.root = std::move(root);
  spec.segments = std::move(segments);
  spec.epsilon = epsilon;
  return spec;
}

namespace detail {

struct MeshBuilder {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> faces;

  int add_vertex(const Eigen::Vector3d& p) {
    vertices.push_back(p);
    return static_cast<int>(vertices.size()) - 1;
  }
  void add_face(int a, int b, int c) { faces.emplace_back(a, b, c); }

  TriangleMesh finish(bool allow_multi = false) const {
    Eigen::MatrixXd V(static_cast<Eigen::Index>(vertices.size()), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = vertices[i];
    Eigen::MatrixXi F(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = faces[i];
    return make_mesh(std::move(V), std::move(F), allow_multi);
  }
};

// Bridge two closed rings (both CCW around the shared axis, `upper` farther
// along it) with a greedy shortest-diagonal strip.
inline void bridge_rings(MeshBuilder& builder, const std::vector<int>& upper,
                         const std::vector<int>& lower) {
  const int na = static_cast<int>(upper.size()), nb = static_cast<int>(lower.size());
  if (na < 3 || nb < 3) throw ValidationError("ring bridge needs at least 3 vertices per ring");
  auto pos = [&](int id) { return builder.vertices[static_cast<std::size_t>(id)]; };

  // align start vertices at the closest pair
  int j0 = 0;
  {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < nb; ++j) {
      double d = (pos(upper[0]) - pos(lower[j])).norm();
      if (d < best) {
        best = d;
        j0 = j;
      }
    }
  }
  int ai = 0, bj = 0;  // advanced counts
  while (ai < na || bj < nb) {
    int a_cur = upper[ai % na];
    int a_next = upper[(ai + 1) % na];
    int b_cur = lower[(j0 + bj) % nb];
    int b_next = lower[(j0 + bj + 1) % nb];
    bool advance_a;
    if (ai == na) {
      advance_a = false;
    } else if (bj == nb) {
      advance_a = true;
    } else {
      advance_a = (pos(a_next) - pos(b_cur)).norm() <= (pos(b_next) - pos(a_cur)).norm();
    }
    if (advance_a) {
      builder.add_face(a_cur, b_cur, a_next);
      ++ai;
    } else {
      builder.add_face(a_cur, b_cur, b_next);
      ++bj;
    }
  }
}

// Fan from a ring (CCW around +axis) to an apex farther along the axis.
inline void fan_to_apex(MeshBuilder& builder, const std::vector<int>& ring, int apex) {
  const int n = static_cast<int>(ring.size());
  for (int i = 0; i < n; ++i) builder.add_face(ring[i], ring[(i + 1) % n], apex);
}

// Fan from a ring to an apex on the other side (below), reversed winding.
inline void fan_to_base(MeshBuilder& builder, const std::vector<int>& ring, int apex) {
  const int n = static_cast<int>(ring.size());
  for (int i = 0; i < n; ++i) builder.add_face(ring[(i + 1) % n], ring[i], apex);
}

inline double signed_volume(const TriangleMesh& mesh) {
  double vol = 0.0;
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) {
    Eigen::Vector3d a = mesh.V.row(mesh.F(f, 0));
    Eigen::Vector3d b = mesh.V.row(mesh.F(f, 1));
    Eigen::Vector3d c = mesh.V.row(mesh.F(f, 2));
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Basic shapes

inline TriangleMesh icosphere(int subdivisions, double radius = 1.0) {
  if (subdivisions < 0) throw ValidationError("icosphere subdivision must be >= 0");
  if (!(radius > 0.0)) throw ValidationError("icosphere radius must be positive");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<Eigen::Vector3i> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& v : verts) v = v.normalized() * radius;

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::Vector3d m = (0.5 * (verts[a] + verts[b])).normalized() * radius;
      verts.push_back(m);
      int id = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Eigen::Vector3i> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }

  detail::MeshBuilder builder;
  builder.vertices = std::move(verts);
  builder.faces = std::move(faces);
  return builder.finish();
}

inline TriangleMesh ellipsoid(double a, double b, double c, int subdivisions) {
  if (!(a > 0.0 && b > 0.0 && c > 0.0))
    throw ValidationError("ellipsoid axes must be positive");
  TriangleMesh sphere = icosphere(subdivisions, 1.0);
  Eigen::MatrixXd V = sphere.V;
  V.col(0) *= a;
  V.col(1) *= b;
  V.col(2) *= c;
  return make_mesh(std::move(V), sphere.F);
}

// Cassini-oval dumbbell of revolution: two unit-scale bulbs joined by a neck
// of the requested radius, closed smoothly at the poles.
inline TriangleMesh dumbbell(double neck_radius, int subdivisions) {
  if (!(neck_radius > 0.0 && neck_radius < 0.95))
    throw ValidationError("dumbbell neck radius must lie in (0, 0.95)");
  const double b2 = 1.0 + neck_radius * neck_radius;  // Cassini b^2 with a = 1
  const double z_max = std::sqrt(1.0 + b2);
  auto rho = [&](double z) {
    double s = std::sqrt(4.0 * z * z + b2 * b2);
    return std::sqrt(std::max(0.0, -z * z - 1.0 + s));
  };
  const int n_phi = std::max(12, 8 << std::max(0, subdivisions));
  const double step = 2.0 * (2.0 * kPi * neck_radius * 0.75) / n_phi;  // target arc step

  // ring stations marched in z, spacing tied to the local circumference
  std::vector<double> stations;
  double z = -z_max;
  {  // first ring where the radius matches the step scale
    double lo = -z_max, hi = 0.0;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (rho(mid) < 0.7 * step ? lo : hi) = mid;
    }
    z = hi;
  }
  while (z < z_max) {
    stations.push_back(z);
    double h = 1e-6 * z_max;
    double drho = (rho(std::min(z + h, z_max)) - rho(std::max(z - h, -z_max))) / (2.0 * h);
    double dz = step / std::sqrt(1.0 + drho * drho);
    double local = std::max(rho(z), 0.25 * step);
    dz = std::min(dz, std::max(0.5 * local, 0.02 * z_max));
    z += dz;
    if (rho(z) < 0.7 * step) break;  // stop before the far pole cap
  }
  if (stations.size() < 8) throw ValidationError("dumbbell resolution too low");

  detail::MeshBuilder builder;
  std::vector<int> prev_ring;
  int south = builder.add_vertex({0.0, 0.0, -z_max});
  for (std::size_t s = 0; s < stations.size(); ++s) {
    std::vector<int> ring(n_phi);
    for (int i = 0; i < n_phi; ++i) {
      double theta = 2.0 * kPi * i / n_phi;
      ring[i] = builder.add_vertex(
          {rho(stations[s]) * std::cos(theta), rho(stations[s]) * std::sin(theta), stations[s]});
    }
    if (s == 0)
      detail::fan_to_base(builder, ring, south);
    else
      detail::bridge_rings(builder, ring, prev_ring);
    prev_ring = std::move(ring);
  }
  int north = builder.add_vertex({0.0, 0.0, z_max});
  detail::fan_to_apex(builder, prev_ring, north);
  return builder.finish();
}

// ---------------------------------------------------------------------------
// Local refinement (Rivara longest-edge propagation), used to grade the base
// sphere down to tube resolution around tentacle roots.

using ProjectFn = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;
using TargetEdgeFn = std::function<double(const Eigen::Vector3d&)>;

namespace detail {

struct RefineMesh {
  std::vector<Eigen::Vector3d> V;
  std::vector<Eigen::Vector3i> F;
  std::vector<bool> alive;
  std::unordered_map<std::uint64_t, std::array<int, 2>> edge_faces;

  static std::uint64_t key(int a, int b) { return detail::edge_key(a, b); }

  void register_face(int f) {
    for (int e = 0; e < 3; ++e) {
      auto k = key(F[f][e], F[f][(e + 1) % 3]);
      auto& slot = edge_faces[k];
      if (slot[0] == 0 && slot[1] == 0 && !edge_faces.count(k)) slot = {-1, -1};
      (void)0;
    }
  }
};

}  // namespace detail

// Refine until every face's longest edge is below target_edge(centroid).
// New midpoints pass through `project` (e.g. back onto the sphere).
inline TriangleMesh refine_mesh_region(const TriangleMesh& mesh, const TargetEdgeFn& target_edge,
                                       const ProjectFn& project = nullptr) {
  std::vector<Eigen::Vector3d> V(mesh.n_vertices());
  for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i) V[i] = mesh.V.row(i);
  std::vector<Eigen::Vector3i> F(mesh.n_faces());
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) F[f] = mesh.F.row(f);
  std::vector<bool> alive(F.size(), true);

  std::unordered_map<std::uint64_t, std::array<int, 2>> edge_faces;
  auto ekey = [](int a, int b) { return detail::edge_key(a, b); };
  auto attach_face = [&](int f) {
    for (int e = 0; e < 3; ++e) {
      auto k = ekey(F[f][e], F[f][(e + 1) % 3]);
      auto it = edge_faces.find(k);
      if (it == edge_faces.end())
        edge_faces[k] = {f, -1};
      else if (it->second[0] == -1)
        it->second[0] = f;
      else
        it->second[1] = f;
    }
  };
  auto detach_face = [&](int f) {
    for (int e = 0; e < 3; ++e) {
      auto k = ekey(F[f][e], F[f][(e + 1) % 3]);
      auto it = edge_faces.find(k);
      if (it == edge_faces.end()) continue;
      if (it->second[0] == f) it->second[0] = it->second[1];
      if (it->second[1] == f || it->second[0] == f) it->second[1] = -1;
      if (it->second[0] == -1) edge_faces.erase(it);
    }
  };
  for (std::size_t f = 0; f < F.size(); ++f) attach_face(static_cast<int>(f));

  auto longest_edge = [&](int f) -> std::pair<int, int> {
    double best = -1.0;
    std::pair<int, int> edge{F[f][0], F[f][1]};
    for (int e = 0; e < 3; ++e) {
      int a = F[f][e], b = F[f][(e + 1) % 3];
      double len = (V[a] - V[b]).squaredNorm();
      if (len > best) {
        best = len;
        edge = {a, b};
      }
    }
    return edge;
  };
  auto neighbor_across = [&](int f, std::pair<int, int> edge) -> int {
    auto it = edge_faces.find(ekey(edge.first, edge.second));
    if (it == edge_faces.end()) return -1;
    return it->second[0] == f ? it->second[1] : it->second[0];
  };

  std::vector<int> work;
  auto split_pair = [&](int f, std::pair<int, int> edge) {
    int g = neighbor_across(f, edge);
    Eigen::Vector3d mid = 0.5 * (V[edge.first] + V[edge.second]);
    if (project) mid = project(mid);
    V.push_back(mid);
    int m = static_cast<int>(V.size()) - 1;
    auto split_one = [&](int t) {
      int a = edge.first, b = edge.second;
      int c = -1;
      for (int e = 0; e < 3; ++e) {
        int v = F[t][e];
        if (v != a && v != b) c = v;
      }
      // preserve winding: find the cyclic order of (a, b) within t
      int ia = 0;
      for (int e = 0; e < 3; ++e)
        if (F[t][e] == a) ia = e;
      bool forward = F[t][(ia + 1) % 3] == b;
      detach_face(t);
      alive[t] = false;
      auto emit = [&](int x, int y, int z) {
        F.push_back({x, y, z});
        alive.push_back(true);
        attach_face(static_cast<int>(F.size()) - 1);
        work.push_back(static_cast<int>(F.size()) - 1);
      };
      if (forward) {
        emit(a, m, c);
        emit(m, b, c);
      } else {
        emit(b, m, c);
        emit(m, a, c);
      }
    };
    split_one(f);
    if (g != -1) split_one(g);
  };

  auto refine_face = [&](int f0) {
    std::vector<int> stack = {f0};
    int guard = 0;
    while (!stack.empty()) {
      if (++guard > 1000000) throw NumericsError("refinement propagation did not terminate");
      int t = stack.back();
      if (!alive[t]) {
        stack.pop_back();
        continue;
      }
      auto edge = longest_edge(t);
      int g = neighbor_across(t, edge);
      if (g != -1 && alive[g]) {
        auto gedge = longest_edge(g);
        if (ekey(gedge.first, gedge.second) != ekey(edge.first, edge.second)) {
          stack.push_back(g);
          continue;
        }
      }
      split_pair(t, edge);
      stack.pop_back();
    }
  };

  for (std::size_t f = 0; f < F.size(); ++f) work.push_back(static_cast<int>(f));
  std::size_t cursor = 0;
  int guard = 0;
  while (cursor < work.size()) {
    if (++guard > 20000000) throw NumericsError("refinement did not terminate");
    int f = work[cursor++];
    if (f >= static_cast<int>(F.size()) || !alive[f]) continue;
    Eigen::Vector3d centroid = (V[F[f][0]] + V[F[f][1]] + V[F[f][2]]) / 3.0;
    auto edge = longest_edge(f);
    double len = (V[edge.first] - V[edge.second]).norm();
    if (len > target_edge(centroid)) refine_face(f);
  }

  detail::MeshBuilder builder;
  builder.vertices = std::move(V);
  for (std::size_t f = 0; f < F.size(); ++f)
    if (alive[f]) builder.faces.push_back(F[f]);
  return builder.finish(mesh.allow_multiple_components);
}

// ---------------------------------------------------------------------------
// Flattening (the f_eps reshaping)

namespace detail {

// Line-triangle intersection; returns the signed offset along dir.
inline bool line_hits_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                               const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                               const Eigen::Vector3d& c, double* offset) {
  Eigen::Vector3d e1 = b - a, e2 = c - a;
  Eigen::Vector3d p = dir.cross(e2);
  double det = e1.dot(p);
  if (std::abs(det) < 1e-30) return false;
  Eigen::Vector3d s = origin - a;
  double u = s.dot(p) / det;
  if (u < -1e-9 || u > 1.0 + 1e-9) return false;
  Eigen::Vector3d q = s.cross(e1);
  double v = dir.dot(q) / det;
  if (v < -1e-9 || u + v > 1.0 + 1e-9) return false;
  *offset = e2.dot(q) / det;
  return true;
}

}  // namespace detail

// Reshape the mesh around vertex x0: the graph height is resampled at the
// cutoff-shrunk tangent parameter, which flattens a disk of tangent radius
// eps*blend_inner onto the tangent plane and leaves everything beyond
// eps*blend_outer untouched.
inline FlattenResult flatten_near_point(const TriangleMesh& mesh, int x0, double epsilon,
                                        double epsilon0, const GeneratorConfig& config = {}) {
  if (x0 < 0 || x0 >= mesh.n_vertices()) throw ValidationError("flatten vertex out of range");
  if (!(epsilon > 0.0) || !(epsilon0 > 0.0))
    throw ValidationError("flatten scales must be positive");
  if (epsilon > 1.5 * epsilon0)
    throw ValidationError("flatten requires epsilon <= 3/2 epsilon0");

  Collar collar;
  collar.origin = mesh.V.row(x0);
  collar.normal = mesh.vertex_normal.row(x0);
  collar.e1 = collar.normal.unitOrthogonal();
  collar.e2 = collar.normal.cross(collar.e1);
  collar.epsilon = epsilon;
  collar.epsilon0 = epsilon0;

  // local patch used both for the resolution check and as the ray-cast target
  std::vector<char> in_patch(mesh.n_vertices(), 0);
  int region_count = 0;
  for (Eigen::Index v = 0; v < mesh.n_vertices(); ++v) {
    Eigen::Vector3d d = mesh.V.row(v).transpose() - collar.origin;
    double wx = d.dot(collar.e1), wy = d.dot(collar.e2), h = d.dot(collar.normal);
    double wr = std::hypot(wx, wy);
    if (wr <= 1.2 * epsilon0 && std::abs(h) <= 0.75 * epsilon0) {
      in_patch[v] = 1;
      if (wr <= epsilon0) ++region_count;
    }
  }
  double rings = std::sqrt(region_count / 3.6);
  if (rings < 8.0)
    throw ValidationError("mesh resolution too low for flattening: about " +
                          std::to_string(rings) + " vertex rings inside epsilon0, need 8");

  std::vector<std::array<Eigen::Vector3d, 3>> patch_faces;
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) {
    if (in_patch[mesh.F(f, 0)] && in_patch[mesh.F(f, 1)] && in_patch[mesh.F(f, 2)])
      patch_faces.push_back({mesh.V.row(mesh.F(f, 0)).transpose(),
                             mesh.V.row(mesh.F(f, 1)).transpose(),
                             mesh.V.row(mesh.F(f, 2)).transpose()});
  }

  auto graph_height = [&](double wx, double wy) {
    Eigen::Vector3d origin = collar.origin + wx * collar.e1 + wy * collar.e2;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (const auto& tri : patch_faces) {
      double offset;
      if (detail::line_hits_triangle(origin, collar.normal, tri[0], tri[1], tri[2], &offset)) {
        if (std::abs(offset) < std::abs(best)) {
          best = offset;
          found = true;
        }
      }
    }
    if (!found)
      throw ValidationError("flatten patch is not graphical over the tangent plane");
    return best;
  };

  const double inner = config.blend_inner * epsilon, outer = config.blend_outer * epsilon;
  Eigen::MatrixXd V = mesh.V;
  for (Eigen::Index v = 0; v < mesh.n_vertices(); ++v) {
    if (!in_patch[v]) continue;
    Eigen::Vector3d d = mesh.V.row(v).transpose() - collar.origin;
    double wx = d.dot(collar.e1), wy = d.dot(collar.e2);
    double wr = std::hypot(wx, wy);
    if (wr >= outer) continue;  // untouched, bitwise
    double height = 0.0;
    if (wr > inner) {
      double s = smoothstep_quintic((wr - inner) / (outer - inner));
      height = graph_height(s * wx, s * wy);
    }
    V.row(v) = (collar.origin + wx * collar.e1 + wy * collar.e2 + height * collar.normal)
                   .transpose();
  }

  FlattenResult out;
  out.mesh = make_mesh(std::move(V), mesh.F, mesh.allow_multiple_components);
  out.collar = collar;
  return out;
}

// ---------------------------------------------------------------------------
// Tentacle attachment

namespace detail {

struct PathStation {
  Eigen::Vector3d point;
  Eigen::Vector3d tangent;
  double arclength = 0.0;
};

inline double segment_distance(const Eigen::Vector3d& p1, const Eigen::Vector3d& q1,
                               const Eigen::Vector3d& p2, const Eigen::Vector3d& q2) {
  // closest distance between segments [p1,q1] and [p2,q2]
  Eigen::Vector3d d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= 1e-30 && e <= 1e-30) return r.norm();
  if (a <= 1e-30) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = d1.dot(r);
    if (e <= 1e-30) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2), denom = a * e - b * b;
      if (denom > 1e-30) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return (p1 + s * d1 - (p2 + t * d2)).norm();
}

// Sample the tentacle path: straight runs and circular elbow arcs, stations
// spaced about `step` apart, starting at arclength `s0` from the root.
inline std::vector<PathStation> sample_tentacle_path(const TentacleSpec& spec, double s0,
                                                     double s_end_trim, double step,
                                                     double elbow_radius) {
  std::vector<Eigen::Vector3d> pts = {spec.root};
  pts.insert(pts.end(), spec.segments.begin(), spec.segments.end());
  const int n_seg = static_cast<int>(pts.size()) - 1;

  struct Piece {  // straight or arc
    bool arc = false;
    Eigen::Vector3d a, b;          // straight endpoints
    Eigen::Vector3d center, u, v;  // arc: center + r(cos t u + sin t v)
    double radius = 0.0, angle = 0.0;
    double length() const { return arc ? radius * angle : (b - a).norm(); }
  };
  std::vector<Piece> pieces;
  Eigen::Vector3d cursor = pts[0];
  for (int i = 0; i < n_seg; ++i) {
    Eigen::Vector3d a = pts[i], b = pts[i + 1];
    Eigen::Vector3d dir = (b - a).normalized();
    double trim_end = 0.0;
    if (i + 1 < n_seg) {
      Eigen::Vector3d next_dir = (pts[i + 2] - pts[i + 1]).normalized();
      double cosang = std::clamp(dir.dot(next_dir), -1.0, 1.0);
      double angle = std::acos(cosang);
      if (angle > 1e-9) {
        double offset = elbow_radius * std::tan(0.5 * angle);
        trim_end = offset;
        Piece straight;
        straight.a = cursor;
        straight.b = b - offset * dir;
        if ((straight.b - straight.a).dot(dir) <= 0.0)
          throw ValidationError("tentacle segment too short for its elbow blend");
        pieces.push_back(straight);

        Piece arc;
        arc.arc = true;
        Eigen::Vector3d binormal = dir.cross(next_dir).normalized();
        Eigen::Vector3d inward = binormal.cross(dir);  // toward the arc center
        arc.center = straight.b + elbow_radius * inward;
        arc.u = -inward;
        arc.v = dir;
        arc.radius = elbow_radius;
        arc.angle = angle;
        pieces.push_back(arc);
        cursor = b + offset * next_dir;
      } else {
        Piece straight;
        straight.a = cursor;
        straight.b = b;
        pieces.push_back(straight);
        cursor = b;
      }
      (void)trim_end;
    } else {
      Piece straight;
      straight.a = cursor;
      straight.b = b;
      if ((straight.b - straight.a).norm() > 1e-12) pieces.push_back(straight);
      cursor = b;
    }
  }

  double total = 0.0;
  for (const auto& piece : pieces) total += piece.length();
  if (s_end_trim >= total)
    throw ValidationError("tentacle too short for its junction and cap");

  std::vector<PathStation> stations;
  double s_target = s0;
  double base = 0.0;
  for (const auto& piece : pieces) {
    double len = piece.length();
    while (s_target <= base + len + 1e-12 && s_target <= total - s_end_trim + 1e-12) {
      double local = s_target - base;
      PathStation st;
      if (!piece.arc) {
        Eigen::Vector3d dir = (piece.b - piece.a).normalized();
        st.point = piece.a + local * dir;
        st.tangent = dir;
      } else {
        double t = local / piece.radius;
        st.point = piece.center + piece.radius * (std::cos(t) * piece.u + std::sin(t) * piece.v);
        st.tangent = -std::sin(t) * piece.u + std::cos(t) * piece.v;
      }
      st.arclength = s_target;
      stations.push_back(st);
      s_target += step;
    }
    base += len;
  }
  // make sure the last station sits exactly at the trimmed end
  double s_last = total - s_end_trim;
  if (stations.empty() || stations.back().arclength < s_last - 0.25 * step) {
    double base2 = 0.0;
    for (const auto& piece : pieces) {
      double len = piece.length();
      if (s_last <= base2 + len + 1e-9) {
        double local = s_last - base2;
        PathStation st;
        if (!piece.arc) {
          Eigen::Vector3d dir = (piece.b - piece.a).normalized();
          st.point = piece.a + local * dir;
          st.tangent = dir;
        } else {
          double t = local / piece.radius;
          st.point =
              piece.center + piece.radius * (std::cos(t) * piece.u + std::sin(t) * piece.v);
          st.tangent = -std::sin(t) * piece.u + std::cos(t) * piece.v;
        }
        st.arclength = s_last;
        stations.push_back(st);
        break;
      }
      base2 += len;
    }
  }
  return stations;
}

}  // namespace detail

// Glue junction + tube + cap into the collar left by flatten_near_point.
// The tree must be a chain of segments, each starting at the previous tip.
inline TriangleMesh attach_tentacle(const FlattenResult& flattened, const TentacleSpec& spec,
                                    const GeneratorConfig& config = {}) {
  const TriangleMesh& mesh = flattened.mesh;
  const Collar& collar = flattened.collar;
  const double eps = collar.epsilon;
  if (std::abs(spec.epsilon - eps) > 1e-12)
    throw ValidationError("tentacle epsilon does not match the collar");
  if (spec.segments.empty()) throw ValidationError("tentacle needs at least one segment");
  if ((spec.root - collar.origin).norm() > 0.3 * eps)
    throw ValidationError("tentacle root is not at the collar origin");

  const double total_length = tentacle_length(spec);
  if (!(total_length > 0.0)) throw ValidationError("tentacle tree has zero length");
  Profile profile = spec.profile ? *spec.profile : Profile::constant(0.1, total_length);
  if (std::abs(profile.length() - total_length) > 1e-9 * std::max(1.0, total_length))
    throw ValidationError("profile length does not match the tentacle length");
  if (!profile.constant_near_ends())
    throw ValidationError("tentacle profile must be constant 1/10 near its ends");

  Eigen::Vector3d first_dir = (spec.segments[0] - spec.root).normalized();
  if (first_dir.dot(collar.normal) < 0.999)
    throw ValidationError("first tentacle segment must leave along the outward normal");

  // clearance: segments must stay >= clearance_factor * eps away from the base
  // mesh (beyond the takeoff zone) and from each other when non-adjacent
  {
    const double clearance = config.clearance_factor * eps;
    std::vector<Eigen::Vector3d> pts = {spec.root};
    pts.insert(pts.end(), spec.segments.begin(), spec.segments.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      for (std::size_t j = i + 2; j + 1 < pts.size(); ++j) {
        double d = detail::segment_distance(pts[i], pts[i + 1], pts[j], pts[j + 1]);
        if (d < clearance)
          throw ValidationError("tentacle segments " + std::to_string(i) + " and " +
                                std::to_string(j) + " come closer than the 3 eps clearance");
      }
    }
    const double takeoff = 5.0 * eps;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      int n_samples = std::max(2, static_cast<int>((pts[i + 1] - pts[i]).norm() / eps));
      for (int s = 0; s <= n_samples; ++s) {
        Eigen::Vector3d p = pts[i] + (pts[i + 1] - pts[i]) * (static_cast<double>(s) / n_samples);
        if ((p - spec.root).norm() < takeoff) continue;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index v = 0; v < mesh.n_vertices(); ++v)
          best = std::min(best, (mesh.V.row(v).transpose() - p).norm());
        if (best < clearance)
          throw ValidationError("tentacle tube would intersect the base mesh");
      }
    }
  }

  // --- cut the hole: drop vertices with tangent radius < 0.3 eps
  const double hole_radius = 0.3 * eps;
  std::vector<int> remap(mesh.n_vertices(), -1);
  detail::MeshBuilder builder;
  for (Eigen::Index v = 0; v < mesh.n_vertices(); ++v) {
    Eigen::Vector3d d = mesh.V.row(v).transpose() - collar.origin;
    double wx = d.dot(collar.e1), wy = d.dot(collar.e2), h = d.dot(collar.normal);
    bool inside = std::hypot(wx, wy) < hole_radius && std::abs(h) < 0.5 * eps;
    if (!inside) remap[v] = builder.add_vertex(mesh.V.row(v));
  }
  std::unordered_map<std::uint64_t, std::array<int, 2>> halfedges;  // directed boundary walk
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f) {
    int a = remap[mesh.F(f, 0)], b = remap[mesh.F(f, 1)], c = remap[mesh.F(f, 2)];
    if (a >= 0 && b >= 0 && c >= 0) builder.add_face(a, b, c);
  }

  // boundary loop: directed edges whose reverse is absent
  std::unordered_map<std::uint64_t, int> directed;
  auto dkey = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };
  for (const auto& f : builder.faces)
    for (int e = 0; e < 3; ++e) directed[dkey(f[e], f[(e + 1) % 3])] = 1;
  std::unordered_map<int, int> next_on_boundary;
  for (const auto& [key, one] : directed) {
    int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    if (!directed.count(dkey(b, a))) next_on_boundary[b] = a;  // boundary of the hole
  }
  if (next_on_boundary.empty())
    throw ValidationError("hole cut produced no boundary; epsilon too small for the mesh");
  std::vector<int> loop;
  {
    int start = next_on_boundary.begin()->first;
    int cur = start;
    do {
      loop.push_back(cur);
      auto it = next_on_boundary.find(cur);
      if (it == next_on_boundary.end())
        throw ValidationError("hole boundary is not a closed loop");
      cur = it->second;
    } while (cur != start && loop.size() <= next_on_boundary.size());
    if (loop.size() != next_on_boundary.size())
      throw ValidationError("hole cut produced more than one boundary loop");
  }
  // orient the loop CCW around the collar normal
  {
    double area2 = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      Eigen::Vector3d p = builder.vertices[loop[i]] - collar.origin;
      Eigen::Vector3d q = builder.vertices[loop[(i + 1) % loop.size()]] - collar.origin;
      area2 += p.dot(collar.e1) * q.dot(collar.e2) - p.dot(collar.e2) * q.dot(collar.e1);
    }
    if (area2 < 0.0) std::reverse(loop.begin(), loop.end());
  }

  // --- junction: flat annulus rings then a quarter-circle turn up to the tube
  const int n_ring =
      config.ring_vertices * std::max(1, static_cast<int>(std::round(profile.max_value() /
                                                                     profile.min_value())));
  auto make_ring = [&](double radius, double height, int count) {
    std::vector<int> ring(count);
    for (int i = 0; i < count; ++i) {
      double theta = 2.0 * kPi * i / count;
      ring[i] = builder.add_vertex(collar.origin +
                                   radius * (std::cos(theta) * collar.e1 +
                                             std::sin(theta) * collar.e2) +
                                   height * collar.normal);
    }
    return ring;
  };

  const int n_outer = std::max(n_ring, static_cast<int>(loop.size()));
  std::vector<int> prev = loop;
  struct RingSpec {
    double radius, height;
    int count;
  };
  std::vector<RingSpec> junction_rings;
  junction_rings.push_back({0.25 * eps, 0.0, n_outer});
  junction_rings.push_back({0.20 * eps, 0.0, n_outer});
  // quarter arc (r, z) from (0.2, 0) to (0.1, 0.1), center (0.2, 0.1), radius 0.1 eps
  const int arc_steps = 4;
  for (int s = 1; s <= arc_steps; ++s) {
    double psi = -0.5 * kPi - 0.5 * kPi * s / arc_steps;
    double r = (0.2 + 0.1 * std::cos(psi)) * eps;
    double z = (0.1 + 0.1 * std::sin(psi)) * eps;
    int count = s < arc_steps / 2 ? n_outer : n_ring;
    junction_rings.push_back({r, z, count});
  }
  for (const auto& rs : junction_rings) {
    std::vector<int> ring = make_ring(rs.radius, rs.height, rs.count);
    detail::bridge_rings(builder, ring, prev);  // ring is above/inward of prev
    prev = std::move(ring);
  }

  // --- tube rings along the path
  const double ring_edge = 2.0 * kPi * eps * profile.min_value() / config.ring_vertices;
  const double step = config.step_factor * ring_edge;
  const double cap_radius_scale = profile.value(profile.length());  // 1/10 near the end
  const double s0 = 0.1 * eps;                      // junction already rose this high
  const double cap_trim = cap_radius_scale * 10.0 * 0.1 * eps;  // leave room for the cap
  auto stations = detail::sample_tentacle_path(spec, s0, cap_trim, step,
                                               config.elbow_radius_factor * eps);
  if (stations.size() < 2) throw ValidationError("tentacle too short to mesh");

  Eigen::Vector3d frame_u = collar.e1, frame_v = collar.e2, prev_tangent = collar.normal;
  for (const auto& st : stations) {
    // parallel transport of the ring frame
    Eigen::Vector3d axis = prev_tangent.cross(st.tangent);
    double sin_a = axis.norm(), cos_a = std::clamp(prev_tangent.dot(st.tangent), -1.0, 1.0);
    if (sin_a > 1e-14) {
      Eigen::AngleAxisd rot(std::atan2(sin_a, cos_a), axis / sin_a);
      frame_u = rot * frame_u;
      frame_v = rot * frame_v;
    }
    prev_tangent = st.tangent;
    double radius = eps * profile.value(std::min(st.arclength, profile.length()));
    std::vector<int> ring(n_ring);
    for (int i = 0; i < n_ring; ++i) {
      double theta = 2.0 * kPi * i / n_ring;
      ring[i] = builder.add_vertex(st.point +
                                   radius * (std::cos(theta) * frame_u +
                                             std::sin(theta) * frame_v));
    }
    detail::bridge_rings(builder, ring, prev);
    prev = std::move(ring);
  }

  // --- hemispherical cap
  const auto& last = stations.back();
  const double cap_r = eps * cap_radius_scale;
  const int cap_steps = std::max(2, static_cast<int>(std::round(0.5 * kPi * cap_r / step)));
  Eigen::Vector3d cap_center = last.point;
  for (int s = 1; s < cap_steps; ++s) {
    double phi = 0.5 * kPi * s / cap_steps;
    double radius = cap_r * std::cos(phi);
    double height = cap_r * std::sin(phi);
    std::vector<int> ring(n_ring);
    for (int i = 0; i < n_ring; ++i) {
      double theta = 2.0 * kPi * i / n_ring;
      ring[i] = builder.add_vertex(cap_center +
                                   radius * (std::cos(theta) * frame_u +
                                             std::sin(theta) * frame_v) +
                                   height * last.tangent);
    }
    detail::bridge_rings(builder, ring, prev);
    prev = std::move(ring);
  }
  int apex = builder.add_vertex(cap_center + cap_r * last.tangent);
  detail::fan_to_apex(builder, prev, apex);

  TriangleMesh out = builder.finish(mesh.allow_multiple_components);
  if (detail::signed_volume(out) < 0.0)
    throw NumericsError("tentacle construction produced an inward orientation");
  return out;
}

// ---------------------------------------------------------------------------
// The full construction: flattened sphere + junctions + tubes + caps.

inline TriangleMesh tentacled_sphere(const std::vector<TentacleSpec>& tentacles,
                                     const GeneratorConfig& config = {}) {
  if (tentacles.empty()) throw ValidationError("tentacled_sphere needs at least one tentacle");
  TriangleMesh mesh = icosphere(config.subdivision, 1.0);

  // grade the sphere down to junction resolution around every root
  for (const auto& spec : tentacles) {
    if (std::abs(spec.root.norm() - 1.0) > 1e-9)
      throw ValidationError("tentacle root must lie on the unit sphere");
    const double eps = spec.epsilon;
    const double fine_edge = 2.0 * kPi * 0.3 * eps / std::max(16, config.ring_vertices);
    const double fine_zone = 1.2 * (spec.flatten_radius > 0.0 ? spec.flatten_radius : eps);
    Eigen::Vector3d root = spec.root;
    auto target = [fine_edge, fine_zone, root](const Eigen::Vector3d& p) {
      double d = (p - root).norm();
      return std::max(fine_edge, fine_edge + 0.45 * (d - fine_zone));
    };
    mesh = refine_mesh_region(mesh, target,
                              [](const Eigen::Vector3d& p) { return p.normalized(); });
  }

  for (const auto& spec : tentacles) {
    // re-resolve the root to the nearest current vertex
    int root_vertex = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index v = 0; v < mesh.n_vertices(); ++v) {
      double d = (mesh.V.row(v).transpose() - spec.root).norm();
      if (d < best) {
        best = d;
        root_vertex = static_cast<int>(v);
      }
    }
    const double eps0 = spec.flatten_radius > 0.0 ? spec.flatten_radius : spec.epsilon;
    FlattenResult flat = flatten_near_point(mesh, root_vertex, spec.epsilon, eps0, config);
    TentacleSpec adjusted = spec;
    adjusted.root = flat.collar.origin;
    mesh = attach_tentacle(flat, adjusted, config);
  }
  return mesh;
}

// Dense sampling of the analytic limit set S^2 union the tentacle trees,
// for Hausdorff-distance measurements.
inline Eigen::MatrixXd sample_sphere_union_trees(const std::vector<TentacleSpec>& tentacles,
                                                 int sphere_samples = 20000,
                                                 double tree_step = 1e-3) {
  std::vector<Eigen::Vector3d> points;
  // Fibonacci sphere
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < sphere_samples; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / sphere_samples;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double theta = golden * i;
    points.emplace_back(r * std::cos(theta), r * std::sin(theta), z);
  }
  for (const auto& spec : tentacles) {
    Eigen::Vector3d prev = spec.root;
    for (const auto& p : spec.segments) {
      double len = (p - prev).norm();
      int n = std::max(2, static_cast<int>(len / tree_step));
      for (int i = 0; i <= n; ++i)
        points.push_back(prev + (p - prev) * (static_cast<double>(i) / n));
      prev = p;
    }
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = points[i];
  return M;
}

}  // namespace pinchlab
