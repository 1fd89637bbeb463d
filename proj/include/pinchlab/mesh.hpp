#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pinchlab/core.hpp"

namespace pinchlab {

// Closed, consistently oriented triangle mesh immersed in 3-space.
// Derived per-vertex quantities are filled by make_mesh and treated as
// immutable afterwards; operations on meshes are pure functions.
struct TriangleMesh {
  Eigen::MatrixXd V;              // one position per row
  Eigen::MatrixXi F;              // CCW triangles as seen from outside
  Eigen::VectorXd vertex_area;    // lumped one-third areas
  Eigen::MatrixXd vertex_normal;  // area-weighted unit normals
  double total_area = 0.0;
  int component_count = 1;
  bool allow_multiple_components = false;
  std::uint64_t content_hash = 0;

  Eigen::Index n_vertices() const { return V.rows(); }
  Eigen::Index n_faces() const { return F.rows(); }
};

// Scalar per vertex, bound to the mesh it indexes by content hash.
struct VertexField {
  Eigen::VectorXd values;
  std::uint64_t mesh_hash = 0;
};

inline void check_binding(const VertexField& f, const TriangleMesh& mesh) {
  if (f.mesh_hash != mesh.content_hash || f.values.size() != mesh.n_vertices())
    throw ValidationError("vertex field is not bound to this mesh");
  if (!f.values.allFinite())
    throw ValidationError("vertex field contains non-finite values");
}

inline VertexField make_field(const TriangleMesh& mesh, Eigen::VectorXd values) {
  if (values.size() != mesh.n_vertices())
    throw ValidationError("field length does not match vertex count");
  return VertexField{std::move(values), mesh.content_hash};
}

inline double face_area(const TriangleMesh& mesh, Eigen::Index f) {
  Eigen::Vector3d a = mesh.V.row(mesh.F(f, 0));
  Eigen::Vector3d b = mesh.V.row(mesh.F(f, 1));
  Eigen::Vector3d c = mesh.V.row(mesh.F(f, 2));
  return 0.5 * (b - a).cross(c - a).norm();
}

inline std::uint64_t mesh_content_hash(const Eigen::MatrixXd& V, const Eigen::MatrixXi& F) {
  std::uint64_t h = fnv1a64(V.data(), sizeof(double) * static_cast<std::size_t>(V.size()));
  return fnv1a64(F.data(), sizeof(int) * static_cast<std::size_t>(F.size()), h);
}

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

inline std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(std::min(a, b))) << 32) |
         static_cast<std::uint32_t>(std::max(a, b));
}

}  // namespace detail

// Validates the watertightness invariants and fills the derived caches.
// Throws ValidationError naming the offending simplex.
inline TriangleMesh make_mesh(Eigen::MatrixXd V, Eigen::MatrixXi F,
                              bool allow_multiple_components = false) {
  if (V.rows() == 0) throw ValidationError("empty mesh: no vertices");
  if (F.rows() == 0) throw ValidationError("empty mesh: no faces");
  if (V.cols() != 3 || F.cols() != 3)
    throw ValidationError("mesh must have 3-column vertex and face arrays");
  if (!V.allFinite()) throw ValidationError("non-finite vertex coordinate");

  const int nv = static_cast<int>(V.rows());
  for (Eigen::Index f = 0; f < F.rows(); ++f) {
    int a = F(f, 0), b = F(f, 1), c = F(f, 2);
    if (a < 0 || b < 0 || c < 0 || a >= nv || b >= nv || c >= nv)
      throw ValidationError("face " + std::to_string(f) + " references a vertex out of range");
    if (a == b || b == c || a == c)
      throw ValidationError("face " + std::to_string(f) + " repeats a vertex");
  }

  // Each directed halfedge must appear exactly once and its opposite exactly once.
  std::unordered_map<std::uint64_t, int> halfedge_face;
  halfedge_face.reserve(static_cast<std::size_t>(F.rows()) * 3);
  auto directed_key = [](int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  };
  for (Eigen::Index f = 0; f < F.rows(); ++f) {
    for (int e = 0; e < 3; ++e) {
      int a = F(f, e), b = F(f, (e + 1) % 3);
      auto [it, fresh] = halfedge_face.emplace(directed_key(a, b), static_cast<int>(f));
      if (!fresh)
        throw ValidationError("non-manifold or inconsistently oriented edge (" +
                              std::to_string(a) + "," + std::to_string(b) + ") shared by faces " +
                              std::to_string(it->second) + " and " + std::to_string(f));
    }
  }
  for (const auto& [key, f] : halfedge_face) {
    int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
    if (!halfedge_face.count(directed_key(b, a)))
      throw ValidationError("open boundary edge (" + std::to_string(a) + "," +
                            std::to_string(b) + ") on face " + std::to_string(f));
  }

  TriangleMesh mesh;
  mesh.V = std::move(V);
  mesh.F = std::move(F);
  mesh.allow_multiple_components = allow_multiple_components;

  const Eigen::Index nf = mesh.F.rows();
  mesh.vertex_area = Eigen::VectorXd::Zero(nv);
  mesh.vertex_normal = Eigen::MatrixXd::Zero(nv, 3);
  mesh.total_area = 0.0;
  detail::UnionFind uf(nv);
  for (Eigen::Index f = 0; f < nf; ++f) {
    Eigen::Vector3d a = mesh.V.row(mesh.F(f, 0));
    Eigen::Vector3d b = mesh.V.row(mesh.F(f, 1));
    Eigen::Vector3d c = mesh.V.row(mesh.F(f, 2));
    Eigen::Vector3d n = (b - a).cross(c - a);
    double area = 0.5 * n.norm();
    if (!(area > 0.0) || !std::isfinite(area))
      throw ValidationError("degenerate face " + std::to_string(f) + " with area " +
                            std::to_string(area));
    mesh.total_area += area;
    for (int e = 0; e < 3; ++e) {
      mesh.vertex_area[mesh.F(f, e)] += area / 3.0;
      mesh.vertex_normal.row(mesh.F(f, e)) += 0.5 * n.transpose();
    }
    uf.unite(mesh.F(f, 0), mesh.F(f, 1));
    uf.unite(mesh.F(f, 1), mesh.F(f, 2));
  }
  for (int v = 0; v < nv; ++v) {
    if (mesh.vertex_area[v] == 0.0)
      throw ValidationError("isolated vertex " + std::to_string(v));
    double norm = mesh.vertex_normal.row(v).norm();
    if (norm > 0.0) mesh.vertex_normal.row(v) /= norm;
  }

  std::vector<int> roots;
  for (int v = 0; v < nv; ++v) {
    int r = uf.find(v);
    if (r == v) roots.push_back(v);
  }
  mesh.component_count = static_cast<int>(roots.size());
  if (mesh.component_count > 1 && !allow_multiple_components)
    throw ValidationError("mesh has " + std::to_string(mesh.component_count) +
                          " connected components but is not flagged multi-component");

  mesh.content_hash = mesh_content_hash(mesh.V, mesh.F);
  return mesh;
}

inline Eigen::Index count_edges(const TriangleMesh& mesh) {
  std::unordered_map<std::uint64_t, int> seen;
  seen.reserve(static_cast<std::size_t>(mesh.n_faces()) * 3);
  for (Eigen::Index f = 0; f < mesh.n_faces(); ++f)
    for (int e = 0; e < 3; ++e)
      seen.emplace(detail::edge_key(mesh.F(f, e), mesh.F(f, (e + 1) % 3)), 1);
  return static_cast<Eigen::Index>(seen.size());
}

inline Eigen::Index euler_characteristic(const TriangleMesh& mesh) {
  return mesh.n_vertices() - count_edges(mesh) + mesh.n_faces();
}

// ---------------------------------------------------------------------------
// OFF / OBJ input and output (ASCII)

namespace detail {

inline std::string lowercase_extension(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

inline bool next_content_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
  }
  return false;
}

inline TriangleMesh load_off(std::istream& in, bool allow_multi) {
  std::string line;
  if (!next_content_line(in, line)) throw UsageError("empty OFF file");
  std::istringstream header(line);
  std::string tag;
  header >> tag;
  if (tag != "OFF") throw UsageError("missing OFF header");
  Eigen::Index nv = -1, nf = -1;
  long ne = 0;
  if (!(header >> nv >> nf >> ne)) {
    if (!next_content_line(in, line)) throw UsageError("truncated OFF header");
    std::istringstream counts(line);
    if (!(counts >> nv >> nf >> ne)) throw UsageError("bad OFF counts line");
  }
  if (nv <= 0 || nf <= 0) throw ValidationError("empty mesh in OFF file");
  Eigen::MatrixXd V(nv, 3);
  for (Eigen::Index i = 0; i < nv; ++i) {
    if (!next_content_line(in, line)) throw UsageError("truncated OFF vertex list");
    std::istringstream row(line);
    if (!(row >> V(i, 0) >> V(i, 1) >> V(i, 2)))
      throw UsageError("bad OFF vertex line: " + line);
  }
  Eigen::MatrixXi F(nf, 3);
  for (Eigen::Index i = 0; i < nf; ++i) {
    if (!next_content_line(in, line)) throw UsageError("truncated OFF face list");
    std::istringstream row(line);
    int k = 0;
    if (!(row >> k) || k != 3)
      throw UsageError("only triangle faces are supported (face " + std::to_string(i) + ")");
    if (!(row >> F(i, 0) >> F(i, 1) >> F(i, 2)))
      throw UsageError("bad OFF face line: " + line);
  }
  return make_mesh(std::move(V), std::move(F), allow_multi);
}

inline TriangleMesh load_obj(std::istream& in, bool allow_multi) {
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  std::string line;
  while (next_content_line(in, line)) {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag == "v") {
      Eigen::Vector3d p;
      if (!(row >> p.x() >> p.y() >> p.z())) throw UsageError("bad OBJ vertex line: " + line);
      verts.push_back(p);
    } else if (tag == "f") {
      std::vector<int> ids;
      std::string item;
      while (row >> item) {
        // tolerate v/vt/vn references; only the vertex index matters
        ids.push_back(std::stoi(item.substr(0, item.find('/'))));
      }
      if (ids.size() != 3)
        throw UsageError("only triangle faces are supported in OBJ input");
      faces.emplace_back(ids[0] - 1, ids[1] - 1, ids[2] - 1);
    }
  }
  if (verts.empty() || faces.empty()) throw ValidationError("empty mesh in OBJ file");
  Eigen::MatrixXd V(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) V.row(static_cast<Eigen::Index>(i)) = verts[i];
  Eigen::MatrixXi F(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = faces[i];
  return make_mesh(std::move(V), std::move(F), allow_multi);
}

}  // namespace detail

inline TriangleMesh load_mesh(const std::string& path, bool allow_multiple_components = false) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open mesh file: " + path);
  std::string ext = detail::lowercase_extension(path);
  if (ext == "off") return detail::load_off(in, allow_multiple_components);
  if (ext == "obj") return detail::load_obj(in, allow_multiple_components);
  throw UsageError("unsupported mesh format (expected .off or .obj): " + path);
}

inline void save_mesh(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write mesh file: " + path);
  out.precision(17);
  std::string ext = detail::lowercase_extension(path);
  if (ext == "off") {
    out << "OFF\n" << mesh.n_vertices() << " " << mesh.n_faces() << " 0\n";
    for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
      out << mesh.V(i, 0) << " " << mesh.V(i, 1) << " " << mesh.V(i, 2) << "\n";
    for (Eigen::Index f = 0; f < mesh.n_faces(); ++f)
      out << "3 " << mesh.F(f, 0) << " " << mesh.F(f, 1) << " " << mesh.F(f, 2) << "\n";
  } else if (ext == "obj") {
    for (Eigen::Index i = 0; i < mesh.n_vertices(); ++i)
      out << "v " << mesh.V(i, 0) << " " << mesh.V(i, 1) << " " << mesh.V(i, 2) << "\n";
    for (Eigen::Index f = 0; f < mesh.n_faces(); ++f)
      out << "f " << mesh.F(f, 0) + 1 << " " << mesh.F(f, 1) + 1 << " " << mesh.F(f, 2) + 1
          << "\n";
  } else {
    throw UsageError("unsupported mesh format (expected .off or .obj): " + path);
  }
  if (!out) throw UsageError("write failure on " + path);
}

inline void save_field_csv(const VertexField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write field file: " + path);
  out.precision(17);
  out << "vertex_index,value\n";
  for (Eigen::Index i = 0; i < field.values.size(); ++i)
    out << i << "," << field.values[i] << "\n";
}

}  // namespace pinchlab
