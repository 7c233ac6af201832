#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace elastmix {

enum class Family { D2P2, D3P3, D3P2 };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::D2P2: return "2d-p2";
    case Family::D3P3: return "3d-p3";
    case Family::D3P2: return "3d-p2";
  }
  return "?";
}

inline Family family_from_name(const std::string& s) {
  if (s == "2d-p2") return Family::D2P2;
  if (s == "3d-p3") return Family::D3P3;
  if (s == "3d-p2") return Family::D3P2;
  throw std::invalid_argument("unknown family: " + s);
}

inline int family_dim(Family f) { return f == Family::D2P2 ? 2 : 3; }
inline int family_degree(Family f) { return f == Family::D3P3 ? 3 : 2; }

// Simplicial mesh of the unit square/cube.  Facets are oriented: the unit
// normal points from cell_plus into cell_minus, which fixes the jump sign
// convention [v] = v_plus - v_minus.
struct Mesh {
  int dim = 0;
  std::vector<Vec> vertices;
  std::vector<std::vector<int>> cells;  // dim+1 vertex ids, order meaningful

  struct Facet {
    std::vector<int> verts;  // sorted vertex ids
    int cell_plus = -1;
    int cell_minus = -1;  // -1 on the boundary
    Vec normal;           // unit, out of cell_plus
  };
  std::vector<Facet> facets;
  std::vector<std::vector<int>> cell_facets;
  std::vector<std::array<int, 2>> edges;  // 3D only: sorted vertex pairs
  std::map<std::array<int, 2>, int> edge_index;

  bool interior(const Facet& f) const { return f.cell_minus >= 0; }

  CellGeometry cell_geometry(int c) const {
    std::vector<Vec> vs;
    for (int v : cells[c]) vs.push_back(vertices[v]);
    return CellGeometry(std::move(vs));
  }

  double total_volume() const {
    double s = 0;
    for (size_t c = 0; c < cells.size(); ++c) s += cell_geometry(c).volume;
    return s;
  }

  // Builds facet adjacency and checks conformity.
  void build() {
    facets.clear();
    cell_facets.assign(cells.size(), {});
    std::map<std::vector<int>, int> lookup;
    for (size_t c = 0; c < cells.size(); ++c) {
      cell_geometry(c);  // throws on degenerate cells
      const auto& cv = cells[c];
      const int nf = dim + 1;
      for (int i = 0; i < nf; ++i) {
        std::vector<int> fv;
        for (int j = 0; j < nf; ++j)
          if (j != i) fv.push_back(cv[j]);
        std::sort(fv.begin(), fv.end());
        auto it = lookup.find(fv);
        if (it == lookup.end()) {
          Facet f;
          f.verts = fv;
          f.cell_plus = static_cast<int>(c);
          lookup.emplace(fv, static_cast<int>(facets.size()));
          cell_facets[c].push_back(static_cast<int>(facets.size()));
          facets.push_back(std::move(f));
        } else {
          Facet& f = facets[it->second];
          if (f.cell_minus >= 0)
            throw std::runtime_error("mesh not conforming: facet shared by >2 cells");
          f.cell_minus = static_cast<int>(c);
          cell_facets[c].push_back(it->second);
        }
      }
    }
    // orient normals out of cell_plus
    for (auto& f : facets) {
      std::vector<Vec> pts;
      for (int v : f.verts) pts.push_back(vertices[v]);
      Vec n = facet_normal(pts);
      // centroid test against the opposite vertex of cell_plus
      Vec fc = Vec::Zero(dim);
      for (const auto& p : pts) fc += p;
      fc /= double(pts.size());
      Vec cc = Vec::Zero(dim);
      for (int v : cells[f.cell_plus]) cc += vertices[v];
      cc /= double(dim + 1);
      if (n.dot(fc - cc) < 0) n = -n;
      f.normal = n;
    }
    if (dim == 3) build_edges();
  }

  void build_edges() {
    edges.clear();
    edge_index.clear();
    for (const auto& cv : cells)
      for (size_t i = 0; i < cv.size(); ++i)
        for (size_t j = i + 1; j < cv.size(); ++j) {
          std::array<int, 2> e{std::min(cv[i], cv[j]), std::max(cv[i], cv[j])};
          if (edge_index.emplace(e, static_cast<int>(edges.size())).second)
            edges.push_back(e);
        }
  }

  // Geometric checks used by tests: every interior facet's cells agree on the
  // facet vertex set by construction; here we verify the boundary is where it
  // should be for meshes of the unit box.
  int boundary_facet_count() const {
    int k = 0;
    for (const auto& f : facets)
      if (!interior(f)) ++k;
    return k;
  }
};

// Canonical point helpers: always combine vertex coordinates in sorted-id
// order so that shared points are computed bitwise identically.
inline Vec midpoint_of(const Mesh& m, int a, int b) {
  int i = std::min(a, b), j = std::max(a, b);
  return 0.5 * (m.vertices[i] + m.vertices[j]);
}

inline Vec centroid_of(const Mesh& m, std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  Vec s = Vec::Zero(m.dim);
  for (int v : ids) s += m.vertices[v];
  return s / double(ids.size());
}

struct Macro {
  std::vector<int> cells;           // fine cell ids in construction order K1..
  std::vector<int> interior_facets; // fine facet ids interior to the macro
  std::map<std::string, int> labels;      // named nodes that are fine vertices
  std::map<std::string, Vec> named_points;  // all named nodes as coordinates
  std::vector<int> corners;         // x0..xn fine vertex ids
};

struct MacroMesh {
  Family family = Family::D2P2;
  Mesh fine;
  std::vector<Macro> macros;
  std::vector<int> cell_macro;  // fine cell id -> macro id

  void finalize() {
    fine.build();
    cell_macro.assign(fine.cells.size(), -1);
    for (size_t m = 0; m < macros.size(); ++m)
      for (int c : macros[m].cells) cell_macro[c] = static_cast<int>(m);
    // interior facets of each macro
    for (auto& mac : macros) mac.interior_facets.clear();
    for (size_t f = 0; f < fine.facets.size(); ++f) {
      const auto& fac = fine.facets[f];
      if (!fine.interior(fac)) continue;
      int ma = cell_macro[fac.cell_plus], mb = cell_macro[fac.cell_minus];
      if (ma == mb) macros[ma].interior_facets.push_back(static_cast<int>(f));
    }
  }
};

namespace detail {

struct VertexDedup {
  std::map<std::vector<std::int64_t>, int> lookup;
  int add(Mesh& m, const Vec& p) {
    std::vector<std::int64_t> key(p.size());
    for (int i = 0; i < p.size(); ++i)
      key[i] = std::llround(p[i] * 1099511627776.0);  // 2^40
    auto it = lookup.find(key);
    if (it != lookup.end()) return it->second;
    int id = static_cast<int>(m.vertices.size());
    m.vertices.push_back(p);
    lookup.emplace(std::move(key), id);
    return id;
  }
  void seed(const Mesh& m) {
    for (size_t v = 0; v < m.vertices.size(); ++v) {
      std::vector<std::int64_t> key(m.vertices[v].size());
      for (int i = 0; i < m.vertices[v].size(); ++i)
        key[i] = std::llround(m.vertices[v][i] * 1099511627776.0);
      lookup.emplace(std::move(key), static_cast<int>(v));
    }
  }
};

inline void orient_positive(Mesh& m, std::vector<int>& cell) {
  std::vector<Vec> vs;
  for (int v : cell) vs.push_back(m.vertices[v]);
  const int n = m.dim;
  Mat J(n, n);
  for (int j = 0; j < n; ++j) J.col(j) = vs[j + 1] - vs[0];
  if (J.determinant() < 0) std::swap(cell[n - 1], cell[n]);
}

}  // namespace detail

// Unit square, split by the (0,0)-(1,1) diagonal, red-refined levels-1 times.
inline Mesh unit_square_mesh(int levels) {
  if (levels < 1) throw std::invalid_argument("levels must be >= 1");
  Mesh m;
  m.dim = 2;
  Vec p(2);
  p << 0, 0;
  m.vertices.push_back(p);
  p << 1, 0;
  m.vertices.push_back(p);
  p << 1, 1;
  m.vertices.push_back(p);
  p << 0, 1;
  m.vertices.push_back(p);
  m.cells = {{0, 1, 2}, {0, 2, 3}};
  for (int l = 1; l < levels; ++l) {
    Mesh r;
    r.dim = 2;
    r.vertices = m.vertices;
    detail::VertexDedup dd;
    dd.seed(r);
    for (const auto& c : m.cells) {
      int v0 = c[0], v1 = c[1], v2 = c[2];
      int m01 = dd.add(r, midpoint_of(m, v0, v1));
      int m12 = dd.add(r, midpoint_of(m, v1, v2));
      int m02 = dd.add(r, midpoint_of(m, v0, v2));
      r.cells.push_back({v0, m01, m02});
      r.cells.push_back({m01, v1, m12});
      r.cells.push_back({m02, m12, v2});
      r.cells.push_back({m01, m12, m02});
    }
    m = std::move(r);
  }
  m.build();
  return m;
}

// Unit cube on a 2^(levels-1) grid, six Kuhn tetrahedra per subcube sharing
// its main diagonal.  Cells are stored in the bisection label order
// (x0,x1,x2,x3) = (v0,v1,v3,v2) for the lattice path v0->v1->v2->v3, which
// makes the two uniform bisections of macro_split_3d_p3 globally conforming.
inline Mesh unit_cube_mesh(int levels) {
  if (levels < 1) throw std::invalid_argument("levels must be >= 1");
  Mesh m;
  m.dim = 3;
  int g = 1 << (levels - 1);
  auto vid = [&](int i, int j, int k) { return (k * (g + 1) + j) * (g + 1) + i; };
  for (int k = 0; k <= g; ++k)
    for (int j = 0; j <= g; ++j)
      for (int i = 0; i <= g; ++i) {
        Vec p(3);
        p << double(i) / g, double(j) / g, double(k) / g;
        m.vertices.push_back(p);
      }
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                           {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int k = 0; k < g; ++k)
    for (int j = 0; j < g; ++j)
      for (int i = 0; i < g; ++i)
        for (const auto& pm : perms) {
          int c[3] = {i, j, k};
          int v0 = vid(c[0], c[1], c[2]);
          c[pm[0]] += 1;
          int v1 = vid(c[0], c[1], c[2]);
          c[pm[1]] += 1;
          int v2 = vid(c[0], c[1], c[2]);
          c[pm[2]] += 1;
          int v3 = vid(c[0], c[1], c[2]);
          m.cells.push_back({v0, v1, v3, v2});
        }
  m.build();
  return m;
}

// 2D four-way macro split: x0 is the vertex opposite the longest edge (ties
// by lowest vertex id), or the stored first vertex when label_by_order is
// set.  K1=x1m1m2, K2=x0m1m2, K3=x0m1m3, K4=x2m1m3 with m1=mid(x1x2),
// m2=mid(x0x1), m3=mid(x0x2).
inline MacroMesh macro_split_2d(const Mesh& mesh, bool label_by_order = false) {
  if (mesh.dim != 2) throw std::invalid_argument("macro_split_2d: dim != 2");
  MacroMesh mm;
  mm.family = Family::D2P2;
  mm.fine.dim = 2;
  mm.fine.vertices = mesh.vertices;
  detail::VertexDedup dd;
  dd.seed(mm.fine);
  for (const auto& c : mesh.cells) {
    int x0, x1, x2;
    if (label_by_order) {
      x0 = c[0];
      x1 = c[1];
      x2 = c[2];
    } else {
      double best = -1.0;
      int apex = -1;
      for (int i = 0; i < 3; ++i) {
        double len = (mesh.vertices[c[(i + 1) % 3]] -
                      mesh.vertices[c[(i + 2) % 3]])
                         .norm();
        if (len > best + 1e-14 ||
            (std::abs(len - best) <= 1e-14 && apex >= 0 && c[i] < c[apex])) {
          best = len;
          apex = i;
        }
      }
      x0 = c[apex];
      int o1 = c[(apex + 1) % 3], o2 = c[(apex + 2) % 3];
      x1 = std::min(o1, o2);
      x2 = std::max(o1, o2);
    }
    int m1 = dd.add(mm.fine, midpoint_of(mesh, x1, x2));
    int m2 = dd.add(mm.fine, midpoint_of(mesh, x0, x1));
    int m3 = dd.add(mm.fine, midpoint_of(mesh, x0, x2));
    Macro mac;
    mac.corners = {x0, x1, x2};
    mac.labels = {{"x0", x0}, {"x1", x1}, {"x2", x2},
                  {"m1", m1}, {"m2", m2}, {"m3", m3}};
    auto add_cell = [&](std::vector<int> cv) {
      detail::orient_positive(mm.fine, cv);
      mac.cells.push_back(static_cast<int>(mm.fine.cells.size()));
      mm.fine.cells.push_back(std::move(cv));
    };
    add_cell({x1, m1, m2});
    add_cell({x0, m1, m2});
    add_cell({x0, m1, m3});
    add_cell({x2, m1, m3});
    for (const auto& [name, vi] : mac.labels)
      mac.named_points[name] = mm.fine.vertices[vi];
    mac.named_points["d1"] = midpoint_of(mm.fine, m1, m2);
    mac.named_points["d2"] = midpoint_of(mm.fine, m1, x0);
    mac.named_points["d3"] = midpoint_of(mm.fine, m1, m3);
    mm.macros.push_back(std::move(mac));
  }
  mm.finalize();
  return mm;
}

// 3D macro split by two successive uniform bisections: first at
// m2=mid(x0,x2), then at m1=mid(x0,x3) and m3=mid(x1,x2).  Labels are the
// stored cell vertex order.
inline MacroMesh macro_split_3d_p3(const Mesh& mesh) {
  if (mesh.dim != 3) throw std::invalid_argument("macro_split_3d_p3: dim != 3");
  MacroMesh mm;
  mm.family = Family::D3P3;
  mm.fine.dim = 3;
  mm.fine.vertices = mesh.vertices;
  detail::VertexDedup dd;
  dd.seed(mm.fine);
  for (const auto& c : mesh.cells) {
    int x0 = c[0], x1 = c[1], x2 = c[2], x3 = c[3];
    int m1 = dd.add(mm.fine, midpoint_of(mesh, x0, x3));
    int m2 = dd.add(mm.fine, midpoint_of(mesh, x0, x2));
    int m3 = dd.add(mm.fine, midpoint_of(mesh, x1, x2));
    Macro mac;
    mac.corners = {x0, x1, x2, x3};
    mac.labels = {{"x0", x0}, {"x1", x1}, {"x2", x2}, {"x3", x3},
                  {"m1", m1}, {"m2", m2}, {"m3", m3}};
    auto add_cell = [&](std::vector<int> cv) {
      detail::orient_positive(mm.fine, cv);
      mac.cells.push_back(static_cast<int>(mm.fine.cells.size()));
      mm.fine.cells.push_back(std::move(cv));
    };
    add_cell({x0, x1, m1, m2});
    add_cell({x1, x3, m1, m2});
    add_cell({x1, x3, m2, m3});
    add_cell({x2, x3, m2, m3});
    for (const auto& [name, vi] : mac.labels)
      mac.named_points[name] = mm.fine.vertices[vi];
    mac.named_points["d1"] = centroid_of(mm.fine, {x1, m1, m2});
    mac.named_points["d2"] = centroid_of(mm.fine, {x1, x3, m2});
    mac.named_points["d3"] = centroid_of(mm.fine, {x3, m2, m3});
    auto trisect = [&](int a, int b, int which) {
      // which=1: closer to a, which=2: closer to b
      const Vec& pa = mm.fine.vertices[a];
      const Vec& pb = mm.fine.vertices[b];
      return which == 1 ? Vec((2.0 * pa + pb) / 3.0) : Vec((pa + 2.0 * pb) / 3.0);
    };
    mac.named_points["g1"] = trisect(m1, m2, 1);
    mac.named_points["g2"] = trisect(m1, m2, 2);
    mac.named_points["g3"] = trisect(x1, m2, 1);
    mac.named_points["g4"] = trisect(x1, m2, 2);
    mac.named_points["g5"] = trisect(x3, m2, 1);
    mac.named_points["g6"] = trisect(x3, m2, 2);
    mac.named_points["g7"] = trisect(m3, m2, 1);
    mac.named_points["g8"] = trisect(m3, m2, 2);
    mm.macros.push_back(std::move(mac));
  }
  mm.finalize();
  return mm;
}

// 3D twelve-way macro split: faces split at their centroids, every surface
// triangle joined to the cell centroid m5.
inline MacroMesh macro_split_3d_p2(const Mesh& mesh) {
  if (mesh.dim != 3) throw std::invalid_argument("macro_split_3d_p2: dim != 3");
  MacroMesh mm;
  mm.family = Family::D3P2;
  mm.fine.dim = 3;
  mm.fine.vertices = mesh.vertices;
  detail::VertexDedup dd;
  dd.seed(mm.fine);
  for (const auto& c : mesh.cells) {
    Macro mac;
    mac.corners = c;
    int m5 = dd.add(mm.fine, centroid_of(mesh, {c[0], c[1], c[2], c[3]}));
    for (int i = 0; i < 4; ++i)
      mac.labels["x" + std::to_string(i)] = c[i];
    mac.labels["m5"] = m5;
    auto add_cell = [&](std::vector<int> cv) {
      detail::orient_positive(mm.fine, cv);
      mac.cells.push_back(static_cast<int>(mm.fine.cells.size()));
      mm.fine.cells.push_back(std::move(cv));
    };
    // m_i = centroid of the face opposite x_{i-1}
    for (int i = 0; i < 4; ++i) {
      std::vector<int> fv;
      for (int j = 0; j < 4; ++j)
        if (j != i) fv.push_back(c[j]);
      int mi = dd.add(mm.fine, centroid_of(mesh, fv));
      mac.labels["m" + std::to_string(i + 1)] = mi;
      for (int e = 0; e < 3; ++e)
        add_cell({fv[e], fv[(e + 1) % 3], mi, m5});
    }
    for (const auto& [name, vi] : mac.labels)
      mac.named_points[name] = mm.fine.vertices[vi];
    for (int i = 0; i < 4; ++i)
      mac.named_points["g" + std::to_string(i + 1)] =
          midpoint_of(mm.fine, c[i], m5);
    for (int i = 0; i < 4; ++i)
      mac.named_points["g" + std::to_string(i + 5)] =
          midpoint_of(mm.fine, mac.labels["m" + std::to_string(i + 1)], m5);
    mm.macros.push_back(std::move(mac));
  }
  mm.finalize();
  return mm;
}

// Builds a single-macro MacroMesh from a labeled simplex (used by the
// reference-macro certificates and random-geometry trials).
inline MacroMesh macro_from_simplex(const std::vector<Vec>& verts, Family fam) {
  Mesh m;
  m.dim = static_cast<int>(verts[0].size());
  m.vertices = verts;
  std::vector<int> cell(m.dim + 1);
  for (int i = 0; i <= m.dim; ++i) cell[i] = i;
  m.cells.push_back(cell);
  m.build();
  switch (fam) {
    case Family::D2P2: return macro_split_2d(m, /*label_by_order=*/true);
    case Family::D3P3: return macro_split_3d_p3(m);
    case Family::D3P2: return macro_split_3d_p2(m);
  }
  throw std::logic_error("unreachable");
}

}  // namespace elastmix
