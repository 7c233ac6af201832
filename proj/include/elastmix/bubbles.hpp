#pragma once

#include <mutex>

#include "mesh.hpp"
#include "poly.hpp"

namespace elastmix {

// Rows N with (tau n) = N * v for tau in Voigt components v.
inline Mat voigt_normal_rows(const Vec& n) {
  const int d = static_cast<int>(n.size());
  Mat N = Mat::Zero(d, sym_dim(d));
  if (d == 2) {
    N(0, 0) = n[0];
    N(0, 2) = n[1];
    N(1, 1) = n[1];
    N(1, 2) = n[0];
  } else {
    N(0, 0) = n[0];
    N(0, 5) = n[1];
    N(0, 4) = n[2];
    N(1, 1) = n[1];
    N(1, 5) = n[0];
    N(1, 3) = n[2];
    N(2, 2) = n[2];
    N(2, 4) = n[0];
    N(2, 3) = n[1];
  }
  return N;
}

// Row q with a^T tau b = q . v.
inline Vec voigt_bilinear_row(const Vec& a, const Vec& b) {
  const int d = static_cast<int>(a.size());
  Vec q = Vec::Zero(sym_dim(d));
  for (int i = 0; i < d; ++i) q[i] = a[i] * b[i];
  if (d == 2) {
    q[2] = a[0] * b[1] + a[1] * b[0];
  } else {
    q[3] = a[1] * b[2] + a[2] * b[1];
    q[4] = a[0] * b[2] + a[2] * b[0];
    q[5] = a[0] * b[1] + a[1] * b[0];
  }
  return q;
}

// Exact L2 Gram of monomial coefficient blocks: G = sum_c C_i W M C_j^T
// where M is the moment matrix of monomial products and W the Voigt metric.
inline Mat monomial_moment_matrix(int dim, int degree, double volume) {
  const auto& mb = MonoBasis::get(dim, degree);
  Mat M(mb.size(), mb.size());
  std::vector<int> sum(dim + 1);
  for (int i = 0; i < mb.size(); ++i)
    for (int j = 0; j <= i; ++j) {
      for (int k = 0; k <= dim; ++k) sum[k] = mb.exps[i][k] + mb.exps[j][k];
      M(i, j) = M(j, i) = barycentric_moment(sum, volume);
    }
  return M;
}

// H(div;S) bubble space of one cell: {tau in P_k(K;S) : tau n = 0 on dK},
// the nullspace of normal-trace evaluation at the per-facet degree-k lattice
// points, L2-orthonormalized.
inline std::vector<Poly> element_bubble_space(const CellGeometry& cell, int k) {
  if (k < 2) throw std::invalid_argument("element_bubble_space: k must be >= 2");
  const int n = cell.dim;
  const int ns = sym_dim(n);
  const auto& mb = MonoBasis::get(n, k);
  const int nm = mb.size();
  const int ncoef = ns * nm;

  std::vector<Eigen::RowVectorXd> rows;
  for (int skip = 0; skip <= n; ++skip) {
    // facet opposite local vertex `skip`
    std::vector<Vec> fpts;
    for (int i = 0; i <= n; ++i)
      if (i != skip) fpts.push_back(cell.verts[i]);
    Vec nf = facet_normal(fpts);
    Mat N = voigt_normal_rows(nf);
    for (const auto& e : mb.exps) {
      if (e[skip] != 0) continue;  // lattice point must lie on the facet
      Vec lam(n + 1);
      for (int i = 0; i <= n; ++i) lam[i] = double(e[i]) / k;
      Vec mono = mb.eval_all(lam);
      for (int r = 0; r < n; ++r) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(ncoef);
        for (int c = 0; c < ns; ++c)
          for (int m = 0; m < nm; ++m) row[c * nm + m] = N(r, c) * mono[m];
        rows.push_back(std::move(row));
      }
    }
  }
  Mat A(rows.size(), ncoef);
  for (size_t i = 0; i < rows.size(); ++i) A.row(i) = rows[i];
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double tol = 1e-10 * sv[0];
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  int dim_null = ncoef - rank;
  // known dimensions; a mismatch signals a constraint-matrix bug
  int expected = (n == 2 ? 3 : 6) * poly_dim(n, k - 2);
  if (dim_null != expected)
    throw std::runtime_error("element_bubble_space: unexpected nullspace rank");

  std::vector<Poly> basis;
  Mat M = monomial_moment_matrix(n, k, cell.volume);
  Vec w = voigt_weights(n);
  Mat V = svd.matrixV().rightCols(dim_null);
  // L2 Gram of the nullspace vectors
  Mat G(dim_null, dim_null);
  for (int i = 0; i < dim_null; ++i)
    for (int j = 0; j <= i; ++j) {
      double g = 0;
      for (int c = 0; c < ns; ++c) {
        Eigen::Map<const Vec> ci(V.col(i).data() + c * nm, nm);
        Eigen::Map<const Vec> cj(V.col(j).data() + c * nm, nm);
        g += w[c] * ci.dot(M * cj);
      }
      G(i, j) = G(j, i) = g;
    }
  Eigen::SelfAdjointEigenSolver<Mat> eig(G);
  Mat T = eig.eigenvectors() *
          eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse().asDiagonal();
  Mat B = V * T;  // columns: L2-orthonormal coefficient vectors
  for (int j = 0; j < dim_null; ++j) {
    Poly p(n, k, ns);
    for (int c = 0; c < ns; ++c)
      p.coeff.row(c) = B.col(j).segment(c * nm, nm).transpose();
    basis.push_back(std::move(p));
  }
  return basis;
}

// A bubble space on one macro-element: piecewise polynomials with vanishing
// normal trace on the macro boundary.
struct BubbleSpace {
  Family family;
  int macro_id = -1;
  int degree = 0;
  std::vector<PiecewisePoly> basis;  // L2-orthonormal on the macro
};

namespace detail {

// Coefficient layout helpers for functions supported on the cells of one
// macro: vec index = (local_cell * ns + comp) * nm + mono.
struct MacroCoeffs {
  const MacroMesh* mm;
  const Macro* mac;
  int degree, ns, nm;
  std::vector<CellGeometry> geoms;

  MacroCoeffs(const MacroMesh& m, int macro_id, int k)
      : mm(&m), mac(&m.macros[macro_id]), degree(k),
        ns(sym_dim(m.fine.dim)), nm(poly_dim(m.fine.dim, k)) {
    for (int c : mac->cells) geoms.push_back(m.fine.cell_geometry(c));
  }

  int ncells() const { return static_cast<int>(mac->cells.size()); }
  int size() const { return ncells() * ns * nm; }

  int local_cell(int fine_cell) const {
    for (int i = 0; i < ncells(); ++i)
      if (mac->cells[i] == fine_cell) return i;
    return -1;
  }

  // Adds to `row` the functional [w . tau(pt)] evaluated on local cell lc.
  void accumulate(Eigen::RowVectorXd& row, int lc, const Vec& point,
                  const Vec& w, double sign = 1.0) const {
    Vec lam = geoms[lc].barycentric(point);
    Vec mono = MonoBasis::get(mm->fine.dim, degree).eval_all(lam);
    for (int c = 0; c < ns; ++c)
      for (int m = 0; m < nm; ++m)
        row[(lc * ns + c) * nm + m] += sign * w[c] * mono[m];
  }

  PiecewisePoly to_piecewise(const Vec& coeffs) const {
    PiecewisePoly p(mm->fine.dim, degree, ns);
    for (int lc = 0; lc < ncells(); ++lc) {
      Mat& blk = p.part(mac->cells[lc]);
      for (int c = 0; c < ns; ++c)
        blk.row(c) = coeffs.segment((lc * ns + c) * nm, nm).transpose();
    }
    return p;
  }

  Vec from_piecewise(const PiecewisePoly& p) const {
    Vec v = Vec::Zero(size());
    for (int lc = 0; lc < ncells(); ++lc) {
      auto it = p.parts.find(mac->cells[lc]);
      if (it == p.parts.end()) continue;
      for (int c = 0; c < ns; ++c)
        v.segment((lc * ns + c) * nm, nm) = it->second.row(c).transpose();
    }
    return v;
  }

  // Exact L2 Gram (Voigt metric) of coefficient vectors.
  Mat gram(const Mat& columns) const {
    const int nb = static_cast<int>(columns.cols());
    Mat G = Mat::Zero(nb, nb);
    Vec w = voigt_weights(mm->fine.dim);
    for (int lc = 0; lc < ncells(); ++lc) {
      Mat M = monomial_moment_matrix(mm->fine.dim, degree, geoms[lc].volume);
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j <= i; ++j) {
          double g = 0;
          for (int c = 0; c < ns; ++c) {
            Eigen::Map<const Vec> ci(
                columns.col(i).data() + (lc * ns + c) * nm, nm);
            Eigen::Map<const Vec> cj(
                columns.col(j).data() + (lc * ns + c) * nm, nm);
            g += w[c] * ci.dot(M * cj);
          }
          G(i, j) += g;
          if (i != j) G(j, i) += g;
        }
    }
    return G;
  }
};

// Orthonormalizes columns in the L2 metric, dropping rank-deficient
// directions (relative eigenvalue threshold).
inline Mat gram_reduce(const MacroCoeffs& mc, const Mat& columns,
                       double rel_tol = 1e-10) {
  Mat G = mc.gram(columns);
  Eigen::SelfAdjointEigenSolver<Mat> eig(G);
  double lmax = eig.eigenvalues().maxCoeff();
  int keep = 0;
  for (int i = 0; i < eig.eigenvalues().size(); ++i)
    if (eig.eigenvalues()[i] > rel_tol * lmax) ++keep;
  Mat T(columns.cols(), keep);
  int k = 0;
  for (int i = 0; i < eig.eigenvalues().size(); ++i)
    if (eig.eigenvalues()[i] > rel_tol * lmax)
      T.col(k++) = eig.eigenvectors().col(i) / std::sqrt(eig.eigenvalues()[i]);
  return columns * T;
}

// The P_k Lagrange nodal function of the fine submesh of a macro at a given
// node (identified by coordinates), restricted to the macro, times a constant
// Voigt tensor.
inline Vec nodal_times_tensor(const MacroCoeffs& mc, const Vec& node,
                              const Vec& tensor) {
  Vec out = Vec::Zero(mc.size());
  const int k = mc.degree;
  const int dim = mc.mm->fine.dim;
  auto nodes = lagrange_lattice(dim, k);
  for (int lc = 0; lc < mc.ncells(); ++lc) {
    Vec lam = mc.geoms[lc].barycentric(node);
    // the node must be a lattice node of this cell to contribute
    int hit = -1;
    for (size_t a = 0; a < nodes.size(); ++a)
      if ((nodes[a] - lam).lpNorm<Eigen::Infinity>() < 1e-10) hit = static_cast<int>(a);
    bool inside = lam.minCoeff() > -1e-10;
    if (!inside || hit < 0) continue;
    Eigen::RowVectorXd coeffs = lagrange_coeffs(dim, k).row(hit);
    for (int c = 0; c < mc.ns; ++c)
      for (int m = 0; m < mc.nm; ++m)
        out[(lc * mc.ns + c) * mc.nm + m] += tensor[c] * coeffs[m];
  }
  return out;
}

}  // namespace detail

// Spanning-set construction of the 2D degree-2 macro bubble space:
// per-cell H(div;S) bubbles, continuous interior-edge functions, and the
// tangential functions at the m_i.
inline Mat macro_bubble_columns_2d(const detail::MacroCoeffs& mc) {
  const MacroMesh& mm = *mc.mm;
  const Macro& mac = *mc.mac;
  std::vector<Vec> cols;
  // (1) element bubbles
  for (int lc = 0; lc < mc.ncells(); ++lc) {
    auto eb = element_bubble_space(mc.geoms[lc], 2);
    for (const auto& p : eb) {
      Vec v = Vec::Zero(mc.size());
      for (int c = 0; c < mc.ns; ++c)
        v.segment((lc * mc.ns + c) * mc.nm, mc.nm) = p.coeff.row(c).transpose();
      cols.push_back(std::move(v));
    }
  }
  // (2) continuous functions at d_i on the interior edges E_i
  const std::array<std::pair<std::string, std::string>, 3> eends = {
      std::make_pair(std::string("m1"), std::string("m2")),
      std::make_pair(std::string("m1"), std::string("x0")),
      std::make_pair(std::string("m1"), std::string("m3"))};
  for (int i = 0; i < 3; ++i) {
    Vec a = mac.named_points.at(eends[i].first);
    Vec b = mac.named_points.at(eends[i].second);
    Vec t = (b - a).normalized();
    Vec n(2);
    n << -t[1], t[0];
    Vec d = mac.named_points.at("d" + std::to_string(i + 1));
    cols.push_back(detail::nodal_times_tensor(mc, d, sym_dyad_voigt(t, n)));
    cols.push_back(detail::nodal_times_tensor(mc, d, dyad_voigt(n)));
  }
  // (3) tangential functions at m_i; t is the tangent of the boundary edge
  const std::array<std::pair<std::string, std::string>, 3> bedges = {
      std::make_pair(std::string("x1"), std::string("x2")),
      std::make_pair(std::string("x0"), std::string("x1")),
      std::make_pair(std::string("x0"), std::string("x2"))};
  for (int i = 0; i < 3; ++i) {
    Vec a = mac.named_points.at(bedges[i].first);
    Vec b = mac.named_points.at(bedges[i].second);
    Vec t = (b - a).normalized();
    Vec m = mac.named_points.at("m" + std::to_string(i + 1));
    cols.push_back(detail::nodal_times_tensor(mc, m, dyad_voigt(t)));
  }
  Mat C(mc.size(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) C.col(j) = cols[j];
  (void)mm;
  return C;
}

// Spanning-set construction of the 3D degree-3 macro bubble space.
inline Mat macro_bubble_columns_3d_p3(const detail::MacroCoeffs& mc) {
  const Macro& mac = *mc.mac;
  std::vector<Vec> cols;
  for (int lc = 0; lc < mc.ncells(); ++lc) {
    auto eb = element_bubble_space(mc.geoms[lc], 3);
    for (const auto& p : eb) {
      Vec v = Vec::Zero(mc.size());
      for (int c = 0; c < mc.ns; ++c)
        v.segment((lc * mc.ns + c) * mc.nm, mc.nm) = p.coeff.row(c).transpose();
      cols.push_back(std::move(v));
    }
  }
  // (2) continuous functions at the interior-face centroids d_1..d_3
  const std::array<std::array<std::string, 3>, 3> ifaces = {
      std::array<std::string, 3>{"x1", "m1", "m2"},
      std::array<std::string, 3>{"x1", "x3", "m2"},
      std::array<std::string, 3>{"x3", "m2", "m3"}};
  for (int i = 0; i < 3; ++i) {
    std::vector<Vec> fp;
    for (const auto& nm : ifaces[i]) fp.push_back(mac.named_points.at(nm));
    Vec n = facet_normal(fp);
    Vec t1 = (fp[1] - fp[0]).normalized();
    Vec t2 = cross3(n, t1);
    Vec d = mac.named_points.at("d" + std::to_string(i + 1));
    cols.push_back(detail::nodal_times_tensor(mc, d, sym_dyad_voigt(t1, n)));
    cols.push_back(detail::nodal_times_tensor(mc, d, sym_dyad_voigt(t2, n)));
    cols.push_back(detail::nodal_times_tensor(mc, d, dyad_voigt(n)));
  }
  // (3) tangential functions at the trisection points g_1..g_8 of the four
  // bisection-generated edges; each such edge lies inside one boundary face.
  struct GEdge {
    std::string a, b;               // edge endpoints
    std::array<std::string, 3> f;   // containing boundary face
    int g0;                         // first g index of the pair
  };
  const std::array<GEdge, 4> gedges = {
      GEdge{"m1", "m2", {"x0", "x2", "x3"}, 1},
      GEdge{"x1", "m2", {"x0", "x1", "x2"}, 3},
      GEdge{"x3", "m2", {"x0", "x2", "x3"}, 5},
      GEdge{"m3", "m2", {"x0", "x1", "x2"}, 7}};
  for (const auto& ge : gedges) {
    Vec a = mac.named_points.at(ge.a), b = mac.named_points.at(ge.b);
    Vec t1 = (b - a).normalized();
    std::vector<Vec> fp;
    for (const auto& nm : ge.f) fp.push_back(mac.named_points.at(nm));
    Vec n = facet_normal(fp);
    Vec t2 = cross3(t1, n).normalized();
    for (int which = 0; which < 2; ++which) {
      Vec g = mac.named_points.at("g" + std::to_string(ge.g0 + which));
      cols.push_back(detail::nodal_times_tensor(mc, g, dyad_voigt(t2)));
      cols.push_back(detail::nodal_times_tensor(mc, g, sym_dyad_voigt(t1, t2)));
    }
  }
  Mat C(mc.size(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) C.col(j) = cols[j];
  return C;
}

// Constraint-nullspace construction of the 3D degree-2 macro bubble space
// Sigma_{M,2,b} on the twelve-cell split: the Chen-Huang continuity
// conditions, H_0(div), and the extra vanishing conditions.
inline Mat macro_bubble_columns_3d_p2(const detail::MacroCoeffs& mc) {
  const MacroMesh& mm = *mc.mm;
  const Macro& mac = *mc.mac;
  const Mesh& fine = mm.fine;
  const int k = 2;
  std::vector<Eigen::RowVectorXd> rows;
  auto new_row = [&]() -> Eigen::RowVectorXd& {
    rows.emplace_back(Eigen::RowVectorXd::Zero(mc.size()));
    return rows.back();
  };
  auto facet_lattice_points = [&](const Mesh::Facet& f) {
    std::vector<Vec> pts;
    std::vector<Vec> vv;
    for (int v : f.verts) vv.push_back(fine.vertices[v]);
    // degree-k lattice on the facet triangle
    const auto& mb = MonoBasis::get(2, k);
    for (const auto& e : mb.exps) {
      Vec p = Vec::Zero(3);
      for (int i = 0; i < 3; ++i) p += (double(e[i]) / k) * vv[i];
      pts.push_back(p);
    }
    return pts;
  };

  // interior faces: full normal-jump continuity; boundary: vanishing trace
  std::set<int> maccells(mac.cells.begin(), mac.cells.end());
  for (int lc = 0; lc < mc.ncells(); ++lc) {
    int c = mac.cells[lc];
    for (int fi : fine.cell_facets[c]) {
      const auto& f = fine.facets[fi];
      bool interior = fine.interior(f) && maccells.count(f.cell_plus) &&
                      maccells.count(f.cell_minus);
      if (interior && f.cell_plus != c) continue;  // visit once from K+
      Mat N = voigt_normal_rows(f.normal);
      for (const auto& p : facet_lattice_points(f)) {
        for (int r = 0; r < 3; ++r) {
          auto& row = new_row();
          mc.accumulate(row, lc, p, N.row(r).transpose(), 1.0);
          if (interior)
            mc.accumulate(row, mc.local_cell(f.cell_minus), p,
                          N.row(r).transpose(), -1.0);
        }
      }
    }
  }
  // vertex continuity at the nine vertices of the macro
  std::set<int> vset;
  for (int c : mac.cells)
    for (int v : fine.cells[c]) vset.insert(v);
  for (int v : vset) {
    std::vector<int> star;
    for (int lc = 0; lc < mc.ncells(); ++lc)
      for (int w : fine.cells[mac.cells[lc]])
        if (w == v) star.push_back(lc);
    for (size_t s = 1; s < star.size(); ++s)
      for (int comp = 0; comp < mc.ns; ++comp) {
        Vec w = Vec::Zero(mc.ns);
        w[comp] = 1.0;
        auto& row = new_row();
        mc.accumulate(row, star[0], fine.vertices[v], w, 1.0);
        mc.accumulate(row, star[s], fine.vertices[v], w, -1.0);
      }
  }
  // edge nn-continuity on the twenty-six edges
  std::map<std::array<int, 2>, std::vector<int>> edge_star;
  for (int lc = 0; lc < mc.ncells(); ++lc) {
    const auto& cv = fine.cells[mac.cells[lc]];
    for (size_t i = 0; i < cv.size(); ++i)
      for (size_t j = i + 1; j < cv.size(); ++j)
        edge_star[{std::min(cv[i], cv[j]), std::max(cv[i], cv[j])}]
            .push_back(lc);
  }
  for (const auto& [e, star] : edge_star) {
    if (star.size() < 2) continue;
    Vec a = fine.vertices[e[0]], b = fine.vertices[e[1]];
    Vec t = (b - a).normalized();
    Vec n1 = perp_unit(t);
    Vec n2 = cross3(t, n1);
    std::array<Vec, 3> forms = {voigt_bilinear_row(n1, n1),
                                voigt_bilinear_row(n1, n2),
                                voigt_bilinear_row(n2, n2)};
    for (int pt = 0; pt <= k; ++pt) {
      Vec p = a + (b - a) * (double(pt) / k);
      for (size_t s = 1; s < star.size(); ++s)
        for (const auto& q : forms) {
          auto& row = new_row();
          mc.accumulate(row, star[0], p, q, 1.0);
          mc.accumulate(row, star[s], p, q, -1.0);
        }
    }
  }
  // tau vanishes at the face centroids m_1..m_4
  for (int i = 1; i <= 4; ++i) {
    int v = mac.labels.at("m" + std::to_string(i));
    int lc0 = -1;
    for (int lc = 0; lc < mc.ncells() && lc0 < 0; ++lc)
      for (int w : fine.cells[mac.cells[lc]])
        if (w == v) lc0 = lc;
    for (int comp = 0; comp < mc.ns; ++comp) {
      Vec w = Vec::Zero(mc.ns);
      w[comp] = 1.0;
      auto& row = new_row();
      mc.accumulate(row, lc0, fine.vertices[v], w, 1.0);
    }
  }
  // nn-components vanish at the midpoints of the in-face edges (centroid to
  // face vertex, twelve edges)
  for (int i = 1; i <= 4; ++i) {
    int mi = mac.labels.at("m" + std::to_string(i));
    // face opposite x_{i-1}: its three vertices
    for (int j = 0; j < 4; ++j) {
      if (j == i - 1) continue;
      int vj = mac.corners[j];
      std::array<int, 2> e{std::min(mi, vj), std::max(mi, vj)};
      Vec a = fine.vertices[e[0]], b = fine.vertices[e[1]];
      Vec t = (b - a).normalized();
      Vec n1 = perp_unit(t);
      Vec n2 = cross3(t, n1);
      Vec p = 0.5 * (a + b);
      int lc0 = edge_star.at(e)[0];
      for (const auto& q : {voigt_bilinear_row(n1, n1),
                            voigt_bilinear_row(n1, n2),
                            voigt_bilinear_row(n2, n2)}) {
        auto& row = new_row();
        mc.accumulate(row, lc0, p, q, 1.0);
      }
    }
  }

  Mat A(rows.size(), mc.size());
  for (size_t i = 0; i < rows.size(); ++i) A.row(i) = rows[i];
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double tol = 1e-9 * sv[0];
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  int dim_null = mc.size() - rank;
  if (dim_null <= 0)
    throw std::runtime_error("macro_bubble_space: empty basis");
  return svd.matrixV().rightCols(dim_null);
}

// Builds the macro bubble space from scratch on the given macro.
inline BubbleSpace macro_bubble_space(const MacroMesh& mm, int macro_id) {
  const int k = family_degree(mm.family);
  detail::MacroCoeffs mc(mm, macro_id, k);
  Mat cols;
  switch (mm.family) {
    case Family::D2P2: cols = macro_bubble_columns_2d(mc); break;
    case Family::D3P3: cols = macro_bubble_columns_3d_p3(mc); break;
    case Family::D3P2: cols = macro_bubble_columns_3d_p2(mc); break;
  }
  Mat B = detail::gram_reduce(mc, cols);
  if (B.cols() == 0) throw std::runtime_error("macro_bubble_space: empty basis");
  BubbleSpace bs;
  bs.family = mm.family;
  bs.macro_id = macro_id;
  bs.degree = k;
  for (int j = 0; j < B.cols(); ++j)
    bs.basis.push_back(mc.to_piecewise(B.col(j)));
  return bs;
}

}  // namespace elastmix
