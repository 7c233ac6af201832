#pragma once

#include <functional>

#include "bubbles.hpp"
#include "verify.hpp"

namespace elastmix {

// Global node numbering of the continuous P_k Lagrange space, built
// structurally from mesh entities (no coordinate matching).
struct NodeTable {
  int dim = 0, k = 0;
  int n_nodes = 0;
  std::vector<std::vector<int>> cell_nodes;  // [cell][local lattice index]
  std::vector<Vec> node_coords;

  static NodeTable build(const Mesh& mesh, int k) {
    NodeTable nt;
    nt.dim = mesh.dim;
    nt.k = k;
    const auto& mb = MonoBasis::get(mesh.dim, k);
    std::map<std::vector<int>, int> keys;  // entity key -> node id
    auto node_id = [&](std::vector<int> key, const Vec& coord) {
      auto it = keys.find(key);
      if (it != keys.end()) return it->second;
      int id = nt.n_nodes++;
      keys.emplace(std::move(key), id);
      nt.node_coords.push_back(coord);
      return id;
    };
    std::map<std::vector<int>, int> facet_of;
    for (size_t f = 0; f < mesh.facets.size(); ++f)
      facet_of[mesh.facets[f].verts] = static_cast<int>(f);
    nt.cell_nodes.resize(mesh.cells.size());
    for (size_t c = 0; c < mesh.cells.size(); ++c) {
      const auto& cv = mesh.cells[c];
      for (int m = 0; m < mb.size(); ++m) {
        const auto& e = mb.exps[m];
        std::vector<int> sup;
        for (int i = 0; i <= mesh.dim; ++i)
          if (e[i] > 0) sup.push_back(i);
        Vec coord = Vec::Zero(mesh.dim);
        for (int i = 0; i <= mesh.dim; ++i)
          coord += (double(e[i]) / k) * mesh.vertices[cv[i]];
        int id;
        if (sup.size() == 1) {
          id = node_id({0, cv[sup[0]]}, coord);
        } else if (sup.size() == 2) {
          int a = cv[sup[0]], b = cv[sup[1]];
          int ea = e[sup[0]], eb = e[sup[1]];
          if (a > b) {
            std::swap(a, b);
            std::swap(ea, eb);
          }
          id = node_id({1, a, b, ea}, coord);
        } else if (sup.size() == 3 && mesh.dim == 3) {
          std::vector<int> fv = {cv[sup[0]], cv[sup[1]], cv[sup[2]]};
          std::sort(fv.begin(), fv.end());
          // for k<=3 there is at most one interior node per face
          id = node_id({2, fv[0], fv[1], fv[2]}, coord);
        } else {
          // cell-interior node
          id = node_id({3, static_cast<int>(c), m}, coord);
        }
        nt.cell_nodes[c].push_back(id);
      }
    }
    return nt;
  }
};

struct FESpace {
  std::string kind;
  int dim = 0;
  int degree = 0;
  int value_dim = 1;
  int dof_count = 0;
  std::vector<PiecewisePoly> basis;
  std::vector<std::vector<int>> cell_dofs;  // per fine cell
  int n_continuous = 0;                     // stress spaces: leading block
  std::vector<int> macro_additions;         // per macro

  void index_supports(size_t n_cells) {
    cell_dofs.assign(n_cells, {});
    for (size_t j = 0; j < basis.size(); ++j)
      for (const auto& [c, blk] : basis[j].parts)
        cell_dofs[c].push_back(static_cast<int>(j));
    dof_count = static_cast<int>(basis.size());
  }

  // Linear combination restricted to one cell.
  Poly combine_on_cell(const Vec& coeffs, int cell) const {
    Poly p(dim, degree, value_dim);
    for (int j : cell_dofs[cell]) {
      auto it = basis[j].parts.find(cell);
      p.coeff += coeffs[j] * it->second;
    }
    return p;
  }
};

// Fully discontinuous P_{k-1} vector displacement space.
inline FESpace displacement_space(const Mesh& mesh, int k) {
  if (k < 2) throw std::invalid_argument("displacement_space: k must be >= 2");
  FESpace V;
  V.kind = "displacement-P" + std::to_string(k - 1);
  V.dim = mesh.dim;
  V.degree = k - 1;
  V.value_dim = mesh.dim;
  const Mat& lc = lagrange_coeffs(mesh.dim, k - 1);
  for (size_t c = 0; c < mesh.cells.size(); ++c)
    for (int node = 0; node < lc.rows(); ++node)
      for (int comp = 0; comp < mesh.dim; ++comp) {
        PiecewisePoly p(mesh.dim, k - 1, mesh.dim);
        p.part(static_cast<int>(c)).row(comp) = lc.row(node);
        V.basis.push_back(std::move(p));
      }
  V.index_supports(mesh.cells.size());
  return V;
}

namespace detail {

// Ownership reduction: returns the coefficient columns (in the orthonormal
// B_M coordinates) spanning the complement of
//   C_M = {tau in B_M : tau continuous inside M, zero trace on non-owned
//          interior interfaces},
// i.e. the row space of the sampled constraint matrix.
inline Mat ownership_complement(const MacroMesh& mm, int macro_id,
                                const MacroCoeffs& mc, const Mat& Bcols) {
  const Mesh& fine = mm.fine;
  const int k = mc.degree;
  const int my = macro_id;
  std::vector<Eigen::RowVectorXd> rows;
  auto lattice_pts = [&](const Mesh::Facet& f) {
    std::vector<Vec> pts;
    std::vector<Vec> vv;
    for (int v : f.verts) vv.push_back(fine.vertices[v]);
    const int fd = fine.dim - 1;
    const auto& mb = MonoBasis::get(fd, k);
    for (const auto& e : mb.exps) {
      Vec p = Vec::Zero(fine.dim);
      for (int i = 0; i <= fd; ++i) p += (double(e[i]) / k) * vv[i];
      pts.push_back(p);
    }
    return pts;
  };
  const Macro& mac = *mc.mac;
  // (a) continuity inside the macro
  for (int fi : mac.interior_facets) {
    const auto& f = fine.facets[fi];
    int lp = mc.local_cell(f.cell_plus), lm = mc.local_cell(f.cell_minus);
    for (const auto& p : lattice_pts(f))
      for (int comp = 0; comp < mc.ns; ++comp) {
        Vec w = Vec::Zero(mc.ns);
        w[comp] = 1.0;
        rows.emplace_back(Eigen::RowVectorXd::Zero(mc.size()));
        mc.accumulate(rows.back(), lp, p, w, 1.0);
        mc.accumulate(rows.back(), lm, p, w, -1.0);
      }
  }
  // (b) zero trace on non-owned interior interfaces
  for (int lc = 0; lc < mc.ncells(); ++lc) {
    int c = mac.cells[lc];
    for (int fi : fine.cell_facets[c]) {
      const auto& f = fine.facets[fi];
      if (!fine.interior(f)) continue;  // domain boundary: owned
      int other = (f.cell_plus == c) ? f.cell_minus : f.cell_plus;
      int om = mm.cell_macro[other];
      if (om == my) continue;  // interior to the macro
      if (my < om) continue;   // owned
      for (const auto& p : lattice_pts(f))
        for (int comp = 0; comp < mc.ns; ++comp) {
          Vec w = Vec::Zero(mc.ns);
          w[comp] = 1.0;
          rows.emplace_back(Eigen::RowVectorXd::Zero(mc.size()));
          mc.accumulate(rows.back(), lc, p, w, 1.0);
        }
    }
  }
  if (rows.empty()) return Mat(Bcols.cols(), 0);
  Mat A(rows.size(), mc.size());
  for (size_t i = 0; i < rows.size(); ++i) A.row(i) = rows[i];
  Mat E = A * Bcols;  // functionals evaluated on the orthonormal basis
  Eigen::BDCSVD<Mat> svd(E, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double tol = (sv.size() && sv[0] > 0) ? 1e-9 * sv[0] : 0.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  return svd.matrixV().leftCols(rank);
}

// Bubble columns provider: L2-orthonormal coefficient columns of the
// macro bubble space in MacroCoeffs layout.
using BubbleProvider = std::function<Mat(const MacroMesh&, int,
                                         const MacroCoeffs&)>;

inline Mat family_bubble_columns(const MacroMesh& mm, int macro_id,
                                 const MacroCoeffs& mc) {
  Mat cols;
  switch (mm.family) {
    case Family::D2P2: cols = macro_bubble_columns_2d(mc); break;
    case Family::D3P3: cols = macro_bubble_columns_3d_p3(mc); break;
    case Family::D3P2: cols = macro_bubble_columns_3d_p2(mc); break;
  }
  (void)macro_id;
  return gram_reduce(mc, cols);
}

// Element bubbles only (used for the plain-mesh degree-2 element).
inline Mat element_bubble_columns(const MacroMesh& mm, int macro_id,
                                  const MacroCoeffs& mc) {
  (void)mm;
  (void)macro_id;
  std::vector<Vec> cols;
  for (int lc = 0; lc < mc.ncells(); ++lc) {
    auto eb = element_bubble_space(mc.geoms[lc], mc.degree);
    for (const auto& p : eb) {
      Vec v = Vec::Zero(mc.size());
      for (int c = 0; c < mc.ns; ++c)
        v.segment((lc * mc.ns + c) * mc.nm, mc.nm) = p.coeff.row(c).transpose();
      cols.push_back(std::move(v));
    }
  }
  Mat C(mc.size(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) C.col(j) = cols[j];
  return C;  // already L2-orthonormal per cell, jointly orthonormal too
}

inline FESpace build_stress_space(const MacroMesh& mm, int k,
                                  const std::string& kind,
                                  const BubbleProvider& bubbles) {
  const Mesh& fine = mm.fine;
  const int ns = sym_dim(fine.dim);
  FESpace S;
  S.kind = kind;
  S.dim = fine.dim;
  S.degree = k;
  S.value_dim = ns;

  // continuous vector-Lagrange part, one dof per (node, component)
  NodeTable nt = NodeTable::build(fine, k);
  const Mat& lc = lagrange_coeffs(fine.dim, k);
  std::vector<PiecewisePoly> scalar(nt.n_nodes);
  for (auto& p : scalar) p = PiecewisePoly(fine.dim, k, 1);
  for (size_t c = 0; c < fine.cells.size(); ++c)
    for (int m = 0; m < lc.rows(); ++m)
      scalar[nt.cell_nodes[c][m]].part(static_cast<int>(c)).row(0) += lc.row(m);
  for (int node = 0; node < nt.n_nodes; ++node)
    for (int comp = 0; comp < ns; ++comp) {
      PiecewisePoly p(fine.dim, k, ns);
      for (const auto& [cell, blk] : scalar[node].parts)
        p.part(cell).row(comp) = blk.row(0);
      S.basis.push_back(std::move(p));
    }
  S.n_continuous = static_cast<int>(S.basis.size());

  // per-macro bubble additions, ownership-reduced
  S.macro_additions.resize(mm.macros.size(), 0);
  for (size_t m = 0; m < mm.macros.size(); ++m) {
    MacroCoeffs mc(mm, static_cast<int>(m), k);
    Mat B = bubbles(mm, static_cast<int>(m), mc);
    Mat D = ownership_complement(mm, static_cast<int>(m), mc, B);
    S.macro_additions[m] = static_cast<int>(D.cols());
    Mat cols = B * D;
    for (int j = 0; j < cols.cols(); ++j)
      S.basis.push_back(mc.to_piecewise(cols.col(j)));
  }
  S.index_supports(fine.cells.size());
  return S;
}

}  // namespace detail

// The macro-element stress space Sigma_{k,h}.
inline FESpace stress_space(const MacroMesh& mm) {
  const int k = family_degree(mm.family);
  std::string kind = "stress-" + family_name(mm.family);
  return detail::build_stress_space(mm, k, kind, detail::family_bubble_columns);
}

// Each cell as its own macro (for the plain-mesh comparison element).
inline MacroMesh identity_macro_mesh(const Mesh& mesh) {
  MacroMesh mm;
  mm.family = Family::D3P2;
  mm.fine = mesh;
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    Macro mac;
    mac.cells = {static_cast<int>(c)};
    mac.corners = mesh.cells[c];
    mm.macros.push_back(std::move(mac));
  }
  mm.finalize();
  return mm;
}

// Continuous P2 stress plus per-element H(div;S) bubbles on a plain mesh;
// the paper's comparison element with suboptimal stress convergence.
inline FESpace stress_space_flat_p2(const MacroMesh& mm_identity) {
  return detail::build_stress_space(mm_identity, 2, "stress-3d-p2-flat",
                                    detail::element_bubble_columns);
}

// L2-orthonormal basis of RM(M)-orthogonal complement within V_M.
inline std::vector<PiecewisePoly> rm_perp_basis(const MacroMesh& mm,
                                                int macro_id, int k) {
  const int dim = mm.fine.dim;
  MacroDisplacement vm = macro_displacement_basis(mm, macro_id, k);
  const int N = static_cast<int>(vm.basis.size());
  auto rms = rm_fields(dim);
  auto rule = simplex_quadrature(dim, 2 * (k - 1) + 2);
  Mat P = Mat::Zero(static_cast<int>(rms.size()), N);
  Mat G = Mat::Zero(N, N);
  const auto& cells = mm.macros[macro_id].cells;
  for (int c : cells) {
    CellGeometry geom = mm.fine.cell_geometry(c);
    std::vector<int> loc;
    for (int i = 0; i < N; ++i)
      if (vm.basis[i].supported_on(c)) loc.push_back(i);
    for (int i : loc) {
      Poly vi = vm.basis[i].on_cell(c);
      for (size_t r = 0; r < rms.size(); ++r)
        P(r, i) += rule.integrate(geom, [&](const Vec& lam) {
          return rms[r](geom.point(lam)).dot(vi.eval(lam));
        });
      for (int j : loc) {
        if (j > i) continue;
        Poly vj = vm.basis[j].on_cell(c);
        double g = rule.integrate(geom, [&](const Vec& lam) {
          return vi.eval(lam).dot(vj.eval(lam));
        });
        G(i, j) += g;
        if (i != j) G(j, i) += g;
      }
    }
  }
  Eigen::BDCSVD<Mat> svd(P, Eigen::ComputeFullV);
  int rank = 0;
  const auto& sv = svd.singularValues();
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * sv[0]) ++rank;
  Mat Z = svd.matrixV().rightCols(N - rank);
  Mat Gz = Z.transpose() * G * Z;
  Eigen::SelfAdjointEigenSolver<Mat> eig(Gz);
  Mat T = eig.eigenvectors() *
          eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  Mat C = Z * T;
  std::vector<PiecewisePoly> out;
  for (int j = 0; j < C.cols(); ++j) {
    PiecewisePoly p(dim, k - 1, dim);
    for (int i = 0; i < N; ++i) {
      if (C(i, j) == 0.0) continue;
      for (const auto& [cell, blk] : vm.basis[i].parts) p.part(cell) += C(i, j) * blk;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace elastmix
