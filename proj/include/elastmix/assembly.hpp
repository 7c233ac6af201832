#pragma once

#include <cstdlib>
#include <thread>

#include "material.hpp"
#include "solver.hpp"
#include "spaces.hpp"

namespace elastmix {

inline int thread_cap() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("ELASTMIX_THREADS")) {
    int k = std::atoi(env);
    if (k > 0) hw = std::min(hw, k);
  }
  return hw;
}

// Deterministic cell-parallel loop: contiguous chunks, results merged in
// cell order by the caller (per-thread buffers indexed by chunk).
template <class Body>
void parallel_chunks(int n, const Body& body) {
  int nt = std::min(thread_cap(), std::max(1, n));
  if (nt == 1) {
    body(0, 0, n);
    return;
  }
  std::vector<std::thread> workers;
  int chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    int lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    workers.emplace_back([&body, t, lo, hi]() { body(t, lo, hi); });
  }
  for (auto& w : workers) w.join();
}

// M[i][j] = int_Omega (A phi_j) : phi_i dx (Voigt metric, off-diagonals
// weighted by 2).
inline SpMat assemble_mass(const Mesh& mesh, const FESpace& S,
                           const Material& mat) {
  const int ns = sym_dim(mesh.dim);
  const int qdeg = std::min(10, 2 * S.degree + 2);
  auto rule = simplex_quadrature(mesh.dim, qdeg);
  const int nq = static_cast<int>(rule.points.size());
  Mat WA = voigt_weights(mesh.dim).asDiagonal() * mat.compliance_matrix();
  const int ncells = static_cast<int>(mesh.cells.size());
  std::vector<std::vector<Triplet>> buffers(thread_cap());

  parallel_chunks(ncells, [&](int tid, int lo, int hi) {
    auto& buf = buffers[tid];
    const auto& mb = MonoBasis::get(mesh.dim, S.degree);
    Mat monoq(mb.size(), nq);
    for (int q = 0; q < nq; ++q) monoq.col(q) = mb.eval_all(rule.points[q]);
    for (int c = lo; c < hi; ++c) {
      CellGeometry geom = mesh.cell_geometry(c);
      const auto& dofs = S.cell_dofs[c];
      const int nl = static_cast<int>(dofs.size());
      if (nl == 0) continue;
      // values: nl x (ns*nq)
      Mat V(nl, ns * nq), VA(nl, ns * nq);
      for (int a = 0; a < nl; ++a) {
        const Mat& coef = S.basis[dofs[a]].parts.at(c);
        Mat vals = coef * monoq;  // ns x nq
        Mat avals = WA * vals;
        for (int q = 0; q < nq; ++q) {
          double w = rule.weights[q];
          V.block(a, q * ns, 1, ns) = vals.col(q).transpose();
          VA.block(a, q * ns, 1, ns) = w * avals.col(q).transpose();
        }
      }
      double fact = (mesh.dim == 2 ? 2.0 : 6.0) * geom.volume;
      Mat block = fact * (V * VA.transpose());
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b)
          buf.emplace_back(dofs[a], dofs[b], block(a, b));
    }
  });

  SpMat M(S.dof_count, S.dof_count);
  std::vector<Triplet> all;
  for (auto& b : buffers) {
    all.insert(all.end(), b.begin(), b.end());
    b.clear();
  }
  M.setFromTriplets(all.begin(), all.end());
  return M;
}

// B[i][j] = int_Omega div phi_j . psi_i dx.
inline SpMat assemble_div(const Mesh& mesh, const FESpace& S,
                          const FESpace& V) {
  const int qdeg = std::min(10, 2 * S.degree + 2);
  auto rule = simplex_quadrature(mesh.dim, qdeg);
  const int nq = static_cast<int>(rule.points.size());
  const int ncells = static_cast<int>(mesh.cells.size());
  std::vector<std::vector<Triplet>> buffers(thread_cap());

  parallel_chunks(ncells, [&](int tid, int lo, int hi) {
    auto& buf = buffers[tid];
    const auto& mbs = MonoBasis::get(mesh.dim, S.degree > 0 ? S.degree - 1 : 0);
    const auto& mbv = MonoBasis::get(mesh.dim, V.degree);
    Mat monos(mbs.size(), nq), monov(mbv.size(), nq);
    for (int q = 0; q < nq; ++q) {
      monos.col(q) = mbs.eval_all(rule.points[q]);
      monov.col(q) = mbv.eval_all(rule.points[q]);
    }
    for (int c = lo; c < hi; ++c) {
      CellGeometry geom = mesh.cell_geometry(c);
      const auto& sdofs = S.cell_dofs[c];
      const auto& vdofs = V.cell_dofs[c];
      if (sdofs.empty() || vdofs.empty()) continue;
      const int nls = static_cast<int>(sdofs.size());
      const int nlv = static_cast<int>(vdofs.size());
      const int n = mesh.dim;
      Mat DS(nls, n * nq), DV(nlv, n * nq);
      for (int a = 0; a < nls; ++a) {
        Poly div = S.basis[sdofs[a]].on_cell(c).divergence(geom);
        Mat vals = div.coeff * monos;  // n x nq
        for (int q = 0; q < nq; ++q)
          DS.block(a, q * n, 1, n) = vals.col(q).transpose();
      }
      for (int b = 0; b < nlv; ++b) {
        const Mat& coef = V.basis[vdofs[b]].parts.at(c);
        Mat vals = coef * monov;
        for (int q = 0; q < nq; ++q)
          DV.block(b, q * n, 1, n) =
              rule.weights[q] * vals.col(q).transpose();
      }
      double fact = (mesh.dim == 2 ? 2.0 : 6.0) * geom.volume;
      Mat block = fact * (DV * DS.transpose());  // nlv x nls
      for (int b = 0; b < nlv; ++b)
        for (int a = 0; a < nls; ++a)
          buf.emplace_back(vdofs[b], sdofs[a], block(b, a));
    }
  });

  SpMat B(V.dof_count, S.dof_count);
  std::vector<Triplet> all;
  for (auto& b : buffers) {
    all.insert(all.end(), b.begin(), b.end());
    b.clear();
  }
  B.setFromTriplets(all.begin(), all.end());
  return B;
}

// F[i] = int_Omega f . psi_i dx with error-norm-grade quadrature.
template <class F>
Vec assemble_load(const Mesh& mesh, const FESpace& V, F&& f, int qdeg = 8) {
  auto rule = simplex_quadrature(mesh.dim, qdeg);
  Vec out = Vec::Zero(V.dof_count);
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    CellGeometry geom = mesh.cell_geometry(static_cast<int>(c));
    for (int i : V.cell_dofs[c]) {
      Poly psi = V.basis[i].on_cell(static_cast<int>(c));
      out[i] += rule.integrate(geom, [&](const Vec& lam) {
        return f(geom.point(lam)).dot(psi.eval(lam));
      });
    }
  }
  return out;
}

// G[j] = int_dOmega (phi_j n) . g ds, the natural boundary functional of the
// pure displacement problem (zero when g = 0).
template <class G>
Vec assemble_boundary_term(const Mesh& mesh, const FESpace& S, G&& g,
                           int qdeg = 8) {
  Vec out = Vec::Zero(S.dof_count);
  const int fd = mesh.dim - 1;
  // facet rule: Gauss on [0,1] (2D) or triangle rule (3D)
  std::vector<Vec> fpts;  // barycentric on the facet
  std::vector<double> fw;
  if (fd == 1) {
    std::vector<double> x, w;
    gauss_legendre01((qdeg + 2) / 2 + 1, x, w);
    for (size_t q = 0; q < x.size(); ++q) {
      Vec lam(2);
      lam << 1 - x[q], x[q];
      fpts.push_back(lam);
      fw.push_back(w[q]);
    }
  } else {
    auto rule = simplex_quadrature(2, qdeg);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      fpts.push_back(rule.points[q]);
      fw.push_back(rule.weights[q] * 2.0);  // reference triangle area 1/2
    }
  }
  for (const auto& f : mesh.facets) {
    if (mesh.interior(f)) continue;
    int c = f.cell_plus;
    CellGeometry geom = mesh.cell_geometry(c);
    std::vector<Vec> fv;
    for (int v : f.verts) fv.push_back(mesh.vertices[v]);
    double measure = facet_measure(fv);
    Mat N = voigt_normal_rows(f.normal);
    for (int j : S.cell_dofs[c]) {
      Poly phi = S.basis[j].on_cell(c);
      double acc = 0;
      for (size_t q = 0; q < fpts.size(); ++q) {
        Vec x = Vec::Zero(mesh.dim);
        for (int i = 0; i <= fd; ++i) x += fpts[q][i] * fv[i];
        Vec tau = phi.eval(geom.barycentric(x));
        acc += fw[q] * (N * tau).dot(g(x));
      }
      out[j] += acc * measure / (fd == 1 ? 1.0 : 0.5);
    }
  }
  return out;
}

struct ErrorNorms {
  double stress_l2 = 0;
  double stress_hdiv = 0;
  double displacement_l2 = 0;
};

// Quadrature approximation of ||sigma-sigma_h||_0, ||sigma-sigma_h||_Hdiv,
// ||u-u_h||_0 at degree 8.
template <class FSigma, class FDiv, class FU>
ErrorNorms error_norms(const Mesh& mesh, const FESpace& S, const Vec& sig,
                       const FESpace& V, const Vec& u, FSigma&& sigma_exact,
                       FDiv&& div_exact, FU&& u_exact, int qdeg = 8) {
  auto rule = simplex_quadrature(mesh.dim, qdeg);
  Vec w = voigt_weights(mesh.dim);
  double es = 0, ed = 0, eu = 0;
  for (size_t c = 0; c < mesh.cells.size(); ++c) {
    CellGeometry geom = mesh.cell_geometry(static_cast<int>(c));
    Poly sh = S.combine_on_cell(sig, static_cast<int>(c));
    Poly dh = sh.divergence(geom);
    Poly uh = V.combine_on_cell(u, static_cast<int>(c));
    es += rule.integrate(geom, [&](const Vec& lam) {
      Vec d = sigma_exact(geom.point(lam)) - sh.eval(lam);
      return d.cwiseProduct(d).dot(w);
    });
    ed += rule.integrate(geom, [&](const Vec& lam) {
      Vec d = div_exact(geom.point(lam)) - dh.eval(lam);
      return d.squaredNorm();
    });
    eu += rule.integrate(geom, [&](const Vec& lam) {
      Vec d = u_exact(geom.point(lam)) - uh.eval(lam);
      return d.squaredNorm();
    });
  }
  ErrorNorms e;
  e.stress_l2 = std::sqrt(es);
  e.stress_hdiv = std::sqrt(es + ed);
  e.displacement_l2 = std::sqrt(eu);
  return e;
}

}  // namespace elastmix
