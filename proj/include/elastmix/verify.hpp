#pragma once

#include <random>

#include "bubbles.hpp"
#include "quadrature.hpp"
#include "solver.hpp"

namespace elastmix {

// Covariant transform of a vector field: v(x) = B^{-T} vhat(xhat).
template <class F>
auto covariant_vector(const AffineMap& map, F&& vhat) {
  return [map, vhat = std::forward<F>(vhat)](const Vec& x) -> Vec {
    return map.Binv.transpose() * vhat(map.pull(x));
  };
}

// Matrix Piola transform of a stress field: tau(x) = B tauhat(xhat) B^T.
template <class F>
auto piola_stress(const AffineMap& map, F&& tauhat) {
  return [map, tauhat = std::forward<F>(tauhat)](const Vec& x) -> Mat {
    return map.B * tauhat(map.pull(x)) * map.B.transpose();
  };
}

// Voigt-coefficient Piola transform of a Poly living on a reference cell,
// producing coefficients valid on the image cell (barycentric coordinates are
// affine invariant; `perm` reorders barycentric indices when the image cell
// stores its vertices in a different order).
inline Mat piola_poly_coeffs(const Mat& coeff, const AffineMap& map, int dim,
                             int degree, const std::vector<int>& perm) {
  const auto& mb = MonoBasis::get(dim, degree);
  Mat out(coeff.rows(), coeff.cols());
  std::vector<int> pexp(dim + 1);
  for (int m = 0; m < mb.size(); ++m) {
    for (int i = 0; i <= dim; ++i) pexp[perm[i]] = mb.exps[m][i];
    int pm = mb.index_of(pexp);
    Mat tau = voigt_to_matrix(coeff.col(m), dim);
    out.col(pm) = matrix_to_voigt(map.B * tau * map.B.transpose(), dim);
  }
  return out;
}

// The piecewise-P_{k-1} space V_M on a macro: per-cell nodal vector basis.
struct MacroDisplacement {
  int degree;  // k-1
  std::vector<PiecewisePoly> basis;
};

inline MacroDisplacement macro_displacement_basis(const MacroMesh& mm,
                                                  int macro_id, int k) {
  const int dim = mm.fine.dim;
  const int deg = k - 1;
  MacroDisplacement vm;
  vm.degree = deg;
  const Mat& lc = lagrange_coeffs(dim, deg);
  for (int c : mm.macros[macro_id].cells)
    for (int node = 0; node < lc.rows(); ++node)
      for (int comp = 0; comp < dim; ++comp) {
        PiecewisePoly p(dim, deg, dim);
        p.part(c).row(comp) = lc.row(node);
        vm.basis.push_back(std::move(p));
      }
  return vm;
}

// Rigid-motion basis fields (n(n+1)/2 of them) as callables.
inline std::vector<std::function<Vec(const Vec&)>> rm_fields(int dim) {
  std::vector<std::function<Vec(const Vec&)>> fields;
  for (int i = 0; i < dim; ++i)
    fields.push_back([dim, i](const Vec&) {
      Vec v = Vec::Zero(dim);
      v[i] = 1;
      return v;
    });
  if (dim == 2) {
    fields.push_back([](const Vec& x) {
      Vec v(2);
      v << x[1], -x[0];
      return v;
    });
  } else {
    fields.push_back([](const Vec& x) {
      Vec v(3);
      v << x[1], -x[0], 0;
      return v;
    });
    fields.push_back([](const Vec& x) {
      Vec v(3);
      v << x[2], 0, -x[0];
      return v;
    });
    fields.push_back([](const Vec& x) {
      Vec v(3);
      v << 0, x[2], -x[1];
      return v;
    });
  }
  return fields;
}

// B_div[i][j] = int_M div psi_j . zeta_i dx by exact quadrature.
inline Mat divergence_matrix(const MacroMesh& mm, int macro_id,
                             const BubbleSpace& bubbles,
                             const MacroDisplacement& vm) {
  const int dim = mm.fine.dim;
  const int k = bubbles.degree;
  auto rule = simplex_quadrature(dim, 2 * k);
  const int Nu = static_cast<int>(vm.basis.size());
  const int Ns = static_cast<int>(bubbles.basis.size());
  Mat B = Mat::Zero(Nu, Ns);
  for (int c : mm.macros[macro_id].cells) {
    CellGeometry geom = mm.fine.cell_geometry(c);
    std::vector<Poly> divs;
    std::vector<int> jidx;
    for (int j = 0; j < Ns; ++j) {
      if (!bubbles.basis[j].supported_on(c)) continue;
      divs.push_back(bubbles.basis[j].on_cell(c).divergence(geom));
      jidx.push_back(j);
    }
    for (int i = 0; i < Nu; ++i) {
      if (!vm.basis[i].supported_on(c)) continue;
      Poly zi = vm.basis[i].on_cell(c);
      for (size_t jj = 0; jj < divs.size(); ++jj) {
        double v = rule.integrate(geom, [&](const Vec& lam) {
          return divs[jj].eval(lam).dot(zi.eval(lam));
        });
        B(i, jidx[jj]) += v;
      }
    }
  }
  return B;
}

struct Certificate {
  std::string family;
  int N_u = 0;
  int N_sigma = 0;
  int rank = 0;
  int required = 0;
  double sv_gap = 0.0;
  bool pass = false;
};

inline Certificate certify_macro(const MacroMesh& mm, int macro_id) {
  const int k = family_degree(mm.family);
  const int dim = mm.fine.dim;
  BubbleSpace bs = macro_bubble_space(mm, macro_id);
  MacroDisplacement vm = macro_displacement_basis(mm, macro_id, k);
  Mat B = divergence_matrix(mm, macro_id, bs, vm);
  Certificate cert;
  cert.family = family_name(mm.family);
  cert.N_u = static_cast<int>(vm.basis.size());
  cert.N_sigma = static_cast<int>(bs.basis.size());
  cert.required = cert.N_u - sym_dim(dim);
  Vec sv = singular_values(B);
  double tol = 1e-9 * sv[0];
  cert.rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++cert.rank;
  if (cert.rank < sv.size() && sv[cert.rank] > 0)
    cert.sv_gap = sv[cert.rank - 1] / sv[cert.rank];
  else
    cert.sv_gap = sv[cert.rank - 1] / (1e-300 + 0.0);
  cert.pass = (cert.rank == cert.required);
  return cert;
}

// Reference macro-elements: unit simplex with vertices at the origin and the
// unit coordinate points.
inline MacroMesh reference_macro(Family fam) {
  const int dim = family_dim(fam);
  std::vector<Vec> vs;
  Vec p = Vec::Zero(dim);
  vs.push_back(p);
  for (int i = 0; i < dim; ++i) {
    p.setZero();
    p[i] = 1;
    vs.push_back(p);
  }
  return macro_from_simplex(vs, fam);
}

inline Certificate rank_certificate(Family fam) {
  MacroMesh mm = reference_macro(fam);
  return certify_macro(mm, 0);
}

// Seeded random well-shaped simplices; shape bound 15 degrees.
inline std::vector<Vec> random_simplex(int dim, std::uint64_t seed,
                                       double min_angle = 15.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  while (true) {
    std::vector<Vec> vs(dim + 1, Vec(dim));
    for (auto& v : vs)
      for (int i = 0; i < dim; ++i) v[i] = U(rng);
    try {
      CellGeometry c(vs);
      if (c.volume < 0.02) continue;
      if (min_angle_deg(vs) < min_angle) continue;
      return vs;
    } catch (...) {
      continue;
    }
  }
}

inline std::vector<Certificate> random_geometry_certificate(
    Family fam, int trials, std::uint64_t seed = 20240601) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<Certificate> certs;
  for (int t = 0; t < trials; ++t) {
    auto vs = random_simplex(family_dim(fam), seed + t);
    MacroMesh mm = macro_from_simplex(vs, fam);
    certs.push_back(certify_macro(mm, 0));
  }
  return certs;
}

}  // namespace elastmix
