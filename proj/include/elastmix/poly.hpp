#pragma once

#include <map>
#include <mutex>
#include <vector>

#include "geometry.hpp"
#include "quadrature.hpp"

namespace elastmix {

// Basis of homogeneous barycentric monomials lambda^alpha, |alpha| = degree,
// over the n+1 barycentric coordinates of an n-simplex.  Spans P_degree.
struct MonoBasis {
  int dim = 0;
  int degree = 0;
  std::vector<std::vector<int>> exps;  // each of size dim+1

  int size() const { return static_cast<int>(exps.size()); }

  static const MonoBasis& get(int dim, int degree) {
    static std::map<std::pair<int, int>, MonoBasis> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(dim, degree);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    MonoBasis b;
    b.dim = dim;
    b.degree = degree;
    std::vector<int> a(dim + 1, 0);
    enumerate(b, a, 0, degree);
    return cache.emplace(key, std::move(b)).first->second;
  }

  Vec eval_all(const Vec& lam) const {
    Vec v(size());
    for (int m = 0; m < size(); ++m) {
      double p = 1.0;
      for (int i = 0; i <= dim; ++i)
        for (int k = 0; k < exps[m][i]; ++k) p *= lam[i];
      v[m] = p;
    }
    return v;
  }

  int index_of(const std::vector<int>& a) const {
    for (int m = 0; m < size(); ++m)
      if (exps[m] == a) return m;
    throw std::logic_error("MonoBasis: exponent not found");
  }

 private:
  static void enumerate(MonoBasis& b, std::vector<int>& a, int pos, int left) {
    if (pos == b.dim) {
      a[pos] = left;
      b.exps.push_back(a);
      return;
    }
    for (int k = left; k >= 0; --k) {
      a[pos] = k;
      enumerate(b, a, pos + 1, left - k);
    }
  }
};

inline int poly_dim(int dim, int degree) {
  return MonoBasis::get(dim, degree).size();
}

// Polynomial (possibly vector/tensor valued) on one cell, coefficients in the
// barycentric monomial basis.  Rows of `coeff` are value components.
struct Poly {
  int dim = 0;
  int degree = 0;
  Mat coeff;  // value_dim x n_monomials

  Poly() = default;
  Poly(int dim_, int degree_, int value_dim)
      : dim(dim_), degree(degree_),
        coeff(Mat::Zero(value_dim, poly_dim(dim_, degree_))) {}

  int value_dim() const { return static_cast<int>(coeff.rows()); }

  Vec eval(const Vec& lam) const {
    return coeff * MonoBasis::get(dim, degree).eval_all(lam);
  }

  // Spatial derivative d/dx_j; needs the cell's barycentric gradients.
  Poly derivative(int j, const CellGeometry& cell) const {
    if (degree == 0) {
      Poly z(dim, 0, value_dim());
      return z;
    }
    const auto& mb = MonoBasis::get(dim, degree);
    const auto& mlo = MonoBasis::get(dim, degree - 1);
    Poly d(dim, degree - 1, value_dim());
    std::vector<int> a(dim + 1);
    for (int m = 0; m < mb.size(); ++m) {
      for (int i = 0; i <= dim; ++i) {
        if (mb.exps[m][i] == 0) continue;
        a = mb.exps[m];
        a[i] -= 1;
        int lo = mlo.index_of(a);
        d.coeff.col(lo) += mb.exps[m][i] * cell.grads(i, j) * coeff.col(m);
      }
    }
    return d;
  }

  // Row-wise divergence of a symmetric tensor stored in Voigt components,
  // returning a vector-valued Poly of one degree less.
  Poly divergence(const CellGeometry& cell) const {
    const int n = dim;
    Poly div(dim, degree > 0 ? degree - 1 : 0, n);
    if (degree == 0) return div;
    for (int j = 0; j < n; ++j) {
      Poly dj = derivative(j, cell);
      // (div tau)_r = sum_j d/dx_j tau_{rj}
      for (int r = 0; r < n; ++r) {
        int v = voigt_index(r, j, n);
        div.coeff.row(r) += dj.coeff.row(v);
      }
    }
    return div;
  }

  static int voigt_index(int i, int j, int n) {
    if (i == j) return i;
    if (n == 2) return 2;
    int k = i + j;  // (1,2)->3, (0,2)->4, (0,1)->5
    if (k == 3) return 3;
    if (k == 2) return 4;
    return 5;
  }

  // Exact integral of each component over the cell.
  Vec integral(const CellGeometry& cell) const {
    const auto& mb = MonoBasis::get(dim, degree);
    Vec r = Vec::Zero(value_dim());
    for (int m = 0; m < mb.size(); ++m)
      r += coeff.col(m) * barycentric_moment(mb.exps[m], cell.volume);
    return r;
  }
};

// Lattice of the P_k Lagrange nodes on the reference simplex, as barycentric
// multi-indices alpha/k, enumerated in MonoBasis order of the exponents.
inline std::vector<Vec> lagrange_lattice(int dim, int k) {
  const auto& mb = MonoBasis::get(dim, k);
  std::vector<Vec> pts;
  pts.reserve(mb.size());
  for (const auto& e : mb.exps) {
    Vec lam(dim + 1);
    for (int i = 0; i <= dim; ++i) lam[i] = double(e[i]) / k;
    pts.push_back(lam);
  }
  return pts;
}

// Coefficients (in the monomial basis) of the nodal P_k Lagrange basis;
// row r = coefficients of the basis function of lattice node r.  These are
// geometry independent because everything is barycentric.
inline const Mat& lagrange_coeffs(int dim, int k) {
  static std::map<std::pair<int, int>, Mat> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_pair(dim, k);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (k < 1 || k > 4) throw std::invalid_argument("lagrange_coeffs: unsupported degree");
  const auto& mb = MonoBasis::get(dim, k);
  auto nodes = lagrange_lattice(dim, k);
  const int N = mb.size();
  Mat V(N, N);
  for (int a = 0; a < N; ++a) V.row(a) = mb.eval_all(nodes[a]);
  Mat C = V.inverse();  // column a = coeffs of nodal fn a; we store transpose
  return cache.emplace(key, Mat(C.transpose())).first->second;
}

// Scalar nodal basis function of lattice node r as a Poly.
inline Poly lagrange_basis_fn(int dim, int k, int node) {
  Poly p(dim, k, 1);
  p.coeff.row(0) = lagrange_coeffs(dim, k).row(node);
  return p;
}

// Piecewise polynomial: per-cell coefficient blocks over a support set.
struct PiecewisePoly {
  int dim = 0;
  int degree = 0;
  int value_dim = 1;
  std::map<int, Mat> parts;  // cell id -> value_dim x n_monomials

  PiecewisePoly() = default;
  PiecewisePoly(int dim_, int degree_, int value_dim_)
      : dim(dim_), degree(degree_), value_dim(value_dim_) {}

  bool supported_on(int cell) const { return parts.count(cell) > 0; }

  Mat& part(int cell) {
    auto it = parts.find(cell);
    if (it == parts.end())
      it = parts
               .emplace(cell,
                        Mat::Zero(value_dim, poly_dim(dim, degree)))
               .first;
    return it->second;
  }

  Vec eval(int cell, const Vec& lam) const {
    auto it = parts.find(cell);
    if (it == parts.end()) return Vec::Zero(value_dim);
    return it->second * MonoBasis::get(dim, degree).eval_all(lam);
  }

  Poly on_cell(int cell) const {
    Poly p(dim, degree, value_dim);
    auto it = parts.find(cell);
    if (it != parts.end()) p.coeff = it->second;
    return p;
  }
};

}  // namespace elastmix
