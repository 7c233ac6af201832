#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace elastmix {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Number of independent components of a symmetric n x n tensor.
inline int sym_dim(int n) { return n * (n + 1) / 2; }

// Voigt component order: 2D (11,22,12); 3D (11,22,33,23,13,12).
inline Mat voigt_to_matrix(const Vec& v, int n) {
  Mat m(n, n);
  if (n == 2) {
    m << v[0], v[2], v[2], v[1];
  } else {
    m << v[0], v[5], v[4], v[5], v[1], v[3], v[4], v[3], v[2];
  }
  return m;
}

inline Vec matrix_to_voigt(const Mat& m, int n) {
  Vec v(sym_dim(n));
  if (n == 2) {
    v << m(0, 0), m(1, 1), 0.5 * (m(0, 1) + m(1, 0));
  } else {
    v << m(0, 0), m(1, 1), m(2, 2), 0.5 * (m(1, 2) + m(2, 1)),
        0.5 * (m(0, 2) + m(2, 0)), 0.5 * (m(0, 1) + m(1, 0));
  }
  return v;
}

// Weights of the Frobenius pairing in Voigt components: off-diagonal twice.
inline Vec voigt_weights(int n) {
  Vec w(sym_dim(n));
  if (n == 2)
    w << 1, 1, 2;
  else
    w << 1, 1, 1, 2, 2, 2;
  return w;
}

// Voigt components of a b^T + b a^T.
inline Vec sym_dyad_voigt(const Vec& a, const Vec& b) {
  const int n = static_cast<int>(a.size());
  Mat m = a * b.transpose() + b * a.transpose();
  return matrix_to_voigt(m, n);
}

// Voigt components of t t^T.
inline Vec dyad_voigt(const Vec& t) {
  return matrix_to_voigt(Mat(t * t.transpose()), static_cast<int>(t.size()));
}

// tau n for tau in Voigt components.
inline Vec voigt_apply_normal(const Vec& tau, const Vec& n) {
  return voigt_to_matrix(tau, static_cast<int>(n.size())) * n;
}

// A deterministic unit vector orthogonal to t (3D).
inline Vec perp_unit(const Vec& t) {
  Vec a = Vec::Zero(3);
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(t[i]) < std::abs(t[k])) k = i;
  a[k] = 1.0;
  Vec p = a - a.dot(t) * t;
  return p / p.norm();
}

inline Vec cross3(const Vec& a, const Vec& b) {
  Vec c(3);
  c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
      a[0] * b[1] - a[1] * b[0];
  return c;
}

// Affine isomorphism x = B x_hat + b.
struct AffineMap {
  Mat B;
  Vec b;
  double detB = 0.0;
  Mat Binv;

  AffineMap() = default;
  AffineMap(Mat B_, Vec b_) : B(std::move(B_)), b(std::move(b_)) {
    detB = B.determinant();
    if (detB == 0.0) throw std::runtime_error("AffineMap: singular matrix");
    Binv = B.inverse();
  }

  Vec apply(const Vec& xhat) const { return B * xhat + b; }
  Vec pull(const Vec& x) const { return Binv * (x - b); }

  // Map taking the simplex (p0..pn) to (q0..qn), vertex to vertex.
  static AffineMap simplex_map(const std::vector<Vec>& from,
                               const std::vector<Vec>& to) {
    const int n = static_cast<int>(from[0].size());
    Mat Bf(n, n), Bt(n, n);
    for (int j = 0; j < n; ++j) {
      Bf.col(j) = from[j + 1] - from[0];
      Bt.col(j) = to[j + 1] - to[0];
    }
    Mat B = Bt * Bf.inverse();
    Vec b = to[0] - B * from[0];
    return AffineMap(std::move(B), std::move(b));
  }
};

// Geometry of a single simplex cell: barycentric coordinates and gradients.
struct CellGeometry {
  int dim = 0;
  std::vector<Vec> verts;   // n+1 vertices
  Mat grads;                // (n+1) x n, row i = grad lambda_i
  double volume = 0.0;      // unsigned
  double signed_volume = 0.0;

  CellGeometry() = default;
  explicit CellGeometry(std::vector<Vec> vs) : verts(std::move(vs)) {
    dim = static_cast<int>(verts[0].size());
    const int n = dim;
    Mat J(n, n);
    for (int j = 0; j < n; ++j) J.col(j) = verts[j + 1] - verts[0];
    double det = J.determinant();
    double fact = (n == 2) ? 2.0 : 6.0;
    signed_volume = det / fact;
    volume = std::abs(signed_volume);
    if (volume < 1e-14)
      throw std::runtime_error("degenerate cell");
    // lambda_i(x) solves [1 1..1; p0 p1..pn] lambda = [1; x]
    Mat A(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
      A(0, i) = 1.0;
      A.block(1, i, n, 1) = verts[i];
    }
    Mat Ainv = A.inverse();
    grads.resize(n + 1, n);
    for (int i = 0; i <= n; ++i)
      grads.row(i) = Ainv.block(i, 1, 1, n);
  }

  Vec barycentric(const Vec& x) const {
    const int n = dim;
    Vec lam(n + 1);
    lam[0] = 1.0;
    for (int i = 1; i <= n; ++i) lam[i] = 0.0;
    // lambda_i(x) = lambda_i(p0) + grad_i . (x - p0)
    Vec d = x - verts[0];
    for (int i = 0; i <= n; ++i)
      lam[i] = (i == 0 ? 1.0 : 0.0) + grads.row(i).dot(d);
    // note lambda_i(p0) = delta_{i0}
    return lam;
  }

  Vec point(const Vec& lam) const {
    Vec x = Vec::Zero(dim);
    for (int i = 0; i <= dim; ++i) x += lam[i] * verts[i];
    return x;
  }
};

// Unsigned volume/area of a facet given its vertices (n of them in R^n).
inline double facet_measure(const std::vector<Vec>& pts) {
  const int n = static_cast<int>(pts[0].size());
  if (n == 2) return (pts[1] - pts[0]).norm();
  Vec c = cross3(pts[1] - pts[0], pts[2] - pts[0]);
  return 0.5 * c.norm();
}

// Unit normal of a facet, oriented arbitrarily (2D edge or 3D triangle).
inline Vec facet_normal(const std::vector<Vec>& pts) {
  const int n = static_cast<int>(pts[0].size());
  if (n == 2) {
    Vec t = pts[1] - pts[0];
    Vec nrm(2);
    nrm << -t[1], t[0];
    return nrm / nrm.norm();
  }
  Vec c = cross3(pts[1] - pts[0], pts[2] - pts[0]);
  return c / c.norm();
}

// Minimum angle in degrees of a triangle, or minimum dihedral angle of a tet.
inline double min_angle_deg(const std::vector<Vec>& verts) {
  const int n = static_cast<int>(verts[0].size());
  double best = 180.0;
  if (n == 2) {
    for (int i = 0; i < 3; ++i) {
      Vec a = verts[(i + 1) % 3] - verts[i];
      Vec b = verts[(i + 2) % 3] - verts[i];
      double ang = std::acos(a.dot(b) / (a.norm() * b.norm())) * 180.0 / M_PI;
      best = std::min(best, ang);
    }
    return best;
  }
  // dihedral angles between pairs of faces sharing an edge
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      // edge = the two vertices not in {i,j}
      std::vector<int> e;
      for (int k = 0; k < 4; ++k)
        if (k != i && k != j) e.push_back(k);
      Vec t = verts[e[1]] - verts[e[0]];
      Vec vi = verts[i] - verts[e[0]];
      Vec vj = verts[j] - verts[e[0]];
      Vec pi = vi - vi.dot(t) / t.squaredNorm() * t;
      Vec pj = vj - vj.dot(t) / t.squaredNorm() * t;
      double ang =
          std::acos(std::clamp(pi.dot(pj) / (pi.norm() * pj.norm()), -1.0, 1.0)) *
          180.0 / M_PI;
      best = std::min(best, ang);
    }
  return best;
}

}  // namespace elastmix
