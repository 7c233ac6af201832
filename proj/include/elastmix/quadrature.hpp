#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"

namespace elastmix {

// Gauss-Legendre nodes/weights on [0,1], exact for polynomials of degree
// 2m-1.  Newton iteration on the Legendre polynomial.
inline void gauss_legendre01(int m, std::vector<double>& x,
                             std::vector<double>& w) {
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = m * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= m; ++k) {
      double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = m * (t * p1 - p0) / (t * t - 1.0);
    x[i] = 0.5 * (t + 1.0);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

// Quadrature rule on the reference simplex.  Points are barycentric
// (n+1 components), weights sum to the reference volume 1/n!.
struct QuadratureRule {
  int dim = 0;
  int degree = 0;  // exactness degree
  std::vector<Vec> points;
  std::vector<double> weights;

  // Integrate f over a physical cell.
  template <class F>
  double integrate(const CellGeometry& cell, F&& f) const {
    double fact = (dim == 2) ? 2.0 : 6.0;
    double s = 0.0;
    for (size_t q = 0; q < points.size(); ++q)
      s += weights[q] * f(points[q]);
    return s * fact * cell.volume;
  }
};

// Conical-product (collapsed Gauss) rule, exact for total degree <= `degree`.
inline QuadratureRule simplex_quadrature(int dim, int degree) {
  if (degree < 0 || degree > 10)
    throw std::invalid_argument("simplex_quadrature: unsupported degree");
  QuadratureRule rule;
  rule.dim = dim;
  rule.degree = degree;
  if (dim == 2) {
    int m1 = (degree + 3) / 2, m2 = (degree + 2) / 2;
    std::vector<double> x1, w1, x2, w2;
    gauss_legendre01(std::max(m1, 1), x1, w1);
    gauss_legendre01(std::max(m2, 1), x2, w2);
    for (size_t i = 0; i < x1.size(); ++i)
      for (size_t j = 0; j < x2.size(); ++j) {
        double X = x1[i];
        double Y = x2[j] * (1.0 - X);
        Vec lam(3);
        lam << 1.0 - X - Y, X, Y;
        rule.points.push_back(lam);
        rule.weights.push_back(w1[i] * w2[j] * (1.0 - X));
      }
  } else if (dim == 3) {
    int m1 = (degree + 4) / 2, m2 = (degree + 3) / 2, m3 = (degree + 2) / 2;
    std::vector<double> x1, w1, x2, w2, x3, w3;
    gauss_legendre01(std::max(m1, 1), x1, w1);
    gauss_legendre01(std::max(m2, 1), x2, w2);
    gauss_legendre01(std::max(m3, 1), x3, w3);
    for (size_t i = 0; i < x1.size(); ++i)
      for (size_t j = 0; j < x2.size(); ++j)
        for (size_t k = 0; k < x3.size(); ++k) {
          double X = x1[i];
          double Y = x2[j] * (1.0 - X);
          double Z = x3[k] * (1.0 - X) * (1.0 - x2[j]);
          Vec lam(4);
          lam << 1.0 - X - Y - Z, X, Y, Z;
          rule.points.push_back(lam);
          rule.weights.push_back(w1[i] * w2[j] * w3[k] * (1.0 - X) *
                                 (1.0 - X) * (1.0 - x2[j]));
        }
  } else {
    throw std::invalid_argument("simplex_quadrature: dim must be 2 or 3");
  }
  return rule;
}

// Exact moment: int_K prod lambda_i^{a_i} dx = |K| n! prod(a_i!) / (|a|+n)!
inline double barycentric_moment(const std::vector<int>& alpha, double volume) {
  int n = static_cast<int>(alpha.size()) - 1;
  long double num = 1.0L;
  for (int k = 2; k <= n; ++k) num *= k;
  for (int a : alpha)
    for (int k = 2; k <= a; ++k) num *= k;
  int total = 0;
  for (int a : alpha) total += a;
  long double den = 1.0L;
  for (int k = 2; k <= total + n; ++k) den *= k;
  return static_cast<double>(num / den) * volume;
}

}  // namespace elastmix
