#pragma once

#include <cmath>
#include <functional>

#include "material.hpp"

namespace elastmix {

// Forward-mode scalar carrying value, gradient and Hessian; enough for the
// manufactured load f = div sigma(u), which needs second derivatives of u.
template <int N>
struct Dual2 {
  double v = 0;
  Eigen::Matrix<double, N, 1> g = Eigen::Matrix<double, N, 1>::Zero();
  Eigen::Matrix<double, N, N> h = Eigen::Matrix<double, N, N>::Zero();

  Dual2() = default;
  Dual2(double val) : v(val) {}
  static Dual2 variable(double val, int i) {
    Dual2 d(val);
    d.g[i] = 1.0;
    return d;
  }

  Dual2 operator+(const Dual2& o) const {
    Dual2 r(v + o.v);
    r.g = g + o.g;
    r.h = h + o.h;
    return r;
  }
  Dual2 operator-(const Dual2& o) const {
    Dual2 r(v - o.v);
    r.g = g - o.g;
    r.h = h - o.h;
    return r;
  }
  Dual2 operator-() const {
    Dual2 r(-v);
    r.g = -g;
    r.h = -h;
    return r;
  }
  Dual2 operator*(const Dual2& o) const {
    Dual2 r(v * o.v);
    r.g = o.v * g + v * o.g;
    r.h = o.v * h + v * o.h + g * o.g.transpose() + o.g * g.transpose();
    return r;
  }
  friend Dual2 operator*(double s, const Dual2& d) {
    Dual2 r(s * d.v);
    r.g = s * d.g;
    r.h = s * d.h;
    return r;
  }
  friend Dual2 operator+(double s, const Dual2& d) { return Dual2(s) + d; }
  friend Dual2 operator-(double s, const Dual2& d) { return Dual2(s) - d; }

  // chain rule for f(u): f'' u'u'^T + f' u''
  Dual2 compose(double f, double fp, double fpp) const {
    Dual2 r(f);
    r.g = fp * g;
    r.h = fp * h + fpp * g * g.transpose();
    return r;
  }
};

template <int N>
Dual2<N> exp(const Dual2<N>& d) {
  double e = std::exp(d.v);
  return d.compose(e, e, e);
}
template <int N>
Dual2<N> sin(const Dual2<N>& d) {
  return d.compose(std::sin(d.v), std::cos(d.v), -std::sin(d.v));
}
template <int N>
Dual2<N> cos(const Dual2<N>& d) {
  return d.compose(std::cos(d.v), -std::sin(d.v), -std::cos(d.v));
}

// A pure-displacement manufactured problem: u with u=0 on the boundary of
// the unit box, sigma = C eps(u), f = div sigma.
struct Manufactured {
  int dim = 2;
  Material material;
  std::function<Vec(const Vec&)> u;
  std::function<Vec(const Vec&)> sigma;      // Voigt components
  std::function<Vec(const Vec&)> div_sigma;  // the load f
};

namespace detail {

template <int N, class Fields>
Manufactured make_manufactured(const Material& mat, Fields fields) {
  Manufactured man;
  man.dim = N;
  man.material = mat;
  auto eval = [fields](const Vec& x) {
    std::array<Dual2<N>, N> X;
    for (int i = 0; i < N; ++i) X[i] = Dual2<N>::variable(x[i], i);
    return fields(X);
  };
  man.u = [eval](const Vec& x) {
    auto U = eval(x);
    Vec r(N);
    for (int i = 0; i < N; ++i) r[i] = U[i].v;
    return r;
  };
  Material m = mat;
  man.sigma = [eval, m](const Vec& x) {
    auto U = eval(x);
    Mat grad(N, N);
    for (int i = 0; i < N; ++i) grad.row(i) = U[i].g.transpose();
    Mat eps = 0.5 * (grad + grad.transpose());
    return m.apply_stiffness(matrix_to_voigt(eps, N));
  };
  man.div_sigma = [eval, m](const Vec& x) {
    auto U = eval(x);
    // f_r = mu (lap u_r + d_r div u) + lambda d_r div u
    Vec f(N);
    for (int r = 0; r < N; ++r) {
      double lap = U[r].h.trace();
      double ddiv = 0;
      for (int i = 0; i < N; ++i) ddiv += U[i].h(i, r);
      f[r] = m.mu * (lap + ddiv) + m.lambda * ddiv;
    }
    return f;
  };
  return man;
}

}  // namespace detail

// u = (exp(x-y) x(1-x) y(1-y), sin(pi x) sin(pi y)) on the unit square.
inline Manufactured manufactured_2d(const Material& mat) {
  return detail::make_manufactured<2>(mat, [](const std::array<Dual2<2>, 2>& X) {
    const auto& x = X[0];
    const auto& y = X[1];
    std::array<Dual2<2>, 2> u;
    u[0] = exp(x - y) * x * (1.0 - x) * y * (1.0 - y);
    u[1] = sin(M_PI * x) * sin(M_PI * y);
    return u;
  });
}

// u = (16, 32, 64)^T x(1-x) y(1-y) z(1-z) on the unit cube.
inline Manufactured manufactured_3d(const Material& mat) {
  return detail::make_manufactured<3>(mat, [](const std::array<Dual2<3>, 3>& X) {
    const auto& x = X[0];
    const auto& y = X[1];
    const auto& z = X[2];
    Dual2<3> bubble = x * (1.0 - x) * y * (1.0 - y) * z * (1.0 - z);
    std::array<Dual2<3>, 3> u;
    u[0] = 16.0 * bubble;
    u[1] = 32.0 * bubble;
    u[2] = 64.0 * bubble;
    return u;
  });
}

}  // namespace elastmix
