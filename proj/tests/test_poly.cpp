#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <elastmix/poly.hpp>

using namespace elastmix;

namespace {
CellGeometry random_triangle(std::mt19937& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  while (true) {
    std::vector<Vec> vs(3, Vec(2));
    for (auto& v : vs) {
      v[0] = U(rng);
      v[1] = U(rng);
    }
    try {
      CellGeometry c(vs);
      if (c.volume > 0.05) return c;
    } catch (...) {
    }
  }
}
}  // namespace

TEST_CASE("barycentric coordinates invert") {
  std::mt19937 rng(7);
  CellGeometry c = random_triangle(rng);
  Vec lam(3);
  lam << 0.2, 0.5, 0.3;
  Vec x = c.point(lam);
  Vec lam2 = c.barycentric(x);
  CHECK((lam - lam2).norm() < 1e-13);
}

TEST_CASE("lagrange nodal duality") {
  for (int dim : {2, 3})
    for (int k = 1; k <= 4; ++k) {
      auto nodes = lagrange_lattice(dim, k);
      for (size_t a = 0; a < nodes.size(); ++a) {
        Poly phi = lagrange_basis_fn(dim, k, static_cast<int>(a));
        for (size_t b = 0; b < nodes.size(); ++b) {
          double v = phi.eval(nodes[b])[0];
          CHECK(v == Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-11));
        }
      }
    }
}

TEST_CASE("k=1 lagrange equals barycentric, k=2 edge bubble") {
  // k=1: nodal function at a vertex is lambda of that vertex
  const auto& mb1 = MonoBasis::get(2, 1);
  Poly p = lagrange_basis_fn(2, 1, 0);
  Vec lam(3);
  lam << 0.3, 0.45, 0.25;
  int vtx = -1;
  for (int i = 0; i < 3; ++i)
    if (mb1.exps[0][i] == 1) vtx = i;
  CHECK(p.eval(lam)[0] == Catch::Approx(lam[vtx]).epsilon(1e-13));
  // k=2: the basis at an edge midpoint between local vertices a,b is 4 la lb
  const auto& mb2 = MonoBasis::get(2, 2);
  auto nodes2 = lagrange_lattice(2, 2);
  for (size_t n = 0; n < nodes2.size(); ++n) {
    std::vector<int> sup;
    for (int i = 0; i < 3; ++i)
      if (mb2.exps[n][i] > 0) sup.push_back(i);
    if (sup.size() != 2) continue;
    Poly phi = lagrange_basis_fn(2, 2, static_cast<int>(n));
    CHECK(phi.eval(lam)[0] ==
          Catch::Approx(4.0 * lam[sup[0]] * lam[sup[1]]).epsilon(1e-12));
  }
}

TEST_CASE("k=3 face centroid basis is 27*l*l*l") {
  const auto& mb3 = MonoBasis::get(2, 3);
  auto nodes3 = lagrange_lattice(2, 3);
  Vec lam(3);
  lam << 0.2, 0.5, 0.3;
  for (size_t n = 0; n < nodes3.size(); ++n) {
    if (mb3.exps[n] == std::vector<int>{1, 1, 1}) {
      Poly phi = lagrange_basis_fn(2, 3, static_cast<int>(n));
      CHECK(phi.eval(lam)[0] ==
            Catch::Approx(27.0 * lam[0] * lam[1] * lam[2]).epsilon(1e-12));
    }
  }
}

TEST_CASE("derivative via finite differences") {
  std::mt19937 rng(11);
  CellGeometry c = random_triangle(rng);
  Poly p(2, 3, 1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int m = 0; m < p.coeff.cols(); ++m) p.coeff(0, m) = U(rng);
  Vec x = c.point((Vec(3) << 0.3, 0.3, 0.4).finished());
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Poly dp = p.derivative(j, c);
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    double fd =
        (p.eval(c.barycentric(xp))[0] - p.eval(c.barycentric(xm))[0]) / (2 * h);
    CHECK(dp.eval(c.barycentric(x))[0] == Catch::Approx(fd).margin(1e-8));
  }
}

TEST_CASE("divergence of a voigt field") {
  std::mt19937 rng(13);
  CellGeometry c = random_triangle(rng);
  // tau = [[x^2, xy],[xy, y^2]]-like built from barycentric polys; check
  // div against componentwise derivatives
  Poly tau(2, 2, 3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int r = 0; r < 3; ++r)
    for (int m = 0; m < tau.coeff.cols(); ++m) tau.coeff(r, m) = U(rng);
  Poly div = tau.divergence(c);
  Poly d0 = tau.derivative(0, c), d1 = tau.derivative(1, c);
  Vec lam(3);
  lam << 0.25, 0.35, 0.4;
  Vec v = div.eval(lam);
  // row 0: d/dx tau_00 + d/dy tau_01(voigt 2)
  CHECK(v[0] == Catch::Approx(d0.eval(lam)[0] + d1.eval(lam)[2]).margin(1e-12));
  CHECK(v[1] == Catch::Approx(d0.eval(lam)[2] + d1.eval(lam)[1]).margin(1e-12));
}

TEST_CASE("symmetric voigt storage round trip") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int n : {2, 3}) {
    Vec v(sym_dim(n));
    for (int i = 0; i < v.size(); ++i) v[i] = U(rng);
    Mat m = voigt_to_matrix(v, n);
    CHECK((m - m.transpose()).norm() < 1e-15);
    Vec v2 = matrix_to_voigt(m, n);
    CHECK((v - v2).norm() < 1e-15);
  }
}

TEST_CASE("exact integral matches quadrature") {
  std::mt19937 rng(19);
  CellGeometry c = random_triangle(rng);
  Poly p(2, 4, 1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int m = 0; m < p.coeff.cols(); ++m) p.coeff(0, m) = U(rng);
  auto rule = simplex_quadrature(2, 4);
  double qi = rule.integrate(c, [&](const Vec& lam) { return p.eval(lam)[0]; });
  CHECK(p.integral(c)[0] == Catch::Approx(qi).epsilon(1e-12));
}
