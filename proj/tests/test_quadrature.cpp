#include <catch2/catch_amalgamated.hpp>

#include <elastmix/poly.hpp>
#include <elastmix/quadrature.hpp>

using namespace elastmix;

namespace {
CellGeometry ref_cell(int dim) {
  std::vector<Vec> vs;
  Vec p = Vec::Zero(dim);
  vs.push_back(p);
  for (int i = 0; i < dim; ++i) {
    p.setZero();
    p[i] = 1;
    vs.push_back(p);
  }
  return CellGeometry(vs);
}
}  // namespace

TEST_CASE("reference volumes") {
  auto q2 = simplex_quadrature(2, 2);
  double s = 0;
  for (double w : q2.weights) s += w;
  CHECK(s == Catch::Approx(0.5).epsilon(1e-14));
  auto q3 = simplex_quadrature(3, 2);
  s = 0;
  for (double w : q3.weights) s += w;
  CHECK(s == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("moment oracle lambda1*lambda2*lambda3 on reference triangle") {
  // int over reference triangle of l0*l1*l2 = 1/2 * 2! * 1 / 5! ... via formula
  CHECK(barycentric_moment({1, 1, 1}, 0.5) == Catch::Approx(1.0 / 120.0));
}

TEST_CASE("quadrature exactness against factorial oracle") {
  for (int dim : {2, 3}) {
    CellGeometry cell = ref_cell(dim);
    for (int deg = 0; deg <= 10; ++deg) {
      auto rule = simplex_quadrature(dim, deg);
      const auto& mb = MonoBasis::get(dim, deg);
      for (int m = 0; m < mb.size(); ++m) {
        double exact = barycentric_moment(mb.exps[m], cell.volume);
        double approx = rule.integrate(cell, [&](const Vec& lam) {
          double p = 1;
          for (int i = 0; i <= dim; ++i)
            for (int k = 0; k < mb.exps[m][i]; ++k) p *= lam[i];
          return p;
        });
        CHECK(approx == Catch::Approx(exact).epsilon(1e-13).margin(1e-15));
      }
    }
  }
}

TEST_CASE("quadrature on a mapped cell") {
  std::vector<Vec> vs(3, Vec(2));
  vs[0] << 1, 2;
  vs[1] << 3, 2.5;
  vs[2] << 1.5, 4;
  CellGeometry cell(vs);
  auto rule = simplex_quadrature(2, 4);
  // int of 1 = area
  double a = rule.integrate(cell, [](const Vec&) { return 1.0; });
  CHECK(a == Catch::Approx(cell.volume).epsilon(1e-13));
  // int of lambda products matches the formula on any cell (affine exactness)
  double v = rule.integrate(cell, [](const Vec& lam) { return lam[0] * lam[1] * lam[1]; });
  CHECK(v == Catch::Approx(barycentric_moment({1, 2, 0}, cell.volume)).epsilon(1e-13));
}

TEST_CASE("unsupported degree") {
  CHECK_THROWS_AS(simplex_quadrature(2, 11), std::invalid_argument);
  CHECK_THROWS_AS(simplex_quadrature(4, 2), std::invalid_argument);
}
