#pragma once

#include "geometry.hpp"

namespace elastmix {

// Homogeneous isotropic material, compliance
//   A tau = (1/2mu) (tau - lambda/(2mu+n lambda) tr(tau) I).
struct Material {
  double mu = 0.5;
  double lambda = 1.0;
  int n = 2;

  // Action on Voigt components.
  Vec apply_compliance(const Vec& tau) const {
    double c = lambda / (2.0 * mu + n * lambda);
    double tr = 0;
    for (int i = 0; i < n; ++i) tr += tau[i];
    Vec r = tau / (2.0 * mu);
    for (int i = 0; i < n; ++i) r[i] -= c * tr / (2.0 * mu);
    return r;
  }

  // Inverse map: sigma = 2 mu eps + lambda tr(eps) I.
  Vec apply_stiffness(const Vec& eps) const {
    double tr = 0;
    for (int i = 0; i < n; ++i) tr += eps[i];
    Vec r = 2.0 * mu * eps;
    for (int i = 0; i < n; ++i) r[i] += lambda * tr;
    return r;
  }

  // Compliance as a matrix acting on Voigt components.
  Mat compliance_matrix() const {
    int m = sym_dim(n);
    Mat A(m, m);
    for (int j = 0; j < m; ++j) {
      Vec e = Vec::Zero(m);
      e[j] = 1.0;
      A.col(j) = apply_compliance(e);
    }
    return A;
  }
};

}  // namespace elastmix
