#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "geometry.hpp"

namespace elastmix {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Count of singular values above rel_tol times the largest.
inline int dense_rank(const Mat& A, double rel_tol = 1e-9) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > rel_tol * sv[0]) ++r;
  return r;
}

inline Vec singular_values(const Mat& A) {
  Eigen::BDCSVD<Mat> svd(A);
  return svd.singularValues();
}

// Smallest eigenvalue of A x = lambda B x above a zero threshold; B SPD.
inline double generalized_eig_min(const Mat& A, const Mat& B,
                                  double zero_tol = 1e-10) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eig(A, B);
  const Vec& ev = eig.eigenvalues();
  double scale = std::max(1.0, std::abs(ev[ev.size() - 1]));
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] > zero_tol * scale) return ev[i];
  throw std::runtime_error("generalized_eig_min: no positive eigenvalue");
}

// Symmetric indefinite saddle system [[M, B^T],[B, 0]] (sigma; u) = (G; F).
// G is the optional natural boundary term; zero for the homogeneous problem.
struct SaddleSystem {
  SpMat M;  // n_sigma x n_sigma, SPD
  SpMat B;  // n_u x n_sigma
  Vec F;    // n_u
  Vec G;    // n_sigma, may be empty for zero

  int n_sigma() const { return static_cast<int>(M.rows()); }
  int n_u() const { return static_cast<int>(B.rows()); }
};

struct SaddleSolution {
  Vec sigma;
  Vec u;
  double residual = 0.0;
};

inline SaddleSolution solve_saddle(const SaddleSystem& sys) {
  const int ns = sys.n_sigma(), nu = sys.n_u();
  const int N = ns + nu;
  std::vector<Triplet> trips;
  trips.reserve(sys.M.nonZeros() + 2 * sys.B.nonZeros());
  for (int k = 0; k < sys.M.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.M, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value());
  for (int k = 0; k < sys.B.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.B, k); it; ++it) {
      trips.emplace_back(static_cast<int>(ns + it.row()),
                         static_cast<int>(it.col()), it.value());
      trips.emplace_back(static_cast<int>(it.col()),
                         static_cast<int>(ns + it.row()), it.value());
    }
  SpMat K(N, N);
  K.setFromTriplets(trips.begin(), trips.end());
  Vec rhs = Vec::Zero(N);
  if (sys.G.size() > 0) rhs.head(ns) = sys.G;
  rhs.tail(nu) = sys.F;

  Vec x;
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() == Eigen::Success) {
    x = lu.solve(rhs);
  } else if (N < 5000) {
    Mat Kd(K);
    Eigen::PartialPivLU<Mat> dlu(Kd);
    x = dlu.solve(rhs);
    if (!x.allFinite()) throw std::runtime_error("singular system");
  } else {
    throw std::runtime_error("singular system");
  }

  SaddleSolution sol;
  sol.sigma = x.head(ns);
  sol.u = x.tail(nu);
  sol.residual = (K * x - rhs).norm();
  double bound = 1e-9 * (sys.F.norm() + 1.0);
  if (!(sol.residual <= bound))
    throw std::runtime_error("solve_saddle: residual bound violated");
  return sol;
}

}  // namespace elastmix
