#pragma once

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "assembly.hpp"
#include "manufactured.hpp"

namespace elastmix {

struct ConvRow {
  double meshsize = 0;
  double e_sigma_l2 = 0, rate_sigma = 0;
  double e_u_l2 = 0, rate_u = 0;
  double e_sigma_hdiv = 0, rate_hdiv = 0;
  int n_dof_sigma = 0, n_dof_u = 0;
  double seconds = 0;
};

struct ConvergenceReport {
  std::string problem;
  std::vector<ConvRow> rows;

  std::string to_csv() const {
    std::ostringstream os;
    os << "meshsize,e_sigma_L2,rate_sigma,e_u_L2,rate_u,e_sigma_Hdiv,"
          "rate_hdiv,n_dof_sigma,n_dof_u,seconds\n";
    os << std::setprecision(10);
    for (size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      os << r.meshsize << "," << r.e_sigma_l2 << ",";
      if (i > 0) os << r.rate_sigma;
      os << "," << r.e_u_l2 << ",";
      if (i > 0) os << r.rate_u;
      os << "," << r.e_sigma_hdiv << ",";
      if (i > 0) os << r.rate_hdiv;
      os << "," << r.n_dof_sigma << "," << r.n_dof_u << "," << r.seconds
         << "\n";
    }
    return os.str();
  }
};

// One level of the pure-displacement study: build, assemble, solve, measure.
inline ConvRow run_level(const std::string& problem, int level,
                         int dof_cap = 500000) {
  auto t0 = std::chrono::steady_clock::now();
  Material mat;  // mu = 1/2, lambda = 1
  ConvRow row;
  row.meshsize = std::ldexp(1.0, 1 - level);  // 2^{1-level}

  MacroMesh mm;
  FESpace S;
  Manufactured man;
  int k = 2;
  if (problem == "2d-p2") {
    mat.n = 2;
    man = manufactured_2d(mat);
    mm = macro_split_2d(unit_square_mesh(level));
    S = stress_space(mm);
  } else if (problem == "3d-p3") {
    mat.n = 3;
    man = manufactured_3d(mat);
    mm = macro_split_3d_p3(unit_cube_mesh(level));
    S = stress_space(mm);
    k = 3;
  } else if (problem == "3d-p2") {
    mat.n = 3;
    man = manufactured_3d(mat);
    mm = macro_split_3d_p2(unit_cube_mesh(level));
    S = stress_space(mm);
  } else if (problem == "3d-p2-flat") {
    mat.n = 3;
    man = manufactured_3d(mat);
    mm = identity_macro_mesh(unit_cube_mesh(level));
    S = stress_space_flat_p2(mm);
  } else {
    throw std::invalid_argument("unknown problem: " + problem);
  }
  const Mesh& mesh = mm.fine;
  if (S.dof_count > dof_cap)
    throw std::runtime_error("stress dof count " + std::to_string(S.dof_count) +
                             " exceeds cap " + std::to_string(dof_cap));
  FESpace V = displacement_space(mesh, k);

  SaddleSystem sys;
  sys.M = assemble_mass(mesh, S, mat);
  sys.B = assemble_div(mesh, S, V);
  sys.F = assemble_load(mesh, V, man.div_sigma);
  SaddleSolution sol = solve_saddle(sys);

  ErrorNorms e = error_norms(mesh, S, sol.sigma, V, sol.u, man.sigma,
                             man.div_sigma, man.u);
  row.e_sigma_l2 = e.stress_l2;
  row.e_sigma_hdiv = e.stress_hdiv;
  row.e_u_l2 = e.displacement_l2;
  row.n_dof_sigma = S.dof_count;
  row.n_dof_u = V.dof_count;
  row.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return row;
}

inline ConvergenceReport run_convergence(const std::string& problem,
                                         int levels, int dof_cap = 500000) {
  if (levels < 2)
    throw std::invalid_argument("run_convergence: levels must be >= 2");
  ConvergenceReport rep;
  rep.problem = problem;
  for (int l = 1; l <= levels; ++l) {
    ConvRow row = run_level(problem, l, dof_cap);
    if (!rep.rows.empty()) {
      const auto& prev = rep.rows.back();
      row.rate_sigma = std::log2(prev.e_sigma_l2 / row.e_sigma_l2);
      row.rate_u = std::log2(prev.e_u_l2 / row.e_u_l2);
      row.rate_hdiv = std::log2(prev.e_sigma_hdiv / row.e_sigma_hdiv);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace elastmix
