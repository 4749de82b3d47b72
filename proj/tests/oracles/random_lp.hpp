#pragma once

#include <random>

#include "feasopf/lp.hpp"

namespace oracle {

// Random bounded LP with a known feasible point inside a box.
inline feasopf::LinearProgram random_lp(std::mt19937_64& rng, int n, int n_ub, int n_eq) {
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> slack(0.0, 2.0);
  feasopf::LinearProgram lp = feasopf::LinearProgram::with_variables(n);
  Eigen::VectorXd x0(n);
  for (int j = 0; j < n; ++j) {
    lp.c(j) = coef(rng);
    if (j % 2 == 0) {
      lp.lb(j) = 0.0;
      lp.ub(j) = 6.0;
      x0(j) = std::uniform_real_distribution<double>(0.5, 5.5)(rng);
    } else {
      lp.lb(j) = -4.0;
      lp.ub(j) = 4.0;
      x0(j) = std::uniform_real_distribution<double>(-3.5, 3.5)(rng);
    }
  }
  lp.A_ub.resize(n_ub, n);
  lp.b_ub.resize(n_ub);
  for (int i = 0; i < n_ub; ++i) {
    for (int j = 0; j < n; ++j) lp.A_ub(i, j) = coef(rng);
    lp.b_ub(i) = lp.A_ub.row(i).dot(x0) + slack(rng);
  }
  lp.A_eq.resize(n_eq, n);
  lp.b_eq.resize(n_eq);
  for (int i = 0; i < n_eq; ++i) {
    for (int j = 0; j < n; ++j) lp.A_eq(i, j) = coef(rng);
    lp.b_eq(i) = lp.A_eq.row(i).dot(x0);
  }
  return lp;
}


}  // namespace oracle
