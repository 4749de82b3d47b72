#pragma once

// Brute-force LP oracle: enumerate every basic solution of {x : G x <= h} and
// keep the cheapest feasible one. Only for tiny, bounded programs.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "feasopf/lp.hpp"

namespace oracle {

struct VertexOptimum {
  Eigen::VectorXd x;
  double objective;
};

inline void stack_rows(const feasopf::LinearProgram& lp, Eigen::MatrixXd& G, Eigen::VectorXd& h) {
  const int n = lp.n_vars();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (Eigen::Index i = 0; i < lp.A_ub.rows(); ++i) {
    rows.push_back(lp.A_ub.row(i));
    rhs.push_back(lp.b_ub(i));
  }
  for (Eigen::Index i = 0; i < lp.A_eq.rows(); ++i) {
    rows.push_back(lp.A_eq.row(i));
    rhs.push_back(lp.b_eq(i));
    rows.push_back(-lp.A_eq.row(i));
    rhs.push_back(-lp.b_eq(i));
  }
  for (int j = 0; j < n; ++j) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
    if (std::isfinite(lp.ub(j))) {
      e(j) = 1.0;
      rows.push_back(e);
      rhs.push_back(lp.ub(j));
    }
    if (std::isfinite(lp.lb(j))) {
      e(j) = -1.0;
      rows.push_back(e);
      rhs.push_back(-lp.lb(j));
    }
  }
  G.resize(static_cast<Eigen::Index>(rows.size()), n);
  h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    G.row(static_cast<Eigen::Index>(i)) = rows[i];
    h(static_cast<Eigen::Index>(i)) = rhs[i];
  }
}

/// Returns nullopt when no vertex is feasible. Assumes the feasible set, if
/// nonempty, is bounded (so the optimum is attained at a vertex).
inline std::optional<VertexOptimum> enumerate_vertices(const feasopf::LinearProgram& lp) {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  stack_rows(lp, G, h);
  const int n = lp.n_vars();
  const int rows = static_cast<int>(G.rows());
  std::optional<VertexOptimum> best;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  Eigen::MatrixXd S(n, n);
  Eigen::VectorXd r(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      S.row(i) = G.row(pick[i]);
      r(i) = h(pick[i]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (lu.rank() == n) {
      const Eigen::VectorXd x = lu.solve(r);
      if (((G * x - h).array() <= 1e-9).all()) {
        const double obj = lp.c.dot(x);
        if (!best || obj < best->objective) best = VertexOptimum{x, obj};
      }
    }
    int k = n - 1;
    while (k >= 0 && pick[k] == rows - n + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int i = k + 1; i < n; ++i) pick[i] = pick[i - 1] + 1;
  }
  return best;
}

}  // namespace oracle
