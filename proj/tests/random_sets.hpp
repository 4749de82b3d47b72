#pragma once

#include <random>

#include "feasopf/polytope.hpp"

namespace testsets {

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Eigen::VectorXd z(n);
  for (auto& v : z) v = u(rng);
  return z;
}

/// Bounded polyhedral C-set: random facet normals plus an enclosing
/// cross-polytope so compactness never depends on luck.
inline feasopf::PolyhedralCSet random_cset(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> off(0.3, 2.0);
  const int extra = n + 3;
  Eigen::MatrixXd A(2 * n + extra, n);
  Eigen::VectorXd b(2 * n + extra);
  for (int i = 0; i < n; ++i) {
    A.row(2 * i).setZero();
    A.row(2 * i + 1).setZero();
    A(2 * i, i) = 1.0;
    A(2 * i + 1, i) = -1.0;
    b(2 * i) = 3.0 * off(rng);
    b(2 * i + 1) = 3.0 * off(rng);
  }
  for (int r = 2 * n; r < A.rows(); ++r) {
    for (int j = 0; j < n; ++j) A(r, j) = nd(rng);
    b(r) = off(rng);
  }
  return feasopf::PolyhedralCSet(A, b);
}

/// True when the top two row ratios are within tol (a partition boundary).
inline bool near_tie(const feasopf::PolyhedralCSet& P, const Eigen::VectorXd& z, double tol) {
  Eigen::VectorXd r = P.ratios(z);
  std::sort(r.data(), r.data() + r.size(), std::greater<double>());
  return r.size() > 1 && r(0) - r(1) < tol;
}

}  // namespace testsets
