#include "feasopf/polytope.hpp"

#include <cmath>
#include <string>

#include "feasopf/errors.hpp"
#include "feasopf/lp.hpp"

namespace feasopf {

using detail::require;

PolyhedralCSet::PolyhedralCSet(Eigen::MatrixXd A, Eigen::VectorXd b, BoundednessCheck check)
    : A_(std::move(A)), b_(std::move(b)) {
  require(A_.rows() == b_.size(), "C-set: A and b have different row counts");
  require(A_.rows() > 0 && A_.cols() > 0, "C-set: empty description");
  require(A_.allFinite(), "C-set: A must be finite");
  for (Eigen::Index i = 0; i < b_.size(); ++i)
    require(std::isfinite(b_(i)) && b_(i) > 0.0, "C-set: b must be strictly positive");
  if (check == BoundednessCheck::kProbe) {
    bounded_ = probe_extent(A_, b_).bounded;
    verified_ = true;
  }
}

Eigen::VectorXd PolyhedralCSet::ratios(const Eigen::VectorXd& z) const {
  require(z.size() == A_.cols(), "C-set: dimension mismatch");
  return (A_ * z).cwiseQuotient(b_);
}

PolyhedralCSet unit_inf_ball(int n) {
  require(n >= 1, "unit ball needs dimension >= 1");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, n);
  for (int i = 0; i < n; ++i) {
    A(2 * i, i) = 1.0;
    A(2 * i + 1, i) = -1.0;
  }
  return PolyhedralCSet(std::move(A), Eigen::VectorXd::Ones(2 * n));
}

GaugeValue gauge_with_row(const PolyhedralCSet& set, const Eigen::VectorXd& z) {
  const Eigen::VectorXd r = set.ratios(z);
  GaugeValue g;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (r(i) > g.value) {
      g.value = r(i);
      g.active_row = static_cast<int>(i);
    }
  }
  return g;
}

double gauge(const PolyhedralCSet& set, const Eigen::VectorXd& z) {
  return gauge_with_row(set, z).value;
}

bool contains(const PolyhedralCSet& set, const Eigen::VectorXd& z, double tol) {
  require(z.size() == set.dim(), "C-set: dimension mismatch");
  return ((set.A() * z - set.b()).array() <= tol).all();
}

namespace {

void check_pair(const Eigen::VectorXd& z, const PolyhedralCSet& P, const PolyhedralCSet& Q) {
  require(P.dim() == Q.dim(), "gauge map: sets have different dimensions");
  require(z.size() == P.dim(), "gauge map: point has wrong dimension");
}

}  // namespace

GaugeMapResult gauge_map(const Eigen::VectorXd& z, const PolyhedralCSet& P, const PolyhedralCSet& Q) {
  check_pair(z, P, Q);
  const GaugeValue gp = gauge_with_row(P, z);
  if (gp.value > 1.0 + kMembershipTol)
    throw ValidationError("gauge map: point lies outside the source set (gauge " +
                          std::to_string(gp.value) + ")");
  GaugeMapResult out;
  out.active_p = gp.active_row;
  if (gp.value == 0.0) {
    out.image = Eigen::VectorXd::Zero(z.size());
    return out;
  }
  const GaugeValue gq = gauge_with_row(Q, z);
  if (gq.value <= 0.0) throw ValidationError("gauge map: target set is unbounded along the input direction");
  out.active_q = gq.active_row;
  out.scale = gp.value / gq.value;
  out.image = out.scale * z;
  return out;
}

Eigen::VectorXd gauge_map_vjp(const Eigen::VectorXd& z, const PolyhedralCSet& P, const PolyhedralCSet& Q,
                              const Eigen::VectorXd& upstream) {
  check_pair(z, P, Q);
  require(upstream.size() == z.size(), "gauge map vjp: upstream has wrong dimension");
  const GaugeMapResult g = gauge_map(z, P, Q);
  if (g.active_p < 0) return Eigen::VectorXd::Zero(z.size());
  // On the cell of rows (i, j): G(z) = (p / q) z with p = a_i^T z / b_i and
  // q = c_j^T z / d_j, so J^T v = (p/q) v + grad(p/q) (z^T v).
  const double p = P.A().row(g.active_p).dot(z) / P.b()(g.active_p);
  const double q = Q.A().row(g.active_q).dot(z) / Q.b()(g.active_q);
  const Eigen::VectorXd grad_p = P.A().row(g.active_p).transpose() / P.b()(g.active_p);
  const Eigen::VectorXd grad_q = Q.A().row(g.active_q).transpose() / Q.b()(g.active_q);
  const Eigen::VectorXd grad_ratio = grad_p / q - (p / (q * q)) * grad_q;
  return g.scale * upstream + grad_ratio * z.dot(upstream);
}

AxisExtent probe_extent(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(A.cols());
  AxisExtent ext;
  ext.lower.assign(n, -kInf);
  ext.upper.assign(n, kInf);
  LinearProgram lp = LinearProgram::with_variables(n);
  lp.lb.setConstant(-kInf);
  lp.A_ub = A;
  lp.b_ub = b;
  for (int i = 0; i < n; ++i) {
    for (double sign : {1.0, -1.0}) {
      lp.c.setZero();
      lp.c(i) = -sign;  // maximize sign * z_i
      const LpSolution sol = solve_lp(lp);
      if (sol.status == LpStatus::kOptimal) {
        if (sign > 0) ext.upper[i] = sol.x(i);
        else ext.lower[i] = sol.x(i);
      } else if (sol.status == LpStatus::kUnbounded) {
        ext.bounded = false;
      } else {
        throw SolverError("extent probe: LP returned " + to_string(sol.status));
      }
    }
  }
  return ext;
}

}  // namespace feasopf
