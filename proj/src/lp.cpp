#include "feasopf/lp.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "feasopf/errors.hpp"

namespace feasopf {

using detail::require;

LinearProgram LinearProgram::with_variables(int n) {
  LinearProgram lp;
  lp.c = Eigen::VectorXd::Zero(n);
  lp.A_eq.resize(0, n);
  lp.b_eq.resize(0);
  lp.A_ub.resize(0, n);
  lp.b_ub.resize(0);
  lp.lb = Eigen::VectorXd::Zero(n);
  lp.ub = Eigen::VectorXd::Constant(n, kInf);
  return lp;
}

void LinearProgram::validate() const {
  const Eigen::Index n = c.size();
  require(A_eq.cols() == n || A_eq.rows() == 0, "A_eq column count does not match c");
  require(A_ub.cols() == n || A_ub.rows() == 0, "A_ub column count does not match c");
  require(b_eq.size() == A_eq.rows(), "b_eq length does not match A_eq");
  require(b_ub.size() == A_ub.rows(), "b_ub length does not match A_ub");
  require(lb.size() == n && ub.size() == n, "bound vectors must match c");
  for (Eigen::Index j = 0; j < n; ++j) {
    require(std::isfinite(c(j)), "objective coefficients must be finite");
    require(!std::isnan(lb(j)) && !std::isnan(ub(j)), "bounds must not be NaN");
    require(lb(j) < kInf && ub(j) > -kInf, "bounds must admit a finite value");
  }
  require(A_eq.allFinite() && b_eq.allFinite(), "equality block must be finite");
  require(A_ub.allFinite() && b_ub.allFinite(), "inequality block must be finite");
}

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

Residuals audit(const LinearProgram& lp, const Eigen::VectorXd& x) {
  Residuals r;
  if (lp.A_eq.rows() > 0) r.equality = (lp.A_eq * x - lp.b_eq).cwiseAbs().maxCoeff();
  if (lp.A_ub.rows() > 0) r.inequality = std::max(0.0, (lp.A_ub * x - lp.b_ub).maxCoeff());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    r.bounds = std::max(r.bounds, lp.lb(j) - x(j));
    r.bounds = std::max(r.bounds, x(j) - lp.ub(j));
  }
  return r;
}

namespace {

using SparseColumn = std::vector<std::pair<int, double>>;

enum class VarKind { kShift, kMirror, kFree };

// Equality-form program min c^T y, A y = b, y >= 0, b >= 0, assembled from a
// general LinearProgram. Column order: structural, slack, artificial.
struct StandardForm {
  std::vector<SparseColumn> cols;
  std::vector<double> cost;
  Eigen::VectorXd rhs;
  std::vector<int> initial_basis;  // one column per row
  int n_structural = 0;
  int first_artificial = 0;
  double cost_offset = 0.0;

  std::vector<VarKind> kind;
  std::vector<int> column_of;  // first standard column of each original var
  Eigen::VectorXd offset;      // lb for kShift, ub for kMirror

  int rows() const { return static_cast<int>(rhs.size()); }
  int cols_count() const { return static_cast<int>(cols.size()); }
};

StandardForm standardize(const LinearProgram& lp) {
  StandardForm sf;
  const int n = lp.n_vars();
  sf.kind.resize(n);
  sf.column_of.resize(n);
  sf.offset = Eigen::VectorXd::Zero(n);

  // coefficient multipliers for each original variable: column index and sign
  std::vector<std::vector<std::pair<int, double>>> image(n);
  int col = 0;
  for (int j = 0; j < n; ++j) {
    sf.column_of[j] = col;
    if (std::isfinite(lp.lb(j))) {
      sf.kind[j] = VarKind::kShift;
      sf.offset(j) = lp.lb(j);
      image[j] = {{col++, 1.0}};
    } else if (std::isfinite(lp.ub(j))) {
      sf.kind[j] = VarKind::kMirror;
      sf.offset(j) = lp.ub(j);
      image[j] = {{col++, -1.0}};
    } else {
      sf.kind[j] = VarKind::kFree;
      image[j] = {{col, 1.0}, {col + 1, -1.0}};
      col += 2;
    }
  }
  sf.n_structural = col;
  sf.cols.assign(col, {});
  sf.cost.assign(col, 0.0);
  for (int j = 0; j < n; ++j) {
    for (auto [c, s] : image[j]) sf.cost[c] = s * lp.c(j);
    sf.cost_offset += lp.c(j) * sf.offset(j);
  }

  struct RowInfo {
    double rhs;
    int slack;  // -1 when the row is an equality
  };
  std::vector<RowInfo> rows;

  auto add_dense_row = [&](const Eigen::MatrixXd& A, Eigen::Index i, double b) {
    const int r = static_cast<int>(rows.size());
    double rhs = b;
    for (int j = 0; j < n; ++j) {
      const double a = A(i, j);
      if (a == 0.0) continue;
      rhs -= a * sf.offset(j);
      for (auto [c, s] : image[j]) sf.cols[c].push_back({r, a * s});
    }
    rows.push_back({rhs, -1});
    return r;
  };
  auto add_slack = [&](int r) {
    sf.cols.push_back({{r, 1.0}});
    sf.cost.push_back(0.0);
    rows[r].slack = static_cast<int>(sf.cols.size()) - 1;
  };

  for (Eigen::Index i = 0; i < lp.A_eq.rows(); ++i) add_dense_row(lp.A_eq, i, lp.b_eq(i));
  for (Eigen::Index i = 0; i < lp.A_ub.rows(); ++i) add_slack(add_dense_row(lp.A_ub, i, lp.b_ub(i)));
  for (int j = 0; j < n; ++j) {
    if (sf.kind[j] == VarKind::kShift && std::isfinite(lp.ub(j))) {
      const int r = static_cast<int>(rows.size());
      sf.cols[sf.column_of[j]].push_back({r, 1.0});
      rows.push_back({lp.ub(j) - lp.lb(j), -1});
      add_slack(r);
    }
  }

  const int m = static_cast<int>(rows.size());
  sf.rhs.resize(m);
  std::vector<double> row_sign(m, 1.0);
  for (int r = 0; r < m; ++r) {
    if (rows[r].rhs < 0.0) row_sign[r] = -1.0;
    sf.rhs(r) = row_sign[r] * rows[r].rhs;
  }
  for (auto& column : sf.cols)
    for (auto& [r, v] : column) v *= row_sign[r];
  for (auto& column : sf.cols)
    std::sort(column.begin(), column.end());

  sf.first_artificial = static_cast<int>(sf.cols.size());
  sf.initial_basis.resize(m);
  for (int r = 0; r < m; ++r) {
    if (rows[r].slack >= 0 && row_sign[r] > 0.0) {
      sf.initial_basis[r] = rows[r].slack;
    } else {
      sf.cols.push_back({{r, 1.0}});
      sf.cost.push_back(0.0);
      sf.initial_basis[r] = static_cast<int>(sf.cols.size()) - 1;
    }
  }
  return sf;
}

class RevisedSimplex {
 public:
  RevisedSimplex(const StandardForm& sf, const SimplexOptions& opt)
      : sf_(sf), opt_(opt), m_(sf.rows()), n_(sf.cols_count()) {
    basis_ = sf.initial_basis;
    position_.assign(n_, -1);
    for (int r = 0; r < m_; ++r) position_[basis_[r]] = r;
    blocked_.assign(n_, false);
    refactor();
  }

  enum class Outcome { kOptimal, kUnbounded, kIterationLimit };

  Outcome run(const std::vector<double>& cost) {
    int stall = 0;
    int since_refactor = 0;
    // explicit-inverse refresh costs O(m^3); amortize it over at least m pivots
    const int interval = std::max(opt_.refactor_interval, m_);
    Eigen::VectorXd cb(m_);
    Eigen::VectorXd w(m_);
    Eigen::VectorXd y(m_);
    auto fresh_duals = [&] {
      for (int r = 0; r < m_; ++r) cb(r) = cost[basis_[r]];
      y.noalias() = binv_.transpose() * cb;
    };
    fresh_duals();
    while (true) {
      if (iterations_ >= opt_.max_iterations) return Outcome::kIterationLimit;

      const bool bland = opt_.pricing == PricingRule::kBland || stall >= opt_.stall_limit;
      int entering = -1;
      double best = -opt_.optimality_tol;
      double entering_d = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (position_[j] >= 0 || blocked_[j]) continue;
        double d = cost[j];
        for (auto [r, v] : sf_.cols[j]) d -= y(r) * v;
        if (d < best) {
          entering = j;
          entering_d = d;
          if (bland) break;
          best = d;
        }
      }
      if (entering < 0) {
        if (since_refactor == 0) return Outcome::kOptimal;
        // confirm optimality against a fresh factorization
        refactor();
        since_refactor = 0;
        fresh_duals();
        continue;
      }

      w.setZero();
      for (auto [r, v] : sf_.cols[entering]) w.noalias() += v * binv_.col(r);

      int leave = -1;
      double step = kInf;
      for (int r = 0; r < m_; ++r) {
        if (w(r) <= opt_.pivot_tol) continue;
        const double ratio = std::max(xb_(r), 0.0) / w(r);
        if (leave < 0 || ratio < step - 1e-12 * std::max(1.0, step)) {
          leave = r;
          step = ratio;
        } else if (ratio <= step + 1e-12 * std::max(1.0, step)) {
          const bool prefer = bland ? basis_[r] < basis_[leave] : w(r) > w(leave);
          if (prefer) {
            leave = r;
            step = std::min(step, ratio);
          }
        }
      }
      if (leave < 0) return Outcome::kUnbounded;

      stall = step <= 1e-12 ? stall + 1 : 0;
      pivot(entering, leave, w, step);
      ++iterations_;
      if (++since_refactor >= interval) {
        refactor();
        since_refactor = 0;
        fresh_duals();
      } else {
        y.noalias() += entering_d * binv_.row(leave).transpose();
      }
    }
  }

  // Removes artificial columns from the basis after phase one. Rows whose
  // artificial cannot be exchanged are linearly dependent and keep the
  // artificial pinned at zero.
  void expel_artificials() {
    Eigen::VectorXd w(m_);
    for (int j = sf_.first_artificial; j < n_; ++j) blocked_[j] = true;
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < sf_.first_artificial) continue;
      const Eigen::RowVectorXd row = binv_.row(r);
      int entering = -1;
      double best = 1e-9;
      for (int j = 0; j < sf_.first_artificial; ++j) {
        if (position_[j] >= 0) continue;
        double v = 0.0;
        for (auto [i, a] : sf_.cols[j]) v += row(i) * a;
        if (std::abs(v) > best) {
          best = std::abs(v);
          entering = j;
        }
      }
      if (entering < 0) continue;
      w.setZero();
      for (auto [i, a] : sf_.cols[entering]) w.noalias() += a * binv_.col(i);
      pivot(entering, r, w, xb_(r) / w(r));
    }
    refactor();
  }

  double value(const std::vector<double>& cost) const {
    double v = 0.0;
    for (int r = 0; r < m_; ++r) v += cost[basis_[r]] * xb_(r);
    return v;
  }

  Eigen::VectorXd primal() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
    for (int r = 0; r < m_; ++r) y(basis_[r]) = std::max(xb_(r), 0.0);
    return y;
  }

  int iterations() const { return iterations_; }

 private:
  void pivot(int entering, int leave, const Eigen::VectorXd& w, double step) {
    xb_.noalias() -= step * w;
    xb_(leave) = step;
    const Eigen::RowVectorXd pivot_row = binv_.row(leave) / w(leave);
    binv_.noalias() -= w * pivot_row;
    binv_.row(leave) = pivot_row;
    position_[basis_[leave]] = -1;
    basis_[leave] = entering;
    position_[entering] = leave;
  }

  void refactor() {
    Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(m_, m_);
    for (int r = 0; r < m_; ++r)
      for (auto [i, v] : sf_.cols[basis_[r]]) basis_matrix(i, r) = v;
    binv_ = basis_matrix.partialPivLu().inverse();
    xb_ = binv_ * sf_.rhs;
  }

  const StandardForm& sf_;
  const SimplexOptions& opt_;
  int m_;
  int n_;
  std::vector<int> basis_;
  std::vector<int> position_;
  std::vector<bool> blocked_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  int iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  lp.validate();
  LpSolution sol;
  const int n = lp.n_vars();
  for (int j = 0; j < n; ++j) {
    if (lp.lb(j) > lp.ub(j)) {
      sol.status = LpStatus::kInfeasible;
      sol.x = Eigen::VectorXd::Zero(n);
      return sol;
    }
  }

  const StandardForm sf = standardize(lp);
  RevisedSimplex simplex(sf, options);

  if (sf.first_artificial < sf.cols_count()) {
    std::vector<double> phase1(sf.cols_count(), 0.0);
    for (int j = sf.first_artificial; j < sf.cols_count(); ++j) phase1[j] = 1.0;
    const auto outcome = simplex.run(phase1);
    sol.iterations = simplex.iterations();
    if (outcome == RevisedSimplex::Outcome::kIterationLimit) {
      sol.status = LpStatus::kIterationLimit;
      sol.x = Eigen::VectorXd::Zero(n);
      return sol;
    }
    const double scale = std::max(1.0, sf.rhs.size() ? sf.rhs.cwiseAbs().maxCoeff() : 0.0);
    if (simplex.value(phase1) > options.feasibility_tol * scale) {
      sol.status = LpStatus::kInfeasible;
      sol.x = Eigen::VectorXd::Zero(n);
      return sol;
    }
    simplex.expel_artificials();
  }

  const auto outcome = simplex.run(sf.cost);
  sol.iterations = simplex.iterations();
  const Eigen::VectorXd y = simplex.primal();
  sol.x.resize(n);
  for (int j = 0; j < n; ++j) {
    const int c = sf.column_of[j];
    switch (sf.kind[j]) {
      case VarKind::kShift: sol.x(j) = sf.offset(j) + y(c); break;
      case VarKind::kMirror: sol.x(j) = sf.offset(j) - y(c); break;
      case VarKind::kFree: sol.x(j) = y(c) - y(c + 1); break;
    }
  }
  sol.objective = lp.c.dot(sol.x);
  sol.residuals = audit(lp, sol.x);
  switch (outcome) {
    case RevisedSimplex::Outcome::kOptimal: sol.status = LpStatus::kOptimal; break;
    case RevisedSimplex::Outcome::kUnbounded: sol.status = LpStatus::kUnbounded; break;
    case RevisedSimplex::Outcome::kIterationLimit: sol.status = LpStatus::kIterationLimit; break;
  }
  return sol;
}

}  // namespace feasopf
