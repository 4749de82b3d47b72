#pragma once

#include <Eigen/Dense>
#include <vector>

namespace feasopf {

enum class BoundednessCheck {
  kAssumed,  // caller vouches for compactness
  kProbe,    // verified with one LP per coordinate direction
};

/// Polyhedral C-set {z : A z <= b} with b > 0, so the origin is interior.
class PolyhedralCSet {
 public:
  PolyhedralCSet(Eigen::MatrixXd A, Eigen::VectorXd b,
                 BoundednessCheck check = BoundednessCheck::kAssumed);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  int dim() const { return static_cast<int>(A_.cols()); }
  int rows() const { return static_cast<int>(A_.rows()); }

  bool bounded() const { return bounded_; }
  /// True when `bounded()` came from an LP probe rather than an assumption.
  bool bounded_verified() const { return verified_; }

  /// Row ratios a_i^T z / b_i.
  Eigen::VectorXd ratios(const Eigen::VectorXd& z) const;

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  bool bounded_ = true;
  bool verified_ = false;
};

/// {z : -1 <= z_i <= 1}. Rows alternate +e_i, -e_i.
PolyhedralCSet unit_inf_ball(int n);

/// Minkowski gauge max(0, max_i a_i^T z / b_i).
double gauge(const PolyhedralCSet& set, const Eigen::VectorXd& z);

/// Gauge together with the lowest-index maximizing row (-1 when the clamp
/// at zero is active).
struct GaugeValue {
  double value = 0.0;
  int active_row = -1;
};
GaugeValue gauge_with_row(const PolyhedralCSet& set, const Eigen::VectorXd& z);

bool contains(const PolyhedralCSet& set, const Eigen::VectorXd& z, double tol);

struct GaugeMapResult {
  Eigen::VectorXd image;
  double scale = 0.0;  // g_P(z) / g_Q(z)
  int active_p = -1;
  int active_q = -1;
};

/// Gauge map G(z | P, Q) = g_P(z) / g_Q(z) * z with G(0) := 0.
/// Requires g_P(z) <= 1 + 1e-12.
GaugeMapResult gauge_map(const Eigen::VectorXd& z, const PolyhedralCSet& P,
                         const PolyhedralCSet& Q);

/// Vector-Jacobian product upstream^T dG/dz evaluated on the partition cell
/// selected by the lowest-index active rows. Zero at z = 0.
Eigen::VectorXd gauge_map_vjp(const Eigen::VectorXd& z, const PolyhedralCSet& P,
                              const PolyhedralCSet& Q, const Eigen::VectorXd& upstream);

/// Per-coordinate extent of a polyhedron, obtained by maximizing and
/// minimizing each coordinate with the LP core.
struct AxisExtent {
  std::vector<double> lower;  // -inf when unbounded below
  std::vector<double> upper;  // +inf when unbounded above
  bool bounded = true;
};
AxisExtent probe_extent(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

inline constexpr double kMembershipTol = 1e-12;

}  // namespace feasopf
