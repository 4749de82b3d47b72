#pragma once

#include "feasopf/polytope.hpp"

namespace oracle {

// min{lambda >= 0 : z / lambda in P} by bisection on membership.
inline double bisection_gauge(const feasopf::PolyhedralCSet& P, const Eigen::VectorXd& z) {
  if (z.isZero(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!feasopf::contains(P, z / hi, 0.0)) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid > 0.0 && feasopf::contains(P, z / mid, 0.0)) hi = mid;
    else lo = mid;
  }
  return hi;
}


}  // namespace oracle
