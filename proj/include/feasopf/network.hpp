#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"

namespace feasopf {

class PolyhedralCSet;

struct Line {
  int from = 0;  // 0-based bus index
  int to = 0;
  double susceptance = 0.0;
  double flow_limit = 0.0;  // MW
};

/// Static description of a DC network together with the price vectors of
/// both two-stage applications. All per-bus vectors have length n_buses.
struct PowerNetwork {
  int n_buses = 0;
  int slack = 0;
  std::vector<Line> lines;
  std::vector<int> gen_buses;
  Eigen::VectorXd p_max;
  Eigen::VectorXd alpha;      // first-stage energy price, $/MW
  Eigen::VectorXd beta;       // recourse purchase price, $/MW
  Eigen::VectorXd mu;         // reserve capacity price, $/MW
  Eigen::VectorXd gamma_res;  // reserve deviation penalty, $/MW
  Eigen::VectorXd nominal_load;

  int n_lines() const { return static_cast<int>(lines.size()); }
  int n_angles() const { return n_buses - 1; }
  Eigen::VectorXd flow_limits() const;
  bool is_generator(int bus) const;

  /// Throws ValidationError on malformed data. Connectivity is checked
  /// separately by build_operators.
  void validate() const;
  bool is_connected() const;
};

/// Case-file codec. Bus indices are 1-based in the file.
PowerNetwork parse_case(const nlohmann::json& doc);
nlohmann::json case_to_json(const PowerNetwork& net);
PowerNetwork load_case(const std::string& path);
/// FNV-1a over the canonical JSON dump; used to tie artifacts to a case.
std::string case_hash(const PowerNetwork& net);

/// DC power-flow operators with the slack column removed.
struct AngleOperators {
  Eigen::MatrixXd injection;  // B, N x (N-1)
  Eigen::MatrixXd flow;       // F, M x (N-1)
  int slack = 0;
};

AngleOperators build_operators(const PowerNetwork& net);

/// Same construction without the connectivity requirement. Used to probe
/// what happens to the angle polytope of a disconnected network.
AngleOperators assemble_operators(const PowerNetwork& net);

/// {theta : [F; -F] theta <= [f_max; f_max]}.
PolyhedralCSet theta_polytope(const AngleOperators& ops, const Eigen::VectorXd& f_max);

Eigen::VectorXd flows(const AngleOperators& ops, const Eigen::VectorXd& theta);
Eigen::VectorXd injections(const AngleOperators& ops, const Eigen::VectorXd& theta);

}  // namespace feasopf
