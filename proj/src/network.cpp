#include "feasopf/network.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "feasopf/errors.hpp"
#include "feasopf/polytope.hpp"

namespace feasopf {

using detail::require;
using nlohmann::json;

Eigen::VectorXd PowerNetwork::flow_limits() const {
  Eigen::VectorXd f(n_lines());
  for (int m = 0; m < n_lines(); ++m) f(m) = lines[m].flow_limit;
  return f;
}

bool PowerNetwork::is_generator(int bus) const {
  for (int g : gen_buses)
    if (g == bus) return true;
  return false;
}

void PowerNetwork::validate() const {
  require(n_buses >= 2, "network needs at least two buses");
  require(slack >= 0 && slack < n_buses, "slack bus out of range");
  require(!lines.empty(), "network has no lines");
  for (std::size_t m = 0; m < lines.size(); ++m) {
    const Line& l = lines[m];
    const std::string tag = "line " + std::to_string(m + 1);
    require(l.from >= 0 && l.from < n_buses && l.to >= 0 && l.to < n_buses,
            tag + ": bus index out of range");
    require(l.from != l.to, tag + ": self loop");
    require(std::isfinite(l.susceptance) && l.susceptance > 0.0,
            tag + ": susceptance must be positive");
    require(std::isfinite(l.flow_limit) && l.flow_limit > 0.0,
            tag + ": flow limit must be positive");
  }
  for (int g : gen_buses) require(g >= 0 && g < n_buses, "generator bus out of range");
  auto check_vec = [&](const Eigen::VectorXd& v, const char* name, bool nonneg) {
    require(v.size() == n_buses, std::string(name) + " must have one entry per bus");
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      require(std::isfinite(v(i)), std::string(name) + " has a non-finite entry");
      if (nonneg) require(v(i) >= 0.0, std::string(name) + " must be nonnegative");
    }
  };
  check_vec(p_max, "pmax", true);
  check_vec(alpha, "alpha", true);
  check_vec(beta, "beta", true);
  check_vec(mu, "mu", true);
  check_vec(gamma_res, "gamma_res", true);
  check_vec(nominal_load, "nominal_load", true);
}

bool PowerNetwork::is_connected() const {
  if (n_buses <= 0) return false;
  std::vector<int> parent(n_buses);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n_buses;
  for (const Line& l : lines) {
    int a = find(l.from), b = find(l.to);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

namespace {

Eigen::VectorXd read_vector(const json& doc, const char* key, int n) {
  require(doc.contains(key), std::string("case file is missing \"") + key + "\"");
  const auto& arr = doc.at(key);
  require(arr.is_array() && static_cast<int>(arr.size()) == n,
          std::string("\"") + key + "\" must be an array of length " + std::to_string(n));
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = arr[i].get<double>();
  return v;
}

json write_vector(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

}  // namespace

PowerNetwork parse_case(const json& doc) {
  PowerNetwork net;
  try {
    require(doc.is_object(), "case file must be a JSON object");
    net.n_buses = doc.at("buses").get<int>();
    require(net.n_buses >= 2, "network needs at least two buses");
    net.slack = doc.value("slack", 1) - 1;
    for (const auto& l : doc.at("lines")) {
      Line line;
      line.from = l.at("from").get<int>() - 1;
      line.to = l.at("to").get<int>() - 1;
      line.susceptance = l.at("b").get<double>();
      line.flow_limit = l.at("fmax").get<double>();
      net.lines.push_back(line);
    }
    for (const auto& g : doc.at("gen")) net.gen_buses.push_back(g.get<int>() - 1);
    net.p_max = read_vector(doc, "pmax", net.n_buses);
    net.alpha = read_vector(doc, "alpha", net.n_buses);
    net.beta = read_vector(doc, "beta", net.n_buses);
    net.mu = read_vector(doc, "mu", net.n_buses);
    net.gamma_res = read_vector(doc, "gamma_res", net.n_buses);
    net.nominal_load = read_vector(doc, "nominal_load", net.n_buses);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed case file: ") + e.what());
  }
  net.validate();
  return net;
}

json case_to_json(const PowerNetwork& net) {
  json doc;
  doc["buses"] = net.n_buses;
  doc["slack"] = net.slack + 1;
  json lines = json::array();
  for (const Line& l : net.lines)
    lines.push_back({{"from", l.from + 1}, {"to", l.to + 1}, {"b", l.susceptance}, {"fmax", l.flow_limit}});
  doc["lines"] = lines;
  json gens = json::array();
  for (int g : net.gen_buses) gens.push_back(g + 1);
  doc["gen"] = gens;
  doc["pmax"] = write_vector(net.p_max);
  doc["alpha"] = write_vector(net.alpha);
  doc["beta"] = write_vector(net.beta);
  doc["mu"] = write_vector(net.mu);
  doc["gamma_res"] = write_vector(net.gamma_res);
  doc["nominal_load"] = write_vector(net.nominal_load);
  return doc;
}

PowerNetwork load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open case file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("case file " + path + " is not valid JSON: " + e.what());
  }
  return parse_case(doc);
}

std::string case_hash(const PowerNetwork& net) {
  const std::string text = case_to_json(net).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AngleOperators assemble_operators(const PowerNetwork& net) {
  net.validate();
  const int n = net.n_buses;
  const int m = net.n_lines();
  // Full bus-space matrices first, slack column dropped at the end.
  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd flow_full = Eigen::MatrixXd::Zero(m, n);
  for (int k = 0; k < m; ++k) {
    const Line& l = net.lines[k];
    const double b = l.susceptance;
    laplacian(l.from, l.from) += b;
    laplacian(l.to, l.to) += b;
    laplacian(l.from, l.to) -= b;
    laplacian(l.to, l.from) -= b;
    flow_full(k, l.from) = b;
    flow_full(k, l.to) = -b;
  }
  AngleOperators ops;
  ops.slack = net.slack;
  ops.injection.resize(n, n - 1);
  ops.flow.resize(m, n - 1);
  for (int j = 0, col = 0; j < n; ++j) {
    if (j == net.slack) continue;
    ops.injection.col(col) = laplacian.col(j);
    ops.flow.col(col) = flow_full.col(j);
    ++col;
  }
  return ops;
}

AngleOperators build_operators(const PowerNetwork& net) {
  net.validate();
  if (!net.is_connected()) throw ValidationError("unbounded angle polytope: network is disconnected");
  return assemble_operators(net);
}

PolyhedralCSet theta_polytope(const AngleOperators& ops, const Eigen::VectorXd& f_max) {
  const Eigen::Index m = ops.flow.rows();
  require(f_max.size() == m, "flow limit vector has wrong length");
  for (Eigen::Index i = 0; i < m; ++i)
    require(f_max(i) > 0.0, "origin not interior: flow limits must be positive");
  Eigen::MatrixXd A(2 * m, ops.flow.cols());
  A << ops.flow, -ops.flow;
  Eigen::VectorXd b(2 * m);
  b << f_max, f_max;
  return PolyhedralCSet(std::move(A), std::move(b));
}

Eigen::VectorXd flows(const AngleOperators& ops, const Eigen::VectorXd& theta) {
  require(theta.size() == ops.flow.cols(), "angle vector has wrong dimension");
  return ops.flow * theta;
}

Eigen::VectorXd injections(const AngleOperators& ops, const Eigen::VectorXd& theta) {
  require(theta.size() == ops.injection.cols(), "angle vector has wrong dimension");
  return ops.injection * theta;
}

}  // namespace feasopf
