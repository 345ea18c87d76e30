#include "pwmbound/instance_io.hpp"

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "pwmbound/errors.hpp"

namespace pwmbound {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

// Numbers are emitted as raw %.17g tokens so the files are reproducible and
// round-trip exactly; the library's own double printer is bypassed via string
// markers that render() strips after dump().
ordered_json num(double v) {
  return ordered_json(std::string("\x01") + format_g17(v) + "\x01");
}

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json arr = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(num(v[i]));
  return arr;
}

ordered_json mat_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

// Replaces the quoted "\x01...\x01" markers by their bare numeric text.  The
// dump step escapes the control bytes, so the dumped text carries the
// six-character sequence  rather than the raw byte.
std::string render(const ordered_json& j) {
  const std::string s = j.dump(2);
  const std::string mark = "\\u0001";
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '"' && s.compare(i + 1, mark.size(), mark) == 0) {
      const size_t start = i + 1 + mark.size();
      const size_t end = s.find(mark, start);
      if (end == std::string::npos) throw std::logic_error("render: unbalanced marker");
      out += s.substr(start, end - start);
      i = end + mark.size() + 1;  // also skip the closing quote
    } else {
      out += s[i++];
    }
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open for writing: " + path);
  os << text;
  if (!os) throw ConfigError("write failed: " + path);
}

json read_json(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad JSON in " + path + ": " + e.what());
  }
  return j;
}

Eigen::VectorXd vec_from(const json& j, const std::string& name) {
  if (!j.is_array()) throw ConfigError("field " + name + " must be an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("field " + name + " must hold numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd mat_from(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError("field " + name + " must be a matrix (array of rows)");
  const size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ConfigError("field " + name + " has ragged rows");
    for (size_t c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw ConfigError("field " + name + " must hold numbers");
      m(static_cast<int>(i), static_cast<int>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

const json& field(const json& j, const std::string& name) {
  const auto it = j.find(name);
  if (it == j.end()) throw ConfigError("missing field: " + name);
  return *it;
}

}  // namespace

LQProblem load_instance(const std::string& path) {
  const json j = read_json(path);
  LQProblem p;
  p.A = mat_from(field(j, "A"), "A");
  p.B_u = mat_from(field(j, "B_u"), "B_u");
  p.B_xi = mat_from(field(j, "B_xi"), "B_xi");
  p.L = mat_from(field(j, "L"), "L");
  if (!field(j, "gamma").is_number()) throw ConfigError("field gamma must be a number");
  p.gamma = j["gamma"].get<double>();
  p.u_lo = vec_from(field(j, "u_lo"), "u_lo");
  p.u_hi = vec_from(field(j, "u_hi"), "u_hi");
  p.xi_mean = vec_from(field(j, "xi_mean"), "xi_mean");
  p.xi_second = mat_from(field(j, "xi_second"), "xi_second");
  p.x0_mean = vec_from(field(j, "x0_mean"), "x0_mean");
  p.x0_cov = mat_from(field(j, "x0_cov"), "x0_cov");
  try {
    validate(p);
  } catch (const std::exception& e) {
    throw ConfigError("invalid instance in " + path + ": " + e.what());
  }
  return p;
}

void save_instance(const LQProblem& prob, const std::string& path) {
  validate(prob);
  ordered_json j;
  j["A"] = mat_json(prob.A);
  j["B_u"] = mat_json(prob.B_u);
  j["B_xi"] = mat_json(prob.B_xi);
  j["L"] = mat_json(prob.L);
  j["gamma"] = num(prob.gamma);
  j["u_lo"] = vec_json(prob.u_lo);
  j["u_hi"] = vec_json(prob.u_hi);
  j["xi_mean"] = vec_json(prob.xi_mean);
  j["xi_second"] = mat_json(prob.xi_second);
  j["x0_mean"] = vec_json(prob.x0_mean);
  j["x0_cov"] = mat_json(prob.x0_cov);
  write_text(path, render(j) + "\n");
}

VFFamily load_family(const std::string& path) {
  const json j = read_json(path);
  const json& members = field(j, "members");
  if (!members.is_array()) throw ConfigError("field members must be an array");
  VFFamily fam;
  for (const auto& mj : members) {
    QuadraticVF vf;
    if (!field(mj, "s").is_number()) throw ConfigError("member field s must be a number");
    vf.s = mj["s"].get<double>();
    vf.p = vec_from(field(mj, "p"), "p");
    vf.P = mat_from(field(mj, "P"), "P");
    if (vf.P.rows() != vf.P.cols() || vf.P.rows() != vf.p.size())
      throw ConfigError("member with inconsistent shapes in " + path);
    fam.push_back(std::move(vf));
  }
  if (fam.empty()) throw ConfigError("family in " + path + " has no members");
  return fam;
}

void save_family(const VFFamily& family, const std::string& path) {
  ordered_json j;
  ordered_json members = ordered_json::array();
  for (const auto& vf : family) {
    ordered_json mj;
    mj["s"] = num(vf.s);
    mj["p"] = vec_json(vf.p);
    mj["P"] = mat_json(vf.P);
    members.push_back(std::move(mj));
  }
  j["members"] = std::move(members);
  write_text(path, render(j) + "\n");
}

void save_gap_report(const GapReport& report, const std::string& path) {
  ordered_json j;
  j["lower_bound"] = num(report.lower_bound);
  j["policy_cost"] = num(report.policy_cost);
  j["policy_cost_stderr"] = num(report.policy_cost_stderr);
  j["gap_fraction"] = num(report.gap_fraction);
  j["n_rollouts"] = report.n_rollouts;
  j["horizon"] = report.horizon;
  j["seed"] = report.seed;
  write_text(path, render(j) + "\n");
}

GapReport load_gap_report(const std::string& path) {
  const json j = read_json(path);
  GapReport r;
  r.lower_bound = field(j, "lower_bound").get<double>();
  r.policy_cost = field(j, "policy_cost").get<double>();
  r.policy_cost_stderr = field(j, "policy_cost_stderr").get<double>();
  r.gap_fraction = field(j, "gap_fraction").get<double>();
  r.n_rollouts = field(j, "n_rollouts").get<int>();
  r.horizon = field(j, "horizon").get<int>();
  r.seed = field(j, "seed").get<std::uint64_t>();
  return r;
}

void write_outer_trace_csv(const OuterResult& result, const std::string& path) {
  std::string text = "outer_iter,sample_idx,inner_iter,f_pwm,weight,sdp_iters,wall_ms\n";
  for (const auto& row : result.rows) {
    text += std::to_string(row.outer_iter) + "," + std::to_string(row.sample_idx) + "," +
            std::to_string(row.inner_iters) + "," + format_g17(row.f_pwm) + "," +
            format_g17(row.weight) + "," + std::to_string(row.sdp_iters) + "," +
            format_g17(row.wall_ms) + "\n";
  }
  write_text(path, text);
}

void write_sdp_timing_csv(const OuterResult& result, const std::string& path) {
  std::string text = "function_idx,kind,iters,wall_ms,cum_ms\n";
  for (const auto& row : result.sdp_log) {
    text += std::to_string(row.function_idx) + "," + std::string(1, row.kind) + "," +
            std::to_string(row.iters) + "," + format_g17(row.wall_ms) + "," +
            format_g17(row.cum_ms) + "\n";
  }
  write_text(path, text);
}

}  // namespace pwmbound
