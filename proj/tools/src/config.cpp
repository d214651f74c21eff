#include "sbren_cli/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace sbren::cli {

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& path, const std::string& msg) const {
    std::ostringstream os;
    os << origin_;
    const YAML::Mark m = at.IsDefined() ? at.Mark() : YAML::Mark::null_mark();
    if (m.line >= 0) os << ':' << (m.line + 1);
    os << ": " << path << ": " << msg;
    throw ConfigError(os.str());
  }

  void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, path, "expected a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, join(path, key), "unknown key");
    }
  }

  YAML::Node require(const YAML::Node& node, const std::string& path, const std::string& key) const {
    const YAML::Node child = node[key];
    if (!child.IsDefined() || child.IsNull()) fail(node, join(path, key), "missing required key");
    return child;
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, path, "cannot convert '" + node.Scalar() + "'");
    }
  }

  template <class T>
  T optional(const YAML::Node& node, const std::string& path, const std::string& key, T fallback) const {
    const YAML::Node child = node[key];
    if (!child.IsDefined() || child.IsNull()) return fallback;
    return scalar<T>(child, join(path, key));
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence()) fail(node, path, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i)
      out.push_back(scalar<double>(node[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  SpinMatrix matrix(const YAML::Node& node, const std::string& path) const {
    if (node.IsScalar()) {
      try {
        return parse_matrix_expression(node.Scalar());
      } catch (const ConfigError& e) {
        fail(node, path, e.what());
      }
    }
    if (!node.IsSequence() || node.size() == 0) fail(node, path, "expected a matrix expression or a list of rows");
    const auto rows = static_cast<Eigen::Index>(node.size());
    Eigen::Index cols = -1;
    SpinMatrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const YAML::Node row = node[static_cast<std::size_t>(r)];
      const std::string rp = path + "[" + std::to_string(r) + "]";
      if (!row.IsSequence()) fail(row, rp, "expected a row");
      if (cols < 0) {
        cols = static_cast<Eigen::Index>(row.size());
        m = SpinMatrix::Zero(rows, cols);
      } else if (static_cast<Eigen::Index>(row.size()) != cols) {
        fail(row, rp, "rows have different lengths");
      }
      for (Eigen::Index c = 0; c < cols; ++c) {
        const YAML::Node e = row[static_cast<std::size_t>(c)];
        const std::string ep = rp + "[" + std::to_string(c) + "]";
        if (e.IsSequence()) {
          if (e.size() != 2) fail(e, ep, "complex entries are [re, im] pairs");
          m(r, c) = cplx(scalar<double>(e[0], ep), scalar<double>(e[1], ep));
        } else {
          m(r, c) = scalar<double>(e, ep);
        }
      }
    }
    return m;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::string origin_;
};

// Tiny recursive-descent parser for matrix expressions.
class ExprParser {
 public:
  explicit ExprParser(const std::string& s) : s_(s) {}

  SpinMatrix parse() {
    SpinMatrix m = expr();
    skip();
    if (pos_ != s_.size()) error("unexpected trailing input");
    return m;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    throw ConfigError("matrix expression '" + s_ + "': " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) error(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) error("expected a name");
    return s_.substr(start, pos_ - start);
  }
  int integer() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) error("expected a positive integer");
    const int v = std::stoi(s_.substr(start, pos_ - start));
    if (v < 1 || v > 64) error("dimension out of range");
    return v;
  }
  SpinMatrix expr() {
    SpinMatrix m = term();
    while (accept('+')) {
      const SpinMatrix r = term();
      if (r.rows() != m.rows()) error("dimension mismatch in sum");
      m += r;
    }
    return m;
  }
  SpinMatrix term() {
    const std::string name = ident();
    if (name == "sigma_x") return spin::sigma_x();
    if (name == "sigma_y") return spin::sigma_y();
    if (name == "sigma_z") return spin::sigma_z();
    if (name == "sigma_minus") return spin::sigma_minus();
    if (name == "sigma_plus") return spin::sigma_plus();
    if (name == "identity" || name == "zero") {
      expect('(');
      const int n = integer();
      expect(')');
      return name == "identity" ? spin::identity(n) : spin::zero(n);
    }
    if (name == "kron") {
      expect('(');
      const SpinMatrix a = expr();
      expect(',');
      const SpinMatrix b = expr();
      expect(')');
      return spin::kron(a, b);
    }
    if (name == "kron_power") {
      expect('(');
      const SpinMatrix a = expr();
      expect(',');
      const int k = integer();
      expect(')');
      return spin::kron_power(a, k);
    }
    error("unknown matrix '" + name + "'");
  }

  std::string s_;
  std::size_t pos_ = 0;
};

std::vector<double> masked(const std::vector<double>& p, const ModeGrid& g, bool infrared) {
  std::vector<double> out(p);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (g.infrared(i) != infrared) out[i] = 0.0;
  return out;
}

std::string check_key_path(const std::string& check) {
  if (check == "support_le") return "spin.B_le";
  if (check == "support_d" || check == "normality_d" || check == "commute_d_le") return "spin.B_D";
  return "spin.B_N";
}

std::string check_message(const std::string& check) {
  if (check == "normality_d") return "normality violated";
  if (check == "nilpotency_n") return "nilpotency violated";
  if (check.rfind("support", 0) == 0) return "coupling part supported on the wrong side of kappa";
  return "normal and nilpotent parts do not commute";
}

}  // namespace

SpinMatrix parse_matrix_expression(const std::string& expr) { return ExprParser(expr).parse(); }

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  const Reader rd(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << origin << ':' << (e.mark.line + 1) << ": malformed YAML: " << e.msg;
    throw ConfigError(os.str());
  }
  if (!root.IsMap()) rd.fail(root, "<root>", "expected a mapping");
  rd.check_keys(root, "", {"name", "grid", "spin", "fock", "ibc", "run", "verify"});

  RunConfig cfg;
  cfg.source = text;
  cfg.name = rd.optional<std::string>(root, "", "name", "unnamed");

  // grid
  const YAML::Node g = rd.require(root, "", "grid");
  rd.check_keys(g, "grid", {"family", "beta", "kappa", "lambda_max", "n_modes", "modes", "profile"});
  cfg.grid.family = rd.optional<std::string>(g, "grid", "family", "power_law");
  cfg.grid.kappa = rd.scalar<double>(rd.require(g, "grid", "kappa"), "grid.kappa");
  if (!(cfg.grid.kappa > 0.0)) rd.fail(g["kappa"], "grid.kappa", "kappa must be positive");
  if (cfg.grid.family == "power_law") {
    cfg.grid.beta = rd.scalar<double>(rd.require(g, "grid", "beta"), "grid.beta");
    cfg.grid.lambda_max = rd.scalar<double>(rd.require(g, "grid", "lambda_max"), "grid.lambda_max");
    cfg.grid.n_modes = rd.scalar<int>(rd.require(g, "grid", "n_modes"), "grid.n_modes");
    if (g["modes"] || g["profile"]) rd.fail(g, "grid", "modes/profile are only allowed for the explicit family");
    if (!(cfg.grid.kappa < cfg.grid.lambda_max))
      rd.fail(g["kappa"], "grid.kappa", "kappa must be smaller than lambda_max");
    if (cfg.grid.n_modes < 2) rd.fail(g["n_modes"], "grid.n_modes", "need at least 2 modes");
  } else if (cfg.grid.family == "explicit") {
    for (const char* k : {"beta", "lambda_max", "n_modes"})
      if (g[k]) rd.fail(g[k], std::string("grid.") + k, "not allowed for the explicit family");
    const YAML::Node modes = rd.require(g, "grid", "modes");
    if (!modes.IsSequence() || modes.size() == 0) rd.fail(modes, "grid.modes", "expected a non-empty list");
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const std::string mp = "grid.modes[" + std::to_string(i) + "]";
      const std::vector<double> v = rd.numbers(modes[i], mp);
      if (v.size() != 3) rd.fail(modes[i], mp, "expected [k, omega, mu]");
      if (!(v[1] > 0.0) || !(v[2] > 0.0)) rd.fail(modes[i], mp, "omega and mu must be positive");
      cfg.grid.modes.push_back({v[0], v[1], v[2]});
    }
    cfg.grid.n_modes = static_cast<int>(cfg.grid.modes.size());
    double wmax = 0.0;
    for (const auto& m : cfg.grid.modes) wmax = std::max(wmax, m.omega);
    cfg.grid.lambda_max = 2.0 * wmax;
    if (!(cfg.grid.kappa < wmax)) rd.fail(g["kappa"], "grid.kappa", "kappa must be smaller than the largest omega");
    if (g["profile"]) {
      cfg.grid.profile = rd.numbers(g["profile"], "grid.profile");
      if (cfg.grid.profile.size() != cfg.grid.modes.size())
        rd.fail(g["profile"], "grid.profile", "length differs from the number of modes");
    } else {
      cfg.grid.profile.assign(cfg.grid.modes.size(), 1.0);
    }
  } else {
    rd.fail(g["family"], "grid.family", "unknown family '" + cfg.grid.family + "' (power_law or explicit)");
  }

  // spin
  const YAML::Node sp = rd.require(root, "", "spin");
  rd.check_keys(sp, "spin", {"dim", "S", "B_le", "B_D", "B_N", "coupling", "profiles"});
  cfg.spin_dim = rd.scalar<int>(rd.require(sp, "spin", "dim"), "spin.dim");
  if (cfg.spin_dim < 1 || cfg.spin_dim > 64) rd.fail(sp["dim"], "spin.dim", "must lie in [1, 64]");
  const auto n = static_cast<Eigen::Index>(cfg.spin_dim);
  auto mat = [&](const char* key, bool required) -> SpinMatrix {
    const std::string path = std::string("spin.") + key;
    const YAML::Node node = required ? rd.require(sp, "spin", key) : sp[key];
    if (!node.IsDefined() || node.IsNull()) return spin::zero(cfg.spin_dim);
    SpinMatrix m = rd.matrix(node, path);
    if (m.rows() != n || m.cols() != n)
      rd.fail(node, path, "matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                              ", spin.dim is " + std::to_string(cfg.spin_dim));
    return m;
  };
  cfg.s = mat("S", true);
  if ((cfg.s - cfg.s.adjoint()).cwiseAbs().maxCoeff() > 1e-12) rd.fail(sp["S"], "spin.S", "S must be self-adjoint");
  cfg.b_le = mat("B_le", false);
  cfg.b_d = mat("B_D", false);
  cfg.b_n = mat("B_N", false);
  cfg.coupling = rd.optional<double>(sp, "spin", "coupling", 1.0);
  if (const YAML::Node pr = sp["profiles"]; pr.IsDefined() && !pr.IsNull()) {
    rd.check_keys(pr, "spin.profiles", {"v_le", "v_d", "v_n"});
    auto list = [&](const char* key, std::optional<std::vector<double>>& out) {
      if (!pr[key]) return;
      const std::string path = std::string("spin.profiles.") + key;
      out = rd.numbers(pr[key], path);
      if (static_cast<int>(out->size()) != cfg.grid.n_modes)
        rd.fail(pr[key], path, "length differs from the number of modes");
    };
    list("v_le", cfg.profiles.v_le);
    list("v_d", cfg.profiles.v_d);
    list("v_n", cfg.profiles.v_n);
  }

  // fock
  const YAML::Node fk = rd.require(root, "", "fock");
  rd.check_keys(fk, "fock", {"n_max"});
  cfg.n_max = rd.scalar<int>(rd.require(fk, "fock", "n_max"), "fock.n_max");
  if (cfg.n_max < 1 || cfg.n_max > 64) rd.fail(fk["n_max"], "fock.n_max", "must lie in [1, 64]");

  // ibc
  if (const YAML::Node ib = root["ibc"]; ib.IsDefined() && !ib.IsNull()) {
    rd.check_keys(ib, "ibc", {"lambda", "s_n"});
    cfg.lambda = rd.optional<double>(ib, "ibc", "lambda", 1.0);
    if (!(cfg.lambda > 0.0)) rd.fail(ib["lambda"], "ibc.lambda", "lambda must be positive");
    cfg.s_n = rd.optional<double>(ib, "ibc", "s_n", 2.0);
    if (cfg.s_n < 1.0 || cfg.s_n > 2.0) rd.fail(ib["s_n"], "ibc.s_n", "s_n must lie in [1, 2]");
  }

  // run
  const YAML::Node rn = rd.require(root, "", "run");
  rd.check_keys(rn, "run", {"schedule", "seed", "expect", "tolerances"});
  cfg.schedule = rd.numbers(rd.require(rn, "run", "schedule"), "run.schedule");
  if (cfg.schedule.empty()) rd.fail(rn["schedule"], "run.schedule", "must not be empty");
  for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
    if (!(cfg.schedule[i] > 0.0)) rd.fail(rn["schedule"], "run.schedule", "cutoffs must be positive");
    if (i > 0 && !(cfg.schedule[i] > cfg.schedule[i - 1]))
      rd.fail(rn["schedule"], "run.schedule", "cutoffs must be strictly increasing");
  }
  cfg.seed = rd.optional<std::uint64_t>(rn, "run", "seed", 1);
  cfg.expect = rd.optional<std::string>(rn, "run", "expect", "pass");
  if (cfg.expect != "pass" && cfg.expect != "fail") rd.fail(rn["expect"], "run.expect", "must be 'pass' or 'fail'");
  if (const YAML::Node tl = rn["tolerances"]; tl.IsDefined() && !tl.IsNull()) {
    rd.check_keys(tl, "run.tolerances", {"identity", "inversion", "weyl", "bound_slack", "appendix", "oracle"});
    auto tol = [&](const char* key, double& out) {
      out = rd.optional<double>(tl, "run.tolerances", key, out);
      if (!(out > 0.0)) rd.fail(tl[key], std::string("run.tolerances.") + key, "must be positive");
    };
    tol("identity", cfg.tol.identity);
    tol("inversion", cfg.tol.inversion);
    tol("weyl", cfg.tol.weyl);
    tol("bound_slack", cfg.tol.bound_slack);
    tol("appendix", cfg.tol.appendix);
    tol("oracle", cfg.tol.oracle);
  }

  // verify
  if (const YAML::Node vf = root["verify"]; vf.IsDefined() && !vf.IsNull()) {
    rd.check_keys(vf, "verify", {"n_modes", "n_max", "lambda_max", "samples"});
    cfg.verify.n_modes = rd.optional<int>(vf, "verify", "n_modes", cfg.verify.n_modes);
    cfg.verify.n_max = rd.optional<int>(vf, "verify", "n_max", cfg.verify.n_max);
    if (vf["lambda_max"]) cfg.verify.lambda_max = rd.scalar<double>(vf["lambda_max"], "verify.lambda_max");
    cfg.verify.samples = rd.optional<int>(vf, "verify", "samples", cfg.verify.samples);
    if (cfg.verify.n_modes < 2) rd.fail(vf["n_modes"], "verify.n_modes", "need at least 2 modes");
    if (cfg.verify.n_max < 3 || cfg.verify.n_max > 64) rd.fail(vf["n_max"], "verify.n_max", "must lie in [3, 64]");
    if (cfg.verify.lambda_max && !(*cfg.verify.lambda_max > cfg.grid.kappa))
      rd.fail(vf["lambda_max"], "verify.lambda_max", "must exceed kappa");
    if (cfg.verify.samples < 1) rd.fail(vf["samples"], "verify.samples", "must be positive");
  }
  if (cfg.grid.family == "explicit") cfg.verify.n_modes = cfg.grid.n_modes;

  // Structural checks of the coupling decomposition.
  for (bool reduced : {false, true}) {
    std::optional<Problem> p;
    try {
      p = build_problem(cfg, reduced);
    } catch (const Error& e) {
      rd.fail(root, reduced ? "verify" : "grid", e.what());
    }
    const StructureReport rep = check_structure(p->spec.coupling);
    for (const auto& chk : rep.checks) {
      if (chk.pass) continue;
      const std::string path = check_key_path(chk.name);
      const std::string key = path.substr(path.find('.') + 1);
      std::ostringstream os;
      os << check_message(chk.name) << " (check " << chk.name << ", violation " << chk.violation << ")";
      rd.fail(sp[key].IsDefined() ? sp[key] : sp, path, os.str());
    }
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

Problem build_problem(const RunConfig& cfg, bool reduced) {
  GridPtr grid;
  std::vector<double> profile;
  if (cfg.grid.family == "explicit") {
    grid = std::make_shared<const ModeGrid>(cfg.grid.modes, cfg.grid.kappa);
    profile = cfg.grid.profile;
  } else {
    const double lmax = reduced && cfg.verify.lambda_max ? *cfg.verify.lambda_max : cfg.grid.lambda_max;
    const int modes = reduced ? cfg.verify.n_modes : cfg.grid.n_modes;
    PowerLawGrid pl = power_law_grid(cfg.grid.beta, cfg.grid.kappa, lmax, modes);
    grid = pl.grid;
    profile = std::move(pl.profile);
  }
  for (double& x : profile) x *= cfg.coupling;
  const bool same_grid = !reduced || cfg.grid.family == "explicit";
  auto part = [&](const std::optional<std::vector<double>>& expl, bool infrared, const SpinMatrix& b) {
    if (expl && same_grid) {
      std::vector<double> v(*expl);
      for (double& x : v) x *= cfg.coupling;
      return FormFactor::separable(grid, v, b);
    }
    return FormFactor::separable(grid, masked(profile, *grid, infrared), b);
  };
  CouplingDecomposition c{part(cfg.profiles.v_le, true, cfg.b_le), part(cfg.profiles.v_d, false, cfg.b_d),
                          part(cfg.profiles.v_n, false, cfg.b_n), cfg.s_n};
  return Problem{grid, renorm::HamiltonianSpec{cfg.s, std::move(c), cfg.lambda}};
}

std::string config_hash(const RunConfig& cfg, double tolerance_scale) {
  std::ostringstream extra;
  extra.precision(17);
  extra << "\nseed=" << cfg.seed << "\ntolerance_scale=" << tolerance_scale;
  const std::string data = cfg.source + extra.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sbren::cli
