#include "sbren_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sbren/dressing.hpp"
#include "sbren/errors.hpp"
#include "sbren/fock.hpp"
#include "sbren/ibc.hpp"
#include "sbren/linalg.hpp"
#include "sbren/renorm.hpp"
#include "sbren_cli/config.hpp"

namespace sbren::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

const char* verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ResourceError("cannot write " + p.string());
  out << text;
}

json header(const std::string& command, const RunConfig& cfg, const std::string& hash, double tol_scale) {
  json j;
  j["command"] = command;
  j["config"] = cfg.name;
  j["config_hash"] = hash;
  j["seed"] = cfg.seed;
  j["tolerance_scale"] = tol_scale;
  j["expect"] = cfg.expect;
  return j;
}

// ------------------------------------------------------------------ verify

struct Check {
  std::string group;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  std::string status;  // PASS, FAIL, INFO, SKIP
  std::string note;
};

class CheckTable {
 public:
  void add(std::string group, std::string name, double value, double tol, std::string note = {}) {
    const bool ok = std::isfinite(value) && value <= tol;
    rows_.push_back({std::move(group), std::move(name), value, tol, ok ? "PASS" : "FAIL", std::move(note)});
  }
  void info(std::string group, std::string name, double value, std::string note = {}) {
    rows_.push_back({std::move(group), std::move(name), value, 0.0, "INFO", std::move(note)});
  }
  void skip(std::string group, std::string name, std::string note) {
    rows_.push_back({std::move(group), std::move(name), 0.0, 0.0, "SKIP", std::move(note)});
  }
  void fail(std::string group, std::string name, std::string note) {
    rows_.push_back({std::move(group), std::move(name), std::nan(""), 0.0, "FAIL", std::move(note)});
  }
  bool pass() const {
    return std::none_of(rows_.begin(), rows_.end(), [](const Check& c) { return c.status == "FAIL"; });
  }
  const std::vector<Check>& rows() const { return rows_; }

 private:
  std::vector<Check> rows_;
};

double block_max(const Operator& a, int m) {
  const DenseMatrix b = a.block(m);
  return b.size() ? b.cwiseAbs().maxCoeff() : 0.0;
}

void verify_fock(const BasisPtr& basis, CheckTable& t, double tol) {
  const ModeGrid& g = *basis->grid();
  const int m = basis->n_max() - 1;
  const int d = basis->spin_dim();
  std::vector<Operator> a;
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<double> e(g.size(), 0.0);
    e[i] = 1.0 / std::sqrt(g.mu(i));
    a.push_back(annihilate(basis, FormFactor::separable(basis->grid(), e, spin::identity(d))));
  }
  double ccr = 0.0, cc = 0.0;
  Operator number = Operator::zero(basis);
  for (std::size_t i = 0; i < a.size(); ++i) {
    number = number + a[i].adjoint() * a[i];
    for (std::size_t j = 0; j < a.size(); ++j) {
      Operator c = a[i] * a[j].adjoint() - a[j].adjoint() * a[i];
      if (i == j) c = c - Operator::identity(basis);
      ccr = std::max(ccr, block_max(c, m));
      cc = std::max(cc, (a[i] * a[j] - a[j] * a[i]).max_abs());
    }
  }
  t.add("fock", "ccr", ccr, tol, "[a_i, a_j^dagger] - delta_ij below n_max");
  t.add("fock", "annihilators_commute", cc, tol);
  t.add("fock", "number_operator", (number - number_operator(basis)).max_abs(), tol);
}

void verify_ibc(const BasisPtr& basis, const renorm::HamiltonianSpec& spec, const RunConfig& cfg, double scale,
                CheckTable& t) {
  const CouplingDecomposition& c = spec.coupling;
  const int m = basis->n_max() - 2;
  const double tol = cfg.tol.identity * scale;
  const std::vector<std::pair<std::string, FormFactor>> parts = {
      {"V", c.total()}, {"V_N", c.v_n}, {"V_D", c.v_d}, {"V_le", c.v_le}};
  for (double lambda : {0.5, 1.0, 5.0}) {
    double dev = 0.0;
    for (const auto& [label, f] : parts) {
      if (f.is_zero()) continue;
      const Operator res = function_of_energy(basis, [lambda](double e) { return 1.0 / (e + lambda); });
      const Operator rhs = annihilate(basis, f) * res * create(basis, f) -
                           spin_operator(basis, weighted_inner(f, f, 1.0));
      dev = std::max(dev, block_max(ibc::boundary_operator(basis, f, lambda) - rhs, m));
    }
    std::ostringstream name;
    name << "normal_ordering_lambda_" << lambda;
    t.add("ibc", name.str(), dev, tol);
  }
  if (c.v_n.is_zero()) {
    t.skip("ibc", "ibc_identity", "no nilpotent part");
    t.skip("ibc", "nilpotent_inverse", "no nilpotent part");
  } else {
    for (double lambda : {0.5, 1.0, 2.0, 5.0}) {
      const Operator lhs = ibc::ibc_hamiltonian(basis, c.v_n, c.v_n, lambda) -
                           spin_operator(basis, weighted_inner(c.v_n, c.v_n, 1.0)) -
                           Operator::identity(basis) * cplx(lambda);
      const Operator rhs = renorm::h_reg(basis, spin::zero(basis->spin_dim()), c.v_n);
      std::ostringstream name;
      name << "ibc_identity_lambda_" << lambda;
      t.add("ibc", name.str(), block_max(lhs - rhs, m), tol);
    }
    const Operator g = ibc::resolvent_annihilator(basis, c.v_n, spec.lambda);
    const Operator id = Operator::identity(basis);
    t.add("ibc", "nilpotent_inverse", ((id + g) * (id - g) - id).max_abs(), cfg.tol.inversion * scale);
    t.add("ibc", "resolvent_annihilator_square_nnz", static_cast<double>((g * g).sparse().nonZeros()), 0.0,
          "structural zeros of G^2");
  }
  const ibc::InversionGate gate = ibc::inversion_gate(c.v_n, spec.lambda, c.s_n);
  t.info("ibc", "inversion_route_" + gate.route, gate.neumann_bound);

  const FormFactor f = c.v_n.is_zero() ? c.ultraviolet() : c.v_n;
  const ibc::BoundReport br =
      ibc::verify_bounds(basis, f, c.total(), spec.lambda, c.s_n, {cfg.verify.samples, cfg.seed});
  for (const auto& b : br.checks) {
    if (b.informational) {
      t.info("bounds", b.name, b.max_ratio, "max LHS/RHS, not part of the verdict");
    } else {
      t.add("bounds", b.name, b.max_ratio, 1.0 + cfg.tol.bound_slack * scale, "max LHS/RHS");
    }
  }
}

void verify_dressing(const BasisPtr& basis, const renorm::HamiltonianSpec& spec, const RunConfig& cfg, double scale,
                     CheckTable& t) {
  const CouplingDecomposition& c = spec.coupling;
  const double tol = cfg.tol.weyl * scale;
  // Weyl field: the dressing field omega^{-1} V_D, or a scalar one when V_D = 0.
  FormFactor f = c.v_d.omega_power(-1.0);
  std::string label = "omega^-1 V_D";
  if (c.v_d.is_zero()) {
    std::vector<double> prof(basis->grid()->size(), 0.0);
    for (std::size_t i = 0; i < prof.size(); ++i)
      if (!basis->grid()->infrared(i)) prof[i] = 1.0 / basis->grid()->omega(i);
    f = FormFactor::separable(basis->grid(), prof, spin::identity(basis->spin_dim()));
    label = "scalar omega^-1";
  }
  const double n0 = weighted_norm(f, 0.0);
  if (n0 > 0.5) f = f * cplx(0.5 / n0);
  try {
    const dressing::TransformReport tr = dressing::verify_transforms(basis, f, c.total(), -1, tol);
    if (tr.skipped) {
      t.skip("dressing", "transform_field", tr.reason);
      t.skip("dressing", "transform_energy", tr.reason);
    } else {
      t.info("dressing", "transform_block", tr.block, "largest safe boson number");
      t.info("dressing", "transform_leak", tr.leak, "top-sector leakage on that block");
      t.add("dressing", "transform_field", tr.field_deviation, tol, label);
      t.add("dressing", "transform_energy", tr.energy_deviation, tol, label);
    }
  } catch (const ParameterError& e) {
    t.fail("dressing", "transform_field", e.what());
  }
  const double lim = 1.0 + cfg.tol.bound_slack * scale;
  try {
    const dressing::ContinuityReport cr =
        dressing::verify_continuity(basis, f, f * cplx(0.5), cfg.verify.samples, cfg.seed);
    if (cr.skipped) {
      t.skip("bounds", "weyl_continuity", cr.reason);
    } else {
      t.add("bounds", "weyl_continuity_vector", cr.vector_ratio, lim, "max LHS/RHS");
      t.info("bounds", "weyl_continuity_vector_real_form", cr.vector_ratio_literal,
             "same with phi(F-G) in place of phi(i(F-G))");
      t.add("bounds", "weyl_continuity_theta0", cr.theta0_ratio, lim, "max LHS/RHS");
      t.add("bounds", "weyl_continuity_theta1", cr.theta1_ratio, lim, "max LHS/RHS");
    }
  } catch (const ParameterError& e) {
    t.fail("bounds", "weyl_continuity", e.what());
  }

  // Coherent-state oracles on one scalar mode.
  auto grid = std::make_shared<const ModeGrid>(std::vector<Mode>{{1.0, 1.0, 1.0}}, 0.5);
  const BasisPtr one = OccupationBasis::build(grid, SpinSpace(1), 16);
  const double amp = 0.8;
  const Operator w = dressing::weyl_operator(one, FormFactor::separable(grid, std::vector<double>{amp}, spin::identity(1)));
  const DenseMatrix wd = w.dense();
  const Vector omega_w = wd.col(0);
  double parity = 0.0;
  for (Eigen::Index k = 0; k < omega_w.size(); ++k)
    parity += (one->total_of_state(static_cast<std::size_t>(k)) % 2 ? -1.0 : 1.0) * std::norm(omega_w(k));
  const double tol_o = cfg.tol.oracle * scale;
  t.add("dressing", "coherent_vacuum", std::abs(wd(0, 0) - std::exp(-0.5 * amp * amp)), tol_o);
  t.add("dressing", "coherent_parity", std::abs(parity - std::exp(-2.0 * amp * amp)), tol_o);
}

void verify_renorm(const BasisPtr& basis, const renorm::HamiltonianSpec& spec, const RunConfig& cfg, double scale,
                   CheckTable& t) {
  const double tol = cfg.tol.weyl * scale;
  const Operator hreg = renorm::h_reg(basis, spec.s, spec.coupling.total());
  t.add("renorm", "h_reg_hermiticity", hreg.hermiticity_defect(), 1e-12 * scale);
  try {
    const Operator h = renorm::h_renormalized(basis, spec);
    t.add("renorm", "h_renormalized_hermiticity", h.hermiticity_defect() / std::max(1.0, h.max_abs()), 1e-12 * scale,
          "relative to max |entry|");
    t.add("renorm", "renormalized_identity", renorm::renormalized_identity_deviation(basis, spec), tol);
    t.add("renorm", "lambda_independence", renorm::lambda_spread(basis, spec, {0.5, 1.0, 2.0}), tol);
  } catch (const ParameterError& e) {
    t.fail("renorm", "renormalized_identity", e.what());
  }
}

int cmd_verify(const RunConfig& cfg, const CliOptions& opts, const std::string& hash, std::ostream& log) {
  const Problem p = build_problem(cfg, true);
  const BasisPtr basis = OccupationBasis::build(p.grid, SpinSpace(cfg.spin_dim), cfg.verify.n_max);
  log << "verify: " << cfg.name << ", " << basis->size() << " states (" << p.grid->size() << " modes, n_max "
      << cfg.verify.n_max << ")\n";
  const double scale = opts.tolerance_scale;
  CheckTable t;

  const StructureReport sr = check_structure(p.spec.coupling);
  for (const auto& c : sr.checks) t.add("structure", c.name, c.violation, kStructureTolerance);
  if (sr.admissible) {
    t.info("structure", "admissible", sr.v_n_b2_norm, sr.admissibility_route);
  } else {
    t.fail("structure", "admissible", sr.admissibility_route);
  }

  verify_fock(basis, t, cfg.tol.identity * scale);
  verify_ibc(basis, p.spec, cfg, scale, t);
  verify_dressing(basis, p.spec, cfg, scale, t);
  verify_renorm(basis, p.spec, cfg, scale, t);

  const renorm::AppendixReport ar = renorm::verify_transformed_operator_identities(64, cfg.seed);
  t.add("appendix", "adjoint_transform", ar.adjoint_deviation, cfg.tol.appendix * scale);
  t.add("appendix", "resolvent_identity", ar.resolvent_deviation, cfg.tol.appendix * scale);
  t.info("appendix", "resolvent_identity_literal", ar.resolvent_literal_deviation,
         "second term with (T A^* (A T A^* + i)^{-1})^*");

  std::ostringstream csv;
  csv << "group,check,value,tolerance,verdict,config_hash\n";
  json j = header("verify", cfg, hash, scale);
  j["states"] = basis->size();
  j["verdict"] = verdict(t.pass());
  json rows = json::array();
  for (const auto& r : t.rows()) {
    csv << r.group << ',' << r.name << ',' << fmt(r.value) << ',' << fmt(r.tolerance) << ',' << r.status << ','
        << hash << '\n';
    rows.push_back({{"group", r.group},
                    {"check", r.name},
                    {"value", num(r.value)},
                    {"tolerance", r.tolerance},
                    {"verdict", r.status},
                    {"note", r.note}});
    if (r.status == "FAIL") log << "  FAIL " << r.group << '.' << r.name << " = " << fmt(r.value) << ' ' << r.note << '\n';
  }
  j["checks"] = rows;
  write_file(fs::path(opts.out) / "verify.csv", csv.str());
  write_file(fs::path(opts.out) / "verify.json", j.dump(2) + "\n");
  log << "verify: " << t.rows().size() << " checks, verdict " << verdict(t.pass()) << '\n';
  return t.pass() ? kExitPass : kExitFail;
}

// ------------------------------------------------------------------ converge / spectrum

int cmd_study(const RunConfig& cfg, const CliOptions& opts, const std::string& hash, std::ostream& log,
              bool distances) {
  const Problem p = build_problem(cfg, false);
  const BasisPtr basis = OccupationBasis::build(p.grid, SpinSpace(cfg.spin_dim), cfg.n_max);
  const std::string command = distances ? "converge" : "spectrum";
  log << command << ": " << cfg.name << ", " << basis->size() << " states\n";
  renorm::ConvergenceOptions co;
  co.distances = distances;
  co.jobs = opts.jobs;
  co.norm.seed = cfg.seed;
  const renorm::ConvergenceReport rep = renorm::convergence_study(basis, p.spec, cfg.schedule, co);

  std::ostringstream csv;
  json j = header(command, cfg, hash, opts.tolerance_scale);
  j["states"] = basis->size();
  j["limit_ground_energy"] = num(rep.limit_ground_energy);
  json rows = json::array();
  if (distances) {
    csv << "Lambda,E_trace,resolvent_distance,ground_energy_reg,ground_energy_renorm,verdict,config_hash\n";
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
      const auto& r = rep.rows[k];
      const bool row_ok = k == 0 || r.resolvent_distance <= (1.0 + co.jitter) * rep.rows[k - 1].resolvent_distance;
      csv << fmt(r.cutoff) << ',' << fmt(r.e_trace) << ',' << fmt(r.resolvent_distance) << ','
          << fmt(r.ground_energy_reg) << ',' << fmt(r.ground_energy_renorm) << ',' << verdict(row_ok) << ',' << hash
          << '\n';
      rows.push_back({{"Lambda", r.cutoff},
                      {"E_trace", num(r.e_trace)},
                      {"resolvent_distance", num(r.resolvent_distance)},
                      {"distance_error", num(r.distance_error)},
                      {"ground_energy_reg", num(r.ground_energy_reg)},
                      {"ground_energy_renorm", num(r.ground_energy_renorm)},
                      {"verdict", verdict(row_ok)}});
    }
    j["nonincreasing"] = rep.nonincreasing;
    j["decay_ratio"] = num(rep.decay_ratio);
    j["verdict"] = verdict(rep.pass);
  } else {
    csv << "Lambda,E_trace,ground_energy_reg,ground_energy_renorm,config_hash\n";
    for (const auto& r : rep.rows) {
      csv << fmt(r.cutoff) << ',' << fmt(r.e_trace) << ',' << fmt(r.ground_energy_reg) << ','
          << fmt(r.ground_energy_renorm) << ',' << hash << '\n';
      rows.push_back({{"Lambda", r.cutoff},
                      {"E_trace", num(r.e_trace)},
                      {"ground_energy_reg", num(r.ground_energy_reg)},
                      {"ground_energy_renorm", num(r.ground_energy_renorm)}});
    }
    j["verdict"] = "PASS";
  }
  j["rows"] = rows;
  write_file(fs::path(opts.out) / (command + ".csv"), csv.str());
  write_file(fs::path(opts.out) / (command + ".json"), j.dump(2) + "\n");
  const bool pass = !distances || rep.pass;
  log << command << ": verdict " << verdict(pass);
  if (distances) log << " (D_last/D_first = " << fmt(rep.decay_ratio) << ")";
  log << '\n';
  if (pass) return kExitPass;
  if (cfg.expect == "fail") {
    log << command << ": failure expected by run.expect\n";
    return kExitExpectedFail;
  }
  return kExitFail;
}

// ------------------------------------------------------------------ vanhove

int cmd_vanhove(const RunConfig& cfg, const CliOptions& opts, const std::string& hash, std::ostream& log) {
  const Problem p = build_problem(cfg, false);
  if (p.spec.coupling.v_d.is_zero()) throw StructuralError("vanhove needs a normal coupling (spin.B_D)");
  renorm::VanHoveOptions vo;
  vo.jobs = opts.jobs;
  vo.conjugation_tolerance *= opts.tolerance_scale;
  const Vector psi = renorm::dominant_eigenvector(cfg.b_d);
  const renorm::VanHoveReport rep = renorm::vanhove_demo(p.spec.coupling.v_d, psi, cfg.schedule, vo);

  std::ostringstream csv;
  csv << "Lambda,b0_norm_sq,shift,conjugation_distance,parity,parity_closed_form,ground_energy,ground_closed_form,"
         "config_hash\n";
  json j = header("vanhove", cfg, hash, opts.tolerance_scale);
  j["eigenvalue"] = {rep.eigenvalue.real(), rep.eigenvalue.imag()};
  json rows = json::array();
  for (const auto& r : rep.rows) {
    csv << fmt(r.cutoff) << ',' << fmt(r.b0_norm_sq) << ',' << fmt(r.shift) << ',' << fmt(r.conjugation_distance) << ','
        << fmt(r.parity) << ',' << fmt(r.parity_closed_form) << ',' << fmt(r.ground_energy) << ','
        << fmt(r.ground_closed_form) << ',' << hash << '\n';
    rows.push_back({{"Lambda", r.cutoff},
                    {"b0_norm_sq", num(r.b0_norm_sq)},
                    {"shift", num(r.shift)},
                    {"conjugation_distance", num(r.conjugation_distance)},
                    {"parity", num(r.parity)},
                    {"parity_closed_form", num(r.parity_closed_form)},
                    {"ground_energy", num(r.ground_energy)},
                    {"ground_closed_form", num(r.ground_closed_form)},
                    {"levels", r.max_levels}});
  }
  j["rows"] = rows;
  j["conjugation"] = verdict(rep.conjugation_ok);
  j["parity_decay"] = verdict(rep.parity_ok);
  j["parity_ratio"] = num(rep.parity_ratio);
  j["energy_divergence"] = verdict(rep.divergence_ok);
  j["energy_drop"] = num(rep.energy_drop);
  j["verdict"] = verdict(rep.pass());
  write_file(fs::path(opts.out) / "vanhove.csv", csv.str());
  write_file(fs::path(opts.out) / "vanhove.json", j.dump(2) + "\n");
  log << "vanhove: conjugation " << verdict(rep.conjugation_ok) << ", parity decay " << verdict(rep.parity_ok)
      << " (ratio " << fmt(rep.parity_ratio) << "), energy divergence " << verdict(rep.divergence_ok) << " (drop "
      << fmt(rep.energy_drop) << ")\n";
  return rep.pass() ? kExitPass : kExitFail;
}

// ------------------------------------------------------------------ report

int cmd_report(const CliOptions& opts, std::ostream& log) {
  const fs::path dir(opts.out);
  std::ostringstream out;
  bool any = false, all_pass = true;
  for (const char* name : {"verify", "converge", "spectrum", "vanhove"}) {
    const fs::path file = dir / (std::string(name) + ".json");
    if (!fs::exists(file)) continue;
    std::ifstream in(file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      log << "report: " << file.string() << ": " << e.what() << '\n';
      return kExitUsage;
    }
    any = true;
    const std::string v = j.value("verdict", "FAIL");
    all_pass = all_pass && v == "PASS";
    out << "== " << name << " [" << j.value("config", "?") << ", hash " << j.value("config_hash", "?") << "]: " << v;
    if (v == "FAIL" && j.value("expect", "pass") == "fail") out << " (expected)";
    out << '\n';
    if (std::string(name) == "verify") {
      for (const auto& r : j["checks"]) {
        if (r["verdict"] == "PASS") continue;
        out << "  " << r["verdict"].get<std::string>() << ' ' << r["group"].get<std::string>() << '.'
            << r["check"].get<std::string>();
        if (!r["value"].is_null()) out << " = " << fmt(r["value"].get<double>());
        if (!r["note"].get<std::string>().empty()) out << "  (" << r["note"].get<std::string>() << ')';
        out << '\n';
      }
      std::size_t pass = 0;
      for (const auto& r : j["checks"]) pass += r["verdict"] == "PASS";
      out << "  " << pass << " of " << j["checks"].size() << " checks passed\n";
    } else {
      for (const auto& r : j["rows"]) {
        out << "  Lambda " << fmt(r["Lambda"].get<double>());
        for (auto it = r.begin(); it != r.end(); ++it) {
          if (it.key() == "Lambda" || it.key() == "verdict" || !it.value().is_number()) continue;
          out << "  " << it.key() << ' ' << fmt(it.value().get<double>());
        }
        out << '\n';
      }
    }
  }
  if (!any) {
    log << "report: no verify/converge/spectrum/vanhove results in " << dir.string() << '\n';
    return kExitUsage;
  }
  write_file(dir / "report.txt", out.str());
  std::cout << out.str();
  return all_pass ? kExitPass : kExitFail;
}

}  // namespace

int run_command(const CliOptions& opts, std::ostream& log) {
  static const std::vector<std::string> commands = {"verify", "converge", "vanhove", "spectrum", "report"};
  if (std::find(commands.begin(), commands.end(), opts.command) == commands.end()) {
    log << "unknown command '" << opts.command << "'\n";
    return kExitUsage;
  }
  if (opts.jobs < 1) {
    log << "--jobs must be positive\n";
    return kExitUsage;
  }
  if (!(opts.tolerance_scale > 0.0)) {
    log << "--tolerance-scale must be positive\n";
    return kExitUsage;
  }
  try {
    if (opts.command == "report") {
      if (!fs::is_directory(opts.out)) {
        log << "report: output directory " << opts.out << " does not exist\n";
        return kExitUsage;
      }
      return cmd_report(opts, log);
    }
    if (opts.config.empty()) {
      log << opts.command << ": --config is required\n";
      return kExitUsage;
    }
    RunConfig cfg = parse_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    const std::string hash = config_hash(cfg, opts.tolerance_scale);
    fs::create_directories(opts.out);
    if (opts.command == "verify") return cmd_verify(cfg, opts, hash, log);
    if (opts.command == "converge") return cmd_study(cfg, opts, hash, log, true);
    if (opts.command == "spectrum") return cmd_study(cfg, opts, hash, log, false);
    return cmd_vanhove(cfg, opts, hash, log);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StructuralError& e) {
    log << "structural error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    log << "parameter error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    log << "numeric error: " << e.what() << " (best estimate " << fmt(e.best_estimate()) << ")\n";
    return kExitNumeric;
  } catch (const ResourceError& e) {
    log << "resource error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    log << "filesystem error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace sbren::cli
