#include "qvnn/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "qvnn/dde.hpp"
#include "qvnn/errors.hpp"
#include "qvnn/oracles.hpp"

namespace qvnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest

json to_json(const RunManifest& m) {
  return {{"command", m.command},         {"config_path", m.config_path},
          {"seed", m.seed},               {"config_hash", m.config_hash},
          {"tool_version", m.tool_version}, {"started_at", m.started_at},
          {"finished_at", m.finished_at}, {"outputs", m.outputs}};
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_path = j.at("config_path").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed manifest: ") + e.what());
  }
}

bool verify_manifest(const std::string& manifest_path, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::ifstream in(manifest_path);
  if (!in) return fail("cannot open manifest");
  RunManifest m;
  try {
    m = manifest_from_json(json::parse(in));
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  if (!m.config_path.empty()) {
    try {
      if (config_hash(load_model_config(m.config_path)) != m.config_hash) {
        return fail("config hash mismatch");
      }
    } catch (const std::exception& e) {
      return fail(std::string("config unreadable: ") + e.what());
    }
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  for (const auto& o : m.outputs) {
    fs::path p(o);
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) return fail("missing output " + o);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Certification

CertifyOutcome certify_model(const NetworkModel& model, const CertifyOptions& opts) {
  CertifyOutcome o;
  auto start = std::chrono::steady_clock::now();
  const StandardSdp sdp = build_criterion_sdp(model);
  const auto [scaled, record] = scale_problem(sdp);
  o.num_vars = sdp.num_vars;
  o.num_lmis = static_cast<int>(sdp.lmis.size());
  o.assemble_seconds = seconds_since(start);

  SolverConfig cfg = opts.solver;
  cfg.margin_tolerance = opts.margin_tolerance;
  start = std::chrono::steady_clock::now();
  o.solve = solve_feasibility(scaled, cfg);
  o.solve_seconds = seconds_since(start);

  if (o.solve.status == FeasibilityStatus::numerical_failure) {
    o.exit_code = kExitNumericalFailure;
    return o;
  }
  start = std::chrono::steady_clock::now();
  RealVector x = record.unscale(o.solve.x);
  const double top = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  if (top > 0.0 && std::isfinite(top)) x /= top;
  o.vars = devectorize(x, model.n);
  o.report = verify_certificate(model, *o.vars, opts.margin_tolerance);
  o.verify_seconds = seconds_since(start);

  const bool solver_ok = o.solve.status == FeasibilityStatus::feasible;
  o.exit_code = solver_ok && o.report->valid ? kExitCertified : kExitNotCertified;
  return o;
}

json certify_report_json(const CertifyOutcome& o) {
  json checks = json::array();
  if (o.report) {
    for (const auto& c : o.report->checks) {
      checks.push_back({{"name", c.name},
                        {"sense", to_string(c.sense)},
                        {"min_eigenvalue", c.min_eigenvalue},
                        {"max_eigenvalue", c.max_eigenvalue},
                        {"slack", c.slack}});
    }
  }
  json j = {{"certified", o.exit_code == kExitCertified},
            {"exit_code", o.exit_code},
            {"solver_status", to_string(o.solve.status)},
            {"solver_margin", o.solve.margin},
            {"per_constraint_min_eig", o.solve.per_constraint_min_eig},
            {"outer_iterations", o.solve.outer_iterations},
            {"newton_iterations", o.solve.newton_iterations},
            {"attempts", o.solve.attempts},
            {"num_vars", o.num_vars},
            {"num_lmis", o.num_lmis},
            {"constraints", checks},
            {"timings",
             {{"assemble_s", o.assemble_seconds},
              {"solve_s", o.solve_seconds},
              {"verify_s", o.verify_seconds}}}};
  if (o.report) {
    j["verified_margin"] = o.report->worst_slack;
    j["certificate_valid"] = o.report->valid;
  }
  if (!o.solve.diagnostic.empty()) j["diagnostic"] = o.solve.diagnostic;
  return j;
}

namespace {

void print_certify_text(std::ostream& out, const NetworkModel& model, const CertifyOutcome& o) {
  out << "model: n=" << model.n << ", scalar variables=" << o.num_vars << ", LMIs=" << o.num_lmis
      << '\n';
  out << "solver: " << to_string(o.solve.status) << ", margin " << std::scientific
      << std::setprecision(4) << o.solve.margin << std::defaultfloat << ", "
      << o.solve.outer_iterations << " outer / " << o.solve.newton_iterations
      << " Newton iterations, " << std::fixed << std::setprecision(2) << o.solve_seconds
      << " s\n" << std::defaultfloat;
  if (!o.solve.diagnostic.empty()) out << "diagnostic: " << o.solve.diagnostic << '\n';
  if (o.report) {
    out << std::left << std::setw(18) << "constraint" << std::right << std::setw(14) << "min eig"
        << std::setw(14) << "max eig" << std::setw(14) << "slack" << '\n';
    out << std::scientific << std::setprecision(4);
    for (const auto& c : o.report->checks) {
      out << std::left << std::setw(18) << c.name << std::right << std::setw(14)
          << c.min_eigenvalue << std::setw(14) << c.max_eigenvalue << std::setw(14) << c.slack
          << '\n';
    }
    out << std::defaultfloat;
    out << "quaternion-level check (certificate normalized to max |entry| = 1): "
        << (o.report->valid ? "VALID" : "INVALID") << ", worst slack " << o.report->worst_slack
        << '\n';
  }
  out << (o.exit_code == kExitCertified ? "CERTIFIED" : "NOT CERTIFIED") << '\n';
}

// ---------------------------------------------------------------------------
// Subcommands

struct CertifyArgs {
  std::string config;
  double margin_tol = 1e-6;
  bool json_out = false;
  std::string out_dir = "qvnn_out";
  std::uint64_t seed = 1;
  std::string diagnostics;
};

int cmd_certify(const CertifyArgs& a, std::ostream& out) {
  RunManifest manifest{"certify", a.config, a.seed, "", kToolVersion, utc_now(), "", {}};
  const ModelConfig cfg = load_model_config(a.config);
  manifest.config_hash = config_hash(cfg);
  if (!(a.margin_tol > 0.0)) throw InputError("--margin-tol must be positive");

  CertifyOptions opts;
  opts.margin_tolerance = a.margin_tol;
  opts.solver.seed = a.seed;
  std::ofstream diag;
  if (!a.diagnostics.empty()) {
    diag.open(a.diagnostics);
    if (!diag) throw InputError("cannot write " + a.diagnostics);
    diag << "iteration,barrier_weight,t,min_eig\n";
    opts.solver.diagnostics = &diag;
  }
  const CertifyOutcome o = certify_model(cfg.model, opts);

  json report = certify_report_json(o);
  report["config_hash"] = manifest.config_hash;
  const fs::path dir = prepare_dir(a.out_dir);
  if (o.exit_code == kExitCertified) {
    json cert = certificate_to_json(*o.vars);
    cert["report"] = report;
    write_json_file(dir / "certificate.json", cert);
    manifest.outputs.push_back("certificate.json");
    report["certificate_path"] = (dir / "certificate.json").string();
  }
  write_json_file(dir / "report.json", report);
  manifest.outputs.push_back("report.json");
  manifest.finished_at = utc_now();
  write_json_file(dir / "manifest.json", to_json(manifest));

  if (a.json_out) {
    out << report.dump() << '\n';
  } else {
    print_certify_text(out, cfg.model, o);
    if (report.contains("certificate_path")) {
      out << "certificate: " << report["certificate_path"].get<std::string>() << '\n';
    }
  }
  return o.exit_code;
}

struct SimulateArgs {
  std::string config;
  SimulationOptions sim;
  std::string lkf_cert;
  double lkf_every = 0.05;
  int stride = 1;
  bool derivatives = false;
  std::string out_dir = "qvnn_out";
};

void write_trajectory_csv(const fs::path& path, const Trajectory& traj, int stride,
                          bool derivatives) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << "time";
  const char* parts[] = {"w", "x", "y", "z"};
  for (int i = 1; i <= traj.n; ++i) {
    for (const char* p : parts) f << ",x" << i << '_' << p;
  }
  if (derivatives) {
    for (int i = 1; i <= traj.n; ++i) {
      for (const char* p : parts) f << ",dx" << i << '_' << p;
    }
  }
  f << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); k += static_cast<std::size_t>(stride)) {
    f << traj.time(k);
    const RealVector& x = traj.samples.state(k);
    for (Eigen::Index c = 0; c < x.size(); ++c) f << ',' << x(c);
    if (derivatives) {
      const RealVector& dx = traj.samples.state_derivative(k);
      for (Eigen::Index c = 0; c < dx.size(); ++c) f << ',' << dx(c);
    }
    f << '\n';
  }
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const SimulationOptions& s = a.sim;
  if (s.runs < 1) throw InputError("--seeds must be at least 1");
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon)) throw InputError("--horizon must be positive");
  if (!(s.step > 0.0) || !std::isfinite(s.step)) throw InputError("--step must be positive");
  if (!(s.threshold > 0.0)) throw InputError("--threshold must be positive");
  if (a.stride < 1) throw InputError("--stride must be at least 1");
  if (!(a.lkf_every > 0.0)) throw InputError("--lkf-every must be positive");

  RunManifest manifest{"simulate", a.config, s.seed, "", kToolVersion, utc_now(), "", {}};
  const ModelConfig cfg = load_model_config(a.config);
  manifest.config_hash = config_hash(cfg);
  std::optional<DecisionVars> cert;
  if (!a.lkf_cert.empty()) {
    std::ifstream in(a.lkf_cert);
    if (!in) throw InputError("cannot open certificate " + a.lkf_cert);
    try {
      cert = certificate_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw InputError(std::string("malformed certificate: ") + e.what());
    }
    if (cert->n() != cfg.model.n) throw InputError("certificate size does not match the model");
  }
  const fs::path dir = prepare_dir(a.out_dir);
  // Fail early on a model without an equilibrium.
  equilibrium_shift(cfg.model);

  std::vector<RunSummary> summaries(s.runs);
  std::optional<Trajectory> first;
  std::mutex first_mutex;
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int k = next++; k < s.runs; k = next++) {
      RunSummary& r = summaries[k];
      r.run = k;
      r.seed = s.seed + static_cast<std::uint64_t>(k);
      r.initial_state = s.zero_history ? RealVector(RealVector::Zero(4 * cfg.model.n))
                                       : random_initial_state(cfg.model.n, r.seed);
      try {
        Trajectory traj = integrate(cfg.model, cfg.delays, InitialHistory::constant(r.initial_state),
                                    s.horizon, s.step);
        const ConvergenceMetrics m = convergence_metrics(traj, s.threshold);
        r.time_to_threshold = m.time_to_threshold;
        r.tail_sup_norm = m.tail_sup_norm;
        r.monotone_envelope = m.monotone_envelope;
        r.final_sup_norm = traj.sup_norm(traj.size() - 1);
        write_trajectory_csv(dir / ("run_" + std::to_string(k) + ".csv"), traj, a.stride,
                             a.derivatives);
        if (k == 0) {
          std::lock_guard<std::mutex> lock(first_mutex);
          first.emplace(std::move(traj));
        }
      } catch (const DivergenceError& e) {
        r.diverged = true;
        r.diverged_at = e.time();
        r.error = e.what();
      }
    }
  };
  const int threads = std::min(simulation_threads(s.threads), s.runs);
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream summary(dir / "summary.csv");
  summary << "run,seed,status,time_to_threshold,tail_sup_norm,final_sup_norm,monotone_envelope\n"
          << std::setprecision(10);
  bool all_converged = true;
  out << "run  seed  status         time_to_threshold  tail_sup_norm\n";
  for (const auto& r : summaries) {
    const bool converged = !r.diverged && r.time_to_threshold.has_value();
    all_converged = all_converged && converged;
    const std::string status = r.diverged ? "diverged" : (converged ? "converged" : "not_converged");
    summary << r.run << ',' << r.seed << ',' << status << ',';
    if (r.time_to_threshold) summary << *r.time_to_threshold;
    summary << ',' << r.tail_sup_norm << ',' << r.final_sup_norm << ','
            << (r.monotone_envelope ? "true" : "false") << '\n';
    out << std::setw(3) << r.run << std::setw(6) << r.seed << "  " << std::left << std::setw(14)
        << status << std::right << std::setw(18);
    if (r.time_to_threshold) {
      out << *r.time_to_threshold;
    } else {
      out << "-";
    }
    out << std::setw(15) << std::scientific << std::setprecision(3) << r.tail_sup_norm
        << std::defaultfloat << std::setprecision(6);
    if (r.diverged) out << "  (" << r.error << ")";
    out << '\n';
    manifest.outputs.push_back("run_" + std::to_string(r.run) + ".csv");
  }
  // Diverged runs have no trajectory file.
  std::erase_if(manifest.outputs, [&](const std::string& name) {
    return !fs::exists(dir / name);
  });
  manifest.outputs.push_back("summary.csv");
  summary.close();

  bool lkf_ok = true;
  if (cert) {
    if (!first) {
      out << "lkf: run 0 diverged, functional not evaluated\n";
      lkf_ok = false;
    } else {
      std::ofstream lkf(dir / "lkf.csv");
      lkf << "time,v1,v2,v3,v4,v_total\n" << std::setprecision(17);
      const auto every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(a.lkf_every / s.step)));
      double v0 = 0.0;
      double prev = 0.0;
      double worst_rise = 0.0;
      for (std::size_t k = 0; k < first->size(); k += every) {
        const LyapunovSample v = evaluate_lkf(*first, cfg.model, cfg.delays, *cert, first->time(k));
        lkf << v.t << ',' << v.v1 << ',' << v.v2 << ',' << v.v3 << ',' << v.v4 << ',' << v.total
            << '\n';
        if (k == 0) {
          v0 = v.total;
        } else {
          worst_rise = std::max(worst_rise, v.total - prev);
        }
        prev = v.total;
      }
      lkf_ok = worst_rise <= 1e-6 * v0;
      out << "lkf: V(0) = " << v0 << ", largest increase between samples " << worst_rise << " ("
          << (lkf_ok ? "nonincreasing" : "INCREASING") << " at tolerance 1e-6 V(0))\n";
      manifest.outputs.push_back("lkf.csv");
    }
  }
  manifest.finished_at = utc_now();
  write_json_file(dir / "manifest.json", to_json(manifest));
  out << (all_converged ? "all runs reached " : "not all runs reached ") << "|x|_inf < "
      << s.threshold << " within " << s.horizon << " s\n";
  return all_converged && lkf_ok ? kExitCertified : kExitNotCertified;
}

struct MarginArgs {
  std::string config;
  std::string param;
  std::string bracket;
  double tol = 0.01;
  double margin_tol = 1e-6;
  bool json_out = false;
};

double& model_parameter(NetworkModel& m, const std::string& name) {
  if (name == "delta") return m.delta;
  if (name == "d1") return m.d1;
  if (name == "d2") return m.d2;
  throw InputError("--param must be one of delta, d1, d2");
}

int cmd_margin(const MarginArgs& a, std::ostream& out, std::ostream& err) {
  const ModelConfig cfg = load_model_config(a.config);
  NetworkModel model = cfg.model;
  model_parameter(model, a.param);
  double feasible_end = 0.0;
  double infeasible_end = 0.0;
  {
    std::istringstream in(a.bracket);
    char comma = 0;
    if (!(in >> feasible_end >> comma >> infeasible_end) || comma != ',' || !in.eof()) {
      throw InputError("--bracket must read lo,hi");
    }
  }
  if (!(a.tol > 0.0)) throw InputError("--tol must be positive");
  if (feasible_end < 0.0 || infeasible_end < 0.0 || feasible_end == infeasible_end) {
    throw InputError("bracket endpoints must be distinct and non-negative");
  }

  CertifyOptions opts;
  opts.margin_tolerance = a.margin_tol;
  json probes = json::array();
  auto probe = [&](double value, const char* role) {
    model_parameter(model, a.param) = value;
    const CertifyOutcome o = certify_model(model, opts);
    if (o.exit_code == kExitNumericalFailure) {
      throw NumericalError("solver failed at " + a.param + " = " + std::to_string(value));
    }
    const bool ok = o.exit_code == kExitCertified;
    const double verified = o.report ? o.report->worst_slack : o.solve.margin;
    probes.push_back({{"role", role}, {"value", value}, {"certified", ok}, {"margin", verified}});
    if (!a.json_out) {
      out << std::setw(10) << role << "  " << a.param << " = " << std::setprecision(8) << value
          << "  " << (ok ? "certified" : "not certified") << "  margin " << std::scientific
          << std::setprecision(3) << verified << std::defaultfloat << '\n';
    }
    return ok;
  };

  if (!a.json_out) {
    out << "sweeping " << a.param << " over [" << feasible_end << ", " << infeasible_end
        << "], tolerance " << a.tol << '\n';
  }
  const bool lo_ok = probe(feasible_end, "endpoint");
  const bool hi_ok = probe(infeasible_end, "endpoint");
  if (!lo_ok || hi_ok) {
    err << "bracket error: expected the first endpoint certified and the second not ("
        << (lo_ok ? "certified" : "not certified") << ", " << (hi_ok ? "certified" : "not certified")
        << ")\n";
    return kExitInputError;
  }
  int bisections = 0;
  while (std::abs(infeasible_end - feasible_end) > a.tol) {
    const double mid = 0.5 * (feasible_end + infeasible_end);
    ++bisections;
    if (probe(mid, "bisect")) {
      feasible_end = mid;
    } else {
      infeasible_end = mid;
    }
  }
  const char* caveat =
      "feasibility is assumed monotone along the sweep; each probe's verdict stands on its own";
  if (a.json_out) {
    out << json{{"param", a.param},
                {"certified_value", feasible_end},
                {"uncertified_value", infeasible_end},
                {"bisection_probes", bisections},
                {"probes", probes},
                {"caveat", caveat}}
               .dump()
        << '\n';
  } else {
    out << "margin: " << a.param << " certified up to " << std::setprecision(8) << feasible_end
        << " (first uncertified probe " << infeasible_end << "), " << bisections
        << " bisection probes\n"
        << "note: " << caveat << '\n';
  }
  return kExitCertified;
}

struct OracleArgs {
  int count = 100;
  std::uint64_t seed = 1;
  bool json_out = false;
};

int cmd_oracles(const OracleArgs& a, std::ostream& out) {
  if (a.count < 0) throw InputError("--count must be non-negative");
  const OracleReport r = run_oracle_batch(a.count, a.seed);
  if (a.json_out) {
    out << json{{"count", a.count},
                {"seed", a.seed},
                {"jensen", {{"min", r.jensen.min}, {"mean", r.jensen.mean}}},
                {"reciprocal_convexity", {{"min", r.rc.min}, {"mean", r.rc.mean}}},
                {"all_nonnegative", r.all_nonnegative}}
               .dump()
        << '\n';
  } else if (a.count == 0) {
    out << "no instances requested\n";
  } else {
    out << std::setprecision(6) << "instances per oracle: " << a.count << " (seed " << a.seed
        << ")\n"
        << "jensen gap:               min " << r.jensen.min << ", mean " << r.jensen.mean << '\n'
        << "reciprocal-convex gap:    min " << r.rc.min << ", mean " << r.rc.mean << '\n'
        << (r.all_nonnegative ? "all gaps >= -1e-9" : "NEGATIVE GAP FOUND") << '\n';
  }
  return r.all_nonnegative ? kExitCertified : kExitNotCertified;
}

}  // namespace

RealVector random_initial_state(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RealVector x(4 * n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
  return x;
}

int simulation_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("QVNN_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<long>(n, cap);
  }
  return n;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability certification and simulation for delayed quaternion-valued networks",
               "qvnn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  CertifyArgs ca;
  auto* certify = app.add_subcommand("certify", "Solve the LMI stability criterion for a model");
  certify->add_option("config", ca.config, "Model config (JSON)")->required();
  certify->add_option("--margin-tol", ca.margin_tol, "Required verified margin")->capture_default_str();
  certify->add_flag("--json", ca.json_out, "Print the report as one JSON document");
  certify->add_option("--out", ca.out_dir, "Output directory")->capture_default_str();
  certify->add_option("--seed", ca.seed, "Solver seed")->capture_default_str();
  certify->add_option("--diagnostics", ca.diagnostics, "Write per-iteration solver CSV here");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Integrate the network from random histories");
  simulate->add_option("config", sa.config, "Model config (JSON)")->required();
  simulate->add_option("--seeds", sa.sim.runs, "Number of runs")->capture_default_str();
  simulate->add_option("--seed", sa.sim.seed, "Seed of run 0")->capture_default_str();
  simulate->add_option("--horizon", sa.sim.horizon, "Seconds")->capture_default_str();
  simulate->add_option("--step", sa.sim.step, "Integration step")->capture_default_str();
  simulate->add_option("--threshold", sa.sim.threshold, "Convergence threshold on |x|_inf")
      ->capture_default_str();
  simulate->add_option("--lkf", sa.lkf_cert, "Certificate JSON; evaluates V(t) along run 0");
  simulate->add_option("--lkf-every", sa.lkf_every, "Seconds between V(t) samples")
      ->capture_default_str();
  simulate->add_flag("--zero-history", sa.sim.zero_history, "Start every run at the equilibrium");
  simulate->add_option("--stride", sa.stride, "Write every k-th sample")->capture_default_str();
  simulate->add_flag("--derivatives", sa.derivatives, "Also write derivative columns");
  simulate->add_option("--threads", sa.sim.threads, "Worker threads (0 = all cores)");
  simulate->add_option("--out", sa.out_dir, "Output directory")->capture_default_str();

  MarginArgs ma;
  auto* margin = app.add_subcommand("margin", "Bisect a delay parameter for the certified range");
  margin->add_option("config", ma.config, "Model config (JSON)")->required();
  margin->add_option("--param", ma.param, "delta, d1 or d2")->required();
  margin->add_option("--bracket", ma.bracket, "certified,uncertified endpoints")->required();
  margin->add_option("--tol", ma.tol, "Bracket width to stop at")->capture_default_str();
  margin->add_option("--margin-tol", ma.margin_tol, "Required verified margin")
      ->capture_default_str();
  margin->add_flag("--json", ma.json_out, "Print the result as one JSON document");

  OracleArgs oa;
  auto* oracles = app.add_subcommand("oracles", "Random checks of the integral inequalities");
  oracles->add_option("--count", oa.count, "Instances per oracle")->capture_default_str();
  oracles->add_option("--seed", oa.seed, "Seed")->capture_default_str();
  oracles->add_flag("--json", oa.json_out, "Print statistics as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInputError;
  }

  try {
    if (*certify) return cmd_certify(ca, out);
    if (*simulate) return cmd_simulate(sa, out);
    if (*margin) return cmd_margin(ma, out, err);
    if (*oracles) return cmd_oracles(oa, out);
  } catch (const std::invalid_argument& e) {  // input, shape and precondition errors
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NoEquilibriumError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  }
  return kExitInputError;
}

}  // namespace qvnn
