#pragma once

// The `qvnn` command-line tool: certify, simulate, margin and oracles
// subcommands over a shared model config. Exit codes: 0 certified / all
// checks passed, 1 not certified, 2 input error, 3 numerical failure.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qvnn/config.hpp"
#include "qvnn/lmi.hpp"
#include "qvnn/sdp.hpp"

namespace qvnn {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitCertified = 0,
  kExitNotCertified = 1,
  kExitInputError = 2,
  kExitNumericalFailure = 3,
};

struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
/// Recomputes the config hash from config_path and checks that every listed
/// output exists. Relative output paths resolve against the manifest's directory.
bool verify_manifest(const std::string& manifest_path, std::string* why = nullptr);

// ---------------------------------------------------------------------------
// Certification pipeline

struct CertifyOptions {
  double margin_tolerance = 1e-6;
  SolverConfig solver;
};

struct CertifyOutcome {
  int exit_code = kExitNumericalFailure;
  FeasibilityResult solve;
  int num_vars = 0;
  int num_lmis = 0;
  /// Certificate normalized to max |scalar| = 1, present whenever the
  /// solver returned a point.
  std::optional<DecisionVars> vars;
  std::optional<CertificateReport> report;
  double assemble_seconds = 0.0;
  double solve_seconds = 0.0;
  double verify_seconds = 0.0;
};

/// assemble -> lower -> scale -> solve -> unscale -> normalize -> verify.
/// Certified (exit 0) only if the solver reports feasible and the
/// quaternion-level re-check passes with margin_tolerance.
CertifyOutcome certify_model(const NetworkModel& model, const CertifyOptions& opts);

nlohmann::json certify_report_json(const CertifyOutcome& o);

// ---------------------------------------------------------------------------
// Simulation batch

struct SimulationOptions {
  int runs = 10;
  std::uint64_t seed = 1;
  double horizon = 20.0;
  double step = 1e-3;
  double threshold = 1e-3;
  bool zero_history = false;
  int threads = 0;  // 0 = hardware concurrency (capped by QVNN_THREADS)
};

struct RunSummary {
  int run = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  double diverged_at = 0.0;
  std::string error;
  std::optional<double> time_to_threshold;
  double tail_sup_norm = 0.0;
  double final_sup_norm = 0.0;
  bool monotone_envelope = false;
  RealVector initial_state;
};

/// Constant initial history with components uniform in [-1, 1] from `seed`.
RealVector random_initial_state(int n, std::uint64_t seed);

/// Worker count: requested (or hardware concurrency), capped by QVNN_THREADS.
int simulation_threads(int requested);

// ---------------------------------------------------------------------------

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qvnn
