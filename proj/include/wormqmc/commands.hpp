#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "wormqmc/io.hpp"

namespace wormqmc {

/// Process exit codes shared by the CLI and the C API status values.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitParse = 2,
  kExitValidation = 3,
  kExitCap = 4,
  kExitEstimator = 5,
  kExitVerifyFailed = 6,
  kExitInternal = 7,
};

/// Everything needed to reproduce one run. Echoed verbatim into every
/// output document.
struct RunManifest {
  std::string command = "estimate";
  std::string input;
  std::optional<double> beta;
  std::optional<double> eps;
  std::uint64_t seed = 0;
  std::string output;
  std::string config_path;

  // estimator knobs
  std::optional<int> L;
  std::optional<double> c_L;
  std::optional<double> c_S;
  std::optional<std::uint64_t> S;
  std::optional<double> fail_prob;
  std::optional<std::int64_t> burnin;
  std::optional<std::int64_t> thinning;
  std::optional<std::int64_t> patience;
  std::optional<double> laziness;
  std::optional<int> chains;
  std::optional<int> median_groups;
  bool allow_small_beta = false;
  bool rigorous_burnin = false;

  // oracle / diagnostics knobs
  std::optional<double> state_cap;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> tv_horizon;
  std::string tables;
  std::string trace;

  // schedule without a Hamiltonian file
  std::optional<int> n;
  std::optional<double> h_norm;

  /// Write runtime_seconds as null so reruns are byte-identical.
  bool reproducible = false;
};

json to_json(const RunManifest& m);
/// Fills `m` from a manifest/config document; unknown keys are a ParseError.
void merge_manifest(RunManifest& m, const json& doc);
RunManifest manifest_from_json(const json& doc);

EstimatorParams estimator_params(const RunManifest& m);

struct CommandOutcome {
  int exit_code = kExitOk;
  json document;
};

/// Runs m.command ("estimate", "verify", "diagnose", "schedule"); every
/// failure becomes an error document with the matching exit code.
CommandOutcome run_command(const RunManifest& m);

/// Same, with the Hamiltonian supplied directly instead of m.input.
CommandOutcome run_command(const RunManifest& m, const XYHamiltonian& h);

int exit_code_for(const std::exception& e);
const char* exit_code_name(int code);

}  // namespace wormqmc
