// wormqmc command-line front end. Builds a run manifest from flags (over an
// optional config file), hands it to the shared library and writes the
// result document.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wormqmc/wormqmc.h"

using json = nlohmann::ordered_json;

namespace {

struct Flags {
  std::string hamiltonian, out, config, tables, trace;
  std::optional<double> beta, eps, c_L, c_S, fail_prob, laziness, state_cap, h_norm;
  std::optional<std::uint64_t> seed, samples, steps, tv_horizon;
  std::optional<std::int64_t> burnin, thinning, patience;
  std::optional<int> trotter, chains, median_groups, n;
  bool allow_small_beta = false, rigorous_burnin = false, reproducible = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-H,--hamiltonian", f.hamiltonian, "Hamiltonian JSON file");
  cmd->add_option("--beta", f.beta, "inverse temperature (default 1)");
  cmd->add_option("--eps", f.eps, "target precision (default 0.1)");
  cmd->add_option("--seed", f.seed, "RNG seed (default 0)");
  cmd->add_option("-o,--out", f.out, "write the result document here instead of stdout");
  cmd->add_option("--config", f.config, "manifest defaults (JSON); overrides $WORMQMC_CONFIG");
  cmd->add_flag("--reproducible", f.reproducible, "omit wall-clock time from the document");
  cmd->add_option("--trotter", f.trotter, "Trotter number L (default: from c_L)")->check(CLI::PositiveNumber);
  cmd->add_option("--c-L", f.c_L, "Trotter constant c_L (default 4)");
  cmd->add_option("--c-S", f.c_S, "sample-budget constant c_S (default 8)");
  cmd->add_option("--samples", f.samples, "samples per ratio (default: budget formula)");
  cmd->add_option("--fail-prob", f.fail_prob, "failure probability for the budget (default 0.1)");
  cmd->add_option("--burnin", f.burnin, "burn-in steps (default 20 M)");
  cmd->add_option("--thinning", f.thinning, "steps between samples (default M)");
  cmd->add_option("--patience", f.patience, "max consecutive C2 steps before giving up");
  cmd->add_option("--laziness", f.laziness, "hold probability (default 0.5)");
  cmd->add_option("--chains", f.chains, "independent chains per ratio (default 1)");
  cmd->add_option("--median-groups", f.median_groups, "median-of-means groups (default off)");
  cmd->add_flag("--allow-small-beta", f.allow_small_beta, "permit beta < 1");
  cmd->add_flag("--rigorous-burnin", f.rigorous_burnin, "use the worst-case mixing bound as burn-in");
  cmd->add_option("--state-cap", f.state_cap, "enumeration cap (default 1e6)");
}

template <class T>
void put(json& m, const char* key, const std::optional<T>& v) {
  if (v) m[key] = *v;
}

json manifest_for(const std::string& command, const Flags& f, std::string& config_path) {
  json m = json::object();
  config_path = f.config;
  if (config_path.empty())
    if (const char* env = std::getenv("WORMQMC_CONFIG")) config_path = env;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot read config " + config_path);
    try {
      m = json::parse(in);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("config " + config_path + ": " + e.what());
    }
    if (!m.is_object()) throw std::runtime_error("config " + config_path + ": expected an object");
    m["config_path"] = config_path;
  }
  m["command"] = command;
  if (!f.hamiltonian.empty()) m["input"] = f.hamiltonian;
  if (!f.out.empty()) m["output"] = f.out;
  put(m, "beta", f.beta);
  put(m, "eps", f.eps);
  put(m, "seed", f.seed);
  put(m, "L", f.trotter);
  put(m, "c_L", f.c_L);
  put(m, "c_S", f.c_S);
  put(m, "S", f.samples);
  put(m, "fail_prob", f.fail_prob);
  put(m, "burnin", f.burnin);
  put(m, "thinning", f.thinning);
  put(m, "patience", f.patience);
  put(m, "laziness", f.laziness);
  put(m, "chains", f.chains);
  put(m, "median_groups", f.median_groups);
  put(m, "state_cap", f.state_cap);
  put(m, "steps", f.steps);
  put(m, "tv_horizon", f.tv_horizon);
  put(m, "n", f.n);
  put(m, "h_norm", f.h_norm);
  if (!f.tables.empty()) m["tables"] = f.tables;
  if (!f.trace.empty()) m["trace"] = f.trace;
  if (f.allow_small_beta) m["allow_small_beta"] = true;
  if (f.rigorous_burnin) m["rigorous_burnin"] = true;
  if (f.reproducible) m["reproducible"] = true;
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worm-algorithm quantum Monte Carlo for stoquastic XY models"};
  app.set_version_flag("--version", std::string(wqmc_version()));
  app.require_subcommand(1);
  Flags f;

  auto* estimate = app.add_subcommand("estimate", "estimate the partition function");
  auto* verify = app.add_subcommand("verify", "run the exact oracle checks on a small instance");
  auto* diagnose = app.add_subcommand("diagnose", "mixing diagnostics: autocorrelation, TV decay, sector ratio");
  auto* schedule = app.add_subcommand("schedule", "print L, k and S without running");
  for (auto* cmd : {estimate, verify, diagnose, schedule}) add_common(cmd, f);
  diagnose->add_option("--steps", f.steps, "chain steps after burn-in (default 1000 x thinning)");
  diagnose->add_option("--tv-horizon", f.tv_horizon, "steps of the exact TV curve");
  diagnose->add_option("--tables", f.tables, "directory for TSV tables");
  diagnose->add_option("--trace", f.trace, "binary step trace file");
  schedule->add_option("--n", f.n, "qubit count (without --hamiltonian)");
  schedule->add_option("--h-norm", f.h_norm, "norm bound (without --hamiltonian)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return WQMC_ERR_USAGE;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  json manifest;
  std::string config_path;
  try {
    manifest = manifest_for(command, f, config_path);
  } catch (const std::exception& e) {
    std::cerr << "wormqmc: " << e.what() << "\n";
    return WQMC_ERR_PARSE;
  }

  const auto started = std::chrono::steady_clock::now();
  wqmc_document* doc = nullptr;
  const int rc = wqmc_run(manifest.dump().c_str(), &doc);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (doc) {
    const std::string text = wqmc_document_text(doc);
    if (f.out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(f.out, std::ios::binary);
      out << text;
      if (!out) {
        std::cerr << "wormqmc: cannot write " << f.out << "\n";
        wqmc_document_free(doc);
        return WQMC_ERR_INTERNAL;
      }
    }
    wqmc_document_free(doc);
  }
  if (rc != WQMC_OK) std::cerr << "wormqmc: " << wqmc_status_name(rc) << ": " << wqmc_last_error() << "\n";
  std::fprintf(stderr, "wormqmc: %s finished in %.3f s (exit %d)\n", command.c_str(), seconds, rc);
  return rc;
}
