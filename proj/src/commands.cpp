#include "wormqmc/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>

#include "wormqmc/errors.hpp"
#include "wormqmc/oracle.hpp"

namespace wormqmc {

namespace {

constexpr double kDefaultBeta = 1.0;
constexpr double kDefaultEps = 0.1;
constexpr double kAnomalyMultiple = 100.0;

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
void take(std::optional<T>& dst, const json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return;
  try {
    dst = doc[key].get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string(key) + ": wrong type");
  }
}

template <class T>
void take(T& dst, const json& doc, const char* key) {
  if (!doc.contains(key) || doc[key].is_null()) return;
  try {
    dst = doc[key].get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string(key) + ": wrong type");
  }
}

double beta_of(const RunManifest& m) { return m.beta.value_or(kDefaultBeta); }
double eps_of(const RunManifest& m) { return m.eps.value_or(kDefaultEps); }

json module_config(const RunManifest& m, const EstimatorParams& p) {
  return {{"estimator", to_json(p)},
          {"chain", {{"laziness", p.laziness}, {"refresh_interval", ChainParams{}.refresh_interval}}},
          {"oracle",
           {{"state_cap", m.state_cap.value_or(oracle::kDefaultStateCap)},
            {"dense_qubit_cap", oracle::kDenseQubitCap},
            {"gap_dimension_cap", oracle::kGapDimensionCap}}},
          {"diagnostics",
           {{"autocorrelation_window_c", 6.0},
            {"anomaly_multiple", kAnomalyMultiple},
            {"adaptive_burnin_factor", 20.0}}}};
}

json check(const std::string& name, bool passed, double measured, double tolerance, bool informational = false,
           const std::string& detail = "") {
  json c = {{"name", name},
            {"passed", passed},
            {"informational", informational},
            {"measured", number(measured)},
            {"tolerance", number(tolerance)}};
  if (!detail.empty()) c["detail"] = detail;
  return c;
}

int trotter_for(const RunManifest& m, const XYHamiltonian& h) {
  return m.L ? *m.L : choose_trotter_number(h, beta_of(m), eps_of(m), m.c_L.value_or(kDefaultTrotterConstant));
}

json cmd_estimate(const RunManifest& m, const XYHamiltonian& h, const EstimatorParams& p) {
  const auto r = estimate_partition_function(h, beta_of(m), eps_of(m), p);
  return to_json(r);
}

json cmd_schedule(const RunManifest& m, const XYHamiltonian* h, const EstimatorParams& p) {
  XYHamiltonian shape;
  double H_norm = 0.0;
  if (h) {
    shape = *h;
    H_norm = h->norm_bound();
  } else {
    if (!m.n || !m.h_norm) throw ValidationError("schedule needs a Hamiltonian file or both n and h_norm");
    if (*m.n <= 0) throw ValidationError("n must be positive");
    shape.n = *m.n;
    H_norm = *m.h_norm;
  }
  const double beta = beta_of(m), eps = eps_of(m);
  const int L = m.L ? *m.L : choose_trotter_number(shape, beta, eps, p.c_L);
  const auto budget = sample_budget(beta, p.statistical_share * eps, H_norm, p.fail_prob, p.c_S);
  const std::uint64_t S = p.S > 0 ? p.S : budget.S;
  json out = {{"n", shape.n},
              {"beta", beta},
              {"eps", eps},
              {"H_norm", H_norm},
              {"L", L},
              {"k", budget.k},
              {"S", S},
              {"total_samples", static_cast<double>(S) * budget.k},
              {"statistical_eps", p.statistical_share * eps},
              {"reference_scaling_n6_beta3_eps-2",
               std::pow(shape.n, 6) * std::pow(beta, 3) / (eps * eps)}};
  if (H_norm > 0.0) out["beta_grid"] = beta_grid(beta, H_norm);
  if (h) out["M"] = 2 * L * static_cast<int>(h->pairs.size() + static_cast<std::size_t>(h->n));
  return out;
}

json cmd_verify(const RunManifest& m, const XYHamiltonian& h, bool& all_passed) {
  const double beta = beta_of(m), eps = eps_of(m);
  const auto report = validate(h);
  require_valid(h);
  const int L = trotter_for(m, h);
  json checks = json::array();

  // The sandwich is a property of the c_L rule; an explicit L is checked
  // for information only.
  const int L_rule = choose_trotter_number(h, beta, eps, m.c_L.value_or(kDefaultTrotterConstant));
  const double z = oracle::exact_Z(h, beta);
  const double z_rule = oracle::exact_trotterized_Z(h, beta, L_rule);
  const double rule_err = std::abs(std::log(z_rule / z));
  checks.push_back(check("trotter_sandwich", rule_err <= eps / 4.0, rule_err, eps / 4.0, false,
                         "L = " + std::to_string(L_rule) + " from the c_L rule"));
  const double zt = L == L_rule ? z_rule : oracle::exact_trotterized_Z(h, beta, L);
  if (L != L_rule) {
    const double err = std::abs(std::log(zt / z));
    checks.push_back(check("trotter_error_at_L", err <= eps / 4.0, err, eps / 4.0, true,
                           "L = " + std::to_string(L) + " given explicitly"));
  }

  const auto layout = WorldlineLayout::make(OperatorSchedule(h, beta, L));
  const auto space = oracle::enumerate_space(layout, m.state_cap.value_or(oracle::kDefaultStateCap));
  const double enum_err = std::abs(space.sum_c0() - zt) / zt;
  checks.push_back(check("enumeration_matches_dense", enum_err <= 1e-10, enum_err, 1e-10));

  double pi_sum = 0.0;
  for (double v : space.pi()) pi_sum += v;
  checks.push_back(check("pi_normalized", std::abs(pi_sum - 1.0) <= 1e-12, std::abs(pi_sum - 1.0), 1e-12));

  const double laziness = m.laziness.value_or(0.5);
  const auto P = oracle::build_transition_matrix(space, laziness);
  const double rows = oracle::row_sum_residual(P);
  const double stat = oracle::stationarity_residual(P, space.pi());
  const double db = oracle::detailed_balance_residual(P, space.pi());
  checks.push_back(check("row_sums", rows <= 1e-12, rows, 1e-12));
  checks.push_back(check("stationarity", stat <= 1e-12, stat, 1e-12));
  checks.push_back(check("detailed_balance", db <= 1e-12, db, 1e-12));

  const auto c_min = h.c_min();
  const bool degenerate = beta == 0.0 || (c_min && *c_min == 0.0);
  const auto classes = oracle::communicating_classes(P);
  checks.push_back(check("irreducible", classes.class_count == 1, classes.class_count, 1, degenerate,
                         degenerate ? "c_min = 0 or beta = 0: class structure reported for information" : ""));
  json gap_info = nullptr;
  if (classes.class_count == 1 && space.size() <= static_cast<std::size_t>(oracle::kGapDimensionCap)) {
    const auto g = oracle::spectral_gap(P, space.pi());
    checks.push_back(check("spectral_gap_positive", g.gap > 0.0, g.gap, 0.0));
    gap_info = g.gap;
  } else if (classes.class_count == 1) {
    checks.push_back(check("spectral_gap_positive", true, std::numeric_limits<double>::quiet_NaN(), 0.0, true,
                           "skipped: more than " + std::to_string(oracle::kGapDimensionCap) + " states"));
  }

  const double Mops = layout->op_count();
  const double ratio = space.sector_ratio();
  checks.push_back(check("sector_bound", ratio <= kAnomalyMultiple * Mops, ratio / Mops, kAnomalyMultiple,
                         false, "measured is (C2 mass / C0 mass) / M"));

  all_passed = true;
  for (const auto& c : checks)
    if (!c["informational"].get<bool>() && !c["passed"].get<bool>()) all_passed = false;

  json class_sizes = json::array();
  for (auto s : classes.class_sizes) class_sizes.push_back(s);
  return {{"instance",
           {{"n", h.n},
            {"beta", beta},
            {"eps", eps},
            {"L", L},
            {"L_rule", L_rule},
            {"M", layout->op_count()},
            {"M1", layout->schedule().M1()},
            {"M2", layout->schedule().M2()},
            {"states", space.size()},
            {"c0_states", space.c0_count()}}},
          {"validation", to_json(report)},
          {"exact_Z", z},
          {"exact_trotterized_Z", zt},
          {"sector_ratio", ratio},
          {"spectral_gap", gap_info},
          {"class_sizes", class_sizes},
          {"checks", checks},
          {"all_passed", all_passed}};
}

json acf_table(const std::string& dir, const std::string& name, const Autocorrelation& a) {
  std::vector<std::vector<double>> rows;
  for (std::size_t t = 0; t < a.rho.size(); ++t) rows.push_back({static_cast<double>(t), a.rho[t]});
  const auto path = (std::filesystem::path(dir) / ("acf_" + name + ".tsv")).string();
  write_table(path, {"lag", "rho"}, rows);
  return path;
}

json cmd_diagnose(const RunManifest& m, const XYHamiltonian& h, const EstimatorParams& p) {
  require_valid(h);
  const double beta = beta_of(m);
  const int L = trotter_for(m, h);
  const auto layout = WorldlineLayout::make(OperatorSchedule(h, beta, L));
  const auto M = static_cast<std::uint64_t>(layout->op_count());
  const std::uint64_t thinning = p.thinning > 0 ? static_cast<std::uint64_t>(p.thinning) : M;
  const std::uint64_t burnin = p.burnin >= 0 ? static_cast<std::uint64_t>(p.burnin) : 20 * M;
  const std::uint64_t steps = m.steps.value_or(1000 * thinning);
  json notices = json::array();
  json tables = json::object();
  if (!m.tables.empty()) std::filesystem::create_directories(m.tables);

  Chain chain(WorldlineConfig::canonical_initial(layout), ChainParams{p.laziness, p.seed, 0});
  chain.run(burnin);
  std::optional<TraceWriter> trace;
  if (!m.trace.empty()) trace.emplace(m.trace);
  TimeSeries lw{"log_weight", {}, 0, p.seed}, kinks{"kinks", {}, 0, p.seed};
  std::uint64_t c0 = 0, c2 = 0;
  for (std::uint64_t t = 1; t <= steps; ++t) {
    const auto rec = chain.step();
    if (trace) trace->write(rec);
    (chain.config().head_count() == 0 ? c0 : c2) += 1;
    if (t % thinning == 0) {
      lw.values.push_back(chain.log_weight());
      kinks.values.push_back(chain.config().kink_count());
    }
  }

  json acf = json::object();
  double tau_lw = 0.5;
  for (const auto* ts : {&lw, &kinks}) {
    try {
      const auto a = integrated_autocorrelation(*ts);
      acf[ts->name] = {{"tau_int", a.tau_int}, {"window", a.window}, {"mean", a.mean}, {"variance", a.variance}};
      if (ts == &lw) tau_lw = a.tau_int;
      if (!m.tables.empty()) tables["acf_" + ts->name] = acf_table(m.tables, ts->name, a);
    } catch (const ValidationError& e) {
      acf[ts->name] = nullptr;
      notices.push_back(std::string("autocorrelation of ") + ts->name + " unavailable: " + e.what());
    }
  }
  const auto sector = sector_ratio_monitor(c0, c2, static_cast<double>(M), tau_lw * static_cast<double>(thinning),
                                           kAnomalyMultiple);

  json tv = nullptr;
  try {
    const auto space = oracle::enumerate_space(layout, m.state_cap.value_or(oracle::kDefaultStateCap));
    const auto P = oracle::build_transition_matrix(space, p.laziness);
    double pi_min = 1.0;
    for (double v : space.pi()) pi_min = std::min(pi_min, v);
    double gap = std::numeric_limits<double>::quiet_NaN();
    double bound = std::numeric_limits<double>::infinity();
    if (space.size() <= static_cast<std::size_t>(oracle::kGapDimensionCap)) {
      const auto g = oracle::spectral_gap(P, space.pi());
      if (g.irreducible) {
        gap = g.gap;
        bound = tv_quarter_bound(g.gap, pi_min);
      }
    }
    std::size_t horizon = 10000;
    if (m.tv_horizon)
      horizon = static_cast<std::size_t>(*m.tv_horizon);
    else if (std::isfinite(bound))
      horizon = static_cast<std::size_t>(std::min(2.0 * std::ceil(bound), 200000.0));
    const auto curve = empirical_tv_decay(space, p.laziness, horizon);
    bool monotone = true;
    for (std::size_t t = 1; t < curve.size(); ++t) monotone = monotone && curve[t] <= curve[t - 1] + 1e-15;
    tv = {{"states", space.size()},
          {"horizon", horizon},
          {"initial", curve.front()},
          {"final", curve.back()},
          {"monotone", monotone},
          {"quarter_crossing", first_crossing(curve, 0.25)},
          {"spectral_gap", number(gap)},
          {"pi_min", pi_min},
          {"quarter_bound", number(bound)}};
    if (!m.tables.empty()) {
      std::vector<std::vector<double>> rows;
      for (std::size_t t = 0; t < curve.size(); ++t) rows.push_back({static_cast<double>(t), curve[t]});
      const auto path = (std::filesystem::path(m.tables) / "tv.tsv").string();
      write_table(path, {"step", "tv"}, rows);
      tables["tv"] = path;
    }
  } catch (const CapExceeded& e) {
    notices.push_back(std::string("total-variation curve skipped: ") + e.what());
  }

  if (!m.tables.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < lw.values.size(); ++k)
      rows.push_back({static_cast<double>((k + 1) * thinning), lw.values[k], kinks.values[k]});
    const auto path = (std::filesystem::path(m.tables) / "series.tsv").string();
    write_table(path, {"step", "log_weight", "kinks"}, rows);
    tables["series"] = path;
  }

  json out = {{"n", h.n},
              {"beta", beta},
              {"L", L},
              {"M", M},
              {"burnin", burnin},
              {"steps", steps},
              {"thinning", thinning},
              {"autocorrelation", acf},
              {"adaptive_burnin", adaptive_burnin(tau_lw, thinning)},
              {"sector", to_json(sector)},
              {"tv", tv},
              {"tables", tables},
              {"notices", notices}};
  if (trace) out["trace"] = {{"path", m.trace}, {"records", trace->records()}};
  return out;
}

}  // namespace

json to_json(const RunManifest& m) {
  return {{"command", m.command},
          {"input", m.input},
          {"beta", opt(m.beta)},
          {"eps", opt(m.eps)},
          {"seed", m.seed},
          {"output", m.output},
          {"config_path", m.config_path},
          {"L", opt(m.L)},
          {"c_L", opt(m.c_L)},
          {"c_S", opt(m.c_S)},
          {"S", opt(m.S)},
          {"fail_prob", opt(m.fail_prob)},
          {"burnin", opt(m.burnin)},
          {"thinning", opt(m.thinning)},
          {"patience", opt(m.patience)},
          {"laziness", opt(m.laziness)},
          {"chains", opt(m.chains)},
          {"median_groups", opt(m.median_groups)},
          {"allow_small_beta", m.allow_small_beta},
          {"rigorous_burnin", m.rigorous_burnin},
          {"state_cap", opt(m.state_cap)},
          {"steps", opt(m.steps)},
          {"tv_horizon", opt(m.tv_horizon)},
          {"tables", m.tables},
          {"trace", m.trace},
          {"n", opt(m.n)},
          {"h_norm", opt(m.h_norm)},
          {"reproducible", m.reproducible}};
}

void merge_manifest(RunManifest& m, const json& doc) {
  if (!doc.is_object()) throw ParseError("manifest: expected an object");
  const json known = to_json(RunManifest{});
  for (const auto& [k, v] : doc.items())
    if (!known.contains(k)) throw ParseError("manifest." + k + ": unknown field");
  take(m.command, doc, "command");
  take(m.input, doc, "input");
  take(m.beta, doc, "beta");
  take(m.eps, doc, "eps");
  take(m.seed, doc, "seed");
  take(m.output, doc, "output");
  take(m.config_path, doc, "config_path");
  take(m.L, doc, "L");
  take(m.c_L, doc, "c_L");
  take(m.c_S, doc, "c_S");
  take(m.S, doc, "S");
  take(m.fail_prob, doc, "fail_prob");
  take(m.burnin, doc, "burnin");
  take(m.thinning, doc, "thinning");
  take(m.patience, doc, "patience");
  take(m.laziness, doc, "laziness");
  take(m.chains, doc, "chains");
  take(m.median_groups, doc, "median_groups");
  take(m.allow_small_beta, doc, "allow_small_beta");
  take(m.rigorous_burnin, doc, "rigorous_burnin");
  take(m.state_cap, doc, "state_cap");
  take(m.steps, doc, "steps");
  take(m.tv_horizon, doc, "tv_horizon");
  take(m.tables, doc, "tables");
  take(m.trace, doc, "trace");
  take(m.n, doc, "n");
  take(m.h_norm, doc, "h_norm");
  take(m.reproducible, doc, "reproducible");
}

RunManifest manifest_from_json(const json& doc) {
  RunManifest m;
  merge_manifest(m, doc);
  return m;
}

EstimatorParams estimator_params(const RunManifest& m) {
  EstimatorParams p;
  if (m.c_L) p.c_L = *m.c_L;
  if (m.L) {
    if (*m.L < 1) throw ValidationError("L must be >= 1");
    p.L = *m.L;
  }
  if (m.c_S) p.c_S = *m.c_S;
  if (m.S) p.S = *m.S;
  if (m.fail_prob) p.fail_prob = *m.fail_prob;
  if (m.burnin) p.burnin = *m.burnin;
  if (m.thinning) p.thinning = *m.thinning;
  if (m.patience) p.patience = *m.patience;
  if (m.laziness) p.laziness = *m.laziness;
  if (m.chains) p.chains = *m.chains;
  if (m.median_groups) p.median_groups = *m.median_groups;
  p.seed = m.seed;
  p.allow_small_beta = m.allow_small_beta;
  p.rigorous_burnin = m.rigorous_burnin;
  if (!(p.laziness >= 0.0 && p.laziness < 1.0)) throw ValidationError("laziness must lie in [0, 1)");
  if (p.chains < 1) throw ValidationError("chains must be >= 1");
  return p;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kExitParse;
  if (dynamic_cast<const ValidationError*>(&e)) return kExitValidation;
  if (dynamic_cast<const CapExceeded*>(&e)) return kExitCap;
  if (dynamic_cast<const EstimatorError*>(&e)) return kExitEstimator;
  return kExitInternal;
}

const char* exit_code_name(int code) {
  switch (code) {
    case kExitOk: return "ok";
    case kExitUsage: return "usage";
    case kExitParse: return "parse";
    case kExitValidation: return "validation";
    case kExitCap: return "cap_exceeded";
    case kExitEstimator: return "estimator";
    case kExitVerifyFailed: return "verification_failed";
    default: return "internal";
  }
}

namespace {

CommandOutcome run_impl(const RunManifest& m, const XYHamiltonian* given) {
  const auto started = std::chrono::steady_clock::now();
  CommandOutcome out;
  auto& doc = out.document;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["command"] = m.command;
  doc["status"] = "ok";
  doc["manifest"] = to_json(m);
  doc["rng"] = {{"algorithm", Rng::kAlgorithm}, {"seed", m.seed}};
  try {
    const auto p = estimator_params(m);
    doc["config"] = module_config(m, p);
    std::optional<XYHamiltonian> loaded;
    const XYHamiltonian* h = given;
    if (!h && !m.input.empty()) {
      loaded = load_hamiltonian(m.input);
      h = &*loaded;
    }
    if (h) doc["hamiltonian"] = hamiltonian_to_json(*h);
    if (m.command != "schedule" && !h) throw ValidationError("no Hamiltonian given (input is empty)");
    if (m.command == "estimate") {
      doc["result"] = cmd_estimate(m, *h, p);
    } else if (m.command == "schedule") {
      if (h) require_valid(*h);
      doc["result"] = cmd_schedule(m, h, p);
    } else if (m.command == "verify") {
      bool passed = false;
      doc["result"] = cmd_verify(m, *h, passed);
      if (!passed) {
        out.exit_code = kExitVerifyFailed;
        doc["status"] = "failed";
      }
    } else if (m.command == "diagnose") {
      doc["result"] = cmd_diagnose(m, *h, p);
    } else {
      throw ValidationError("unknown command '" + m.command + "'");
    }
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    doc["status"] = "error";
    json err = {{"kind", exit_code_name(out.exit_code)}, {"exit_code", out.exit_code}, {"message", e.what()}};
    if (const auto* cap = dynamic_cast<const CapExceeded*>(&e)) err["estimate"] = number(cap->estimate());
    doc["error"] = err;
  }
  if (m.reproducible)
    doc["runtime_seconds"] = nullptr;
  else
    doc["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace

CommandOutcome run_command(const RunManifest& m) { return run_impl(m, nullptr); }
CommandOutcome run_command(const RunManifest& m, const XYHamiltonian& h) { return run_impl(m, &h); }

}  // namespace wormqmc
