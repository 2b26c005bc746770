#include "wormqmc/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "wormqmc/errors.hpp"

namespace wormqmc {

namespace {

std::uint64_t checked_count(double x, const char* what) {
  if (!(x >= 0.0) || x > 1.8e19) throw ValidationError(std::string(what) + " does not fit in 64 bits");
  return static_cast<std::uint64_t>(x);
}

std::uint64_t stream_id(std::uint64_t step, int chain) { return (step << 16) | static_cast<std::uint64_t>(chain); }

struct ChainSummary {
  std::vector<double> values;
  std::vector<double> log_weights;
  std::uint64_t c2_skips = 0;
  std::uint64_t c0_visits = 0;
  std::uint64_t c2_visits = 0;
  std::uint64_t steps = 0;
};

double tau_or_half(const std::vector<double>& v, const std::string& name) {
  if (v.size() < kMinAutocorrelationLength) return 0.5;
  try {
    return integrated_autocorrelation({name, v, 0, 0}).tau_int;
  } catch (const ValidationError&) {
    return 0.5;  // constant series
  }
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of_means(const std::vector<double>& v, int groups) {
  const auto g = static_cast<std::size_t>(groups);
  if (groups <= 1 || v.size() < g) return mean_of(v);
  std::vector<double> means;
  const std::size_t size = v.size() / g;
  for (std::size_t k = 0; k < g; ++k) {
    const auto begin = v.begin() + static_cast<std::ptrdiff_t>(k * size);
    const auto end = k + 1 == g ? v.end() : begin + static_cast<std::ptrdiff_t>(size);
    means.push_back(std::accumulate(begin, end, 0.0) / static_cast<double>(end - begin));
  }
  std::sort(means.begin(), means.end());
  return g % 2 ? means[g / 2] : 0.5 * (means[g / 2 - 1] + means[g / 2]);
}

}  // namespace

SampleBudget sample_budget(double beta, double eps, double H_norm, double fail_prob, double c_S) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!(fail_prob > 0.0 && fail_prob < 1.0)) throw ValidationError("fail_prob must lie in (0, 1)");
  if (!(c_S > 0.0)) throw ValidationError("sample constant c_S must be positive");
  if (!(beta >= 0.0) || !(H_norm >= 0.0)) throw ValidationError("beta and H_norm must be non-negative");
  SampleBudget b;
  const double bh = beta * H_norm;
  b.k = bh == 0.0 ? 1 : std::max(1, static_cast<int>(std::ceil(bh * (1.0 - 1e-12))));
  const double k = b.k;
  const double S = std::ceil(c_S * k * k / (eps * eps) * std::log(2.0 * k / fail_prob) * (1.0 - 1e-12));
  b.S = std::max<std::uint64_t>(1, checked_count(S, "sample budget"));
  return b;
}

std::vector<double> beta_grid(double beta, double H_norm) {
  const int k = sample_budget(beta, 1.0, H_norm, 0.5).k;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(k) + 1);
  grid.push_back(0.0);
  for (int i = 1; i < k; ++i) grid.push_back(i / H_norm);
  grid.push_back(beta);
  return grid;
}

EstimatorSchedule plan(const XYHamiltonian& h, double beta, double eps, const EstimatorParams& p) {
  if (!(p.statistical_share > 0.0 && p.statistical_share <= 1.0))
    throw ValidationError("statistical_share must lie in (0, 1]");
  if (p.chains < 1) throw ValidationError("chains must be >= 1");
  EstimatorSchedule s;
  s.L = p.L > 0 ? p.L : choose_trotter_number(h, beta, eps, p.c_L);
  s.H_norm = h.norm_bound();
  const auto budget = sample_budget(beta, p.statistical_share * eps, s.H_norm, p.fail_prob, p.c_S);
  s.k = budget.k;
  s.S = p.S > 0 ? p.S : budget.S;
  s.beta_grid = beta_grid(beta, s.H_norm);
  s.M = 2 * s.L * static_cast<int>(h.pairs.size() + static_cast<std::size_t>(h.n));
  const auto M = static_cast<std::uint64_t>(s.M);
  if (p.rigorous_burnin) {
    const auto c_min = h.c_min();
    if (!c_min) throw ValidationError("rigorous burn-in needs pair terms (c_min undefined)");
    const OperatorSchedule os(h, beta, s.L);
    s.burnin = checked_count(std::ceil(rigorous_burnin(os, eps, *c_min, p.rigorous_constant)), "rigorous burn-in");
  } else {
    s.burnin = p.burnin >= 0 ? static_cast<std::uint64_t>(p.burnin) : 20 * M;
  }
  s.thinning = p.thinning > 0 ? static_cast<std::uint64_t>(p.thinning) : M;
  s.patience = p.patience > 0 ? static_cast<std::uint64_t>(p.patience) : 10 * M * M + 1000 * M;
  return s;
}

double ratio_observable(const WorldlineConfig& cfg, double beta_lo, double beta_hi, int L) {
  const auto& sched = cfg.schedule();
  if (sched.trotter_number() != L) throw ValidationError("configuration has a different Trotter number");
  if (beta_lo == beta_hi) return 1.0;
  const double d_lo = beta_lo / (2.0 * L);
  const double d_hi = beta_hi / (2.0 * L);
  double lr = 0.0;
  for (int m = 0; m < sched.M(); ++m) {
    const auto& op = sched.op(m);
    const unsigned s = cfg.local_state(m);
    const double lo = local_element(op, d_lo, s);
    if (lo == 0.0) throw EstimatorError("ratio observable: element vanishes at beta_lo");
    const double hi = local_element(op, d_hi, s);
    if (hi == 0.0) return 0.0;
    if (hi != lo) lr += std::log(hi / lo);
  }
  return std::exp(lr);
}

const char* step_method_name(StepMethod m) {
  switch (m) {
    case StepMethod::Direct: return "direct";
    case StepMethod::Forward: return "forward";
    case StepMethod::Reverse: return "reverse";
  }
  return "?";
}

RatioEstimate estimate_ratio(const XYHamiltonian& h, double beta_lo, double beta_hi, const EstimatorSchedule& sched,
                             const EstimatorParams& params, std::uint64_t step_index) {
  if (sched.S < 1) throw ValidationError("S must be >= 1");
  if (!(beta_hi >= beta_lo) || !(beta_lo >= 0.0)) throw ValidationError("need 0 <= beta_lo <= beta_hi");
  RatioEstimate r;
  r.beta_lo = beta_lo;
  r.beta_hi = beta_hi;
  if (beta_hi == beta_lo) {
    r.method = StepMethod::Direct;
    r.samples = sched.S;
    return r;
  }

  if (beta_lo == 0.0 && h.pairs.empty()) {
    r.method = StepMethod::Direct;
    if (h.n > 64) throw ValidationError("direct sampling supports n <= 64");
    const auto layout = WorldlineLayout::make(OperatorSchedule(h, 0.0, sched.L));
    Rng rng(params.seed, stream_id(step_index, 0));
    std::vector<double> values;
    values.reserve(sched.S);
    for (std::uint64_t s = 0; s < sched.S; ++s) {
      std::uint64_t basis = rng.next();
      if (h.n < 64) basis &= (std::uint64_t{1} << h.n) - 1;
      values.push_back(ratio_observable(WorldlineConfig::constant(layout, basis), 0.0, beta_hi, sched.L));
    }
    r.mean = median_of_means(values, params.median_groups);
    r.se = standard_error(values, 0.5);
    r.samples = values.size();
    r.c0_visits = values.size();
    return r;
  }

  r.method = beta_lo > 0.0 ? StepMethod::Forward : StepMethod::Reverse;
  const double chain_beta = r.method == StepMethod::Forward ? beta_lo : beta_hi;
  const double obs_to = r.method == StepMethod::Forward ? beta_hi : 0.0;
  const auto layout = WorldlineLayout::make(OperatorSchedule(h, chain_beta, sched.L));

  const int chains = params.chains;
  std::vector<ChainSummary> summaries(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));

  auto work = [&](int c) {
    try {
      auto& out = summaries[static_cast<std::size_t>(c)];
      const std::uint64_t target = sched.S / static_cast<std::uint64_t>(chains) +
                                   (static_cast<std::uint64_t>(c) < sched.S % static_cast<std::uint64_t>(chains));
      Chain chain(WorldlineConfig::canonical_initial(layout),
                  ChainParams{params.laziness, params.seed, stream_id(step_index, c)});
      chain.run(sched.burnin);
      std::uint64_t since_c0 = 0;
      out.values.reserve(target);
      while (out.values.size() < target) {
        for (std::uint64_t t = 0; t < sched.thinning; ++t) {
          chain.step();
          ++out.steps;
          if (chain.config().head_count() == 0) {
            ++out.c0_visits;
            since_c0 = 0;
          } else {
            ++out.c2_visits;
            if (++since_c0 > sched.patience)
              throw EstimatorError("chain spent " + std::to_string(since_c0) +
                                   " consecutive steps in C2 (patience exhausted); sector ratio anomaly");
          }
        }
        out.log_weights.push_back(chain.log_weight());
        if (chain.config().head_count() == 0)
          out.values.push_back(ratio_observable(chain.config(), chain_beta, obs_to, sched.L));
        else
          ++out.c2_skips;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };

  if (chains == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int c = 0; c < chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> values;
  for (const auto& s : summaries) {
    values.insert(values.end(), s.values.begin(), s.values.end());
    r.c2_skips += s.c2_skips;
    r.c0_visits += s.c0_visits;
    r.c2_visits += s.c2_visits;
    r.steps += s.steps;
    r.tau_int = std::max(r.tau_int, tau_or_half(s.values, "ratio"));
    r.tau_log_weight = std::max(r.tau_log_weight, tau_or_half(s.log_weights, "log_weight"));
  }
  r.samples = values.size();
  r.c2_fraction = static_cast<double>(r.c2_skips) / static_cast<double>(r.c2_skips + r.samples);
  r.burnin = sched.burnin;
  r.adaptive_burnin = adaptive_burnin(r.tau_log_weight, sched.thinning);

  const double m = median_of_means(values, params.median_groups);
  const double se = standard_error(values, r.tau_int);
  if (r.method == StepMethod::Forward) {
    r.mean = m;
    r.se = se;
  } else {
    if (!(m > 0.0)) throw EstimatorError("inverse ratio estimate is zero");
    r.mean = 1.0 / m;
    r.se = se / (m * m);
  }
  return r;
}

EstimateResult estimate_partition_function(const XYHamiltonian& h, double beta, double eps,
                                           const EstimatorParams& params) {
  const auto started = std::chrono::steady_clock::now();
  require_valid(h);
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be a finite non-negative number");
  if (beta < 1.0 && !params.allow_small_beta)
    throw ValidationError("beta < 1 requires allow_small_beta (Trotter guarantee assumes beta >= 1)");
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");

  EstimateResult res;
  res.n = h.n;
  res.beta = beta;
  res.eps = eps;
  res.seed = params.seed;
  res.schedule = plan(h, beta, eps, params);

  const auto& grid = res.schedule.beta_grid;
  res.log_Z = h.n * std::log(2.0);
  double var = 0.0;
  std::uint64_t c0 = 0, c2 = 0;
  double tau_steps = 0.5;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    auto step = estimate_ratio(h, grid[i - 1], grid[i], res.schedule, params, i);
    if (!(step.mean > 0.0)) throw EstimatorError("non-positive ratio estimate at step " + std::to_string(i));
    res.log_Z += std::log(step.mean);
    var += (step.se / step.mean) * (step.se / step.mean);
    res.total_samples += step.samples;
    if (step.method != StepMethod::Direct) {
      c0 += step.c0_visits;
      c2 += step.c2_visits;
      tau_steps = std::max(tau_steps, step.tau_log_weight * static_cast<double>(res.schedule.thinning));
    }
    res.steps.push_back(std::move(step));
  }
  res.log_Z_se = std::sqrt(var);
  res.sector = sector_ratio_monitor(c0, c2, res.schedule.M, tau_steps);
  res.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return res;
}

}  // namespace wormqmc
