#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wormqmc/chain.hpp"
#include "wormqmc/diagnostics.hpp"
#include "wormqmc/hamiltonian.hpp"
#include "wormqmc/worldline.hpp"

namespace wormqmc {

inline constexpr double kDefaultSampleConstant = 8.0;

struct EstimatorParams {
  double c_L = kDefaultTrotterConstant;
  int L = 0;  // 0: choose from c_L
  double c_S = kDefaultSampleConstant;
  std::uint64_t S = 0;  // 0: Hoeffding budget
  double fail_prob = 0.1;
  /// Share of eps given to the sampling error; the rest covers Trotter error.
  double statistical_share = 0.75;
  std::int64_t burnin = -1;    // -1: 20 M steps
  std::int64_t thinning = -1;  // -1: M steps
  std::int64_t patience = -1;  // steps without a C0 visit; -1: 10 M^2 + 1000 M
  double laziness = 0.5;
  int chains = 1;
  std::uint64_t seed = 0;
  /// > 1 switches the per-step mean to a median of that many group means.
  int median_groups = 0;
  bool allow_small_beta = false;
  bool rigorous_burnin = false;
  double rigorous_constant = 1.0;
};

struct EstimatorSchedule {
  int L = 1;
  double H_norm = 0.0;
  int k = 1;
  std::vector<double> beta_grid;  // beta_0 = 0 ... beta_k = beta
  std::uint64_t S = 1;
  std::uint64_t burnin = 0;
  std::uint64_t thinning = 1;
  std::uint64_t patience = 1;
  int M = 0;
};

/// k = ceil(beta H_norm) (1 when that is 0) and
/// S = ceil(c_S k^2 eps^-2 ln(2k / fail_prob)).
struct SampleBudget {
  int k = 1;
  std::uint64_t S = 1;
};
SampleBudget sample_budget(double beta, double eps, double H_norm, double fail_prob,
                           double c_S = kDefaultSampleConstant);

/// Grid with steps of 1/H_norm (the last one possibly shorter).
std::vector<double> beta_grid(double beta, double H_norm);

EstimatorSchedule plan(const XYHamiltonian& h, double beta, double eps, const EstimatorParams& params);

/// W_{beta_hi}(cfg) / W_{beta_lo}(cfg) on the operator string of cfg
/// (whose Trotter number must be L). Throws EstimatorError if an element at
/// beta_lo vanishes.
double ratio_observable(const WorldlineConfig& cfg, double beta_lo, double beta_hi, int L);

enum class StepMethod { Direct, Forward, Reverse };
const char* step_method_name(StepMethod m);

struct RatioEstimate {
  double beta_lo = 0.0;
  double beta_hi = 0.0;
  StepMethod method = StepMethod::Forward;
  double mean = 1.0;
  double se = 0.0;
  std::uint64_t samples = 0;
  /// Thinned inspections that landed in C2 and were skipped.
  std::uint64_t c2_skips = 0;
  double c2_fraction = 0.0;
  /// Every chain step, by sector.
  std::uint64_t c0_visits = 0;
  std::uint64_t c2_visits = 0;
  std::uint64_t steps = 0;
  double tau_int = 0.5;
  double tau_log_weight = 0.5;
  std::uint64_t burnin = 0;
  std::uint64_t adaptive_burnin = 0;
};

/// Ratio Z~(beta_hi) / Z~(beta_lo). beta_lo > 0: chain at beta_lo with the
/// forward observable. beta_lo = 0 without pair terms: direct sampling of
/// constant world lines. beta_lo = 0 with pair terms: chain at beta_hi with
/// the inverse observable W_0 / W_hi, inverted afterwards.
RatioEstimate estimate_ratio(const XYHamiltonian& h, double beta_lo, double beta_hi, const EstimatorSchedule& sched,
                             const EstimatorParams& params, std::uint64_t step_index);

struct EstimateResult {
  int n = 0;
  double beta = 0.0;
  double eps = 0.0;
  double log_Z = 0.0;
  double log_Z_se = 0.0;
  EstimatorSchedule schedule;
  std::vector<RatioEstimate> steps;
  std::uint64_t total_samples = 0;
  std::uint64_t seed = 0;
  SectorRatioReport sector;
  double runtime_seconds = 0.0;
};

EstimateResult estimate_partition_function(const XYHamiltonian& h, double beta, double eps,
                                           const EstimatorParams& params);

}  // namespace wormqmc
