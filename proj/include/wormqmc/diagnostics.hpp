#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wormqmc/chain.hpp"
#include "wormqmc/oracle.hpp"

namespace wormqmc {

struct TimeSeries {
  std::string name;
  std::vector<double> values;
  int chain_id = 0;
  std::uint64_t seed = 0;
};

struct Autocorrelation {
  double tau_int = 0.5;
  std::size_t window = 0;
  double mean = 0.0;
  double variance = 0.0;
  /// Normalized autocorrelation rho(0..window).
  std::vector<double> rho;
};

inline constexpr std::size_t kMinAutocorrelationLength = 50;

/// Sokal self-consistent window: the smallest W with W >= c * tau_int(W).
/// Throws ValidationError for series shorter than 50, non-finite values or
/// zero variance.
Autocorrelation integrated_autocorrelation(const TimeSeries& ts, double c = 6.0);

/// Standard error of the mean inflated by 2 tau_int.
double standard_error(const std::vector<double>& values, double tau_int);

double total_variation(std::span<const double> p, std::span<const double> q);

/// Exact ||delta_x P^t - pi||_TV for t = 0..horizon.
std::vector<double> empirical_tv_decay(const oracle::EnumeratedSpace& space, const oracle::TransitionMatrix& p,
                                       std::size_t start, std::size_t horizon);

/// Same, building P for `laziness` and starting from the canonical initial
/// configuration.
std::vector<double> empirical_tv_decay(const oracle::EnumeratedSpace& space, double laziness, std::size_t horizon);

/// First t with curve[t] <= threshold, or -1.
long first_crossing(const std::vector<double>& curve, double threshold);

/// gap^-1 ln(4 / pi_min), the reversible-chain bound on the time to TV 1/4.
double tv_quarter_bound(double gap, double pi_min);

/// Visit frequencies of the sampler over the enumerated states, starting
/// from the canonical initial configuration and counting every step after
/// `burnin`.
std::vector<double> sampled_distribution(const oracle::EnumeratedSpace& space, const ChainParams& params,
                                         std::uint64_t steps, std::uint64_t burnin = 0);

struct SectorRatioReport {
  std::uint64_t c0_visits = 0;
  std::uint64_t c2_visits = 0;
  double ratio = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double effective_samples = 0.0;
  double M = 0.0;
  double anomaly_multiple = 100.0;
  bool anomaly = false;
};

/// Ratio of C2 to C0 visits with a Wilson interval (z = 1.96) on the C2
/// fraction, using n / (2 tau_int) effective samples. Flags ratios above
/// anomaly_multiple * M.
SectorRatioReport sector_ratio_monitor(std::uint64_t c0_visits, std::uint64_t c2_visits, double M,
                                       double tau_int = 0.5, double anomaly_multiple = 100.0);

/// ceil(factor * tau_int * thinning).
std::uint64_t adaptive_burnin(double tau_int, std::uint64_t thinning, double factor = 20.0);

/// Tab-separated table with a header row.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);

}  // namespace wormqmc
