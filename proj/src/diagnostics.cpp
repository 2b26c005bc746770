#include "wormqmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "wormqmc/errors.hpp"

namespace wormqmc {

Autocorrelation integrated_autocorrelation(const TimeSeries& ts, double c) {
  const auto& x = ts.values;
  const std::size_t N = x.size();
  if (N < kMinAutocorrelationLength)
    throw ValidationError("series '" + ts.name + "' has " + std::to_string(N) + " values; need at least " +
                          std::to_string(kMinAutocorrelationLength));
  for (double v : x)
    if (!std::isfinite(v)) throw ValidationError("series '" + ts.name + "' contains non-finite values");

  Autocorrelation out;
  out.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(N);
  double c0 = 0.0;
  for (double v : x) c0 += (v - out.mean) * (v - out.mean);
  c0 /= static_cast<double>(N);
  out.variance = c0;
  if (!(c0 > 0.0) || c0 <= 1e-300) throw ValidationError("series '" + ts.name + "' has zero variance");

  out.rho.push_back(1.0);
  double tau = 0.5;
  const std::size_t max_lag = N / 2;
  for (std::size_t t = 1; t <= max_lag; ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k + t < N; ++k) s += (x[k] - out.mean) * (x[k + t] - out.mean);
    const double r = s / static_cast<double>(N) / c0;
    out.rho.push_back(r);
    tau += r;
    out.window = t;
    if (static_cast<double>(t) >= c * tau) break;
  }
  out.tau_int = std::max(tau, 0.5);
  return out;
}

double standard_error(const std::vector<double>& values, double tau_int) {
  const std::size_t N = values.size();
  if (N < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(N);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(N - 1);
  return std::sqrt(var * 2.0 * std::max(tau_int, 0.5) / static_cast<double>(N));
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("distributions of different size");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

std::vector<double> empirical_tv_decay(const oracle::EnumeratedSpace& space, const oracle::TransitionMatrix& p,
                                       std::size_t start, std::size_t horizon) {
  if (start >= space.size()) throw ValidationError("start state outside the enumerated space");
  std::vector<double> v(space.size(), 0.0);
  v[start] = 1.0;
  std::vector<double> curve;
  curve.reserve(horizon + 1);
  curve.push_back(total_variation(v, space.pi()));
  for (std::size_t t = 1; t <= horizon; ++t) {
    v = p.left_multiply(v);
    curve.push_back(total_variation(v, space.pi()));
  }
  return curve;
}

std::vector<double> empirical_tv_decay(const oracle::EnumeratedSpace& space, double laziness, std::size_t horizon) {
  const auto P = oracle::build_transition_matrix(space, laziness);
  const int start = space.find(WorldlineConfig::canonical_initial(space.layout_ptr()));
  if (start < 0) throw StructureError("canonical initial configuration missing from enumeration");
  return empirical_tv_decay(space, P, static_cast<std::size_t>(start), horizon);
}

long first_crossing(const std::vector<double>& curve, double threshold) {
  for (std::size_t t = 0; t < curve.size(); ++t)
    if (curve[t] <= threshold) return static_cast<long>(t);
  return -1;
}

double tv_quarter_bound(double gap, double pi_min) {
  if (!(gap > 0.0)) return std::numeric_limits<double>::infinity();
  return std::log(4.0 / pi_min) / gap;
}

std::vector<double> sampled_distribution(const oracle::EnumeratedSpace& space, const ChainParams& params,
                                         std::uint64_t steps, std::uint64_t burnin) {
  Chain chain(WorldlineConfig::canonical_initial(space.layout_ptr()), params);
  chain.run(burnin);
  std::vector<std::uint64_t> counts(space.size(), 0);
  int k = space.find(chain.config());
  for (std::uint64_t t = 0; t < steps; ++t) {
    if (chain.step().accepted) k = space.find(chain.config());
    if (k < 0) throw StructureError("sampler left the enumerated space");
    ++counts[static_cast<std::size_t>(k)];
  }
  std::vector<double> freq(space.size(), 0.0);
  for (std::size_t k = 0; k < counts.size(); ++k)
    freq[k] = static_cast<double>(counts[k]) / static_cast<double>(std::max<std::uint64_t>(steps, 1));
  return freq;
}

SectorRatioReport sector_ratio_monitor(std::uint64_t c0_visits, std::uint64_t c2_visits, double M, double tau_int,
                                       double anomaly_multiple) {
  SectorRatioReport r;
  r.c0_visits = c0_visits;
  r.c2_visits = c2_visits;
  r.M = M;
  r.anomaly_multiple = anomaly_multiple;
  const double total = static_cast<double>(c0_visits) + static_cast<double>(c2_visits);
  if (total == 0.0) return r;
  const double inf = std::numeric_limits<double>::infinity();
  r.ratio = c0_visits == 0 ? inf : static_cast<double>(c2_visits) / static_cast<double>(c0_visits);

  const double n = total / (2.0 * std::max(tau_int, 0.5));
  r.effective_samples = n;
  const double z = 1.96;
  const double p = static_cast<double>(c2_visits) / total;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  const double lo = std::max(0.0, centre - half);
  const double hi = std::min(1.0, centre + half);
  r.lower = lo / (1.0 - lo);
  r.upper = hi >= 1.0 ? inf : hi / (1.0 - hi);
  r.anomaly = r.ratio > anomaly_multiple * M;
  return r;
}

std::uint64_t adaptive_burnin(double tau_int, std::uint64_t thinning, double factor) {
  return static_cast<std::uint64_t>(std::ceil(factor * std::max(tau_int, 0.5) * static_cast<double>(thinning)));
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "\t" : "") << header[k];
  out << '\n';
  char buf[64];
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      out << (k ? "\t" : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace wormqmc
