#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wormqmc/hamiltonian.hpp"
#include "wormqmc/worldline.hpp"

namespace wormqmc::oracle {

inline constexpr int kDenseQubitCap = 10;
inline constexpr double kDefaultStateCap = 1e6;
inline constexpr int kGapDimensionCap = 4000;

/// Dense H in the computational basis (bit q of the index is qubit q),
/// assembled from Pauli actions.
Eigen::MatrixXd dense_hamiltonian(const XYHamiltonian& h);

/// Dense I + delta (a XX - b YY) or I - delta d Z on n qubits.
Eigen::MatrixXd dense_factor(const OperatorDescriptor& op, double delta, int n);

/// Tr exp(-beta H) through a symmetric eigendecomposition.
double exact_Z(const XYHamiltonian& h, double beta);

/// Tr exp(-beta H) through a scaling-and-squaring Taylor series.
double exact_Z_series(const XYHamiltonian& h, double beta);

/// Tr[(C C^T)^L] with delta = beta / 2L, from dense factors.
double exact_trotterized_Z(const XYHamiltonian& h, double beta, int L);

/// Rough size of C0 + C2 for a layout (exact C0 count for small n).
double estimate_state_count(const WorldlineLayout& layout);

/// Every nonzero-weight configuration of C0 and C2 with its stationary
/// probability. C2 weights carry the factor 2 / (M1 + 2 M2) by default.
class EnumeratedSpace {
 public:
  EnumeratedSpace(LayoutPtr layout, std::vector<WorldlineConfig> states, double c2_factor);

  const WorldlineLayout& layout() const { return *layout_; }
  const LayoutPtr& layout_ptr() const { return layout_; }
  std::size_t size() const { return states_.size(); }
  const WorldlineConfig& state(std::size_t k) const { return states_[k]; }
  std::span<const WorldlineConfig> states() const { return states_; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> pi() const { return pi_; }
  bool in_c2(std::size_t k) const { return states_[k].head_count() == 2; }

  /// Index of a configuration, or -1.
  int find(const WorldlineConfig& cfg) const;

  double c2_factor() const { return c2_factor_; }
  double sum_c0() const { return sum_c0_; }
  double sum_c2() const { return sum_c2_; }
  double w_total() const { return sum_c0_ + c2_factor_ * sum_c2_; }
  std::size_t c0_count() const { return c0_count_; }
  /// (sum over C2 of pi) / (sum over C0 of pi).
  double sector_ratio() const { return c2_factor_ * sum_c2_ / sum_c0_; }

  /// Same states, stationary vector recomputed with another C2 factor.
  EnumeratedSpace with_c2_factor(double factor) const;

  /// The factor the chain's stationary law uses.
  static double standard_c2_factor(const OperatorSchedule& s) { return 2.0 / (s.M1() + 2.0 * s.M2()); }

 private:
  LayoutPtr layout_;
  std::vector<WorldlineConfig> states_;
  std::vector<double> weights_;
  std::vector<double> pi_;
  std::unordered_map<std::string, int> index_;
  double c2_factor_;
  double sum_c0_ = 0.0;
  double sum_c2_ = 0.0;
  std::size_t c0_count_ = 0;
};

/// Exhaustive enumeration by branching over nonzero local elements.
/// Throws CapExceeded when the estimated or actual size exceeds `cap`.
EnumeratedSpace enumerate_space(LayoutPtr layout, double cap = kDefaultStateCap);

/// Row-sparse stochastic matrix; rows sorted by column.
class TransitionMatrix {
 public:
  using Row = std::vector<std::pair<int, double>>;

  explicit TransitionMatrix(std::vector<Row> rows) : rows_(std::move(rows)) {}
  static TransitionMatrix from_dense(const std::vector<std::vector<double>>& p);

  std::size_t size() const { return rows_.size(); }
  const Row& row(std::size_t i) const { return rows_[i]; }
  double at(std::size_t i, std::size_t j) const;

  /// v P for a row vector v.
  std::vector<double> left_multiply(std::span<const double> v) const;

 private:
  std::vector<Row> rows_;
};

/// Exact kernel of the chain: junction choice x heat-bath probability per
/// candidate, plus the hold mass on the diagonal.
TransitionMatrix build_transition_matrix(const EnumeratedSpace& space, double laziness);

double row_sum_residual(const TransitionMatrix& p);
/// max_j |(pi P)_j - pi_j|
double stationarity_residual(const TransitionMatrix& p, std::span<const double> pi);
/// max over pairs of |pi_i P_ij - pi_j P_ji| / max(pi_i P_ij, pi_j P_ji).
double detailed_balance_residual(const TransitionMatrix& p, std::span<const double> pi);

struct ClassStructure {
  int class_count = 0;
  std::vector<int> class_of;
  std::vector<std::size_t> class_sizes;
};

/// Strongly connected components of the graph P_ij > 0.
ClassStructure communicating_classes(const TransitionMatrix& p);

struct GapResult {
  bool irreducible = false;
  double gap = 0.0;
  double lambda2 = 1.0;
  ClassStructure classes;
};

/// 1 - lambda_2 of D^{1/2} P D^{-1/2}. Reducible chains report their class
/// structure and gap 0. Throws ValidationError if P is not reversible
/// with respect to pi.
GapResult spectral_gap(const TransitionMatrix& p, std::span<const double> pi);

}  // namespace wormqmc::oracle
