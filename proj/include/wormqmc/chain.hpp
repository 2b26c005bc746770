#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wormqmc/rng.hpp"
#include "wormqmc/worldline.hpp"

namespace wormqmc {

/// The locus of one heat-bath update: an operator entered through one leg.
struct Junction {
  int op = 0;
  LegId entry_leg = 0;
  SegmentId entry_segment = 0;
};

/// Junction reached by inserting a worm at a leg (C0 moves).
Junction leg_junction(const WorldlineLayout& layout, LegId leg);

/// Junction reached by pushing head `head` (0 or 1) up or down (C2 moves).
Junction head_junction(const WorldlineConfig& cfg, int head, bool upward);

struct Candidate {
  int exit_local = 0;
  LegId exit_leg = 0;
  unsigned local_state = 0;  // operator state after the move
  double weight = 0.0;       // its matrix element
};

/// Heat-bath options at a junction, one per exit leg in leg order. The
/// exit equal to the entry is the bounce (configuration unchanged).
struct CandidateSet {
  Junction junction;
  std::array<Candidate, 4> items{};
  int size = 0;
  double total = 0.0;

  std::span<const Candidate> candidates() const { return {items.data(), static_cast<std::size_t>(size)}; }
  double probability(int k) const { return items[static_cast<std::size_t>(k)].weight / total; }
};

CandidateSet candidates(const WorldlineConfig& cfg, const Junction& j);

struct ChainParams {
  double laziness = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  /// Recompute the log weight from scratch every this many steps.
  std::uint64_t refresh_interval = std::uint64_t{1} << 20;
};

enum class MoveKind : std::uint8_t { Hold = 0, Insert = 1, Move = 2 };

struct StepRecord {
  std::uint64_t step = 0;
  MoveKind kind = MoveKind::Hold;
  bool accepted = false;
  /// Global id of the entry leg; kNoJunction for holds.
  std::uint32_t junction = 0;

  static constexpr std::uint32_t kNoJunction = 0xFFFFFFFFu;
};

struct RunStats {
  std::uint64_t steps = 0;
  std::uint64_t c0_visits = 0;
  std::uint64_t c2_visits = 0;
  std::uint64_t accepted = 0;
  std::uint64_t holds = 0;

  double acceptance_rate() const {
    const auto tried = steps - holds;
    return tried == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(tried);
  }
};

/// The operator-loop Markov chain. Owns its configuration and RNG stream;
/// one chain is driven by one thread.
class Chain {
 public:
  Chain(WorldlineConfig cfg, ChainParams params);

  StepRecord step();

  using Observer = std::function<void(const Chain&, const StepRecord&)>;
  /// Apply `steps` steps; `observer` (if set) sees every `stride`-th record.
  RunStats run(std::uint64_t steps, const Observer& observer = {}, std::uint64_t stride = 1);

  const WorldlineConfig& config() const { return cfg_; }
  const ChainParams& params() const { return params_; }
  std::uint64_t steps_taken() const { return counter_; }
  /// Incrementally maintained log weight.
  double log_weight() const { return log_weight_; }
  /// Drift between the incremental and the recomputed log weight.
  double log_weight_drift() const { return std::abs(log_weight_ - cfg_.log_weight()); }
  void refresh_log_weight() { log_weight_ = cfg_.log_weight(); }

 private:
  WorldlineConfig cfg_;
  ChainParams params_;
  Rng rng_;
  std::uint64_t counter_ = 0;
  double log_weight_ = 0.0;
};

/// Worst-case mixing bound with leading constant `constant`, log factors
/// dropped: constant * c_min * n^16 * beta^8 * eps^-4. Astronomically
/// conservative; only available behind an explicit option.
double rigorous_burnin(const OperatorSchedule& schedule, double eps, double c_min, double constant = 1.0);

/// Binary step trace. Header: "WQTR", u32 version, u32 record size; then
/// 16-byte little-endian records {u64 step, u32 junction, u8 kind, u8
/// accepted, u16 zero}.
class TraceWriter {
 public:
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::uint32_t kRecordSize = 16;

  explicit TraceWriter(const std::string& path);
  void write(const StepRecord& r);
  std::uint64_t records() const { return count_; }

 private:
  std::ofstream out_;
  std::uint64_t count_ = 0;
};

std::vector<StepRecord> read_trace(const std::string& path);

}  // namespace wormqmc
