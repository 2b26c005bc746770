#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wormqmc/hamiltonian.hpp"

namespace wormqmc {

using LegId = int;
using SegmentId = int;

/// Interval of one qubit's world line between two consecutive operators
/// acting on it. upper_op's out-leg bounds it from above, lower_op's in-leg
/// from below (imaginary time is periodic, so the last segment wraps).
struct Segment {
  int qubit = 0;
  int upper_op = 0;
  int lower_op = 0;
};

/// Immutable index tables over an operator schedule: global leg ids,
/// leg <-> segment adjacency and per-qubit segment lists.
class WorldlineLayout {
 public:
  explicit WorldlineLayout(OperatorSchedule schedule);

  static std::shared_ptr<const WorldlineLayout> make(OperatorSchedule schedule) {
    return std::make_shared<const WorldlineLayout>(std::move(schedule));
  }

  const OperatorSchedule& schedule() const { return schedule_; }
  int op_count() const { return schedule_.M(); }
  int leg_count() const { return static_cast<int>(leg_op_.size()); }
  int segment_count() const { return static_cast<int>(segments_.size()); }

  LegId leg_id(int op, int local) const { return leg_offset_[static_cast<std::size_t>(op)] + local; }
  int leg_op(LegId leg) const { return leg_op_[static_cast<std::size_t>(leg)]; }
  int leg_local(LegId leg) const { return leg - leg_offset_[static_cast<std::size_t>(leg_op(leg))]; }
  SegmentId leg_segment(LegId leg) const { return leg_segment_[static_cast<std::size_t>(leg)]; }

  const Segment& segment(SegmentId s) const { return segments_[static_cast<std::size_t>(s)]; }
  /// Out-leg of the operator above the segment.
  LegId segment_upper_leg(SegmentId s) const { return seg_upper_leg_[static_cast<std::size_t>(s)]; }
  /// In-leg of the operator below the segment.
  LegId segment_lower_leg(SegmentId s) const { return seg_lower_leg_[static_cast<std::size_t>(s)]; }
  /// Segments of qubit q are the contiguous id range [begin, end).
  SegmentId qubit_segment_begin(int q) const { return qubit_seg_offset_[static_cast<std::size_t>(q)]; }
  SegmentId qubit_segment_end(int q) const { return qubit_seg_offset_[static_cast<std::size_t>(q) + 1]; }

 private:
  OperatorSchedule schedule_;
  std::vector<int> leg_offset_;
  std::vector<int> leg_op_;
  std::vector<SegmentId> leg_segment_;
  std::vector<Segment> segments_;
  std::vector<LegId> seg_upper_leg_;
  std::vector<LegId> seg_lower_leg_;
  std::vector<int> qubit_seg_offset_;
};

using LayoutPtr = std::shared_ptr<const WorldlineLayout>;

enum class Sector { C0, C2 };

const char* sector_name(Sector s);

/// Bit assignment on every operator leg plus the worm-head segments.
///
/// Leg bits are packed per operator (bit k = local leg k). A segment carries
/// a worm head exactly when its two bounding leg bits differ; the head's
/// position inside the segment is not stored.
class WorldlineConfig {
 public:
  /// All legs 0, no heads.
  static WorldlineConfig canonical_initial(LayoutPtr layout);

  /// Heads derived from the bits. May produce an invalid head count, which
  /// sector() reports.
  static WorldlineConfig from_leg_bits(LayoutPtr layout, std::vector<std::uint8_t> bits);

  /// Constant world lines: every leg on qubit q carries bit q of `basis`.
  static WorldlineConfig constant(LayoutPtr layout, std::uint64_t basis);

  const WorldlineLayout& layout() const { return *layout_; }
  const LayoutPtr& layout_ptr() const { return layout_; }
  const OperatorSchedule& schedule() const { return layout_->schedule(); }

  unsigned local_state(int op) const { return bits_[static_cast<std::size_t>(op)]; }
  std::span<const std::uint8_t> leg_bits() const { return bits_; }
  bool leg_bit(LegId leg) const {
    return (bits_[static_cast<std::size_t>(layout_->leg_op(leg))] >> layout_->leg_local(leg)) & 1u;
  }

  int head_count() const { return head_count_; }
  std::span<const SegmentId> heads() const { return {heads_.data(), static_cast<std::size_t>(head_count_)}; }
  bool is_head(SegmentId s) const;

  /// C0 for no heads, C2 for two; StructureError otherwise.
  Sector sector() const;

  /// Product of local matrix elements. Worm heads contribute 1.
  double weight() const;
  /// Sum of log elements; -infinity when some element is 0.
  double log_weight() const;
  /// Weight of the same legs under a schedule with a different delta.
  double log_weight_at_delta(double delta) const;

  /// Flip the bits of `entry` and `exit` (two legs of one operator) and
  /// toggle worm heads on their segments. entry == exit is a no-op. This is
  /// the single mutation used by every Markov move.
  void pass_through(LegId entry, LegId exit);

  /// Throws StructureError unless the stored heads are exactly the
  /// segments with mismatched ends and the head count is 0 or 2.
  void check_consistency() const;

  /// Canonical identity: the packed leg bits (heads follow from them).
  std::string key() const { return {bits_.begin(), bits_.end()}; }

  /// Number of off-diagonal two-qubit elements.
  int kink_count() const;

  friend bool operator==(const WorldlineConfig& x, const WorldlineConfig& y) {
    return x.bits_ == y.bits_ && x.sorted_heads() == y.sorted_heads();
  }

 private:
  WorldlineConfig(LayoutPtr layout, std::vector<std::uint8_t> bits);
  void toggle_head(SegmentId s);
  bool segment_mismatched(SegmentId s) const;
  std::array<SegmentId, 2> sorted_heads() const;

  LayoutPtr layout_;
  std::vector<std::uint8_t> bits_;
  std::array<SegmentId, 2> heads_{-1, -1};
  int head_count_ = 0;
};

/// Line-oriented rendering: one row per operator, one column per qubit.
/// A column shows "in>out" where the operator acts and "|" elsewhere; a
/// "~" row after operator m marks head segments that start below m.
std::string render(const WorldlineConfig& cfg);

enum class Routing : std::uint8_t { Vertical, Horizontal };

/// Differences between two configurations split into closed loops and at
/// most one open string. Paths are ordered leg lists, alternating
/// operator-internal and segment hops.
struct DifferenceDecomposition {
  std::vector<std::vector<LegId>> loops;
  std::vector<std::vector<LegId>> strings;
  /// Operators where all four legs differ, with the routing used.
  std::vector<std::pair<int, Routing>> routing;

  bool empty() const { return loops.empty() && strings.empty(); }
};

/// Requires both configs on the same layout, nonzero weights, and at least
/// one of them in C0. Where all four legs of a two-qubit operator differ,
/// the legs are joined vertically (along each world line) when x's local
/// state is diagonal and horizontally (in-in, out-out) when it is
/// off-diagonal; both choices keep every intermediate weight nonzero.
DifferenceDecomposition decompose_difference(const WorldlineConfig& x, const WorldlineConfig& y);

/// Flip every leg on every loop and string of d.
WorldlineConfig apply_flips(const WorldlineConfig& x, const DifferenceDecomposition& d);

}  // namespace wormqmc
