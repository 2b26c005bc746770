#include "wormqmc/worldline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "wormqmc/errors.hpp"

namespace wormqmc {

namespace {

// Local leg indices of qubit slot `slot` (0 -> q0, 1 -> q1).
int in_leg(const OperatorDescriptor&, int slot) { return slot; }
int out_leg(const OperatorDescriptor& op, int slot) { return op.arity() + slot; }

}  // namespace

WorldlineLayout::WorldlineLayout(OperatorSchedule schedule) : schedule_(std::move(schedule)) {
  const int M = schedule_.M();
  const int n = schedule_.n();
  leg_offset_.resize(static_cast<std::size_t>(M));
  int offset = 0;
  for (int m = 0; m < M; ++m) {
    leg_offset_[static_cast<std::size_t>(m)] = offset;
    const int legs = schedule_.op(m).legs();
    for (int k = 0; k < legs; ++k) leg_op_.push_back(m);
    offset += legs;
  }
  leg_segment_.assign(static_cast<std::size_t>(offset), -1);

  // (op, slot) occurrences per qubit in schedule order.
  std::vector<std::vector<std::pair<int, int>>> visits(static_cast<std::size_t>(n));
  for (int m = 0; m < M; ++m) {
    const auto& op = schedule_.op(m);
    visits[static_cast<std::size_t>(op.q0)].push_back({m, 0});
    if (op.kind == OpKind::Pair) visits[static_cast<std::size_t>(op.q1)].push_back({m, 1});
  }

  qubit_seg_offset_.push_back(0);
  for (int q = 0; q < n; ++q) {
    const auto& v = visits[static_cast<std::size_t>(q)];
    const auto K = v.size();
    if (K < 2) throw StructureError("every qubit needs at least two operators");
    for (std::size_t k = 0; k < K; ++k) {
      const auto [upper, upper_slot] = v[k];
      const auto [lower, lower_slot] = v[(k + 1) % K];
      const auto s = static_cast<SegmentId>(segments_.size());
      segments_.push_back({q, upper, lower});
      const LegId up = leg_id(upper, out_leg(schedule_.op(upper), upper_slot));
      const LegId lo = leg_id(lower, in_leg(schedule_.op(lower), lower_slot));
      seg_upper_leg_.push_back(up);
      seg_lower_leg_.push_back(lo);
      leg_segment_[static_cast<std::size_t>(up)] = s;
      leg_segment_[static_cast<std::size_t>(lo)] = s;
    }
    qubit_seg_offset_.push_back(static_cast<int>(segments_.size()));
  }
}

const char* sector_name(Sector s) { return s == Sector::C0 ? "C0" : "C2"; }

WorldlineConfig::WorldlineConfig(LayoutPtr layout, std::vector<std::uint8_t> bits)
    : layout_(std::move(layout)), bits_(std::move(bits)) {
  if (bits_.size() != static_cast<std::size_t>(layout_->op_count()))
    throw StructureError("leg-bit vector does not match the operator count");
}

WorldlineConfig WorldlineConfig::canonical_initial(LayoutPtr layout) {
  const auto M = static_cast<std::size_t>(layout->op_count());
  return WorldlineConfig(std::move(layout), std::vector<std::uint8_t>(M, 0));
}

WorldlineConfig WorldlineConfig::from_leg_bits(LayoutPtr layout, std::vector<std::uint8_t> bits) {
  WorldlineConfig cfg(std::move(layout), std::move(bits));
  for (SegmentId s = 0; s < cfg.layout_->segment_count(); ++s) {
    if (!cfg.segment_mismatched(s)) continue;
    if (cfg.head_count_ == 2) throw StructureError("more than two segments carry a flip");
    cfg.heads_[static_cast<std::size_t>(cfg.head_count_++)] = s;
  }
  return cfg;
}

WorldlineConfig WorldlineConfig::constant(LayoutPtr layout, std::uint64_t basis) {
  const auto& sched = layout->schedule();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(sched.M()), 0);
  for (int m = 0; m < sched.M(); ++m) {
    const auto& op = sched.op(m);
    unsigned local = (basis >> op.q0) & 1u;
    if (op.kind == OpKind::Pair) local |= ((basis >> op.q1) & 1u) << 1;
    bits[static_cast<std::size_t>(m)] = static_cast<std::uint8_t>(local | (local << op.arity()));
  }
  return WorldlineConfig(std::move(layout), std::move(bits));
}

bool WorldlineConfig::segment_mismatched(SegmentId s) const {
  return leg_bit(layout_->segment_upper_leg(s)) != leg_bit(layout_->segment_lower_leg(s));
}

bool WorldlineConfig::is_head(SegmentId s) const {
  for (int k = 0; k < head_count_; ++k)
    if (heads_[static_cast<std::size_t>(k)] == s) return true;
  return false;
}

Sector WorldlineConfig::sector() const {
  if (head_count_ == 0) return Sector::C0;
  if (head_count_ == 2) return Sector::C2;
  throw StructureError("configuration carries " + std::to_string(head_count_) +
                       " worm heads; only 0 or 2 are valid");
}

void WorldlineConfig::check_consistency() const {
  int mismatched = 0;
  for (SegmentId s = 0; s < layout_->segment_count(); ++s) {
    const bool mis = segment_mismatched(s);
    if (mis != is_head(s))
      throw StructureError("segment " + std::to_string(s) +
                           (mis ? " has differing ends but no worm head"
                                : " carries a worm head but its ends agree"));
    mismatched += mis;
  }
  if (mismatched != head_count_) throw StructureError("worm-head bookkeeping out of sync");
  (void)sector();
}

double WorldlineConfig::weight() const {
  check_consistency();
  const auto& sched = schedule();
  double w = 1.0;
  for (int m = 0; m < sched.M(); ++m) w *= local_element(sched.op(m), sched.delta(), local_state(m));
  return w;
}

double WorldlineConfig::log_weight_at_delta(double delta) const {
  const auto& sched = schedule();
  double lw = 0.0;
  for (int m = 0; m < sched.M(); ++m) {
    const double e = local_element(sched.op(m), delta, local_state(m));
    if (e == 0.0) return -std::numeric_limits<double>::infinity();
    lw += std::log(e);
  }
  return lw;
}

double WorldlineConfig::log_weight() const { return log_weight_at_delta(schedule().delta()); }

int WorldlineConfig::kink_count() const {
  const auto& sched = schedule();
  int k = 0;
  for (int m = 0; m < sched.M(); ++m) {
    const auto& op = sched.op(m);
    if (op.kind != OpKind::Pair) continue;
    const unsigned s = local_state(m);
    k += (s & 3u) != (s >> 2);
  }
  return k;
}

void WorldlineConfig::toggle_head(SegmentId s) {
  for (int k = 0; k < head_count_; ++k) {
    if (heads_[static_cast<std::size_t>(k)] == s) {
      heads_[static_cast<std::size_t>(k)] = heads_[static_cast<std::size_t>(head_count_ - 1)];
      heads_[static_cast<std::size_t>(--head_count_)] = -1;
      return;
    }
  }
  if (head_count_ == 2) throw StructureError("move would create a third worm head");
  heads_[static_cast<std::size_t>(head_count_++)] = s;
}

void WorldlineConfig::pass_through(LegId entry, LegId exit) {
  if (entry == exit) return;
  const int m = layout_->leg_op(entry);
  if (layout_->leg_op(exit) != m) throw StructureError("entry and exit legs belong to different operators");
  bits_[static_cast<std::size_t>(m)] ^=
      static_cast<std::uint8_t>((1u << layout_->leg_local(entry)) | (1u << layout_->leg_local(exit)));
  toggle_head(layout_->leg_segment(entry));
  toggle_head(layout_->leg_segment(exit));
}

std::array<SegmentId, 2> WorldlineConfig::sorted_heads() const {
  std::array<SegmentId, 2> h = heads_;
  if (h[0] > h[1]) std::swap(h[0], h[1]);
  return h;
}

std::string render(const WorldlineConfig& cfg) {
  const auto& lay = cfg.layout();
  const auto& sched = cfg.schedule();
  const int n = sched.n();
  std::ostringstream os;
  os << "# worldline n=" << n << " M=" << sched.M() << " L=" << sched.trotter_number() << " heads="
     << cfg.head_count() << "\n";
  for (int m = 0; m < sched.M(); ++m) {
    const auto& op = sched.op(m);
    const unsigned s = cfg.local_state(m);
    char label[16];
    std::snprintf(label, sizeof label, "%4d %c ", m, op.kind == OpKind::Pair ? 'P' : 'F');
    os << label;
    for (int q = 0; q < n; ++q) {
      int slot = -1;
      if (q == op.q0) slot = 0;
      if (op.kind == OpKind::Pair && q == op.q1) slot = 1;
      if (slot < 0) {
        os << "  | ";
      } else {
        os << ' ' << ((s >> slot) & 1u) << '>' << ((s >> (op.arity() + slot)) & 1u);
      }
    }
    os << "\n";
    bool any = false;
    std::string marks = "       ";
    for (int q = 0; q < n; ++q) {
      bool head = false;
      for (SegmentId h : cfg.heads())
        if (lay.segment(h).upper_op == m && lay.segment(h).qubit == q) head = true;
      marks += head ? "  X " : "    ";
      any = any || head;
    }
    if (any) {
      marks[5] = '~';
      while (!marks.empty() && marks.back() == ' ') marks.pop_back();
      os << marks << "\n";
    }
  }
  return os.str();
}

DifferenceDecomposition decompose_difference(const WorldlineConfig& x, const WorldlineConfig& y) {
  if (x.layout_ptr() != y.layout_ptr() && x.leg_bits().size() != y.leg_bits().size())
    throw ValidationError("configurations live on different schedules");
  const Sector sx = x.sector();
  const Sector sy = y.sector();
  if (sx == Sector::C2 && sy == Sector::C2)
    throw ValidationError("decompose_difference needs at least one configuration in C0");

  const auto& lay = x.layout();
  const auto& sched = x.schedule();
  const int legs = lay.leg_count();
  std::vector<int> op_partner(static_cast<std::size_t>(legs), -1);
  std::vector<int> seg_partner(static_cast<std::size_t>(legs), -1);
  std::vector<char> differs(static_cast<std::size_t>(legs), 0);
  DifferenceDecomposition out;

  for (int m = 0; m < sched.M(); ++m) {
    const unsigned xs = x.local_state(m);
    const unsigned diff = xs ^ y.local_state(m);
    if (diff == 0) continue;
    const auto& op = sched.op(m);
    const double delta = sched.delta();
    if (local_element(op, delta, xs) == 0.0 || local_element(op, delta, y.local_state(m)) == 0.0)
      throw ValidationError("operator " + std::to_string(m) + " has a zero element; weights must be nonzero");
    for (int k = 0; k < op.legs(); ++k)
      if ((diff >> k) & 1u) differs[static_cast<std::size_t>(lay.leg_id(m, k))] = 1;
    auto join = [&](int a, int b) {
      const LegId la = lay.leg_id(m, a);
      const LegId lb = lay.leg_id(m, b);
      op_partner[static_cast<std::size_t>(la)] = lb;
      op_partner[static_cast<std::size_t>(lb)] = la;
    };
    const int count = std::popcount(diff);
    if (count == 2) {
      const int a = std::countr_zero(diff);
      const int b = std::countr_zero(diff & (diff - 1));
      join(a, b);
    } else if (count == 4) {
      const bool diagonal = (xs & 3u) == (xs >> 2);
      if (diagonal) {
        join(0, 2);
        join(1, 3);
        out.routing.push_back({m, Routing::Vertical});
      } else {
        join(0, 1);
        join(2, 3);
        out.routing.push_back({m, Routing::Horizontal});
      }
    } else {
      throw StructureError("operator " + std::to_string(m) + " differs on an odd number of legs");
    }
  }

  std::vector<LegId> endpoints;
  for (SegmentId s = 0; s < lay.segment_count(); ++s) {
    const LegId u = lay.segment_upper_leg(s);
    const LegId l = lay.segment_lower_leg(s);
    const bool du = differs[static_cast<std::size_t>(u)];
    const bool dl = differs[static_cast<std::size_t>(l)];
    if (du && dl) {
      seg_partner[static_cast<std::size_t>(u)] = l;
      seg_partner[static_cast<std::size_t>(l)] = u;
    } else if (du || dl) {
      if (x.is_head(s) == y.is_head(s))
        throw StructureError("segment " + std::to_string(s) + " is cut without a worm head");
      endpoints.push_back(du ? u : l);
    }
  }

  std::vector<char> seen(static_cast<std::size_t>(legs), 0);
  // Walk alternating operator and segment hops starting with the operator hop.
  auto walk = [&](LegId start) {
    std::vector<LegId> path;
    LegId cur = start;
    bool via_op = true;
    while (cur >= 0 && !seen[static_cast<std::size_t>(cur)]) {
      seen[static_cast<std::size_t>(cur)] = 1;
      path.push_back(cur);
      cur = via_op ? op_partner[static_cast<std::size_t>(cur)] : seg_partner[static_cast<std::size_t>(cur)];
      via_op = !via_op;
    }
    return path;
  };

  std::sort(endpoints.begin(), endpoints.end());
  for (LegId e : endpoints)
    if (!seen[static_cast<std::size_t>(e)]) out.strings.push_back(walk(e));
  for (LegId leg = 0; leg < legs; ++leg)
    if (differs[static_cast<std::size_t>(leg)] && !seen[static_cast<std::size_t>(leg)])
      out.loops.push_back(walk(leg));
  return out;
}

WorldlineConfig apply_flips(const WorldlineConfig& x, const DifferenceDecomposition& d) {
  std::vector<std::uint8_t> bits(x.leg_bits().begin(), x.leg_bits().end());
  const auto& lay = x.layout();
  auto flip = [&](LegId leg) {
    bits[static_cast<std::size_t>(lay.leg_op(leg))] ^= static_cast<std::uint8_t>(1u << lay.leg_local(leg));
  };
  for (const auto& loop : d.loops)
    for (LegId leg : loop) flip(leg);
  for (const auto& s : d.strings)
    for (LegId leg : s) flip(leg);
  return WorldlineConfig::from_leg_bits(x.layout_ptr(), std::move(bits));
}

}  // namespace wormqmc
