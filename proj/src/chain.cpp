#include "wormqmc/chain.hpp"

#include <cassert>
#include <cmath>
#include <cstring>

#include "wormqmc/errors.hpp"

namespace wormqmc {

Junction leg_junction(const WorldlineLayout& layout, LegId leg) {
  return {layout.leg_op(leg), leg, layout.leg_segment(leg)};
}

Junction head_junction(const WorldlineConfig& cfg, int head, bool upward) {
  const auto& lay = cfg.layout();
  const SegmentId s = cfg.heads()[static_cast<std::size_t>(head)];
  const LegId leg = upward ? lay.segment_upper_leg(s) : lay.segment_lower_leg(s);
  return {lay.leg_op(leg), leg, s};
}

CandidateSet candidates(const WorldlineConfig& cfg, const Junction& j) {
  const auto& lay = cfg.layout();
  const auto& sched = cfg.schedule();
  const auto& op = sched.op(j.op);
  const int entry = lay.leg_local(j.entry_leg);
  const unsigned state = cfg.local_state(j.op);
  CandidateSet set;
  set.junction = j;
  set.size = op.legs();
  for (int e = 0; e < set.size; ++e) {
    auto& c = set.items[static_cast<std::size_t>(e)];
    c.exit_local = e;
    c.exit_leg = lay.leg_id(j.op, e);
    c.local_state = state ^ (1u << entry) ^ (1u << e);
    c.weight = local_element(op, sched.delta(), c.local_state);
    set.total += c.weight;
  }
  return set;
}

Chain::Chain(WorldlineConfig cfg, ChainParams params)
    : cfg_(std::move(cfg)), params_(params), rng_(params.seed, params.stream) {
  if (!(params_.laziness >= 0.0 && params_.laziness < 1.0))
    throw ValidationError("laziness must lie in [0, 1)");
  cfg_.check_consistency();
  log_weight_ = cfg_.log_weight();
  if (!std::isfinite(log_weight_)) throw ValidationError("chain must start from a nonzero-weight configuration");
  if (params_.refresh_interval == 0) params_.refresh_interval = std::uint64_t{1} << 20;
}

StepRecord Chain::step() {
  StepRecord rec;
  rec.step = counter_++;
  if (params_.laziness > 0.0 && rng_.uniform() < params_.laziness) {
    rec.kind = MoveKind::Hold;
    rec.junction = StepRecord::kNoJunction;
    return rec;
  }

  Junction j;
  if (cfg_.head_count() == 0) {
    rec.kind = MoveKind::Insert;
    j = leg_junction(cfg_.layout(), static_cast<LegId>(rng_.below(static_cast<std::uint64_t>(cfg_.layout().leg_count()))));
  } else {
    rec.kind = MoveKind::Move;
    const auto pick = rng_.below(4);
    j = head_junction(cfg_, static_cast<int>(pick >> 1), (pick & 1u) != 0);
  }
  rec.junction = static_cast<std::uint32_t>(j.entry_leg);

  const CandidateSet set = candidates(cfg_, j);
  // The bounce candidate carries the current (nonzero) element.
  assert(set.total > 0.0);
  const double u = rng_.uniform() * set.total;
  double cum = 0.0;
  int chosen = set.size - 1;
  for (int k = 0; k < set.size; ++k) {
    cum += set.items[static_cast<std::size_t>(k)].weight;
    if (u < cum) {
      chosen = k;
      break;
    }
  }
  const auto& c = set.items[static_cast<std::size_t>(chosen)];
  if (c.exit_leg != j.entry_leg && c.weight > 0.0) {
    const double before = set.items[static_cast<std::size_t>(cfg_.layout().leg_local(j.entry_leg))].weight;
    cfg_.pass_through(j.entry_leg, c.exit_leg);
    log_weight_ += std::log(c.weight) - std::log(before);
    rec.accepted = true;
  }

  if (counter_ % params_.refresh_interval == 0) refresh_log_weight();
#ifndef NDEBUG
  cfg_.check_consistency();
#endif
  return rec;
}

RunStats Chain::run(std::uint64_t steps, const Observer& observer, std::uint64_t stride) {
  RunStats stats;
  if (stride == 0) stride = 1;
  for (std::uint64_t t = 0; t < steps; ++t) {
    const StepRecord rec = step();
    ++stats.steps;
    stats.holds += rec.kind == MoveKind::Hold;
    stats.accepted += rec.accepted;
    (cfg_.head_count() == 0 ? stats.c0_visits : stats.c2_visits) += 1;
    if (observer && (t + 1) % stride == 0) observer(*this, rec);
  }
  return stats;
}

double rigorous_burnin(const OperatorSchedule& schedule, double eps, double c_min, double constant) {
  if (!(c_min > 0.0)) throw ValidationError("no rigorous bound available: c_min must be positive");
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (!(constant > 0.0)) throw ValidationError("leading constant must be positive");
  const double n = schedule.n();
  const double beta = schedule.beta();
  return constant * c_min * std::pow(n, 16) * std::pow(beta, 8) * std::pow(eps, -4);
}

namespace {

void put_le(char* dst, std::uint64_t v, int bytes) {
  for (int k = 0; k < bytes; ++k) dst[k] = static_cast<char>((v >> (8 * k)) & 0xFFu);
}

std::uint64_t get_le(const char* src, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(src[k])) << (8 * k);
  return v;
}

}  // namespace

TraceWriter::TraceWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error("cannot open trace file " + path);
  char header[12];
  std::memcpy(header, "WQTR", 4);
  put_le(header + 4, kVersion, 4);
  put_le(header + 8, kRecordSize, 4);
  out_.write(header, sizeof header);
}

void TraceWriter::write(const StepRecord& r) {
  char rec[kRecordSize] = {};
  put_le(rec, r.step, 8);
  put_le(rec + 8, r.junction, 4);
  rec[12] = static_cast<char>(r.kind);
  rec[13] = static_cast<char>(r.accepted ? 1 : 0);
  out_.write(rec, sizeof rec);
  ++count_;
}

std::vector<StepRecord> read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace file " + path);
  char header[12];
  if (!in.read(header, sizeof header) || std::memcmp(header, "WQTR", 4) != 0)
    throw ParseError("not a step trace (bad magic)");
  if (get_le(header + 4, 4) != TraceWriter::kVersion) throw ParseError("unsupported trace version");
  if (get_le(header + 8, 4) != TraceWriter::kRecordSize) throw ParseError("unexpected trace record size");
  std::vector<StepRecord> out;
  char rec[TraceWriter::kRecordSize];
  while (in.read(rec, sizeof rec)) {
    StepRecord r;
    r.step = get_le(rec, 8);
    r.junction = static_cast<std::uint32_t>(get_le(rec + 8, 4));
    r.kind = static_cast<MoveKind>(rec[12]);
    r.accepted = rec[13] != 0;
    out.push_back(r);
  }
  return out;
}

}  // namespace wormqmc
