#include "urnfield/ctime.hpp"

#include <cmath>
#include <limits>

#include "urnfield/errors.hpp"

namespace urnfield {
namespace {

double rate_of(const ReinforcementSeq& seq, std::uint64_t n) {
  const double w = seq.weight(n);
  if (!std::isfinite(w)) throw ConditionViolation("embedding: W(" + std::to_string(n) + ") overflows");
  return w;
}

void launch(EmbeddingState& s, int edge) {
  EmbeddingState::Timer& t = s.timers[edge];
  const double xi = s.rng.exponential();
  t.anchor = xi;
  t.w_arg = s.Zref[edge];
  t.rate = rate_of(s.seq, t.w_arg);
  t.run_time = 0.0;
  t.armed = true;
  if (s.options.keep_timer_records) {
    TimerRecord rec;
    rec.edge = edge;
    rec.visit = s.Z[edge];
    rec.xi = xi;
    rec.launch_time = s.time;
    t.record = s.records.size();
    s.records_by_edge[edge].push_back(s.records.size());
    s.records.push_back(std::move(rec));
  }
}

void add_segment(EmbeddingState& s, const EmbeddingState::Timer& t, double mass) {
  if (!s.options.keep_timer_records) return;
  auto& segs = s.records[t.record].segments;
  if (!segs.empty() && segs.back().w_arg == t.w_arg) {
    segs.back().mass += mass;
  } else {
    segs.push_back({t.w_arg, mass});
  }
}

}  // namespace

EmbeddingState init_embedding(int colors, std::vector<std::uint64_t> a, int d, ReinforcementSeq seq,
                              std::uint64_t seed, EmbeddingOptions options) {
  if (colors < 2) throw InvalidArgument("init_embedding: need at least 2 edges");
  if (static_cast<int>(a.size()) != colors) throw InvalidArgument("init_embedding: a needs Nc entries");
  if (d < 1) throw InvalidArgument("init_embedding: d must be >= 1");
  if (seq.kind() == SeqKind::table && !seq.tail_rule()) {
    throw InvalidArgument("init_embedding: table without tail rule");
  }
  for (auto ai : a) {
    if (!(seq.weight(ai) > 0.0)) throw InvalidArgument("init_embedding: W(a_i) must be > 0");
  }
  EmbeddingState s;
  s.colors = colors;
  s.d = d;
  s.a = a;
  s.Z = a;
  s.Zref = a;
  s.seq = std::move(seq);
  s.rng = Stream(seed);
  s.options = options;
  s.timers.resize(colors);
  s.records_by_edge.resize(colors);
  s.snapshots.push_back(a);
  for (int i = 0; i < colors; ++i) launch(s, i);
  return s;
}

double remaining_time(const EmbeddingState& s, int edge) {
  const auto& t = s.timers.at(edge);
  return t.anchor / t.rate - t.run_time;
}

void refresh_rates(EmbeddingState& s) {
  s.Zref = s.Z;
  for (int i = 0; i < s.colors; ++i) {
    auto& t = s.timers[i];
    if (!t.armed || t.w_arg == s.Zref[i]) continue;  // unchanged count: nothing to update
    double remaining = t.anchor - t.rate * t.run_time;
    if (remaining < -1e-12 * std::max(1.0, t.anchor)) {
      throw InternalError("refresh_rates: negative remaining mass");
    }
    remaining = std::max(remaining, 0.0);
    add_segment(s, t, t.anchor - remaining);
    t.anchor = remaining;
    t.w_arg = s.Zref[i];
    t.rate = rate_of(s.seq, t.w_arg);
    t.run_time = 0.0;
  }
}

JumpEvent advance_to_next_jump(EmbeddingState& s) {
  int winner = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.colors; ++i) {
    if (!(s.timers[i].rate > 0.0)) continue;
    const double r = remaining_time(s, i);
    if (r < best) {
      best = r;
      winner = i;
    }
  }
  if (winner < 0) throw ConditionViolation("advance_to_next_jump: all rates are zero");
  const double dt = std::max(best, 0.0);
  s.time += dt;
  for (int i = 0; i < s.colors; ++i) {
    if (i != winner) s.timers[i].run_time += dt;
    if (s.options.keep_timer_records && s.timers[i].armed) s.records[s.timers[i].record].held += dt;
  }
  // The ringing timer has consumed its remaining mass.
  auto& t = s.timers[winner];
  add_segment(s, t, t.anchor);
  t.armed = false;
  if (s.options.keep_timer_records) {
    auto& rec = s.records[t.record];
    rec.ring_time = s.time;
    rec.rung = true;
  }
  ++s.Z[winner];
  ++s.n;
  const bool boundary = s.n % static_cast<std::uint64_t>(s.d) == 0;
  const bool refresh = boundary || s.options.refresh_every_jump;
  if (refresh) refresh_rates(s);
  launch(s, winner);
  if (boundary) s.snapshots.push_back(s.Z);

  JumpEvent ev{s.n, s.time, winner, s.Z, refresh};
  if (s.options.keep_jump_log) s.log.push_back(ev);
  return ev;
}

std::vector<TimerSegment> sigma_decomposition(const EmbeddingState& s, int edge, std::uint64_t visit) {
  if (!s.options.keep_timer_records) throw InvalidArgument("sigma_decomposition: timer records disabled");
  if (edge < 0 || edge >= s.colors || visit < s.a[edge]) {
    throw InvalidArgument("sigma_decomposition: no such timer");
  }
  const auto& by_edge = s.records_by_edge[edge];
  const std::uint64_t idx = visit - s.a[edge];
  if (idx >= by_edge.size() || !s.records[by_edge[idx]].rung) {
    throw InvalidArgument("sigma_decomposition: visit not realised yet");
  }
  return s.records[by_edge[idx]].segments;
}

double holding_time(const EmbeddingState& s, int edge, std::uint64_t visit) {
  sigma_decomposition(s, edge, visit);  // validates
  return s.records[s.records_by_edge[edge][visit - s.a[edge]]].held;
}

const std::vector<std::uint64_t>& extract_discrete(const EmbeddingState& s, std::uint64_t k) {
  if (k >= s.snapshots.size()) throw InvalidArgument("extract_discrete: refresh k not reached");
  return s.snapshots[k];
}

std::vector<std::uint64_t> sample_embedding(int colors, const std::vector<std::uint64_t>& a, int d,
                                            const ReinforcementSeq& seq, std::uint64_t seed,
                                            std::uint64_t k, bool refresh_every_jump) {
  EmbeddingOptions opt;
  opt.refresh_every_jump = refresh_every_jump;
  opt.keep_jump_log = false;
  opt.keep_timer_records = false;
  EmbeddingState s = init_embedding(colors, a, d, seq, seed, opt);
  const std::uint64_t target = k * static_cast<std::uint64_t>(d);
  while (s.n < target) advance_to_next_jump(s);
  return s.Z;
}

}  // namespace urnfield
