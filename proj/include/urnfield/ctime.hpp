#pragma once

#include <cstdint>
#include <vector>

#include "urnfield/reinforcement.hpp"
#include "urnfield/rng.hpp"

namespace urnfield {

/// Mass consumed by a timer while running at rate W(w_arg).
struct TimerSegment {
  std::uint64_t w_arg = 0;
  double mass = 0.0;
};

/// One timer, launched when its edge reached `visit` crossings.
struct TimerRecord {
  int edge = 0;
  std::uint64_t visit = 0;
  double xi = 0.0;  // unit-exponential mass drawn at launch
  double launch_time = 0.0;
  double ring_time = 0.0;
  double held = 0.0;  // sum of inter-jump gaps while armed; exact where ring - launch cancels
  bool rung = false;
  std::vector<TimerSegment> segments;
};

struct JumpEvent {
  std::uint64_t index = 0;  // n after the jump
  double tau = 0.0;
  int edge = 0;
  std::vector<std::uint64_t> Z;
  bool refresh = false;
};

struct EmbeddingOptions {
  /// Negative control: refresh every rate after every jump regardless of d.
  bool refresh_every_jump = false;
  bool keep_jump_log = true;
  bool keep_timer_records = true;
};

/// Jump process on one vertex with Nc loops whose timer rates are refreshed only at jumps kd.
struct EmbeddingState {
  struct Timer {
    double anchor = 0.0;    // remaining mass at the last rate change
    double rate = 0.0;      // W(w_arg)
    std::uint64_t w_arg = 0;
    double run_time = 0.0;  // time run since the last rate change
    std::size_t record = 0;
    bool armed = false;
  };

  int colors = 0;
  int d = 1;
  std::vector<std::uint64_t> a;
  std::vector<std::uint64_t> Z;
  std::vector<std::uint64_t> Zref;  // Z at the last refresh
  std::vector<Timer> timers;
  std::uint64_t n = 0;
  double time = 0.0;
  ReinforcementSeq seq = make_polynomial({0, 0, 1});
  Stream rng;
  EmbeddingOptions options;

  std::vector<JumpEvent> log;
  std::vector<TimerRecord> records;
  std::vector<std::vector<std::size_t>> records_by_edge;  // indexed by visit - a[edge]
  std::vector<std::vector<std::uint64_t>> snapshots;      // Z at jumps 0, d, 2d, ...
};

EmbeddingState init_embedding(int colors, std::vector<std::uint64_t> a, int d, ReinforcementSeq seq,
                              std::uint64_t seed, EmbeddingOptions options = {});

/// Remaining clock time of the timer on `edge` at its current rate.
double remaining_time(const EmbeddingState& s, int edge);

/// Advances to the next ring (ties go to the lowest edge index), refreshing rates when n is a
/// multiple of d. A timer launched on a refresh jump starts at the refreshed rate.
JumpEvent advance_to_next_jump(EmbeddingState& s);

/// Applies the rate update to every timer using the current Z. Called by advance_to_next_jump.
void refresh_rates(EmbeddingState& s);

/// (w_arg, b) pairs for the timer launched at the `visit`-th crossing of `edge`, grouped by rate.
std::vector<TimerSegment> sigma_decomposition(const EmbeddingState& s, int edge, std::uint64_t visit);

/// Realised holding time between the visit-th and (visit+1)-th crossing of edge.
double holding_time(const EmbeddingState& s, int edge, std::uint64_t visit);

/// Z at jump k*d. Throws InvalidArgument if not yet reached.
const std::vector<std::uint64_t>& extract_discrete(const EmbeddingState& s, std::uint64_t k);

/// Runs until jump k*d and returns Z there.
std::vector<std::uint64_t> sample_embedding(int colors, const std::vector<std::uint64_t>& a, int d,
                                            const ReinforcementSeq& seq, std::uint64_t seed,
                                            std::uint64_t k, bool refresh_every_jump = false);

}  // namespace urnfield
