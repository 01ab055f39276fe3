#include "urnfield/urn_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "urnfield/errors.hpp"

namespace urnfield {
namespace {

constexpr double kWeightCap = 1e300;

void require_simulable(const ReinforcementSeq& seq) {
  if (seq.kind() == SeqKind::table && !seq.tail_rule()) {
    throw InvalidArgument("simulation needs a sequence defined for every n (table without tail rule)");
  }
}

bool positive_weight(const ReinforcementSeq& seq, std::uint64_t n) {
  return seq.log_weight(n) > -std::numeric_limits<double>::infinity();
}

std::uint64_t sum(const std::vector<std::uint64_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::uint64_t{0});
}

}  // namespace

double black_probability(const ReinforcementSeq& seq, std::uint64_t b, std::uint64_t r) {
  const double wb = seq.weight(b);
  const double wr = seq.weight(r);
  if (wb <= kWeightCap && wr <= kWeightCap) {
    if (wb == 0.0 && wr == 0.0) throw ConditionViolation("both pool weights are zero");
    if (wb == 0.0) return 0.0;
    return 1.0 / (1.0 + wr / wb);
  }
  const double lb = seq.log_weight(b);
  const double lr = seq.log_weight(r);
  return 1.0 / (1.0 + std::exp(lr - lb));
}

// ---------------------------------------------------------------------------
// Interacting urns

std::uint64_t UrnState::black_total() const { return sum(B); }
std::uint64_t UrnState::red_total() const { return sum(R); }

UrnState init_ium(int d, std::vector<std::uint64_t> B0, std::vector<std::uint64_t> R0, double p,
                  ReinforcementSeq seq, std::uint64_t seed) {
  if (d < 1) throw InvalidArgument("init_ium: d must be >= 1");
  if (static_cast<int>(B0.size()) != d || static_cast<int>(R0.size()) != d) {
    throw InvalidArgument("init_ium: B0 and R0 need d entries");
  }
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("init_ium: p must lie in [0, 1]");
  require_simulable(seq);
  if (!positive_weight(seq, sum(B0)) || !positive_weight(seq, sum(R0))) {
    throw InvalidArgument("init_ium: a global pool has zero weight");
  }
  if (p < 1.0) {
    for (int i = 0; i < d; ++i) {
      if (!positive_weight(seq, B0[i]) && !positive_weight(seq, R0[i])) {
        throw InvalidArgument("init_ium: urn " + std::to_string(i + 1) + " has zero total weight");
      }
    }
  }
  UrnState s;
  s.d = d;
  s.B = B0;
  s.R = R0;
  s.B0 = std::move(B0);
  s.R0 = std::move(R0);
  s.p = p;
  s.seq = std::move(seq);
  s.rng = Stream(seed);
  s.last_xi.assign(d, 0);
  return s;
}

double ium_black_probability(const UrnState& s, int i, bool eta) {
  if (eta) return black_probability(s.seq, s.black_total(), s.red_total());
  return black_probability(s.seq, s.B[i], s.R[i]);
}

void step_ium(UrnState& s, const std::vector<UrnDraw>& draws) {
  if (static_cast<int>(draws.size()) != s.d) throw InvalidArgument("step_ium: need one draw per urn");
  // All urns see the time-n composition.
  const std::uint64_t bstar = s.black_total();
  const std::uint64_t rstar = s.red_total();
  double global = -1.0;
  for (int i = 0; i < s.d; ++i) {
    double prob;
    if (draws[i].eta) {
      if (global < 0.0) global = black_probability(s.seq, bstar, rstar);
      prob = global;
    } else {
      prob = black_probability(s.seq, s.B[i], s.R[i]);
    }
    const double u = s.complement_uniform ? 1.0 - draws[i].u : draws[i].u;
    s.last_xi[i] = u < prob ? 1 : 0;
  }
  for (int i = 0; i < s.d; ++i) {
    if (s.last_xi[i]) ++s.B[i]; else ++s.R[i];
  }
  ++s.n;
}

void step_ium(UrnState& s) {
  std::vector<UrnDraw> draws(s.d);
  for (auto& dr : draws) {
    dr.eta = s.rng.bernoulli(s.p);
    dr.u = s.rng.uniform();
  }
  step_ium(s, draws);
}

std::vector<double> proportions(const UrnState& s) {
  std::vector<double> x(s.d);
  for (int i = 0; i < s.d; ++i) {
    x[i] = static_cast<double>(s.B[i]) / static_cast<double>(s.n + s.B0[i] + s.R0[i]);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Multi-color urn

MultiColorState init_multicolor(int colors, std::vector<std::uint64_t> a, int d, ReinforcementSeq seq,
                                std::uint64_t seed) {
  if (colors < 2) throw InvalidArgument("init_multicolor: need at least 2 colors");
  if (static_cast<int>(a.size()) != colors) throw InvalidArgument("init_multicolor: a needs Nc entries");
  if (d < 1) throw InvalidArgument("init_multicolor: d must be >= 1");
  require_simulable(seq);
  for (auto ai : a) {
    if (ai < 1) throw InvalidArgument("init_multicolor: initial counts must be >= 1");
    if (!positive_weight(seq, ai)) throw InvalidArgument("init_multicolor: W(a_i) must be > 0");
  }
  MultiColorState s;
  s.colors = colors;
  s.d = d;
  s.N = a;
  s.a = std::move(a);
  s.seq = std::move(seq);
  s.rng = Stream(seed);
  return s;
}

std::vector<double> multicolor_probabilities(const MultiColorState& s) {
  std::vector<double> lw(s.colors);
  for (int i = 0; i < s.colors; ++i) lw[i] = s.seq.log_weight(s.N[i]);
  const double top = *std::max_element(lw.begin(), lw.end());
  if (!(top > -std::numeric_limits<double>::infinity())) {
    throw ConditionViolation("multicolor: all weights are zero");
  }
  std::vector<double> prob(s.colors);
  double total = 0.0;
  for (int i = 0; i < s.colors; ++i) total += prob[i] = std::exp(lw[i] - top);
  for (auto& q : prob) q /= total;
  return prob;
}

void step_multicolor(MultiColorState& s) {
  const auto prob = multicolor_probabilities(s);
  std::vector<std::uint64_t> add(s.colors, 0);
  for (int k = 0; k < s.d; ++k) {
    const double u = s.rng.uniform();
    double acc = 0.0;
    int pick = s.colors - 1;
    for (int i = 0; i < s.colors; ++i) {
      acc += prob[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    // Rounding in the cumulative sum must not hand balls to zero-probability colors.
    while (prob[pick] == 0.0 && pick > 0) --pick;
    ++add[pick];
  }
  for (int i = 0; i < s.colors; ++i) s.N[i] += add[i];
  ++s.n;
}

std::vector<double> proportions(const MultiColorState& s) {
  const double total = static_cast<double>(sum(s.N));
  std::vector<double> x(s.colors);
  for (int i = 0; i < s.colors; ++i) x[i] = static_cast<double>(s.N[i]) / total;
  return x;
}

// ---------------------------------------------------------------------------
// Sequential process

SequentialState init_sequential(std::vector<std::uint64_t> B0, std::vector<std::uint64_t> R0,
                                ReinforcementSeq seq, std::uint64_t seed) {
  if (B0.size() != 2 || R0.size() != 2) throw InvalidArgument("init_sequential: two urns expected");
  require_simulable(seq);
  const std::uint64_t rstar = R0[0] + R0[1];
  for (int i = 0; i < 2; ++i) {
    if (!positive_weight(seq, B0[i]) && !positive_weight(seq, rstar)) {
      throw InvalidArgument("init_sequential: zero total weight for urn " + std::to_string(i + 1));
    }
  }
  SequentialState s;
  for (int i = 0; i < 2; ++i) {
    s.Bt[i] = s.Bt0[i] = B0[i];
    s.Rt[i] = s.Rt0[i] = R0[i];
  }
  s.seq = std::move(seq);
  s.rng = Stream(seed);
  return s;
}

double sequential_black_probability(const SequentialState& s) {
  return black_probability(s.seq, s.Bt[s.next_urn()], s.red_total());
}

void step_sequential(SequentialState& s, double u) {
  const int i = s.next_urn();
  if (u < sequential_black_probability(s)) ++s.Bt[i]; else ++s.Rt[i];
  ++s.substep;
}

void step_sequential(SequentialState& s) { step_sequential(s, s.rng.uniform()); }

std::vector<double> proportions(const SequentialState& s) {
  return {static_cast<double>(s.Bt[0]) / static_cast<double>(s.Bt[0] + s.Rt[0]),
          static_cast<double>(s.Bt[1]) / static_cast<double>(s.Bt[1] + s.Rt[1])};
}

// ---------------------------------------------------------------------------
// Runs and events

namespace {

template <class State, class Step, class Totals>
Trajectory run_impl(State& s, std::uint64_t n_steps, std::uint64_t record_every, std::uint64_t seed,
                    Step step, Totals totals) {
  if (record_every == 0) throw InvalidArgument("run: record_every must be >= 1");
  Trajectory traj;
  traj.seed = seed;
  auto record = [&](std::uint64_t k) {
    traj.steps.push_back(k);
    traj.proportions.push_back(proportions(s));
    traj.color_totals.push_back(totals(s));
  };
  record(0);
  for (std::uint64_t k = 1; k <= n_steps; ++k) {
    step(s);
    if (k % record_every == 0 || k == n_steps) record(k);
  }
  return traj;
}

}  // namespace

Trajectory run(UrnState& s, std::uint64_t n_steps, std::uint64_t record_every, std::uint64_t seed) {
  return run_impl(
      s, n_steps, record_every, seed, [](UrnState& st) { step_ium(st); },
      [](const UrnState& st) { return std::vector<std::uint64_t>{st.black_total(), st.red_total()}; });
}

Trajectory run(MultiColorState& s, std::uint64_t n_steps, std::uint64_t record_every,
               std::uint64_t seed) {
  return run_impl(
      s, n_steps, record_every, seed, [](MultiColorState& st) { step_multicolor(st); },
      [](const MultiColorState& st) { return st.N; });
}

Trajectory run(SequentialState& s, std::uint64_t n_steps, std::uint64_t record_every,
               std::uint64_t seed) {
  return run_impl(
      s, n_steps, record_every, seed,
      [](SequentialState& st) {
        step_sequential(st);
        step_sequential(st);
      },
      [](const SequentialState& st) {
        return std::vector<std::uint64_t>{st.black_total(), st.red_total()};
      });
}

int detect_monopoly(const Trajectory& traj, std::uint64_t window) {
  if (traj.steps.empty()) throw InvalidArgument("detect_monopoly: empty trajectory");
  const std::uint64_t last = traj.steps.back();
  if (window == 0 || window > last - traj.steps.front()) {
    throw InvalidArgument("detect_monopoly: window must be in [1, length of the log]");
  }
  const std::uint64_t start_step = last - window;
  // Latest sample at or before start_step.
  const auto it = std::upper_bound(traj.steps.begin(), traj.steps.end(), start_step);
  const std::size_t start = static_cast<std::size_t>(it - traj.steps.begin()) - 1;
  const auto& before = traj.color_totals[start];
  const auto& after = traj.color_totals.back();
  int grown = kNoColor;
  for (std::size_t c = 0; c < after.size(); ++c) {
    if (after[c] != before[c]) {
      if (grown != kNoColor) return kNoColor;
      grown = static_cast<int>(c);
    }
  }
  return grown;
}

int classify_limit(const Trajectory& traj, const std::vector<std::vector<double>>& targets,
                   double radius) {
  if (targets.empty()) throw InvalidArgument("classify_limit: no targets");
  if (traj.proportions.empty()) throw InvalidArgument("classify_limit: empty trajectory");
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(acc);
  };
  const auto& tail = traj.proportions.back();
  int best = 0;
  for (std::size_t t = 1; t < targets.size(); ++t) {
    if (targets[t].size() != tail.size()) throw InvalidArgument("classify_limit: dimension mismatch");
    if (dist(tail, targets[t]) < dist(tail, targets[best])) best = static_cast<int>(t);
  }
  const std::size_t n = traj.proportions.size();
  const std::size_t from = n - std::max<std::size_t>(1, n / 4);
  for (std::size_t k = from; k < n; ++k) {
    if (dist(traj.proportions[k], targets[best]) > radius) return kUnresolved;
  }
  return best;
}

int classify_limit(const Trajectory& traj, const std::vector<meanfield::Equilibrium>& equilibria,
                   double radius) {
  std::vector<std::vector<double>> targets;
  targets.reserve(equilibria.size());
  for (const auto& e : equilibria) targets.push_back({e.x, e.y});
  return classify_limit(traj, targets, radius);
}

// ---------------------------------------------------------------------------
// Coupling

CoupledRun run_coupled(std::vector<std::uint64_t> B0, std::vector<std::uint64_t> R0, double p,
                       ReinforcementSeq seq, std::uint64_t seed, std::uint64_t n_steps,
                       std::uint64_t record_every) {
  if (B0.size() != 2 || R0.size() != 2) throw InvalidArgument("run_coupled: two urns expected");
  if (record_every == 0) throw InvalidArgument("run_coupled: record_every must be >= 1");
  const std::uint64_t reach = B0[0] + B0[1] + R0[0] + R0[1] + 2 * n_steps;
  if (!seq.is_non_decreasing(reach)) {
    throw InvalidArgument("run_coupled: the coupling needs a non-decreasing W");
  }
  UrnState ium = init_ium(2, B0, R0, p, seq, seed);
  SequentialState sq = init_sequential(B0, R0, seq, seed);
  Stream stream(seed);

  CoupledRun out;
  out.ium.seed = out.sequential.seed = seed;
  auto record = [&](std::uint64_t k) {
    out.ium.steps.push_back(k);
    out.ium.proportions.push_back(proportions(ium));
    out.ium.color_totals.push_back({ium.black_total(), ium.red_total()});
    out.sequential.steps.push_back(k);
    out.sequential.proportions.push_back(proportions(sq));
    out.sequential.color_totals.push_back({sq.black_total(), sq.red_total()});
    out.cumulative_violations.push_back(out.violations);
  };
  auto violated = [&] {
    for (int i = 0; i < 2; ++i) {
      if (sq.Rt[i] < ium.R[i] || sq.Bt[i] > ium.B[i]) return true;
    }
    return false;
  };
  if (violated()) ++out.violations;
  record(0);
  std::vector<UrnDraw> draws(2);
  for (std::uint64_t k = 1; k <= n_steps; ++k) {
    for (auto& dr : draws) {
      dr.eta = stream.bernoulli(p);
      dr.u = stream.uniform();
    }
    step_sequential(sq, draws[0].u);
    step_sequential(sq, draws[1].u);
    step_ium(ium, draws);
    if (violated()) ++out.violations;
    if (k % record_every == 0 || k == n_steps) record(k);
  }
  return out;
}

}  // namespace urnfield
