#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "urnfield/meanfield.hpp"
#include "urnfield/reinforcement.hpp"
#include "urnfield/rng.hpp"

namespace urnfield {

/// W(b) / (W(b) + W(r)), switching to a log-space ratio when a weight overflows.
/// Throws ConditionViolation when both weights are 0.
double black_probability(const ReinforcementSeq& seq, std::uint64_t b, std::uint64_t r);

/// Randomness consumed by one urn in one step, in stream order.
struct UrnDraw {
  bool eta = false;
  double u = 0.0;
};

/// Interacting urn model with two colors.
struct UrnState {
  int d = 0;
  std::vector<std::uint64_t> B, R;
  std::vector<std::uint64_t> B0, R0;
  std::uint64_t n = 0;
  double p = 0.0;
  ReinforcementSeq seq = make_polynomial({0, 0, 1});
  Stream rng;
  /// Use 1 - U in place of U (color-swap experiments).
  bool complement_uniform = false;
  /// xi of the most recent step, per urn (1 = black).
  std::vector<int> last_xi;

  std::uint64_t black_total() const;
  std::uint64_t red_total() const;
};

UrnState init_ium(int d, std::vector<std::uint64_t> B0, std::vector<std::uint64_t> R0, double p,
                  ReinforcementSeq seq, std::uint64_t seed);

/// Probability that urn i receives a black ball at the next step, given eta.
double ium_black_probability(const UrnState& s, int i, bool eta);

/// One synchronous step drawing (eta, U) for each urn from the state's stream.
void step_ium(UrnState& s);
/// One synchronous step with caller-supplied draws (one per urn).
void step_ium(UrnState& s, const std::vector<UrnDraw>& draws);

std::vector<double> proportions(const UrnState& s);

/// Single urn with Nc colors receiving d balls per step (the p = 1 model).
struct MultiColorState {
  int colors = 0;
  int d = 1;
  std::vector<std::uint64_t> N;
  std::vector<std::uint64_t> a;
  std::uint64_t n = 0;
  ReinforcementSeq seq = make_polynomial({0, 0, 1});
  Stream rng;
};

MultiColorState init_multicolor(int colors, std::vector<std::uint64_t> a, int d, ReinforcementSeq seq,
                                std::uint64_t seed);
/// Probabilities W(N(i)) / sum_j W(N(j)) at the current step.
std::vector<double> multicolor_probabilities(const MultiColorState& s);
void step_multicolor(MultiColorState& s);
std::vector<double> proportions(const MultiColorState& s);

/// Two urns receiving one ball per sub-step, alternating between urn 1 and urn 2;
/// the red weight is that of the total red count.
struct SequentialState {
  std::uint64_t Bt[2] = {0, 0};
  std::uint64_t Rt[2] = {0, 0};
  std::uint64_t Bt0[2] = {0, 0};
  std::uint64_t Rt0[2] = {0, 0};
  std::uint64_t substep = 0;  // number of sub-steps taken
  ReinforcementSeq seq = make_polynomial({0, 0, 1});
  Stream rng;

  std::uint64_t red_total() const { return Rt[0] + Rt[1]; }
  std::uint64_t black_total() const { return Bt[0] + Bt[1]; }
  /// Urn receiving the next ball (0 or 1).
  int next_urn() const { return static_cast<int>(substep % 2); }
};

SequentialState init_sequential(std::vector<std::uint64_t> B0, std::vector<std::uint64_t> R0,
                                ReinforcementSeq seq, std::uint64_t seed);
double sequential_black_probability(const SequentialState& s);
void step_sequential(SequentialState& s);
void step_sequential(SequentialState& s, double u);
/// Black proportion per urn: B / (B + R).
std::vector<double> proportions(const SequentialState& s);

struct Trajectory {
  std::vector<std::uint64_t> steps;
  std::vector<std::vector<double>> proportions;
  /// Total count per color at each sample (black, red for the two-color models).
  std::vector<std::vector<std::uint64_t>> color_totals;
  std::uint64_t seed = 0;
};

/// Steps the state n_steps times, sampling at n = 0, every record_every steps, and at the end.
Trajectory run(UrnState& s, std::uint64_t n_steps, std::uint64_t record_every, std::uint64_t seed = 0);
Trajectory run(MultiColorState& s, std::uint64_t n_steps, std::uint64_t record_every,
               std::uint64_t seed = 0);
/// One step here is two sub-steps.
Trajectory run(SequentialState& s, std::uint64_t n_steps, std::uint64_t record_every,
               std::uint64_t seed = 0);

inline constexpr int kNoColor = -1;

/// Color that received every ball over the final `window` steps, or kNoColor.
/// Uses the latest sample at or before (last step - window) as the window start,
/// so coarse sampling only lengthens the effective window.
int detect_monopoly(const Trajectory& traj, std::uint64_t window);

inline constexpr int kUnresolved = -1;

/// Index of the target that the final quarter of samples stays within `radius` of.
int classify_limit(const Trajectory& traj, const std::vector<std::vector<double>>& targets,
                   double radius);
int classify_limit(const Trajectory& traj, const std::vector<meanfield::Equilibrium>& equilibria,
                   double radius);

struct CoupledRun {
  Trajectory ium;
  Trajectory sequential;
  std::uint64_t violations = 0;
  std::vector<std::uint64_t> cumulative_violations;  // at each recorded sample
};

/// IUM (d = 2) and sequential process on shared (eta, U) draws.
/// Counts steps n where R~_2n(i) < R_n(i) or B~_2n(i) > B_n(i).
CoupledRun run_coupled(std::vector<std::uint64_t> B0, std::vector<std::uint64_t> R0, double p,
                       ReinforcementSeq seq, std::uint64_t seed, std::uint64_t n_steps,
                       std::uint64_t record_every = 1);

}  // namespace urnfield
