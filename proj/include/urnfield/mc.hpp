#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "urnfield/reinforcement.hpp"
#include "urnfield/stats.hpp"

namespace urnfield::mc {

enum class Model { ium, multicolor, sequential, embedding };

std::string to_string(Model m);
Model model_from_string(const std::string& s);

struct EnsembleConfig {
  Model model = Model::ium;
  /// Degree for W(n) = n^m when `seq` is absent; also selects mean-field targets (ium, d = 2).
  std::optional<int> m;
  std::optional<ReinforcementSeq> seq;
  double p = 0.0;
  int d = 2;       // urns (ium) or balls per step (multicolor, embedding)
  int colors = 2;  // multicolor / embedding
  std::vector<std::uint64_t> B0, R0;  // ium / sequential; default one ball of each color
  std::vector<std::uint64_t> a;       // multicolor / embedding; default all ones
  std::uint64_t n_steps = 100000;
  std::uint64_t n_runs = 100;
  std::uint64_t first_run = 0;  // run indices [first_run, first_run + n_runs)
  std::uint64_t record_every = 0;  // 0: n_steps / 200
  double radius = 0.05;
  std::uint64_t window = 0;  // 0: 20% of n_steps
  std::uint64_t master_seed = 0;
  int grid_n = 256;
  /// Parameters at which caller-supplied targets were computed; must match (m, p).
  std::optional<std::pair<int, double>> targets_params;
  std::vector<std::vector<double>> targets;  // empty: computed from the model
  std::vector<std::string> target_names;
};

/// Fills defaults and validates. Throws InvalidArgument.
EnsembleConfig normalized(EnsembleConfig cfg);

ReinforcementSeq effective_seq(const EnsembleConfig& cfg);

struct Target {
  std::string name;
  std::vector<double> point;
  bool dominated = false;  // a corner / simplex vertex
};

/// Classification targets for the model: mean-field equilibria (ium with m, d = 2),
/// the all-0 and all-1 corners (other ium / sequential), or simplex vertices.
std::vector<Target> build_targets(const EnsembleConfig& cfg);

struct RunOutcome {
  std::uint64_t run_index = 0;
  std::uint64_t seed = 0;
  int label = -1;     // index into targets, -1 unresolved
  int monopoly = -1;  // color index, -1 none
  bool dominated = false;
  std::vector<double> final_point;
};

struct LabelCount {
  Target target;
  std::uint64_t count = 0;
  stats::Interval ci;
};

struct McReport {
  EnsembleConfig config;
  std::vector<LabelCount> labels;
  std::uint64_t unresolved = 0;
  std::vector<std::uint64_t> monopoly_by_color;
  std::vector<stats::Interval> monopoly_ci_by_color;
  std::uint64_t monopoly_any = 0;
  stats::Interval monopoly_ci;
  std::uint64_t dominated = 0;
  stats::Interval domination_ci;
  std::vector<RunOutcome> runs;
  double runtime_seconds = 0.0;
};

/// One run with seed derive_seed(master_seed, run_index).
RunOutcome run_one(const EnsembleConfig& cfg, const std::vector<Target>& targets,
                   std::uint64_t run_index);

/// Runs in parallel with OpenMP; the reduction is by run index, so the result does not
/// depend on the thread count.
McReport run_ensemble(const EnsembleConfig& cfg);
/// Single-threaded reference implementation.
McReport run_ensemble_serial(const EnsembleConfig& cfg);

struct Frequency {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double value = 0.0;
  stats::Interval ci;
};

Frequency estimate_monopoly_prob(const EnsembleConfig& cfg);

struct PhaseCurve {
  std::vector<double> p;
  std::vector<Frequency> domination;
  double threshold = 0.99;
  /// Smallest grid p whose domination frequency reaches the threshold (an empirical proxy only).
  std::optional<double> first_above_threshold;
};

PhaseCurve scan_p(int m, const std::vector<double>& p_grid, const EnsembleConfig& per_point,
                  double threshold = 0.99);

void to_json(nlohmann::json& j, const EnsembleConfig& cfg);
/// Parses the config object (schema 1). Unknown fields are rejected.
EnsembleConfig config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const McReport& r);
void to_json(nlohmann::json& j, const PhaseCurve& c);

}  // namespace urnfield::mc
