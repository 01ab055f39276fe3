#include "urnfield/mc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include <omp.h>

#include "urnfield/ctime.hpp"
#include "urnfield/errors.hpp"
#include "urnfield/meanfield.hpp"
#include "urnfield/rng.hpp"
#include "urnfield/urn_sim.hpp"

namespace urnfield::mc {

std::string to_string(Model m) {
  switch (m) {
    case Model::ium: return "ium";
    case Model::multicolor: return "multicolor";
    case Model::sequential: return "sequential";
    case Model::embedding: return "embedding";
  }
  return "?";
}

Model model_from_string(const std::string& s) {
  if (s == "ium") return Model::ium;
  if (s == "multicolor") return Model::multicolor;
  if (s == "sequential") return Model::sequential;
  if (s == "embedding") return Model::embedding;
  throw InvalidArgument("unknown model '" + s + "'");
}

ReinforcementSeq effective_seq(const EnsembleConfig& cfg) {
  if (cfg.seq) return *cfg.seq;
  if (!cfg.m) throw InvalidArgument("config: need either m or seq");
  std::vector<double> coeffs(*cfg.m + 1, 0.0);
  coeffs.back() = 1.0;
  return make_polynomial(coeffs);
}

EnsembleConfig normalized(EnsembleConfig cfg) {
  if (cfg.n_runs < 1) throw InvalidArgument("config: n_runs must be >= 1");
  if (!(cfg.radius > 0.0 && cfg.radius < 0.5)) throw InvalidArgument("config: radius must lie in (0, 0.5)");
  if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw InvalidArgument("config: p must lie in [0, 1]");
  if (cfg.m && *cfg.m < 2) throw InvalidArgument("config: m must be >= 2");
  if (!cfg.m && !cfg.seq) throw InvalidArgument("config: need either m or seq");
  if (cfg.d < 1) throw InvalidArgument("config: d must be >= 1");
  if (cfg.grid_n < 64) throw InvalidArgument("config: grid_n must be >= 64");
  if (cfg.record_every == 0) cfg.record_every = std::max<std::uint64_t>(1, cfg.n_steps / 200);
  if (cfg.window == 0) cfg.window = cfg.n_steps / 5;
  if (cfg.n_steps > 0 && cfg.window == 0) cfg.window = 1;
  if (cfg.window > cfg.n_steps) throw InvalidArgument("config: window exceeds n_steps");
  switch (cfg.model) {
    case Model::ium:
    case Model::sequential: {
      const std::size_t urns = cfg.model == Model::ium ? static_cast<std::size_t>(cfg.d) : 2;
      if (cfg.B0.empty()) cfg.B0.assign(urns, 1);
      if (cfg.R0.empty()) cfg.R0.assign(urns, 1);
      if (cfg.B0.size() != urns || cfg.R0.size() != urns) {
        throw InvalidArgument("config: B0/R0 need one entry per urn");
      }
      break;
    }
    case Model::multicolor:
    case Model::embedding:
      if (cfg.colors < 2) throw InvalidArgument("config: colors must be >= 2");
      if (cfg.a.empty()) cfg.a.assign(cfg.colors, 1);
      if (cfg.a.size() != static_cast<std::size_t>(cfg.colors)) {
        throw InvalidArgument("config: a needs one entry per color");
      }
      break;
  }
  if (!cfg.targets.empty() && cfg.targets_params && cfg.m &&
      (cfg.targets_params->first != *cfg.m || cfg.targets_params->second != cfg.p)) {
    throw InvalidArgument("config: classification targets were computed at different (m, p)");
  }
  return cfg;
}

namespace {

std::string point_name(const std::vector<double>& pt) {
  std::string s = "(";
  char buf[32];
  for (std::size_t i = 0; i < pt.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", pt[i]);
    s += (i ? "," : "") + std::string(buf);
  }
  return s + ")";
}

bool is_corner(const std::vector<double>& pt) {
  bool zeros = true, ones = true;
  for (double v : pt) {
    zeros = zeros && v == 0.0;
    ones = ones && v == 1.0;
  }
  return zeros || ones;
}

Target make_target(std::vector<double> pt, bool dominated) {
  Target t;
  t.name = point_name(pt);
  t.point = std::move(pt);
  t.dominated = dominated;
  return t;
}

}  // namespace

std::vector<Target> build_targets(const EnsembleConfig& cfg) {
  std::vector<Target> out;
  if (!cfg.targets.empty()) {
    for (std::size_t i = 0; i < cfg.targets.size(); ++i) {
      Target t = make_target(cfg.targets[i], false);
      if (cfg.model == Model::multicolor || cfg.model == Model::embedding) {
        t.dominated = std::count(t.point.begin(), t.point.end(), 1.0) == 1;
      } else {
        t.dominated = is_corner(t.point);
      }
      if (i < cfg.target_names.size()) t.name = cfg.target_names[i];
      out.push_back(std::move(t));
    }
    return out;
  }
  switch (cfg.model) {
    case Model::ium:
      if (cfg.m && cfg.d == 2) {
        const auto scan = meanfield::find_equilibria({*cfg.m, cfg.p}, cfg.grid_n);
        for (const auto& e : scan.points) out.push_back(make_target({e.x, e.y}, is_corner({e.x, e.y})));
        return out;
      }
      [[fallthrough]];
    case Model::sequential: {
      const std::size_t urns = cfg.model == Model::ium ? static_cast<std::size_t>(cfg.d) : 2;
      out.push_back(make_target(std::vector<double>(urns, 0.0), true));
      out.push_back(make_target(std::vector<double>(urns, 1.0), true));
      return out;
    }
    case Model::multicolor:
    case Model::embedding:
      for (int i = 0; i < cfg.colors; ++i) {
        std::vector<double> v(cfg.colors, 0.0);
        v[i] = 1.0;
        out.push_back(make_target(std::move(v), true));
      }
      return out;
  }
  return out;
}

namespace {

Trajectory simulate(const EnsembleConfig& cfg, const ReinforcementSeq& seq, std::uint64_t seed) {
  switch (cfg.model) {
    case Model::ium: {
      UrnState s = init_ium(cfg.d, cfg.B0, cfg.R0, cfg.p, seq, seed);
      return run(s, cfg.n_steps, cfg.record_every, seed);
    }
    case Model::multicolor: {
      MultiColorState s = init_multicolor(cfg.colors, cfg.a, cfg.d, seq, seed);
      return run(s, cfg.n_steps, cfg.record_every, seed);
    }
    case Model::sequential: {
      SequentialState s = init_sequential(cfg.B0, cfg.R0, seq, seed);
      return run(s, cfg.n_steps, cfg.record_every, seed);
    }
    case Model::embedding: {
      EmbeddingOptions opt;
      opt.keep_jump_log = false;
      opt.keep_timer_records = false;
      EmbeddingState s = init_embedding(cfg.colors, cfg.a, cfg.d, seq, seed, opt);
      Trajectory traj;
      traj.seed = seed;
      auto record = [&](std::uint64_t k) {
        const auto& z = s.snapshots[k];
        double total = 0.0;
        for (auto v : z) total += static_cast<double>(v);
        std::vector<double> x(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) x[i] = static_cast<double>(z[i]) / total;
        traj.steps.push_back(k);
        traj.proportions.push_back(std::move(x));
        traj.color_totals.push_back(z);
      };
      record(0);
      for (std::uint64_t k = 1; k <= cfg.n_steps; ++k) {
        for (int j = 0; j < cfg.d; ++j) advance_to_next_jump(s);
        if (k % cfg.record_every == 0 || k == cfg.n_steps) record(k);
      }
      return traj;
    }
  }
  throw InternalError("simulate: unknown model");
}

McReport reduce(const EnsembleConfig& cfg, const std::vector<Target>& targets,
                std::vector<RunOutcome> runs) {
  McReport rep;
  rep.config = cfg;
  const std::uint64_t n = runs.size();
  for (const auto& t : targets) rep.labels.push_back({t, 0, {}});
  const std::size_t colors =
      (cfg.model == Model::multicolor || cfg.model == Model::embedding) ? cfg.colors : 2;
  rep.monopoly_by_color.assign(colors, 0);
  for (const auto& r : runs) {
    if (r.label >= 0) ++rep.labels[r.label].count; else ++rep.unresolved;
    if (r.monopoly >= 0) {
      ++rep.monopoly_by_color[r.monopoly];
      ++rep.monopoly_any;
    }
    if (r.dominated) ++rep.dominated;
  }
  for (auto& l : rep.labels) l.ci = stats::wilson_interval(l.count, n);
  for (auto c : rep.monopoly_by_color) rep.monopoly_ci_by_color.push_back(stats::wilson_interval(c, n));
  rep.monopoly_ci = stats::wilson_interval(rep.monopoly_any, n);
  rep.domination_ci = stats::wilson_interval(rep.dominated, n);
  rep.runs = std::move(runs);
  return rep;
}

template <bool Parallel>
McReport ensemble(const EnsembleConfig& raw) {
  const auto start = std::chrono::steady_clock::now();
  const EnsembleConfig cfg = normalized(raw);
  const auto targets = build_targets(cfg);
  std::vector<RunOutcome> runs(cfg.n_runs);
  const auto count = static_cast<std::int64_t>(cfg.n_runs);
  if constexpr (Parallel) {
    // Exceptions must not cross the OpenMP region; the first one is rethrown afterwards.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        runs[i] = run_one(cfg, targets, cfg.first_run + static_cast<std::uint64_t>(i));
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::int64_t i = 0; i < count; ++i) {
      runs[i] = run_one(cfg, targets, cfg.first_run + static_cast<std::uint64_t>(i));
    }
  }
  McReport rep = reduce(cfg, targets, std::move(runs));
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace

RunOutcome run_one(const EnsembleConfig& cfg, const std::vector<Target>& targets,
                   std::uint64_t run_index) {
  RunOutcome out;
  out.run_index = run_index;
  out.seed = derive_seed(cfg.master_seed, run_index);
  const Trajectory traj = simulate(cfg, effective_seq(cfg), out.seed);
  out.final_point = traj.proportions.back();
  if (cfg.n_steps == 0) return out;  // no dynamics: nothing to classify
  std::vector<std::vector<double>> points;
  points.reserve(targets.size());
  for (const auto& t : targets) points.push_back(t.point);
  out.label = classify_limit(traj, points, cfg.radius);
  out.monopoly = detect_monopoly(traj, cfg.window);
  out.dominated = out.label >= 0 && targets[out.label].dominated;
  return out;
}

McReport run_ensemble(const EnsembleConfig& cfg) { return ensemble<true>(cfg); }
McReport run_ensemble_serial(const EnsembleConfig& cfg) { return ensemble<false>(cfg); }

Frequency estimate_monopoly_prob(const EnsembleConfig& cfg) {
  const McReport rep = run_ensemble(cfg);
  Frequency f;
  f.successes = rep.monopoly_any;
  f.trials = rep.runs.size();
  f.value = static_cast<double>(f.successes) / static_cast<double>(f.trials);
  f.ci = rep.monopoly_ci;
  return f;
}

PhaseCurve scan_p(int m, const std::vector<double>& p_grid, const EnsembleConfig& per_point,
                  double threshold) {
  if (p_grid.empty()) throw InvalidArgument("scan_p: empty p grid");
  PhaseCurve curve;
  curve.threshold = threshold;
  for (double p : p_grid) {
    EnsembleConfig cfg = per_point;
    cfg.m = m;
    cfg.p = p;
    cfg.targets.clear();
    cfg.targets_params.reset();
    const McReport rep = run_ensemble(cfg);
    Frequency f;
    f.successes = rep.dominated;
    f.trials = rep.runs.size();
    f.value = static_cast<double>(f.successes) / static_cast<double>(f.trials);
    f.ci = rep.domination_ci;
    curve.p.push_back(p);
    curve.domination.push_back(f);
    if (!curve.first_above_threshold && f.value >= threshold) curve.first_above_threshold = p;
  }
  return curve;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const EnsembleConfig& cfg) {
  j = nlohmann::json::object();
  j["schema"] = 1;
  j["model"] = to_string(cfg.model);
  if (cfg.m) j["m"] = *cfg.m;
  if (cfg.seq) j["seq"] = *cfg.seq;
  j["p"] = cfg.p;
  j["d"] = cfg.d;
  j["colors"] = cfg.colors;
  if (!cfg.B0.empty()) j["B0"] = cfg.B0;
  if (!cfg.R0.empty()) j["R0"] = cfg.R0;
  if (!cfg.a.empty()) j["a"] = cfg.a;
  j["n_steps"] = cfg.n_steps;
  j["n_runs"] = cfg.n_runs;
  j["first_run"] = cfg.first_run;
  j["record_every"] = cfg.record_every;
  j["radius"] = cfg.radius;
  j["window"] = cfg.window;
  j["seed"] = cfg.master_seed;
  j["grid_n"] = cfg.grid_n;
  if (!cfg.targets.empty()) j["targets"] = cfg.targets;
}

EnsembleConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
  static const std::set<std::string> known = {
      "schema", "model", "m",     "seq",       "p",        "d",      "colors", "B0",
      "R0",     "a",     "n_steps", "n_runs", "first_run", "record_every", "radius", "window",
      "seed",   "grid_n", "targets", "targets_m", "targets_p"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw InvalidArgument("config: unknown field '" + k + "'");
  }
  if (j.value("schema", 0) != 1) throw InvalidArgument("config: \"schema\": 1 is required");
  EnsembleConfig cfg;
  try {
    if (j.contains("model")) cfg.model = model_from_string(j.at("model").get<std::string>());
    if (j.contains("m")) cfg.m = j.at("m").get<int>();
    if (j.contains("seq")) cfg.seq = seq_from_json(j.at("seq"));
    cfg.p = j.value("p", cfg.p);
    cfg.d = j.value("d", cfg.d);
    cfg.colors = j.value("colors", cfg.colors);
    if (j.contains("B0")) cfg.B0 = j.at("B0").get<std::vector<std::uint64_t>>();
    if (j.contains("R0")) cfg.R0 = j.at("R0").get<std::vector<std::uint64_t>>();
    if (j.contains("a")) cfg.a = j.at("a").get<std::vector<std::uint64_t>>();
    cfg.n_steps = j.value("n_steps", cfg.n_steps);
    cfg.n_runs = j.value("n_runs", cfg.n_runs);
    cfg.first_run = j.value("first_run", cfg.first_run);
    cfg.record_every = j.value("record_every", cfg.record_every);
    cfg.radius = j.value("radius", cfg.radius);
    cfg.window = j.value("window", cfg.window);
    cfg.master_seed = j.value("seed", cfg.master_seed);
    cfg.grid_n = j.value("grid_n", cfg.grid_n);
    if (j.contains("targets")) cfg.targets = j.at("targets").get<std::vector<std::vector<double>>>();
    if (j.contains("targets_m") || j.contains("targets_p")) {
      cfg.targets_params = std::make_pair(j.at("targets_m").get<int>(), j.at("targets_p").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  return cfg;
}

void to_json(nlohmann::json& j, const McReport& r) {
  j = nlohmann::json::object();
  j["config"] = r.config;
  const double n = static_cast<double>(r.runs.size());
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& l : r.labels) {
    labels.push_back({{"name", l.target.name},
                      {"point", l.target.point},
                      {"dominated", l.target.dominated},
                      {"count", l.count},
                      {"frequency", static_cast<double>(l.count) / n},
                      {"ci", {l.ci.lo, l.ci.hi}}});
  }
  j["labels"] = labels;
  j["unresolved"] = r.unresolved;
  nlohmann::json by_color = nlohmann::json::array();
  for (std::size_t c = 0; c < r.monopoly_by_color.size(); ++c) {
    by_color.push_back({{"color", c},
                        {"count", r.monopoly_by_color[c]},
                        {"ci", {r.monopoly_ci_by_color[c].lo, r.monopoly_ci_by_color[c].hi}}});
  }
  j["monopoly"] = {{"count", r.monopoly_any},
                   {"frequency", static_cast<double>(r.monopoly_any) / n},
                   {"ci", {r.monopoly_ci.lo, r.monopoly_ci.hi}},
                   {"by_color", by_color}};
  j["domination"] = {{"count", r.dominated},
                     {"frequency", static_cast<double>(r.dominated) / n},
                     {"ci", {r.domination_ci.lo, r.domination_ci.hi}}};
  j["n_runs"] = r.runs.size();
}

void to_json(nlohmann::json& j, const PhaseCurve& c) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < c.p.size(); ++i) {
    const auto& f = c.domination[i];
    points.push_back({{"p", c.p[i]},
                      {"dominated", f.successes},
                      {"runs", f.trials},
                      {"frequency", f.value},
                      {"ci", {f.ci.lo, f.ci.hi}}});
  }
  j = {{"threshold", c.threshold}, {"points", points}};
  j["first_p_above_threshold"] =
      c.first_above_threshold ? nlohmann::json(*c.first_above_threshold) : nlohmann::json(nullptr);
}

}  // namespace urnfield::mc
