#include "urnfield/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>

#include <omp.h>

#include "CLI11.hpp"
#include "urnfield/ctime.hpp"
#include "urnfield/errors.hpp"
#include "urnfield/io.hpp"
#include "urnfield/mc.hpp"
#include "urnfield/meanfield.hpp"
#include "urnfield/reinforcement.hpp"
#include "urnfield/rng.hpp"
#include "urnfield/stats.hpp"
#include "urnfield/urn_sim.hpp"

namespace urnfield::cli {
namespace {

using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::string format;
  int threads = 0;
};

/// What a command produced: the data file content and the resolved configuration.
struct Result {
  std::string data;
  json config;
  std::optional<std::uint64_t> seed = std::nullopt;  // when it differs from --seed (config files)
};

std::string pick_format(const Globals& g, const char* fallback) {
  return g.format.empty() ? fallback : g.format;
}

std::string render(const io::Table& t, const std::string& format) {
  return format == "json" ? io::dump(io::to_json(t)) : io::to_csv(t);
}

std::string render(const json& full, const io::Table& t, const std::string& format) {
  return format == "json" ? io::dump(full) : io::to_csv(t);
}

ReinforcementSeq seq_or_power(const std::string& seq_path, std::optional<int> m) {
  if (!seq_path.empty()) {
    if (m) throw InvalidArgument("give either --m or --seq, not both");
    return seq_from_json(io::read_json(seq_path));
  }
  if (!m) throw InvalidArgument("one of --m or --seq is required");
  if (*m < 1) throw InvalidArgument("--m must be >= 1");
  std::vector<double> c(*m + 1, 0.0);
  c.back() = 1.0;
  return make_polynomial(c);
}

std::vector<std::uint64_t> mdrem_grid(std::uint64_t horizon, std::uint64_t start) {
  std::vector<std::uint64_t> grid;
  for (std::uint64_t n = std::max<std::uint64_t>(16, start); n * 32 <= horizon; n *= 2) grid.push_back(n);
  return grid;
}

// ---------------------------------------------------------------------------
// Commands

struct FieldArgs {
  int m = 2;
  double p = 0.0;
  int resolution = 21;
};

Result cmd_field(const FieldArgs& a, const Globals& g) {
  const auto samples = meanfield::sample_field({a.m, a.p}, a.resolution);
  io::Table t{{"x", "y", "F1", "F2"}, {}};
  for (const auto& s : samples) t.add({s.x, s.y, s.f1, s.f2});
  return {render(t, pick_format(g, "csv")), {{"m", a.m}, {"p", a.p}, {"resolution", a.resolution}}};
}

struct EquilibriaArgs {
  int m = 2;
  double p = 0.0;
  int grid = 256;
  double tol = 1e-12;
};

io::Table equilibrium_table(const std::vector<meanfield::Equilibrium>& pts) {
  io::Table t{{"x", "y", "residual", "lambda_minus", "lambda_plus", "class", "provenance", "needs_review"},
              {}};
  for (const auto& e : pts) {
    t.add({e.x, e.y, e.residual, e.lambda_minus, e.lambda_plus, meanfield::to_string(e.cls),
           meanfield::to_string(e.provenance), e.needs_review});
  }
  return t;
}

Result cmd_equilibria(const EquilibriaArgs& a, const Globals& g) {
  const auto scan = meanfield::find_equilibria({a.m, a.p}, a.grid, a.tol);
  const io::Table t = equilibrium_table(scan.points);
  json full = {{"equilibria", io::to_json(t)},
               {"seeds", scan.seeds},
               {"newton_failures", scan.newton_failures}};
  return {render(full, t, pick_format(g, "csv")),
          {{"m", a.m}, {"p", a.p}, {"grid", a.grid}, {"tol", a.tol}}};
}

struct UmArgs {
  int m = 2;
  double p = 0.0;
};

Result cmd_um(const UmArgs& a, const Globals& g) {
  const meanfield::ModelParams params{a.m, a.p};
  const auto margin = meanfield::um_stability_margin(params);
  io::Table t{{"m", "p", "u", "stability_margin", "threshold", "sign_agrees", "u_closed_form"}, {}};
  const double closed = a.m == 2 ? meanfield::u2_closed(a.p) : std::nan("");
  t.add({std::int64_t{a.m}, a.p, margin.u, margin.margin, margin.rhs, margin.sign_agrees, closed});
  return {render(t, pick_format(g, "csv")), {{"m", a.m}, {"p", a.p}}};
}

struct SmArgs {
  int m = 2;
  double p = 0.0;
  double delta = 0.0;
};

Result cmd_sm(const SmArgs& a, const Globals& g) {
  const meanfield::ModelParams params{a.m, a.p};
  const auto e = meanfield::solve_sm(params, a.delta);
  io::Table t{{"m", "p", "x", "y", "residual", "lambda_minus", "lambda_plus", "class", "distance_to_limit"},
              {}};
  t.add({std::int64_t{a.m}, a.p, e.x, e.y, e.residual, e.lambda_minus, e.lambda_plus,
         meanfield::to_string(e.cls), std::hypot(e.x - a.p, e.y - 1.0)});
  return {render(t, pick_format(g, "csv")), {{"m", a.m}, {"p", a.p}, {"delta", a.delta}}};
}

struct SimulateArgs {
  std::string model = "ium";
  std::optional<int> m;
  std::string seq;
  double p = 0.0;
  int d = 2;
  int colors = 2;
  std::vector<std::uint64_t> B0, R0, a;
  std::uint64_t steps = 10000;
  std::uint64_t record_every = 1;
};

void add_trajectory_columns(io::Table& t, const std::string& prefix, std::size_t dims,
                            std::size_t totals) {
  for (std::size_t i = 0; i < dims; ++i) t.header.push_back(prefix + "x_" + std::to_string(i + 1));
  if (totals == 2) {
    t.header.push_back(prefix + "black_total");
    t.header.push_back(prefix + "red_total");
  } else {
    for (std::size_t i = 0; i < totals; ++i) t.header.push_back(prefix + "N_" + std::to_string(i + 1));
  }
}

void append_sample(std::vector<io::Cell>& row, const Trajectory& tr, std::size_t k) {
  for (double x : tr.proportions[k]) row.emplace_back(x);
  for (auto c : tr.color_totals[k]) row.emplace_back(c);
}

Result cmd_simulate(SimulateArgs a, const Globals& g) {
  const ReinforcementSeq seq = seq_or_power(a.seq, a.m);
  if (a.record_every == 0) throw InvalidArgument("--record-every must be >= 1");
  const std::size_t urns = a.model == "ium" ? static_cast<std::size_t>(std::max(a.d, 1)) : 2;
  if (a.B0.empty()) a.B0.assign(urns, 1);
  if (a.R0.empty()) a.R0.assign(urns, 1);
  if (a.a.empty()) a.a.assign(std::max(a.colors, 1), 1);

  json config = {{"model", a.model}, {"seq", seq}, {"steps", a.steps}, {"record_every", a.record_every}};
  io::Table t{{"step"}, {}};
  if (a.model == "ium") {
    UrnState s = init_ium(a.d, a.B0, a.R0, a.p, seq, g.seed);
    const Trajectory tr = run(s, a.steps, a.record_every, g.seed);
    add_trajectory_columns(t, "", a.d, 2);
    for (std::size_t k = 0; k < tr.steps.size(); ++k) {
      std::vector<io::Cell> row{tr.steps[k]};
      append_sample(row, tr, k);
      t.add(std::move(row));
    }
    config.update({{"p", a.p}, {"d", a.d}, {"B0", a.B0}, {"R0", a.R0}});
  } else if (a.model == "multicolor") {
    MultiColorState s = init_multicolor(a.colors, a.a, a.d, seq, g.seed);
    const Trajectory tr = run(s, a.steps, a.record_every, g.seed);
    add_trajectory_columns(t, "", a.colors, a.colors);
    for (std::size_t k = 0; k < tr.steps.size(); ++k) {
      std::vector<io::Cell> row{tr.steps[k]};
      append_sample(row, tr, k);
      t.add(std::move(row));
    }
    config.update({{"colors", a.colors}, {"d", a.d}, {"a", a.a}});
  } else if (a.model == "sequential") {
    SequentialState s = init_sequential(a.B0, a.R0, seq, g.seed);
    const Trajectory tr = run(s, a.steps, a.record_every, g.seed);
    add_trajectory_columns(t, "", 2, 2);
    for (std::size_t k = 0; k < tr.steps.size(); ++k) {
      std::vector<io::Cell> row{tr.steps[k]};
      append_sample(row, tr, k);
      t.add(std::move(row));
    }
    config.update({{"B0", a.B0}, {"R0", a.R0}});
  } else if (a.model == "coupled") {
    const CoupledRun cr = run_coupled(a.B0, a.R0, a.p, seq, g.seed, a.steps, a.record_every);
    add_trajectory_columns(t, "ium_", 2, 2);
    add_trajectory_columns(t, "seq_", 2, 2);
    t.header.push_back("violations");
    for (std::size_t k = 0; k < cr.ium.steps.size(); ++k) {
      std::vector<io::Cell> row{cr.ium.steps[k]};
      append_sample(row, cr.ium, k);
      append_sample(row, cr.sequential, k);
      row.emplace_back(cr.cumulative_violations[k]);
      t.add(std::move(row));
    }
    config.update({{"p", a.p}, {"B0", a.B0}, {"R0", a.R0}});
  } else if (a.model == "embedding") {
    // Event log of the continuous-time construction; --steps counts jumps.
    EmbeddingOptions opt;
    opt.keep_timer_records = false;
    EmbeddingState s = init_embedding(a.colors, a.a, a.d, seq, g.seed, opt);
    t.header = {"jump_index", "tau", "edge"};
    for (int i = 0; i < a.colors; ++i) t.header.push_back("Z_" + std::to_string(i + 1));
    t.header.push_back("refresh_flag");
    for (std::uint64_t k = 0; k < a.steps; ++k) advance_to_next_jump(s);
    for (const auto& ev : s.log) {
      if (ev.index % a.record_every != 0 && ev.index != a.steps) continue;
      std::vector<io::Cell> row{ev.index, ev.tau, std::int64_t{ev.edge}};
      for (auto z : ev.Z) row.emplace_back(z);
      row.emplace_back(ev.refresh);
      t.add(std::move(row));
    }
    config.update({{"colors", a.colors}, {"d", a.d}, {"a", a.a}, {"boundary_rate", "refreshed"}});
  } else {
    throw InvalidArgument("unknown model '" + a.model + "'");
  }
  return {render(t, pick_format(g, "csv")), config};
}

io::Table run_table(const mc::McReport& r) {
  io::Table t{{"run_index", "seed", "label"}, {}};
  const std::size_t dims = r.runs.empty() ? 0 : r.runs.front().final_point.size();
  if (dims == 2) {
    t.header.insert(t.header.end(), {"x_final", "y_final"});
  } else {
    for (std::size_t i = 0; i < dims; ++i) t.header.push_back("x_final_" + std::to_string(i + 1));
  }
  t.header.insert(t.header.end(), {"monopoly_color", "dominated"});
  for (const auto& run : r.runs) {
    std::vector<io::Cell> row{run.run_index, run.seed,
                              run.label >= 0 ? r.labels[run.label].target.name : std::string("unresolved")};
    for (double x : run.final_point) row.emplace_back(x);
    row.emplace_back(std::int64_t{run.monopoly});
    row.emplace_back(run.dominated);
    t.add(std::move(row));
  }
  return t;
}

Result cmd_mc(const std::string& path, const Globals& g) {
  mc::EnsembleConfig cfg = mc::config_from_json(io::read_json(path));
  if (g.seed_given) cfg.master_seed = g.seed;
  const mc::McReport rep = mc::run_ensemble(cfg);
  json full = rep;
  full["runs"] = io::to_json(run_table(rep));
  return {render(full, run_table(rep), pick_format(g, "json")), json(mc::normalized(cfg)), cfg.master_seed};
}

Result cmd_scan(const std::string& path, const Globals& g) {
  json raw = io::read_json(path);
  if (!raw.is_object()) throw InvalidArgument("config: expected a JSON object");
  if (!raw.contains("p_grid") || !raw.contains("m")) throw InvalidArgument("scan config needs m and p_grid");
  std::vector<double> grid;
  double threshold = 0.99;
  int m = 0;
  try {
    grid = raw.at("p_grid").get<std::vector<double>>();
    threshold = raw.value("threshold", threshold);
    m = raw.at("m").get<int>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  raw.erase("p_grid");
  raw.erase("threshold");
  mc::EnsembleConfig cfg = mc::config_from_json(raw);
  if (g.seed_given) cfg.master_seed = g.seed;
  const mc::PhaseCurve curve = mc::scan_p(m, grid, cfg, threshold);
  io::Table t{{"p", "dominated", "runs", "frequency", "ci_lo", "ci_hi"}, {}};
  for (std::size_t i = 0; i < curve.p.size(); ++i) {
    const auto& f = curve.domination[i];
    t.add({curve.p[i], f.successes, f.trials, f.value, f.ci.lo, f.ci.hi});
  }
  json config = cfg;
  config["p_grid"] = grid;
  config["threshold"] = threshold;
  return {render(json(curve), t, pick_format(g, "json")), config, cfg.master_seed};
}

Result cmd_check_w(const std::string& seq_path, std::uint64_t horizon, const Globals& g) {
  const ReinforcementSeq seq = seq_from_json(io::read_json(seq_path));
  std::vector<ConditionVerdict> verdicts{check_strong(seq, horizon), check_variation_bound(seq, horizon),
                                         check_remainder_bound(seq, horizon)};
  const auto grid = mdrem_grid(horizon, seq.domain_start());
  if (grid.size() >= 2) {
    const auto [rem, sq] = check_mdrem_conditions(seq, grid, {2, 4, 8, 16, 32});
    verdicts.push_back(rem);
    verdicts.push_back(sq);
  }
  io::Table t{{"condition", "horizon", "estimate", "verdict", "note"}, {}};
  for (const auto& v : verdicts) {
    t.add({to_string(v.condition), v.horizon, v.estimate, to_string(v.verdict), v.note});
  }
  json full = {{"sequence", seq}, {"verdicts", verdicts}};
  return {render(full, t, pick_format(g, "json")), {{"seq", seq}, {"horizon", horizon}}};
}

struct EmbedArgs {
  int colors = 2;
  std::vector<std::uint64_t> a;
  int d = 2;
  std::string seq;
  std::optional<int> m;
  std::uint64_t k = 1;
  std::uint64_t samples = 100000;
  bool broken_refresh = false;
};

Result cmd_embed_test(EmbedArgs a, const Globals& g) {
  const ReinforcementSeq seq = seq_or_power(a.seq, a.m);
  if (a.a.empty()) a.a.assign(std::max(a.colors, 1), 1);
  if (a.samples < 100) throw InvalidArgument("--samples must be >= 100");
  std::vector<stats::Outcome> embedded, discrete;
  embedded.reserve(a.samples);
  discrete.reserve(a.samples);
  for (std::uint64_t i = 0; i < a.samples; ++i) {
    embedded.push_back(
        sample_embedding(a.colors, a.a, a.d, seq, derive_seed(g.seed, 2 * i), a.k, a.broken_refresh));
    MultiColorState s = init_multicolor(a.colors, a.a, a.d, seq, derive_seed(g.seed, 2 * i + 1));
    for (std::uint64_t j = 0; j < a.k; ++j) step_multicolor(s);
    discrete.push_back(s.N);
  }
  const auto cmp = stats::compare_laws(embedded, discrete);
  io::Table t{{"outcome", "embedding", "discrete"}, {}};
  for (const auto& [o, c] : cmp.categories) {
    std::string key;
    for (std::size_t i = 0; i < o.size(); ++i) key += (i ? " " : "") + std::to_string(o[i]);
    t.add({key, c.first, c.second});
  }
  json config = {{"colors", a.colors}, {"a", a.a},       {"d", a.d},
                 {"seq", seq},         {"k", a.k},       {"samples", a.samples},
                 {"broken_refresh", a.broken_refresh},
                 {"boundary_rate", "refreshed"}};
  json full = {{"config", config},
               {"statistic", cmp.statistic},
               {"dof", cmp.dof},
               {"p_value", cmp.p_value},
               {"categories", io::to_json(t)}};
  return {render(full, t, pick_format(g, "json")), config};
}

int set_threads(const Globals& g) {
  int threads = g.threads;
  if (threads == 0) {
    if (const char* env = std::getenv("URNFIELD_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw InvalidArgument("URNFIELD_THREADS must be an integer");
      }
    }
  }
  if (threads < 0) throw InvalidArgument("thread count must be >= 0");
  if (threads > 0) omp_set_num_threads(threads);
  return threads;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interacting urn models with graph-based and global reinforcement", "urnfield"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version());
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--out", g.out, "Output data file; a manifest is written to <out>.manifest.json");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", g.threads, "OpenMP threads for ensembles (0: URNFIELD_THREADS or default)");
  app.fallthrough();

  std::function<Result()> action;
  std::string command;

  FieldArgs fa;
  auto* field = app.add_subcommand("field", "Sample the mean-field vector field on a grid");
  field->add_option("--m", fa.m)->required()->check(CLI::Range(2, 1000));
  field->add_option("--p", fa.p)->required()->check(CLI::Range(0.0, 1.0));
  field->add_option("--resolution", fa.resolution)->check(CLI::Range(2, 100000));
  field->callback([&] { action = [&] { return cmd_field(fa, g); }; });

  EquilibriaArgs ea;
  auto* eq = app.add_subcommand("equilibria", "Find and classify equilibria");
  eq->add_option("--m", ea.m)->required()->check(CLI::Range(2, 1000));
  eq->add_option("--p", ea.p)->required()->check(CLI::Range(0.0, 1.0));
  eq->add_option("--grid", ea.grid)->check(CLI::Range(64, 100000));
  eq->add_option("--tol", ea.tol)->check(CLI::PositiveNumber);
  eq->callback([&] { action = [&] { return cmd_equilibria(ea, g); }; });

  UmArgs ua;
  auto* um = app.add_subcommand("um", "Solve for u_m and its stability margin");
  um->add_option("--m", ua.m)->required()->check(CLI::Range(2, 1000));
  um->add_option("--p", ua.p)->required()->check(CLI::Range(0.0, 1.0));
  um->callback([&] { action = [&] { return cmd_um(ua, g); }; });

  SmArgs sa;
  auto* sm = app.add_subcommand("sm", "Construct the stable point s_m near (p, 1)");
  sm->add_option("--m", sa.m)->required()->check(CLI::Range(2, 1000));
  sm->add_option("--p", sa.p)->required()->check(CLI::Range(0.0, 1.0));
  sm->add_option("--delta", sa.delta, "Search margin; 0 picks the default");
  sm->callback([&] { action = [&] { return cmd_sm(sa, g); }; });

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate one trajectory");
  simulate->add_option("--model", sim.model)
      ->check(CLI::IsMember({"ium", "multicolor", "sequential", "coupled", "embedding"}));
  simulate->add_option("--m", sim.m, "W(n) = n^m");
  simulate->add_option("--seq", sim.seq, "Reinforcement sequence JSON file");
  simulate->add_option("--p", sim.p)->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--d", sim.d);
  simulate->add_option("--Nc,--colors", sim.colors);
  simulate->add_option("--B0", sim.B0)->delimiter(',');
  simulate->add_option("--R0", sim.R0)->delimiter(',');
  simulate->add_option("--a", sim.a)->delimiter(',');
  simulate->add_option("--steps", sim.steps);
  simulate->add_option("--record-every", sim.record_every);
  simulate->callback([&] { action = [&] { return cmd_simulate(sim, g); }; });

  std::string mc_config;
  auto* mc_cmd = app.add_subcommand("mc", "Run a Monte Carlo ensemble");
  mc_cmd->add_option("--config", mc_config)->required();
  mc_cmd->callback([&] { action = [&] { return cmd_mc(mc_config, g); }; });

  std::string scan_config;
  auto* scan = app.add_subcommand("scan", "Domination frequency across a p grid");
  scan->add_option("--config", scan_config)->required();
  scan->callback([&] { action = [&] { return cmd_scan(scan_config, g); }; });

  std::string check_seq;
  std::uint64_t horizon = kDefaultHorizon;
  auto* check = app.add_subcommand("check-w", "Check reinforcement conditions for a sequence");
  check->add_option("--seq", check_seq)->required();
  check->add_option("--horizon", horizon)->check(CLI::Range(std::uint64_t{16}, std::uint64_t{1} << 40));
  check->callback([&] { action = [&] { return cmd_check_w(check_seq, horizon, g); }; });

  EmbedArgs em;
  auto* embed = app.add_subcommand("embed-test", "Compare the continuous-time embedding with the discrete urn");
  embed->add_option("--Nc,--colors", em.colors);
  embed->add_option("--a", em.a)->delimiter(',');
  embed->add_option("--d", em.d);
  embed->add_option("--seq", em.seq);
  embed->add_option("--m", em.m);
  embed->add_option("--k", em.k);
  embed->add_option("--samples", em.samples);
  embed->add_flag("--broken-refresh", em.broken_refresh, "Refresh rates after every jump (negative control)");
  embed->callback([&] { action = [&] { return cmd_embed_test(em, g); }; });

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::CallForVersion& e) {
    out << io::version() << "\n";
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  }
  for (auto* sub : app.get_subcommands()) command = sub->get_name();

  try {
    set_threads(g);
    const auto start = std::chrono::steady_clock::now();
    const Result r = action();
    if (g.out.empty()) {
      out << r.data;
      return ok;
    }
    io::write_file(g.out, r.data);
    io::Manifest man;
    man.command = command;
    man.argv.assign(args.begin() + 1, args.end());
    man.config = r.config;
    man.seed = r.seed.value_or(g.seed);
    man.add_output(g.out, r.data);
    man.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    io::write_file(g.out + ".manifest.json", io::dump(man.to_json()));
    return ok;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const ConditionViolation& e) {
    err << "condition violation: " << e.what() << "\n";
    return condition;
  } catch (const NotFound& e) {
    err << "not found: " << e.what() << "\n";
    return condition;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return io_error;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return failure;
  }
}

}  // namespace urnfield::cli
