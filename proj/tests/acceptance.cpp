// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <omp.h>

#include "json.hpp"
#include "urnfield/cli.hpp"
#include "urnfield/ctime.hpp"
#include "urnfield/io.hpp"
#include "urnfield/mc.hpp"
#include "urnfield/meanfield.hpp"
#include "urnfield/rng.hpp"
#include "urnfield/stats.hpp"
#include "urnfield/urn_sim.hpp"

using namespace urnfield;
using namespace urnfield::meanfield;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Check gradient_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(20240601);
  const double h = 1e-4;
  std::uniform_real_distribution<double> u(h, 1 - h);
  double worst = 0.0;
  for (int m : {2, 3, 5}) {
    for (double p : {0.0, 0.3, 0.5}) {
      const ModelParams prm{m, p};
      for (int i = 0; i < 100; ++i) {
        const double x = u(gen), y = u(gen);
        const double gx = (lyapunov(prm, x + h, y) - lyapunov(prm, x - h, y)) / (2 * h);
        const double gy = (lyapunov(prm, x, y + h) - lyapunov(prm, x, y - h)) / (2 * h);
        const auto f = field(prm, x, y);
        worst = std::max({worst, std::abs(gx - f.x), std::abs(gy - f.y)});
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 1.0, fmt("max |grad L - F| = %.2e over 900 points, %.3f s", worst, secs)};
}

Check closed_form_lyapunov() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int m : {2, 3}) {
    for (int i = 0; i < 100; ++i) {
      const double p = u(gen), x = u(gen), y = u(gen);
      worst = std::max(worst, std::abs(lyapunov({m, p}, x, y) - lyapunov_closed(m, p, x, y)));
    }
  }
  return {worst < 1e-8, fmt("max |L_quad - L_closed| = %.2e (m = 2, 3; 100 points each)", worst)};
}

Check eigenvalue_anchors() {
  double worst = 0.0;
  for (int m = 2; m <= 10; ++m) {
    for (double p : {0.0, 0.25, 0.5, 0.75}) {
      const ModelParams prm{m, p};
      worst = std::max({worst, std::abs(eigenvalues(prm, 0.5, 0.5).plus - (m - 1)),
                        std::abs(eigenvalues(prm, 0, 0).plus + 1), std::abs(eigenvalues(prm, 1, 1).plus + 1)});
    }
  }
  return {worst < 1e-9, fmt("max anchor deviation %.2e", worst)};
}

Check equilibria_at_zero() {
  bool ok = true;
  std::string sizes;
  for (int m : {2, 3, 5}) {
    const auto scan = find_equilibria({m, 0.0}, 128, 1e-10);
    sizes += fmt(" m=%d:%zu", m, scan.points.size());
    ok = ok && scan.points.size() == 9;
    for (const auto& e : scan.points) {
      auto on_grid = [](double v) {
        return std::abs(v) < 1e-10 || std::abs(v - 0.5) < 1e-10 || std::abs(v - 1) < 1e-10;
      };
      ok = ok && on_grid(e.x) && on_grid(e.y);
    }
  }
  return {ok, "points found:" + sizes};
}

Check m2_threshold() {
  auto margin = [](double p) { return um_stability_margin({2, p}).margin; };
  double lo = 0.2, hi = 0.4;
  if (!(margin(lo) < 0 && margin(hi) > 0)) return {false, "no sign change in [0.2, 0.4]"};
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (margin(mid) < 0 ? lo : hi) = mid;
  }
  const double crossing = 0.5 * (lo + hi);
  const double target = 1 - std::sqrt(2.0) / 2;
  double worst_u = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double p = 0.4999 * i / 99.0;
    worst_u = std::max(worst_u, std::abs(solve_um({2, p}) - (0.5 - std::sqrt(1 - 2 * p) / 2)));
  }
  const double err = std::abs(crossing - target);
  return {err < 1e-6 && worst_u < 1e-10,
          fmt("crossing %.9f vs %.9f (err %.1e); max |u_2 - closed| %.1e", crossing, target, err, worst_u)};
}

Check high_p_classification() {
  int off_corner = 0, bad = 0;
  for (int m : {3, 5}) {
    for (double p : {0.5, 0.6}) {
      for (const auto& e : find_equilibria({m, p}).points) {
        const bool corner = (e.x == 0 && e.y == 0) || (e.x == 1 && e.y == 1);
        if (corner) continue;
        ++off_corner;
        bad += e.cls != StabilityClass::unstable;
      }
    }
  }
  return {bad == 0 && off_corner > 0, fmt("%d off-corner equilibria, %d not unstable", off_corner, bad)};
}

Check sm_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  double prev = INFINITY;
  std::string trail;
  for (int m : {20, 30, 40}) {
    try {
      const auto s = solve_sm({m, 0.3});
      const double dist = std::hypot(s.x - 0.3, s.y - 1.0);
      ok = ok && s.cls == StabilityClass::strictly_stable && dist < prev;
      prev = dist;
      trail += fmt(" m=%d:%.2e", m, dist);
    } catch (const std::exception& e) {
      ok = false;
      trail += fmt(" m=%d:%s", m, e.what());
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && prev < 0.05 && secs < 1.0;
  return {ok, "distance to (0.3,1):" + trail + fmt(", %.3f s", secs)};
}

Check inequality_grids() {
  long violations = 0;
  for (int m = 3; m <= 12; ++m) {
    for (int i = 1; i <= 10000; ++i) violations += lemma_gap(m, (1 / std::sqrt(5.0)) * i / 10001.0) < 0;
  }
  for (int m = 2; m <= 12; ++m) {
    for (int i = 1; i <= 10000; ++i) violations += !(beta(m, 0.5 * i / 10001.0) > 0);
  }
  return {violations == 0, fmt("%ld violations on 210000 grid points", violations)};
}

Check coupling() {
  std::uint64_t violations = 0;
  const auto seq = make_polynomial({0, 0, 1});
  for (double p : {0.2, 0.8}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      violations += run_coupled({1, 1}, {1, 1}, p, seq, derive_seed(99, seed), 10000, 10000).violations;
    }
  }
  return {violations == 0, fmt("%llu violations over 200 coupled runs of 1e4 steps", (unsigned long long)violations)};
}

double law_p_value(const ReinforcementSeq& seq, std::uint64_t k, std::uint64_t master, bool broken) {
  const int n = 100000;
  const std::vector<std::uint64_t> a{1, 1};
  std::vector<stats::Outcome> emb(n), disc(n);
  for (int i = 0; i < n; ++i) {
    emb[i] = sample_embedding(2, a, 2, seq, derive_seed(master, 2 * i), k, broken);
    auto s = init_multicolor(2, a, 2, seq, derive_seed(master, 2 * i + 1));
    for (std::uint64_t j = 0; j < k; ++j) step_multicolor(s);
    disc[i] = s.N;
  }
  return stats::compare_laws(emb, disc).p_value;
}

Check embedding_law() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sq = make_polynomial({0, 0, 1});
  bool ok = true;
  std::string trail;
  for (std::uint64_t k : {1, 2, 3}) {
    std::vector<double> pv(100);
#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < 100; ++rep) pv[rep] = law_p_value(sq, k, derive_seed(1000 + k, rep), false);
    const int pass = static_cast<int>(std::count_if(pv.begin(), pv.end(), [](double v) { return v > 1e-3; }));
    ok = ok && pass >= 99;
    trail += fmt(" k=%llu:%d/100", (unsigned long long)k, pass);
  }
  // Weights alternating 50, 1 along n make the within-block refresh matter.
  const auto zigzag = make_table({}, TailRule{2, {PolyPart{{50}}, PolyPart{{1}}}});
  const double good = law_p_value(zigzag, 3, 4242, false);
  const double broken = law_p_value(zigzag, 3, 4243, true);
  ok = ok && good > 1e-3 && broken < 1e-3;
  return {ok, "meta-repetitions with p > 1e-3:" + trail +
                  fmt("; alternating W, k=3: correct p=%.3g, per-jump refresh p=%.3g; %.0f s", good, broken,
                      seconds_since(t0))};
}

Check monopoly_at_p1() {
  bool ok = true;
  std::string trail;
  struct Case {
    const char* name;
    ReinforcementSeq seq;
  };
  const std::vector<Case> cases{{"(n+1)^3", make_polynomial({1, 3, 3, 1})}, {"interleaved quartic", make_interleaved_quartic()}};
  for (const auto& c : cases) {
    for (int colors : {2, 3}) {
      mc::EnsembleConfig cfg;
      cfg.model = mc::Model::multicolor;
      cfg.seq = c.seq;
      cfg.colors = colors;
      cfg.n_steps = 100000;
      cfg.n_runs = 500;
      cfg.master_seed = 11 + colors;
      const auto f = mc::estimate_monopoly_prob(cfg);
      ok = ok && f.value >= 0.95 && f.ci.lo > 0.5;
      trail += fmt(" %s Nc=%d: %.3f [%.3f, %.3f];", c.name, colors, f.value, f.ci.lo, f.ci.hi);
    }
  }
  mc::EnsembleConfig weak;
  weak.model = mc::Model::multicolor;
  weak.seq = make_polynomial({0, 1});
  weak.n_steps = 100000;
  weak.n_runs = 500;
  weak.master_seed = 5;
  const auto f = mc::estimate_monopoly_prob(weak);
  ok = ok && f.value <= 0.05;
  trail += fmt(" control W(n)=n: %.3f", f.value);
  return {ok, "monopoly frequency:" + trail};
}

Check non_domination_small_p() {
  mc::EnsembleConfig cfg;
  cfg.m = 2;
  cfg.p = 0.2;
  cfg.n_steps = 100000;
  cfg.n_runs = 1000;
  cfg.master_seed = 2024;
  const auto rep = mc::run_ensemble(cfg);
  const double u = u2_closed(0.2);
  bool ok = true;
  std::string trail;
  for (const auto& l : rep.labels) {
    const auto& pt = l.target.point;
    const bool stable_pair = std::abs(pt[0] - u) < 1e-8 && std::abs(pt[1] - (1 - u)) < 1e-8;
    const bool corner = l.target.dominated;
    if (stable_pair || corner) {
      ok = ok && l.ci.lo > 0.0;
      trail += fmt(" %s: %llu [%.3f, %.3f];", l.target.name.c_str(), (unsigned long long)l.count, l.ci.lo, l.ci.hi);
    }
  }
  trail += fmt(" unresolved %llu", (unsigned long long)rep.unresolved);
  return {ok, "m=2 p=0.2 1000 runs:" + trail};
}

Check domination_high_p() {
  mc::EnsembleConfig cfg;
  cfg.m = 3;
  cfg.p = 0.55;
  cfg.n_steps = 100000;
  cfg.n_runs = 500;
  cfg.master_seed = 55;
  const auto rep = mc::run_ensemble(cfg);
  const double freq = rep.dominated / 500.0;
  return {freq >= 0.95, fmt("domination %.3f [%.3f, %.3f], unresolved %llu", freq, rep.domination_ci.lo,
                            rep.domination_ci.hi, (unsigned long long)rep.unresolved)};
}

Check determinism() {
  const auto dir = fs::temp_directory_path() / ("urnfield_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string mc_cfg = (dir / "mc.json").string();
  io::write_file(mc_cfg, R"({"schema":1,"model":"ium","m":3,"p":0.3,"n_runs":12,"n_steps":5000,"seed":9})");
  const std::string scan_cfg = (dir / "scan.json").string();
  io::write_file(scan_cfg, R"({"schema":1,"m":2,"p_grid":[0.1,0.4],"n_runs":6,"n_steps":3000})");
  const std::string seq = (dir / "seq.json").string();
  io::write_file(seq, nlohmann::json(make_interleaved_quartic()).dump());

  const std::vector<std::vector<std::string>> commands{
      {"field", "--m", "3", "--p", "0.4", "--resolution", "11"},
      {"equilibria", "--m", "3", "--p", "0.2"},
      {"um", "--m", "4", "--p", "0.1"},
      {"sm", "--m", "30", "--p", "0.3"},
      {"simulate", "--model", "ium", "--m", "3", "--p", "0.2", "--steps", "10000", "--record-every", "10"},
      {"simulate", "--model", "multicolor", "--Nc", "3", "--m", "3", "--steps", "5000"},
      {"simulate", "--model", "sequential", "--m", "2", "--steps", "5000"},
      {"simulate", "--model", "coupled", "--m", "2", "--p", "0.4", "--steps", "5000"},
      {"simulate", "--model", "embedding", "--Nc", "3", "--seq", seq, "--steps", "3000"},
      {"mc", "--config", mc_cfg},
      {"--threads", "3", "mc", "--config", mc_cfg},
      {"--format", "csv", "mc", "--config", mc_cfg},
      {"scan", "--config", scan_cfg},
      {"check-w", "--seq", seq, "--horizon", "100000"},
      {"embed-test", "--m", "2", "--k", "3", "--samples", "2000"},
  };
  int identical = 0, total = 0;
  std::string failures;
  std::string mc_reference;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::string data[2];
    nlohmann::json manifest[2];
    for (int rep = 0; rep < 2; ++rep) {
      const std::string out = (dir / fmt("out%zu", c)).string();
      std::vector<std::string> args{"urnfield", "--seed", "17", "--out", out};
      args.insert(args.end(), commands[c].begin(), commands[c].end());
      std::ostringstream o, e;
      if (cli::run_cli(args, o, e) != 0) failures += " [" + commands[c][0] + ": " + e.str() + "]";
      data[rep] = io::read_file(out);
      manifest[rep] = nlohmann::json::parse(io::read_file(out + ".manifest.json"));
      manifest[rep].erase("timing");
    }
    ++total;
    if (data[0] == data[1] && manifest[0] == manifest[1] && !data[0].empty()) ++identical;
    else failures += " " + std::to_string(c);
    if (commands[c][0] == "mc") mc_reference = data[0];
    // The thread count must not change the report either.
    if (commands[c][0] == "--threads" && data[0] != mc_reference) failures += " threads";
  }
  fs::remove_all(dir);
  return {identical == total && failures.empty(),
          fmt("%d/%d invocations byte-identical on rerun", identical, total) + (failures.empty() ? "" : "; failed:" + failures)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
      {"gradient identity", gradient_identity},
      {"closed-form Lyapunov", closed_form_lyapunov},
      {"eigenvalue anchors", eigenvalue_anchors},
      {"equilibria at p = 0", equilibria_at_zero},
      {"m = 2 stability threshold", m2_threshold},
      {"p >= 1/2 classification", high_p_classification},
      {"s_m convergence", sm_convergence},
      {"inequality grids", inequality_grids},
      {"pathwise coupling", coupling},
      {"embedding law", embedding_law},
      {"monopoly at p = 1", monopoly_at_p1},
      {"non-domination at small p", non_domination_small_p},
      {"domination at p >= 1/2", domination_high_p},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c = {false, std::string("exception: ") + e.what()};
    }
    failed += !c.pass;
    std::printf("%s  %2zu %-28s %s\n", c.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, c.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed ? 1 : 0;
}
