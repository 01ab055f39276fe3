#include "urnfield/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "urnfield/errors.hpp"
#include "urnfield/quadrature.hpp"

namespace urnfield::meanfield {

void validate(const ModelParams& params) {
  if (params.m < 2) throw InvalidArgument("meanfield: m must be >= 2");
  if (!(params.p >= 0.0 && params.p <= 1.0)) throw InvalidArgument("meanfield: p must lie in [0, 1]");
}

double power_ratio(int m, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return 1.0 / (1.0 + std::exp(m * (std::log1p(-t) - std::log(t))));
}

double f_weight(int m, double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double r = power_ratio(m, t);
  return r * (1.0 - r) / (t * (1.0 - t));
}

Vec2 field(const ModelParams& params, double x, double y) {
  const int m = params.m;
  const double p = params.p;
  const double rz = power_ratio(m, 0.5 * (x + y));
  return {-x + (1.0 - p) * power_ratio(m, x) + p * rz, -y + (1.0 - p) * power_ratio(m, y) + p * rz};
}

Mat2 jacobian(const ModelParams& params, double x, double y) {
  const int m = params.m;
  const double p = params.p;
  const double off = 0.5 * m * p * f_weight(m, 0.5 * (x + y));
  Mat2 j;
  j[0][0] = -1.0 + m * (1.0 - p) * f_weight(m, x) + off;
  j[1][1] = -1.0 + m * (1.0 - p) * f_weight(m, y) + off;
  j[0][1] = j[1][0] = off;
  return j;
}

Eigenpair eigenvalues(const ModelParams& params, double x, double y) {
  const int m = params.m;
  const double p = params.p;
  const double fx = f_weight(m, x);
  const double fy = f_weight(m, y);
  const double fz = f_weight(m, 0.5 * (x + y));
  const double centre = -1.0 + 0.5 * m * p * fz + 0.5 * m * (1.0 - p) * (fx + fy);
  const double a = m * (1.0 - p) * (fx - fy);
  const double b = m * p * fz;
  const double radius = 0.5 * std::hypot(a, b);
  return {centre - radius, centre + radius};
}

double antiderivative(int m, double x, double abs_tol) {
  if (x <= 0.0) return 0.0;
  return numerics::adaptive_simpson([m](double u) { return power_ratio(m, u); }, 0.0, x, abs_tol);
}

double lyapunov(const ModelParams& params, double x, double y, double abs_tol) {
  const double p = params.p;
  const int m = params.m;
  return (1.0 - p) * antiderivative(m, x, abs_tol) + (1.0 - p) * antiderivative(m, y, abs_tol) +
         2.0 * p * antiderivative(m, 0.5 * (x + y), abs_tol) - 0.5 * (x * x + y * y);
}

double lyapunov_closed(int m, double p, double x, double y) {
  const double s = x + y;
  if (m == 2) {
    return (1.0 - p) / 4.0 * std::log(x * x + (1 - x) * (1 - x)) +
           (1.0 - p) / 4.0 * std::log(y * y + (1 - y) * (1 - y)) +
           p / 2.0 * std::log(s * s + (2 - s) * (2 - s)) - p * std::log(2.0) - x * x / 2 + x / 2 -
           y * y / 2 + y / 2;
  }
  if (m == 3) {
    return (1.0 - p) / 9.0 *
               (std::log(std::pow(x, 3) + std::pow(1 - x, 3)) +
                std::log(std::pow(y, 3) + std::pow(1 - y, 3))) +
           2.0 * p / 9.0 * std::log(std::pow(s, 3) + std::pow(2 - s, 3)) -
           2.0 * p / 3.0 * std::log(2.0) - (4.0 + p) / 12.0 * x * x - (4.0 + p) / 12.0 * y * y +
           p * x * y / 6.0 + s / 3.0;
  }
  throw InvalidArgument("lyapunov_closed: only m = 2 and m = 3 have closed forms");
}

std::string to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::strictly_stable: return "strictly_stable";
    case StabilityClass::stable: return "stable";
    case StabilityClass::unstable: return "unstable";
  }
  return "?";
}

std::string to_string(Provenance p) {
  return p == Provenance::exact_known ? "exact_known" : "newton_refined";
}

StabilityClass classify(double lambda_plus) {
  if (std::abs(lambda_plus) < kStabilityDeadBand) return StabilityClass::stable;
  return lambda_plus < 0.0 ? StabilityClass::strictly_stable : StabilityClass::unstable;
}

Equilibrium make_equilibrium(const ModelParams& params, double x, double y, Provenance prov) {
  Equilibrium e;
  e.x = x;
  e.y = y;
  const Vec2 f = field(params, x, y);
  e.residual = std::hypot(f.x, f.y);
  const Eigenpair ev = eigenvalues(params, x, y);
  e.lambda_minus = ev.minus;
  e.lambda_plus = ev.plus;
  e.cls = classify(ev.plus);
  e.needs_review = e.cls == StabilityClass::stable;
  e.provenance = prov;
  return e;
}

namespace {

double norm_inf(const Vec2& v) { return std::max(std::abs(v.x), std::abs(v.y)); }

std::vector<Vec2> known_points(const ModelParams& params) {
  if (params.p == 0.0) {
    std::vector<Vec2> pts;
    for (double x : {0.0, 0.5, 1.0}) {
      for (double y : {0.0, 0.5, 1.0}) pts.push_back({x, y});
    }
    return pts;
  }
  return {{0.0, 0.0}, {0.5, 0.5}, {1.0, 1.0}};
}

// Damped Newton inside the unit square. Iterates past `tol` until the residual
// stops improving, so that degenerate roots (linear convergence) are still pinned down.
bool newton(const ModelParams& params, Vec2& z, double tol) {
  Vec2 f = field(params, z.x, z.y);
  for (int it = 0; it < 200; ++it) {
    if (norm_inf(f) == 0.0) break;
    const Mat2 j = jacobian(params, z.x, z.y);
    const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if (!(std::abs(det) > 1e-300)) break;
    const double dx = -(j[1][1] * f.x - j[0][1] * f.y) / det;
    const double dy = -(j[0][0] * f.y - j[1][0] * f.x) / det;
    double step = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      const Vec2 cand{std::clamp(z.x + step * dx, 0.0, 1.0), std::clamp(z.y + step * dy, 0.0, 1.0)};
      const Vec2 fc = field(params, cand.x, cand.y);
      if (norm_inf(fc) < norm_inf(f)) {
        z = cand;
        f = fc;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return norm_inf(f) < tol;
}

// Two Newton limits are the same root when they are within the dedup radius, or
// when the field stays below tol along the segment joining them (degenerate roots
// are only located to about tol^(1/3)).
bool same_root(const ModelParams& params, double ax, double ay, double bx, double by, double tol) {
  const double dist = std::hypot(ax - bx, ay - by);
  if (dist < 10.0 * tol) return true;
  if (dist > 1e-3) return false;
  for (int k = 1; k < 8; ++k) {
    const double s = k / 8.0;
    if (norm_inf(field(params, ax + s * (bx - ax), ay + s * (by - ay))) >= tol) return false;
  }
  return true;
}

bool straddles(double a, double b, double c, double d) {
  const double lo = std::min({a, b, c, d});
  const double hi = std::max({a, b, c, d});
  return lo <= 0.0 && hi >= 0.0;
}

}  // namespace

EquilibriumScan find_equilibria(const ModelParams& params, int grid_n, double tol) {
  validate(params);
  if (grid_n < 64) throw InvalidArgument("find_equilibria: grid_n must be >= 64");
  if (!(tol > 0.0)) throw InvalidArgument("find_equilibria: tol must be > 0");

  EquilibriumScan scan;
  const auto known = known_points(params);
  for (const auto& k : known) scan.points.push_back(make_equilibrium(params, k.x, k.y, Provenance::exact_known));

  std::vector<Vec2> values((grid_n + 1) * (grid_n + 1));
  auto at = [&](int i, int j) -> Vec2& { return values[i * (grid_n + 1) + j]; };
  for (int i = 0; i <= grid_n; ++i) {
    for (int j = 0; j <= grid_n; ++j) {
      at(i, j) = field(params, static_cast<double>(i) / grid_n, static_cast<double>(j) / grid_n);
    }
  }
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      const Vec2 &a = at(i, j), &b = at(i + 1, j), &c = at(i, j + 1), &d = at(i + 1, j + 1);
      if (!straddles(a.x, b.x, c.x, d.x) || !straddles(a.y, b.y, c.y, d.y)) continue;
      ++scan.seeds;
      Vec2 z{(i + 0.5) / grid_n, (j + 0.5) / grid_n};
      if (!newton(params, z, tol)) {
        ++scan.newton_failures;
        continue;
      }
      const bool near_known = std::any_of(known.begin(), known.end(), [&](const Vec2& k) {
        return same_root(params, k.x, k.y, z.x, z.y, tol);
      });
      if (near_known) continue;
      if (z.x <= 0.0 || z.x >= 1.0 || z.y <= 0.0 || z.y >= 1.0) {
        ++scan.newton_failures;
        continue;
      }
      const bool dup = std::any_of(scan.points.begin(), scan.points.end(), [&](const Equilibrium& e) {
        return same_root(params, e.x, e.y, z.x, z.y, tol);
      });
      if (!dup) scan.points.push_back(make_equilibrium(params, z.x, z.y, Provenance::newton_refined));
    }
  }
  std::sort(scan.points.begin(), scan.points.end(), [](const Equilibrium& a, const Equilibrium& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  return scan;
}

double solve_um(const ModelParams& params, double tol) {
  validate(params);
  const int m = params.m;
  const double p = params.p;
  if (!(p < 0.5)) throw InvalidArgument("solve_um: requires p < 1/2");
  if (p == 0.0) return 0.0;
  auto g = [&](double u) { return -u + (1.0 - p) * power_ratio(m, u) + 0.5 * p; };
  // g is concave-then-convex with g' increasing on [0, 1/2]; the root lies left of g' = 0.
  auto dg = [&](double u) { return -1.0 + (1.0 - p) * m * f_weight(m, u); };
  const double t_star = numerics::bisect(dg, 0.0, 0.5);
  const double u = numerics::bisect(g, 0.0, t_star);
  if (std::abs(g(u)) > std::max(tol, 1e-15)) {
    throw InternalError("solve_um: residual above tolerance");
  }
  return u;
}

double u2_closed(double p) { return 0.5 - 0.5 * std::sqrt(1.0 - 2.0 * p); }

UmMargin um_stability_margin(const ModelParams& params) {
  UmMargin out;
  const int m = params.m;
  const double p = params.p;
  out.u = solve_um(params);
  out.margin = -1.0 + m * p + m * (1.0 - p) * f_weight(m, out.u);
  out.rhs = 0.5 - 0.5 * std::sqrt((m - 1.0) * (1.0 - p) / (m - 1.0 + p + m * p - m * p * p));
  // The equivalence is derived for p > 0; at p = 0 both sides of the inequality vanish.
  if (p > 0.0) out.sign_agrees = (out.margin < 0.0) == (out.u < out.rhs);
  return out;
}

double g1(const ModelParams& params, double t) {
  return t - (1.0 - params.p) * power_ratio(params.m, t);
}

double g2(const ModelParams& params, double z) { return params.p * power_ratio(params.m, z); }

double g1_argmin(const ModelParams& params) {
  const int m = params.m;
  const double p = params.p;
  auto dg1 = [&](double t) { return 1.0 - m * (1.0 - p) * f_weight(m, t); };
  if (dg1(0.5) >= 0.0) return 0.5;
  return numerics::bisect(dg1, 0.5, 1.0);
}

double h_of_z(const ModelParams& params, double z) {
  validate(params);
  if (!(params.p < 0.5)) throw InvalidArgument("h_of_z: requires p < 1/2");
  if (!(z <= 1.0)) throw InvalidArgument("h_of_z: z must be <= 1");
  if (z == 1.0) return 1.0;
  const double t0 = g1_argmin(params);
  const double target = g2(params, z);
  if (!(target > g1(params, t0))) {
    throw ConditionViolation("h_of_z: z outside the domain where g1(y) = g2(z) is solvable");
  }
  return numerics::bisect([&](double y) { return g1(params, y) - target; }, t0, 1.0);
}

double h_prime(const ModelParams& params, double z) {
  const int m = params.m;
  const double p = params.p;
  const double h = h_of_z(params, z);
  return p * m * f_weight(m, z) / (1.0 - m * (1.0 - p) * f_weight(m, h));
}

double g3(const ModelParams& params, double z) {
  return g1(params, 2.0 * z - h_of_z(params, z)) - g2(params, z);
}

double g3_prime(const ModelParams& params, double z) {
  const int m = params.m;
  const double p = params.p;
  const double h = h_of_z(params, z);
  return (1.0 - m * (1.0 - p) * f_weight(m, 2.0 * z - h)) * (2.0 - h_prime(params, z)) -
         m * p * f_weight(m, z);
}

double default_delta(double p) { return std::min(0.5 - p, p) / 4.0; }

Equilibrium solve_sm(const ModelParams& params, double delta) {
  validate(params);
  if (!(params.p > 0.0 && params.p < 0.5)) throw InvalidArgument("solve_sm: requires 0 < p < 1/2");
  if (delta <= 0.0) delta = default_delta(params.p);
  if (!(2.0 * delta < std::min(0.5 - params.p, params.p))) {
    throw InvalidArgument("solve_sm: delta too large for this p");
  }
  const double lo = 0.5 + delta;
  const double hi = 0.75 - delta;
  auto g3_checked = [&](double z) {
    double h;
    try {
      h = h_of_z(params, z);
    } catch (const ConditionViolation& e) {
      throw NotFound(std::string("solve_sm: ") + e.what());
    }
    const double x = 2.0 * z - h;
    if (x < 0.0 || x > 1.0) throw NotFound("solve_sm: 2z - h(z) leaves [0, 1]");
    return g1(params, x) - g2(params, z);
  };
  const double a = g3_checked(lo);
  const double b = g3_checked(hi);
  if ((a > 0.0) == (b > 0.0)) {
    throw NotFound("solve_sm: g3 has no sign change on the bracket (m too small for this p)");
  }
  const double z = numerics::bisect(g3_checked, lo, hi);
  const double h = h_of_z(params, z);
  Equilibrium e = make_equilibrium(params, 2.0 * z - h, h, Provenance::newton_refined);
  if (e.residual > 1e-9) throw InternalError("solve_sm: field residual too large at s_m");
  return e;
}

FlowTrajectory flow(const ModelParams& params, double x0, double y0, double T, double dt,
                    bool record_lyapunov) {
  validate(params);
  if (!(dt > 0.0) || !(T >= 0.0)) throw InvalidArgument("flow: need dt > 0 and T >= 0");
  if (x0 < 0 || x0 > 1 || y0 < 0 || y0 > 1) throw InvalidArgument("flow: start outside [0,1]^2");
  auto clamp = [](Vec2 v) { return Vec2{std::clamp(v.x, 0.0, 1.0), std::clamp(v.y, 0.0, 1.0)}; };
  auto shifted = [&](const Vec2& s, const Vec2& k, double h) { return clamp({s.x + h * k.x, s.y + h * k.y}); };
  auto F = [&](const Vec2& s) { return field(params, s.x, s.y); };

  FlowTrajectory out;
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
  Vec2 s{x0, y0};
  double t = 0.0;
  auto record = [&] {
    out.t.push_back(t);
    out.states.push_back(s);
    if (record_lyapunov) out.lyapunov.push_back(lyapunov(params, s.x, s.y));
  };
  record();
  for (std::size_t i = 0; i < steps; ++i) {
    const double h = std::min(dt, T - t);
    const Vec2 k1 = F(s);
    const Vec2 k2 = F(shifted(s, k1, h / 2));
    const Vec2 k3 = F(shifted(s, k2, h / 2));
    const Vec2 k4 = F(shifted(s, k3, h));
    s = clamp({s.x + h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
               s.y + h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y)});
    t += h;
    record();
  }
  return out;
}

std::vector<FieldSample> sample_field(const ModelParams& params, int resolution) {
  validate(params);
  if (resolution < 2) throw InvalidArgument("sample_field: resolution must be >= 2");
  std::vector<FieldSample> rows;
  rows.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const double x = static_cast<double>(i) / (resolution - 1);
      const double y = static_cast<double>(j) / (resolution - 1);
      const Vec2 f = field(params, x, y);
      rows.push_back({x, y, f.x, f.y});
    }
  }
  return rows;
}

double lemma_gap(int m, double h) { return std::tanh(m * std::atanh(h)) - 2.0 * h; }

double beta(int m, double h) {
  return 0.5 * std::tanh(m * std::atanh(h)) + 0.5 * power_ratio(m, h) - h;
}

}  // namespace urnfield::meanfield
