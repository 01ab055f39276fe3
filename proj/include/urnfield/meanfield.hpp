#pragma once

#include <array>
#include <string>
#include <vector>

namespace urnfield::meanfield {

struct ModelParams {
  int m = 2;
  double p = 0.0;
};

/// Throws InvalidArgument unless m >= 2 and 0 <= p <= 1.
void validate(const ModelParams& params);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

using Mat2 = std::array<std::array<double, 2>, 2>;

/// t^m / (t^m + (1-t)^m), stable for large m.
double power_ratio(int m, double t);

/// t^(m-1) (1-t)^(m-1) / (t^m + (1-t)^m)^2, with f(0) = f(1) = 0.
double f_weight(int m, double t);

Vec2 field(const ModelParams& params, double x, double y);
Mat2 jacobian(const ModelParams& params, double x, double y);

struct Eigenpair {
  double minus = 0.0;
  double plus = 0.0;
};
Eigenpair eigenvalues(const ModelParams& params, double x, double y);

/// Integral of the power ratio over [0, x].
double antiderivative(int m, double x, double abs_tol = 1e-12);

/// Lyapunov function with grad L = F, L(0,0) = 0.
double lyapunov(const ModelParams& params, double x, double y, double abs_tol = 1e-12);
/// Closed forms for m = 2 and m = 3.
double lyapunov_closed(int m, double p, double x, double y);

enum class StabilityClass { strictly_stable, stable, unstable };
enum class Provenance { exact_known, newton_refined };

std::string to_string(StabilityClass c);
std::string to_string(Provenance p);

struct Equilibrium {
  double x = 0.0;
  double y = 0.0;
  double residual = 0.0;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  StabilityClass cls = StabilityClass::unstable;
  Provenance provenance = Provenance::exact_known;
  bool needs_review = false;  // |lambda_plus| inside the dead band
};

inline constexpr double kStabilityDeadBand = 1e-9;

StabilityClass classify(double lambda_plus);
Equilibrium make_equilibrium(const ModelParams& params, double x, double y, Provenance prov);

struct EquilibriumScan {
  std::vector<Equilibrium> points;  // sorted by (x, y)
  int seeds = 0;
  int newton_failures = 0;
};

EquilibriumScan find_equilibria(const ModelParams& params, int grid_n = 256, double tol = 1e-12);

/// Root in [0, 1/2) of -u + (1-p) r(u) + p/2. Requires p < 1/2.
double solve_um(const ModelParams& params, double tol = 1e-14);

struct UmMargin {
  double u = 0.0;
  double margin = 0.0;  // lambda_plus(u, 1 - u)
  double rhs = 0.0;     // threshold that u must stay below for stability
  bool sign_agrees = true;
};
UmMargin um_stability_margin(const ModelParams& params);

/// Closed form of u for m = 2.
double u2_closed(double p);

/// g1(t) = t - (1-p) r(t), g2(z) = p r(z).
double g1(const ModelParams& params, double t);
double g2(const ModelParams& params, double z);
/// Minimiser of g1 on [1/2, 1].
double g1_argmin(const ModelParams& params);
/// The y in (t0, 1] with g1(y) = g2(z). Throws ConditionViolation outside the domain.
double h_of_z(const ModelParams& params, double z);
/// Implicit derivative of h.
double h_prime(const ModelParams& params, double z);
double g3(const ModelParams& params, double z);
double g3_prime(const ModelParams& params, double z);

double default_delta(double p);

/// Root of g3 on (1/2 + delta, 3/4 - delta) mapped to (2z - h(z), h(z)).
/// delta <= 0 selects default_delta(p). Throws NotFound without a sign change.
Equilibrium solve_sm(const ModelParams& params, double delta = 0.0);

struct FlowTrajectory {
  std::vector<double> t;
  std::vector<Vec2> states;
  std::vector<double> lyapunov;
};

FlowTrajectory flow(const ModelParams& params, double x0, double y0, double T, double dt,
                    bool record_lyapunov = true);

struct FieldSample {
  double x, y, f1, f2;
};
std::vector<FieldSample> sample_field(const ModelParams& params, int resolution);

/// ((1+h)^m - (1-h)^m) / ((1+h)^m + (1-h)^m) - 2h.
double lemma_gap(int m, double h);
/// tanh(m atanh h) / 2 + r_m(h) / 2 - h.
double beta(int m, double h);

}  // namespace urnfield::meanfield
