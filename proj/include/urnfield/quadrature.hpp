#pragma once

#include <cmath>
#include <functional>

namespace urnfield::numerics {

/// Adaptive Simpson quadrature with Richardson correction.
///
/// `abs_tol` bounds the estimated absolute error over [a, b]. Recursion depth
/// is capped; on hitting the cap the local estimate is accepted.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth = 40);

/// Bisection for a sign change of f on [lo, hi]; returns the midpoint of the final bracket.
/// Requires f(lo) and f(hi) of opposite sign (or one of them zero).
double bisect(const std::function<double(double)>& f, double lo, double hi, double x_tol = 0.0,
              int max_iter = 200);

}  // namespace urnfield::numerics
