#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace urnfield::stats {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double level = 0.95);

using Outcome = std::vector<std::uint64_t>;

struct LawComparison {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  /// Outcome -> (count in sample A, count in sample B), before any cell merging.
  std::map<Outcome, std::pair<std::uint64_t, std::uint64_t>> categories;
};

/// Two-sample chi-square homogeneity test over a finite outcome set. Cells whose
/// pooled expected count is below 5 are merged. Each sample needs >= 100 entries.
LawComparison compare_laws(const std::vector<Outcome>& a, const std::vector<Outcome>& b);

/// Pearson correlation; 0 if either side is constant.
double correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace urnfield::stats
