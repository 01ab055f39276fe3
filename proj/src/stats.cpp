#include "urnfield/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "urnfield/errors.hpp"

namespace urnfield::stats {

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double level) {
  if (trials == 0 || successes > trials) throw InvalidArgument("wilson_interval: need 0 <= k <= n, n >= 1");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("wilson_interval: level must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  Interval out{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  if (successes == 0) out.lo = 0.0;
  if (successes == trials) out.hi = 1.0;
  return out;
}

LawComparison compare_laws(const std::vector<Outcome>& a, const std::vector<Outcome>& b) {
  if (a.size() < 100 || b.size() < 100) throw InvalidArgument("compare_laws: need >= 100 samples per side");
  LawComparison out;
  for (const auto& o : a) ++out.categories[o].first;
  for (const auto& o : b) ++out.categories[o].second;

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double total = na + nb;
  // Pooled counts, smallest first, merged until every cell has expected count >= 5 on both sides.
  std::vector<std::pair<double, double>> cells;
  for (const auto& [o, c] : out.categories) cells.emplace_back(c.first, c.second);
  std::sort(cells.begin(), cells.end(), [](const auto& x, const auto& y) {
    return x.first + x.second < y.first + y.second;
  });
  auto min_expected = [&](const std::pair<double, double>& c) {
    return (c.first + c.second) * std::min(na, nb) / total;
  };
  std::vector<std::pair<double, double>> merged;
  std::pair<double, double> pending{0.0, 0.0};
  for (const auto& c : cells) {
    pending.first += c.first;
    pending.second += c.second;
    if (min_expected(pending) >= 5.0) {
      merged.push_back(pending);
      pending = {0.0, 0.0};
    }
  }
  if (pending.first + pending.second > 0.0) {
    if (merged.empty()) merged.push_back(pending);
    else {
      merged.back().first += pending.first;
      merged.back().second += pending.second;
    }
  }
  if (merged.size() < 2) return out;

  double stat = 0.0;
  for (const auto& [ca, cb] : merged) {
    const double pooled = ca + cb;
    const double ea = pooled * na / total;
    const double eb = pooled * nb / total;
    stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  out.statistic = stat;
  out.dof = static_cast<int>(merged.size()) - 1;
  out.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(out.dof), stat));
  return out;
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw InvalidArgument("correlation: size mismatch");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace urnfield::stats
