#include "urnfield/reinforcement.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <set>

#include "urnfield/errors.hpp"
#include "urnfield/quadrature.hpp"

namespace urnfield {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLinearCap = 1e300;
const double kLogLinearCap = std::log(kLinearCap);

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// log |e^a - e^b|
double log_abs_diff(double a, double b) {
  if (a == b) return -kInf;
  if (b == -kInf) return a;
  if (a == -kInf) return b;
  const double hi = std::max(a, b);
  return hi + std::log(-std::expm1(-std::abs(a - b)));
}

int poly_degree(const std::vector<double>& c) {
  for (int j = static_cast<int>(c.size()) - 1; j >= 0; --j) {
    if (c[j] != 0.0) return j;
  }
  return -1;
}

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

double poly_log(const std::vector<double>& c, double x) {
  const double v = horner(c, x);
  if (std::isfinite(v) && std::abs(v) <= kLinearCap) {
    return v > 0.0 ? std::log(v) : -kInf;
  }
  // a_m x^m (1 + sum_j (a_j / a_m) x^(j - m)); Horner in 1/x.
  const int m = poly_degree(c);
  const double lead = c[m];
  double bracket = 0.0;
  const double inv = 1.0 / x;
  for (int j = 0; j <= m; ++j) bracket = bracket * inv + c[j] / lead;
  if (lead <= 0.0 || bracket <= 0.0) return -kInf;
  return std::log(lead) + m * std::log(x) + std::log(bracket);
}

double part_log(const RulePart& part, double k) {
  return std::visit(
      [k](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PolyPart>) {
          return poly_log(p.coeffs, k);
        } else if constexpr (std::is_same_v<T, ExpPart>) {
          return p.log_rate * k + p.log_offset;
        } else {
          if (p.scale <= 0.0) return -kInf;
          if (k <= 0.0 && p.power > 0.0) return -kInf;
          double out = std::log(p.scale);
          if (p.power != 0.0) out += p.power * std::log(k);
          if (p.log_power != 0.0) {
            const double lg = std::log(k + p.shift);
            if (!(lg > 0.0)) return -kInf;
            out += p.log_power * std::log(lg);
          }
          return out;
        }
      },
      part);
}

// s - q * log part(e^s), grouped so that the linear terms in s cancel exactly.
double part_log_integrand(const RulePart& part, double s, double q) {
  return std::visit(
      [s, q](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PolyPart>) {
          const int m = poly_degree(p.coeffs);
          const double inv = std::exp(-s);
          double bracket = 0.0;
          for (int j = 0; j <= m; ++j) bracket = bracket * inv + p.coeffs[j] / p.coeffs[m];
          if (bracket <= 0.0) return kInf;
          return (1.0 - q * m) * s - q * (std::log(p.coeffs[m]) + std::log(bracket));
        } else if constexpr (std::is_same_v<T, ExpPart>) {
          return s - q * (p.log_rate * std::exp(s) + p.log_offset);
        } else {
          double out = (1.0 - q * p.power) * s - q * std::log(p.scale);
          if (p.log_power != 0.0) {
            out -= q * p.log_power * std::log(s + std::log1p(p.shift * std::exp(-s)));
          }
          return out;
        }
      },
      part);
}

// Convergence of sum_k part(k)^(-q): +1 converges, -1 diverges.
int part_convergence(const RulePart& part, double q) {
  return std::visit(
      [q](const auto& p) -> int {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PolyPart>) {
          return poly_degree(p.coeffs) * q > 1.0 ? 1 : -1;
        } else if constexpr (std::is_same_v<T, ExpPart>) {
          return p.log_rate > 0.0 ? 1 : -1;
        } else {
          const double a = p.power * q;
          if (a > 1.0) return 1;
          if (a == 1.0 && p.log_power * q > 1.0) return 1;
          return -1;
        }
      },
      part);
}

// log sum_{k >= k0} part(k)^(-q), assuming convergence.
double part_log_tail(const RulePart& part, std::uint64_t k0, double q) {
  if (const auto* e = std::get_if<ExpPart>(&part)) {
    const double first = -q * (e->log_rate * static_cast<double>(k0) + e->log_offset);
    return first - std::log(-std::expm1(-q * e->log_rate));
  }
  // Explicit terms up to k1, then a midpoint-corrected integral.
  constexpr std::uint64_t kExplicit = 512;
  const std::uint64_t k1 = std::max<std::uint64_t>(k0, kExplicit);
  double acc = -kInf;
  for (std::uint64_t k = k1; k-- > k0;) acc = log_add(acc, -q * part_log(part, static_cast<double>(k)));
  // Integral over x >= k1 - 1/2 in s = log x, then s = s0 * e^t, t = u / (1 - u).
  // Slowly decaying tails such as 1/(x log^2 x) become exponentially decaying in t.
  const double s0 = std::log(static_cast<double>(k1) - 0.5);
  const double scale = part_log_integrand(part, s0, q);
  auto integrand = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double t = u / (1.0 - u);
    const double sv = s0 * std::exp(t);
    const double l =
        part_log_integrand(part, sv, q) - scale + std::log(s0) + t - 2.0 * std::log1p(-u);
    const double v = std::exp(l);
    return std::isfinite(v) ? v : 0.0;
  };
  const double integral = numerics::adaptive_simpson(integrand, 0.0, 1.0, 1e-13 * s0);
  if (integral > 0.0) acc = log_add(acc, std::log(integral) + scale);
  return acc;
}

RulePart part_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "polynomial") {
    for (const auto& [k, v] : j.items()) {
      if (k != "type" && k != "coeffs") throw InvalidArgument("tail part: unknown field '" + k + "'");
    }
    return PolyPart{j.at("coeffs").get<std::vector<double>>()};
  }
  if (type == "exponential") {
    ExpPart p;
    for (const auto& [k, v] : j.items()) {
      if (k == "log_rate") p.log_rate = v.get<double>();
      else if (k == "log_offset") p.log_offset = v.get<double>();
      else if (k != "type") throw InvalidArgument("tail part: unknown field '" + k + "'");
    }
    return p;
  }
  if (type == "power_log") {
    PowerLogPart p;
    for (const auto& [k, v] : j.items()) {
      if (k == "scale") p.scale = v.get<double>();
      else if (k == "power") p.power = v.get<double>();
      else if (k == "log_power") p.log_power = v.get<double>();
      else if (k == "shift") p.shift = v.get<double>();
      else if (k != "type") throw InvalidArgument("tail part: unknown field '" + k + "'");
    }
    return p;
  }
  throw InvalidArgument("tail part: unknown type '" + type + "'");
}

nlohmann::json part_to_json(const RulePart& part) {
  return std::visit(
      [](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PolyPart>) {
          return {{"type", "polynomial"}, {"coeffs", p.coeffs}};
        } else if constexpr (std::is_same_v<T, ExpPart>) {
          return {{"type", "exponential"}, {"log_rate", p.log_rate}, {"log_offset", p.log_offset}};
        } else {
          return {{"type", "power_log"},  {"scale", p.scale}, {"power", p.power},
                  {"log_power", p.log_power}, {"shift", p.shift}};
        }
      },
      part);
}

bool parts_equal(const RulePart& a, const RulePart& b) {
  if (a.index() != b.index()) return false;
  return part_to_json(a) == part_to_json(b);
}

}  // namespace

std::string to_string(SeqKind kind) {
  switch (kind) {
    case SeqKind::polynomial: return "polynomial";
    case SeqKind::exponential: return "exponential";
    case SeqKind::table: return "table";
  }
  return "?";
}

ReinforcementSeq ReinforcementSeq::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) throw InvalidArgument("polynomial: empty coefficient list");
  for (double c : coeffs) {
    if (!std::isfinite(c) || c < 0.0) throw InvalidArgument("polynomial: coefficients must be >= 0");
  }
  if (!(coeffs.back() > 0.0)) throw InvalidArgument("polynomial: leading coefficient must be > 0");
  ReinforcementSeq s;
  s.kind_ = SeqKind::polynomial;
  s.coeffs_ = std::move(coeffs);
  s.domain_start_ = s.coeffs_.front() > 0.0 ? 0 : 1;
  return s;
}

ReinforcementSeq ReinforcementSeq::exponential(double rho) {
  if (!(rho > 1.0) || !std::isfinite(rho)) throw InvalidArgument("exponential: rho must be > 1");
  ReinforcementSeq s;
  s.kind_ = SeqKind::exponential;
  s.rho_ = rho;
  s.domain_start_ = 0;
  return s;
}

ReinforcementSeq ReinforcementSeq::table(std::vector<double> values, std::optional<TailRule> tail) {
  if (tail) {
    if (tail->period < 1 || static_cast<int>(tail->parts.size()) != tail->period) {
      throw InvalidArgument("table: tail rule needs exactly `period` parts");
    }
    for (const auto& part : tail->parts) {
      if (const auto* p = std::get_if<PolyPart>(&part); p && poly_degree(p->coeffs) < 0) {
        throw InvalidArgument("table: zero polynomial in tail rule");
      }
    }
  }
  if (values.empty() && !tail) throw InvalidArgument("table: no values and no tail rule");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("table: values must be finite and >= 0");
  }
  ReinforcementSeq s;
  s.kind_ = SeqKind::table;
  s.table_ = std::move(values);
  s.rule_ = std::move(tail);
  s.compute_domain_start();
  return s;
}

void ReinforcementSeq::compute_domain_start() {
  const std::uint64_t scan_limit = table_.size() + (rule_ ? 2 * rule_->period + 64 : 0);
  std::uint64_t n = 0;
  for (; n < scan_limit; ++n) {
    if (log_weight(n) > -kInf) break;
  }
  if (n == scan_limit) throw InvalidArgument("table: no positive value found");
  for (std::uint64_t i = n; i < table_.size(); ++i) {
    if (!(table_[i] > 0.0)) {
      throw InvalidArgument("table: nonpositive value at n=" + std::to_string(i) +
                            " beyond domain start " + std::to_string(n));
    }
  }
  domain_start_ = n;
}

int ReinforcementSeq::degree() const noexcept {
  return kind_ == SeqKind::polynomial ? poly_degree(coeffs_) : -1;
}

double ReinforcementSeq::log_weight(std::uint64_t n) const noexcept {
  switch (kind_) {
    case SeqKind::polynomial:
      return poly_log(coeffs_, static_cast<double>(n));
    case SeqKind::exponential:
      return static_cast<double>(n) * std::log(rho_);
    case SeqKind::table:
      if (n < table_.size()) return table_[n] > 0.0 ? std::log(table_[n]) : -kInf;
      if (!rule_) return -kInf;
      {
        const auto period = static_cast<std::uint64_t>(rule_->period);
        return part_log(rule_->parts[n % period], static_cast<double>(n / period));
      }
  }
  return -kInf;
}

double ReinforcementSeq::weight(std::uint64_t n) const noexcept {
  if (kind_ == SeqKind::polynomial) {
    const double v = horner(coeffs_, static_cast<double>(n));
    return std::isfinite(v) ? v : kInf;
  }
  if (kind_ == SeqKind::table && n < table_.size()) return std::max(table_[n], 0.0);
  if (kind_ == SeqKind::table && rule_) {
    const auto period = static_cast<std::uint64_t>(rule_->period);
    if (const auto* poly = std::get_if<PolyPart>(&rule_->parts[n % period])) {
      const double v = horner(poly->coeffs, static_cast<double>(n / period));
      return std::isfinite(v) ? std::max(v, 0.0) : kInf;
    }
  }
  const double l = log_weight(n);
  return l > kLogLinearCap ? kInf : std::exp(l);
}

Weight ReinforcementSeq::eval(std::int64_t n) const {
  if (n < 0 || static_cast<std::uint64_t>(n) < domain_start_) {
    throw InvalidArgument("eval: n=" + std::to_string(n) + " below domain start " +
                          std::to_string(domain_start_));
  }
  const auto un = static_cast<std::uint64_t>(n);
  if (kind_ == SeqKind::table && un >= table_.size() && !rule_) {
    throw InvalidArgument("eval: n beyond table and no tail rule");
  }
  Weight w;
  w.log = log_weight(un);
  if (!(w.log > -kInf) || std::isnan(w.log)) {
    throw ConditionViolation("eval: W(" + std::to_string(n) + ") is not positive");
  }
  if (w.log > kLogLinearCap) {
    w.log_space = true;
    w.value = 0.0;
  } else {
    w.value = weight(un);
  }
  return w;
}

bool ReinforcementSeq::provably_non_decreasing() const noexcept {
  return kind_ == SeqKind::polynomial || kind_ == SeqKind::exponential;
}

bool ReinforcementSeq::is_non_decreasing(std::uint64_t up_to) const {
  if (provably_non_decreasing()) return true;
  double prev = log_weight(0);
  for (std::uint64_t k = 1; k <= up_to; ++k) {
    const double cur = log_weight(k);
    if (cur < prev) return false;
    prev = cur;
  }
  return true;
}

std::optional<double> ReinforcementSeq::log_tail_sum(std::uint64_t from, double power) const {
  switch (kind_) {
    case SeqKind::polynomial: {
      const RulePart part = PolyPart{coeffs_};
      if (part_convergence(part, power) < 0) return kInf;
      return part_log_tail(part, from, power);
    }
    case SeqKind::exponential: {
      const RulePart part = ExpPart{std::log(rho_), 0.0};
      return part_log_tail(part, from, power);
    }
    case SeqKind::table: {
      if (!rule_) return std::nullopt;
      for (const auto& part : rule_->parts) {
        if (part_convergence(part, power) < 0) return kInf;
      }
      double acc = -kInf;
      std::uint64_t start = from;
      for (; start < table_.size(); ++start) acc = log_add(acc, -power * log_weight(start));
      const auto period = static_cast<std::uint64_t>(rule_->period);
      for (std::uint64_t r = 0; r < period; ++r) {
        // smallest k with period * k + r >= start
        const std::uint64_t k0 = start <= r ? 0 : (start - r + period - 1) / period;
        acc = log_add(acc, part_log_tail(rule_->parts[r], k0, power));
      }
      return acc;
    }
  }
  return std::nullopt;
}

bool operator==(const ReinforcementSeq& a, const ReinforcementSeq& b) {
  if (a.kind_ != b.kind_ || a.coeffs_ != b.coeffs_ || a.rho_ != b.rho_ || a.table_ != b.table_) {
    return false;
  }
  if (a.rule_.has_value() != b.rule_.has_value()) return false;
  if (!a.rule_) return true;
  if (a.rule_->period != b.rule_->period) return false;
  for (std::size_t i = 0; i < a.rule_->parts.size(); ++i) {
    if (!parts_equal(a.rule_->parts[i], b.rule_->parts[i])) return false;
  }
  return true;
}

ReinforcementSeq make_polynomial(std::vector<double> coeffs) {
  return ReinforcementSeq::polynomial(std::move(coeffs));
}
ReinforcementSeq make_exponential(double rho) { return ReinforcementSeq::exponential(rho); }
ReinforcementSeq make_table(std::vector<double> values, std::optional<TailRule> tail) {
  return ReinforcementSeq::table(std::move(values), std::move(tail));
}

ReinforcementSeq make_interleaved_quartic() {
  TailRule rule;
  rule.period = 2;
  rule.parts = {PolyPart{{0, 0, 0, 0, 1}}, PolyPart{{1, 0, 0, -1, 1}}};
  return make_table({}, rule);
}

ReinforcementSeq make_interleaved_exponential() {
  TailRule rule;
  rule.period = 2;
  rule.parts = {ExpPart{1.0, 0.0}, ExpPart{1.0, -1.0}};
  return make_table({}, rule);
}

void to_json(nlohmann::json& j, const ReinforcementSeq& seq) {
  j = nlohmann::json::object();
  j["kind"] = to_string(seq.kind());
  switch (seq.kind()) {
    case SeqKind::polynomial: j["coeffs"] = seq.coeffs(); break;
    case SeqKind::exponential: j["rho"] = seq.rho(); break;
    case SeqKind::table:
      j["table"] = seq.table_values();
      if (seq.tail_rule()) {
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& p : seq.tail_rule()->parts) parts.push_back(part_to_json(p));
        j["tail"] = {{"period", seq.tail_rule()->period}, {"parts", parts}};
      }
      break;
  }
}

ReinforcementSeq seq_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("sequence: expected a JSON object");
  static const std::set<std::string> known = {"kind", "coeffs", "rho", "table", "tail"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw InvalidArgument("sequence: unknown field '" + k + "'");
  }
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "polynomial") return make_polynomial(j.at("coeffs").get<std::vector<double>>());
    if (kind == "exponential") return make_exponential(j.at("rho").get<double>());
    if (kind == "table") {
      std::vector<double> values;
      if (j.contains("table")) values = j.at("table").get<std::vector<double>>();
      std::optional<TailRule> rule;
      if (j.contains("tail")) {
        const auto& t = j.at("tail");
        for (const auto& [k, v] : t.items()) {
          if (k != "period" && k != "parts") throw InvalidArgument("tail: unknown field '" + k + "'");
        }
        TailRule r;
        r.period = t.value("period", 1);
        for (const auto& p : t.at("parts")) r.parts.push_back(part_from_json(p));
        rule = std::move(r);
      }
      return make_table(std::move(values), std::move(rule));
    }
    throw InvalidArgument("sequence: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("sequence: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::string to_string(Condition c) {
  switch (c) {
    case Condition::summable: return "summable";
    case Condition::variation_bound: return "variation_bound";
    case Condition::remainder_bound: return "remainder_bound";
    case Condition::rem_ratio: return "rem_ratio";
    case Condition::squared_rem_ratio: return "squared_rem_ratio";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

void to_json(nlohmann::json& j, const ConditionVerdict& v) {
  j = {{"condition", to_string(v.condition)},
       {"horizon", v.horizon},
       {"estimate", v.estimate},
       {"verdict", to_string(v.verdict)}};
  if (!v.note.empty()) j["note"] = v.note;
}

namespace {

double capped_exp(double l) { return l >= std::log(DBL_MAX) ? DBL_MAX : std::exp(l); }

std::uint64_t first_index(const ReinforcementSeq& seq) {
  return std::max<std::uint64_t>(1, seq.domain_start());
}

std::uint64_t effective_horizon(const ReinforcementSeq& seq, std::uint64_t horizon) {
  if (seq.kind() == SeqKind::table && !seq.tail_rule()) {
    if (seq.table_values().empty()) return 0;
    return std::min<std::uint64_t>(horizon, seq.table_values().size() - 1);
  }
  return horizon;
}

// Plateau detector over a running sup: compares sup_{n <= H} with sup_{n <= H/10}.
Verdict plateau_verdict(double log_sup_all, double log_sup_decade) {
  const double rel = -std::expm1(log_sup_decade - log_sup_all);
  if (rel < 1e-6) return Verdict::holds;
  if (log_sup_all - log_sup_decade > std::log(2.0)) return Verdict::fails;
  return Verdict::inconclusive;
}

}  // namespace

RemainderEstimate remainder(const ReinforcementSeq& seq, std::uint64_t n, std::uint64_t horizon) {
  if (n < seq.domain_start()) throw InvalidArgument("remainder: n below domain start");
  if (horizon < n) throw InvalidArgument("remainder: horizon < n");
  const auto tail = seq.log_tail_sum(horizon + 1);
  if (tail && *tail == kInf) throw ConditionViolation("remainder: tail of 1/W diverges");
  const std::uint64_t h = effective_horizon(seq, horizon);
  double log_partial = -kInf;
  for (std::uint64_t i = h + 1; i-- > n;) {
    const double lw = seq.log_weight(i);
    if (!(lw > -kInf)) throw ConditionViolation("remainder: W(" + std::to_string(i) + ") = 0");
    log_partial = log_add(log_partial, -lw);
  }
  RemainderEstimate out;
  out.partial = std::exp(log_partial);
  out.tail_included = tail.has_value();
  const double log_tail = tail.value_or(-kInf);
  out.tail = std::exp(log_tail);
  out.log_value = log_add(log_partial, log_tail);
  out.value = std::exp(out.log_value);
  return out;
}

ConditionVerdict check_strong(const ReinforcementSeq& seq, std::uint64_t horizon, double tol) {
  if (horizon < 10) throw InvalidArgument("check_strong: horizon must be >= 10");
  ConditionVerdict v;
  v.condition = Condition::summable;
  v.horizon = horizon;
  const auto tail = seq.log_tail_sum(horizon + 1);
  if (tail && *tail == kInf) {
    v.verdict = Verdict::fails;
    v.estimate = DBL_MAX;
    v.note = "tail rule diverges";
    return v;
  }
  const std::uint64_t h = effective_horizon(seq, horizon);
  const std::uint64_t start = first_index(seq);
  double log_partial = -kInf;
  for (std::uint64_t i = h + 1; i-- > start;) log_partial = log_add(log_partial, -seq.log_weight(i));
  v.estimate = capped_exp(log_partial);
  if (!tail) {
    // Divergence certificate: W(n)/n did not grow over the last decade.
    auto max_ratio = [&](std::uint64_t lo, std::uint64_t hi) {
      double m = -kInf;
      for (std::uint64_t i = std::max(lo, start); i <= hi; ++i) {
        m = std::max(m, seq.log_weight(i) - std::log(static_cast<double>(i)));
      }
      return m;
    };
    if (h >= 100) {
      const double late = max_ratio(h / 10 + 1, h);
      const double early = max_ratio(h / 100 + 1, h / 10);
      if (late <= early + 1e-12) {
        v.verdict = Verdict::fails;
        v.note = "W(n)/n not growing: harmonic-type divergence";
        return v;
      }
    }
    v.verdict = Verdict::inconclusive;
    v.note = "no analytic tail; truncated sum only";
    return v;
  }
  const double tail_val = std::exp(*tail);
  v.estimate = capped_exp(log_add(log_partial, *tail));
  if (seq.kind() != SeqKind::table || tail_val <= tol * v.estimate) {
    v.verdict = Verdict::holds;
  } else {
    v.verdict = Verdict::inconclusive;
    v.note = "tail beyond horizon is " + std::to_string(tail_val) + ", above tolerance";
  }
  return v;
}

ConditionVerdict check_variation_bound(const ReinforcementSeq& seq, std::uint64_t horizon) {
  ConditionVerdict v;
  v.condition = Condition::variation_bound;
  v.horizon = horizon;
  const std::uint64_t start = first_index(seq);
  std::uint64_t h = effective_horizon(seq, horizon);
  if (seq.kind() == SeqKind::table && !seq.tail_rule()) h = h > 0 ? h - 1 : 0;
  if (h < start + 10) throw InvalidArgument("check_variation_bound: horizon too small");
  // Suffix sums of |1/W(k) - 1/W(k+1)| in log space.
  double log_suffix = -kInf;
  if (seq.provably_non_decreasing()) log_suffix = -seq.log_weight(h + 1);  // telescoped tail
  double next_inv = -seq.log_weight(h + 1);
  std::vector<double> products(h + 1, -kInf);
  for (std::uint64_t k = h + 1; k-- > start;) {
    const double lw = seq.log_weight(k);
    log_suffix = log_add(log_suffix, log_abs_diff(-lw, next_inv));
    next_inv = -lw;
    products[k] = lw + log_suffix;
  }
  double sup_all = -kInf, sup_decade = -kInf;
  for (std::uint64_t k = start; k <= h; ++k) {
    sup_all = std::max(sup_all, products[k]);
    if (k <= h / 10) sup_decade = std::max(sup_decade, products[k]);
  }
  v.estimate = capped_exp(sup_all);
  v.verdict = plateau_verdict(sup_all, sup_decade);
  if (!seq.provably_non_decreasing()) v.note = "truncated at horizon";
  return v;
}

ConditionVerdict check_remainder_bound(const ReinforcementSeq& seq, std::uint64_t horizon) {
  ConditionVerdict v;
  v.condition = Condition::remainder_bound;
  v.horizon = horizon;
  const std::uint64_t start = first_index(seq);
  const std::uint64_t h = effective_horizon(seq, horizon);
  if (h < start + 10) throw InvalidArgument("check_remainder_bound: horizon too small");
  const auto tail = seq.log_tail_sum(h + 1);
  if (tail && *tail == kInf) {
    v.verdict = Verdict::fails;
    v.estimate = DBL_MAX;
    v.note = "1/W not summable";
    return v;
  }
  double log_rem = tail.value_or(-kInf);
  double sup_all = -kInf, sup_decade = -kInf;
  for (std::uint64_t k = h + 1; k-- > start;) {
    const double lw = seq.log_weight(k);
    log_rem = log_add(log_rem, -lw);
    const double prod = lw + log_rem;
    sup_all = std::max(sup_all, prod);
    if (k <= h / 10) sup_decade = std::max(sup_decade, prod);
  }
  v.estimate = capped_exp(sup_all);
  v.verdict = plateau_verdict(sup_all, sup_decade);
  if (!tail) v.note = "no analytic tail; truncated sum only";
  return v;
}

std::pair<ConditionVerdict, ConditionVerdict> check_mdrem_conditions(
    const ReinforcementSeq& seq, const std::vector<std::uint64_t>& horizons,
    const std::vector<std::uint64_t>& k_list, const MdremOptions& opt) {
  if (horizons.size() < 2 || k_list.empty()) {
    throw InvalidArgument("check_mdrem_conditions: need >= 2 grid points and >= 1 K");
  }
  std::vector<std::uint64_t> grid = horizons;
  std::sort(grid.begin(), grid.end());
  std::vector<std::uint64_t> ks = k_list;
  std::sort(ks.begin(), ks.end());
  if (grid.front() < first_index(seq) || ks.front() < 2) {
    throw InvalidArgument("check_mdrem_conditions: grid below domain start or K < 2");
  }

  ConditionVerdict rem{Condition::rem_ratio, grid.back(), 0.0, Verdict::inconclusive, {}};
  ConditionVerdict sq{Condition::squared_rem_ratio, grid.back(), 0.0, Verdict::inconclusive, {}};

  // log sum_{i >= n} W(i)^(-q) via an explicit window plus the analytic tail.
  auto log_rem = [&](std::uint64_t n, double q) -> std::optional<double> {
    const auto tail = seq.log_tail_sum(n + opt.window, q);
    if (!tail) return std::nullopt;
    double acc = *tail;
    for (std::uint64_t i = n + opt.window; i-- > n;) acc = log_add(acc, -q * seq.log_weight(i));
    return acc;
  };

  if (!seq.log_tail_sum(grid.back(), 1.0)) {
    rem.note = sq.note = "no analytic tail";
    return {rem, sq};
  }
  if (*seq.log_tail_sum(grid.back(), 1.0) == kInf) {
    rem.verdict = sq.verdict = Verdict::fails;
    rem.estimate = sq.estimate = DBL_MAX;
    rem.note = sq.note = "1/W not summable";
    return {rem, sq};
  }

  auto classify = [&](ConditionVerdict& cv, const std::vector<double>& trend) {
    // trend: values whose limit should be 0, ordered along the limiting direction.
    const double last = trend.back();
    const double mid = trend[trend.size() / 2];
    bool non_increasing = true;
    for (std::size_t i = trend.size() / 2; i + 1 < trend.size(); ++i) {
      if (trend[i + 1] > trend[i] * (1.0 + 1e-9)) non_increasing = false;
    }
    cv.estimate = last;
    if (last < opt.vanish_threshold && non_increasing) {
      cv.verdict = Verdict::holds;
    } else if (last >= opt.persist_threshold || (last >= opt.vanish_threshold && last >= 0.9 * mid)) {
      cv.verdict = Verdict::fails;
    } else {
      cv.verdict = Verdict::inconclusive;
    }
  };

  // (i) limsup over the upper half of the grid, then the trend in K.
  std::vector<double> limsup_by_k;
  for (auto k : ks) {
    double worst = 0.0;
    for (std::size_t g = grid.size() / 2; g < grid.size(); ++g) {
      const auto a = log_rem(k * grid[g], 1.0);
      const auto b = log_rem(grid[g], 1.0);
      worst = std::max(worst, std::exp(*a - *b));
    }
    limsup_by_k.push_back(worst);
  }
  classify(rem, limsup_by_k);

  // (ii) along the grid.
  std::vector<double> sq_trend;
  for (auto n : grid) {
    const auto s2 = log_rem(n, 2.0);
    const auto r1 = log_rem(n, 1.0);
    sq_trend.push_back(std::exp(*s2 - 2.0 * *r1));
  }
  classify(sq, sq_trend);
  return {rem, sq};
}

}  // namespace urnfield
