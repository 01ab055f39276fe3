#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace urnfield {

enum class SeqKind { polynomial, exponential, table };

std::string to_string(SeqKind kind);

// Closed-form pieces of a tail rule, evaluated at the block index k.

/// sum_j coeffs[j] * k^j. Lower coefficients may be negative as long as values stay positive.
struct PolyPart {
  std::vector<double> coeffs;
};
/// exp(log_rate * k + log_offset)
struct ExpPart {
  double log_rate = 0.0;
  double log_offset = 0.0;
};
/// scale * k^power * log(k + shift)^log_power
struct PowerLogPart {
  double scale = 1.0;
  double power = 1.0;
  double log_power = 0.0;
  double shift = 0.0;
};
using RulePart = std::variant<PolyPart, ExpPart, PowerLogPart>;

/// W(period * k + r) = parts[r](k) for r in [0, period).
struct TailRule {
  int period = 1;
  std::vector<RulePart> parts;
};

/// A weight that may live in log space when its linear value would overflow.
struct Weight {
  double value = 0.0;  // linear value, meaningful only when !log_space
  double log = 0.0;    // natural log, always set
  bool log_space = false;
};

/// Positive reinforcement sequence W(n). Immutable after construction.
class ReinforcementSeq {
 public:
  static ReinforcementSeq polynomial(std::vector<double> coeffs);
  static ReinforcementSeq exponential(double rho);
  /// Explicit values for n < values.size(), then `tail` (indexed by absolute n).
  static ReinforcementSeq table(std::vector<double> values, std::optional<TailRule> tail);

  SeqKind kind() const noexcept { return kind_; }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  double rho() const noexcept { return rho_; }
  const std::vector<double>& table_values() const noexcept { return table_; }
  const std::optional<TailRule>& tail_rule() const noexcept { return rule_; }
  std::uint64_t domain_start() const noexcept { return domain_start_; }
  /// Polynomial degree; -1 for other kinds.
  int degree() const noexcept;

  /// Checked evaluation; throws InvalidArgument below domain_start and
  /// ConditionViolation if a tail rule produces a nonpositive value.
  Weight eval(std::int64_t n) const;

  /// Unchecked natural log of W(n); -inf when W(n) <= 0.
  double log_weight(std::uint64_t n) const noexcept;
  /// Unchecked linear W(n), clamped below at 0; +inf on overflow.
  double weight(std::uint64_t n) const noexcept;

  /// W(k) <= W(k+1) for all k < up_to. Exact for polynomial/exponential kinds.
  bool is_non_decreasing(std::uint64_t up_to) const;

  /// True when the kind is provably non-decreasing everywhere.
  bool provably_non_decreasing() const noexcept;

  /// log of sum_{i >= from} W(i)^(-power) using closed forms or an
  /// Euler-Maclaurin midpoint integral. nullopt when no analytic handle exists;
  /// +inf when the series provably diverges.
  std::optional<double> log_tail_sum(std::uint64_t from, double power = 1.0) const;

  friend bool operator==(const ReinforcementSeq&, const ReinforcementSeq&);

 private:
  ReinforcementSeq() = default;
  void compute_domain_start();

  SeqKind kind_ = SeqKind::polynomial;
  std::vector<double> coeffs_;
  double rho_ = 0.0;
  std::vector<double> table_;
  std::optional<TailRule> rule_;
  std::uint64_t domain_start_ = 0;
};

ReinforcementSeq make_polynomial(std::vector<double> coeffs);
ReinforcementSeq make_exponential(double rho);
ReinforcementSeq make_table(std::vector<double> values, std::optional<TailRule> tail);

/// W(2n) = n^4, W(2n+1) = n^4 - n^3 + 1. Non-monotone, satisfies the variation bound.
ReinforcementSeq make_interleaved_quartic();
/// W(2n) = e^n, W(2n+1) = e^(n-1). Non-monotone, satisfies the remainder bound.
ReinforcementSeq make_interleaved_exponential();

void to_json(nlohmann::json& j, const ReinforcementSeq& seq);
ReinforcementSeq seq_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Condition checks

enum class Condition { summable, variation_bound, remainder_bound, rem_ratio, squared_rem_ratio };
enum class Verdict { holds, fails, inconclusive };

std::string to_string(Condition c);
std::string to_string(Verdict v);

struct ConditionVerdict {
  Condition condition = Condition::summable;
  std::uint64_t horizon = 0;
  double estimate = 0.0;
  Verdict verdict = Verdict::inconclusive;
  std::string note;
};

void to_json(nlohmann::json& j, const ConditionVerdict& v);

struct RemainderEstimate {
  double value = 0.0;      // partial + tail (linear; may underflow to 0)
  double log_value = 0.0;  // natural log of value
  double partial = 0.0;
  double tail = 0.0;
  bool tail_included = false;
};

/// sum_{i=n}^{horizon} 1/W(i) plus the analytic tail beyond horizon when available.
RemainderEstimate remainder(const ReinforcementSeq& seq, std::uint64_t n, std::uint64_t horizon);

inline constexpr std::uint64_t kDefaultHorizon = 1'000'000;

ConditionVerdict check_strong(const ReinforcementSeq& seq, std::uint64_t horizon = kDefaultHorizon,
                              double tol = 1e-6);
ConditionVerdict check_variation_bound(const ReinforcementSeq& seq,
                                       std::uint64_t horizon = kDefaultHorizon);
ConditionVerdict check_remainder_bound(const ReinforcementSeq& seq,
                                       std::uint64_t horizon = kDefaultHorizon);

struct MdremOptions {
  double vanish_threshold = 0.05;
  double persist_threshold = 0.5;
  std::uint64_t window = 4096;
};

/// Rem(Kn)/Rem(n) and (sum_{i>=n} W^-2)/Rem(n)^2 along the n grid `horizons`.
std::pair<ConditionVerdict, ConditionVerdict> check_mdrem_conditions(
    const ReinforcementSeq& seq, const std::vector<std::uint64_t>& horizons,
    const std::vector<std::uint64_t>& k_list, const MdremOptions& opt = {});

}  // namespace urnfield
