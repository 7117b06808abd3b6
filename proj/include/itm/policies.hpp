#pragma once

#include <span>
#include <string>
#include <vector>

namespace itm {

/// Inner-accuracy schedule delta_k (also used for the outer zeta_k).
///
///   constant(c):            delta_k = c
///   power_law(c, alpha):    delta_k = c / k^alpha
///   adaptive(c, alpha, d1): delta_1 = d1, delta_k = c (F(x_{k-2}) - F(x_{k-1}))^alpha for k >= 2
struct AccuracyPolicy {
  enum class Kind { constant, power_law, adaptive };
  Kind kind = Kind::power_law;
  double c = 1.0;
  double alpha = 3.0;
  double delta1 = 1.0;

  static AccuracyPolicy constant(double c) { return {Kind::constant, c, 0.0, 1.0}; }
  static AccuracyPolicy power_law(double c, double alpha) { return {Kind::power_law, c, alpha, 1.0}; }
  static AccuracyPolicy adaptive(double c, double alpha, double delta1 = 1.0) {
    return {Kind::adaptive, c, alpha, delta1};
  }

  /// `constant:C`, `power:C:ALPHA`, `adaptive:C:ALPHA[:DELTA1]`.
  static AccuracyPolicy parse(const std::string& spec);
  std::string to_string() const;

  /// `history` holds F(x_0), ..., F(x_{k-1}); only the last two entries are read.
  /// Throws ContractViolation on negative progress under the adaptive rule.
  double next_delta(long k, std::span<const double> history) const;

  /// Human-readable notes where the constant falls outside the proven range
  /// for order p. Never rejects.
  std::vector<std::string> validity_warnings(int p) const;
};

/// 1 / ((p+2) 3^{p+1} - 1): admissible supremum of c for the adaptive alpha = 1 rule.
double adaptive_rule_c_threshold(int p);

/// max{(p+1)^2 L_p / (p! sigma_{p+1}), 1}
double condition_number(int p, double lipschitz, double sigma);

struct CBound {
  double supremum;     // (p/(p+1)) omega^{-1/p}
  double recommended;  // (p/(2(p+1))) omega^{-1/p}
};

/// Throws ContractViolation when omega < 1.
CBound strong_convexity_c_bound(int p, double omega);

}  // namespace itm
