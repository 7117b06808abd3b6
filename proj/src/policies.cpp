#include "itm/policies.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "itm/errors.hpp"
#include "itm/model.hpp"

namespace itm {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) out.push_back(part);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

double number(const std::string& token, const std::string& spec) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty() || !std::isfinite(v)) {
    throw ContractViolation("bad number '" + token + "' in policy '" + spec + "'");
  }
  return v;
}

std::string format(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

AccuracyPolicy AccuracyPolicy::parse(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.empty()) throw ContractViolation("empty policy");
  AccuracyPolicy policy;
  if (parts[0] == "constant" && parts.size() == 2) {
    policy = constant(number(parts[1], spec));
  } else if (parts[0] == "power" && parts.size() == 3) {
    policy = power_law(number(parts[1], spec), number(parts[2], spec));
  } else if (parts[0] == "adaptive" && (parts.size() == 3 || parts.size() == 4)) {
    policy = adaptive(number(parts[1], spec), number(parts[2], spec), parts.size() == 4 ? number(parts[3], spec) : 1.0);
  } else {
    throw ContractViolation("unknown policy '" + spec + "' (expected constant:C, power:C:ALPHA, adaptive:C:ALPHA[:D1])");
  }
  if (policy.c < 0.0 || policy.delta1 < 0.0) throw ContractViolation("policy constants must be nonnegative");
  return policy;
}

std::string AccuracyPolicy::to_string() const {
  switch (kind) {
    case Kind::constant:
      return "constant:" + format(c);
    case Kind::power_law:
      return "power:" + format(c) + ":" + format(alpha);
    case Kind::adaptive:
      return "adaptive:" + format(c) + ":" + format(alpha) + ":" + format(delta1);
  }
  return {};
}

double AccuracyPolicy::next_delta(long k, std::span<const double> history) const {
  require(k >= 1, "iteration counter starts at 1");
  switch (kind) {
    case Kind::constant:
      return c;
    case Kind::power_law:
      return c / std::pow(static_cast<double>(k), alpha);
    case Kind::adaptive: {
      if (k == 1) return delta1;
      require(history.size() >= 2, "adaptive policy needs two objective values");
      const double progress = history[history.size() - 2] - history[history.size() - 1];
      require(progress >= 0.0, "adaptive policy saw an objective increase; the outer method must be monotone");
      if (progress == 0.0) return 0.0;
      return c * std::pow(progress, alpha);
    }
  }
  return 0.0;
}

std::vector<std::string> AccuracyPolicy::validity_warnings(int p) const {
  std::vector<std::string> out;
  const double pd = static_cast<double>(p);
  if (kind == Kind::power_law && alpha != pd + 1.0) {
    out.push_back("power-law exponent " + format(alpha) + " differs from p+1 = " + format(pd + 1.0) +
                  "; the global-rate guarantee assumes c/k^{p+1}");
  }
  if (kind == Kind::adaptive) {
    if (alpha == 1.0 && c >= adaptive_rule_c_threshold(p)) {
      out.push_back("adaptive c = " + format(c) + " is not below 1/((p+2)3^{p+1}-1) = " +
                    format(adaptive_rule_c_threshold(p)) + "; the sublinear guarantee does not apply");
    } else if (alpha != 1.0 && alpha != 0.5 * (pd + 1.0)) {
      out.push_back("adaptive exponent " + format(alpha) + " is neither 1 nor (p+1)/2; no rate guarantee");
    }
    if (alpha == 0.5 * (pd + 1.0) && p < 2) {
      out.push_back("the superlinear rule with exponent (p+1)/2 needs p >= 2");
    }
  }
  return out;
}

double adaptive_rule_c_threshold(int p) {
  require(p >= 1, "order must be positive");
  return 1.0 / ((p + 2) * std::pow(3.0, p + 1) - 1.0);
}

double condition_number(int p, double lipschitz, double sigma) {
  require(p >= 1 && sigma > 0.0 && lipschitz >= 0.0, "condition number needs p >= 1, sigma > 0, L >= 0");
  return std::max((p + 1.0) * (p + 1.0) * lipschitz / (factorial(p) * sigma), 1.0);
}

CBound strong_convexity_c_bound(int p, double omega) {
  require(p >= 1, "order must be positive");
  require(omega >= 1.0, "condition number must be at least 1");
  const double scale = std::pow(omega, -1.0 / p);
  return {p / (p + 1.0) * scale, p / (2.0 * (p + 1.0)) * scale};
}

}  // namespace itm
