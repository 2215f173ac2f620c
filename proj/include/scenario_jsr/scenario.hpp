#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scenario_jsr/errors.hpp"

namespace sjsr {

/// Confidence query for the scenario bound: find eps with
/// phi(eps, k, N) == beta.
struct ConfidenceQuery {
  double beta = 0.05;
  long k = 0;
  long N = 1;
};

namespace detail {

struct BetaEval {
  double value;
  bool converged;
};

// Continued fraction for I_x(a,b), modified Lentz. Converges fast for
// x < (a+1)/(a+b+2).
inline BetaEval beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return {h, true};
  }
  return {h, false};
}

inline double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

inline BetaEval reg_inc_beta_eval(double x, double a, double b) {
  if (x <= 0.0) return {0.0, true};
  if (x >= 1.0) return {1.0, true};
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    const BetaEval cf = beta_continued_fraction(a, b, x);
    return {std::exp(log_front) * cf.value / a, cf.converged};
  }
  const BetaEval cf = beta_continued_fraction(b, a, 1.0 - x);
  return {1.0 - std::exp(log_front) * cf.value / b, cf.converged};
}

inline void check_beta_params(double a, double b, const char* who) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ParameterError(std::string(who) + ": shape parameters must be positive and finite");
  }
}

// Binomial lower tail by summation of log-space terms.
inline double binomial_tail(double eps, long k, long n) {
  if (k >= n || eps <= 0.0) return 1.0;
  if (eps >= 1.0) return 0.0;
  const double log_ratio = std::log(eps) - std::log1p(-eps);
  double log_term = static_cast<double>(n) * std::log1p(-eps);
  double max_log = log_term;
  // Pass 1: largest term, for a stable shift.
  {
    double lt = log_term;
    for (long j = 1; j <= k; ++j) {
      lt += std::log(static_cast<double>(n - j + 1) / static_cast<double>(j)) + log_ratio;
      max_log = std::max(max_log, lt);
    }
  }
  double sum = 0.0;
  for (long j = 0; j <= k; ++j) {
    if (j > 0) log_term += std::log(static_cast<double>(n - j + 1) / static_cast<double>(j)) + log_ratio;
    sum += std::exp(log_term - max_log);
  }
  return std::min(1.0, std::exp(max_log) * sum);
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double reg_inc_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) throw ParameterError("reg_inc_beta: x must lie in [0, 1]");
  detail::check_beta_params(a, b, "reg_inc_beta");
  return detail::reg_inc_beta_eval(x, a, b).value;
}

/// Inverse of x -> I_x(a, b) on [0, 1].
///
/// Bisection shrinks the bracket to width 1e-3, then safeguarded Newton steps
/// (falling back to bisection whenever a step leaves the bracket) run until
/// the update is at rounding level.
inline double inv_reg_inc_beta(double p, double a, double b) {
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("inv_reg_inc_beta: p must lie in [0, 1]");
  detail::check_beta_params(a, b, "inv_reg_inc_beta");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (detail::reg_inc_beta_eval(mid, a, b).value < p) lo = mid;
    else hi = mid;
  }
  const double lb = detail::log_beta(a, b);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = detail::reg_inc_beta_eval(x, a, b).value - p;
    if (f == 0.0) return x;
    if (f < 0.0) lo = x;
    else hi = x;
    const double log_density = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb;
    const double density = std::exp(log_density);
    double next = (density > 0.0 && std::isfinite(density)) ? x - f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(x, 1e-300)) {
      return next;
    }
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(hi, 1e-300)) return next;
    x = next;
  }
  return x;
}

/// Binomial tail phi(eps, k, N) = sum_{j=0..k} C(N,j) eps^j (1-eps)^(N-j),
/// the probability of at most k successes in N trials of probability eps.
/// Equals 1 - I_eps(k+1, N-k) for k < N; that identity is re-checked on
/// every call where the continued fraction converges.
inline double phi(double eps, long k, long N) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("phi: eps must lie in [0, 1]");
  if (N < 0 || k < 0) throw ParameterError("phi: k and N must be non-negative");
  if (k > N) throw ParameterError("phi: k must not exceed N");
  const double tail = detail::binomial_tail(eps, k, N);
  if (k < N && eps > 0.0 && eps < 1.0) {
    const detail::BetaEval via_beta =
        detail::reg_inc_beta_eval(eps, static_cast<double>(k + 1), static_cast<double>(N - k));
    if (via_beta.converged && std::abs((1.0 - via_beta.value) - tail) > 1e-9) {
      throw NumericError("phi: binomial tail and incomplete beta disagree");
    }
  }
  return tail;
}

/// eps in (0, 1) with phi(eps, k, N) == beta, by bisection (phi is strictly
/// decreasing in eps when k < N).
inline double epsilon_for_confidence(const ConfidenceQuery& q) {
  if (!(q.beta > 0.0 && q.beta < 1.0)) throw ParameterError("epsilon_for_confidence: beta must lie in (0, 1)");
  if (q.k < 0 || q.k > q.N) throw ParameterError("epsilon_for_confidence: need 0 <= k <= N");
  if (q.N < q.k + 1) throw ParameterError("epsilon_for_confidence: need N >= k + 1");
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::binomial_tail(mid, q.k, q.N) > q.beta) lo = mid;
    else hi = mid;
  }
  const double eps = 0.5 * (lo + hi);
  if (std::abs(phi(eps, q.k, q.N) - q.beta) > 1e-10) {
    throw NumericError("epsilon_for_confidence: bisection did not reach 1e-10");
  }
  return eps;
}

}  // namespace sjsr
