#pragma once

// Sample statistics used by the experiment harness: Student-t tail
// probabilities through the regularized incomplete beta function, Welch's
// unequal-variance t-test, and t-based confidence intervals.

#include <cmath>
#include <limits>
#include <span>
#include <utility>

#include "roster/core.hpp"

namespace roster::stats {

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

/// Unbiased (n-1) sample variance.
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

inline double sample_stddev(std::span<const double> v) { return std::sqrt(sample_variance(v)); }

namespace detail {

// Continued fraction for I_x(a, b), modified Lentz's method.
inline double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw InvalidInput("incomplete_beta needs a > 0 and b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidInput("incomplete_beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for T ~ Student-t with `dof` degrees of freedom.
inline double student_t_two_sided(double t, double dof) {
  if (!(dof > 0)) throw InvalidInput("degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

inline double student_t_cdf(double t, double dof) {
  const double tail = 0.5 * student_t_two_sided(t, dof);
  return t >= 0 ? 1.0 - tail : tail;
}

/// Quantile of the Student-t distribution, by bisection on the CDF.
inline double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("quantile probability must be in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
};

inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateSample("Welch's t-test needs at least two values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sample_variance(a) / na;
  const double vb = sample_variance(b) / nb;
  if (va == 0.0 && vb == 0.0) throw DegenerateSample("Welch's t-test: both samples have zero variance");
  WelchResult r;
  r.t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  r.dof = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_two_sided = student_t_two_sided(r.t, r.dof);
  return r;
}

/// mean -/+ t_{1-alpha/2, n-1} * s / sqrt(n)
inline std::pair<double, double> confidence_interval(std::span<const double> values, double alpha = 0.05) {
  if (values.size() < 2) throw DegenerateSample("confidence interval needs at least two values");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must be in (0, 1)");
  const double n = static_cast<double>(values.size());
  const double m = mean(values);
  const double s = sample_stddev(values);
  if (s == 0.0) return {m, m};
  const double half = student_t_quantile(1.0 - alpha / 2.0, n - 1.0) * s / std::sqrt(n);
  return {m - half, m + half};
}

}  // namespace roster::stats
