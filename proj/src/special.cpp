#include "lifexp/special.hpp"

#include <cmath>

#include "lifexp/errors.hpp"

namespace lifexp {
namespace {

constexpr int kMaxIterations = 300;
constexpr double kEpsilon = 1e-15;
constexpr double kTiny = 1e-300;

// Continued fraction for Iₓ(a,b) · B(a,b) · a / (xᵃ(1−x)ᵇ).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    // even step
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    // odd step
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) return h;
  }
  throw ConvergenceError("incomplete beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw ContractError("incomplete beta: shape parameters must be positive and finite");
  if (!(x >= 0.0 && x <= 1.0)) throw ContractError("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  double value;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    value = front * beta_continued_fraction(a, b, x) / a;
  } else {
    value = 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
  }
  if (value < 0.0) return 0.0;
  if (value > 1.0) return 1.0;
  return value;
}

double student_t_two_sided_p(double t, std::uint64_t dof) {
  if (dof == 0) throw ContractError("student t: zero degrees of freedom");
  if (std::isnan(t)) throw ContractError("student t: NaN statistic");
  if (std::isinf(t)) return 0.0;
  const double nu = static_cast<double>(dof);
  return regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

double f_survival_p(double f, std::uint64_t d1, std::uint64_t d2) {
  if (d1 == 0 || d2 == 0) throw ContractError("F distribution: zero degrees of freedom");
  if (!(f >= 0.0)) throw ContractError("F distribution: negative or NaN statistic");
  if (std::isinf(f)) return 0.0;
  const double n1 = static_cast<double>(d1);
  const double n2 = static_cast<double>(d2);
  return regularized_incomplete_beta(n2 / 2.0, n1 / 2.0, n2 / (n2 + n1 * f));
}

}  // namespace lifexp
