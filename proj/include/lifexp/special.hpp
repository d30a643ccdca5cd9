#pragma once

#include <cstdint>

namespace lifexp {

/// Regularized incomplete beta function Iₓ(a, b).
///
/// Continued fraction evaluated by the modified Lentz method (at most 300
/// iterations, ConvergenceError beyond). When x > (a+1)/(a+b+2) the
/// symmetric form 1 − I₁₋ₓ(b, a) is evaluated instead.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Student's t statistic with `dof` degrees of freedom.
double student_t_two_sided_p(double t, std::uint64_t dof);

/// Upper tail P(F > f) of the F distribution with (d1, d2) degrees of freedom.
double f_survival_p(double f, std::uint64_t d1, std::uint64_t d2);

}  // namespace lifexp
