#pragma once

namespace protoexplain {

/// Regularized incomplete beta I_x(a, b), evaluated with the Lentz continued
/// fraction on whichever side of the symmetry point converges faster.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T > t) for Student's t with `df` degrees of freedom (df may be real).
double student_t_sf(double t, double df);

/// Two-sided p-value 2 * P(T > |t|).
double student_t_two_sided(double t, double df);

}  // namespace protoexplain
