#pragma once

namespace mogat::special {

/// psi(x) for x > 0.
double digamma(double x);
/// psi'(x) for x > 0.
double trigamma(double x);
/// psi''(x) for x > 0.
double tetragamma(double x);

/// Solves trigamma(x) = y for x > 0 by Newton iteration (y > 0).
double trigamma_inverse(double y, double tol = 1e-10, int max_iter = 100);

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1].
double reg_inc_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) of Student's t with df degrees of
/// freedom. df may be +infinity (standard normal).
double student_t_two_sided(double t, double df);

}  // namespace mogat::special
