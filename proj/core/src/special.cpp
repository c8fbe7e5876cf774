#include "mogat/special.hpp"

#include <cmath>
#include <limits>

#include "mogat/error.hpp"

namespace mogat::special {

namespace {

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) throw NumericError(std::string(name) + ": argument must be finite and > 0");
}

// Recurrence shifts x up to this bound before the asymptotic expansions.
constexpr double kAsymptoticFrom = 10.0;

}  // namespace

double digamma(double x) {
  require_positive(x, "digamma");
  double acc = 0.0;
  while (x < kAsymptoticFrom) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number series: 1/12, 1/120, 1/252, 1/240, 1/132, 691/32760, 1/12
  const double series =
      inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double acc = 0.0;
  while (x < kAsymptoticFrom) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv + 0.5 * inv2 +
      inv * inv2 * (1.0 / 6 - inv2 * (1.0 / 30 - inv2 * (1.0 / 42 - inv2 * (1.0 / 30 - inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 - inv2 * 7.0 / 6))))));
  return acc + series;
}

double tetragamma(double x) {
  require_positive(x, "tetragamma");
  double acc = 0.0;
  while (x < kAsymptoticFrom) {
    acc -= 2.0 / (x * x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      -inv2 - inv2 * inv -
      inv2 * inv2 * (0.5 - inv2 * (1.0 / 6 - inv2 * (1.0 / 6 - inv2 * (3.0 / 10 - inv2 * (5.0 / 6 - inv2 * 691.0 / 210)))));
  return acc + series;
}

double trigamma_inverse(double y, double tol, int max_iter) {
  require_positive(y, "trigamma_inverse");
  if (y > 1e7) return 1.0 / std::sqrt(y);
  if (y < 1e-6) return 1.0 / y;
  // trigamma(x) ~ 1/x for large x; trigamma is convex and decreasing, so
  // Newton from the left of the root increases monotonically.
  double x = 1.0 / y;
  if (trigamma(x) < y) x = 0.5 / y;  // small-x side
  for (int it = 0; it < max_iter; ++it) {
    const double step = (trigamma(x) - y) / tetragamma(x);
    double next = x - step;
    if (next <= 0.0) next = 0.5 * x;
    const double rel = std::abs(next - x) / x;
    x = next;
    if (rel < tol) return x;
  }
  return x;
}

namespace {

// Continued fraction for I_x(a, b) (modified Lentz), valid for
// x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  require_positive(a, "reg_inc_beta(a)");
  require_positive(b, "reg_inc_beta(b)");
  if (!(x >= 0.0 && x <= 1.0)) throw NumericError("reg_inc_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  if (a == 1.0 && b == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (std::isnan(t)) throw NumericError("student_t_two_sided: t is NaN");
  if (!(df > 0.0)) throw NumericError("student_t_two_sided: df must be > 0");
  const double at = std::abs(t);
  if (std::isinf(at)) return 0.0;
  if (std::isinf(df)) return std::erfc(at / std::sqrt(2.0));
  if (at == 0.0) return 1.0;
  const double t2 = at * at;
  // For |t| large relative to df the complementary form keeps precision.
  if (t2 > df) return reg_inc_beta(0.5 * df, 0.5, df / (df + t2));
  return 1.0 - reg_inc_beta(0.5, 0.5 * df, t2 / (df + t2));
}

}  // namespace mogat::special
