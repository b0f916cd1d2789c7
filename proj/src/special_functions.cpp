#include "protoexplain/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "protoexplain/errors.hpp"

namespace protoexplain {
namespace {

constexpr int kMaxTerms = 10000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b) / prefactor (modified Lentz).
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
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
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

// lgamma(x) - ((x - 0.5) log x - x + 0.5 log 2pi), valid for x >= 10.
double stirling_correction(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0))));
}

// log B(a, b). For a large argument the lgamma difference cancels badly, so
// lgamma(p) - lgamma(p + q) is expanded directly.
double log_beta(double a, double b) {
  const double p = std::max(a, b);
  const double q = std::min(a, b);
  if (p < 10.0) return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double diff = -(p - 0.5) * std::log1p(q / p) - q * std::log(p + q) + q + stirling_correction(p) -
                      stirling_correction(p + q);
  return std::lgamma(q) + diff;
}

}  // namespace

namespace {

// I_x(a, b) with y = 1 - x and both logarithms supplied by the caller, so
// callers that know them exactly keep full precision for large a or b.
double incomplete_beta(double a, double b, double x, double y, double log_x, double log_y) {
  const double front = std::exp(a * log_x + b * log_y - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, y) / b;
}

// I_{df / (df + t^2)}(df / 2, 1 / 2) = P(|T| > |t|).
double t_two_tail(double t, double df) {
  if (t == 0.0) return 1.0;
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  return incomplete_beta(0.5 * df, 0.5, x, y, -std::log1p(t2 / df), -std::log1p(df / t2));
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return incomplete_beta(a, b, x, 1.0 - x, std::log(x), std::log1p(-x));
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw ArgumentError("Student t needs df > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double tail = 0.5 * t_two_tail(t, df);
  return t >= 0.0 ? tail : 1.0 - tail;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw ArgumentError("Student t needs df > 0");
  if (std::isinf(t)) return 0.0;
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  return std::min(1.0, t_two_tail(t, df));
}

}  // namespace protoexplain
