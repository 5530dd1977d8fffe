#include "affaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace affaudit {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Continued fraction for I_x(a,b), Numerical Recipes style (betacf).
double beta_continued_fraction(double a, double b, double x) {
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
    const double m2 = 2.0 * m;
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
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw StatsError("incomplete beta did not converge");
}

// Stirling remainder lnGamma(x) - [(x - 0.5) ln x - x + 0.5 ln(2 pi)], x >= 10.
double stirling_remainder(double x) {
  const double r = 1.0 / (x * x);
  return (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / x;
}

// ln B(a, b). Differencing lgamma values loses about eps * lgamma(a) when
// one argument is large, so lnGamma(a) - lnGamma(a + b) is expanded with
// log1p for a >= 10.
double log_beta(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a < 10.0) return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double s = a + b;
  const double ratio = -(a - 0.5) * std::log1p(b / a) - b * std::log(s) + b +
                       stirling_remainder(a) - stirling_remainder(s);
  return std::lgamma(b) + ratio;
}

// I_x(a, b) with y = 1 - x supplied by the caller, who can often compute it
// without cancellation.
double incomplete_beta_xy(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_x = x > 0.5 ? std::log1p(-y) : std::log(x);
  const double log_y = y > 0.5 ? std::log1p(-x) : std::log(y);
  const double front = std::exp(a * log_x + b * log_y - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw StatsError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw StatsError("incomplete beta needs 0 <= x <= 1");
  return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw StatsError("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double t2 = t * t;
  return incomplete_beta_xy(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2));
}

double student_t_cdf(double t, double df) {
  const double tail = student_t_two_sided(t, df) / 2.0;
  return t < 0.0 ? tail : 1.0 - tail;
}

ZTestResult ztest_proportions(std::uint64_t k1, std::uint64_t n1, std::uint64_t k2,
                              std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) throw StatsError("z-test needs n1, n2 >= 1");
  if (k1 > n1 || k2 > n2) throw StatsError("z-test needs k <= n");
  const double p1 = static_cast<double>(k1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(k2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
  ZTestResult r;
  if (k1 + k2 == 0 || k1 + k2 == n1 + n2) {
    r.degenerate = true;
    return r;
  }
  const double se = std::sqrt(pooled * (1.0 - pooled) *
                              (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  r.z = (p1 - p2) / se;
  r.p = std::erfc(std::fabs(r.z) / std::sqrt(2.0));
  return r;
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // sample variance, n - 1
};

Moments moments(std::span<const double> v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : v) ss += (x - m.mean) * (x - m.mean);
  m.var = ss / (n - 1.0);
  return m;
}

}  // namespace

WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw StatsError("Welch's t-test needs >= 2 values per sample");
  const auto ma = moments(a);
  const auto mb = moments(b);
  if (ma.var == 0.0 && mb.var == 0.0) throw StatsError("Welch's t-test: both variances are zero");
  const double va = ma.var / static_cast<double>(a.size());
  const double vb = mb.var / static_cast<double>(b.size());
  WelchResult r;
  r.t = (ma.mean - mb.mean) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  r.p = student_t_two_sided(r.t, r.df);
  return r;
}

PearsonResult pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("Pearson needs equal-length inputs");
  if (x.size() < 3) throw StatsError("Pearson needs at least 3 pairs");
  const auto mx = moments(x);
  const auto my = moments(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx.mean;
    const double dy = y[i] - my.mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("Pearson: zero variance");
  PearsonResult r;
  r.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(x.size()) - 2.0;
  const double one_minus = 1.0 - r.r * r.r;
  r.p = one_minus <= 0.0 ? 0.0 : incomplete_beta(df / 2.0, 0.5, one_minus);
  return r;
}

}  // namespace affaudit
