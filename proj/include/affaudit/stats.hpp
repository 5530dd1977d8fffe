#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace affaudit {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Standard normal CDF via erfc.
double normal_cdf(double x);

/// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz)
/// with the symmetry swap for x > (a+1)/(a+b+2).
double incomplete_beta(double a, double b, double x);

/// Student t CDF with real-valued df > 0.
double student_t_cdf(double t, double df);

/// Two-sided p-value P(|T| >= |t|) for Student t.
double student_t_two_sided(double t, double df);

struct ZTestResult {
  double z = 0.0;
  double p = 1.0;
  bool degenerate = false;  // pooled proportion is 0 or 1; z = 0, p = 1
};

/// Pooled two-proportion z-test, two-sided.
ZTestResult ztest_proportions(std::uint64_t k1, std::uint64_t n1, std::uint64_t k2,
                              std::uint64_t n2);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch's unequal-variance t-test, two-sided, Welch-Satterthwaite df.
/// Needs at least 2 values per sample and some variance overall.
WelchResult welch_ttest(std::span<const double> a, std::span<const double> b);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;
};

/// Sample correlation; p from t = r sqrt((n-2)/(1-r^2)) on n-2 df.
PearsonResult pearson_r(std::span<const double> x, std::span<const double> y);

}  // namespace affaudit
