#pragma once

#include <cstddef>
#include <vector>

namespace tagtrain {

// Regularized upper incomplete gamma function Q(a, x).
double gamma_q(double a, double x);

// Upper-tail p-value of a chi-square statistic with df degrees of freedom.
double chi_square_pvalue(double statistic, double df);

struct ChiSquareResult {
  double statistic = 0.0;
  double df = 0.0;
  double pvalue = 1.0;
  std::size_t bins = 0;  // after merging low-expectation cells
};

// Goodness-of-fit of observed counts against expected counts. Cells with an
// expected count below min_expected are pooled into one bin so the chi-square
// approximation stays valid. The two vectors must have equal totals up to
// rounding and equal length.
ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected,
                               double min_expected = 5.0);

// Least-squares slope of y against x.
double regression_slope(const std::vector<double>& x,
                        const std::vector<double>& y);

// KL divergence KL(p || q) in nats; p and q must be same-length distributions
// with q strictly positive wherever p is.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace tagtrain
