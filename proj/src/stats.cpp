#include "tagtrain/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tagtrain {

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double n = a;
  for (int i = 0; i < 500; ++i) {
    n += 1.0;
    term *= x / n;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
  if (a <= 0.0) throw std::invalid_argument("gamma_q: a must be positive");
  if (x < 0.0) throw std::invalid_argument("gamma_q: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_pvalue(double statistic, double df) {
  if (df <= 0.0) throw std::invalid_argument("chi_square_pvalue: df must be positive");
  if (statistic <= 0.0) return 1.0;
  return gamma_q(df / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected,
                               double min_expected) {
  if (observed.size() != expected.size()) {
    throw std::invalid_argument("chi_square_gof: size mismatch");
  }
  if (observed.empty()) throw std::invalid_argument("chi_square_gof: empty input");

  // Pool cells with small expectations: sort cell indices by expected count
  // and merge from the smallest upward until every bin clears the floor.
  std::vector<std::size_t> order(observed.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return expected[a] < expected[b]; });

  std::vector<double> obs_bins;
  std::vector<double> exp_bins;
  double o_acc = 0.0;
  double e_acc = 0.0;
  for (std::size_t idx : order) {
    o_acc += observed[idx];
    e_acc += expected[idx];
    if (e_acc >= min_expected) {
      obs_bins.push_back(o_acc);
      exp_bins.push_back(e_acc);
      o_acc = 0.0;
      e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp_bins.empty()) {
      obs_bins.push_back(o_acc);
      exp_bins.push_back(e_acc);
    } else {
      obs_bins.back() += o_acc;
      exp_bins.back() += e_acc;
    }
  }

  ChiSquareResult r;
  r.bins = exp_bins.size();
  for (std::size_t i = 0; i < exp_bins.size(); ++i) {
    if (exp_bins[i] <= 0.0) continue;
    const double d = obs_bins[i] - exp_bins[i];
    r.statistic += d * d / exp_bins[i];
  }
  r.df = static_cast<double>(r.bins > 1 ? r.bins - 1 : 1);
  r.pvalue = chi_square_pvalue(r.statistic, r.df);
  return r;
}

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("regression_slope: need >= 2 paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("regression_slope: degenerate x");
  return (n * sxy - sx * sy) / denom;
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) throw std::invalid_argument("kl_divergence: q has zero mass where p > 0");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

}  // namespace tagtrain
