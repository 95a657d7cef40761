#include "stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "error.hpp"

namespace patlas::stats {
namespace {

constexpr double kZ975 = 1.959963984540054;

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
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
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  fail(ErrorCode::kNumeric, "incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    fail(ErrorCode::kInvalidArgument, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0))
    fail(ErrorCode::kInvalidArgument, "incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double df) {
  if (!(df > 0.0)) fail(ErrorCode::kInvalidArgument, "t_cdf needs df > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::kInvalidArgument, "t_quantile needs p in (0, 1)");
  if (p == 0.5) return 0.0;
  // Solve in the upper half and mirror.
  const double q = p > 0.5 ? p : 1.0 - p;
  double lo = 0.0;
  double hi = 1.0;
  while (t_cdf(hi, df) < q) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) fail(ErrorCode::kNumeric, "t_quantile bracket overflow");
  }
  for (int i = 0; i < 400 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (t_cdf(mid, df) < q)
      lo = mid;
    else
      hi = mid;
  }
  const double t = 0.5 * (lo + hi);
  return p > 0.5 ? t : -t;
}

PairedComparison one_sample_t(std::span<const double> diffs) {
  const std::size_t n = diffs.size();
  if (n < 2) fail(ErrorCode::kInvalidArgument, "t-test needs at least 2 values");
  for (double v : diffs)
    if (!std::isfinite(v)) fail(ErrorCode::kNumeric, "t-test input is non-finite");

  PairedComparison r;
  r.differences.assign(diffs.begin(), diffs.end());
  const double dn = static_cast<double>(n);
  r.mean_diff = std::accumulate(diffs.begin(), diffs.end(), 0.0) / dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : diffs) {
    const double d = v - r.mean_diff;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  if (m2 == 0.0)
    fail(ErrorCode::kDegenerate, "t-test is undefined: all differences are equal");
  r.sd = std::sqrt(m2 / (dn - 1.0));
  r.df = static_cast<int>(n - 1);
  const double se = r.sd / std::sqrt(dn);
  r.t_statistic = r.mean_diff / se;
  r.p_value = std::min(
      1.0, incomplete_beta(0.5 * r.df, 0.5, r.df / (r.df + r.t_statistic * r.t_statistic)));
  const double half = t_quantile(0.975, r.df) * se;
  r.ci95 = {r.mean_diff - half, r.mean_diff + half};

  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  r.skewness = m3 / std::pow(m2, 1.5);
  r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  r.normality_advisory =
      n >= 3 && (std::abs(r.skewness) > 2.0 || std::abs(r.excess_kurtosis) > 7.0);
  return r;
}

std::vector<double> holm_correct(std::span<const double> p) {
  const std::size_t m = p.size();
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0))
      fail(ErrorCode::kInvalidArgument, "p-values must lie in [0, 1]");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const std::size_t i = order[rank];
    const double adj = std::min(1.0, static_cast<double>(m - rank) * p[i]);
    running = std::max(running, adj);
    out[i] = running;
  }
  return out;
}

MeanCi mean_ci95(std::span<const double> v) {
  if (v.empty()) fail(ErrorCode::kInvalidArgument, "mean of an empty sample");
  MeanCi r;
  const double n = static_cast<double>(v.size());
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  const double half = t_quantile(0.975, n - 1.0) * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  r.has_ci = true;
  r.lo = r.mean - half;
  r.hi = r.mean + half;
  return r;
}

std::pair<double, double> wilson_ci95(std::size_t successes, std::size_t trials) {
  if (trials == 0) fail(ErrorCode::kInvalidArgument, "Wilson interval needs trials > 0");
  if (successes > trials) fail(ErrorCode::kInvalidArgument, "successes exceed trials");
  const double n = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / n;
  const double z2 = kZ975 * kZ975;
  const double denom = 1.0 + z2 / n;
  const double center = (ph + z2 / (2.0 * n)) / denom;
  const double half = kZ975 * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

}  // namespace patlas::stats
