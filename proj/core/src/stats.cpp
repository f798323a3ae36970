#include "polymerlab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace polymerlab {

namespace {
constexpr const char* kModule = "stats";

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
}  // namespace

Moments moments(std::span<const double> samples) {
  const size_t n = samples.size();
  if (n < 2)
    throw Error(ErrorKind::invalid_parameter, kModule, "moments", "need at least 2 samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : samples) {
    double d = v - mean;
    double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const auto dn = static_cast<double>(n);
  Moments out;
  out.n = n;
  out.mean = mean;
  out.var = m2 / (dn - 1.0);
  m2 /= dn;
  m3 /= dn;
  m4 /= dn;
  out.skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  out.kurtosis_excess = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  out.se_mean = std::sqrt(out.var / dn);
  out.se_var = out.var * std::sqrt(2.0 / (dn - 1.0));
  out.se_skew = std::sqrt(6.0 / dn);
  out.se_kurtosis = std::sqrt(24.0 / dn);
  return out;
}

double kolmogorov_p(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 101; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KSResult ks_test_normal(std::span<const double> samples, double mean, double variance) {
  if (variance <= 0.0)
    throw Error(ErrorKind::invalid_reference, kModule, "ks_test_normal",
                "reference variance must be > 0");
  if (samples.size() < 50)
    throw Error(ErrorKind::invalid_parameter, kModule, "ks_test_normal",
                "need at least 50 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const double sd = std::sqrt(variance);
  double d = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    double f = normal_cdf((sorted[i] - mean) / sd);
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(f - lo, hi - f));
  }
  KSResult res;
  res.statistic = d;
  res.p_value = kolmogorov_p(std::sqrt(n) * d);
  res.n = sorted.size();
  res.ref_mean = mean;
  res.ref_variance = variance;
  return res;
}

TrendResult trend_decreasing(std::span<const double> values,
                             std::span<const double> std_errors) {
  if (values.size() < 3 || values.size() != std_errors.size())
    throw Error(ErrorKind::invalid_parameter, kModule, "trend_decreasing",
                "need >= 3 values with matching standard errors");
  TrendResult res;
  res.decreasing = true;
  res.margin = -1e300;
  for (size_t i = 0; i + 1 < values.size(); ++i) {
    double diff = values[i + 1] - values[i];
    double se = std::sqrt(std_errors[i] * std_errors[i] + std_errors[i + 1] * std_errors[i + 1]);
    double normalized = se > 0.0 ? diff / se : (diff > 0.0 ? 1e300 : 0.0);
    res.margin = std::max(res.margin, normalized);
    if (diff > 2.0 * se) res.decreasing = false;
  }
  return res;
}

}  // namespace polymerlab
