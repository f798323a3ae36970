#ifndef POLYMERLAB_STATS_HPP
#define POLYMERLAB_STATS_HPP

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "polymerlab/common.hpp"
#include "polymerlab/detail/philox.hpp"

namespace polymerlab {

/// Counter-based random stream addressed by (seed, path of integers).
/// Distinct paths give statistically independent streams; the same path
/// replays the identical sequence. Substreams derive deterministically, so a
/// path/replica owns its stream regardless of scheduling.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : key_(detail::splitmix64(seed ^ 0x5EEDFACEULL)) {
    id_ = detail::hash_combine(0x706F6C796D6572ull, seed);
  }

  RngStream substream(uint64_t id) const {
    RngStream s(*this);
    s.id_ = detail::hash_combine(s.id_, id);
    s.counter_ = 0;
    s.have_cached_ = false;
    return s;
  }
  RngStream substream(std::initializer_list<uint64_t> ids) const {
    RngStream s(*this);
    for (uint64_t id : ids) s.id_ = detail::hash_combine(s.id_, id);
    s.counter_ = 0;
    s.have_cached_ = false;
    return s;
  }

  uint64_t next_u64() {
    auto out = block();
    return (static_cast<uint64_t>(out[0]) << 32) | out[1];
  }
  /// Uniform in (0,1).
  double next_uniform() { return detail::u64_to_unit(next_u64()); }
  /// Standard normal; two per Philox block, one cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    auto out = block();
    uint64_t a = (static_cast<uint64_t>(out[0]) << 32) | out[1];
    uint64_t b = (static_cast<uint64_t>(out[2]) << 32) | out[3];
    cached_ = detail::normal_icdf(detail::u64_to_unit(b));
    have_cached_ = true;
    return detail::normal_icdf(detail::u64_to_unit(a));
  }

 private:
  std::array<uint32_t, 4> block() {
    uint64_t n = counter_++;
    return detail::Philox4x32::block(
        key_, {static_cast<uint32_t>(id_), static_cast<uint32_t>(id_ >> 32),
               static_cast<uint32_t>(n), static_cast<uint32_t>(n >> 32)});
  }

  uint64_t key_;
  uint64_t id_ = 0;
  uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

struct Moments {
  double mean = 0.0, var = 0.0, skew = 0.0, kurtosis_excess = 0.0;
  double se_mean = 0.0, se_var = 0.0, se_skew = 0.0, se_kurtosis = 0.0;
  size_t n = 0;
};

/// Unbiased mean/variance plus skewness and excess kurtosis with the usual
/// large-sample standard errors. Requires n >= 2.
Moments moments(std::span<const double> samples);

struct KSResult {
  double statistic = 0.0;
  double p_value = 1.0;
  size_t n = 0;
  double ref_mean = 0.0;
  double ref_variance = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against N(mean, variance) with the
/// asymptotic Kolmogorov p-value. Enforces n >= 50 and variance > 0.
KSResult ks_test_normal(std::span<const double> samples, double mean, double variance);

/// Asymptotic Kolmogorov CDF complement Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
double kolmogorov_p(double lambda);

struct TrendResult {
  bool decreasing = false;
  /// Worst consecutive difference in combined-s.e. units (most positive).
  double margin = 0.0;
};

/// Accepts the sequence as non-increasing unless some consecutive step rises
/// by more than two combined standard errors. Flat-within-noise passes; a rise
/// beyond the error bars fails. Requires >= 3 values.
TrendResult trend_decreasing(std::span<const double> values, std::span<const double> std_errors);

}  // namespace polymerlab

#endif
