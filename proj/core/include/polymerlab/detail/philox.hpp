#ifndef POLYMERLAB_DETAIL_PHILOX_HPP
#define POLYMERLAB_DETAIL_PHILOX_HPP

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based generation: a cell or draw index is mapped to a 128-bit
// counter, Philox4x32-10 permutes it, and the output words feed an inverse
// normal CDF. Same (key, counter) always yields the same value, so noise
// cells and MC streams regenerate lazily without storage.

namespace polymerlab::detail {

struct Philox4x32 {
  static constexpr uint32_t kMul0 = 0xD2511F53u;
  static constexpr uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr uint32_t kW0 = 0x9E3779B9u;
  static constexpr uint32_t kW1 = 0xBB67AE85u;

  static inline std::array<uint32_t, 4> block(uint64_t key, std::array<uint32_t, 4> ctr) {
    uint32_t k0 = static_cast<uint32_t>(key);
    uint32_t k1 = static_cast<uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      uint64_t p0 = static_cast<uint64_t>(kMul0) * ctr[0];
      uint64_t p1 = static_cast<uint64_t>(kMul1) * ctr[2];
      std::array<uint32_t, 4> next;
      next[0] = static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ k0;
      next[1] = static_cast<uint32_t>(p1);
      next[2] = static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ k1;
      next[3] = static_cast<uint32_t>(p0);
      ctr = next;
      k0 += kW0;
      k1 += kW1;
    }
    return ctr;
  }
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t h, uint64_t v) {
  return splitmix64(h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

// Uniform in (0,1), never exactly 0 or 1.
inline double u64_to_unit(uint64_t u) {
  return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

// Acklam's rational approximation of the standard normal quantile,
// |relative error| < 1.2e-9 over (0,1). Ample for every statistical use here.
inline double normal_icdf(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double standard_normal_from(uint64_t key, std::array<uint32_t, 4> ctr) {
  auto out = Philox4x32::block(key, ctr);
  uint64_t u = (static_cast<uint64_t>(out[0]) << 32) | out[1];
  return normal_icdf(u64_to_unit(u));
}

}  // namespace polymerlab::detail

#endif
