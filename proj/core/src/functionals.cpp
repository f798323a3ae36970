#include "polymerlab/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "polymerlab/detail/parallel.hpp"

namespace polymerlab {

namespace {

constexpr const char* kModule = "functionals";
constexpr uint64_t kPathChunk = 256;

double active_radius(const KernelSpec& spec) { return spec.r_support() / std::sqrt(2.0); }

// Midpoint-rule ring kernel on the active interval. Row s against node r_j:
//   K(s, r_j) = beta^2 om_d chi_d h r_j^{d-1} max(s, r_j)^{2-d} R(sqrt2 r_j).
// Since max(s, r)^{2-d} splits at s, an application reduces to one prefix and
// one suffix sum over the sorted nodes: O(m) per sweep.
struct RingKernel {
  int dim;
  double beta2;
  double h;
  double pref;  // beta^2 * om_d * chi_d * h
  std::vector<double> nodes;
  std::vector<double> r_weight;  // r_j^{d-1} R(sqrt2 r_j)
  std::vector<double> node_pow;  // r_j^{2-d}
  mutable std::vector<double> prefix, suffix;

  RingKernel(const KernelSpec& spec, double beta, int m) {
    dim = spec.dim();
    beta2 = beta * beta;
    double ra = active_radius(spec);
    h = ra / m;
    pref = beta2 * sphere_area(dim) * chi_d(dim) * h;
    nodes.resize(m);
    r_weight.resize(m);
    node_pow.resize(m);
    for (int j = 0; j < m; ++j) {
      nodes[j] = (j + 0.5) * h;
      r_weight[j] = std::pow(nodes[j], dim - 1) * spec.R_radial(std::sqrt(2.0) * nodes[j]);
      node_pow[j] = std::pow(nodes[j], 2 - dim);
    }
    prefix.resize(m + 1);
    suffix.resize(m + 1);
  }

  void build_sums(const std::vector<double>& x) const {
    const size_t m = nodes.size();
    prefix[0] = 0.0;
    for (size_t j = 0; j < m; ++j) prefix[j + 1] = prefix[j] + r_weight[j] * x[j];
    suffix[m] = 0.0;
    for (size_t j = m; j-- > 0;) suffix[j] = suffix[j + 1] + r_weight[j] * node_pow[j] * x[j];
  }

  // y <- 1 + K x (values at the nodes).
  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    build_sums(x);
    const size_t m = nodes.size();
    for (size_t i = 0; i < m; ++i) {
      double s_pow = node_pow[i];
      y[i] = 1.0 + pref * (s_pow * prefix[i + 1] + suffix[i + 1]);
    }
  }

  // (K x)(s) at an arbitrary radius; rebuilds the partial sums.
  double row_apply(double s, const std::vector<double>& x) const {
    build_sums(x);
    return row_from_sums(s);
  }

  double row_from_sums(double s) const {
    const size_t m = nodes.size();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
    auto idx = static_cast<size_t>(it - nodes.begin());  // nodes[0..idx) <= s
    double s_pow = s > 0.0 ? std::pow(s, 2 - dim) : 0.0;
    if (idx == 0) return pref * suffix[0];
    if (idx >= m) return pref * s_pow * prefix[m];
    return pref * (s_pow * prefix[idx] + suffix[idx]);
  }

  // beta^2 int R(sqrt2 x) h(x) dx over the active ball.
  double tail_coefficient(const std::vector<double>& x) const {
    double acc = 0.0;
    for (size_t j = 0; j < nodes.size(); ++j) acc += r_weight[j] * x[j];
    return beta2 * sphere_area(dim) * h * acc;
  }
};

enum class FixedPointOutcome { converged, diverged, slow };

FixedPointOutcome iterate_fixed_point(const RingKernel& K, const FixedPointOptions& opts,
                                      std::vector<double>& h, uint64_t& iterations,
                                      double& residual) {
  const auto m = h.size();
  std::vector<double> next(m);
  double prev_res = -1.0;
  double ratio = 0.0;
  int ratio_count = 0;
  for (uint64_t it = 1; it <= opts.n_max; ++it) {
    K.apply(h, next);
    double res = 0.0, sup = 0.0;
    for (size_t i = 0; i < m; ++i) {
      res = std::max(res, std::fabs(next[i] - h[i]));
      sup = std::max(sup, next[i]);
    }
    h.swap(next);
    iterations = it;
    residual = res;
    if (sup > opts.divergence_cap) return FixedPointOutcome::diverged;
    if (res < opts.tol) return FixedPointOutcome::converged;
    if (prev_res > 0.0) {
      ratio += res / prev_res;
      ++ratio_count;
    }
    prev_res = res;
  }
  // Update-norm ratio is a power-iteration estimate of the spectral radius.
  double avg_ratio = ratio_count ? ratio / ratio_count : 2.0;
  return avg_ratio >= 1.0 ? FixedPointOutcome::diverged : FixedPointOutcome::slow;
}

FixedPointOutcome probe_fixed_point(const KernelSpec& spec, double beta,
                                    const FixedPointOptions& opts) {
  if (beta == 0.0) return FixedPointOutcome::converged;
  RingKernel K(spec, beta, opts.m);
  std::vector<double> h(opts.m, 1.0);
  uint64_t iters = 0;
  double res = 0.0;
  return iterate_fixed_point(K, opts, h, iters, res);
}

}  // namespace

double HBetaSolution::eval(double r) const {
  if (r < 0.0) r = -r;
  if (radii.size() < 2) return 1.0;
  const double r_max = radii.back();
  if (r >= r_active) {
    // Exact tail: 1 + chi_d tail_coeff r^{2-d}.
    return 1.0 + chi_d(dim) * tail_coeff * std::pow(r, 2 - dim);
  }
  double step = radii[1] - radii[0];
  double u = r / step;
  auto i = static_cast<size_t>(u);
  if (i + 1 >= radii.size()) return values.back();
  double f = u - static_cast<double>(i);
  (void)r_max;
  return values[i] + f * (values[i + 1] - values[i]);
}

HBetaSolution h_beta_fixed_point(const KernelSpec& spec, double beta,
                                 const FixedPointOptions& opts) {
  if (beta < 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "h_beta_fixed_point",
                "beta must be >= 0");
  HBetaSolution sol;
  sol.dim = spec.dim();
  sol.beta = beta;
  sol.r_active = active_radius(spec);

  const int n_out = std::max(opts.out_points, 8);
  const double r_max = std::max(opts.r_max, 2.0 * sol.r_active);
  sol.radii.resize(n_out + 1);
  for (int i = 0; i <= n_out; ++i) sol.radii[i] = r_max * i / n_out;

  if (beta == 0.0) {
    sol.values.assign(sol.radii.size(), 1.0);
    sol.converged = true;
    sol.iterations = 1;
    sol.residual = 0.0;
    sol.tail_coeff = 0.0;
    return sol;
  }

  RingKernel K(spec, beta, opts.m);
  std::vector<double> h(opts.m, 1.0);
  auto outcome = iterate_fixed_point(K, opts, h, sol.iterations, sol.residual);
  if (outcome == FixedPointOutcome::diverged)
    throw Error(ErrorKind::supercritical_beta, kModule, "h_beta_fixed_point",
                "fixed-point iteration diverges: beta is at or above beta_L2");
  sol.converged = outcome == FixedPointOutcome::converged;

  sol.tail_coeff = K.tail_coefficient(h);
  sol.values.resize(sol.radii.size());
  K.build_sums(h);
  for (size_t i = 0; i < sol.radii.size(); ++i) {
    double r = sol.radii[i];
    if (r >= sol.r_active)
      sol.values[i] = 1.0 + chi_d(sol.dim) * sol.tail_coeff * std::pow(r, 2 - sol.dim);
    else
      sol.values[i] = 1.0 + K.row_from_sums(r);
  }
  return sol;
}

namespace {

// Shared MC core of h_beta_mc / pair_functional: free Brownian paths from
// `start`, left-endpoint Riemann sum of R(sqrt2 B), exponential average.
// Also tracks the running value at 3/4 of the horizon for the tail check.
struct ExpFunctionalResult {
  Estimate est;
  double tail_fraction = 0.0;
};

ExpFunctionalResult exp_functional_mc(const KernelSpec& spec, double beta, PointView start,
                                      double horizon, double dt, size_t n,
                                      const RngStream& stream, const char* op) {
  const int dim = spec.dim();
  if (static_cast<int>(start.size()) != dim)
    throw Error(ErrorKind::invalid_parameter, kModule, op, "start point dimension mismatch");
  if (horizon < dt || dt <= 0.0 || n < 1)
    throw Error(ErrorKind::invalid_parameter, kModule, op, "need horizon >= dt, n >= 1");
  if (dim > 8)
    throw Error(ErrorKind::invalid_parameter, kModule, op, "dimension too large");
  const auto K = static_cast<int64_t>(std::llround(horizon / dt));
  const int64_t K34 = (3 * K) / 4;
  const double beta2 = beta * beta;
  const double s2 = 2.0;

  if (beta == 0.0) return {Estimate{1.0, 0.0, n, "mc", {}}, 0.0};

  struct Chunk {
    double sum = 0.0, sum2 = 0.0, sum34 = 0.0;
  };
  std::vector<Chunk> chunks((n + kPathChunk - 1) / kPathChunk);
  const double sdt = std::sqrt(dt);
  detail::parallel_chunks(n, kPathChunk, [&](uint64_t ci, uint64_t lo, uint64_t hi) {
    Chunk acc;
    for (uint64_t p = lo; p < hi; ++p) {
      RngStream ps = stream.substream({0xF00D, p});
      double pos[8];
      for (int c = 0; c < dim; ++c) pos[c] = start[c];
      double integral = 0.0, integral34 = 0.0;
      for (int64_t k = 0; k < K; ++k) {
        double r2 = 0.0;
        for (int c = 0; c < dim; ++c) r2 += pos[c] * pos[c];
        integral += spec.R_radial_sq(s2 * r2);
        if (k + 1 == K34) integral34 = integral;
        for (int c = 0; c < dim; ++c) pos[c] += sdt * ps.next_normal();
      }
      double w = std::exp(beta2 * dt * integral);
      acc.sum += w;
      acc.sum2 += w * w;
      acc.sum34 += std::exp(beta2 * dt * integral34);
    }
    chunks[ci] = acc;
  });
  double sum = 0.0, sum2 = 0.0, sum34 = 0.0;
  for (const auto& c : chunks) {
    sum += c.sum;
    sum2 += c.sum2;
    sum34 += c.sum34;
  }
  const auto dn = static_cast<double>(n);
  ExpFunctionalResult out;
  out.est.value = sum / dn;
  out.est.n = n;
  out.est.method = "mc";
  if (n > 1) {
    double var = (sum2 / dn - out.est.value * out.est.value) * dn / (dn - 1.0);
    out.est.std_error = var > 0.0 ? std::sqrt(var / dn) : 0.0;
  }
  double mean34 = sum34 / dn;
  double growth = out.est.value - mean34;
  double excess = out.est.value - 1.0;
  out.tail_fraction = excess > 0.0 ? growth / excess : 0.0;
  return out;
}

}  // namespace

Estimate h_beta_mc(const KernelSpec& spec, double beta, PointView z, double horizon,
                   double dt, size_t n, const RngStream& stream) {
  auto res = exp_functional_mc(spec, beta, z, horizon, dt, n, stream, "h_beta_mc");
  // Last-quarter contribution still visible -> the infinite-horizon truncation
  // is not yet converged for this start point.
  if (res.tail_fraction > 0.05)
    res.est.notes.push_back("horizon-too-small: last quarter contributes " +
                            std::to_string(res.tail_fraction) + " of the excess");
  return res.est;
}

Estimate pair_functional(const KernelSpec& spec, double beta, double T, PointView z_sep,
                         double dt, size_t n, const RngStream& stream) {
  Point start(z_sep.begin(), z_sep.end());
  for (double& c : start) c /= std::sqrt(2.0);
  return exp_functional_mc(spec, beta, start, T, dt, n, stream, "pair_functional").est;
}

Estimate bridge_functional(const KernelSpec& spec, double beta, const Point& a,
                           const Point& b, double T, double dt, size_t n,
                           const RngStream& stream) {
  const int dim = spec.dim();
  if (static_cast<int>(a.size()) != dim || static_cast<int>(b.size()) != dim)
    throw Error(ErrorKind::invalid_parameter, kModule, "bridge_functional",
                "endpoint dimension mismatch");
  if (T < dt || dt <= 0.0 || n < 1)
    throw Error(ErrorKind::invalid_parameter, kModule, "bridge_functional",
                "need T >= dt, n >= 1");
  if (dim > 8)
    throw Error(ErrorKind::invalid_parameter, kModule, "bridge_functional",
                "dimension too large");
  if (beta == 0.0) return Estimate{1.0, 0.0, n, "mc", {}};
  const auto K = static_cast<size_t>(std::llround(T / dt));
  const double beta2 = beta * beta;
  const double sdt = std::sqrt(dt);

  struct Chunk {
    double sum = 0.0, sum2 = 0.0;
  };
  std::vector<Chunk> chunks((n + kPathChunk - 1) / kPathChunk);
  detail::parallel_chunks(n, kPathChunk, [&](uint64_t ci, uint64_t lo, uint64_t hi) {
    Chunk acc;
    std::vector<double> path((K + 1) * static_cast<size_t>(dim));
    for (uint64_t p = lo; p < hi; ++p) {
      RngStream ps = stream.substream({0xF00D, p});
      for (int c = 0; c < dim; ++c) path[c] = 0.0;
      for (size_t k = 1; k <= K; ++k)
        for (int c = 0; c < dim; ++c)
          path[k * dim + c] = path[(k - 1) * dim + c] + sdt * ps.next_normal();
      const double* BT = path.data() + K * dim;
      double integral = 0.0;
      for (size_t k = 0; k < K; ++k) {
        double u = static_cast<double>(k) / static_cast<double>(K);
        double r2 = 0.0;
        for (int c = 0; c < dim; ++c) {
          double w = a[c] + path[k * dim + c] - u * (BT[c] - (b[c] - a[c]));
          r2 += w * w;
        }
        integral += spec.R_radial_sq(2.0 * r2);
      }
      double w = std::exp(beta2 * dt * integral);
      acc.sum += w;
      acc.sum2 += w * w;
    }
    chunks[ci] = acc;
  });
  double sum = 0.0, sum2 = 0.0;
  for (const auto& c : chunks) {
    sum += c.sum;
    sum2 += c.sum2;
  }
  const auto dn = static_cast<double>(n);
  Estimate est;
  est.value = sum / dn;
  est.n = n;
  est.method = "mc";
  if (n > 1) {
    double var = (sum2 / dn - est.value * est.value) * dn / (dn - 1.0);
    est.std_error = var > 0.0 ? std::sqrt(var / dn) : 0.0;
  }
  return est;
}

double h_series_term(const KernelSpec& spec, double beta, int k, double z_radius, int m) {
  if (k < 0 || k > 3)
    throw Error(ErrorKind::unsupported_order, kModule, "h_series_term",
                "series order limited to k <= 3");
  if (k == 0) return 1.0;
  RingKernel K(spec, beta, m);
  std::vector<double> term(m, 1.0), next(m);
  // term = K^{k-1} 1 at the nodes, then one row application at |z|.
  for (int j = 1; j < k; ++j) {
    K.build_sums(term);
    for (int i = 0; i < m; ++i) next[i] = K.row_from_sums(K.nodes[i]);
    term.swap(next);
  }
  return K.row_apply(std::fabs(z_radius), term);
}

KernelEval kernel_H_T_inf(const KernelSpec& spec, double beta, double T, const Point& x1,
                          const Point& x2, const HBetaSolution& hsol) {
  if (x1 == x2)
    throw Error(ErrorKind::singularity, kModule, "kernel_H_T_inf", "x1 must differ from x2");
  if (!hsol.converged || hsol.beta != beta)
    throw Error(ErrorKind::invalid_parameter, kModule, "kernel_H_T_inf",
                "need a converged h_beta solution at this beta");
  double d2 = 0.0;
  for (size_t c = 0; c < x1.size(); ++c) {
    double d = x2[c] - x1[c];
    d2 += d * d;
  }
  const int dim = spec.dim();
  double arg = std::sqrt(T * d2 / 2.0);
  KernelEval ev;
  ev.T = T;
  ev.x1 = x1;
  ev.x2 = x2;
  ev.value = std::pow(T, 0.5 * (dim - 2)) * (hsol.eval(arg) - 1.0);
  return ev;
}

double kernel_H_T_inf_limit(const KernelSpec& spec, const Point& x1, const Point& x2,
                            const HBetaSolution& hsol) {
  double d2 = 0.0;
  for (size_t c = 0; c < x1.size(); ++c) {
    double d = x2[c] - x1[c];
    d2 += d * d;
  }
  return yukawa(spec.dim(), std::sqrt(d2 / 2.0)) * hsol.tail_coeff;
}

Estimate l2_error_formula(const KernelSpec& spec, double beta, double T,
                          const HBetaSolution& hsol, const L2ErrorOptions& opts,
                          const RngStream& stream) {
  const int dim = spec.dim();
  if (beta < 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "l2_error_formula",
                "beta must be >= 0");
  if (beta > 0.0 && (!hsol.converged || hsol.beta != beta))
    throw Error(ErrorKind::invalid_parameter, kModule, "l2_error_formula",
                "need a converged h_beta solution at this beta");
  if (beta == 0.0) return Estimate{0.0, 0.0, opts.n_pairs, "mc", {}};

  const double sqT = std::sqrt(T);
  const double is2 = 1.0 / std::sqrt(2.0);
  std::vector<double> samples(opts.n_pairs);
  detail::parallel_chunks(opts.n_pairs, 8, [&](uint64_t, uint64_t lo, uint64_t hi) {
    for (uint64_t i = lo; i < hi; ++i) {
      RngStream os = stream.substream({0xBEEF, i});
      Point x1(dim), x2(dim), y1(dim), y2(dim);
      for (int c = 0; c < dim; ++c) x1[c] = os.next_normal();
      for (int c = 0; c < dim; ++c) x2[c] = os.next_normal();
      for (int c = 0; c < dim; ++c) y1[c] = os.next_normal();
      for (int c = 0; c < dim; ++c) y2[c] = os.next_normal();

      auto bridge_to = [&](const Point& target, uint64_t tag) {
        Point end(dim);
        for (int c = 0; c < dim; ++c) end[c] = sqT * target[c] * is2;
        return bridge_functional(spec, beta, Point(dim, 0.0), end, T, opts.dt, opts.n_paths,
                                 os.substream(tag))
            .value;
      };
      Point d21(dim), d1y(dim), d2y(dim);
      for (int c = 0; c < dim; ++c) {
        d21[c] = x2[c] - x1[c];
        d2y[c] = x2[c] - y1[c];
        d1y[c] = x1[c] - y2[c];
      }
      double free_free =
          pair_functional(spec, beta, T, Point(dim, 0.0), opts.dt, opts.n_paths,
                          os.substream(1))
              .value;
      double h0T = free_free - bridge_to(d2y, 2) - bridge_to(d1y, 3) + bridge_to(d21, 4);
      double hTinf = kernel_H_T_inf(spec, beta, T, x1, x2, hsol).value;
      samples[i] = h0T * hTinf;
    }
  });
  double sum = 0.0, sum2 = 0.0;
  for (double s : samples) {
    sum += s;
    sum2 += s * s;
  }
  const auto dn = static_cast<double>(opts.n_pairs);
  Estimate est;
  est.value = sum / dn;
  est.n = opts.n_pairs;
  est.method = "mc";
  if (opts.n_pairs > 1) {
    double var = (sum2 / dn - est.value * est.value) * dn / (dn - 1.0);
    est.std_error = var > 0.0 ? std::sqrt(var / dn) : 0.0;
  }
  return est;
}

double gamma_squared(const KernelSpec& spec, double beta, const HBetaSolution& hsol) {
  if (beta == 0.0) return 0.0;
  if (!hsol.converged || hsol.beta != beta)
    throw Error(ErrorKind::invalid_parameter, kModule, "gamma_squared",
                "need a converged h_beta solution at this beta");
  const int dim = spec.dim();
  const double rmax = spec.r_support();
  const int m = 4096;
  const double h = rmax / m;
  // Midpoint rule; R is continuous for the bump profile and piecewise
  // constant in direct-R mode, where midpoints avoid the jump.
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    double r = (j + 0.5) * h;
    acc += std::pow(r, dim - 1) * spec.R_radial(r) * hsol.eval(r / std::sqrt(2.0));
  }
  return beta * beta * sphere_area(dim) * h * acc;
}

double c_infty(const KernelSpec& spec, double beta, const Point& xj, const Point& xj2,
               const HBetaSolution& hsol) {
  if (beta == 0.0) return 0.0;
  double g2 = gamma_squared(spec, beta, hsol);
  double d2 = 0.0;
  for (size_t c = 0; c < xj.size(); ++c) {
    double d = xj[c] - xj2[c];
    d2 += d * d;
  }
  // int_0^inf G_{2s+2} ds = (1/2) int_2^inf G_u du.
  return g2 * 0.5 * heat_tail_integral(spec.dim(), 2.0, std::sqrt(d2));
}

BetaBracket beta_L2_estimate(const KernelSpec& spec, double beta_lo, double beta_hi,
                             double tol, const FixedPointOptions& opts) {
  if (!(beta_lo >= 0.0) || !(beta_hi > beta_lo) || !(tol > 0.0))
    throw Error(ErrorKind::invalid_parameter, kModule, "beta_L2_estimate",
                "need 0 <= beta_lo < beta_hi and tol > 0");
  auto subcritical = [&](double beta) {
    return probe_fixed_point(spec, beta, opts) == FixedPointOutcome::converged;
  };
  if (!subcritical(beta_lo))
    throw Error(ErrorKind::invalid_bracket, kModule, "beta_L2_estimate",
                "fixed point does not converge at beta_lo");
  if (subcritical(beta_hi))
    throw Error(ErrorKind::invalid_bracket, kModule, "beta_L2_estimate",
                "fixed point converges at beta_hi; bracket does not contain beta_L2");
  BetaBracket br{beta_lo, beta_hi};
  while (br.hi - br.lo > tol) {
    double mid = 0.5 * (br.lo + br.hi);
    if (subcritical(mid))
      br.lo = mid;
    else
      br.hi = mid;
  }
  return br;
}

}  // namespace polymerlab
