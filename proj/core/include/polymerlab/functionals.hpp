#ifndef POLYMERLAB_FUNCTIONALS_HPP
#define POLYMERLAB_FUNCTIONALS_HPP

#include <vector>

#include "polymerlab/mollifier.hpp"
#include "polymerlab/polymer.hpp"

namespace polymerlab {

/// Solution of the radial fixed-point equation
///   h(y) = 1 + beta^2 int G0(y - x) R(sqrt2 x) h(x) dx,
/// reduced to one dimension through the exact sphere average of the Yukawa
/// kernel, max(|y|, |x|)^{2-d}. Outside the support of R(sqrt2 .) the
/// solution is exactly 1 + chi_d tail_coeff r^{2-d}.
struct HBetaSolution {
  int dim = 3;
  double beta = 0.0;
  bool converged = false;
  uint64_t iterations = 0;
  double residual = 0.0;
  /// beta^2 int R(sqrt2 x) h(x) dx; the tail and kernel-limit constant.
  double tail_coeff = 0.0;
  /// Support radius of R(sqrt2 .): values beyond follow the exact tail law.
  double r_active = 0.0;
  std::vector<double> radii;   // output grid on [0, r_max]
  std::vector<double> values;  // h at the output grid

  double eval(double r) const;
  double at_origin() const { return values.empty() ? 1.0 : values.front(); }
};

struct FixedPointOptions {
  int m = 1024;                  // quadrature nodes on the active interval
  double r_max = 8.0;            // extent of the exported radial grid
  int out_points = 1024;         // exported grid resolution
  double tol = 1e-8;             // sup-norm update tolerance
  uint64_t n_max = 10000;        // iteration cap
  double divergence_cap = 1e8;   // sup value that declares divergence
};

/// Iterates h <- 1 + K_beta h from h = 1. Throws supercritical_beta when the
/// iteration diverges (value cap exceeded or updates still growing at the
/// cap); that throw is the computational detector of beta >= beta_L2.
HBetaSolution h_beta_fixed_point(const KernelSpec& spec, double beta,
                                 const FixedPointOptions& opts = {});

/// MC estimate of h_beta(z) = E_z[exp(beta^2 int_0^inf R(sqrt2 B))], with the
/// infinite horizon truncated at H. Attaches a horizon-too-small note when
/// the tail of the running integral is still contributing.
Estimate h_beta_mc(const KernelSpec& spec, double beta, PointView z, double horizon,
                   double dt, size_t n, const RngStream& stream);

/// E_{z/sqrt2}[exp(beta^2 int_0^T R(sqrt2 B))] for a pair separation z: the
/// second moment of a polymer pair started z apart. Path-for-path identical
/// to h_beta_mc at z = 0 under a shared stream.
Estimate pair_functional(const KernelSpec& spec, double beta, double T, PointView z_sep,
                         double dt, size_t n, const RngStream& stream);

/// Brownian-bridge exponential functional A_beta(a, b, T), sampled through
/// the bridge representation a + B(u) - (u/T)(B(T) - (b - a)).
Estimate bridge_functional(const KernelSpec& spec, double beta, const Point& a,
                           const Point& b, double T, double dt, size_t n,
                           const RngStream& stream);

/// k-th term of the series h = sum_k K_beta^k 1 by nested radial quadrature.
/// k is capped at 3.
double h_series_term(const KernelSpec& spec, double beta, int k, double z_radius,
                     int m = 2048);

struct KernelEval {
  double T = 0.0;
  Point x1, x2;
  double value = 0.0;  // H_{beta;(T,inf)}(x1, x2)
};

/// H_{beta;(T,inf)}(x1,x2) = T^{(d-2)/2} (h_beta(sqrt(T) (x2-x1)/sqrt2) - 1).
KernelEval kernel_H_T_inf(const KernelSpec& spec, double beta, double T, const Point& x1,
                          const Point& x2, const HBetaSolution& hsol);

/// The limit of the above as T -> inf:
///   G0((x2-x1)/sqrt2) * beta^2 int R(sqrt2 x) h(x) dx.
double kernel_H_T_inf_limit(const KernelSpec& spec, const Point& x1, const Point& x2,
                            const HBetaSolution& hsol);

struct L2ErrorOptions {
  size_t n_pairs = 256;    // outer samples of (x1, x2, y1, y2) ~ G1
  size_t n_paths = 512;    // bridge paths per inner estimate
  double dt = 0.02;
};

/// Exact squared L2 error of the asymptotic decomposition at horizon split T:
///   int G1(x1) G1(x2) H_{beta;(0,T)} H_{beta;(T,inf)} dx1 dx2,
/// with the x-integrals Monte Carlo over Gaussian pairs, H_{(0,T)} assembled
/// from four bridge/free exponential functionals and H_{(T,inf)} from the
/// fixed-point solution.
Estimate l2_error_formula(const KernelSpec& spec, double beta, double T,
                          const HBetaSolution& hsol, const L2ErrorOptions& opts,
                          const RngStream& stream);

/// gamma(beta)^2 = beta^2 int R(x) h_beta(x / sqrt2) dx by radial quadrature.
double gamma_squared(const KernelSpec& spec, double beta, const HBetaSolution& hsol);

/// C_inf(j,j') = gamma^2 int_0^inf G_{2s+2}(x_j - x_j') ds.
double c_infty(const KernelSpec& spec, double beta, const Point& xj, const Point& xj2,
               const HBetaSolution& hsol);

struct BetaBracket {
  double lo = 0.0;
  double hi = 0.0;
};

/// Bisection on the convergence/divergence of the fixed point. Requires the
/// fixed point to converge at lo and diverge at hi, else invalid_bracket.
BetaBracket beta_L2_estimate(const KernelSpec& spec, double beta_lo, double beta_hi,
                             double tol, const FixedPointOptions& opts = {});

}  // namespace polymerlab

#endif
