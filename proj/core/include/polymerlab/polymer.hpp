#ifndef POLYMERLAB_POLYMER_HPP
#define POLYMERLAB_POLYMER_HPP

#include <string>
#include <vector>

#include "polymerlab/common.hpp"
#include "polymerlab/noise.hpp"
#include "polymerlab/stats.hpp"

namespace polymerlab {

/// A Monte-Carlo or quadrature result. std_error is the sample standard error
/// for MC methods and 0 for deterministic ones.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  uint64_t n = 0;
  std::string method = "mc";
  std::vector<std::string> notes;
};

enum class PathKind { free_motion, bridge, restricted };

/// Discretized Brownian trajectories on a shared uniform time grid.
/// Positions are stored at t_k = k dt for k = 0..n_steps.
struct PathBundle {
  int dim = 3;
  double dt = 0.0;
  double T = 0.0;
  Point start;
  PathKind kind = PathKind::free_motion;
  Point bridge_end;
  double restricted_radius = 0.0;
  size_t n_paths = 0;
  size_t n_steps = 0;
  uint64_t attempted = 0;  // total tries, for restricted acceptance fraction
  std::vector<double> traj;

  const double* position(size_t path, size_t step) const {
    return traj.data() + (path * (n_steps + 1) + step) * static_cast<size_t>(dim);
  }
  double acceptance_fraction() const {
    return attempted ? static_cast<double>(n_paths) / static_cast<double>(attempted) : 1.0;
  }
};

/// Samples free Brownian paths, bridges pinned at `bridge_end`, or paths
/// conditioned on sup_k |w(t_k) - w(0)| <= radius (rejection sampling).
PathBundle sample_paths(const Point& start, double T, double dt, size_t n, PathKind kind,
                        RngStream stream, const Point& bridge_end = {},
                        double restricted_radius = 0.0);

/// Renormalized partition function estimate at inverse temperature beta:
/// mean over paths of exp(beta S - beta^2 V / 2) where (S, V) is the discrete
/// mollified line integral and its exact noise variance along the path. The
/// V-renormalization makes the noise average exactly one per path at any grid
/// resolution (it converges to R(0) T as dx, dt -> 0). beta = 0 returns
/// exactly 1 with zero error. Paths advance one noise slot per step.
Estimate partition_mc(const KernelSpec& spec, const NoiseView& view, double beta, double T,
                      PointView x, size_t n_paths, const RngStream& stream,
                      CellSet* touched = nullptr);

/// Same estimator on a precomputed bundle (dt must match the noise grid).
Estimate partition_mc_bundle(const KernelSpec& spec, const NoiseView& view, double beta,
                             const PathBundle& paths);

struct CoupledPartition {
  Estimate z_short;
  Estimate z_long;
  /// Pathwise difference w(T_long) - w(T_short); exactly 0 when the horizons
  /// coincide, centered over the noise otherwise.
  Estimate difference;
};

/// Evaluates Z at two horizons on the same trajectories and the same noise,
/// realizing the martingale increment Z_{T_long} - Z_{T_short}.
CoupledPartition partition_mc_coupled(const KernelSpec& spec, const NoiseView& view,
                                      double beta, double T_short, double T_long, PointView x,
                                      size_t n_paths, const RngStream& stream);

/// Partition estimate in which trajectories violating
/// sup_k |B(t_k) - x| <= rho contribute zero weight. A path stops touching
/// the noise at its first violation (its weight is already zero).
Estimate restricted_partition_mc(const KernelSpec& spec, const NoiseView& view, double beta,
                                 double tau, PointView x, double rho, size_t n_paths,
                                 const RngStream& stream, CellSet* touched = nullptr);

/// Noise box sized to cover the given start points plus margin_sigmas * sqrt(T)
/// of Brownian spread plus the mollifier radius. Paths escaping it raise
/// errors rather than being reflected.
NoiseBox auto_box(uint64_t seed, int dim, double dx, double dt,
                  const std::vector<Point>& starts, double horizon, double r_phi,
                  double margin_sigmas = 6.0);

}  // namespace polymerlab

#endif
