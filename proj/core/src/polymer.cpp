#include "polymerlab/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "polymerlab/detail/parallel.hpp"

namespace polymerlab {

namespace {

constexpr const char* kModule = "polymer";
constexpr uint64_t kPathChunk = 64;
constexpr double kLogGuard = 700.0;

int64_t slots_of(double T, double dt, const char* op) {
  auto k = static_cast<int64_t>(std::llround(T / dt));
  if (k < 1 || std::fabs(k * dt - T) > 1e-9 * std::max(1.0, T))
    throw Error(ErrorKind::invalid_parameter, kModule, op, "dt must divide T");
  return k;
}

// Log-space accumulator: per chunk we keep (max, sum e^{l-max}, sum e^{2(l-max)})
// and merge chunks in index order, so totals are independent of thread count.
struct LogAccum {
  double m = -1e300;
  double a = 0.0;  // sum exp(l - m)
  double b = 0.0;  // sum exp(2(l - m))
  uint64_t zeros = 0;

  void add(double l) {
    if (l > kLogGuard)
      throw Error(ErrorKind::numerical_overflow, kModule, "partition_mc",
                  "weight overflow: beta too large for this grid step");
    if (l > m) {
      double s = std::exp(m - l);
      a = a * s + 1.0;
      b = b * s * s + 1.0;
      m = l;
    } else {
      double e = std::exp(l - m);
      a += e;
      b += e * e;
    }
  }
  void add_zero() { ++zeros; }
  void merge(const LogAccum& o) {
    if (o.a == 0.0) {
      zeros += o.zeros;
      return;
    }
    if (o.m > m) {
      double s = (a == 0.0) ? 0.0 : std::exp(m - o.m);
      a = a * s + o.a;
      b = b * s * s + o.b;
      m = o.m;
    } else {
      double s = std::exp(o.m - m);
      a += o.a * s;
      b += o.b * s * s;
    }
    zeros += o.zeros;
  }
  Estimate estimate(uint64_t n, const char* method) const {
    Estimate est;
    est.n = n;
    est.method = method;
    if (n == 0) return est;
    double mean = (a == 0.0) ? 0.0 : std::exp(m) * a / static_cast<double>(n);
    double mom2 = (a == 0.0) ? 0.0 : std::exp(2.0 * m) * b / static_cast<double>(n);
    est.value = mean;
    if (n > 1) {
      double var = (mom2 - mean * mean) * static_cast<double>(n) / static_cast<double>(n - 1);
      est.std_error = var > 0.0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
    }
    return est;
  }
};

}  // namespace

PathBundle sample_paths(const Point& start, double T, double dt, size_t n, PathKind kind,
                        RngStream stream, const Point& bridge_end, double restricted_radius) {
  const auto dim = static_cast<int>(start.size());
  if (dim < 1)
    throw Error(ErrorKind::invalid_parameter, kModule, "sample_paths", "empty start point");
  if (T <= 0.0 || dt <= 0.0 || n < 1)
    throw Error(ErrorKind::invalid_parameter, kModule, "sample_paths",
                "need T > 0, dt > 0, n >= 1");
  const auto K = static_cast<size_t>(slots_of(T, dt, "sample_paths"));
  if (kind == PathKind::bridge && bridge_end.size() != start.size())
    throw Error(ErrorKind::invalid_parameter, kModule, "sample_paths",
                "bridge endpoint dimension mismatch");
  if (kind == PathKind::restricted && restricted_radius <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "sample_paths",
                "restricted radius must be > 0");

  PathBundle bundle;
  bundle.dim = dim;
  bundle.dt = dt;
  bundle.T = T;
  bundle.start = start;
  bundle.kind = kind;
  bundle.bridge_end = bridge_end;
  bundle.restricted_radius = restricted_radius;
  bundle.n_paths = n;
  bundle.n_steps = K;
  bundle.traj.resize(n * (K + 1) * static_cast<size_t>(dim));

  const double sdt = std::sqrt(dt);
  std::vector<double> free_path((K + 1) * static_cast<size_t>(dim));
  uint64_t attempts = 0;
  for (size_t p = 0; p < n;) {
    RngStream ps = stream.substream({0xA11CE, attempts});
    ++attempts;
    for (int c = 0; c < dim; ++c) free_path[c] = 0.0;
    for (size_t k = 1; k <= K; ++k)
      for (int c = 0; c < dim; ++c)
        free_path[k * dim + c] = free_path[(k - 1) * dim + c] + sdt * ps.next_normal();

    double* out = bundle.traj.data() + p * (K + 1) * static_cast<size_t>(dim);
    bool accept = true;
    switch (kind) {
      case PathKind::free_motion:
        for (size_t k = 0; k <= K; ++k)
          for (int c = 0; c < dim; ++c) out[k * dim + c] = start[c] + free_path[k * dim + c];
        break;
      case PathKind::bridge: {
        // a + B(u) - (u/T)(B(T) - (b - a)); the endpoint is pinned exactly.
        const double* BT = free_path.data() + K * dim;
        for (size_t k = 0; k <= K; ++k) {
          double u = static_cast<double>(k) / static_cast<double>(K);
          for (int c = 0; c < dim; ++c)
            out[k * dim + c] =
                start[c] + free_path[k * dim + c] - u * (BT[c] - (bridge_end[c] - start[c]));
        }
        for (int c = 0; c < dim; ++c) out[K * dim + c] = bridge_end[c];
        break;
      }
      case PathKind::restricted: {
        double rho2 = restricted_radius * restricted_radius;
        for (size_t k = 0; k <= K && accept; ++k) {
          double r2 = 0.0;
          for (int c = 0; c < dim; ++c) {
            double d = free_path[k * dim + c];
            r2 += d * d;
          }
          if (r2 > rho2) accept = false;
        }
        if (accept)
          for (size_t k = 0; k <= K; ++k)
            for (int c = 0; c < dim; ++c) out[k * dim + c] = start[c] + free_path[k * dim + c];
        break;
      }
    }
    if (accept) ++p;
  }
  bundle.attempted = attempts;
  return bundle;
}

namespace {

// Streams one trajectory slot by slot, accumulating the line integral up to
// each requested horizon. `horizons` are slot counts in increasing order.
template <typename OnHorizon>
void stream_path(const KernelSpec& spec, const NoiseView& view, PointView x, double dt,
                 std::span<const int64_t> horizons, RngStream& ps, CellSet* touched,
                 double safe_radius, OnHorizon&& on_horizon) {
  const int dim = static_cast<int>(x.size());
  double pos[3] = {0.0, 0.0, 0.0};
  for (int c = 0; c < dim; ++c) pos[c] = x[c];
  const double sdt = std::sqrt(dt);
  LineAccumulator acc;
  int64_t slot = 0;
  for (size_t h = 0; h < horizons.size(); ++h) {
    for (; slot < horizons[h]; ++slot) {
      for (int c = 0; c < dim; ++c)
        if (std::fabs(pos[c]) > safe_radius)
          throw Error(ErrorKind::path_escape, kModule, "partition_mc",
                      "trajectory left the safe region of the noise box");
      accumulate_slot(view, spec, pos, slot, acc, touched);
      for (int c = 0; c < dim; ++c) pos[c] += sdt * ps.next_normal();
    }
    on_horizon(h, acc);
  }
}

}  // namespace

Estimate partition_mc(const KernelSpec& spec, const NoiseView& view, double beta, double T,
                      PointView x, size_t n_paths, const RngStream& stream, CellSet* touched) {
  if (beta < 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "partition_mc", "beta must be >= 0");
  if (n_paths < 1)
    throw Error(ErrorKind::invalid_parameter, kModule, "partition_mc", "need paths");
  const double dt = view.box().dt();
  const int64_t K = slots_of(T, dt, "partition_mc");
  if (beta == 0.0) return Estimate{1.0, 0.0, n_paths, "mc", {}};

  const double safe = view.box().spatial_radius() - spec.support_radius();
  const int64_t horizons[1] = {K};
  std::vector<LogAccum> chunks((n_paths + kPathChunk - 1) / kPathChunk);
  std::mutex touched_mu;
  detail::parallel_chunks(n_paths, kPathChunk, [&](uint64_t ci, uint64_t lo, uint64_t hi) {
    LogAccum acc;
    CellSet local_touched;
    CellSet* rec = touched ? &local_touched : nullptr;
    for (uint64_t p = lo; p < hi; ++p) {
      RngStream ps = stream.substream({0xF00D, p});
      stream_path(spec, view, x, dt, horizons, ps, rec, safe,
                  [&](size_t, const LineAccumulator& li) {
                    acc.add(beta * li.S - 0.5 * beta * beta * li.V);
                  });
    }
    chunks[ci] = acc;
    if (touched) {
      std::lock_guard<std::mutex> lock(touched_mu);
      touched->insert(local_touched.begin(), local_touched.end());
    }
  });
  LogAccum total;
  for (const auto& c : chunks) total.merge(c);
  return total.estimate(n_paths, "mc");
}

Estimate partition_mc_bundle(const KernelSpec& spec, const NoiseView& view, double beta,
                             const PathBundle& paths) {
  if (beta < 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "partition_mc", "beta must be >= 0");
  const double dt = view.box().dt();
  if (std::fabs(paths.dt - dt) > 1e-12)
    throw Error(ErrorKind::invalid_parameter, kModule, "partition_mc",
                "bundle dt must match the noise grid");
  if (beta == 0.0) return Estimate{1.0, 0.0, paths.n_paths, "mc", {}};
  LogAccum acc;
  for (size_t p = 0; p < paths.n_paths; ++p) {
    auto li = mollified_line_integral(
        view, spec,
        std::span<const double>(paths.position(p, 0),
                                paths.n_steps * static_cast<size_t>(paths.dim)),
        paths.dim, 0, static_cast<int64_t>(paths.n_steps));
    acc.add(beta * li.S - 0.5 * beta * beta * li.V);
  }
  return acc.estimate(paths.n_paths, "mc");
}

CoupledPartition partition_mc_coupled(const KernelSpec& spec, const NoiseView& view,
                                      double beta, double T_short, double T_long, PointView x,
                                      size_t n_paths, const RngStream& stream) {
  if (T_short > T_long)
    throw Error(ErrorKind::invalid_parameter, kModule, "partition_mc_coupled",
                "T_short must be <= T_long");
  const double dt = view.box().dt();
  const int64_t Ks = slots_of(T_short, dt, "partition_mc_coupled");
  const int64_t Kl = slots_of(T_long, dt, "partition_mc_coupled");
  CoupledPartition out;
  if (beta == 0.0) {
    out.z_short = {1.0, 0.0, n_paths, "mc", {}};
    out.z_long = {1.0, 0.0, n_paths, "mc", {}};
    out.difference = {0.0, 0.0, n_paths, "mc", {}};
    return out;
  }
  const double safe = view.box().spatial_radius() - spec.support_radius();
  const int64_t horizons[2] = {Ks, Kl};

  struct ChunkAccum {
    LogAccum zs, zl;
    double dsum = 0.0, dsum2 = 0.0;
  };
  std::vector<ChunkAccum> chunks((n_paths + kPathChunk - 1) / kPathChunk);
  detail::parallel_chunks(n_paths, kPathChunk, [&](uint64_t ci, uint64_t lo, uint64_t hi) {
    ChunkAccum acc;
    for (uint64_t p = lo; p < hi; ++p) {
      RngStream ps = stream.substream({0xF00D, p});
      double lw_short = 0.0;
      stream_path(spec, view, x, dt, horizons, ps, nullptr, safe,
                  [&](size_t h, const LineAccumulator& li) {
                    double lw = beta * li.S - 0.5 * beta * beta * li.V;
                    if (h == 0) {
                      lw_short = lw;
                      acc.zs.add(lw);
                    } else {
                      acc.zl.add(lw);
                      double d = (Ks == Kl) ? 0.0 : std::exp(lw) - std::exp(lw_short);
                      acc.dsum += d;
                      acc.dsum2 += d * d;
                    }
                  });
    }
    chunks[ci] = acc;
  });
  LogAccum zs, zl;
  double dsum = 0.0, dsum2 = 0.0;
  for (const auto& c : chunks) {
    zs.merge(c.zs);
    zl.merge(c.zl);
    dsum += c.dsum;
    dsum2 += c.dsum2;
  }
  out.z_short = zs.estimate(n_paths, "mc");
  out.z_long = zl.estimate(n_paths, "mc");
  const auto dn = static_cast<double>(n_paths);
  out.difference.n = n_paths;
  out.difference.method = "mc";
  out.difference.value = dsum / dn;
  if (n_paths > 1) {
    double var = (dsum2 / dn - out.difference.value * out.difference.value) * dn / (dn - 1.0);
    out.difference.std_error = var > 0.0 ? std::sqrt(var / dn) : 0.0;
  }
  return out;
}

Estimate restricted_partition_mc(const KernelSpec& spec, const NoiseView& view, double beta,
                                 double tau, PointView x, double rho, size_t n_paths,
                                 const RngStream& stream, CellSet* touched) {
  if (rho <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "restricted_partition_mc",
                "rho must be > 0");
  if (beta < 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "restricted_partition_mc",
                "beta must be >= 0");
  const double dt = view.box().dt();
  const int64_t K = slots_of(tau, dt, "restricted_partition_mc");
  const double safe = view.box().spatial_radius() - spec.support_radius();
  const int dim = static_cast<int>(x.size());
  const double sdt = std::sqrt(dt);
  const double rho2 = rho * rho;

  std::vector<LogAccum> chunks((n_paths + kPathChunk - 1) / kPathChunk);
  std::mutex touched_mu;
  detail::parallel_chunks(n_paths, kPathChunk, [&](uint64_t ci, uint64_t lo, uint64_t hi) {
    LogAccum acc;
    CellSet local_touched;
    CellSet* rec = touched ? &local_touched : nullptr;
    for (uint64_t p = lo; p < hi; ++p) {
      RngStream ps = stream.substream({0xF00D, p});
      double pos[3] = {0.0, 0.0, 0.0};
      for (int c = 0; c < dim; ++c) pos[c] = x[c];
      LineAccumulator li;
      bool alive = true;
      for (int64_t k = 0; k < K && alive; ++k) {
        double r2 = 0.0;
        for (int c = 0; c < dim; ++c) {
          double d = pos[c] - x[c];
          r2 += d * d;
        }
        if (r2 > rho2) {
          alive = false;
          break;
        }
        for (int c = 0; c < dim; ++c)
          if (std::fabs(pos[c]) > safe)
            throw Error(ErrorKind::path_escape, kModule, "restricted_partition_mc",
                        "trajectory left the safe region of the noise box");
        if (beta != 0.0) accumulate_slot(view, spec, pos, k, li, rec);
        for (int c = 0; c < dim; ++c) pos[c] += sdt * ps.next_normal();
      }
      if (alive) {
        // Final-position check so the constraint covers all K+1 grid points.
        double r2 = 0.0;
        for (int c = 0; c < dim; ++c) {
          double d = pos[c] - x[c];
          r2 += d * d;
        }
        if (r2 > rho2) alive = false;
      }
      if (alive)
        acc.add(beta * li.S - 0.5 * beta * beta * li.V);
      else
        acc.add_zero();
    }
    chunks[ci] = acc;
    if (touched) {
      std::lock_guard<std::mutex> lock(touched_mu);
      touched->insert(local_touched.begin(), local_touched.end());
    }
  });
  LogAccum total;
  for (const auto& c : chunks) total.merge(c);
  return total.estimate(n_paths, "mc");
}

NoiseBox auto_box(uint64_t seed, int dim, double dx, double dt,
                  const std::vector<Point>& starts, double horizon, double r_phi,
                  double margin_sigmas) {
  double reach = 0.0;
  for (const auto& s : starts)
    for (double c : s) reach = std::max(reach, std::fabs(c));
  double radius = reach + margin_sigmas * std::sqrt(horizon) + r_phi + dx;
  return NoiseBox(seed, dim, dx, dt, radius, horizon);
}

}  // namespace polymerlab
