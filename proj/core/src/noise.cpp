#include "polymerlab/noise.hpp"

#include <cmath>

#include "polymerlab/detail/philox.hpp"

namespace polymerlab {

namespace {

constexpr const char* kModule = "noise";
// Domain separation between the noise field and path-sampling streams.
constexpr uint64_t kNoiseTag = 0xC0FFEE0DDBA11ull;

inline double raw_gaussian(uint64_t seed, const CellKey& c) {
  return detail::standard_normal_from(
      seed ^ kNoiseTag,
      {static_cast<uint32_t>(c.ix), static_cast<uint32_t>(c.iy),
       static_cast<uint32_t>(c.iz), static_cast<uint32_t>(c.slot)});
}

inline double overlay_value(const ForcedCells* forced, uint64_t seed, const CellKey& c,
                            double cell_std) {
  if (forced) {
    auto it = forced->values.find(c);
    if (it != forced->values.end()) return it->second;
    if (forced->zero_background) return 0.0;
  }
  return cell_std * raw_gaussian(seed, c);
}

}  // namespace

NoiseBox::NoiseBox(uint64_t seed, int dim, double dx, double dt, double spatial_radius,
                   double horizon)
    : seed_(seed), dim_(dim), dx_(dx), dt_(dt), spatial_radius_(spatial_radius),
      horizon_(horizon) {
  if (dim < 1 || dim > 3)
    throw Error(ErrorKind::invalid_parameter, kModule, "NoiseBox",
                "lattice dimension must be 1..3");
  if (dx <= 0.0 || dt <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "NoiseBox", "dx and dt must be > 0");
  if (spatial_radius <= 0.0 || horizon <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "NoiseBox",
                "box extent must be positive");
  n_slots_ = static_cast<int64_t>(std::llround(horizon / dt));
  if (n_slots_ < 1)
    throw Error(ErrorKind::invalid_parameter, kModule, "NoiseBox", "horizon shorter than dt");
  max_index_ = static_cast<int32_t>(std::floor(spatial_radius / dx)) + 1;
  cell_std_ = std::sqrt(std::pow(dx, dim) * dt);
}

bool NoiseBox::in_box(const CellKey& c) const {
  if (c.slot < 0 || c.slot >= n_slots_) return false;
  auto ok = [&](int32_t i) { return i >= -max_index_ && i <= max_index_; };
  return ok(c.ix) && ok(c.iy) && ok(c.iz);
}

double NoiseBox::increment(const CellKey& c) const {
  if (!in_box(c))
    throw Error(ErrorKind::out_of_domain, kModule, "noise_increment",
                "cell outside the noise box");
  return overlay_value(forced_.get(), seed_, c, cell_std_);
}

double noise_increment(const NoiseView& view, const CellKey& cell) {
  int64_t mapped = view.map_slot(cell.slot);
  if (mapped < 0 || mapped > INT32_MAX)
    throw Error(ErrorKind::out_of_domain, kModule, "noise_increment",
                "mapped slot outside the noise box");
  CellKey base = cell;
  base.slot = static_cast<int32_t>(mapped);
  return view.box().increment(base);
}

void accumulate_slot(const NoiseView& view, const KernelSpec& spec, const double* pos,
                     int64_t slot, LineAccumulator& acc, CellSet* touched) {
  const NoiseBox& box = view.box();
  int64_t mapped = view.map_slot(slot);
  if (mapped < 0 || mapped >= box.n_slots())
    throw Error(ErrorKind::out_of_domain, kModule, "mollified_line_integral",
                "time slot outside the noise box");
  const auto slot32 = static_cast<int32_t>(mapped);
  const int dim = box.dim();
  const double dx = box.dx();
  const double inv_dx = 1.0 / dx;
  const double rphi = spec.support_radius();
  const double r2max = rphi * rphi;
  const double cell_var = box.cell_std() * box.cell_std();
  const double cell_std = box.cell_std();
  const ForcedCells* forced = box.forced();
  const uint64_t seed = box.seed();

  if (dim == 3) {
    const double x = pos[0], y = pos[1], z = pos[2];
    const auto kzlo = static_cast<int32_t>(std::ceil((z - rphi) * inv_dx));
    const auto kzhi = static_cast<int32_t>(std::floor((z + rphi) * inv_dx));
    for (int32_t kz = kzlo; kz <= kzhi; ++kz) {
      const double dz = kz * dx - z;
      const double rem2 = r2max - dz * dz;
      if (rem2 <= 0.0) continue;
      const double sy = std::sqrt(rem2);
      const auto kylo = static_cast<int32_t>(std::ceil((y - sy) * inv_dx));
      const auto kyhi = static_cast<int32_t>(std::floor((y + sy) * inv_dx));
      for (int32_t ky = kylo; ky <= kyhi; ++ky) {
        const double dy = ky * dx - y;
        const double rem1 = rem2 - dy * dy;
        if (rem1 <= 0.0) continue;
        const double sx = std::sqrt(rem1);
        const auto kxlo = static_cast<int32_t>(std::ceil((x - sx) * inv_dx));
        const auto kxhi = static_cast<int32_t>(std::floor((x + sx) * inv_dx));
        const double dyz2 = dz * dz + dy * dy;
        for (int32_t kx = kxlo; kx <= kxhi; ++kx) {
          const double ddx = kx * dx - x;
          const double r2 = dyz2 + ddx * ddx;
          const double w = spec.phi_radial_sq(r2);
          if (w == 0.0) continue;
          CellKey key{kx, ky, kz, slot32};
          double eta;
          if (forced) [[unlikely]] {
            eta = overlay_value(forced, seed, key, cell_std);
          } else {
            eta = cell_std * raw_gaussian(seed, key);
          }
          acc.S += w * eta;
          acc.V += w * w * cell_var;
          if (touched) [[unlikely]]
            touched->insert(key);
        }
      }
    }
    return;
  }

  // Generic low-dimensional fallback (d < 3): iterate the bounding box.
  int32_t lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int k = 0; k < dim; ++k) {
    lo[k] = static_cast<int32_t>(std::ceil((pos[k] - rphi) * inv_dx));
    hi[k] = static_cast<int32_t>(std::floor((pos[k] + rphi) * inv_dx));
  }
  for (int32_t i = lo[0]; i <= hi[0]; ++i) {
    for (int32_t j = lo[1]; j <= hi[1]; ++j) {
      double r2 = 0.0;
      double di = i * dx - pos[0];
      r2 += di * di;
      if (dim >= 2) {
        double dj = j * dx - pos[1];
        r2 += dj * dj;
      }
      if (r2 >= r2max) continue;
      double w = spec.phi_radial_sq(r2);
      if (w == 0.0) continue;
      CellKey key{i, dim >= 2 ? j : 0, 0, slot32};
      double eta = overlay_value(forced, seed, key, cell_std);
      acc.S += w * eta;
      acc.V += w * w * cell_var;
      if (touched) touched->insert(key);
      if (dim < 2) break;
    }
  }
}

LineAccumulator mollified_line_integral(const NoiseView& view, const KernelSpec& spec,
                                        std::span<const double> positions, int dim,
                                        int64_t first_slot, int64_t n_slots,
                                        CellSet* touched) {
  if (!spec.has_phi())
    throw Error(ErrorKind::unsupported_mode, kModule, "mollified_line_integral",
                "direct-R kernel cannot mollify the noise");
  if (positions.size() < static_cast<size_t>(n_slots) * static_cast<size_t>(dim))
    throw Error(ErrorKind::invalid_parameter, kModule, "mollified_line_integral",
                "position buffer shorter than slot count");
  const NoiseBox& box = view.box();
  const double safe = box.spatial_radius() - spec.support_radius();
  LineAccumulator acc;
  for (int64_t k = 0; k < n_slots; ++k) {
    const double* pos = positions.data() + k * dim;
    for (int c = 0; c < dim; ++c) {
      if (std::fabs(pos[c]) > safe)
        throw Error(ErrorKind::path_escape, kModule, "mollified_line_integral",
                    "trajectory left the safe region of the noise box");
    }
    accumulate_slot(view, spec, pos, first_slot + k, acc, touched);
  }
  return acc;
}

double discrete_R(const NoiseBox& box, const KernelSpec& spec, PointView u, PointView v) {
  const int dim = box.dim();
  const double dx = box.dx();
  const double rphi = spec.support_radius();
  double lo[3], hi[3];
  for (int k = 0; k < dim; ++k) {
    lo[k] = std::min(u[k], v[k]) - rphi;
    hi[k] = std::max(u[k], v[k]) + rphi;
  }
  double sum = 0.0;
  const double cell_measure = std::pow(dx, dim);
  auto phi_of = [&](PointView p, const double* y) {
    double r2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      double d = p[k] - y[k];
      r2 += d * d;
    }
    return spec.phi_radial_sq(r2);
  };
  if (dim == 3) {
    for (auto i = static_cast<int64_t>(std::ceil(lo[0] / dx));
         i <= static_cast<int64_t>(std::floor(hi[0] / dx)); ++i)
      for (auto j = static_cast<int64_t>(std::ceil(lo[1] / dx));
           j <= static_cast<int64_t>(std::floor(hi[1] / dx)); ++j)
        for (auto k = static_cast<int64_t>(std::ceil(lo[2] / dx));
             k <= static_cast<int64_t>(std::floor(hi[2] / dx)); ++k) {
          double y[3] = {i * dx, j * dx, k * dx};
          double a = phi_of(u, y);
          if (a == 0.0) continue;
          double b = phi_of(v, y);
          if (b == 0.0) continue;
          sum += a * b;
        }
  } else {
    throw Error(ErrorKind::invalid_parameter, kModule, "discrete_R",
                "only implemented for d = 3");
  }
  return sum * cell_measure;
}

}  // namespace polymerlab
