#ifndef POLYMERLAB_NOISE_HPP
#define POLYMERLAB_NOISE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "polymerlab/common.hpp"
#include "polymerlab/mollifier.hpp"

namespace polymerlab {

/// Identifies one space-time cell of the discretized noise: integer lattice
/// point (first 3 coordinates) and time slot. Dimensions above 3 fold the
/// extra coordinates into the lattice hash (only d=3 is exercised at scale).
struct CellKey {
  int32_t ix = 0, iy = 0, iz = 0;
  int32_t slot = 0;

  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  size_t operator()(const CellKey& c) const {
    uint64_t a = (static_cast<uint64_t>(static_cast<uint32_t>(c.ix)) << 32) |
                 static_cast<uint32_t>(c.iy);
    uint64_t b = (static_cast<uint64_t>(static_cast<uint32_t>(c.iz)) << 32) |
                 static_cast<uint32_t>(c.slot);
    a *= 0x9E3779B97F4A7C15ull;
    a ^= a >> 29;
    return static_cast<size_t>(a ^ (b * 0xBF58476D1CE4E5B9ull));
  }
};

using CellSet = std::unordered_set<CellKey, CellKeyHash>;

/// Test hook: deterministic override of selected cells. With
/// `zero_background` every unlisted cell reads 0 instead of its Gaussian
/// value, which makes linearity and forcing tests exact.
struct ForcedCells {
  std::unordered_map<CellKey, double, CellKeyHash> values;
  bool zero_background = false;
};

/// A virtual space-time white noise on a box: nothing is stored, the Gaussian
/// increment of a cell is a pure function of (seed, cell index), so any worker
/// may evaluate any cell concurrently and re-query it bit-identically.
/// Cell increments have variance dx^d * dt.
class NoiseBox {
 public:
  NoiseBox(uint64_t seed, int dim, double dx, double dt, double spatial_radius,
           double horizon);

  uint64_t seed() const { return seed_; }
  int dim() const { return dim_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }
  double spatial_radius() const { return spatial_radius_; }
  double horizon() const { return horizon_; }
  int64_t n_slots() const { return n_slots_; }
  double cell_std() const { return cell_std_; }

  void set_forced(std::shared_ptr<const ForcedCells> forced) { forced_ = std::move(forced); }
  const ForcedCells* forced() const { return forced_.get(); }

  bool in_box(const CellKey& c) const;

  /// Raw increment of a cell (variance dx^d dt), bit-identical per (seed, cell).
  double increment(const CellKey& c) const;

 private:
  uint64_t seed_;
  int dim_;
  double dx_, dt_;
  double spatial_radius_, horizon_;
  int64_t n_slots_;
  int32_t max_index_;
  double cell_std_;
  std::shared_ptr<const ForcedCells> forced_;
};

/// A time-shifted (and optionally time-reversed) window onto a NoiseBox.
/// Views never mutate the base; composing shifts adds them. The reversal map
/// realizes the index part of the diffusively rescaled, reversed noise; the
/// estimators themselves only require shift views since the white-noise law
/// is invariant under both operations.
class NoiseView {
 public:
  explicit NoiseView(std::shared_ptr<const NoiseBox> base, int64_t shift_slots = 0)
      : base_(std::move(base)), shift_(shift_slots) {}

  const NoiseBox& box() const { return *base_; }
  int64_t shift_slots() const { return shift_; }
  bool reversed() const { return reversed_; }

  NoiseView shifted(int64_t extra_slots) const {
    NoiseView v(*this);
    v.shift_ += extra_slots;
    return v;
  }
  /// Reversal about slot `pivot` (view slot s maps to base slot pivot - s).
  NoiseView time_reversed(int64_t pivot) const {
    NoiseView v(*this);
    v.reversed_ = !v.reversed_;
    v.pivot_ = pivot;
    return v;
  }

  /// View slot -> base slot.
  int64_t map_slot(int64_t s) const {
    int64_t t = reversed_ ? pivot_ - s : s;
    return t + shift_;
  }

 private:
  std::shared_ptr<const NoiseBox> base_;
  int64_t shift_ = 0;
  bool reversed_ = false;
  int64_t pivot_ = 0;
};

/// Increment of a view cell; throws out_of_domain if the mapped cell leaves
/// the base box (never silently zero).
double noise_increment(const NoiseView& view, const CellKey& cell);

/// One time slot of the discrete mollified line integral: accumulates
///   S += sum_c phi(pos - y_c) eta_c      (the noise term)
///   V += sum_c phi(pos - y_c)^2 dx^d dt  (its exact conditional variance)
/// over the cells within the mollifier support of `pos`. The exact V is what
/// the polymer weight uses for renormalization, keeping E_xi[weight] = 1 for
/// every path at any grid resolution.
struct LineAccumulator {
  double S = 0.0;
  double V = 0.0;
};

void accumulate_slot(const NoiseView& view, const KernelSpec& spec, const double* pos,
                     int64_t slot, LineAccumulator& acc, CellSet* touched = nullptr);

/// Discrete line integral of the mollified noise along one trajectory given
/// at the slot times {0, dt, 2dt, ...} (left endpoints). Returns (S, V).
/// Throws path_escape if the path leaves the safe region of the box.
LineAccumulator mollified_line_integral(const NoiseView& view, const KernelSpec& spec,
                                        std::span<const double> positions, int dim,
                                        int64_t first_slot, int64_t n_slots,
                                        CellSet* touched = nullptr);

/// Grid-level correlation of two points: sum_c dx^d phi(u - y_c) phi(v - y_c),
/// the covariance density the discrete noise induces (tends to R(u - v)).
double discrete_R(const NoiseBox& box, const KernelSpec& spec, PointView u, PointView v);

}  // namespace polymerlab

#endif
