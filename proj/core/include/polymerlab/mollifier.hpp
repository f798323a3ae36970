#ifndef POLYMERLAB_MOLLIFIER_HPP
#define POLYMERLAB_MOLLIFIER_HPP

#include <iosfwd>
#include <vector>

#include "polymerlab/common.hpp"

namespace polymerlab {

enum class Profile { bump, direct_r };

/// Radial mollifier phi, its self-convolution R = phi*phi, and the related
/// closed kernels (heat kernel, Yukawa potential). Immutable after
/// construction; all evaluation goes through precomputed radial tables, so
/// concurrent reads are safe.
///
/// `bump` is the normalized c*exp(-1/(1-|x/r_phi|^2)) profile. `direct_r`
/// skips the convolution structure and sets R = 1_{|x|<=1} directly; in that
/// mode phi itself is unavailable and phi-dependent operations throw
/// unsupported_mode.
class KernelSpec {
 public:
  static KernelSpec bump(int dim, double support_radius, int table_size = 512);
  static KernelSpec direct_r(int dim);

  int dim() const { return dim_; }
  Profile profile() const { return profile_; }
  double support_radius() const { return r_phi_; }
  /// Radius beyond which R vanishes (2 r_phi for bump, 1 for direct_r).
  double r_support() const { return r_support_; }
  bool has_phi() const { return profile_ == Profile::bump; }

  double norm_constant() const { return norm_c_; }
  double phi0() const { return phi0_; }
  double R0() const { return R0_; }

  /// phi at radius r (zero outside the support).
  double phi_radial(double r) const;
  /// phi as a function of squared radius; the hot path inside noise loops.
  double phi_radial_sq(double r2) const {
    if (r2 >= r_phi_sq_) return 0.0;
    double u = r2 * phi_r2_inv_step_;
    auto i = static_cast<size_t>(u);
    double f = u - static_cast<double>(i);
    return phi_r2_tab_[i] + f * (phi_r2_tab_[i + 1] - phi_r2_tab_[i]);
  }
  /// R = phi*phi at radius r (indicator in direct_r mode).
  double R_radial(double r) const;
  /// R as a function of squared radius; hot path of the exponential
  /// functionals (no sqrt).
  double R_radial_sq(double r2) const {
    if (r2 >= r_support_sq_) return 0.0;
    if (profile_ == Profile::direct_r) return 1.0;
    double u = r2 * R_r2_inv_step_;
    auto i = static_cast<size_t>(u);
    double f = u - static_cast<double>(i);
    return R_r2_tab_[i] + f * (R_r2_tab_[i + 1] - R_r2_tab_[i]);
  }

  double phi_at(PointView x) const;
  double R_at(PointView x) const;

  /// Radial grid step of the R table (r_phi / table_size).
  double table_step() const { return R_step_; }

  /// Columns: radius, phi, R.
  void export_radial_csv(std::ostream& os) const;

 private:
  KernelSpec() = default;
  void require_phi(const char* op) const;

  int dim_ = 3;
  Profile profile_ = Profile::bump;
  double r_phi_ = 1.0;
  double r_support_ = 2.0;
  double r_phi_sq_ = 1.0;
  double norm_c_ = 0.0;
  double phi0_ = 0.0;
  double R0_ = 0.0;

  std::vector<double> phi_tab_;     // phi on [0, r_phi], uniform in r
  std::vector<double> R_tab_;       // R on [0, r_support], uniform in r
  std::vector<double> phi_r2_tab_;  // phi on [0, r_phi^2], uniform in r^2
  std::vector<double> R_r2_tab_;    // R on [0, r_support^2], uniform in r^2
  double phi_step_ = 0.0;
  double R_step_ = 0.0;
  double phi_r2_inv_step_ = 0.0;
  double R_r2_inv_step_ = 0.0;
  double r_support_sq_ = 4.0;
};

/// phi_eps(x) = eps^-d phi(x/eps). Throws invalid_parameter for eps <= 0 and
/// unsupported_mode for direct_r kernels.
double phi_eps(const KernelSpec& spec, double eps, PointView x);

/// R_eps(x) = eps^-d R(x/eps).
double kernel_R_eps(const KernelSpec& spec, double eps, PointView x);

/// R(x), the correlation kernel at scale 1.
double kernel_R(const KernelSpec& spec, PointView x);

/// Transition density of d-dimensional standard Brownian motion.
double heat_kernel(int dim, double t, double r);
double heat_kernel(int dim, double t, PointView x);

/// chi_d such that the Yukawa potential is chi_d |z|^{2-d}. Computed once per
/// dimension by quadrature of int_0^inf G_t(e_1) dt and cached.
double chi_d(int dim);

/// Yukawa potential chi_d / |z|^{d-2}; throws on z = 0.
double yukawa(int dim, double r);
double yukawa(int dim, PointView z);

/// int_a^inf G_u(r) du, by quadrature after the substitution u = a / w^2.
double heat_tail_integral(int dim, double a, double r);

/// Surface area of the unit sphere S^{d-1}.
double sphere_area(int dim);

}  // namespace polymerlab

#endif
