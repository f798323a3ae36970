#include "polymerlab/mollifier.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <ostream>

namespace polymerlab {

namespace {

constexpr const char* kModule = "mollifier";

double bump_profile(double r_over_rphi) {
  double r2 = r_over_rphi * r_over_rphi;
  if (r2 >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r2));
}

// Composite Simpson on [a,b]; integrands here are smooth.
template <typename F>
double simpson(F&& f, double a, double b, int n) {
  if (n % 2) ++n;
  double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double lerp_table(const std::vector<double>& tab, double step, double r) {
  double u = r / step;
  auto i = static_cast<size_t>(u);
  if (i + 1 >= tab.size()) return 0.0;
  double f = u - static_cast<double>(i);
  return tab[i] + f * (tab[i + 1] - tab[i]);
}

}  // namespace

double sphere_area(int dim) {
  return 2.0 * std::pow(M_PI, dim / 2.0) / std::tgamma(dim / 2.0);
}

KernelSpec KernelSpec::bump(int dim, double support_radius, int table_size) {
  if (dim < 3)
    throw Error(ErrorKind::invalid_parameter, kModule, "bump", "dimension must be >= 3");
  if (support_radius <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "bump", "support_radius must be > 0");
  if (table_size < 16)
    throw Error(ErrorKind::invalid_parameter, kModule, "bump", "table_size too small");

  KernelSpec spec;
  spec.dim_ = dim;
  spec.profile_ = Profile::bump;
  spec.r_phi_ = support_radius;
  spec.r_support_ = 2.0 * support_radius;
  spec.r_phi_sq_ = support_radius * support_radius;

  const double om = sphere_area(dim);
  const double rp = support_radius;
  // Normalize so that int phi = 1.
  double mass = om * simpson(
      [&](double r) { return std::pow(r, dim - 1) * bump_profile(r / rp); }, 0.0, rp, 4096);
  spec.norm_c_ = 1.0 / mass;
  spec.phi0_ = spec.norm_c_ * bump_profile(0.0);

  const int m = table_size;
  spec.phi_step_ = rp / m;
  spec.phi_tab_.resize(m + 2);
  for (int i = 0; i <= m + 1; ++i)
    spec.phi_tab_[i] = spec.norm_c_ * bump_profile(i * spec.phi_step_ / rp);

  // phi as a function of r^2 on a uniform r^2 grid (hot path: no sqrt).
  const int m2 = 2048;
  spec.phi_r2_tab_.resize(m2 + 2);
  double r2_step = spec.r_phi_sq_ / m2;
  spec.phi_r2_inv_step_ = 1.0 / r2_step;
  for (int i = 0; i <= m2 + 1; ++i)
    spec.phi_r2_tab_[i] = spec.norm_c_ * bump_profile(std::sqrt(i * r2_step) / rp);

  // R = phi * phi by the d-dimensional radial convolution.
  spec.R_step_ = rp / m;  // table spans [0, 2 r_phi] with the same step
  spec.R_tab_.resize(2 * m + 2);
  double c2 = spec.norm_c_ * spec.norm_c_;
  if (dim == 3) {
    // For d=3 the angular integral collapses:
    //   R(s) = (2 pi / s) int_0^rp dr r phi(r) int_{|r-s|}^{min(r+s,rp)} du u phi(u).
    // Precompute F(u) = int_0^u t * profile(t) dt on a fine grid.
    const int mf = 16384;
    std::vector<double> F(mf + 1, 0.0);
    double hf = rp / mf;
    for (int i = 1; i <= mf; ++i) {
      double t0 = (i - 1) * hf, t1 = i * hf, tm = 0.5 * (t0 + t1);
      double seg = hf / 6.0 *
                   (t0 * bump_profile(t0 / rp) + 4.0 * tm * bump_profile(tm / rp) +
                    t1 * bump_profile(t1 / rp));
      F[i] = F[i - 1] + seg;
    }
    auto Feval = [&](double u) {
      if (u <= 0.0) return 0.0;
      if (u >= rp) return F[mf];
      double x = u / hf;
      auto i = static_cast<size_t>(x);
      double f = x - static_cast<double>(i);
      return F[i] + f * (F[i + 1] - F[i]);
    };
    for (int i = 0; i <= 2 * m + 1; ++i) {
      double s = i * spec.R_step_;
      if (s >= 2.0 * rp) {
        spec.R_tab_[i] = 0.0;
        continue;
      }
      if (s < 1e-12) {
        spec.R_tab_[i] = c2 * sphere_area(3) *
                         simpson([&](double r) { return r * r * bump_profile(r / rp) *
                                                        bump_profile(r / rp); },
                                 0.0, rp, 2048);
        continue;
      }
      double val = simpson(
          [&](double r) {
            double lo = std::fabs(r - s), hi = std::min(r + s, rp);
            if (hi <= lo) return 0.0;
            return r * bump_profile(r / rp) * (Feval(hi) - Feval(lo));
          },
          0.0, rp, 2048);
      spec.R_tab_[i] = c2 * 2.0 * M_PI / s * val;
    }
  } else {
    // Generic d: angular quadrature with weight sin^{d-2}(theta).
    const int nth = 512;
    for (int i = 0; i <= 2 * m + 1; ++i) {
      double s = i * spec.R_step_;
      if (s >= 2.0 * rp) {
        spec.R_tab_[i] = 0.0;
        continue;
      }
      double om_dm1 = sphere_area(dim - 1);
      double val = simpson(
          [&](double r) {
            double ang = simpson(
                [&](double th) {
                  double dist = std::sqrt(std::max(0.0, r * r + s * s - 2.0 * r * s * std::cos(th)));
                  return std::pow(std::sin(th), dim - 2) * bump_profile(dist / rp);
                },
                0.0, M_PI, nth);
            return std::pow(r, dim - 1) * bump_profile(r / rp) * ang;
          },
          0.0, rp, 512);
      spec.R_tab_[i] = c2 * om_dm1 * val;
    }
  }
  spec.R0_ = spec.R_tab_[0];

  spec.r_support_sq_ = spec.r_support_ * spec.r_support_;
  const int mr2 = 4096;
  spec.R_r2_tab_.resize(mr2 + 2);
  double R_r2_step = spec.r_support_sq_ / mr2;
  spec.R_r2_inv_step_ = 1.0 / R_r2_step;
  for (int i = 0; i <= mr2 + 1; ++i) {
    double r = std::sqrt(i * R_r2_step);
    spec.R_r2_tab_[i] = r >= spec.r_support_ ? 0.0 : lerp_table(spec.R_tab_, spec.R_step_, r);
  }
  return spec;
}

KernelSpec KernelSpec::direct_r(int dim) {
  if (dim < 3)
    throw Error(ErrorKind::invalid_parameter, kModule, "direct_r", "dimension must be >= 3");
  KernelSpec spec;
  spec.dim_ = dim;
  spec.profile_ = Profile::direct_r;
  spec.r_phi_ = 0.5;  // nominal; phi itself does not exist in this mode
  spec.r_support_ = 1.0;
  spec.r_phi_sq_ = 0.25;
  spec.r_support_sq_ = 1.0;
  spec.R0_ = 1.0;
  return spec;
}

void KernelSpec::require_phi(const char* op) const {
  if (!has_phi())
    throw Error(ErrorKind::unsupported_mode, kModule, op,
                "direct-R kernel has no mollifier phi");
}

double KernelSpec::phi_radial(double r) const {
  require_phi("phi");
  if (r >= r_phi_) return 0.0;
  return lerp_table(phi_tab_, phi_step_, r);
}

double KernelSpec::R_radial(double r) const {
  if (profile_ == Profile::direct_r) return r <= 1.0 ? 1.0 : 0.0;
  if (r >= r_support_) return 0.0;
  return lerp_table(R_tab_, R_step_, r);
}

double KernelSpec::phi_at(PointView x) const {
  require_phi("phi");
  return phi_radial_sq(norm2_sq(x));
}

double KernelSpec::R_at(PointView x) const { return R_radial(std::sqrt(norm2_sq(x))); }

void KernelSpec::export_radial_csv(std::ostream& os) const {
  os << "radius,phi,R\n";
  double step = profile_ == Profile::direct_r ? 1.0 / 512.0 : R_step_;
  double rmax = r_support_;
  for (double r = 0.0; r <= rmax + 0.5 * step; r += step) {
    double p = has_phi() ? (r >= r_phi_ ? 0.0 : lerp_table(phi_tab_, phi_step_, r)) : 0.0;
    os << r << "," << p << "," << R_radial(r) << "\n";
  }
}

double phi_eps(const KernelSpec& spec, double eps, PointView x) {
  if (eps <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "phi_eps", "eps must be > 0");
  double scale = std::pow(eps, -spec.dim());
  double r2 = norm2_sq(x) / (eps * eps);
  if (!spec.has_phi())
    throw Error(ErrorKind::unsupported_mode, kModule, "phi_eps",
                "direct-R kernel has no mollifier phi");
  return scale * spec.phi_radial_sq(r2);
}

double kernel_R_eps(const KernelSpec& spec, double eps, PointView x) {
  if (eps <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "kernel_R_eps", "eps must be > 0");
  double r = std::sqrt(norm2_sq(x)) / eps;
  return std::pow(eps, -spec.dim()) * spec.R_radial(r);
}

double kernel_R(const KernelSpec& spec, PointView x) { return spec.R_at(x); }

double heat_kernel(int dim, double t, double r) {
  if (t <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "heat_kernel", "t must be > 0");
  return std::pow(2.0 * M_PI * t, -0.5 * dim) * std::exp(-r * r / (2.0 * t));
}

double heat_kernel(int dim, double t, PointView x) {
  return heat_kernel(dim, t, std::sqrt(norm2_sq(x)));
}

double chi_d(int dim) {
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  // chi_d = int_0^inf G_t(e_1) dt. Substituting u = 1/(2t), then u = w^2,
  // gives a smooth integrand (2pi)^{-d/2} 2^{d/2} w^{d-3} exp(-w^2) on [0,inf).
  double pref = std::pow(2.0 * M_PI, -0.5 * dim) * std::pow(2.0, 0.5 * dim);
  double val = pref * simpson(
      [&](double w) { return std::pow(w, dim - 3) * std::exp(-w * w); }, 0.0, 12.0, 16384);
  cache[dim] = val;
  return val;
}

double yukawa(int dim, double r) {
  if (r <= 0.0)
    throw Error(ErrorKind::singularity, kModule, "yukawa", "z must be nonzero");
  if (dim < 3)
    throw Error(ErrorKind::invalid_parameter, kModule, "yukawa", "dimension must be >= 3");
  return chi_d(dim) * std::pow(r, 2 - dim);
}

double yukawa(int dim, PointView z) { return yukawa(dim, std::sqrt(norm2_sq(z))); }

double heat_tail_integral(int dim, double a, double r) {
  if (a <= 0.0)
    throw Error(ErrorKind::invalid_parameter, kModule, "heat_tail_integral",
                "lower limit must be > 0");
  // int_a^inf G_u(r) du with u = a / w^2:
  //   2 a (2 pi a)^{-d/2} int_0^1 w^{d-3} exp(-r^2 w^2 / (2a)) dw.
  double pref = 2.0 * a * std::pow(2.0 * M_PI * a, -0.5 * dim);
  double q = r * r / (2.0 * a);
  return pref * simpson(
      [&](double w) { return std::pow(w, dim - 3) * std::exp(-q * w * w); }, 0.0, 1.0, 4096);
}

}  // namespace polymerlab
