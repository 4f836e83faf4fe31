#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zscatter/field.hpp"
#include "zscatter/propagators.hpp"
#include "zscatter/spectral.hpp"

namespace zscatter {

enum class ProfileKind { simple, corrected, zero_wave };

inline const char* to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::simple: return "simple";
    case ProfileKind::corrected: return "corrected";
    case ProfileKind::zero_wave: return "zero_wave";
  }
  return "?";
}

struct NormEntry {
  std::string name;
  double value = 0.0;
};

struct RegularityReport {
  std::vector<NormEntry> norms;
  std::vector<std::string> warnings;
};

/// Asymptotic data (u+, A+, dA+/dt) at time zero.
struct AsymptoticState {
  Field u_plus;
  WavePair wave;
  ZeroModePolicy policy = ZeroModePolicy::project;
  RegularityReport regularity;
};

namespace detail {

inline double l1_of_derivatives(const Field& f, int order_lo, int order_hi) {
  double total = 0.0;
  Field hat = to_frequency(f);
  for (const auto& alpha : multi_indices(f.grid().dim(), order_hi)) {
    int order = alpha[0] + alpha[1] + alpha[2];
    if (order < order_lo) continue;
    total += lebesgue_norm(from_frequency(apply_multiplier(hat, multipliers::partial(alpha))), 1.0);
  }
  return total;
}

inline Field x_dot_grad(const Field& f) {
  auto grad = gradient(f);
  Field out(f.grid(), f.kind());
  for (int d = 0; d < f.grid().dim(); ++d) {
    out += multiply_by_function(grad[static_cast<std::size_t>(d)],
                                [d](const std::array<double, 3>& x) { return x[d]; });
  }
  return out;
}

}  // namespace detail

/// Norms assumed by the three constructions. Computed and flagged, never
/// enforced.
inline RegularityReport regularity_report(const Field& u_plus, const WavePair& wave) {
  RegularityReport r;
  auto add = [&r](const std::string& name, double v) {
    r.norms.push_back({name, v});
    if (!std::isfinite(v)) r.warnings.push_back(name + " is not finite");
  };
  const int dim = u_plus.grid().dim();
  add("u_plus_L1", lebesgue_norm(u_plus, 1.0));
  add("u_plus_L2", lebesgue_norm(u_plus, 2.0));
  add("u_plus_H2", sobolev_norm(u_plus, 2, 2.0));
  add("u_plus_W1_2", sobolev_norm(u_plus, 2, 1.0));
  add("u_plus_H0_2", weighted_norm(u_plus, 0.0, 2.0));
  double xu_l2 = 0.0;
  double xu_w12 = 0.0;
  for (int d = 0; d < dim; ++d) {
    Field xu = multiply_by_function(u_plus, [d](const std::array<double, 3>& x) { return x[d]; });
    double n2 = lebesgue_norm(xu, 2.0);
    xu_l2 += n2 * n2;
    xu_w12 += sobolev_norm(xu, 2, 1.0);
  }
  add("x_u_plus_L2", std::sqrt(xu_l2));
  add("x_u_plus_W1_2", xu_w12);
  add("x2_u_plus_L2",
      lebesgue_norm(multiply_by_function(u_plus,
                                         [](const std::array<double, 3>& x) {
                                           return x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                                         }),
                    2.0));

  const Field& a = wave.a;
  const Field& ad = wave.a_dot;
  add("A_plus_H1", sobolev_norm(a, 1, 2.0));
  add("omega_inv_A_plus_dot_H1", sobolev_norm(omega_power(ad, -1.0), 1, 2.0));
  add("grad2_A_plus_W1_1", detail::l1_of_derivatives(a, 2, 3));
  add("grad_A_plus_dot_W1_1", detail::l1_of_derivatives(ad, 1, 2));
  add("A_plus_Hdot_m2", lebesgue_norm(omega_power(a, -2.0), 2.0));
  add("A_plus_Hdot_m1", lebesgue_norm(omega_power(a, -1.0), 2.0));
  add("omega_inv_A_plus_dot_Hdot_m2", lebesgue_norm(omega_power(ad, -3.0), 2.0));
  Field xga = detail::x_dot_grad(a);
  Field xgad = omega_power(detail::x_dot_grad(ad), -1.0);
  add("x_grad_A_plus_Hdot_m2", lebesgue_norm(omega_power(xga, -2.0), 2.0));
  add("x_grad_A_plus_Hdot_m1", lebesgue_norm(omega_power(xga, -1.0), 2.0));
  add("omega_inv_x_grad_A_plus_dot_Hdot_m2", lebesgue_norm(omega_power(xgad, -2.0), 2.0));
  add("omega_inv_x_grad_A_plus_dot_Hdot_m1", lebesgue_norm(omega_power(xgad, -1.0), 2.0));
  add("omega_inv_A_plus_W43_1", sobolev_norm(omega_power(a, -1.0), 1, 4.0 / 3.0));
  add("omega_m2_A_plus_dot_W43_1", sobolev_norm(omega_power(ad, -2.0), 1, 4.0 / 3.0));
  double a_mean = std::abs(mean(a.space() == Space::physical ? a : from_frequency(a)));
  double ad_mean = std::abs(mean(ad.space() == Space::physical ? ad : from_frequency(ad)));
  add("A_plus_mean_abs", a_mean);
  add("A_plus_dot_mean_abs", ad_mean);
  return r;
}

inline AsymptoticState make_asymptotic_state(Field u_plus, WavePair wave,
                                             ZeroModePolicy policy = ZeroModePolicy::project) {
  if (u_plus.space() != Space::physical) u_plus = from_frequency(u_plus);
  if (wave.a.space() != Space::physical) wave.a = from_frequency(wave.a);
  if (wave.a_dot.space() != Space::physical) wave.a_dot = from_frequency(wave.a_dot);
  if (!(u_plus.grid() == wave.a.grid()) || !(u_plus.grid() == wave.a_dot.grid())) {
    throw std::invalid_argument("make_asymptotic_state: data on different grids");
  }
  wave.a.set_kind(Kind::real);
  wave.a_dot.set_kind(Kind::real);
  wave.a = real_part(wave.a);
  wave.a_dot = real_part(wave.a_dot);
  if (policy == ZeroModePolicy::project) {
    wave.a = project_mean_zero(wave.a);
    wave.a_dot = project_mean_zero(wave.a_dot);
  }
  wave.time = 0.0;
  AsymptoticState s{std::move(u_plus), std::move(wave), policy, {}};
  s.regularity = regularity_report(s.u_plus, s.wave);
  return s;
}

/// Profile fields at one time, physical space.
struct ProfileValue {
  Field u_a;
  Field a_a;
  Field a_a_dot;
  double time = 0.0;
};

struct FParts {
  Field f;
  std::vector<Field> grad_f;
  Field lap_f;
  Field f_t;
  Field pf;
};

/// Terms entering the difference system at one time: u_a, A_a, R1 and the
/// density rho_a with R2 = -Delta rho_a.
struct CouplingTerms {
  Field u_a;
  Field a_a;
  Field r1;
  Field rho_a;
};

/// Asymptotic profile (u_a, A_a) for one data set. Spectra of the data are
/// cached at construction; evaluation at any time is exact on the lattice.
class Profile {
 public:
  Profile(ProfileKind kind, AsymptoticState state)
      : kind_(kind), state_(std::make_shared<const AsymptoticState>(std::move(state))) {
    const auto& s = *state_;
    u_hat_ = to_frequency(s.u_plus);
    a_hat_ = to_frequency(s.wave.a);
    ad_hat_ = to_frequency(s.wave.a_dot);
    if (kind_ == ProfileKind::corrected && (!is_mean_zero(a_hat_) || !is_mean_zero(ad_hat_))) {
      throw std::invalid_argument("corrected profile needs mean-zero wave data");
    }
    for (int d = 0; d < grid().dim(); ++d) {
      xu_hat_.push_back(to_frequency(
          multiply_by_function(s.u_plus, [d](const std::array<double, 3>& x) { return x[d]; })));
    }
    // Pf solves the free wave equation with data (2 x.grad Delta^-1 A+, 2 (1 + x.grad) Delta^-1 A+dot).
    Field g = inverse_laplacian(s.wave.a);
    Field gd = inverse_laplacian(s.wave.a_dot);
    pf_a_hat_ = to_frequency(real_part(2.0 * detail::x_dot_grad(g)));
    pf_ad_hat_ = to_frequency(real_part(2.0 * (gd + detail::x_dot_grad(gd))));
  }

  ProfileKind kind() const { return kind_; }
  const AsymptoticState& state() const { return *state_; }
  const Grid& grid() const { return state_->u_plus.grid(); }

  Field u0(double t) const { return from_frequency(u0_hat(t)); }

  Field u0_hat(double t) const {
    Field h = u_hat_;
    schrodinger_phase_inplace(h, t);
    return h;
  }

  /// (A0, dA0/dt) in frequency space.
  std::pair<Field, Field> a0_hat(double t) const {
    Field a = a_hat_;
    Field ad = ad_hat_;
    wave_rotate_inplace(a, ad, t, state_->policy);
    return {std::move(a), std::move(ad)};
  }

  WavePair a0(double t) const {
    auto [a, ad] = a0_hat(t);
    return {from_frequency(a), from_frequency(ad), t};
  }

  ProfileValue evaluate(double t) const {
    ProfileValue out;
    out.time = t;
    Field u = u0(t);
    if (kind_ == ProfileKind::zero_wave) {
      out.u_a = std::move(u);
      out.a_a = Field(grid(), Kind::real);
      out.a_a_dot = Field(grid(), Kind::real);
      return out;
    }
    auto [a, ad] = a0_hat(t);
    if (kind_ == ProfileKind::corrected) {
      Field f = f_from(a);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] *= 1.0 + f[i].real();
    }
    out.u_a = std::move(u);
    out.a_a = from_frequency(a);
    out.a_a_dot = from_frequency(ad);
    return out;
  }

  /// f = 2 Delta^-1 A0 and the pieces of the closed remainder.
  FParts f_parts(double t) const {
    auto [a, ad] = a0_hat(t);
    FParts out;
    Field f_hat = inverse_laplacian(a);
    f_hat *= 2.0;
    out.f = from_frequency(f_hat);
    for (int d = 0; d < grid().dim(); ++d) {
      std::array<int, 3> alpha{0, 0, 0};
      alpha[d] = 1;
      out.grad_f.push_back(from_frequency(apply_multiplier(f_hat, multipliers::partial(alpha))));
    }
    out.lap_f = from_frequency(laplacian(f_hat));
    Field ft = inverse_laplacian(ad);
    ft *= 2.0;
    out.f_t = from_frequency(ft);
    Field pa = pf_a_hat_;
    Field pad = pf_ad_hat_;
    // The mean of Pf is carried along: x.grad f is localized but not mean-zero.
    wave_rotate_inplace(pa, pad, t, ZeroModePolicy::free);
    out.pf = from_frequency(pa);
    return out;
  }

  /// J u0 = U(t)(x u+), per axis.
  std::vector<Field> j_u0(double t) const {
    std::vector<Field> out;
    for (const auto& h : xu_hat_) {
      Field g = h;
      schrodinger_phase_inplace(g, t);
      from_frequency_inplace(g);
      out.push_back(std::move(g));
    }
    return out;
  }

  /// R1 from its definition, with d/dt u_a by fourth-order central differences.
  Field r1_generic(double t, double dt_fd) const {
    if (!(dt_fd > 0.0)) throw std::invalid_argument("r1_generic: dt_fd must be positive");
    Field up2 = evaluate(t + 2 * dt_fd).u_a;
    Field up1 = evaluate(t + dt_fd).u_a;
    Field um1 = evaluate(t - dt_fd).u_a;
    Field um2 = evaluate(t - 2 * dt_fd).u_a;
    ProfileValue p = evaluate(t);
    Field out = laplacian(p.u_a);
    out *= 0.5;
    const double c = 1.0 / (12.0 * dt_fd);
    for (std::size_t i = 0; i < out.size(); ++i) {
      Complex dudt = c * (-up2[i] + 8.0 * up1[i] - 8.0 * um1[i] + um2[i]);
      out[i] += Complex(0.0, 1.0) * dudt - p.a_a[i].real() * p.u_a[i];
    }
    return out;
  }

  /// R1 = -f A0 u0 - i t^-1 grad f . J u0 + i t^-1 (Pf) u0 (corrected kind).
  Field r1_closed(double t) const {
    if (kind_ != ProfileKind::corrected) {
      throw std::logic_error("r1_closed: only defined for the corrected profile");
    }
    Field u = u0(t);
    Field a = a0(t).a;
    FParts fp = f_parts(t);
    auto ju = j_u0(t);
    const Complex i_over_t(0.0, 1.0 / t);
    Field out(grid());
    for (std::size_t k = 0; k < out.size(); ++k) {
      Complex gj(0.0, 0.0);
      for (int d = 0; d < grid().dim(); ++d) {
        gj += fp.grad_f[static_cast<std::size_t>(d)][k].real() * ju[static_cast<std::size_t>(d)][k];
      }
      out[k] = -fp.f[k].real() * a[k].real() * u[k] - i_over_t * gj +
               i_over_t * fp.pf[k].real() * u[k];
    }
    return out;
  }

  /// Density rho_a with R2 = -Delta rho_a.
  Field rho(double t) const {
    Field u = u0(t);
    Field out = abs_squared(u);
    if (kind_ == ProfileKind::corrected) {
      Field f = f_from(a0_hat(t).first);
      for (std::size_t i = 0; i < out.size(); ++i) {
        double g = 1.0 + f[i].real();
        out[i] *= g * g;
      }
    }
    return out;
  }

  /// (R2, omega^-1 R2).
  std::pair<Field, Field> r2(double t) const {
    Field rho_hat = to_frequency(rho(t));
    Field r2_hat = laplacian(rho_hat);
    r2_hat *= -1.0;
    Field w = omega_power(r2_hat, -1.0);
    return {from_frequency(r2_hat), from_frequency(w)};
  }

  /// R1 by the cheapest exact route for this kind.
  Field r1(double t) const {
    switch (kind_) {
      case ProfileKind::simple: {
        Field u = u0(t);
        Field a = a0(t).a;
        for (std::size_t i = 0; i < u.size(); ++i) u[i] *= -a[i].real();
        return u;
      }
      case ProfileKind::corrected: return r1_closed(t);
      case ProfileKind::zero_wave: return Field(grid());
    }
    return Field(grid());
  }

  CouplingTerms coupling_terms(double t) const {
    CouplingTerms c;
    Field u = u0(t);
    if (kind_ == ProfileKind::zero_wave) {
      c.rho_a = abs_squared(u);
      c.u_a = std::move(u);
      c.a_a = Field(grid(), Kind::real);
      c.r1 = Field(grid());
      return c;
    }
    auto [a_hat, ad_hat] = a0_hat(t);
    Field a = from_frequency(a_hat);
    if (kind_ == ProfileKind::simple) {
      c.r1 = Field(grid());
      for (std::size_t i = 0; i < u.size(); ++i) c.r1[i] = -a[i].real() * u[i];
      c.rho_a = abs_squared(u);
      c.u_a = std::move(u);
      c.a_a = std::move(a);
      return c;
    }
    c.r1 = r1_closed(t);
    Field f = f_from(a_hat);
    c.rho_a = abs_squared(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      double g = 1.0 + f[i].real();
      u[i] *= g;
      c.rho_a[i] *= g * g;
    }
    c.u_a = std::move(u);
    c.a_a = std::move(a);
    return c;
  }

 private:
  Field f_from(const Field& a_hat) const {
    Field f_hat = inverse_laplacian(a_hat);
    f_hat *= 2.0;
    return from_frequency(f_hat);
  }

  ProfileKind kind_;
  std::shared_ptr<const AsymptoticState> state_;
  Field u_hat_;
  Field a_hat_;
  Field ad_hat_;
  std::vector<Field> xu_hat_;
  Field pf_a_hat_;
  Field pf_ad_hat_;
};

// Free-function forms. All require t >= 1.

inline void require_late_time(double t, const char* what) {
  if (!(t >= 1.0)) throw std::invalid_argument(std::string(what) + ": requires t >= 1");
}

inline ProfileValue evaluate_profile(const Profile& p, double t) {
  require_late_time(t, "evaluate_profile");
  return p.evaluate(t);
}

inline FParts compute_f_and_derivatives(const Profile& p, double t) { return p.f_parts(t); }

inline Field remainder_R1_generic(const Profile& p, double t, double dt_fd = 1e-3) {
  require_late_time(t, "remainder_R1_generic");
  return p.r1_generic(t, dt_fd);
}

inline Field remainder_R1_closed(const Profile& p, double t) {
  require_late_time(t, "remainder_R1_closed");
  return p.r1_closed(t);
}

inline std::pair<Field, Field> remainder_R2(const Profile& p, double t) {
  require_late_time(t, "remainder_R2");
  return p.r2(t);
}

}  // namespace zscatter
