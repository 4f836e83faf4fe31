#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "zscatter/field.hpp"
#include "zscatter/grid.hpp"
#include "zscatter/spectral.hpp"

namespace zscatter {

enum class ZeroModePolicy { project, free };

/// Wave data (A, dA/dt) at a time. Both fields real and on one grid.
struct WavePair {
  Field a;
  Field a_dot;
  double time = 0.0;
};

/// Removes the mean of a physical real field (zero frequency mode).
inline Field project_mean_zero(const Field& f) {
  Field out = f;
  const bool physical = f.space() == Space::physical;
  if (physical) to_frequency_inplace(out);
  out[0] = 0.0;
  if (physical) from_frequency_inplace(out);
  return out;
}

inline bool is_mean_zero(const Field& f, double rel_tol = 1e-12) {
  Field hat = f.space() == Space::frequency ? f : to_frequency(f);
  double scale = lebesgue_norm(hat, 2.0);
  return std::abs(hat[0]) * std::sqrt(f.grid().frequency_cell_volume()) <= rel_tol * scale;
}

/// In-place free Schroedinger flow on a frequency-space field.
inline void schrodinger_phase_inplace(Field& hat, double t) {
  if (hat.space() != Space::frequency) {
    throw std::invalid_argument("schrodinger_phase: frequency field required");
  }
  const auto& tab = spectral_tables(hat.grid());
  for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= std::polar(1.0, -0.5 * t * tab.xi2[i]);
  hat.set_kind(Kind::complex);
}

/// u0(t) = exp(i (t/2) Delta) u_plus. Returned in the input's space.
inline Field schrodinger_free(const Field& u_plus, double t) {
  Field out = u_plus;
  const bool physical = u_plus.space() == Space::physical;
  if (physical) to_frequency_inplace(out);
  schrodinger_phase_inplace(out, t);
  if (physical) from_frequency_inplace(out);
  return out;
}

/// Rotates frequency-space wave data (a, a_dot) by elapsed time t. The zero
/// mode follows `policy`: 0 under projection, a + t a_dot otherwise.
inline void wave_rotate_inplace(Field& a_hat, Field& a_dot_hat, double t,
                                ZeroModePolicy policy = ZeroModePolicy::project) {
  const auto& tab = spectral_tables(a_hat.grid());
  for (std::size_t i = 1; i < a_hat.size(); ++i) {
    double w = std::sqrt(tab.xi2[i]);
    double c = std::cos(w * t);
    double s = std::sin(w * t);
    Complex a = a_hat[i];
    Complex b = a_dot_hat[i];
    a_hat[i] = c * a + (s / w) * b;
    a_dot_hat[i] = -w * s * a + c * b;
  }
  if (policy == ZeroModePolicy::project) {
    a_hat[0] = 0.0;
    a_dot_hat[0] = 0.0;
  } else {
    a_hat[0] += t * a_dot_hat[0];
  }
}

/// (A0(t), dA0/dt(t)) from data at data.time, t the elapsed time.
inline WavePair wave_free(const WavePair& data, double t,
                          ZeroModePolicy policy = ZeroModePolicy::project) {
  data.a.require_compatible(data.a_dot, "wave_free");
  WavePair out = data;
  const bool physical = data.a.space() == Space::physical;
  if (physical) {
    to_frequency_inplace(out.a);
    to_frequency_inplace(out.a_dot);
  }
  wave_rotate_inplace(out.a, out.a_dot, t, policy);
  if (physical) {
    from_frequency_inplace(out.a);
    from_frequency_inplace(out.a_dot);
  }
  out.time = data.time + t;
  return out;
}

/// 1/2 (||omega^-1 a_dot||^2 + ||a||^2).
inline double wave_energy(const WavePair& w) {
  double a = lebesgue_norm(w.a, 2.0);
  double b = lebesgue_norm(omega_power(w.a_dot, -1.0), 2.0);
  return 0.5 * (a * a + b * b);
}

/// Smallest t at which the dilation x -> x/t keeps every requested frequency
/// on the resolved lattice and the chirp exp(i y^2 / 2t) is sampled without
/// aliasing.
inline double mdfm_min_time(const Grid& grid) {
  return grid.box_half_width() * grid.spacing() / std::numbers::pi;
}

/// U(t) u_plus through the factorization M D F M: chirp, continuum Fourier
/// transform evaluated directly at xi = x / t (separable non-uniform sum),
/// dilation with (i t)^(-n/2), chirp. Validation path only.
inline Field schrodinger_mdfm(const Field& u_plus, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("schrodinger_mdfm: t must be positive");
  const Grid& g = u_plus.grid();
  if (t < mdfm_min_time(g)) {
    throw std::domain_error("schrodinger_mdfm: dilation exceeds the box (t too small)");
  }
  Field in = u_plus.space() == Space::physical ? u_plus : from_frequency(u_plus);
  const int n = g.points_per_axis();
  const int dim = g.dim();

  // M u_plus
  Field work = in;
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto y = g.position(i);
    double y2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
    work[i] *= std::polar(1.0, y2 / (2.0 * t));
  }
  work.set_kind(Kind::complex);

  // Separable sum along each axis with kernel exp(-i (x_a / t) y_j).
  std::vector<Complex> kernel(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a) {
    double xi = g.coordinate(a) / t;
    for (int j = 0; j < n; ++j) kernel[static_cast<std::size_t>(a) * n + j] =
        std::polar(1.0, -xi * g.coordinate(j));
  }
  std::vector<Complex> line(static_cast<std::size_t>(n));
  std::size_t stride = 1;
  for (int d = 0; d < dim; ++d) {
    for (std::size_t base = 0; base < work.size(); ++base) {
      if ((base / stride) % static_cast<std::size_t>(n) != 0) continue;
      for (int j = 0; j < n; ++j) line[static_cast<std::size_t>(j)] = work[base + j * stride];
      for (int a = 0; a < n; ++a) {
        Complex s(0.0, 0.0);
        const Complex* k = &kernel[static_cast<std::size_t>(a) * n];
        for (int j = 0; j < n; ++j) s += k[j] * line[static_cast<std::size_t>(j)];
        work[base + a * stride] = s;
      }
    }
    stride *= static_cast<std::size_t>(n);
  }
  const double fscale = std::pow(g.spacing() / std::sqrt(2.0 * std::numbers::pi), dim);
  // (i t)^(-n/2) on the principal branch.
  const Complex dil = std::pow(t, -0.5 * dim) * std::polar(1.0, -0.25 * std::numbers::pi * dim);
  for (std::size_t i = 0; i < work.size(); ++i) {
    auto x = g.position(i);
    double x2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    work[i] *= fscale * dil * std::polar(1.0, x2 / (2.0 * t));
  }
  return work;
}

/// J u0 = (x + i t grad) U(t) u_plus, computed as U(t)(x u_plus). `u` is only
/// checked for grid compatibility.
inline std::vector<Field> apply_J(const Field& u, const Field& u_plus, double t) {
  if (!(u.grid() == u_plus.grid())) throw std::invalid_argument("apply_J: grid mismatch");
  Field base = u_plus.space() == Space::physical ? u_plus : from_frequency(u_plus);
  std::vector<Field> out;
  for (int d = 0; d < base.grid().dim(); ++d) {
    Field xu = multiply_by_function(base, [d](const std::array<double, 3>& x) { return x[d]; });
    out.push_back(schrodinger_free(xu, t));
  }
  return out;
}

}  // namespace zscatter
