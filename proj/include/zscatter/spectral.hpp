#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "zscatter/fft.hpp"
#include "zscatter/field.hpp"
#include "zscatter/grid.hpp"

// Transform normalization. With dx = 2L/N and k the signed integer
// wavenumber, the frequency samples approximate the unitary continuum
// transform
//   fhat(xi) = (2 pi)^(-n/2) \int e^{-i x.xi} f(x) dx,
// taken about the box centre:
//   fhat_k = dx^n (2 pi)^(-n/2) (-1)^(k_1+..+k_n) sum_j f_j e^{-2 pi i j.k / N}.
// The sign factor moves the origin from the box corner to x = 0. L2 norms
// agree in both spaces when frequency sums carry the weight (pi/L)^n.

namespace zscatter {

namespace detail {

struct SpectralTables {
  std::vector<double> axis_xi;          // xi along one axis, FFT order
  std::vector<double> xi2;              // |xi|^2 per sample
  std::vector<double> sign;             // (-1)^(sum of wavenumbers)
  std::vector<unsigned char> keep;      // 2/3-rule mask
};

inline SpectralTables build_tables(const Grid& grid) {
  const int n = grid.points_per_axis();
  SpectralTables t;
  t.axis_xi.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t.axis_xi[static_cast<std::size_t>(i)] = grid.frequency(i);
  t.xi2.resize(grid.size());
  t.sign.resize(grid.size());
  t.keep.resize(grid.size());
  const int cutoff = n / 3;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    auto ijk = grid.unravel(idx);
    double s2 = 0.0;
    int ksum = 0;
    bool keep = true;
    for (int d = 0; d < grid.dim(); ++d) {
      int k = grid.wavenumber(ijk[d]);
      double xi = t.axis_xi[static_cast<std::size_t>(ijk[d])];
      s2 += xi * xi;
      ksum += k;
      if (std::abs(k) > cutoff) keep = false;
    }
    t.xi2[idx] = s2;
    t.sign[idx] = (ksum % 2 == 0) ? 1.0 : -1.0;
    t.keep[idx] = keep ? 1 : 0;
  }
  return t;
}

}  // namespace detail

/// Per-grid lookup tables, built once and shared.
inline const detail::SpectralTables& spectral_tables(const Grid& grid) {
  static std::mutex m;
  static std::map<std::tuple<int, int, double>, std::unique_ptr<detail::SpectralTables>> cache;
  std::lock_guard<std::mutex> lock(m);
  auto key = std::make_tuple(grid.dim(), grid.points_per_axis(), grid.box_half_width());
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_unique<detail::SpectralTables>(detail::build_tables(grid)))
             .first;
  }
  return *it->second;
}

inline double forward_scale(const Grid& grid) {
  return std::pow(grid.spacing() / std::sqrt(2.0 * std::numbers::pi), grid.dim());
}

/// In-place transforms; the caller owns the space tag bookkeeping.
inline void to_frequency_inplace(Field& f) {
  if (f.space() != Space::physical) {
    throw std::invalid_argument("to_frequency: field is not tagged physical");
  }
  const auto& tab = spectral_tables(f.grid());
  fft_plans(f.grid()).forward(f.data());
  const double c = forward_scale(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= c * tab.sign[i];
  f.retag(Space::frequency);
}

inline void from_frequency_inplace(Field& f) {
  if (f.space() != Space::frequency) {
    throw std::invalid_argument("from_frequency: field is not tagged frequency");
  }
  const auto& tab = spectral_tables(f.grid());
  const double c = 1.0 / (forward_scale(f.grid()) * static_cast<double>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) f[i] *= c * tab.sign[i];
  fft_plans(f.grid()).backward(f.data());
  f.retag(Space::physical);
  if (f.is_real()) {
    for (auto& v : f.values()) v = Complex(v.real(), 0.0);
  }
}

inline Field to_frequency(const Field& f) {
  Field out = f;
  to_frequency_inplace(out);
  return out;
}

inline Field from_frequency(const Field& f) {
  Field out = f;
  from_frequency_inplace(out);
  return out;
}

using Frequency = std::array<double, 3>;

struct FourierMultiplier {
  std::function<Complex(const Frequency&)> symbol;
  Complex zero_mode_value{0.0, 0.0};
  // Real symbols that are even in xi, and odd imaginary ones, map real
  // fields to real fields.
  bool preserves_real = true;
};

/// Multiplier values on the lattice of `grid`. Throws if any is non-finite.
inline std::vector<Complex> multiplier_values(const Grid& grid, const FourierMultiplier& m) {
  std::vector<Complex> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Complex v = (i == 0) ? m.zero_mode_value : m.symbol(grid.frequency_vector(i));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw std::domain_error("apply_multiplier: non-finite symbol value at lattice index " +
                              std::to_string(i));
    }
    out[i] = v;
  }
  return out;
}

/// Multiplies the spectrum by precomputed lattice values. The result lives in
/// the same space as the input.
inline Field apply_symbol(const Field& f, const std::vector<Complex>& values, bool preserves_real) {
  Field out = f;
  const bool physical = f.space() == Space::physical;
  if (physical) to_frequency_inplace(out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= values[i];
  if (!(f.is_real() && preserves_real)) out.set_kind(Kind::complex);
  if (physical) from_frequency_inplace(out);
  return out;
}

inline Field apply_multiplier(const Field& f, const FourierMultiplier& m) {
  return apply_symbol(f, multiplier_values(f.grid(), m), m.preserves_real);
}

namespace multipliers {

inline FourierMultiplier laplacian() {
  return {[](const Frequency& xi) {
            return Complex(-(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]), 0.0);
          },
          0.0, true};
}

// Zero mode sent to 0 (mean-zero projection).
inline FourierMultiplier inverse_laplacian() {
  return {[](const Frequency& xi) {
            return Complex(-1.0 / (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]), 0.0);
          },
          0.0, true};
}

/// omega^s = |xi|^s. The zero mode maps to 0 for s != 0 and to 1 for s = 0.
inline FourierMultiplier omega_power(double s) {
  return {[s](const Frequency& xi) {
            return Complex(std::pow(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2], 0.5 * s), 0.0);
          },
          s == 0.0 ? Complex(1.0, 0.0) : Complex(0.0, 0.0), true};
}

/// (1 - Delta)^(k/2).
inline FourierMultiplier bessel(double k) {
  return {[k](const Frequency& xi) {
            return Complex(std::pow(1.0 + xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2], 0.5 * k),
                           0.0);
          },
          1.0, true};
}

/// d^alpha, symbol (i xi)^alpha.
inline FourierMultiplier partial(std::array<int, 3> alpha) {
  const int order = alpha[0] + alpha[1] + alpha[2];
  return {[alpha](const Frequency& xi) {
            Complex v(1.0, 0.0);
            for (int d = 0; d < 3; ++d) {
              for (int p = 0; p < alpha[d]; ++p) v *= Complex(0.0, xi[d]);
            }
            return v;
          },
          order == 0 ? Complex(1.0, 0.0) : Complex(0.0, 0.0), true};
}

}  // namespace multipliers

/// All multi-indices of total order <= k in `dim` variables, ordered by
/// total order.
inline std::vector<std::array<int, 3>> multi_indices(int dim, int k) {
  std::vector<std::array<int, 3>> out;
  for (int order = 0; order <= k; ++order) {
    for (int a = order; a >= 0; --a) {
      if (dim == 2) {
        out.push_back({a, order - a, 0});
        continue;
      }
      for (int b = order - a; b >= 0; --b) out.push_back({a, b, order - a - b});
    }
  }
  return out;
}

inline std::vector<Field> gradient(const Field& f) {
  std::vector<Field> out;
  for (int d = 0; d < f.grid().dim(); ++d) {
    std::array<int, 3> alpha{0, 0, 0};
    alpha[d] = 1;
    out.push_back(apply_multiplier(f, multipliers::partial(alpha)));
  }
  return out;
}

// The multipliers below depend only on |xi|^2, so the lattice values come from
// the cached tables rather than std::function calls.
inline Field radial_multiplier(const Field& f, double (*g)(double, double), double p,
                               double zero_value) {
  const auto& tab = spectral_tables(f.grid());
  std::vector<Complex> values(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) values[i] = i == 0 ? zero_value : g(tab.xi2[i], p);
  return apply_symbol(f, values, true);
}

inline Field laplacian(const Field& f) {
  return radial_multiplier(f, [](double s2, double) { return -s2; }, 0.0, 0.0);
}

inline Field inverse_laplacian(const Field& f) {
  return radial_multiplier(f, [](double s2, double) { return -1.0 / s2; }, 0.0, 0.0);
}

inline Field omega_power(const Field& f, double s) {
  return radial_multiplier(
      f, [](double s2, double p) { return std::pow(s2, 0.5 * p); }, s, s == 0.0 ? 1.0 : 0.0);
}

inline Field bessel_potential(const Field& f, double k) {
  return radial_multiplier(
      f, [](double s2, double p) { return std::pow(1.0 + s2, 0.5 * p); }, k, 1.0);
}

/// Zeroes every mode with |k_d| > N/3 on some axis.
inline void dealias_inplace(Field& f) {
  if (f.space() != Space::frequency) {
    throw std::invalid_argument("dealias: field must be in frequency space");
  }
  const auto& tab = spectral_tables(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!tab.keep[i]) f[i] = 0.0;
  }
}

inline Field dealias(const Field& f) {
  Field out = f;
  const bool physical = f.space() == Space::physical;
  if (physical) to_frequency_inplace(out);
  dealias_inplace(out);
  if (physical) from_frequency_inplace(out);
  return out;
}

// ---- norms ---------------------------------------------------------------

/// L^r norm by Riemann sum, r = infinity gives the grid max. A frequency
/// tagged field is measured through Parseval for r = 2 and transformed back
/// otherwise.
inline double lebesgue_norm(const Field& f, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("lebesgue_norm: r must be >= 1");
  if (f.space() == Space::frequency) {
    if (r == 2.0) {
      double s = 0.0;
      for (const auto& v : f.values()) s += std::norm(v);
      return std::sqrt(s * f.grid().frequency_cell_volume());
    }
    return lebesgue_norm(from_frequency(f), r);
  }
  if (std::isinf(r)) return max_abs(f);
  double s = 0.0;
  if (r == 2.0) {
    for (const auto& v : f.values()) s += std::norm(v);
    return std::sqrt(s * f.grid().cell_volume());
  }
  if (r == 1.0) {
    for (const auto& v : f.values()) s += std::abs(v);
    return s * f.grid().cell_volume();
  }
  if (r == 4.0) {
    for (const auto& v : f.values()) {
      double a = std::norm(v);
      s += a * a;
    }
    return std::pow(s * f.grid().cell_volume(), 0.25);
  }
  for (const auto& v : f.values()) s += std::pow(std::abs(v), r);
  return std::pow(s * f.grid().cell_volume(), 1.0 / r);
}

/// W_r^k norm: sum over |alpha| <= k of ||d^alpha f||_r.
inline double sobolev_norm(const Field& f, int k, double r) {
  if (k < 0) throw std::invalid_argument("sobolev_norm: k must be >= 0");
  Field hat = f.space() == Space::frequency ? f : to_frequency(f);
  double total = 0.0;
  for (const auto& alpha : multi_indices(f.grid().dim(), k)) {
    Field d = apply_multiplier(hat, multipliers::partial(alpha));
    if (r == 2.0) {
      total += lebesgue_norm(d, 2.0);
    } else {
      from_frequency_inplace(d);
      total += lebesgue_norm(d, r);
    }
  }
  return total;
}

/// H^{k,s} norm ||(1 + |x|^2)^{s/2} (1 - Delta)^{k/2} f||_2, x box-centred.
inline double weighted_norm(const Field& f, double k, double s) {
  Field g = k == 0.0 ? f : bessel_potential(f, k);
  if (g.space() == Space::frequency) from_frequency_inplace(g);
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.grid().position(i);
    double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    sum += std::pow(1.0 + r2, s) * std::norm(g[i]);
  }
  return std::sqrt(sum * g.grid().cell_volume());
}

/// \int conj(a) b dx.
inline Complex inner_product(const Field& a, const Field& b) {
  a.require_compatible(b, "inner_product");
  Complex s(0.0, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * (a.space() == Space::physical ? a.grid().cell_volume()
                                           : a.grid().frequency_cell_volume());
}

inline Complex integral(const Field& f) {
  if (f.space() != Space::physical) throw std::invalid_argument("integral: physical field required");
  Complex s(0.0, 0.0);
  for (const auto& v : f.values()) s += v;
  return s * f.grid().cell_volume();
}

inline Complex mean(const Field& f) { return integral(f) / f.grid().box_volume(); }

/// Fraction of the L2 mass sitting where max_d |x_d| >= (1 - shell) L.
inline double boundary_mass_fraction(const Field& f, double shell = 0.1) {
  Field g = f.space() == Space::physical ? f : from_frequency(f);
  const double edge = (1.0 - shell) * g.grid().box_half_width();
  double outer = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.grid().position(i);
    double m = std::norm(g[i]);
    total += m;
    bool out = false;
    for (int d = 0; d < g.grid().dim(); ++d) out = out || std::abs(x[d]) >= edge;
    if (out) outer += m;
  }
  return total > 0.0 ? outer / total : 0.0;
}

}  // namespace zscatter
