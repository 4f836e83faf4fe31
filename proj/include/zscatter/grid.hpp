#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace zscatter {

/// Periodic box [-L, L)^dim sampled with N points per axis.
///
/// Samples are stored x-fastest: index = ix + N * (iy + N * iz). The
/// frequency lattice is xi = (pi / L) * k with integer k in [-N/2, N/2)^dim,
/// in FFT order (index 0 is the zero frequency).
class Grid {
 public:
  Grid() = default;

  Grid(int dim, int points_per_axis, double box_half_width)
      : dim_(dim), n_(points_per_axis), half_width_(box_half_width) {
    if (dim != 2 && dim != 3) {
      throw std::invalid_argument("Grid: dim must be 2 or 3, got " + std::to_string(dim));
    }
    if (points_per_axis < 8 || (points_per_axis & (points_per_axis - 1)) != 0) {
      throw std::invalid_argument("Grid: points per axis must be a power of two >= 8, got " +
                                  std::to_string(points_per_axis));
    }
    if (!(box_half_width > 0.0) || !std::isfinite(box_half_width)) {
      throw std::invalid_argument("Grid: box half width must be positive");
    }
  }

  int dim() const { return dim_; }
  int points_per_axis() const { return n_; }
  double box_half_width() const { return half_width_; }

  std::size_t size() const {
    std::size_t s = 1;
    for (int d = 0; d < dim_; ++d) s *= static_cast<std::size_t>(n_);
    return s;
  }

  double spacing() const { return 2.0 * half_width_ / n_; }
  double cell_volume() const { return std::pow(spacing(), dim_); }
  double box_volume() const { return std::pow(2.0 * half_width_, dim_); }
  /// Volume of one cell of the frequency lattice, (pi / L)^dim.
  double frequency_cell_volume() const { return std::pow(std::numbers::pi / half_width_, dim_); }
  double nyquist() const { return std::numbers::pi / spacing(); }

  /// Box-centred coordinate of sample i along any axis.
  double coordinate(int i) const { return -half_width_ + i * spacing(); }
  /// Signed integer wavenumber of FFT index i.
  int wavenumber(int i) const { return i < n_ / 2 ? i : i - n_; }
  double frequency(int i) const { return std::numbers::pi / half_width_ * wavenumber(i); }

  std::array<int, 3> unravel(std::size_t index) const {
    std::array<int, 3> ijk{0, 0, 0};
    for (int d = 0; d < dim_; ++d) {
      ijk[d] = static_cast<int>(index % static_cast<std::size_t>(n_));
      index /= static_cast<std::size_t>(n_);
    }
    return ijk;
  }

  std::array<double, 3> position(std::size_t index) const {
    auto ijk = unravel(index);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) x[d] = coordinate(ijk[d]);
    return x;
  }

  std::array<double, 3> frequency_vector(std::size_t index) const {
    auto ijk = unravel(index);
    std::array<double, 3> xi{0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) xi[d] = frequency(ijk[d]);
    return xi;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dim_ = 3;
  int n_ = 8;
  double half_width_ = 1.0;
};

}  // namespace zscatter
