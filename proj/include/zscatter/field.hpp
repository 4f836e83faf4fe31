#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

#include "zscatter/fft.hpp"
#include "zscatter/grid.hpp"

namespace zscatter {

enum class Space { physical, frequency };
enum class Kind { complex, real };

/// Complex or real scalar field sampled on a Grid, tagged with the space
/// (physical or frequency) its samples live in.
///
/// Real fields are stored as complex samples; in physical space their
/// imaginary parts are exactly zero, in frequency space they are conjugate
/// symmetric. Fields are plain values: operations elsewhere in the library
/// take them by const reference and return new fields.
class Field {
 public:
  Field() = default;

  explicit Field(const Grid& grid, Kind kind = Kind::complex, Space space = Space::physical)
      : grid_(grid), kind_(kind), space_(space), values_(grid.size(), Complex(0.0, 0.0)) {}

  /// Samples fn(x) at every grid point, x the box-centred position.
  template <class Fn>
  static Field sample(const Grid& grid, Fn&& fn, Kind kind = Kind::complex) {
    Field out(grid, kind);
    for (std::size_t i = 0; i < out.size(); ++i) {
      Complex value(fn(grid.position(i)));
      if (kind == Kind::real) value = Complex(value.real(), 0.0);
      out.values_[i] = value;
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  Kind kind() const { return kind_; }
  Space space() const { return space_; }
  bool is_real() const { return kind_ == Kind::real; }
  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }

  Complex* data() { return values_.data(); }
  const Complex* data() const { return values_.data(); }
  std::span<Complex> values() { return {values_.data(), values_.size()}; }
  std::span<const Complex> values() const { return {values_.data(), values_.size()}; }
  Complex& operator[](std::size_t i) { return values_[i]; }
  const Complex& operator[](std::size_t i) const { return values_[i]; }

  // Retagging is for code that transforms samples in place (spectral.hpp).
  void retag(Space space) { space_ = space; }
  void set_kind(Kind kind) { kind_ = kind; }

  Field& operator+=(const Field& other) {
    require_compatible(other, "+=");
    for (std::size_t i = 0; i < size(); ++i) values_[i] += other.values_[i];
    if (!other.is_real()) kind_ = Kind::complex;
    return *this;
  }

  Field& operator-=(const Field& other) {
    require_compatible(other, "-=");
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= other.values_[i];
    if (!other.is_real()) kind_ = Kind::complex;
    return *this;
  }

  Field& operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  Field& operator*=(Complex s) {
    for (auto& v : values_) v *= s;
    if (s.imag() != 0.0) kind_ = Kind::complex;
    return *this;
  }

  /// Adds s * other (axpy).
  Field& add_scaled(const Field& other, double s) {
    require_compatible(other, "add_scaled");
    for (std::size_t i = 0; i < size(); ++i) values_[i] += s * other.values_[i];
    if (!other.is_real()) kind_ = Kind::complex;
    return *this;
  }

  void require_compatible(const Field& other, const char* what) const {
    if (!(grid_ == other.grid_)) {
      throw std::invalid_argument(std::string("Field ") + what + ": grid mismatch");
    }
    if (space_ != other.space_) {
      throw std::invalid_argument(std::string("Field ") + what + ": space tag mismatch");
    }
  }

 private:
  Grid grid_;
  Kind kind_ = Kind::complex;
  Space space_ = Space::physical;
  ComplexBuffer values_;
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(double s, Field a) { return a *= s; }
inline Field operator*(Complex s, Field a) { return a *= s; }

/// Pointwise product of two physical fields.
inline Field multiply(const Field& a, const Field& b) {
  a.require_compatible(b, "multiply");
  Field out(a.grid(), a.is_real() && b.is_real() ? Kind::real : Kind::complex, a.space());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline Field conjugate(const Field& a) {
  Field out = a;
  for (auto& v : out.values()) v = std::conj(v);
  return out;
}

/// |a|^2 as a real field.
inline Field abs_squared(const Field& a) {
  Field out(a.grid(), Kind::real, a.space());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = Complex(std::norm(a[i]), 0.0);
  return out;
}

inline Field real_part(const Field& a) {
  Field out(a.grid(), Kind::real, a.space());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = Complex(a[i].real(), 0.0);
  return out;
}

/// Multiplies a by a real function of position, f(x).
template <class Fn>
Field multiply_by_function(const Field& a, Fn&& fn) {
  if (a.space() != Space::physical) {
    throw std::invalid_argument("multiply_by_function: field must be in physical space");
  }
  Field out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] *= fn(a.grid().position(i));
  return out;
}

/// Box-centred coordinate x_d as a real field.
inline Field coordinate_field(const Grid& grid, int axis) {
  return Field::sample(
      grid, [axis](const std::array<double, 3>& x) { return x[axis]; }, Kind::real);
}

/// Largest pointwise |a - b|.
inline double max_abs_difference(const Field& a, const Field& b) {
  a.require_compatible(b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const Field& a) {
  double m = 0.0;
  for (const auto& v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_imag(const Field& a) {
  double m = 0.0;
  for (const auto& v : a.values()) m = std::max(m, std::abs(v.imag()));
  return m;
}

}  // namespace zscatter
