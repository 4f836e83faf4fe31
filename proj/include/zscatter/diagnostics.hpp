#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zscatter/asymptotics.hpp"
#include "zscatter/dynamics.hpp"
#include "zscatter/field.hpp"
#include "zscatter/spectral.hpp"

namespace zscatter {

// ---- norm snapshots --------------------------------------------------------

/// Canonical column order of norms.csv.
inline const std::vector<std::string>& norm_names() {
  static const std::vector<std::string> names = {
      "L2",     "L4",     "Linf",   "H1",    "H2",          "W4_2",   "H0_2",
      "lap_L2", "lap_L4", "dt_L2",  "dt_L4", "B_L2",        "B_H1",   "dtB_L2",
      "winv_dtB_H1",      "energy", "mass",  "boundary_mass_fraction"};
  return names;
}

struct NormSnapshot {
  double time = 0.0;
  std::vector<std::pair<std::string, double>> entries;

  bool has(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.first == name) return true;
    }
    return false;
  }
  double get(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.first == name) return e.second;
    }
    throw std::out_of_range("NormSnapshot: no entry " + name);
  }
  void set(const std::string& name, double v) {
    for (auto& e : entries) {
      if (e.first == name) {
        e.second = v;
        return;
      }
    }
    entries.emplace_back(name, v);
  }
};

/// E = \int 1/2 (|grad u|^2 + |omega^-1 dA/dt|^2 + |A|^2) + A |u|^2.
inline double energy(const Field& u, const Field& a, const Field& a_dot) {
  Field uh = u.space() == Space::frequency ? u : to_frequency(u);
  Field up = u.space() == Space::physical ? u : from_frequency(u);
  Field ap = a.space() == Space::physical ? a : from_frequency(a);
  const auto& tab = spectral_tables(u.grid());
  double grad2 = 0.0;
  for (std::size_t i = 0; i < uh.size(); ++i) grad2 += tab.xi2[i] * std::norm(uh[i]);
  grad2 *= u.grid().frequency_cell_volume();
  double w = lebesgue_norm(omega_power(a_dot, -1.0), 2.0);
  double an = lebesgue_norm(ap, 2.0);
  double coupling = 0.0;
  for (std::size_t i = 0; i < up.size(); ++i) coupling += ap[i].real() * std::norm(up[i]);
  coupling *= u.grid().cell_volume();
  return 0.5 * (grad2 + w * w + an * an) + coupling;
}

inline double energy(const ZakharovState& s) { return energy(s.u, s.a, s.a_dot); }

inline double mass(const Field& u) {
  double n = lebesgue_norm(u, 2.0);
  return n * n;
}

namespace detail {

struct DerivativeNorms {
  double h1 = 0.0, h2 = 0.0, w4_2 = 0.0, lap_l2 = 0.0, lap_l4 = 0.0;
};

inline DerivativeNorms derivative_norms(const Field& hat, bool with_l4) {
  DerivativeNorms out;
  const int dim = hat.grid().dim();
  for (const auto& alpha : multi_indices(dim, 2)) {
    int order = alpha[0] + alpha[1] + alpha[2];
    Field d = apply_multiplier(hat, multipliers::partial(alpha));
    double n2 = lebesgue_norm(d, 2.0);
    out.h2 += n2;
    if (order <= 1) out.h1 += n2;
    if (with_l4) out.w4_2 += lebesgue_norm(from_frequency(d), 4.0);
  }
  Field lap = laplacian(hat);
  out.lap_l2 = lebesgue_norm(lap, 2.0);
  if (with_l4) out.lap_l4 = lebesgue_norm(from_frequency(lap), 4.0);
  return out;
}

inline double h1_norm(const Field& f) { return sobolev_norm(f, 1, 2.0); }

}  // namespace detail

/// Every norm entry for a difference state. With a profile, energy, mass and
/// the boundary fraction refer to the reconstructed (u_a + v, A_a + B);
/// without one they refer to (v, B) itself. dt_* entries need s.v_dot.
inline NormSnapshot snapshot_norms(const DifferenceState& s, const Profile* profile = nullptr) {
  NormSnapshot out;
  out.time = s.time;
  Field v = s.v.space() == Space::physical ? s.v : from_frequency(s.v);
  Field vh = to_frequency(v);
  auto dn = detail::derivative_norms(vh, true);
  out.set("L2", lebesgue_norm(vh, 2.0));
  out.set("L4", lebesgue_norm(v, 4.0));
  out.set("Linf", max_abs(v));
  out.set("H1", dn.h1);
  out.set("H2", dn.h2);
  out.set("W4_2", dn.w4_2);
  out.set("H0_2", weighted_norm(v, 0.0, 2.0));
  out.set("lap_L2", dn.lap_l2);
  out.set("lap_L4", dn.lap_l4);
  if (s.v_dot) {
    out.set("dt_L2", lebesgue_norm(*s.v_dot, 2.0));
    out.set("dt_L4", lebesgue_norm(*s.v_dot, 4.0));
  }
  out.set("B_L2", lebesgue_norm(s.b, 2.0));
  out.set("B_H1", detail::h1_norm(s.b));
  out.set("dtB_L2", lebesgue_norm(s.b_dot, 2.0));
  out.set("winv_dtB_H1", detail::h1_norm(omega_power(s.b_dot, -1.0)));

  Field u = v;
  Field a = s.b.space() == Space::physical ? s.b : from_frequency(s.b);
  Field ad = s.b_dot.space() == Space::physical ? s.b_dot : from_frequency(s.b_dot);
  if (profile) {
    ProfileValue p = profile->evaluate(s.time);
    u += p.u_a;
    a += p.a_a;
    ad += p.a_a_dot;
  }
  out.set("energy", energy(u, a, ad));
  out.set("mass", mass(u));
  out.set("boundary_mass_fraction",
          std::max(boundary_mass_fraction(u), boundary_mass_fraction(a)));
  return out;
}

inline NormSnapshot snapshot_norms(const ZakharovState& s) {
  return snapshot_norms(to_difference(s), nullptr);
}

/// Norms of w = u - u0 = (u_a - u0) + v, the distance to the free flow, as
/// dev_L2, dev_H2 and dev_dt_L2 (the last needs s.v_dot). For the corrected
/// profile u_a - u0 = f u0 and dw/dt = f_t u0 + f (i/2) Delta u0 + dv/dt.
inline void add_free_deviation(NormSnapshot& out, const DifferenceState& s, const Profile& p) {
  Field w = s.v.space() == Space::physical ? s.v : from_frequency(s.v);
  std::optional<Field> wd;
  if (s.v_dot) wd = *s.v_dot;
  if (p.kind() == ProfileKind::corrected) {
    Field u0 = p.u0(s.time);
    FParts fp = p.f_parts(s.time);
    w += multiply(fp.f, u0);
    if (wd) {
      Field du0 = Complex(0.0, 0.5) * laplacian(u0);
      *wd += multiply(fp.f_t, u0);
      *wd += multiply(fp.f, du0);
    }
  }
  Field wh = to_frequency(w);
  out.set("dev_L2", lebesgue_norm(wh, 2.0));
  out.set("dev_H2", sobolev_norm(wh, 2, 2.0));
  if (wd) out.set("dev_dt_L2", lebesgue_norm(*wd, 2.0));
}

// ---- rates, Strichartz, X-norm -------------------------------------------

/// h(t) = t^(-lambda).
struct RateSchedule {
  double lambda = 0.5;

  double operator()(double t) const { return std::pow(t, -lambda); }
  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("RateSchedule: lambda must be positive");
  }
};

/// 2/q = n/2 - n/r with 0 <= 2/q <= 1 (n = 3) or 0 <= 2/q < 1 (n = 2).
inline bool admissible_pair(double q, double r, int dim) {
  double two_over_q = std::isinf(q) ? 0.0 : 2.0 / q;
  double rhs = dim / 2.0 - (std::isinf(r) ? 0.0 : dim / r);
  if (std::abs(two_over_q - rhs) > 1e-12) return false;
  if (two_over_q < -1e-12) return false;
  return dim == 2 ? two_over_q < 1.0 - 1e-12 : two_over_q <= 1.0 + 1e-12;
}

struct StrichartzResult {
  double value = 0.0;
  bool admissible = true;
};

namespace detail {

// Samples sorted by time with t >= t_lo.
inline std::vector<std::pair<double, double>> tail_samples(const std::vector<double>& times,
                                                           const std::vector<double>& values,
                                                           double t_lo) {
  if (times.size() != values.size()) throw std::invalid_argument("series length mismatch");
  std::vector<std::pair<double, double>> s;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= t_lo - 1e-12) s.emplace_back(times[i], values[i]);
  }
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace detail

/// (\int_{t_lo}^{end} ||v(t)||_r^q dt)^(1/q) from sampled ||v(t)||_r by the
/// trapezoid rule; q = infinity gives the sup. Inadmissible pairs are still
/// computed and flagged.
inline StrichartzResult strichartz_norm(const std::vector<double>& times,
                                        const std::vector<double>& norms_r, double q, double r,
                                        int dim, double t_lo) {
  StrichartzResult out;
  out.admissible = admissible_pair(q, r, dim);
  auto s = detail::tail_samples(times, norms_r, t_lo);
  if (s.empty()) throw std::invalid_argument("strichartz_norm: no samples after t_lo");
  if (std::isinf(q)) {
    for (const auto& p : s) out.value = std::max(out.value, p.second);
    return out;
  }
  double integral = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    double h = s[i].first - s[i - 1].first;
    integral += 0.5 * h * (std::pow(s[i].second, q) + std::pow(s[i - 1].second, q));
  }
  out.value = std::pow(integral, 1.0 / q);
  return out;
}

/// Convenience form over a stored trajectory, measuring ||v(t)||_r.
inline StrichartzResult strichartz_norm(const Trajectory<DifferenceState>& traj, double q,
                                        double r, double t_lo) {
  if (traj.empty()) throw std::invalid_argument("strichartz_norm: empty trajectory");
  std::vector<double> t, n;
  for (const auto& s : traj.states) {
    t.push_back(s.time);
    n.push_back(lebesgue_norm(s.v, r));
  }
  return strichartz_norm(t, n, q, r, traj.states.front().v.grid().dim(), t_lo);
}

/// Tail integrals (\int_t^end g^q)^(1/q) at every sample of a time-sorted series.
inline std::vector<double> tail_strichartz(const std::vector<double>& t,
                                           const std::vector<double>& g, double q) {
  std::vector<double> out(t.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = t.size(); k-- > 0;) {
    if (k + 1 < t.size()) {
      acc += 0.5 * (t[k + 1] - t[k]) * (std::pow(g[k + 1], q) + std::pow(g[k], q));
    }
    out[k] = std::pow(acc, 1.0 / q);
  }
  return out;
}

/// Per-time components of the X-norm.
struct XComponents {
  double time = 0.0;
  double h = 1.0;
  double v_h2 = 0.0, v_dot_l2 = 0.0, v_strichartz = 0.0, v_dot_strichartz = 0.0, b_h1 = 0.0,
         b_dot_l2 = 0.0;
  double sum() const {
    return v_h2 + v_dot_l2 + v_strichartz + v_dot_strichartz + b_h1 + b_dot_l2;
  }
};

struct XNorm {
  double value = 0.0;
  double argmax_time = 0.0;
  std::vector<XComponents> table;
};

namespace detail {

inline std::vector<NormSnapshot> sorted(std::vector<NormSnapshot> s) {
  std::sort(s.begin(), s.end(),
            [](const NormSnapshot& a, const NormSnapshot& b) { return a.time < b.time; });
  return s;
}

inline std::vector<double> column(const std::vector<NormSnapshot>& s, const std::string& name) {
  std::vector<double> c;
  c.reserve(s.size());
  for (const auto& x : s) c.push_back(x.has(name) ? x.get(name) : 0.0);
  return c;
}

}  // namespace detail

/// sup_t h(t)^-1 (||v;H2|| + ||dv/dt||_2 + ||v;L^{8/n}(J,W_4^2)|| +
/// ||dv/dt;L^{8/n}(J,L^4)|| + ||B;H1|| + ||dB/dt||_2), J = [t, end], the sup
/// taken over snapshot times.
inline XNorm x_norm(const std::vector<NormSnapshot>& series, const RateSchedule& rate, int dim) {
  XNorm out;
  if (series.empty()) return out;
  auto s = detail::sorted(series);
  std::vector<double> t = detail::column(s, "__time__");
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = s[i].time;
  const double q = 8.0 / dim;
  auto tail_v = tail_strichartz(t, detail::column(s, "W4_2"), q);
  auto tail_vd = tail_strichartz(t, detail::column(s, "dt_L4"), q);
  for (std::size_t i = 0; i < s.size(); ++i) {
    XComponents c;
    c.time = t[i];
    c.h = rate(t[i]);
    c.v_h2 = s[i].has("H2") ? s[i].get("H2") : 0.0;
    c.v_dot_l2 = s[i].has("dt_L2") ? s[i].get("dt_L2") : 0.0;
    c.v_strichartz = tail_v[i];
    c.v_dot_strichartz = tail_vd[i];
    c.b_h1 = s[i].has("B_H1") ? s[i].get("B_H1") : 0.0;
    c.b_dot_l2 = s[i].has("dtB_L2") ? s[i].get("dtB_L2") : 0.0;
    double val = c.sum() / c.h;
    if (val > out.value || i == 0) {
      out.value = val;
      out.argmax_time = t[i];
    }
    out.table.push_back(c);
  }
  return out;
}

/// The seven seminorms sup h^-1 (...) of ||v||_2, ||v;L^{8/n}(J,L^4)||,
/// ||B;H1|| v ||dB/dt||_2, ||dv/dt||_2, ||dv/dt;L^{8/n}(J,L^4)||, ||Delta v||_2,
/// ||Delta v;L^{8/n}(J,L^4)||.
inline std::array<double, 7> n_seminorms(const std::vector<NormSnapshot>& series,
                                         const RateSchedule& rate, int dim) {
  std::array<double, 7> n{};
  if (series.empty()) return n;
  auto s = detail::sorted(series);
  std::vector<double> t;
  for (const auto& x : s) t.push_back(x.time);
  const double q = 8.0 / dim;
  auto s1 = tail_strichartz(t, detail::column(s, "L4"), q);
  auto s4 = tail_strichartz(t, detail::column(s, "dt_L4"), q);
  auto s6 = tail_strichartz(t, detail::column(s, "lap_L4"), q);
  auto l2 = detail::column(s, "L2");
  auto bh1 = detail::column(s, "B_H1");
  auto bd = detail::column(s, "dtB_L2");
  auto dt2 = detail::column(s, "dt_L2");
  auto lap2 = detail::column(s, "lap_L2");
  for (std::size_t i = 0; i < s.size(); ++i) {
    double inv = 1.0 / rate(t[i]);
    n[0] = std::max(n[0], inv * l2[i]);
    n[1] = std::max(n[1], inv * s1[i]);
    n[2] = std::max(n[2], inv * std::max(bh1[i], bd[i]));
    n[3] = std::max(n[3], inv * dt2[i]);
    n[4] = std::max(n[4], inv * s4[i]);
    n[5] = std::max(n[5], inv * lap2[i]);
    n[6] = std::max(n[6], inv * s6[i]);
  }
  return n;
}

// ---- decay fits ----------------------------------------------------------

struct DecayFit {
  std::string name;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double exponent = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  int samples = 0;
};

/// Least squares of log(value) against log(t) over samples in [t_lo, t_hi];
/// exponent = -slope. Nonpositive values are dropped; fewer than 8 left is an
/// error.
inline DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values,
                          double t_lo, double t_hi, const std::string& name = "") {
  if (times.size() != values.size()) throw std::invalid_argument("fit_decay: length mismatch");
  if (!(t_hi > t_lo) || !(t_lo >= 1.0)) {
    throw std::invalid_argument("fit_decay: window must satisfy t_hi > t_lo >= 1");
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo - 1e-12 || times[i] > t_hi + 1e-12) continue;
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) continue;
    x.push_back(std::log(times[i]));
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 8) {
    throw std::invalid_argument("fit_decay(" + name + "): fewer than 8 positive samples in [" +
                                std::to_string(t_lo) + ", " + std::to_string(t_hi) + "]");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  DecayFit f;
  f.name = name;
  f.t_lo = t_lo;
  f.t_hi = t_hi;
  f.exponent = -slope;
  f.intercept = my - slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.intercept + slope * x[i]);
    rss += r * r;
  }
  f.residual = std::sqrt(rss / n);
  f.samples = static_cast<int>(x.size());
  return f;
}

inline DecayFit fit_decay(const std::vector<NormSnapshot>& series, const std::string& name,
                          double t_lo, double t_hi) {
  std::vector<double> t, v;
  for (const auto& s : series) {
    t.push_back(s.time);
    v.push_back(s.get(name));
  }
  return fit_decay(t, v, t_lo, t_hi, name);
}

// ---- boundary-mass guard ---------------------------------------------------

inline constexpr double kGuardThreshold = 1e-6;

/// First time in `times` (scanned in increasing order) at which the profile's
/// u_a or A_a has more than `threshold` of its L2 mass in the outer 10% shell.
/// Returns +inf when the alarm never fires.
inline double guard_time(const Profile& p, std::vector<double> times,
                         double threshold = kGuardThreshold) {
  std::sort(times.begin(), times.end());
  for (double t : times) {
    ProfileValue v = p.evaluate(t);
    double frac = std::max(boundary_mass_fraction(v.u_a), boundary_mass_fraction(v.a_a));
    if (frac > threshold) return t;
  }
  return std::numeric_limits<double>::infinity();
}

/// Same alarm on a stored norm series.
inline double guard_time(const std::vector<NormSnapshot>& series,
                         double threshold = kGuardThreshold) {
  for (const auto& s : detail::sorted(series)) {
    if (s.get("boundary_mass_fraction") > threshold) return s.time;
  }
  return std::numeric_limits<double>::infinity();
}

/// Evenly spaced times lo, lo + step, ..., up to hi inclusive.
inline std::vector<double> time_grid(double lo, double hi, double step) {
  std::vector<double> t;
  const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= n; ++k) t.push_back(lo + static_cast<double>(k) * step);
  return t;
}

// ---- inequality reports ------------------------------------------------------

struct LemmaItem {
  std::string name;
  std::string kind;  // "ratio" (explicit constant) or "exponent" (fitted rate)
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool asserted = true;
  bool pass = true;
  std::string note;
};

struct LemmaReport {
  double guard_time = 0.0;
  std::vector<double> times;
  std::vector<LemmaItem> items;

  bool all_pass() const {
    for (const auto& i : items) {
      if (i.asserted && !i.pass) return false;
    }
    return true;
  }
  const LemmaItem& item(const std::string& name) const {
    for (const auto& i : items) {
      if (i.name == name) return i;
    }
    throw std::out_of_range("LemmaReport: no item " + name);
  }
};

struct LemmaOptions {
  double fd_step = 1e-3;        // time step of the finite-difference dt u0
  double fit_lo_wave = 2.0;     // start of the A0 sup-norm fit
  double fit_lo = 5.0;          // start of the remaining fits
  double ratio_slack = 1e-6;
  double identity_tol = 1e-9;
  double exponent_margin = 0.15;
};

/// Dispersive and wave estimates for one data set over `time_list`, restricted
/// to the guarded window.
inline LemmaReport lemma_report(const Profile& profile, const std::vector<double>& time_list,
                                const LemmaOptions& opt = {}) {
  const Grid& g = profile.grid();
  const int n = g.dim();
  const Field& up = profile.state().u_plus;
  LemmaReport rep;
  rep.guard_time = guard_time(profile, time_list);
  for (double t : time_list) {
    if (t >= 1.0 && t < rep.guard_time) rep.times.push_back(t);
  }
  std::sort(rep.times.begin(), rep.times.end());

  const double u1 = lebesgue_norm(up, 1.0);
  double xu2 = 0.0;
  for (int d = 0; d < n; ++d) {
    double v = lebesgue_norm(
        multiply_by_function(up, [d](const std::array<double, 3>& x) { return x[d]; }), 2.0);
    xu2 += v * v;
  }
  xu2 = std::sqrt(xu2);
  const double x2u2 = lebesgue_norm(
      multiply_by_function(up,
                           [](const std::array<double, 3>& x) {
                             return x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                           }),
      2.0);

  double sup_ratio = 0.0, id_err = 0.0, grad_ratio = 0.0, lap_ratio = 0.0, gn_const = 0.0;
  std::vector<double> ta, a_inf, tf, f_l4;
  for (double t : rep.times) {
    Field u = profile.u0(t);
    double disp = std::pow(2.0 * std::numbers::pi * t, -0.5 * n);
    if (u1 > 0.0) sup_ratio = std::max(sup_ratio, max_abs(u) / (disp * u1));

    // dt u0 by fourth-order central differences, independent of the symbol.
    const double h = opt.fd_step;
    Field up2 = profile.u0(t + 2 * h), up1 = profile.u0(t + h);
    Field um1 = profile.u0(t - h), um2 = profile.u0(t - 2 * h);
    Field dtu(g);
    for (std::size_t i = 0; i < dtu.size(); ++i) {
      dtu[i] = (-up2[i] + 8.0 * up1[i] - 8.0 * um1[i] + um2[i]) / (12.0 * h);
    }
    double lhs = 2.0 * max_abs(dtu);
    double rhs = max_abs(laplacian(u));
    if (rhs > 0.0) id_err = std::max(id_err, std::abs(lhs - rhs) / rhs);

    Field rho = abs_squared(u);
    Field rho_hat = to_frequency(rho);
    double grad = 0.0;
    for (const auto& comp : gradient(rho_hat)) {
      double c = lebesgue_norm(comp, 2.0);
      grad += c * c;
    }
    grad = std::sqrt(grad);
    double lap = lebesgue_norm(laplacian(rho_hat), 2.0);
    double b1 = 2.0 * disp / t * u1 * xu2;
    double b2 = 4.0 * disp / (t * t) * u1 * x2u2;
    if (b1 > 0.0) grad_ratio = std::max(grad_ratio, grad / b1);
    if (b2 > 0.0) lap_ratio = std::max(lap_ratio, lap / b2);

    if (t >= opt.fit_lo_wave) {
      ta.push_back(t);
      a_inf.push_back(max_abs(profile.a0(t).a));
    }
    if (t >= opt.fit_lo && n == 3) {
      FParts fp = profile.f_parts(t);
      tf.push_back(t);
      f_l4.push_back(lebesgue_norm(fp.f, 4.0));
      double grad_f = 0.0;
      for (const auto& c : fp.grad_f) {
        double v = lebesgue_norm(c, 2.0);
        grad_f += v * v;
      }
      double denom = std::sqrt(grad_f) * lebesgue_norm(fp.lap_f, 2.0);
      if (denom > 0.0) {
        double fi = max_abs(fp.f);
        gn_const = std::max(gn_const, fi * fi / denom);
      }
    }
  }

  auto ratio_item = [&](const std::string& name, double v, const std::string& note) {
    LemmaItem it{name, "ratio", v, 1.0, opt.ratio_slack, true, v <= 1.0 + opt.ratio_slack, note};
    rep.items.push_back(it);
  };
  ratio_item("dispersive_sup", sup_ratio, "||u0||_inf (2 pi t)^{n/2} / ||u+||_1");
  rep.items.push_back({"dt_laplacian_identity", "identity", id_err, 0.0, opt.identity_tol, true,
                       id_err <= opt.identity_tol, "|2||dt u0||_inf - ||Delta u0||_inf| / ||Delta u0||_inf"});
  ratio_item("density_gradient", grad_ratio,
             "||grad|u0|^2||_2 / (2 (2 pi t)^{-n/2} t^-1 ||u+||_1 ||x u+||_2)");
  ratio_item("density_laplacian", lap_ratio,
             "||Delta|u0|^2||_2 / (4 (2 pi t)^{-n/2} t^-2 ||u+||_1 ||x^2 u+||_2)");

  auto exponent_item = [&](const std::string& name, const std::vector<double>& t,
                           const std::vector<double>& v, double lo, double target,
                           const std::string& note) {
    LemmaItem it{name, "exponent", 0.0, target, opt.exponent_margin, true, false, note};
    double hi = t.empty() ? lo : t.back();
    try {
      DecayFit f = fit_decay(t, v, lo, hi, name);
      it.value = f.exponent;
      it.pass = f.exponent >= target - opt.exponent_margin;
    } catch (const std::exception& e) {
      it.note += std::string(" [") + e.what() + "]";
      it.pass = false;
    }
    rep.items.push_back(it);
  };
  // sup norm of a free wave decays like t^{-(n-1)/2}.
  double a_scale = lebesgue_norm(profile.state().wave.a, 2.0) +
                   lebesgue_norm(profile.state().wave.a_dot, 2.0);
  if (a_scale > 0.0) {
    exponent_item("wave_sup_decay", ta, a_inf, opt.fit_lo_wave, 0.5 * (n - 1),
                  "fitted exponent of ||A0||_inf");
    if (n == 3 && is_mean_zero(profile.state().wave.a) && is_mean_zero(profile.state().wave.a_dot)) {
      exponent_item("f_L4_decay", tf, f_l4, opt.fit_lo, 0.5, "fitted exponent of ||f||_4");
      rep.items.push_back({"f_sup_interpolation_constant", "constant", gn_const, 0.0, 0.0, false,
                           true, "max ||f||_inf^2 / (||grad f||_2 ||Delta f||_2), reported only"});
    }
  }
  return rep;
}

}  // namespace zscatter
