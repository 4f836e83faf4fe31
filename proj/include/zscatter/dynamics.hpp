#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zscatter/asymptotics.hpp"
#include "zscatter/field.hpp"
#include "zscatter/propagators.hpp"
#include "zscatter/spectral.hpp"

namespace zscatter {

/// (u, A, dA/dt) at one time.
struct ZakharovState {
  Field u;
  Field a;
  Field a_dot;
  double time = 0.0;
};

/// (v, B, dB/dt) relative to a profile: (u, A) = (u_a + v, A_a + B). v_dot is
/// filled where the producer knows it.
struct DifferenceState {
  Field v;
  Field b;
  Field b_dot;
  double time = 0.0;
  std::optional<Field> v_dot;
};

enum class Scheme { strang };

struct StepperConfig {
  double dt = 0.01;
  Scheme scheme = Scheme::strang;
  bool dealias = true;
  int store_every = 1;
};

template <class State>
struct Trajectory {
  std::vector<State> states;

  std::vector<double> times() const {
    std::vector<double> t;
    t.reserve(states.size());
    for (const auto& s : states) t.push_back(s.time);
    return t;
  }
  bool empty() const { return states.empty(); }
  std::size_t size() const { return states.size(); }
};

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, DifferenceState last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const DifferenceState& last_good() const { return last_good_; }

 private:
  DifferenceState last_good_;
};

// ---- frozen trajectories ---------------------------------------------------

/// Compact store of a difference trajectory for the linearized system.
///
/// Snapshots keep only the dealiased modes, in single precision, in the frame
/// of the free flows: v is stored as exp(+i t |xi|^2/2) vhat and (B, dB/dt) as
/// the wave data at time zero that would reach them freely. Linear
/// interpolation between snapshots therefore is exact for free evolution.
class FrozenTrajectory {
 public:
  FrozenTrajectory() = default;
  FrozenTrajectory(const Grid& grid, bool compact) : grid_(grid) {
    const auto& tab = spectral_tables(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!compact || tab.keep[i]) modes_.push_back(static_cast<std::uint32_t>(i));
    }
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return snaps_.size(); }
  bool empty() const { return snaps_.empty(); }
  double time(std::size_t i) const { return snaps_[i].time; }
  const std::vector<std::uint32_t>& modes() const { return modes_; }

  /// Appends a snapshot from frequency-space fields. Times must be monotone.
  void append(double t, const Field& v_hat, const Field& b_hat, const Field& b_dot_hat,
              const Field* v_dot_hat = nullptr) {
    if (!snaps_.empty()) {
      double last = snaps_.back().time;
      if (t == last) return;
      if (snaps_.size() >= 2 && (t - last) * (last - snaps_[snaps_.size() - 2].time) <= 0.0) {
        throw std::invalid_argument("FrozenTrajectory: times must be monotone");
      }
    }
    const auto& tab = spectral_tables(grid_);
    Snap s;
    s.time = t;
    const std::size_t m = modes_.size();
    s.v.resize(m);
    s.a.resize(m);
    s.b.resize(m);
    if (v_dot_hat) s.vd.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t i = modes_[k];
      double xi2 = tab.xi2[i];
      s.v[k] = std::complex<float>(v_hat[i] * std::polar(1.0, 0.5 * t * xi2));
      auto [a0, b0] = rotate(b_hat[i], b_dot_hat[i], std::sqrt(xi2), -t);
      s.a[k] = std::complex<float>(a0);
      s.b[k] = std::complex<float>(b0);
      if (v_dot_hat) s.vd[k] = std::complex<float>((*v_dot_hat)[i]);
    }
    snaps_.push_back(std::move(s));
  }

  bool covers(double t) const {
    if (snaps_.empty()) return false;
    double lo = std::min(snaps_.front().time, snaps_.back().time);
    double hi = std::max(snaps_.front().time, snaps_.back().time);
    double slack = 1e-9 * std::max(1.0, std::abs(hi));
    return t >= lo - slack && t <= hi + slack;
  }

  /// Frequency-space (vhat, Bhat, dBhat) at time t, linear interpolation in
  /// the free-flow frame.
  void at_hat(double t, Field& v_hat, Field& b_hat, Field* b_dot_hat = nullptr) const {
    if (!covers(t)) {
      throw std::out_of_range("FrozenTrajectory: time " + std::to_string(t) + " not covered");
    }
    auto [i0, theta] = bracket(t);
    const Snap& s0 = snaps_[i0];
    const Snap& s1 = snaps_[std::min(i0 + 1, snaps_.size() - 1)];
    const auto& tab = spectral_tables(grid_);
    v_hat = Field(grid_, Kind::complex, Space::frequency);
    b_hat = Field(grid_, Kind::real, Space::frequency);
    if (b_dot_hat) *b_dot_hat = Field(grid_, Kind::real, Space::frequency);
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      std::size_t i = modes_[k];
      double xi2 = tab.xi2[i];
      Complex w = (1.0 - theta) * Complex(s0.v[k]) + theta * Complex(s1.v[k]);
      v_hat[i] = w * std::polar(1.0, -0.5 * t * xi2);
      Complex a0 = (1.0 - theta) * Complex(s0.a[k]) + theta * Complex(s1.a[k]);
      Complex b0 = (1.0 - theta) * Complex(s0.b[k]) + theta * Complex(s1.b[k]);
      auto [bb, bd] = rotate(a0, b0, std::sqrt(xi2), t);
      b_hat[i] = bb;
      if (b_dot_hat) (*b_dot_hat)[i] = bd;
    }
  }

  bool has_v_dot() const { return !snaps_.empty() && !snaps_.front().vd.empty(); }

  /// Frequency-space dv/dt at t, linear interpolation without frame change.
  void v_dot_at_hat(double t, Field& vd_hat) const {
    if (!has_v_dot()) throw std::logic_error("FrozenTrajectory: no dv/dt stored");
    if (!covers(t)) {
      throw std::out_of_range("FrozenTrajectory: time " + std::to_string(t) + " not covered");
    }
    auto [i0, theta] = bracket(t);
    const Snap& s0 = snaps_[i0];
    const Snap& s1 = snaps_[std::min(i0 + 1, snaps_.size() - 1)];
    vd_hat = Field(grid_, Kind::complex, Space::frequency);
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      vd_hat[modes_[k]] = (1.0 - theta) * Complex(s0.vd[k]) + theta * Complex(s1.vd[k]);
    }
  }

  /// Physical (v, B) at time t.
  void at(double t, Field& v, Field& b) const {
    at_hat(t, v, b);
    from_frequency_inplace(v);
    from_frequency_inplace(b);
  }

  /// Stored snapshot i as a physical DifferenceState.
  DifferenceState state(std::size_t i) const {
    DifferenceState out;
    Field bd;
    at_hat(snaps_[i].time, out.v, out.b, &bd);
    out.b_dot = std::move(bd);
    out.time = snaps_[i].time;
    if (!snaps_[i].vd.empty()) {
      Field vd(grid_, Kind::complex, Space::frequency);
      for (std::size_t k = 0; k < modes_.size(); ++k) vd[modes_[k]] = Complex(snaps_[i].vd[k]);
      from_frequency_inplace(vd);
      out.v_dot = std::move(vd);
    }
    from_frequency_inplace(out.v);
    from_frequency_inplace(out.b);
    from_frequency_inplace(out.b_dot);
    return out;
  }

  std::size_t bytes() const {
    std::size_t per = 0;
    for (const auto& s : snaps_) per += (s.v.size() + s.a.size() + s.b.size() + s.vd.size());
    return per * sizeof(std::complex<float>);
  }

 private:
  struct Snap {
    double time = 0.0;
    std::vector<std::complex<float>> v, a, b, vd;
  };

  // Free wave flow over elapsed time t for one mode of frequency w.
  static std::pair<Complex, Complex> rotate(Complex a, Complex b, double w, double t) {
    if (w == 0.0) return {a + t * b, b};
    double c = std::cos(w * t);
    double s = std::sin(w * t);
    return {c * a + (s / w) * b, -w * s * a + c * b};
  }

  std::pair<std::size_t, double> bracket(double t) const {
    const std::size_t n = snaps_.size();
    if (n == 1) return {0, 0.0};
    const bool increasing = snaps_.back().time > snaps_.front().time;
    std::size_t lo = 0;
    std::size_t hi = n - 1;
    auto before = [&](std::size_t i) {
      return increasing ? snaps_[i].time <= t : snaps_[i].time >= t;
    };
    if (!before(0)) return {0, 0.0};
    if (before(hi)) return {hi - 1, 1.0};
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (before(mid)) lo = mid;
      else hi = mid;
    }
    double t0 = snaps_[lo].time;
    double t1 = snaps_[lo + 1].time;
    return {lo, (t - t0) / (t1 - t0)};
  }

  Grid grid_;
  std::vector<std::uint32_t> modes_;
  std::vector<Snap> snaps_;
};

// ---- split-step engine ----------------------------------------------------

enum class SystemKind { full, difference, linearized };

namespace detail {

// (e^z - 1) / z for z = -i theta.
inline Complex phi1_imag(double theta) {
  if (std::abs(theta) < 1e-2) {
    Complex z(0.0, -theta);
    return 1.0 + z * (0.5 + z * (1.0 / 6 + z * (1.0 / 24 + z * (1.0 / 120 + z / 720.0))));
  }
  return (std::polar(1.0, -theta) - 1.0) / Complex(0.0, -theta);
}

}  // namespace detail

/// Strang splitting for the full system, the difference system around a
/// profile, and the linearized system with (v, B) read from a frozen
/// trajectory. State is kept in frequency space between steps.
///
/// One step of size dt: free flows for dt/2 (exact Fourier multipliers), the
/// coupling stage for dt with the profile and frozen terms taken at the step
/// midpoint, free flows for dt/2. The coupling stage solves
///   i dv/dt = V v + g        (V, g frozen),      d(dB/dt)/dt = Delta rho
/// exactly, V = A_a + B, g = B u_a - R1, rho = |v|^2 + 2 Re(conj(u_a) v) + rho_a
/// with v at the coupling midpoint. For the full system u_a, A_a, R1, rho_a
/// vanish and v plays the role of u.
class SplitStepIntegrator {
 public:
  SplitStepIntegrator(SystemKind kind, const DifferenceState& start, const StepperConfig& cfg,
                      const Profile* profile = nullptr, const FrozenTrajectory* frozen = nullptr)
      : kind_(kind), cfg_(cfg), profile_(profile), frozen_(frozen), grid_(start.v.grid()) {
    if (cfg.dt == 0.0 || !std::isfinite(cfg.dt)) {
      throw std::invalid_argument("StepperConfig: dt must be finite and nonzero");
    }
    if (cfg.store_every < 1) throw std::invalid_argument("StepperConfig: store_every must be >= 1");
    if (kind != SystemKind::full && profile == nullptr) {
      throw std::invalid_argument("SplitStepIntegrator: profile required");
    }
    if (kind == SystemKind::linearized && frozen == nullptr) {
      throw std::invalid_argument("SplitStepIntegrator: frozen trajectory required");
    }
    v_hat_ = start.v.space() == Space::frequency ? start.v : to_frequency(start.v);
    b_hat_ = start.b.space() == Space::frequency ? start.b : to_frequency(start.b);
    bd_hat_ = start.b_dot.space() == Space::frequency ? start.b_dot : to_frequency(start.b_dot);
    v_hat_.set_kind(Kind::complex);
    b_hat_.set_kind(Kind::real);
    bd_hat_.set_kind(Kind::real);
    time_ = start.time;
    origin_ = start.time;
    double ref = max_abs(v_physical());
    if (profile_) ref = std::max(ref, max_abs(profile_->u0(start.time)));
    blowup_limit_ = 1e6 * std::max(ref, 1e-300);
  }

  SystemKind kind() const { return kind_; }
  double time() const { return time_; }
  long steps_taken() const { return steps_; }
  const StepperConfig& config() const { return cfg_; }
  const Grid& grid() const { return grid_; }
  const Field& v_hat() const { return v_hat_; }
  const Field& b_hat() const { return b_hat_; }
  const Field& b_dot_hat() const { return bd_hat_; }

  Field v_physical() const { return from_frequency(v_hat_); }

  DifferenceState state() const {
    DifferenceState s;
    s.v = from_frequency(v_hat_);
    s.b = from_frequency(b_hat_);
    s.b_dot = from_frequency(bd_hat_);
    s.time = time_;
    return s;
  }

  /// Advances by cfg.dt. Step times are origin + k dt, so long runs do not
  /// accumulate rounding in the clock.
  void step() { step_to(origin_ + static_cast<double>(steps_ + 1) * cfg_.dt); }

  /// One step that ends exactly at t_end.
  void step_to(double t_end) {
    const double dt = t_end - time_;
    if (dt == 0.0) return;
    const double t_mid = time_ + 0.5 * dt;
    linear_flow(0.5 * dt);
    coupling(dt, t_mid);
    linear_flow(0.5 * dt);
    time_ = t_end;
    ++steps_;
  }

  /// dv/dt from the equation at the current time, frequency space.
  Field v_dot_hat() const {
    Field v = from_frequency(v_hat_);
    Field lap = laplacian(v_hat_);
    from_frequency_inplace(lap);
    Field b(grid_, Kind::real);
    Field out(grid_);
    if (kind_ == SystemKind::full) {
      b = from_frequency(b_hat_);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = Complex(0.0, 1.0) * (0.5 * lap[i] - b[i].real() * v[i]);
      }
    } else {
      CouplingTerms c = profile_->coupling_terms(time_);
      if (kind_ == SystemKind::linearized) {
        Field vf, bf;
        frozen_->at(time_, vf, bf);
        b = std::move(bf);
      } else {
        b = from_frequency(b_hat_);
      }
      for (std::size_t i = 0; i < out.size(); ++i) {
        double bi = b[i].real();
        double vpot = c.a_a[i].real() + bi;
        out[i] = Complex(0.0, 1.0) *
                 (0.5 * lap[i] - vpot * v[i] - bi * c.u_a[i] + c.r1[i]);
      }
    }
    to_frequency_inplace(out);
    if (cfg_.dealias) dealias_inplace(out);
    return out;
  }

 private:
  void linear_flow(double h) {
    const auto& tab = spectral_tables(grid_);
    if (h != cached_h_) {
      cached_h_ = h;
      const std::size_t n = grid_.size();
      phase_.resize(n);
      cw_.resize(n);
      sw_.resize(n);
      ws_.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        phase_[i] = std::polar(1.0, -0.5 * h * tab.xi2[i]);
        double w = std::sqrt(tab.xi2[i]);
        cw_[i] = std::cos(w * h);
        sw_[i] = w == 0.0 ? h : std::sin(w * h) / w;
        ws_[i] = -w * std::sin(w * h);
      }
    }
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      v_hat_[i] *= phase_[i];
      Complex a = b_hat_[i];
      Complex b = bd_hat_[i];
      b_hat_[i] = cw_[i] * a + sw_[i] * b;
      bd_hat_[i] = ws_[i] * a + cw_[i] * b;
    }
  }

  void coupling(double dt, double t_mid) {
    const std::size_t n = grid_.size();
    Field v = from_frequency(v_hat_);
    Field b;
    Field vf;
    std::optional<CouplingTerms> c;
    if (kind_ != SystemKind::full) c = profile_->coupling_terms(t_mid);
    if (kind_ == SystemKind::linearized) {
      frozen_->at(t_mid, vf, b);
    } else {
      b = from_frequency(b_hat_);
    }

    Field rho(grid_, Kind::real);
    const Complex mi(0.0, -1.0);
    double vmax = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      double bi = b[i].real();
      double vpot = bi;
      Complex g(0.0, 0.0);
      if (c) {
        vpot += c->a_a[i].real();
        g = bi * c->u_a[i] - c->r1[i];
      }
      const double theta = vpot * dt;
      const Complex e_half = std::polar(1.0, -0.5 * theta);
      const Complex e_full = e_half * e_half;
      const Complex src = mi * g;
      Complex v_new = e_full * v[i];
      Complex v_mid = e_half * v[i];
      if (c) {
        v_new += dt * detail::phi1_imag(theta) * src;
        v_mid += 0.5 * dt * detail::phi1_imag(0.5 * theta) * src;
      }
      double r;
      if (kind_ == SystemKind::full) {
        r = std::norm(v_mid);
      } else if (kind_ == SystemKind::difference) {
        r = std::norm(v_mid) + 2.0 * (std::conj(c->u_a[i]) * v_mid).real() + c->rho_a[i].real();
      } else {
        r = std::norm(vf[i]) + 2.0 * (std::conj(c->u_a[i]) * vf[i]).real() + c->rho_a[i].real();
      }
      rho[i] = r;
      v[i] = v_new;
      double m = std::abs(v_new);
      if (!std::isfinite(m)) finite = false;
      vmax = std::max(vmax, m);
    }
    if (!finite || vmax > blowup_limit_) {
      linear_flow(-0.5 * dt);  // back to the start of the step
      throw BlowUpError("blow-up guard tripped at t = " + std::to_string(time_) +
                            (finite ? " (|v| above 1e6 x initial scale)" : " (non-finite values)"),
                        state());
    }

    const auto& tab = spectral_tables(grid_);
    to_frequency_inplace(rho);
    for (std::size_t i = 0; i < n; ++i) {
      if (cfg_.dealias && !tab.keep[i]) continue;
      bd_hat_[i] += dt * (-tab.xi2[i]) * rho[i];
    }
    to_frequency_inplace(v);
    if (cfg_.dealias) dealias_inplace(v);
    v_hat_ = std::move(v);
  }

  SystemKind kind_;
  StepperConfig cfg_;
  const Profile* profile_;
  const FrozenTrajectory* frozen_;
  Grid grid_;
  Field v_hat_, b_hat_, bd_hat_;
  double time_ = 0.0;
  double origin_ = 0.0;
  long steps_ = 0;
  double blowup_limit_ = 0.0;

  double cached_h_ = std::numeric_limits<double>::quiet_NaN();
  std::vector<Complex> phase_;
  std::vector<double> cw_, sw_, ws_;
};

// ---- evolution drivers ------------------------------------------------------

struct IntegrationResult {
  bool aborted = false;
  std::string message;
  double final_time = 0.0;
};

/// Steps from the integrator's time to t_target, calling observer at the
/// start, every store_every steps and at the end. The last step is shortened
/// to land on t_target exactly.
template <class Observer>
IntegrationResult evolve(SplitStepIntegrator& integ, double t_target, Observer&& observer) {
  const double dt = integ.config().dt;
  const double span = t_target - integ.time();
  if (!(span * dt > 0.0)) {
    throw std::invalid_argument("evolve: target lies behind the step direction");
  }
  IntegrationResult result;
  const double start = integ.time();
  const long full_steps = static_cast<long>(std::floor(span / dt * (1.0 + 1e-12)));
  observer(integ);
  long k = 0;
  try {
    for (; k < full_steps; ++k) {
      double t_next = start + static_cast<double>(k + 1) * dt;
      if ((t_target - t_next) * dt < 0.0) break;
      integ.step_to(t_next);
      if ((k + 1) % integ.config().store_every == 0 && t_next != t_target) observer(integ);
    }
    if (integ.time() != t_target) integ.step_to(t_target);
    observer(integ);
  } catch (const BlowUpError& e) {
    result.aborted = true;
    result.message = e.what();
  }
  result.final_time = integ.time();
  return result;
}

inline DifferenceState to_difference(const ZakharovState& s) {
  return {s.u, s.a, s.a_dot, s.time, std::nullopt};
}

inline ZakharovState to_zakharov(const DifferenceState& s) {
  return {s.v, s.b, s.b_dot, s.time};
}

inline ZakharovState step_full(const ZakharovState& state, const StepperConfig& cfg) {
  SplitStepIntegrator integ(SystemKind::full, to_difference(state), cfg);
  integ.step();
  return to_zakharov(integ.state());
}

struct FullEvolution {
  Trajectory<ZakharovState> trajectory;
  IntegrationResult result;
};

inline FullEvolution evolve_full(const ZakharovState& state, double t_target,
                                 const StepperConfig& cfg) {
  SplitStepIntegrator integ(SystemKind::full, to_difference(state), cfg);
  FullEvolution out;
  out.result = evolve(integ, t_target, [&](const SplitStepIntegrator& it) {
    out.trajectory.states.push_back(to_zakharov(it.state()));
  });
  return out;
}

inline DifferenceState step_difference(const DifferenceState& state, const Profile& profile,
                                       const StepperConfig& cfg) {
  SplitStepIntegrator integ(SystemKind::difference, state, cfg, &profile);
  integ.step();
  return integ.state();
}

struct DifferenceEvolution {
  Trajectory<DifferenceState> trajectory;
  IntegrationResult result;
};

inline DifferenceEvolution evolve_difference(const DifferenceState& state, const Profile& profile,
                                             double t_target, const StepperConfig& cfg,
                                             bool with_v_dot = false) {
  SplitStepIntegrator integ(SystemKind::difference, state, cfg, &profile);
  DifferenceEvolution out;
  out.result = evolve(integ, t_target, [&](const SplitStepIntegrator& it) {
    DifferenceState s = it.state();
    if (with_v_dot) s.v_dot = from_frequency(it.v_dot_hat());
    out.trajectory.states.push_back(std::move(s));
  });
  return out;
}

inline DifferenceState step_linearized(const DifferenceState& state,
                                       const FrozenTrajectory& frozen, const Profile& profile,
                                       const StepperConfig& cfg) {
  SplitStepIntegrator integ(SystemKind::linearized, state, cfg, &profile, &frozen);
  integ.step();
  return integ.state();
}

inline DifferenceEvolution evolve_linearized(const DifferenceState& state,
                                             const FrozenTrajectory& frozen,
                                             const Profile& profile, double t_target,
                                             const StepperConfig& cfg, bool with_v_dot = false) {
  SplitStepIntegrator integ(SystemKind::linearized, state, cfg, &profile, &frozen);
  DifferenceEvolution out;
  out.result = evolve(integ, t_target, [&](const SplitStepIntegrator& it) {
    DifferenceState s = it.state();
    if (with_v_dot) s.v_dot = from_frequency(it.v_dot_hat());
    out.trajectory.states.push_back(std::move(s));
  });
  return out;
}

/// Zero (v, B, dB/dt) at time t.
inline DifferenceState zero_difference_state(const Grid& grid, double t) {
  return {Field(grid), Field(grid, Kind::real), Field(grid, Kind::real), t, std::nullopt};
}

/// Stores every observed state of an integrator into a frozen trajectory.
inline void record(FrozenTrajectory& frozen, const SplitStepIntegrator& it, bool with_v_dot) {
  if (with_v_dot) {
    Field vd = it.v_dot_hat();
    frozen.append(it.time(), it.v_hat(), it.b_hat(), it.b_dot_hat(), &vd);
  } else {
    frozen.append(it.time(), it.v_hat(), it.b_hat(), it.b_dot_hat());
  }
}

}  // namespace zscatter
