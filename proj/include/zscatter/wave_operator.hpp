#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zscatter/asymptotics.hpp"
#include "zscatter/diagnostics.hpp"
#include "zscatter/dynamics.hpp"
#include "zscatter/field.hpp"
#include "zscatter/spectral.hpp"

namespace zscatter {

/// Backward construction from zero data at t0 down to T. stepper.dt is the
/// step magnitude; runs go backward in time.
struct ConstructionConfig {
  double T = 2.0;
  std::vector<double> t0_list{20.0, 40.0};
  StepperConfig stepper{};
  double phi_tol = 1e-3;
  int phi_max_iters = 12;
  RateSchedule rate{};
  // Boundary-mass alarm time of the profile; t0 beyond it is refused.
  double guard_time = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(T >= 1.0)) throw std::invalid_argument("ConstructionConfig: T must be >= 1");
    for (std::size_t i = 0; i < t0_list.size(); ++i) {
      if (!(t0_list[i] > T)) throw std::invalid_argument("ConstructionConfig: t0 must exceed T");
      if (i > 0 && !(t0_list[i] > t0_list[i - 1])) {
        throw std::invalid_argument("ConstructionConfig: t0_list must be strictly increasing");
      }
    }
    if (!(phi_tol > 0.0)) throw std::invalid_argument("ConstructionConfig: phi_tol must be > 0");
    if (phi_max_iters < 1) throw std::invalid_argument("ConstructionConfig: phi_max_iters >= 1");
    if (!(stepper.dt > 0.0)) throw std::invalid_argument("ConstructionConfig: dt must be > 0");
    rate.validate();
  }

  StepperConfig backward_stepper() const {
    StepperConfig s = stepper;
    s.dt = -std::abs(stepper.dt);
    return s;
  }
};

class GuardViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What a backward run keeps besides its norm series.
struct RunOptions {
  bool with_v_dot = true;
  bool record = false;                          // fill a frozen trajectory
  bool compact = true;                          // dealiased modes only, float
  const FrozenTrajectory* compare = nullptr;    // diff series against this
  const FrozenTrajectory* reference = nullptr;  // second diff series
  int keep_states_every = 0;                    // 0: keep no full states
  // extra entries for each stored snapshot (state is physical, v_dot set if requested)
  std::function<void(const DifferenceState&, NormSnapshot&)> annotate;
};

struct RunOutput {
  double t0 = 0.0;
  std::vector<NormSnapshot> norms;           // increasing time
  std::vector<NormSnapshot> compare_diff;    // vs options.compare
  std::vector<NormSnapshot> reference_diff;  // vs options.reference
  FrozenTrajectory frozen;
  Trajectory<DifferenceState> states;        // increasing time, sparse
  DifferenceState final_state;
  IntegrationResult result;

  bool ok() const { return !result.aborted; }
};

namespace detail {

inline void require_in_guard(const ConstructionConfig& cfg, double t0) {
  if (!(t0 > cfg.T)) throw std::invalid_argument("construction: t0 must exceed T");
  if (t0 > cfg.guard_time) {
    throw GuardViolation("construction: t0 = " + std::to_string(t0) +
                         " lies beyond the boundary-mass guard time " +
                         std::to_string(cfg.guard_time));
  }
}

inline DifferenceState difference_against(const SplitStepIntegrator& it, const Field& v_dot_hat,
                                          const FrozenTrajectory& other) {
  Field v, b, bd, vd;
  other.at_hat(it.time(), v, b, &bd);
  DifferenceState d;
  d.time = it.time();
  d.v = it.v_hat() - v;
  d.b = it.b_hat() - b;
  d.b_dot = it.b_dot_hat() - bd;
  from_frequency_inplace(d.v);
  from_frequency_inplace(d.b);
  from_frequency_inplace(d.b_dot);
  if (other.has_v_dot()) {
    other.v_dot_at_hat(it.time(), vd);
    Field diff = v_dot_hat - vd;
    from_frequency_inplace(diff);
    d.v_dot = std::move(diff);
  }
  return d;
}

inline void sort_by_time(std::vector<NormSnapshot>& s) {
  std::sort(s.begin(), s.end(),
            [](const NormSnapshot& a, const NormSnapshot& b) { return a.time < b.time; });
}

/// Backward run of the difference (driver == nullptr) or linearized system
/// from zero data at t0 down to cfg.T.
inline RunOutput backward_run(const Profile& profile, const ConstructionConfig& cfg, double t0,
                              const FrozenTrajectory* driver, const RunOptions& opt) {
  cfg.validate();
  require_in_guard(cfg, t0);
  const Grid& grid = profile.grid();
  RunOutput out;
  out.t0 = t0;
  if (opt.record) out.frozen = FrozenTrajectory(grid, opt.compact);
  if (driver && (!driver->covers(t0) || !driver->covers(cfg.T))) {
    throw std::out_of_range("phi_map: frozen trajectory does not cover [T, t0]");
  }
  const SystemKind kind = driver ? SystemKind::linearized : SystemKind::difference;
  SplitStepIntegrator integ(kind, zero_difference_state(grid, t0), cfg.backward_stepper(),
                            &profile, driver);
  long observed = 0;
  out.result = evolve(integ, cfg.T, [&](const SplitStepIntegrator& it) {
    Field vd_hat;
    DifferenceState s = it.state();
    if (opt.with_v_dot) {
      vd_hat = it.v_dot_hat();
      s.v_dot = from_frequency(vd_hat);
    }
    out.norms.push_back(snapshot_norms(s, &profile));
    if (opt.annotate) opt.annotate(s, out.norms.back());
    if (opt.record) {
      if (opt.with_v_dot) out.frozen.append(it.time(), it.v_hat(), it.b_hat(), it.b_dot_hat(), &vd_hat);
      else out.frozen.append(it.time(), it.v_hat(), it.b_hat(), it.b_dot_hat());
    }
    if (opt.compare) {
      out.compare_diff.push_back(snapshot_norms(difference_against(it, vd_hat, *opt.compare)));
    }
    if (opt.reference) {
      out.reference_diff.push_back(
          snapshot_norms(difference_against(it, vd_hat, *opt.reference)));
    }
    if (opt.keep_states_every > 0 && observed % opt.keep_states_every == 0) {
      out.states.states.push_back(s);
    }
    ++observed;
  });
  out.final_state = integ.state();
  if (opt.with_v_dot) out.final_state.v_dot = from_frequency(integ.v_dot_hat());
  if (opt.keep_states_every > 0 &&
      (out.states.empty() || out.states.states.back().time != integ.time())) {
    out.states.states.push_back(out.final_state);
  }
  sort_by_time(out.norms);
  sort_by_time(out.compare_diff);
  sort_by_time(out.reference_diff);
  std::reverse(out.states.states.begin(), out.states.states.end());
  return out;
}

}  // namespace detail

/// Integrates the difference system backward from (v, B, dB/dt)(t0) = 0 to T.
/// (u_a + v, A_a + B) then solves the Zakharov system up to integrator error.
inline RunOutput construct_backward(const Profile& profile, const ConstructionConfig& cfg,
                                    double t0, const RunOptions& opt = {}) {
  return detail::backward_run(profile, cfg, t0, nullptr, opt);
}

/// One application of the partly linearized map: the linearized system with
/// (v, B) frozen to `frozen`, integrated backward from zero data at t0.
inline RunOutput phi_map(const FrozenTrajectory& frozen, const Profile& profile,
                         const ConstructionConfig& cfg, double t0, const RunOptions& opt = {}) {
  return detail::backward_run(profile, cfg, t0, &frozen, opt);
}

/// Zero (v, B) on [T, t0] as a frozen trajectory.
inline FrozenTrajectory zero_frozen(const Grid& grid, double T, double t0, bool compact = true) {
  FrozenTrajectory z(grid, compact);
  Field v(grid, Kind::complex, Space::frequency);
  Field b(grid, Kind::real, Space::frequency);
  z.append(t0, v, b, b, &v);
  z.append(T, v, b, b, &v);
  return z;
}

// ---- Cauchy property in t0 --------------------------------------------------

struct CauchyPair {
  double t0 = 0.0;
  double t1 = 0.0;
  double sup_v_l2 = 0.0;      // sup over [T, t0] of ||v_t0 - v_t1||_2
  double sup_b_h1 = 0.0;      // sup over [T, t0] of ||B_t0 - B_t1; H1||
  double v_t1_at_t0 = 0.0;    // ||v_t1(t0)||_2
  double ratio_v = 0.0;       // sup_v_l2 / h(t0)
  double ratio_b = 0.0;
  std::optional<double> exponent_v;  // two-point decay exponent vs previous pair
  std::optional<double> exponent_b;
};

struct CauchyReport {
  std::vector<CauchyPair> pairs;
  bool aborted = false;
  std::string message;

  bool decreasing() const {
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      if (!(pairs[i].sup_v_l2 < pairs[i - 1].sup_v_l2)) return false;
      if (!(pairs[i].sup_b_h1 < pairs[i - 1].sup_b_h1)) return false;
    }
    return true;
  }

  // sup_v_l2 / h(t0) finite and decreasing along the list
  bool ratios_decreasing() const {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!std::isfinite(pairs[i].ratio_v) || !std::isfinite(pairs[i].ratio_b)) return false;
      if (i > 0 && !(pairs[i].ratio_v < pairs[i - 1].ratio_v)) return false;
    }
    return true;
  }
};

/// Runs one backward integration per t0 in lockstep, starting from the
/// largest, and compares consecutive entries on their common interval.
inline CauchyReport cauchy_limit_study(const Profile& profile, const ConstructionConfig& cfg) {
  cfg.validate();
  if (cfg.t0_list.size() < 2) {
    throw std::invalid_argument("cauchy_limit_study: need at least two t0 values");
  }
  for (double t0 : cfg.t0_list) detail::require_in_guard(cfg, t0);
  const Grid& grid = profile.grid();
  const StepperConfig sc = cfg.backward_stepper();
  const double h = std::abs(sc.dt);
  const double t_max = cfg.t0_list.back();
  const std::size_t m = cfg.t0_list.size();
  std::vector<long> start_step(m);
  for (std::size_t i = 0; i < m; ++i) {
    double k = (t_max - cfg.t0_list[i]) / h;
    if (std::abs(k - std::round(k)) > 1e-6) {
      throw std::invalid_argument("cauchy_limit_study: t0 spacing must be a multiple of dt");
    }
    start_step[i] = std::lround(k);
  }
  const long total = std::lround(std::ceil((t_max - cfg.T) / h - 1e-9));

  CauchyReport rep;
  rep.pairs.resize(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    rep.pairs[i].t0 = cfg.t0_list[i];
    rep.pairs[i].t1 = cfg.t0_list[i + 1];
  }
  std::vector<std::optional<SplitStepIntegrator>> run(m);

  auto compare = [&]() {
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (!run[i] || !run[i + 1]) continue;
      Field dv = run[i]->v_hat() - run[i + 1]->v_hat();
      Field db = run[i]->b_hat() - run[i + 1]->b_hat();
      auto& p = rep.pairs[i];
      p.sup_v_l2 = std::max(p.sup_v_l2, lebesgue_norm(dv, 2.0));
      p.sup_b_h1 = std::max(p.sup_b_h1, sobolev_norm(db, 1, 2.0));
    }
  };

  try {
    for (long k = 0; k <= total; ++k) {
      double t = k < total ? t_max - static_cast<double>(k) * h : cfg.T;
      if (k > 0) {
        for (auto& r : run) {
          if (r) r->step_to(t);
        }
      }
      for (std::size_t i = 0; i < m; ++i) {
        if (start_step[i] == k && !run[i]) {
          DifferenceState z = zero_difference_state(grid, cfg.t0_list[i]);
          run[i].emplace(SystemKind::difference, z, sc, &profile);
          if (i + 1 < m && run[i + 1]) {
            rep.pairs[i].v_t1_at_t0 = lebesgue_norm(run[i + 1]->v_hat(), 2.0);
          }
        }
      }
      if (k % sc.store_every == 0 || k == total) compare();
    }
  } catch (const BlowUpError& e) {
    rep.aborted = true;
    rep.message = e.what();
  }
  for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
    auto& p = rep.pairs[i];
    p.ratio_v = p.sup_v_l2 / cfg.rate(p.t0);
    p.ratio_b = p.sup_b_h1 / cfg.rate(p.t0);
    if (i > 0) {
      const auto& q = rep.pairs[i - 1];
      double lt = std::log(p.t0 / q.t0);
      if (p.sup_v_l2 > 0.0 && q.sup_v_l2 > 0.0) p.exponent_v = std::log(q.sup_v_l2 / p.sup_v_l2) / lt;
      if (p.sup_b_h1 > 0.0 && q.sup_b_h1 > 0.0) p.exponent_b = std::log(q.sup_b_h1 / p.sup_b_h1) / lt;
    }
  }
  return rep;
}

// ---- fixed-point iteration ---------------------------------------------------

struct IterationRecord {
  int iteration = 0;         // 1 = first Picard iterate phi(0)
  double x_norm = 0.0;       // ||phi^k||_X
  double x_diff = 0.0;       // ||phi^k - phi^{k-1}||_X
  double relative_diff = 0.0;
  std::optional<double> contraction;  // x_diff_k / x_diff_{k-1}
  std::optional<double> reference_relative_diff;
  bool aborted = false;
};

struct IterationReport {
  std::vector<IterationRecord> records;
  bool converged = false;
  bool diverged = false;
  bool aborted = false;
  std::string message;
  int best_iteration = 0;
  std::array<double, 7> n_seminorms{};
  double x_norm = 0.0;

  double max_contraction() const {
    double m = 0.0;
    for (const auto& r : records) {
      if (r.contraction) m = std::max(m, *r.contraction);
    }
    return m;
  }
};

struct FixedPointResult {
  FrozenTrajectory trajectory;  // best iterate
  std::vector<NormSnapshot> norms;
  IterationReport report;
};

/// Iterates phi from zero until the relative X-norm change is at most phi_tol
/// or phi_max_iters is reached. Three consecutive contraction factors >= 1
/// end the iteration as divergent; the best iterate is returned. With a
/// reference trajectory every iterate is also compared against it.
inline FixedPointResult fixed_point_iterate(const Profile& profile, const ConstructionConfig& cfg,
                                            double t0,
                                            const FrozenTrajectory* reference = nullptr) {
  cfg.validate();
  detail::require_in_guard(cfg, t0);
  const Grid& grid = profile.grid();
  const int dim = grid.dim();
  FixedPointResult res;
  FrozenTrajectory prev = zero_frozen(grid, cfg.T, t0);
  std::vector<NormSnapshot> prev_norms;
  std::optional<FrozenTrajectory> best;
  double best_rel = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int k = 1; k <= cfg.phi_max_iters; ++k) {
    RunOptions opt;
    opt.record = true;
    opt.compare = &prev;
    opt.reference = reference;
    RunOutput out = phi_map(prev, profile, cfg, t0, opt);
    IterationRecord rec;
    rec.iteration = k;
    rec.aborted = out.result.aborted;
    if (out.result.aborted) {
      res.report.records.push_back(rec);
      res.report.aborted = true;
      res.report.message = out.result.message;
      break;
    }
    rec.x_norm = x_norm(out.norms, cfg.rate, dim).value;
    rec.x_diff = x_norm(out.compare_diff, cfg.rate, dim).value;
    rec.relative_diff = rec.x_norm > 0.0 ? rec.x_diff / rec.x_norm : rec.x_diff;
    if (!res.report.records.empty() && res.report.records.back().x_diff > 0.0) {
      rec.contraction = rec.x_diff / res.report.records.back().x_diff;
    }
    if (reference) {
      double d = x_norm(out.reference_diff, cfg.rate, dim).value;
      rec.reference_relative_diff = rec.x_norm > 0.0 ? d / rec.x_norm : d;
    }
    res.report.records.push_back(rec);

    const bool zero_iterate = rec.x_norm == 0.0 && rec.x_diff == 0.0;
    if (rec.relative_diff < best_rel || zero_iterate) {
      best_rel = rec.relative_diff;
      res.report.best_iteration = k;
      res.norms = out.norms;
      res.report.n_seminorms = n_seminorms(out.norms, cfg.rate, dim);
      res.report.x_norm = rec.x_norm;
      best = out.frozen;
    }
    if (rec.relative_diff <= cfg.phi_tol || zero_iterate) {
      res.report.converged = true;
      break;
    }
    growth = (rec.contraction && *rec.contraction >= 1.0) ? growth + 1 : 0;
    if (growth >= 3) {
      res.report.diverged = true;
      break;
    }
    prev = std::move(out.frozen);
  }
  if (best) res.trajectory = std::move(*best);
  return res;
}

// ---- PDE residual ---------------------------------------------------------

struct ResidualSample {
  double time = 0.0;
  double residual_u = 0.0;   // ||P(i du/dt + Delta u / 2 - A u)||_2
  double residual_a = 0.0;   // ||dA/dt - A_dot||_2 + ||omega^-1 P(dA_dot/dt - Delta A - Delta|u|^2)||_2
  double estimate_u = 0.0;   // 4/3 ||r_u(dt) - r_u(dt/2)||_2
  double estimate_a = 0.0;
  bool pass = true;
};

struct ResidualReport {
  std::vector<ResidualSample> samples;
  double factor = 10.0;
  bool pass() const {
    if (samples.empty()) return false;
    for (const auto& s : samples) {
      if (!s.pass) return false;
    }
    return true;
  }
};

namespace detail {

struct ResidualFields {
  Field ru;
  Field ra1;
  Field ra2;
};

// Restarts the difference integrator at s with step h, skips `skip` steps,
// takes four more and evaluates the Zakharov residual of (u_a + v, A_a + B)
// at the middle time by fourth-order central differences.
inline ResidualFields residual_fields(const DifferenceState& s, const Profile& profile,
                                      const StepperConfig& base, double h, int skip) {
  StepperConfig sc = base;
  sc.dt = h;
  sc.store_every = 1;
  SplitStepIntegrator integ(SystemKind::difference, s, sc, &profile);
  for (int k = 0; k < skip; ++k) integ.step();
  std::vector<Field> u, a, ad;
  for (int k = 0; k <= 4; ++k) {
    if (k > 0) integ.step();
    DifferenceState d = integ.state();
    ProfileValue p = profile.evaluate(integ.time());
    u.push_back(p.u_a + d.v);
    a.push_back(p.a_a + d.b);
    ad.push_back(p.a_a_dot + d.b_dot);
  }
  auto ddt = [h](const std::vector<Field>& f) {
    Field out = f[1];
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (-f[4][i] + 8.0 * f[3][i] - 8.0 * f[1][i] + f[0][i]) / (12.0 * h);
    }
    return out;
  };
  const Field& uc = u[2];
  const Field& ac = a[2];
  Field dtu = ddt(u);
  Field lapu = laplacian(uc);
  ResidualFields r;
  r.ru = Field(uc.grid());
  for (std::size_t i = 0; i < uc.size(); ++i) {
    r.ru[i] = Complex(0.0, 1.0) * dtu[i] + 0.5 * lapu[i] - ac[i].real() * uc[i];
  }
  r.ra1 = ddt(a) - ad[2];
  Field src = ac + abs_squared(uc);
  Field lap = laplacian(src);
  Field dtad = ddt(ad);
  r.ra2 = dtad - lap;
  r.ra2.set_kind(Kind::real);
  r.ra1.set_kind(Kind::real);
  if (base.dealias) {
    r.ru = dealias(r.ru);
    r.ra2 = dealias(r.ra2);
  }
  r.ra2 = omega_power(r.ra2, -1.0);
  return r;
}

}  // namespace detail

/// Residual of the reconstructed Zakharov solution at the given states. The
/// error estimate is the change of the residual field when the step halves,
/// scaled for second order: a residual that does not shrink with the step
/// (a modelling error) fails, one that does (integrator error) passes.
inline ResidualReport residual_check(const std::vector<DifferenceState>& states,
                                     const Profile& profile, const StepperConfig& cfg,
                                     double factor = 10.0) {
  ResidualReport rep;
  rep.factor = factor;
  const double h = std::abs(cfg.dt);
  for (const auto& s : states) {
    // Both stencils are centred at s.time + 2h.
    auto coarse = detail::residual_fields(s, profile, cfg, h, 0);
    auto fine = detail::residual_fields(s, profile, cfg, 0.5 * h, 2);
    ResidualSample rs;
    rs.time = s.time + 2.0 * h;
    rs.residual_u = lebesgue_norm(coarse.ru, 2.0);
    rs.residual_a = lebesgue_norm(coarse.ra1, 2.0) + lebesgue_norm(coarse.ra2, 2.0);
    rs.estimate_u = 4.0 / 3.0 * lebesgue_norm(coarse.ru - fine.ru, 2.0);
    rs.estimate_a = 4.0 / 3.0 * (lebesgue_norm(coarse.ra1 - fine.ra1, 2.0) +
                                 lebesgue_norm(coarse.ra2 - fine.ra2, 2.0));
    rs.pass = rs.residual_u <= factor * rs.estimate_u && rs.residual_a <= factor * rs.estimate_a;
    rep.samples.push_back(rs);
  }
  return rep;
}

}  // namespace zscatter
