#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "zscatter/asymptotics.hpp"
#include "zscatter/config.hpp"
#include "zscatter/diagnostics.hpp"
#include "zscatter/io.hpp"
#include "zscatter/wave_operator.hpp"

namespace zscatter {

inline ProfileKind profile_kind(const std::string& s) {
  if (s == "simple") return ProfileKind::simple;
  if (s == "corrected") return ProfileKind::corrected;
  if (s == "zero_wave") return ProfileKind::zero_wave;
  throw std::invalid_argument("unknown profile kind '" + s + "'");
}

inline Grid run_grid(const RunConfig& c) { return Grid(c.dim, c.grid, c.box); }

inline Field gaussian_field(const Grid& g, double sigma, double amp = 1.0) {
  return Field::sample(
      g,
      [=](const std::array<double, 3>& x) {
        return amp * std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (sigma * sigma));
      },
      Kind::real);
}

/// u+ = amp_u g, A+ = amp_a Delta g, dA+/dt = amp_ad Delta g~ with Gaussians g,
/// g~; Laplacians of Schwartz functions are mean zero with finite negative
/// Sobolev norms by construction.
inline AsymptoticState scenario_data(const RunConfig& c) {
  Grid g = run_grid(c);
  Field up = gaussian_field(g, c.sigma_u, c.amp_u);
  up.set_kind(Kind::complex);
  Field a = c.amp_a * laplacian(gaussian_field(g, c.sigma_a));
  Field ad = c.amp_ad * laplacian(gaussian_field(g, c.sigma_ad));
  return make_asymptotic_state(up, WavePair{a, ad, 0.0});
}

inline ConstructionConfig construction_config(const RunConfig& c, double guard) {
  ConstructionConfig cc;
  cc.T = c.T;
  cc.t0_list = c.t0_list;
  cc.stepper.dt = c.dt;
  cc.stepper.store_every = c.store_every;
  cc.phi_tol = c.phi_tol;
  cc.phi_max_iters = c.phi_max_iters;
  cc.rate.lambda = c.lambda;
  cc.guard_time = guard;
  return cc;
}

struct CheckResult {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  std::string relation;  // ">=", "<=", "<", "true"
  bool pass = false;
  std::string note;
};

struct BranchResult {
  double t0 = 0.0;
  std::vector<NormSnapshot> norms;
  std::vector<DecayFit> fits;
  XNorm x;
  double fit_hi = 0.0;
  bool aborted = false;
  std::string message;
  FrozenTrajectory frozen;  // only for the iteration reference
  std::vector<DifferenceState> kept;
};

struct ScenarioOutcome {
  RunConfig config;
  std::filesystem::path out_dir;
  double guard = std::numeric_limits<double>::infinity();
  RegularityReport regularity;
  std::vector<BranchResult> branches;
  std::optional<CauchyReport> cauchy;
  std::optional<IterationReport> iteration;
  std::optional<ResidualReport> residual;
  std::optional<LemmaReport> lemma;
  std::vector<CheckResult> checks;
  std::string error;
  int status = 0;  // 0 pass, 1 asserted check failed, 3 run could not proceed

  const CheckResult* check(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
  const BranchResult* branch(double t0) const {
    for (const auto& b : branches) {
      if (b.t0 == t0) return &b;
    }
    return nullptr;
  }
};

namespace detail {

inline std::vector<double> composite(const std::vector<NormSnapshot>& s, const std::string& a,
                                     const std::string& b) {
  std::vector<double> out;
  for (const auto& x : s) out.push_back(x.has(a) && x.has(b) ? x.get(a) + x.get(b) : 0.0);
  return out;
}

inline std::vector<double> times_of(const std::vector<NormSnapshot>& s) {
  std::vector<double> t;
  for (const auto& x : s) t.push_back(x.time);
  return t;
}

inline void add_floor_check(ScenarioOutcome& o, const std::string& name, const BranchResult& b,
                            const std::string& fit, double floor) {
  CheckResult c{name, std::numeric_limits<double>::quiet_NaN(), floor, ">=", false, ""};
  for (const auto& f : b.fits) {
    if (f.name == fit) {
      c.value = f.exponent;
      c.pass = std::isfinite(f.exponent) && f.exponent >= floor;
      c.note = "window [" + format_double(f.t_lo) + ", " + format_double(f.t_hi) + "], t0 " +
               format_double(b.t0);
    }
  }
  if (c.note.empty()) c.note = b.aborted ? "run aborted: " + b.message : "fit unavailable";
  o.checks.push_back(c);
}

inline void write_branch_snapshots(const std::filesystem::path& dir, const std::string& name,
                                   const RunConfig& c, const std::vector<DifferenceState>& kept) {
  auto tdir = dir / "traj" / name;
  std::filesystem::create_directories(tdir);
  nlohmann::json meta{{"grid", {{"dim", c.dim}, {"N", c.grid}, {"L", c.box}}},
                      {"cfg", c},
                      {"times", nlohmann::json::array()},
                      {"files", nlohmann::json::array()}};
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& s = kept[i];
    char stem[32];
    std::snprintf(stem, sizeof stem, "%04zu", i);
    nlohmann::json files{{"v", std::string("v_") + stem + ".zsc"},
                         {"b", std::string("b_") + stem + ".zsc"},
                         {"b_dot", std::string("bdot_") + stem + ".zsc"}};
    write_snapshot(tdir / files["v"].get<std::string>(), s.v, s.time);
    write_snapshot(tdir / files["b"].get<std::string>(), s.b, s.time);
    write_snapshot(tdir / files["b_dot"].get<std::string>(), s.b_dot, s.time);
    if (s.v_dot) {
      files["v_dot"] = std::string("vdot_") + stem + ".zsc";
      write_snapshot(tdir / files["v_dot"].get<std::string>(), *s.v_dot, s.time);
    }
    meta["times"].push_back(s.time);
    meta["files"].push_back(files);
  }
  write_json(tdir / "meta.json", meta);
}

}  // namespace detail

/// Runs one resolved scenario and writes its outputs into c.out. Status is
/// nonzero iff an asserted check fails (1) or the run cannot proceed (3).
inline ScenarioOutcome run_scenario(const RunConfig& c, std::ostream* log = nullptr) {
  validate(c);
  ScenarioOutcome o;
  o.config = c;
  o.out_dir = c.out;
  std::filesystem::create_directories(o.out_dir);
  write_json(o.out_dir / "resolved_config.json", nlohmann::json(c));
  auto say = [&](const std::string& m) {
    if (log) *log << "[" << c.scenario << "] " << m << std::endl;
  };

  AsymptoticState data = scenario_data(c);
  o.regularity = data.regularity;
  Profile profile(profile_kind(c.profile), std::move(data));
  const int dim = c.dim;

  try {
    double t_end = std::max(c.t0_list.back(), c.fit_lo);
    o.guard = guard_time(profile, time_grid(1.0, t_end, c.guard_step));
    say("guard time " + detail::format_double(o.guard));
    if (o.guard <= c.fit_lo) {
      throw GuardViolation("boundary-mass guard trips at t = " + detail::format_double(o.guard) +
                           ", before the fit window starts at " + detail::format_double(c.fit_lo));
    }
    ConstructionConfig cc = construction_config(c, o.guard);
    const double t_iter = c.iterate_t0 != 0.0 ? c.iterate_t0 : c.t0_list.front();

    if (c.stage_lemma) {
      std::vector<double> times = time_grid(1.0, std::min(o.guard, t_end), c.guard_step);
      LemmaOptions lo;
      lo.fit_lo = c.fit_lo;
      o.lemma = lemma_report(profile, times, lo);
      for (const auto& it : o.lemma->items) {
        if (!it.asserted) continue;
        bool rate = it.kind == "exponent";
        o.checks.push_back({"lemma." + it.name, it.value,
                            rate ? it.target - it.tolerance : it.target + it.tolerance,
                            rate ? ">=" : "<=", it.pass, it.note});
      }
      if (c.floor_wave_sup > 0.0) {
        const LemmaItem& w = o.lemma->item("wave_sup_decay");
        o.checks.push_back({"wave_sup_exponent", w.value, c.floor_wave_sup, ">=",
                            std::isfinite(w.value) && w.value >= c.floor_wave_sup, w.note});
      }
    }

    if (c.stage_construct) {
      o.branches.resize(c.t0_list.size());
      std::mutex log_mutex;
      auto branch = [&](std::size_t i) {
        BranchResult& b = o.branches[i];
        b.t0 = c.t0_list[i];
        const long stored = std::lround((b.t0 - c.T) / (c.dt * c.store_every));
        int keep = c.snapshot_every;
        if (c.stage_residual && b.t0 == t_iter) {
          int every = static_cast<int>(std::max<long>(1, stored / 4));
          keep = keep > 0 ? std::min(keep, every) : every;
        }
        RunOptions opt;
        opt.keep_states_every = keep;
        opt.record = c.stage_iterate && b.t0 == t_iter;
        const bool deviation = profile.kind() == ProfileKind::corrected || c.floor_deviation > 0.0;
        if (deviation) {
          opt.annotate = [&profile](const DifferenceState& s, NormSnapshot& n) {
            add_free_deviation(n, s, profile);
          };
        }
        RunOutput out = construct_backward(profile, cc, b.t0, opt);
        b.aborted = out.result.aborted;
        b.message = out.result.message;
        b.norms = std::move(out.norms);
        b.frozen = std::move(out.frozen);
        b.kept = std::move(out.states.states);
        b.x = x_norm(b.norms, cc.rate, dim);
        b.fit_hi = std::min(o.guard, 0.5 * b.t0);
        auto t = detail::times_of(b.norms);
        auto add_fit = [&](const std::string& name, const std::vector<double>& v) {
          try {
            b.fits.push_back(fit_decay(t, v, c.fit_lo, b.fit_hi, name));
          } catch (const std::invalid_argument& e) {
            DecayFit f;
            f.name = name;
            f.t_lo = c.fit_lo;
            f.t_hi = b.fit_hi;
            f.exponent = std::numeric_limits<double>::quiet_NaN();
            b.fits.push_back(f);
          }
        };
        if (!b.aborted) {
          add_fit("composite", detail::composite(b.norms, "H2", "dt_L2"));
          add_fit("B_H1", detail::column(b.norms, "B_H1"));
          add_fit("L2", detail::column(b.norms, "L2"));
          if (deviation) add_fit("deviation", detail::composite(b.norms, "dev_H2", "dev_dt_L2"));
        }
        std::lock_guard<std::mutex> lock(log_mutex);
        say("branch t0 = " + detail::format_double(b.t0) +
            (b.aborted ? " aborted: " + b.message : " done"));
      };
      const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(c.jobs), c.t0_list.size());
      if (jobs <= 1) {
        for (std::size_t i = 0; i < c.t0_list.size(); ++i) branch(i);
      } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex fail_mutex;
        std::size_t next = 0;
        std::mutex next_mutex;
        for (std::size_t w = 0; w < jobs; ++w) {
          pool.emplace_back([&]() {
            for (;;) {
              std::size_t i;
              {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= c.t0_list.size()) return;
                i = next++;
              }
              try {
                branch(i);
              } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) failure = std::current_exception();
              }
            }
          });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
      }
      const BranchResult& last = o.branches.back();
      CheckResult ran{"construct_completed", last.aborted ? 0.0 : 1.0, 1.0, "true", !last.aborted,
                      last.message};
      o.checks.push_back(ran);
      if (c.floor_composite > 0.0) detail::add_floor_check(o, "composite_exponent", last, "composite", c.floor_composite);
      if (c.floor_b > 0.0) detail::add_floor_check(o, "B_H1_exponent", last, "B_H1", c.floor_b);
      if (c.floor_deviation > 0.0) detail::add_floor_check(o, "deviation_exponent", last, "deviation", c.floor_deviation);
      for (const auto& b : o.branches) {
        if (c.snapshot_every > 0 && !b.kept.empty()) {
          detail::write_branch_snapshots(o.out_dir, "t0_" + detail::format_double(b.t0), c, b.kept);
        }
      }
    }

    if (c.stage_cauchy && c.t0_list.size() >= 2) {
      say("cauchy study");
      o.cauchy = cauchy_limit_study(profile, cc);
      o.checks.push_back({"cauchy_decreasing", o.cauchy->decreasing() ? 1.0 : 0.0, 1.0, "true",
                          !o.cauchy->aborted && o.cauchy->decreasing(), o.cauchy->message});
      const bool ratios = !o.cauchy->aborted && o.cauchy->ratios_decreasing();
      std::string trail;
      for (const auto& p : o.cauchy->pairs) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", p.ratio_v);
        trail += (trail.empty() ? "" : ", ") + std::string(buf);
      }
      o.checks.push_back({"cauchy_ratio_decreasing", ratios ? 1.0 : 0.0, 1.0, "true", ratios,
                          "sup ||v_t0 - v_t1||_2 / h(t0) along the t0 list: " + trail});
    }

    if (c.stage_iterate) {
      say("fixed point iteration at t0 = " + detail::format_double(t_iter));
      const BranchResult* ref = o.branch(t_iter);
      const FrozenTrajectory* reference = ref && !ref->frozen.empty() ? &ref->frozen : nullptr;
      FixedPointResult fp = fixed_point_iterate(profile, cc, t_iter, reference);
      o.iteration = fp.report;
      const auto& rep = *o.iteration;
      o.checks.push_back({"phi_converged", rep.records.empty() ? 0.0 : rep.records.back().relative_diff,
                          c.phi_tol, "<=", rep.converged && !rep.aborted,
                          rep.aborted ? rep.message : (rep.diverged ? "diverged" : "")});
      if (c.require_contraction) {
        double worst = rep.max_contraction();
        bool ok = !rep.aborted && rep.records.size() >= 2;
        for (const auto& r : rep.records) ok = ok && (!r.contraction || *r.contraction < 1.0);
        o.checks.push_back({"phi_contraction", worst, 1.0, "<", ok, "every iteration"});
      }
      if (reference && !rep.records.empty() && rep.records.back().reference_relative_diff) {
        double d = *rep.records.back().reference_relative_diff;
        o.checks.push_back({"construction_agreement", d, 10.0 * c.phi_tol, "<=",
                            rep.converged && d <= 10.0 * c.phi_tol,
                            "X-norm of the difference to construct_backward, relative"});
      }
    }

    if (c.stage_residual) {
      const BranchResult* b = o.branch(t_iter);
      if (b && !b->kept.empty() && !b->aborted) {
        say("residual check");
        std::vector<DifferenceState> picks;
        for (const auto& s : b->kept) {
          if (s.time < b->t0 - 1e-9) picks.push_back(s);
        }
        StepperConfig sc;
        sc.dt = c.dt;
        o.residual = residual_check(picks, profile, sc);
        double worst = 0.0;
        for (const auto& s : o.residual->samples) {
          worst = std::max(worst, std::max(s.residual_u / s.estimate_u, s.residual_a / s.estimate_a));
        }
        o.checks.push_back({"pde_residual", worst, o.residual->factor, "<=",
                            !picks.empty() && o.residual->pass(),
                            "residual over integrator error estimate, worst sample"});
      } else {
        o.checks.push_back({"pde_residual", 0.0, 10.0, "<=", false, "no states available"});
      }
    }
  } catch (const GuardViolation& e) {
    o.error = e.what();
    o.status = 3;
  } catch (const BlowUpError& e) {
    o.error = e.what();
    o.status = 1;
  }

  // ---- outputs
  nlohmann::json rates{{"scenario", c.scenario},
                       {"dim", dim},
                       {"profile", c.profile},
                       {"lambda", c.lambda},
                       {"guard_time", finite_or_null(o.guard)},
                       {"regularity", to_json_value(o.regularity)},
                       {"branches", nlohmann::json::array()}};
  for (const auto& b : o.branches) {
    nlohmann::json fits = nlohmann::json::array();
    for (const auto& f : b.fits) fits.push_back(to_json_value(f));
    rates["branches"].push_back({{"t0", b.t0},
                                 {"aborted", b.aborted},
                                 {"message", b.message},
                                 {"x_norm", to_json_value(b.x)},
                                 {"n_seminorms", n_seminorms(b.norms, RateSchedule{c.lambda}, dim)},
                                 {"fits", fits}});
  }
  if (o.cauchy) rates["cauchy"] = to_json_value(*o.cauchy);
  if (o.residual) rates["residual"] = to_json_value(*o.residual);
  nlohmann::json checks = nlohmann::json::array();
  bool all = o.status == 0;
  for (const auto& ch : o.checks) {
    all = all && ch.pass;
    checks.push_back({{"name", ch.name},
                      {"value", finite_or_null(ch.value)},
                      {"target", finite_or_null(ch.target)},
                      {"relation", ch.relation},
                      {"pass", ch.pass},
                      {"note", ch.note}});
  }
  rates["checks"] = checks;
  rates["error"] = o.error;
  rates["pass"] = all;
  if (o.status == 0 && !all) o.status = 1;
  write_json(o.out_dir / "rates.json", rates);

  if (!o.branches.empty()) write_norms_csv(o.out_dir / "norms.csv", o.branches.back().norms);
  nlohmann::json iter = o.iteration ? to_json_value(*o.iteration) : nlohmann::json::object();
  iter["stage_run"] = o.iteration.has_value();
  write_json(o.out_dir / "iteration.json", iter);
  if (o.lemma) {
    nlohmann::json lj = to_json_value(*o.lemma);
    lj["regularity"] = to_json_value(o.regularity);
    write_json(o.out_dir / "lemma_report.json", lj);
  }
  for (const auto& ch : o.checks) {
    say(std::string(ch.pass ? "PASS " : "FAIL ") + ch.name + " = " + detail::format_double(ch.value) +
        " (" + ch.relation + " " + detail::format_double(ch.target) + ")" +
        (ch.note.empty() ? "" : "  " + ch.note));
  }
  if (!o.error.empty()) say("error: " + o.error);
  return o;
}

/// Norm table of a stored trajectory directory (meta.json plus snapshots).
inline std::vector<NormSnapshot> trajectory_norms(const std::filesystem::path& dir) {
  nlohmann::json meta = read_json(dir / "meta.json");
  std::vector<NormSnapshot> rows;
  const auto& files = meta.at("files");
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& f = files[i];
    DifferenceState s;
    auto v = read_snapshot(dir / f.at("v").get<std::string>());
    s.time = v.header.time;
    s.v = std::move(v.field);
    s.b = read_snapshot(dir / f.at("b").get<std::string>()).field;
    s.b_dot = read_snapshot(dir / f.at("b_dot").get<std::string>()).field;
    if (f.contains("v_dot")) s.v_dot = read_snapshot(dir / f.at("v_dot").get<std::string>()).field;
    rows.push_back(snapshot_norms(s));
  }
  std::sort(rows.begin(), rows.end(),
            [](const NormSnapshot& a, const NormSnapshot& b) { return a.time < b.time; });
  return rows;
}

}  // namespace zscatter
