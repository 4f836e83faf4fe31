#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "zscatter/diagnostics.hpp"
#include "zscatter/dynamics.hpp"

using namespace zscatter;

namespace {

double r2(const std::array<double, 3>& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }

Field gaussian(const Grid& g, double sigma, double amp = 1.0) {
  return Field::sample(
      g, [=](const std::array<double, 3>& x) { return amp * std::exp(-0.5 * r2(x) / (sigma * sigma)); },
      Kind::real);
}

ZakharovState packet(const Grid& g, double amp_u, double amp_a) {
  Field u = Field::sample(g, [=](const std::array<double, 3>& x) {
    return amp_u * std::exp(-0.5 * r2(x) / 2.0) * std::polar(1.0, 0.4 * x[0]);
  });
  Field a = amp_a * laplacian(gaussian(g, 1.5));
  Field ad = (0.5 * amp_a) * laplacian(gaussian(g, 1.3));
  return {u, a, ad, 0.0};
}

double rel_diff(const Field& a, const Field& b) {
  return lebesgue_norm(a - b, 2.0) / lebesgue_norm(b, 2.0);
}

AsymptoticState data(const Grid& g, double amp_u, double amp_a) {
  Field up = gaussian(g, 1.5, amp_u);
  Field a = amp_a * laplacian(gaussian(g, 1.5));
  Field ad = (0.5 * amp_a) * laplacian(gaussian(g, 1.2));
  return make_asymptotic_state(up, WavePair{a, ad, 0.0});
}

}  // namespace

TEST_CASE("phi1 series and closed form agree") {
  for (double th : {1e-6, 5e-3, 1.5e-2, 0.7, -2.0}) {
    // (e^{-i th} - 1) / (-i th) without cancellation
    double h = std::sin(0.5 * th);
    Complex exact = Complex(-2.0 * h * h, -std::sin(th)) / Complex(0.0, -th);
    CHECK(std::abs(detail::phi1_imag(th) - exact) < 1e-14);
  }
}

TEST_CASE("with u = 0 the wave part is the exact free flow") {
  Grid g(2, 64, 16.0);
  ZakharovState s{Field(g), laplacian(gaussian(g, 1.5)), gaussian(g, 2.0) - gaussian(g, 2.0), 0.0};
  StepperConfig cfg;
  cfg.dt = 0.1;
  auto out = evolve_full(s, 3.0, cfg);
  REQUIRE_FALSE(out.result.aborted);
  WavePair want = wave_free(WavePair{s.a, s.a_dot, 0.0}, 3.0);
  const auto& last = out.trajectory.states.back();
  CHECK(last.time == doctest::Approx(3.0));
  CHECK(max_abs_difference(last.a, want.a) < 1e-12);
  CHECK(max_abs_difference(last.a_dot, want.a_dot) < 1e-12);
  CHECK(out.trajectory.size() == 31u);
}

TEST_CASE("full system conserves mass and energy") {
  Grid g(2, 128, 16.0);
  ZakharovState s = packet(g, 0.8, 0.5);
  StepperConfig cfg;
  cfg.dt = 0.01;
  cfg.store_every = 100;
  auto out = evolve_full(s, 4.0, cfg);
  REQUIRE_FALSE(out.result.aborted);
  double m0 = mass(s.u), e0 = energy(s);
  for (const auto& st : out.trajectory.states) {
    CHECK(std::abs(mass(st.u) - m0) <= 1e-8 * m0);
    CHECK(std::abs(energy(st) - e0) <= 1e-4 * std::abs(e0));
  }
}

TEST_CASE("strang splitting is second order and reversible") {
  Grid g(2, 128, 16.0);
  ZakharovState s = packet(g, 0.8, 0.5);
  auto run = [&](double dt) {
    StepperConfig cfg;
    cfg.dt = dt;
    cfg.store_every = 1000000;
    return evolve_full(s, 1.0, cfg).trajectory.states.back();
  };
  auto a = run(0.04), b = run(0.02), c = run(0.01);
  double e1 = lebesgue_norm(a.u - b.u, 2.0), e2 = lebesgue_norm(b.u - c.u, 2.0);
  CHECK(std::log2(e1 / e2) >= 1.9);

  // The dealias projection is not invertible; reversibility holds once the
  // masked-off content is negligible, hence the finer grid.
  Grid fine(2, 256, 16.0);
  s = packet(fine, 0.8, 0.5);
  StepperConfig fwd;
  fwd.dt = 0.02;
  auto there = evolve_full(s, 1.0, fwd).trajectory.states.back();
  StepperConfig back = fwd;
  back.dt = -0.02;
  auto again = evolve_full(there, 0.0, back).trajectory.states.back();
  CHECK(again.time == doctest::Approx(0.0));
  CHECK(max_abs_difference(again.u, s.u) < 1e-9);
  CHECK(max_abs_difference(again.a, s.a) < 1e-9);
}

TEST_CASE("difference system reproduces the full system") {
  Grid g(2, 64, 16.0);
  Profile p(ProfileKind::simple, data(g, 0.5, 0.4));
  DifferenceState d0 = zero_difference_state(g, 3.0);
  d0.v = 0.05 * gaussian(g, 2.0);
  d0.v.set_kind(Kind::complex);
  StepperConfig cfg;
  cfg.dt = 0.0025;
  cfg.store_every = 1000000;
  auto diff = evolve_difference(d0, p, 4.0, cfg);
  REQUIRE_FALSE(diff.result.aborted);
  ProfileValue a0 = p.evaluate(3.0);
  ZakharovState z0{a0.u_a + d0.v, a0.a_a + d0.b, a0.a_a_dot + d0.b_dot, 3.0};
  auto full = evolve_full(z0, 4.0, cfg);
  const auto& dv = diff.trajectory.states.back();
  const auto& fu = full.trajectory.states.back();
  ProfileValue a1 = p.evaluate(4.0);
  CHECK(max_abs_difference(a1.u_a + dv.v, fu.u) < 1e-6);
  CHECK(max_abs_difference(a1.a_a + dv.b, fu.a) < 1e-6);
}

TEST_CASE("frozen trajectory stores free flows exactly up to float rounding") {
  Grid g(2, 32, 8.0);
  FrozenTrajectory fr(g, true);
  Field v0 = to_frequency(Field(Field::sample(g, [](const std::array<double, 3>& x) {
    return Complex(std::exp(-r2(x) / 2), 0.0);
  })));
  Field b0 = to_frequency(laplacian(gaussian(g, 1.5)));
  Field bd0 = to_frequency(gaussian(g, 1.0) - gaussian(g, 1.0));
  dealias_inplace(v0);
  dealias_inplace(b0);
  for (double t : {1.0, 2.0, 3.0}) {
    Field v = v0;
    schrodinger_phase_inplace(v, t);
    Field b = b0, bd = bd0;
    wave_rotate_inplace(b, bd, t);
    fr.append(t, v, b, bd);
  }
  CHECK(fr.covers(2.5));
  CHECK_FALSE(fr.covers(3.5));
  Field v, b, bd;
  fr.at_hat(2.37, v, b, &bd);
  Field vw = v0;
  schrodinger_phase_inplace(vw, 2.37);
  Field bw = b0, bdw = bd0;
  wave_rotate_inplace(bw, bdw, 2.37);
  CHECK(rel_diff(v, vw) < 1e-6);
  CHECK(rel_diff(b, bw) < 1e-6);
  CHECK_THROWS_AS(fr.at_hat(0.5, v, b), std::out_of_range);
  CHECK_THROWS_AS(fr.append(2.5, v, b, bd), std::invalid_argument);
  CHECK_FALSE(fr.has_v_dot());
}

TEST_CASE("linearized system driven by its own solution reproduces it") {
  Grid g(2, 64, 16.0);
  Profile p(ProfileKind::simple, data(g, 0.5, 0.4));
  StepperConfig cfg;
  cfg.dt = -0.02;
  SplitStepIntegrator integ(SystemKind::difference, zero_difference_state(g, 6.0), cfg, &p);
  FrozenTrajectory fr(g, true);
  auto res = evolve(integ, 3.0, [&](const SplitStepIntegrator& it) { record(fr, it, true); });
  REQUIRE_FALSE(res.aborted);
  REQUIRE(fr.has_v_dot());
  auto lin = evolve_linearized(zero_difference_state(g, 6.0), fr, p, 3.0, cfg, true);
  REQUIRE_FALSE(lin.result.aborted);
  DifferenceState d = integ.state();
  const auto& l = lin.trajectory.states.back();
  CHECK(rel_diff(l.v, d.v) < 1e-4);
  CHECK(rel_diff(l.b, d.b) < 1e-4);
  REQUIRE(l.v_dot.has_value());
  CHECK(rel_diff(*l.v_dot, from_frequency(integ.v_dot_hat())) < 1e-4);
}

TEST_CASE("integrator rejects bad configurations") {
  Grid g(2, 16, 8.0);
  StepperConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_AS(SplitStepIntegrator(SystemKind::full, zero_difference_state(g, 0.0), cfg),
                  std::invalid_argument);
  cfg.dt = 0.1;
  CHECK_THROWS_AS(SplitStepIntegrator(SystemKind::difference, zero_difference_state(g, 0.0), cfg),
                  std::invalid_argument);
  SplitStepIntegrator ok(SystemKind::full, zero_difference_state(g, 0.0), cfg);
  CHECK_THROWS_AS(evolve(ok, -1.0, [](const SplitStepIntegrator&) {}), std::invalid_argument);
}
