#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "zscatter/asymptotics.hpp"

using namespace zscatter;

namespace {

constexpr double pi = std::numbers::pi;

double r2(const std::array<double, 3>& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }

Field gaussian(const Grid& g, double sigma, double amp = 1.0) {
  return Field::sample(
      g, [=](const std::array<double, 3>& x) { return amp * std::exp(-0.5 * r2(x) / (sigma * sigma)); },
      Kind::real);
}

AsymptoticState data(const Grid& g, double amp_u, double amp_a, double amp_ad) {
  Field up = gaussian(g, 1.0, amp_u);
  Field a = amp_a * laplacian(gaussian(g, 1.5));
  Field ad = amp_ad * laplacian(gaussian(g, 1.2));
  return make_asymptotic_state(up, WavePair{a, ad, 0.0});
}

double rel(const Field& a, const Field& b) {
  return lebesgue_norm(a - b, 2.0) / lebesgue_norm(b, 2.0);
}

}  // namespace

TEST_CASE("asymptotic state projects wave data and reports regularity") {
  Grid g(3, 32, 12.0);
  AsymptoticState s = data(g, 1.0, 0.5, 0.3);
  CHECK(is_mean_zero(s.wave.a));
  CHECK(is_mean_zero(s.wave.a_dot));
  CHECK(s.wave.a.is_real());
  bool found = false;
  for (const auto& e : s.regularity.norms) {
    CHECK(std::isfinite(e.value));
    if (e.name == "u_plus_L1") {
      found = true;
      CHECK(e.value == doctest::Approx(std::pow(2 * pi, 1.5)).epsilon(1e-10));
    }
  }
  CHECK(found);

  Field one = Field::sample(g, [](const std::array<double, 3>&) { return 1.0; }, Kind::real);
  AsymptoticState keep = make_asymptotic_state(gaussian(g, 1.0), WavePair{one, one, 0.0},
                                               ZeroModePolicy::free);
  CHECK_FALSE(is_mean_zero(keep.wave.a));
  CHECK_THROWS_AS(Profile(ProfileKind::corrected, keep), std::invalid_argument);
}

TEST_CASE("simple profile remainder is -A0 u0 and matches its definition") {
  Grid g(3, 32, 12.0);
  Profile p(ProfileKind::simple, data(g, 1.0, 0.5, 0.3));
  for (double t : {1.0, 2.5}) {
    Field r = p.r1(t);
    Field want = multiply(p.u0(t), p.a0(t).a);
    want *= -1.0;
    CHECK(max_abs_difference(r, want) < 1e-15);
    CHECK(rel(remainder_R1_generic(p, t), r) < 1e-8);
    ProfileValue v = evaluate_profile(p, t);
    CHECK(max_abs_difference(v.u_a, schrodinger_free(p.state().u_plus, t)) < 1e-13);
  }
}

TEST_CASE("corrected profile: closed remainder equals the generic one") {
  Grid g(3, 64, 14.0);
  Profile p(ProfileKind::corrected, data(g, 1.0, 0.5, 0.3));
  for (double t : {1.5, 3.0}) {
    Field closed = remainder_R1_closed(p, t);
    Field generic = remainder_R1_generic(p, t);
    CHECK(rel(generic, closed) < 1e-7);
  }
}

TEST_CASE("f and its derivatives") {
  Grid g(3, 64, 14.0);
  Profile p(ProfileKind::corrected, data(g, 1.0, 0.5, 0.3));
  const double t = 2.0;
  FParts fp = compute_f_and_derivatives(p, t);
  Field a = p.a0(t).a;
  CHECK(max_abs_difference(fp.lap_f, 2.0 * a) < 1e-12);
  const double h = 1e-3;
  Field fd = (1.0 / (12 * h)) * (-1.0 * p.f_parts(t + 2 * h).f + 8.0 * p.f_parts(t + h).f -
                                 8.0 * p.f_parts(t - h).f + p.f_parts(t - 2 * h).f);
  CHECK(max_abs_difference(fd, fp.f_t) < 1e-9);
  // P f = t df/dt + x.grad f, evaluated directly.
  Field pf = t * fp.f_t;
  for (int d = 0; d < 3; ++d) {
    pf += multiply_by_function(fp.grad_f[static_cast<std::size_t>(d)],
                               [d](const std::array<double, 3>& x) { return x[d]; });
  }
  CHECK(max_abs_difference(fp.pf, pf) < 1e-8 * max_abs(pf));
}

TEST_CASE("densities and the wave remainder") {
  Grid g(3, 32, 12.0);
  AsymptoticState s = data(g, 1.0, 0.5, 0.3);
  Profile simple(ProfileKind::simple, s);
  Profile corrected(ProfileKind::corrected, s);
  const double t = 2.0;
  Field u = simple.u0(t);
  CHECK(max_abs_difference(simple.rho(t), abs_squared(u)) < 1e-15);
  Field f = corrected.f_parts(t).f;
  Field want = abs_squared(u);
  for (std::size_t i = 0; i < want.size(); ++i) want[i] *= (1 + f[i].real()) * (1 + f[i].real());
  CHECK(max_abs_difference(corrected.rho(t), want) < 1e-14);
  CHECK(max_abs_difference(corrected.evaluate(t).u_a, multiply(u, 1.0 * f + Field::sample(g, [](const std::array<double, 3>&) { return 1.0; }))) < 1e-14);

  auto [r2f, wr2] = remainder_R2(simple, t);
  Field lap = laplacian(abs_squared(u));
  CHECK(max_abs_difference(r2f, -1.0 * lap) < 1e-13);
  CHECK(max_abs_difference(omega_power(wr2, 1.0), r2f) < 1e-12);
  CHECK(r2f.is_real());

  CouplingTerms c = corrected.coupling_terms(t);
  CHECK(max_abs_difference(c.r1, corrected.r1_closed(t)) < 1e-15);
  CHECK(max_abs_difference(c.rho_a, corrected.rho(t)) < 1e-15);
}

TEST_CASE("zero-wave profile") {
  Grid g(2, 64, 16.0);
  Profile p(ProfileKind::zero_wave, data(g, 0.1, 0.5, 0.3));
  CHECK(max_abs(p.r1(2.0)) == 0.0);
  ProfileValue v = p.evaluate(2.0);
  CHECK(max_abs(v.a_a) == 0.0);
  CHECK(lebesgue_norm(remainder_R1_generic(p, 2.0), 2.0) < 1e-9 * lebesgue_norm(v.u_a, 2.0));
  CouplingTerms c = p.coupling_terms(2.0);
  CHECK(max_abs(c.a_a) == 0.0);
}

TEST_CASE("late-time wrappers refuse t < 1") {
  Grid g(2, 16, 8.0);
  Profile p(ProfileKind::simple, data(g, 1.0, 0.1, 0.1));
  CHECK_THROWS_AS(evaluate_profile(p, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(remainder_R2(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(remainder_R1_closed(p, 2.0), std::logic_error);
}
