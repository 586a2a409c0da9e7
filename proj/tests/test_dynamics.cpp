#include <doctest.h>

#include <numbers>

#include "qbs/dynamics.hpp"
#include "qbs/errors.hpp"
#include "support.hpp"

using namespace qbs;
using qbs::test::max_abs;

namespace {

QbsModel squeeze(double delta, double kappa) { return build_preset(TwoModeSqueezeParams{delta, kappa}); }

}  // namespace

TEST_CASE("propagator matches the oracle matrix exponential") {
  const auto data = qbs::test::load_json("oracles.json");
  for (const auto& c : data.at("cases")) {
    CAPTURE(c.at("name").get<std::string>());
    const auto m = build_real_space(load_model(c.at("model").dump()));
    const double t = c.at("t").get<double>();
    const auto p = propagate(m, t);
    CHECK(p.basis == Basis::ParticleHole);
    CHECK(max_abs(p.G - qbs::test::read_matrix(c.at("G"))) < 1e-10);
    // The quadrature propagator is the same map in the other basis.
    const auto q = propagate(to_quadrature(m), t);
    const CMatrix lam = quadrature_transform(m.n_modes());
    CHECK(max_abs(q.G - lam * p.G * lam.adjoint()) < 1e-10);
    CHECK(q.G.imag().cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(p.real(), ValidationError);
  }
}

TEST_CASE("propagation guards") {
  const auto m = build_real_space(squeeze(0.0, 1.0));
  CHECK_THROWS_AS(propagate(m, 400.0), NumericalError);
  CHECK_THROWS_AS(propagate(m, NAN), ValidationError);
  CHECK(max_abs(propagate(m, 0.0).G - CMatrix::Identity(4, 4)) == 0.0);
}

TEST_CASE("damping-free propagators are symplectic") {
  QbsModel mdl;
  mdl.n_modes = 3;
  mdl.terms = {bs(0, 1, 0.7, 0.3), tms(1, 2, 0.4, 1.1), sms(0, 0.25, 0.5), onsite(2, 0.3)};
  const RMatrix om = symplectic_form(3);
  CHECK(om(0, 1) == 1.0);
  CHECK(om(1, 0) == -1.0);
  for (double t : {0.3, 2.0, 7.5}) {
    const RMatrix g = propagate(to_quadrature(build_real_space(mdl)), t).real();
    CHECK(max_abs((g * om * g.transpose() - om).cast<cplx>()) < 1e-10);
  }
}

TEST_CASE("two-mode squeezing coefficients") {
  for (auto [delta, kappa] : {std::pair{1.0, 0.6}, std::pair{1.0, 1.4}, std::pair{0.5, 0.5}}) {
    const auto m = build_real_space(squeeze(delta, kappa));
    for (double t : {0.5, 3.0, 9.0}) {
      CAPTURE(t);
      const auto p = propagate(m, t);
      const auto c = squeeze_coefficients(delta, kappa, t);
      CHECK(std::abs(p.G(0, 0) - c.A) < 1e-9 * std::max(1.0, std::abs(c.A)));
      CHECK(std::abs(p.G(0, 3) - c.B) < 1e-9 * std::max(1.0, std::abs(c.B)));
      CHECK(std::norm(c.A) - std::norm(c.B) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  CHECK(squeeze_rate(1.0, 1.05) == doctest::Approx(std::sqrt(1.05 * 1.05 - 1.0)));
  CHECK(squeeze_period(1.0, 0.6) == doctest::Approx(std::numbers::pi / 0.8));
  CHECK(squeeze_peak(1.0, 0.6) == doctest::Approx(2.0));
  CHECK(squeeze_at_ep(1.0, 1.0, 2.0) == doctest::Approx(std::sqrt(5.0) + 2.0));
}

TEST_CASE("squeezing factor fits") {
  const auto grow = squeezing_factor(squeeze(1.0, 1.05), linspace(0.0, 40.0, 801));
  CHECK(grow.regime == RegimeLabel::PurelyImaginary);
  REQUIRE(grow.rate);
  CHECK(*grow.rate == doctest::Approx(squeeze_rate(1.0, 1.05)).epsilon(1e-3));

  const auto osc = squeezing_factor(squeeze(1.0, 0.95), linspace(0.0, 60.0, 6001));
  CHECK(osc.regime == RegimeLabel::PurelyReal);
  REQUIRE(osc.period);
  REQUIRE(osc.s_max);
  CHECK(*osc.period == doctest::Approx(squeeze_period(1.0, 0.95)).epsilon(1e-4));
  CHECK(*osc.s_max == doctest::Approx(squeeze_peak(1.0, 0.95)).epsilon(1e-4));

  const auto ep = squeezing_factor(squeeze(1.0, 1.0), linspace(0.0, 10.0, 101));
  CHECK(ep.regime == RegimeLabel::ExceptionalPoint);
  for (std::size_t i = 0; i < ep.times.size(); ++i)
    CHECK(std::abs(ep.S[i] - squeeze_at_ep(1.0, 1.0, ep.times[i])) < 1e-6);
  // Linear growth at the EP: the late-time slope approaches delta + kappa.
  const auto late = squeezing_factor(squeeze(0.6, 0.6), linspace(50.0, 60.0, 101));
  CHECK((late.S.back() - late.S.front()) / 10.0 == doctest::Approx(1.2).epsilon(1e-3));

  const auto still = squeezing_factor(squeeze(1.0, 0.0), linspace(0.0, 5.0, 20));
  REQUIRE(still.s_max);
  CHECK(*still.s_max == doctest::Approx(1.0));
  CHECK_FALSE(still.period);
}

TEST_CASE("squeezing factor input checks") {
  CHECK_THROWS_AS(squeezing_factor(squeeze(1.0, 0.5), linspace(0.0, 1.0, 5)), NumericalError);
  CHECK_THROWS_AS(squeezing_factor(squeeze(1.0, 0.5), linspace(0.0, 0.5, 30)), NumericalError);
  CHECK_THROWS_AS(squeezing_factor(squeeze(1.0, 0.5), linspace(1.0, 0.0, 30)), ValidationError);
  CHECK_THROWS_AS(squeezing_factor(build_preset(BkcParams{3, 1.0, 0.2}), linspace(0.0, 1.0, 30)), ValidationError);
  CHECK_THROWS_AS(squeezing_factor(build_preset(TwoModeBkcParams{1.0, 0.2, 0.0, 0.0, 0.1}), linspace(0.0, 1.0, 30)),
                  ValidationError);
}

TEST_CASE("Gaussian states") {
  const auto vac = GaussianState::vacuum(2);
  CHECK(vac.n_modes() == 2);
  CHECK(std::abs(physicality_margin(vac)) < 1e-15);
  CHECK_NOTHROW(require_physical(vac));
  CHECK(entanglement(vac, {0}) == doctest::Approx(0.0));

  GaussianState bad = vac;
  bad.cov *= 0.5;
  CHECK_THROWS_AS(require_physical(bad), ValidationError);
  bad = vac;
  bad.cov(0, 1) = 0.1;
  CHECK_THROWS_AS(require_physical(bad), ValidationError);

  CHECK_THROWS_AS(entanglement(vac, {}), ValidationError);
  CHECK_THROWS_AS(entanglement(vac, {0, 1}), ValidationError);
  CHECK_THROWS_AS(entanglement(vac, {0, 0}), ValidationError);
  CHECK_THROWS_AS(entanglement(vac, {2}), ValidationError);
}

TEST_CASE("two-mode squeezed vacuum negativity") {
  // Resonant squeezing for time t gives r = kappa t and E_N = 2 r / ln 2.
  const double kappa = 0.8;
  const auto m = to_quadrature(build_real_space(squeeze(0.0, kappa)));
  for (double t : {0.1, 0.5, 2.0}) {
    const auto s = evolve_state(GaussianState::vacuum(2), propagate(m, t));
    CHECK(entanglement(s, {0}) == doctest::Approx(2 * kappa * t / std::log(2.0)).epsilon(1e-9));
    CHECK(entanglement(s, {1}) == doctest::Approx(2 * kappa * t / std::log(2.0)).epsilon(1e-9));
    CHECK(physicality_margin(s) > -1e-9 * s.cov.norm());
  }
  CHECK_THROWS_AS(evolve_state(GaussianState::vacuum(2), propagate(build_real_space(squeeze(0.0, kappa)), 1.0)),
                  ValidationError);
}

TEST_CASE("dynamics classes follow the spectral regime") {
  CHECK(classify_dynamics(build_real_space(squeeze(1.0, 1.05))) == DynamicsClass::Exponential);
  CHECK(classify_dynamics(build_real_space(squeeze(1.0, 0.95))) == DynamicsClass::Oscillatory);
  CHECK(classify_dynamics(build_real_space(squeeze(1.0, 1.02))) == DynamicsClass::Exponential);
  CHECK(classify_dynamics(build_real_space(squeeze(1.0, 0.98))) == DynamicsClass::Oscillatory);
  CHECK(classify_dynamics(build_real_space(squeeze(1.0, 1.0))) == DynamicsClass::Exponential);
  CHECK(to_string(DynamicsClass::Mixed) == "mixed");

  CHECK(expected_dynamics(RegimeLabel::PurelyReal) == DynamicsClass::Oscillatory);
  CHECK(expected_dynamics(RegimeLabel::PurelyImaginary) == DynamicsClass::Exponential);
  CHECK(expected_dynamics(RegimeLabel::Complex) == DynamicsClass::Mixed);
  CHECK_FALSE(expected_dynamics(RegimeLabel::ExceptionalPoint));

  DynamicsOptions bad;
  bad.dt = 0.0;
  CHECK_THROWS_AS(classify_dynamics(build_real_space(squeeze(1.0, 0.5)), bad), ValidationError);
}

TEST_CASE("log trace covariance") {
  DynamicsOptions o;
  o.t_max = 10.0;
  o.dt = 0.5;
  const auto y = log_trace_covariance(build_real_space(squeeze(0.0, 1.0)), o);
  REQUIRE(y.size() == 21);
  CHECK(y[0] == doctest::Approx(std::log(2.0)));
  // tr cov = 2 cosh(2 t) for the resonant two-mode squeezer.
  CHECK(y[20] == doctest::Approx(std::log(2 * std::cosh(20.0))).epsilon(1e-12));
}

TEST_CASE("regime map on the SMS-extended dimer") {
  SmsBkcParams base;
  base.J = 1.0;
  const auto cells = regime_map(base, {0.0, 0.3}, {0.45, 0.95, 1.05, 1.65});
  REQUIRE(cells.size() == 8);
  int complex = 0;
  for (const auto& c : cells) {
    CAPTURE(c.eta);
    CAPTURE(c.g);
    if (c.spectral == RegimeLabel::Complex) ++complex;
    CHECK(c.comparable);
    CHECK(c.agree);
  }
  CHECK(complex >= 1);
  base.n_sites = 3;
  CHECK_THROWS_AS(regime_map(base, {0.0}, {0.5}), ValidationError);
}
