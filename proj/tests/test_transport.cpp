#include <doctest.h>

#include <numbers>

#include "qbs/errors.hpp"
#include "qbs/transport.hpp"
#include "support.hpp"

using namespace qbs;
using qbs::test::max_abs;

namespace {

constexpr double kPi = std::numbers::pi;

QbsModel lossy_dimer(double J, double gamma) { return build_preset(TwoModeBkcParams{J, J, 0.0, 0.0, gamma}); }

}  // namespace

TEST_CASE("susceptibility matches the oracle resolvent") {
  const auto data = qbs::test::load_json("oracles.json");
  for (const auto& c : data.at("cases")) {
    CAPTURE(c.at("name").get<std::string>());
    const auto r = susceptibility(load_model(c.at("model").dump()), {}, c.at("omega").get<double>());
    CHECK(r.kind == ResponseKind::Susceptibility);
    CHECK(max_abs(r.data - qbs::test::read_matrix(c.at("chi"))) < 1e-10);
  }
}

TEST_CASE("balanced dimer: one-way quadrature response") {
  const double gamma = 1.0, J = gamma / 4;
  const auto r = susceptibility(lossy_dimer(J, gamma), {}, 0.0);
  CHECK(r.label(3) == "p1");
  CHECK(std::abs(r.data(3, 0) - 8 * J / (gamma * gamma)) < 1e-12);  // p2 <- x1
  CHECK(std::abs(r.data(0, 3)) < 1e-12);                            // x1 <- p2
  for (int i = 0; i < 4; ++i) CHECK(std::abs(r.data(i, i) + 2 / gamma) < 1e-12);

  const auto report = nonreciprocity_report(r);
  bool found = false;
  for (const auto& p : report)
    if (p.a == 0 && p.b == 3) {
      found = true;
      CHECK(p.flagged);
      CHECK(p.forward == doctest::Approx(2.0));
      CHECK(p.backward < 1e-12);
    }
  CHECK(found);
}

TEST_CASE("rotated quadratures trade the one-way entry") {
  const double gamma = 2.0, J = gamma / 4, s = 1 / (gamma * gamma);
  const auto m = lossy_dimer(J, gamma);
  for (double phi : linspace(-kPi, kPi, 17)) {
    CAPTURE(phi);
    const std::vector<double> gauge{phi, phi};
    const auto r = susceptibility(m, gauge, 0.0);
    CHECK(std::abs(r.data(3, 0) - 8 * J * std::pow(std::cos(phi), 2) * s) < 1e-12);  // p2 <- x1
    CHECK(std::abs(r.data(2, 1) + 8 * J * std::pow(std::sin(phi), 2) * s) < 1e-12);  // x2 <- p1
    CHECK(std::abs(r.data(2, 0) - 4 * J * std::sin(2 * phi) * s) < 1e-12);           // x2 <- x1
    CHECK(std::abs(r.data(3, 1) + 4 * J * std::sin(2 * phi) * s) < 1e-12);           // p2 <- p1
  }
  CHECK_THROWS_AS(susceptibility(m, std::vector<double>{0.1}, 0.0), ValidationError);
}

TEST_CASE("undamped resonance is reported, not returned") {
  const auto m = build_preset(TwoModeBkcParams{1.0, 0.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS(susceptibility(m, {}, 1.0), NumericalError);
  CHECK_NOTHROW(susceptibility(m, {}, 0.5));
  CHECK_THROWS_AS(susceptibility(m, {}, NAN), ValidationError);
}

TEST_CASE("passive lossless network scatters unitarily") {
  QbsModel m;
  m.n_modes = 3;
  m.terms = {bs(0, 1, 0.7, 0.4), bs(1, 2, 0.3, -1.0), onsite(0, 0.2), onsite(2, -0.4)};
  PortSpec spec;
  spec.ports = {{0, 1.0}, {1, 0.5}, {2, 2.0}};
  for (double w : {0.0, 0.3, -1.1}) {
    spec.omega = w;
    const auto s = scattering(m, spec, {});
    CHECK(s.kind == ResponseKind::Scattering);
    CHECK(max_abs(s.data * s.data.adjoint() - CMatrix::Identity(6, 6)) < 1e-12);
  }
}

TEST_CASE("gain threshold of the ported dimer") {
  const double gamma = 1.0;
  PortSpec spec;
  spec.ports = {{0, gamma}, {1, gamma}};
  for (auto [J, expected] : {std::pair{0.1, 0.8}, std::pair{0.125, 1.0}, std::pair{0.2, 1.6}}) {
    const auto s = scattering(build_preset(TwoModeBkcParams{J, J, 0.0, 0.0, 0.0}), spec, {});
    CHECK(std::abs(s.data(3, 0)) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(s.data(0, 3)) < 1e-12);
  }
}

TEST_CASE("port specification checks") {
  const auto m = lossy_dimer(0.25, 1.0);
  PortSpec spec;
  CHECK_THROWS_AS(scattering(m, spec, {}), ValidationError);
  spec.ports = {{0, 1.0}, {0, 1.0}};
  CHECK_THROWS_AS(scattering(m, spec, {}), ValidationError);
  spec.ports = {{2, 1.0}};
  CHECK_THROWS_AS(scattering(m, spec, {}), ValidationError);
  spec.ports = {{0, -1.0}};
  CHECK_THROWS_AS(scattering(m, spec, {}), ValidationError);
  spec.ports = {{0, 1.0}};
  spec.internal_loss = {0.1};
  CHECK_THROWS_AS(scattering(m, spec, {}), ValidationError);
  spec.internal_loss = {0.1, -0.1};
  CHECK_THROWS_AS(scattering(m, spec, {}), ValidationError);
  spec.internal_loss = {0.1, 0.1};
  const auto s = scattering(m, spec, {});
  CHECK(s.modes == std::vector<int>{0});
  CHECK(s.data.rows() == 2);
}

TEST_CASE("three-port chain amplifies one way") {
  ChainScanParams p;
  p.omegas = {0.0};
  const auto x = chain_scattering_scan(p).front();
  CHECK(x.gain_right > 1.0);
  CHECK(x.gain_left < 1.0);
  p.theta = kPi / 2;
  const auto y = chain_scattering_scan(p).front();
  CHECK(y.gain_left > 1.0);
  CHECK(y.gain_right < 1.0);

  p.theta = 0.0;
  p.omegas.clear();
  const auto rows = chain_scattering_scan(p);
  CHECK(rows.size() == 201);
  CHECK(rows.front().omega == -3.0);
  CHECK(rows.back().omega == 3.0);
  for (const auto& r : rows) CHECK(r.reflection <= 1.0 + 1e-9);

  p.n_sites = 12;
  CHECK_THROWS_AS(chain_scattering_scan(p), ValidationError);
}
