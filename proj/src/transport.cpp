#include "qbs/transport.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "qbs/errors.hpp"

namespace qbs {

std::string ResponseMatrix::label(int channel) const {
  return (channel % 2 == 0 ? "x" : "p") + std::to_string(modes.at(channel / 2));
}

namespace {

RMatrix drift(const QbsModel& model) { return real_drift(to_quadrature(build_real_space(model))); }

std::vector<double> gauge_or_zero(std::span<const double> gauge, int n) {
  if (gauge.empty()) return std::vector<double>(n, 0.0);
  if (static_cast<int>(gauge.size()) != n)
    throw ValidationError("gauge needs " + std::to_string(n) + " angles, got " + std::to_string(gauge.size()));
  return {gauge.begin(), gauge.end()};
}

CMatrix resolvent(const RMatrix& k, double omega) {
  const int dim = static_cast<int>(k.rows());
  const CMatrix a = kI * omega * CMatrix::Identity(dim, dim) + k.cast<cplx>();
  // Reject near-singular probes explicitly instead of returning garbage.
  const double cond = condition_number(a);
  if (!(cond < 1e14)) {
    std::ostringstream os;
    os << "singular response at omega = " << omega << " (condition " << cond
       << "); add damping or move the probe off resonance";
    throw NumericalError(os.str());
  }
  return a.partialPivLu().inverse();
}

}  // namespace

ResponseMatrix susceptibility(const QbsModel& model, std::span<const double> gauge, double omega) {
  if (!std::isfinite(omega)) throw ValidationError("probe frequency must be finite");
  const int n = model.n_modes;
  ResponseMatrix out;
  out.kind = ResponseKind::Susceptibility;
  out.gauge = gauge_or_zero(gauge, n);
  out.omega = omega;
  for (int j = 0; j < n; ++j) out.modes.push_back(j);
  const CMatrix r = gauge_rotation(out.gauge).cast<cplx>();
  out.data = r * resolvent(drift(model), omega) * r.transpose();
  return out;
}

ResponseMatrix scattering(const QbsModel& model, const PortSpec& spec, std::span<const double> gauge) {
  const int n = model.n_modes;
  if (!std::isfinite(spec.omega)) throw ValidationError("probe frequency must be finite");
  if (spec.ports.empty()) throw ValidationError("scattering needs at least one port");
  if (!spec.internal_loss.empty() && static_cast<int>(spec.internal_loss.size()) != n)
    throw ValidationError("internal_loss needs one rate per mode");
  std::set<int> seen;
  for (const auto& p : spec.ports) {
    if (p.mode < 0 || p.mode >= n) throw ValidationError("port mode " + std::to_string(p.mode) + " out of range");
    if (!seen.insert(p.mode).second) throw ValidationError("duplicate port on mode " + std::to_string(p.mode));
    if (!(p.rate > 0.0) || !std::isfinite(p.rate)) throw ValidationError("port rates must be positive and finite");
  }
  for (double k : spec.internal_loss)
    if (!(k >= 0.0) || !std::isfinite(k)) throw ValidationError("internal loss must be non-negative and finite");

  RMatrix k = drift(model);
  std::vector<double> loss(n, 0.0);
  for (int j = 0; j < static_cast<int>(spec.internal_loss.size()); ++j) loss[j] += spec.internal_loss[j];
  for (const auto& p : spec.ports) loss[p.mode] += p.rate;
  for (int j = 0; j < n; ++j) {
    k(2 * j, 2 * j) -= loss[j] / 2.0;
    k(2 * j + 1, 2 * j + 1) -= loss[j] / 2.0;
  }

  ResponseMatrix out;
  out.kind = ResponseKind::Scattering;
  out.gauge = gauge_or_zero(gauge, n);
  out.omega = spec.omega;
  const CMatrix r = gauge_rotation(out.gauge).cast<cplx>();
  const CMatrix chi = r * resolvent(k, spec.omega) * r.transpose();

  const int np = static_cast<int>(spec.ports.size());
  out.data = CMatrix::Identity(2 * np, 2 * np);
  for (int a = 0; a < np; ++a) {
    out.modes.push_back(spec.ports[a].mode);
    for (int b = 0; b < np; ++b) {
      const double g = std::sqrt(spec.ports[a].rate * spec.ports[b].rate);
      out.data.block(2 * a, 2 * b, 2, 2) += g * chi.block(2 * spec.ports[a].mode, 2 * spec.ports[b].mode, 2, 2);
    }
  }
  return out;
}

std::vector<PairReport> nonreciprocity_report(const ResponseMatrix& r, double threshold) {
  std::vector<PairReport> out;
  const int dim = static_cast<int>(r.data.rows());
  for (int a = 0; a < dim; ++a)
    for (int b = a + 1; b < dim; ++b) {
      PairReport p;
      p.a = a;
      p.b = b;
      p.forward = std::abs(r.data(b, a));
      p.backward = std::abs(r.data(a, b));
      p.asymmetry = p.forward - p.backward;
      p.flagged = std::abs(p.asymmetry) > threshold;
      out.push_back(p);
    }
  return out;
}

std::vector<ChainScanRow> chain_scattering_scan(const ChainScanParams& p) {
  if (p.n_sites < 3 || p.n_sites % 2 == 0) throw ValidationError("chain scan needs an odd number of sites >= 3");
  const auto model = build_preset(BkcParams::from_hopping_pairing(p.n_sites, p.t, p.Delta, p.phi_t));
  const int mid = p.n_sites / 2;
  const int last = p.n_sites - 1;
  PortSpec spec;
  spec.ports = {{0, p.kappa_L}, {mid, p.kappa_M}, {last, p.kappa_R}};
  spec.internal_loss.assign(p.n_sites, p.internal_loss);
  const auto omegas = p.omegas.empty() ? linspace(-3.0 * p.t, 3.0 * p.t, 201) : p.omegas;

  Eigen::Vector2cd e(std::cos(p.theta), std::sin(p.theta));
  std::vector<ChainScanRow> rows;
  for (double w : omegas) {
    spec.omega = w;
    const auto s = scattering(model, spec, {});
    auto gain = [&](int out_port, int in_port) {
      return std::norm(e.dot(s.data.block(2 * out_port, 2 * in_port, 2, 2) * e));
    };
    rows.push_back({w, gain(2, 1), gain(0, 1), gain(1, 1)});
  }
  return rows;
}

}  // namespace qbs
