#include "qbs/bdg.hpp"

#include <cmath>
#include <numbers>

#include "qbs/errors.hpp"

namespace qbs {

DynMatrix build_real_space(const QbsModel& model) {
  require_valid(model);
  const int n = model.n_modes;
  CMatrix m = CMatrix::Zero(2 * n, 2 * n);
  for (const auto& t : model.terms) {
    const int j = t.site_j;
    const int k = t.site_k;
    const cplx c = t.strength * unit_phase(t.phase);
    switch (t.kind) {
      case TermKind::BS:
        m(j, k) += c;
        m(k, j) += std::conj(c);
        m(n + j, n + k) -= std::conj(c);
        m(n + k, n + j) -= c;
        break;
      case TermKind::TMS:
        m(j, n + k) += c;
        m(k, n + j) += c;
        m(n + j, k) -= std::conj(c);
        m(n + k, j) -= std::conj(c);
        break;
      case TermKind::SMS:
        m(j, n + j) += 2.0 * c;
        m(n + j, j) -= 2.0 * std::conj(c);
        break;
      case TermKind::Onsite:
        m(j, j) += t.strength;
        m(n + j, n + j) -= t.strength;
        break;
      case TermKind::Damping:
        m(j, j) -= kI * (t.strength / 2.0);
        m(n + j, n + j) -= kI * (t.strength / 2.0);
        break;
    }
  }
  return {std::move(m), Basis::ParticleHole, model.boundary, model.has_damping()};
}

CMatrix quadrature_transform(int n_modes) {
  const int n = n_modes;
  const double r = 1.0 / std::numbers::sqrt2;
  CMatrix lam = CMatrix::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    lam(2 * j, j) = r;
    lam(2 * j, n + j) = r;
    lam(2 * j + 1, j) = -kI * r;
    lam(2 * j + 1, n + j) = kI * r;
  }
  return lam;
}

DynMatrix to_quadrature(const DynMatrix& m) {
  if (m.basis == Basis::Quadrature) return m;
  const CMatrix lam = quadrature_transform(m.n_modes());
  DynMatrix out = m;
  out.data = lam * (-kI * m.data) * lam.adjoint();
  out.basis = Basis::Quadrature;
  return out;
}

DynMatrix from_quadrature(const DynMatrix& k) {
  if (k.basis == Basis::ParticleHole) return k;
  const CMatrix lam = quadrature_transform(k.n_modes());
  DynMatrix out = k;
  out.data = kI * (lam.adjoint() * k.data * lam);
  out.basis = Basis::ParticleHole;
  return out;
}

RMatrix real_drift(const DynMatrix& k, double tol) {
  if (k.basis != Basis::Quadrature) throw ValidationError("real_drift needs a quadrature-basis matrix");
  const double scale = std::max(1.0, k.data.cwiseAbs().maxCoeff());
  if (k.data.imag().cwiseAbs().maxCoeff() > tol * scale)
    throw NumericalError("quadrature drift has a non-negligible imaginary part");
  return k.data.real();
}

RMatrix gauge_rotation(std::span<const double> angles) {
  const int n = static_cast<int>(angles.size());
  RMatrix r = RMatrix::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const double c = std::cos(angles[j]);
    const double s = std::sin(angles[j]);
    r(2 * j, 2 * j) = c;
    r(2 * j, 2 * j + 1) = s;
    r(2 * j + 1, 2 * j) = -s;
    r(2 * j + 1, 2 * j + 1) = c;
  }
  return r;
}

DynMatrix rotate_gauge(const DynMatrix& k, std::span<const double> angles) {
  if (k.basis != Basis::Quadrature) throw ValidationError("rotate_gauge needs a quadrature-basis matrix");
  if (static_cast<int>(angles.size()) != k.n_modes())
    throw ValidationError("rotate_gauge: expected " + std::to_string(k.n_modes()) + " angles, got " +
                          std::to_string(angles.size()));
  const CMatrix r = gauge_rotation(angles).cast<cplx>();
  DynMatrix out = k;
  out.data = r * k.data * r.transpose();
  return out;
}

double particle_hole_residual(const DynMatrix& m) {
  if (m.basis != Basis::ParticleHole) throw ValidationError("particle_hole_residual needs a particle-hole matrix");
  const int n = m.n_modes();
  CMatrix flipped(2 * n, 2 * n);
  const CMatrix c = m.data.conjugate();
  flipped.topLeftCorner(n, n) = c.bottomRightCorner(n, n);
  flipped.topRightCorner(n, n) = c.bottomLeftCorner(n, n);
  flipped.bottomLeftCorner(n, n) = c.topRightCorner(n, n);
  flipped.bottomRightCorner(n, n) = c.topLeftCorner(n, n);
  return (flipped + m.data).cwiseAbs().maxCoeff();
}

BlochMatrix::BlochMatrix(int n_cell, std::vector<std::pair<int, CMatrix>> hops)
    : n_cell_(n_cell), hops_(std::move(hops)) {}

CMatrix BlochMatrix::operator()(double q) const {
  CMatrix out = CMatrix::Zero(2 * n_cell_, 2 * n_cell_);
  for (const auto& [r, block] : hops_) out += block * unit_phase(q * r);
  return out;
}

BlochMatrix build_bloch(const QbsModel& model) {
  require_valid(model);
  if (model.boundary != Boundary::Periodic) throw ValidationError("Bloch matrix needs a periodic model");
  const int nc = model.unit_cell;
  const int n = model.n_modes;
  const int cells = n / nc;
  if (!equivalent_terms(translated(model, nc), model))
    throw ValidationError("model is not invariant under translation by one unit cell");

  const CMatrix m = build_real_space(model).data;
  std::vector<std::pair<int, CMatrix>> hops;
  for (int r = 0; r < cells; ++r) {
    CMatrix block(2 * nc, 2 * nc);
    for (int bi = 0; bi < 2; ++bi)
      for (int bj = 0; bj < 2; ++bj)
        block.block(bi * nc, bj * nc, nc, nc) = m.block(bi * n, bj * n + r * nc, nc, nc);
    if (block.cwiseAbs().maxCoeff() == 0.0) continue;
    if (cells > 1 && 2 * r == cells)
      throw ValidationError("couplings reach half the ring; use more unit cells for a Bloch matrix");
    hops.emplace_back(2 * r < cells ? r : r - cells, std::move(block));
  }
  return BlochMatrix(nc, std::move(hops));
}

std::vector<double> bloch_momenta(int n_cells) {
  std::vector<double> out(n_cells);
  for (int i = 0; i < n_cells; ++i) out[i] = 2.0 * std::numbers::pi * i / n_cells;
  return out;
}

}  // namespace qbs
