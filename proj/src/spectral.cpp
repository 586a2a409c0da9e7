#include "qbs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qbs/errors.hpp"

namespace qbs {

namespace {

struct BalancedDrift {
  CMatrix k;      // D^{-1} K D
  RVector d;
  double norm = 0.0;  // ||K||_F before balancing
};

BalancedDrift balanced_drift(const DynMatrix& m) {
  BalancedDrift out;
  out.k = m.basis == Basis::Quadrature ? m.data : to_quadrature(m).data;
  if (!out.k.allFinite()) throw NumericalError("dynamical matrix has non-finite entries");
  out.norm = out.k.norm();
  out.d = balance(out.k);
  return out;
}

std::vector<int> sort_order(const CVector& lam) {
  std::vector<int> idx(lam.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (lam(a).real() != lam(b).real()) return lam(a).real() < lam(b).real();
    return lam(a).imag() < lam(b).imag();
  });
  return idx;
}

CVector sorted_values(const CVector& lam) {
  const auto idx = sort_order(lam);
  CVector out(lam.size());
  for (int i = 0; i < static_cast<int>(idx.size()); ++i) out(i) = lam(idx[i]);
  return out;
}

double gram_condition(const CMatrix& w, const std::vector<int>& cols) {
  if (cols.size() < 2) return 1.0;
  CMatrix sub(w.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) sub.col(c) = w.col(cols[c]).normalized();
  return condition_number(sub);
}

}  // namespace

std::string_view to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::PurelyReal: return "purely-real";
    case RegimeLabel::PurelyImaginary: return "purely-imaginary";
    case RegimeLabel::Complex: return "complex";
    case RegimeLabel::ExceptionalPoint: return "exceptional-point";
  }
  return "?";
}

SpectralResult eig(const DynMatrix& m, const SpectralOptions& opts) {
  const int dim = static_cast<int>(m.data.rows());
  SpectralResult out;
  out.basis = m.basis;
  if (dim == 0) return out;

  const auto bal = balanced_drift(m);
  Eigen::ComplexEigenSolver<CMatrix> es(bal.k, true);
  if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition did not converge");

  const auto idx = sort_order(kI * es.eigenvalues());
  CVector mu(dim);
  CMatrix w(dim, dim);
  for (int i = 0; i < dim; ++i) {
    mu(i) = es.eigenvalues()(idx[i]);
    w.col(i) = es.eigenvectors().col(idx[i]).normalized();
  }
  out.eigenvalues = kI * mu;
  out.matrix_norm = bal.norm;

  const double kb_norm = std::max(bal.k.norm(), std::numeric_limits<double>::min());
  for (int i = 0; i < dim; ++i)
    out.max_residual = std::max(out.max_residual, (bal.k * w.col(i) - mu(i) * w.col(i)).norm() / kb_norm);
  if (out.max_residual > opts.residual_tol) {
    std::ostringstream os;
    os << "eigen-residual " << out.max_residual << " exceeds tolerance " << opts.residual_tol;
    throw NumericalError(os.str());
  }

  out.vector_condition = condition_number(w);
  const double radius = std::max(opts.cluster_radius * bal.norm, 1e-12);
  out.clusters = cluster_values(out.eigenvalues, radius);
  for (const auto& c : out.clusters) {
    const double g = gram_condition(w, c);
    out.ep_diagnostic.push_back(g);
    if (c.size() > 1 && g > opts.defect_threshold) out.defective = true;
  }

  // Undo the balancing, then the quadrature map when the input was M.
  CMatrix right = bal.d.asDiagonal() * w;
  const CMatrix lam = quadrature_transform(dim / 2);
  if (m.basis == Basis::ParticleHole) right = lam.adjoint() * right;
  RVector scale(dim);
  for (int i = 0; i < dim; ++i) {
    scale(i) = right.col(i).norm();
    right.col(i) /= scale(i);
  }
  out.right = std::move(right);

  out.biorth_residual = std::numeric_limits<double>::infinity();
  if (out.vector_condition < 1e13) {
    CMatrix left = w.partialPivLu().inverse() * bal.d.cwiseInverse().asDiagonal();
    if (m.basis == Basis::ParticleHole) left = left * lam;
    for (int i = 0; i < dim; ++i) left.row(i) *= scale(i);
    out.biorth_residual = (left * out.right - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
    out.left = std::move(left);
  }
  return out;
}

CVector eigenvalues(const DynMatrix& m) {
  if (m.data.rows() == 0) return {};
  const auto bal = balanced_drift(m);
  Eigen::ComplexEigenSolver<CMatrix> es(bal.k, false);
  if (es.info() != Eigen::Success) throw NumericalError("eigen-decomposition did not converge");
  return sorted_values(kI * es.eigenvalues());
}

CVector eigenvalues(const CMatrix& m) {
  return eigenvalues(DynMatrix{m, Basis::ParticleHole, Boundary::Open, false});
}

Regime classify_regime(const SpectralResult& s, double tol) {
  Regime r;
  const auto& v = s.eigenvalues;
  if (v.size() == 0) return r;
  r.max_abs_real = v.real().cwiseAbs().maxCoeff();
  r.max_abs_imag = v.imag().cwiseAbs().maxCoeff();
  const cplx centre = v.mean();
  const double spread = (v.array() - centre).abs().maxCoeff();
  if (v.size() > 1 && spread < tol && s.defective) {
    r.label = RegimeLabel::ExceptionalPoint;
  } else if (r.max_abs_imag < tol) {
    r.label = RegimeLabel::PurelyReal;
  } else if (r.max_abs_real < tol) {
    r.label = RegimeLabel::PurelyImaginary;
  } else {
    r.label = RegimeLabel::Complex;
  }
  return r;
}

EpScan detect_ep(const std::function<QbsModel(double)>& family, const std::vector<double>& values,
                 const EpOptions& opts) {
  EpScan scan;
  scan.parameters = values;
  const int n = static_cast<int>(values.size());
  auto cond_at = [&](double p) {
    const auto s = eig(build_real_space(family(p)), opts.spectral);
    return std::isfinite(s.vector_condition) ? s.vector_condition : 1e300;
  };
  for (double p : values) {
    const auto s = eig(build_real_space(family(p)), opts.spectral);
    scan.labels.push_back(classify_regime(s, opts.regime_tol).label);
    scan.vector_condition.push_back(std::isfinite(s.vector_condition) ? s.vector_condition : 1e300);
  }

  // Candidate brackets as index ranges [lo, hi].
  std::vector<std::pair<int, int>> brackets;
  const auto& c = scan.vector_condition;
  for (int i = 0; i < n; ++i) {
    const bool peak = c[i] > opts.candidate_condition && (i == 0 || c[i] >= c[i - 1]) &&
                      (i == n - 1 || c[i] >= c[i + 1]);
    if (peak) brackets.emplace_back(std::max(i - 1, 0), std::min(i + 1, n - 1));
  }
  for (int i = 0; i + 1 < n; ++i)
    if (scan.labels[i] != scan.labels[i + 1]) brackets.emplace_back(std::max(i - 1, 0), std::min(i + 2, n - 1));
  std::sort(brackets.begin(), brackets.end());
  std::vector<std::pair<int, int>> merged;
  for (const auto& b : brackets) {
    if (!merged.empty() && b.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, b.second);
    else
      merged.push_back(b);
  }

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (const auto& [lo, hi] : merged) {
    // Golden-section maximization of cond(V); keep the best point seen,
    // including the grid samples inside the bracket.
    double best_p = values[lo];
    double best_c = c[lo];
    for (int i = lo; i <= hi; ++i)
      if (c[i] > best_c) best_c = c[i], best_p = values[i];
    double a = values[lo];
    double b = values[hi];
    if (b < a) std::swap(a, b);
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = cond_at(x1);
    double f2 = cond_at(x2);
    for (int it = 0; it < opts.refine_iterations && b - a > 0.0; ++it) {
      if (f1 > best_c) best_c = f1, best_p = x1;
      if (f2 > best_c) best_c = f2, best_p = x2;
      if (f1 >= f2) {
        b = x2, x2 = x1, f2 = f1;
        x1 = b - invphi * (b - a);
        f1 = cond_at(x1);
      } else {
        a = x1, x1 = x2, f1 = f2;
        x2 = a + invphi * (b - a);
        f2 = cond_at(x2);
      }
    }

    const auto s = eig(build_real_space(family(best_p)), opts.spectral);
    int worst = -1;
    for (int k = 0; k < static_cast<int>(s.clusters.size()); ++k)
      if (s.clusters[k].size() > 1 && (worst < 0 || s.ep_diagnostic[k] > s.ep_diagnostic[worst])) worst = k;
    if (worst >= 0 && s.ep_diagnostic[worst] > opts.spectral.defect_threshold) {
      EpPoint pt;
      pt.parameter = best_p;
      pt.order = static_cast<int>(s.clusters[worst].size());
      for (int k : s.clusters[worst]) pt.location += s.eigenvalues(k);
      pt.location /= static_cast<double>(pt.order);
      pt.gram_condition = s.ep_diagnostic[worst];
      scan.points.push_back(pt);
    } else {
      std::ostringstream os;
      os << "candidate in [" << values[lo] << ", " << values[hi] << "] not confirmed as an EP (best parameter "
         << best_p << ", eigenvector condition " << best_c << "); refine the sweep if an EP is expected";
      scan.warnings.push_back(os.str());
    }
  }
  return scan;
}

// ---------------------------------------------------------------------------

std::vector<cplx> two_mode_bkc_spectrum(double J, double kappa) {
  const cplx e = std::sqrt(cplx(J * J - kappa * kappa));
  std::vector<cplx> out{-e, -e, e, e};
  return out;
}

std::vector<cplx> bkc_obc_spectrum(int n_sites, double t, double Delta) {
  if (n_sites < 1) throw ValidationError("bkc-obc needs N >= 1");
  const cplx a = std::sqrt(cplx(t * t - Delta * Delta));
  std::vector<cplx> out;
  for (int n = 1; n <= n_sites; ++n) {
    const cplx e = a * std::cos(n * std::numbers::pi / (n_sites + 1));
    out.push_back(e);
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return out;
}

std::vector<cplx> bkc_pbc_spectrum(double t, double Delta, double phi_t, double q) {
  const double c = t * std::cos(phi_t);
  const cplx re = t * std::sin(phi_t) * std::sin(q);
  const cplx im = kI * std::sqrt(cplx(Delta * Delta - c * c)) * std::cos(q);
  return {re - im, re + im};
}

std::vector<cplx> squeezed_ssh_energy_squared(double t1, double t2, double g1, double g2, double k) {
  const double d2 = t1 * t1 + t2 * t2 - g1 * g1 - g2 * g2;
  const cplx base = d2 + 2.0 * (t1 * t2 - g1 * g2) * std::cos(k);
  const cplx twist = 2.0 * kI * (t1 * g2 - t2 * g1) * std::sin(k);
  return {base + twist, base - twist};
}

std::vector<cplx> squeezed_ssh_spectrum(double t1, double t2, double g1, double g2, double k) {
  std::vector<cplx> out;
  for (cplx x : squeezed_ssh_energy_squared(t1, t2, g1, g2, k)) {
    out.push_back(std::sqrt(x));
    out.push_back(-std::sqrt(x));
  }
  return out;
}

std::vector<cplx> analytic_spectrum(std::string_view preset, const std::map<std::string, double>& params,
                                    double q) {
  auto get = [&](const char* key) {
    auto it = params.find(key);
    if (it == params.end())
      throw ValidationError("analytic spectrum '" + std::string(preset) + "' needs parameter '" + key + "'");
    return it->second;
  };
  if (preset == "two-mode-bkc") return two_mode_bkc_spectrum(get("J"), get("kappa"));
  if (preset == "bkc-obc") {
    const double n = get("N");
    if (n != std::floor(n)) throw ValidationError("N must be an integer");
    return bkc_obc_spectrum(static_cast<int>(n), get("t"), get("Delta"));
  }
  if (preset == "bkc-pbc") return bkc_pbc_spectrum(get("t"), get("Delta"), get("phi_t"), q);
  if (preset == "squeezed-ssh") return squeezed_ssh_spectrum(get("t1"), get("t2"), get("g1"), get("g2"), q);
  throw ValidationError("no closed-form spectrum for preset '" + std::string(preset) + "'");
}

}  // namespace qbs
