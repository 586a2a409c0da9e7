#include "qbs/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qbs/errors.hpp"

namespace qbs {

RMatrix Propagator::real() const {
  if (basis != Basis::Quadrature) throw ValidationError("real propagator needs the quadrature basis");
  return G.real();
}

Propagator propagate(const DynMatrix& m, double t, double magnitude_cap) {
  if (!std::isfinite(t)) throw ValidationError("propagation time must be finite");
  Propagator p;
  p.t = t;
  p.basis = m.basis;
  p.G = m.basis == Basis::ParticleHole ? expm(CMatrix(-kI * t * m.data)) : expm(CMatrix(t * m.data));
  if (!p.G.allFinite() || p.G.cwiseAbs().maxCoeff() > magnitude_cap) {
    std::ostringstream os;
    os << "propagator overflow at t = " << t << " (entries beyond " << magnitude_cap
       << "); use a shorter time in this unstable regime";
    throw NumericalError(os.str());
  }
  return p;
}

RMatrix symplectic_form(int n_modes) {
  RMatrix om = RMatrix::Zero(2 * n_modes, 2 * n_modes);
  for (int j = 0; j < n_modes; ++j) {
    om(2 * j, 2 * j + 1) = 1.0;
    om(2 * j + 1, 2 * j) = -1.0;
  }
  return om;
}

GaussianState GaussianState::vacuum(int n_modes) {
  return {RVector::Zero(2 * n_modes), 0.5 * RMatrix::Identity(2 * n_modes, 2 * n_modes)};
}

double physicality_margin(const GaussianState& s) {
  const int dim = static_cast<int>(s.cov.rows());
  const CMatrix h = s.cov.cast<cplx>() + 0.5 * kI * symplectic_form(dim / 2).cast<cplx>();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_physical(const GaussianState& s, double tol) {
  const int dim = static_cast<int>(s.mean.size());
  if (dim % 2 != 0 || s.cov.rows() != dim || s.cov.cols() != dim)
    throw ValidationError("Gaussian state dimensions are inconsistent");
  const double scale = std::max(1.0, s.cov.norm());
  if ((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() > tol * scale)
    throw ValidationError("covariance matrix is not symmetric");
  const double margin = physicality_margin(s);
  if (margin < -tol * scale) {
    std::ostringstream os;
    os << "unphysical state: smallest eigenvalue of cov + i Omega/2 is " << margin;
    throw ValidationError(os.str());
  }
}

GaussianState evolve_state(const GaussianState& s, const Propagator& p, double tol) {
  if (p.basis != Basis::Quadrature) throw ValidationError("evolve_state needs a quadrature-basis propagator");
  if (p.G.rows() != s.mean.size()) throw ValidationError("propagator and state dimensions differ");
  const double scale = std::max(1.0, p.G.cwiseAbs().maxCoeff());
  if (p.G.imag().cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NumericalError("quadrature propagator has a non-negligible imaginary part");
  const RMatrix g = p.G.real();
  GaussianState out{g * s.mean, g * s.cov * g.transpose()};
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  require_physical(out, tol);
  return out;
}

double entanglement(const GaussianState& s, const std::vector<int>& side_a) {
  const int n = s.n_modes();
  std::set<int> a(side_a.begin(), side_a.end());
  if (a.size() != side_a.size()) throw ValidationError("partition lists a mode twice");
  for (int j : a)
    if (j < 0 || j >= n) throw ValidationError("partition mode " + std::to_string(j) + " out of range");
  if (a.empty() || static_cast<int>(a.size()) == n) throw ValidationError("both sides of the partition must be nonempty");
  require_physical(s);

  RMatrix cov = s.cov;
  for (int j = 0; j < n; ++j) {
    if (a.count(j)) continue;
    cov.row(2 * j + 1) *= -1.0;
    cov.col(2 * j + 1) *= -1.0;
  }
  // nu are the moduli of the eigenvalues of i Omega cov, obtained from the
  // Hermitian matrix i L^T Omega L with cov = L L^T. A spectral square root
  // copes with the huge dynamic range of strongly squeezed states.
  Eigen::SelfAdjointEigenSolver<RMatrix> ce(cov);
  const RMatrix l = ce.eigenvectors() * ce.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const CMatrix h = kI * (l.transpose() * symplectic_form(n) * l).cast<cplx>();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  // Eigenvalues come as -nu_k, +nu_k; the upper half holds each nu once.
  double en = 0.0;
  for (int k = n; k < 2 * n; ++k) {
    const double nu = std::abs(es.eigenvalues()(k));
    if (nu < 0.5) en -= std::log2(2.0 * nu);
  }
  return en;
}

// ---------------------------------------------------------------------------

SqueezeCoefficients squeeze_coefficients(double delta, double kappa, double t) {
  const cplx s = std::sqrt(cplx(kappa * kappa - delta * delta));
  cplx sinh_over_s;
  if (std::abs(s * t) < 1e-6) {
    const cplx x2 = s * s * t * t;
    sinh_over_s = t * (1.0 + x2 / 6.0);
  } else {
    sinh_over_s = std::sinh(s * t) / s;
  }
  return {std::cosh(s * t) - kI * delta * sinh_over_s, kappa * sinh_over_s};
}

double squeeze_rate(double delta, double kappa) { return std::sqrt(kappa * kappa - delta * delta); }

double squeeze_period(double delta, double kappa) {
  return std::numbers::pi / std::sqrt(delta * delta - kappa * kappa);
}

double squeeze_peak(double delta, double kappa) { return std::sqrt((delta + kappa) / (delta - kappa)); }

double squeeze_at_ep(double delta, double kappa, double t) {
  return std::sqrt(1.0 + delta * delta * t * t) + kappa * t;
}

SqueezeTrace squeezing_factor(const QbsModel& model, const std::vector<double>& times) {
  if (model.n_modes != 2) throw ValidationError("squeezing factor needs a two-mode model");
  if (model.has_damping()) throw ValidationError("squeezing factor needs a damping-free model");
  constexpr std::size_t kMinSamples = 8;
  if (times.size() < kMinSamples) throw NumericalError("insufficient samples to fit: need at least 8 times");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!std::isfinite(times[i]) || (i > 0 && times[i] <= times[i - 1]))
      throw ValidationError("times must be finite and strictly increasing");

  const auto m = build_real_space(model);
  SqueezeTrace tr;
  tr.times = times;
  tr.regime = classify_regime(eig(m)).label;
  for (double t : times) {
    const auto p = propagate(m, t);
    // Row of a_1 in Psi(t) = G Psi(0): a_1 -> A a_1 + ... + B a_2^dag.
    tr.A.push_back(p.G(0, 0));
    tr.B.push_back(p.G(0, 3));
    tr.S.push_back(std::abs(p.G(0, 0)) + std::abs(p.G(0, 3)));
  }

  const std::size_t n = times.size();
  if (tr.regime == RegimeLabel::PurelyImaginary) {
    const std::size_t first = n - std::max<std::size_t>(5, (3 * n + 9) / 10);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(n - first);
    for (std::size_t i = first; i < n; ++i) {
      const double x = times[i];
      const double y = std::log(tr.S[i]);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    tr.rate = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  } else if (tr.regime == RegimeLabel::PurelyReal) {
    const auto [lo, hi] = std::minmax_element(tr.S.begin(), tr.S.end());
    if (*hi - *lo < 1e-9 * *hi) {
      tr.s_max = *hi;  // flat trace, nothing oscillates
    } else {
      std::vector<double> peak_t;
      std::vector<double> peak_s;
      for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(tr.S[i] > tr.S[i - 1] && tr.S[i] >= tr.S[i + 1])) continue;
        // Parabola through three samples (uniform or not).
        const double x0 = times[i - 1], x1 = times[i], x2 = times[i + 1];
        const double y0 = tr.S[i - 1], y1 = tr.S[i], y2 = tr.S[i + 1];
        const double d0 = (y1 - y0) / (x1 - x0);
        const double d1 = (y2 - y1) / (x2 - x1);
        const double c = (d1 - d0) / (x2 - x0);
        double xv = x1;
        double yv = y1;
        if (c < 0.0) {
          const double b = d0 - c * (x0 + x1);
          xv = -b / (2.0 * c);
          yv = y0 + d0 * (xv - x0) + c * (xv - x0) * (xv - x1);
        }
        peak_t.push_back(xv);
        peak_s.push_back(yv);
      }
      if (peak_t.size() < 3) throw NumericalError("insufficient samples to fit: fewer than 3 oscillation peaks");
      tr.period = (peak_t.back() - peak_t.front()) / static_cast<double>(peak_t.size() - 1);
      tr.s_max = *std::max_element(peak_s.begin(), peak_s.end());
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------

std::string_view to_string(DynamicsClass c) {
  switch (c) {
    case DynamicsClass::Exponential: return "exponential";
    case DynamicsClass::Oscillatory: return "oscillatory";
    case DynamicsClass::Mixed: return "mixed";
  }
  return "?";
}

std::vector<double> log_trace_covariance(const DynMatrix& m, const DynamicsOptions& opts) {
  if (!(opts.dt > 0.0) || !(opts.t_max > opts.dt)) throw ValidationError("dynamics window needs 0 < dt < t_max");
  const RMatrix k = real_drift(to_quadrature(m));
  const RMatrix step = expm(RMatrix(opts.dt * k));
  const int steps = static_cast<int>(std::floor(opts.t_max / opts.dt + 1e-9));
  // G(t) is carried normalized; its log norm accumulates separately so
  // exponential growth never overflows. tr cov = ||G||_F^2 / 2 from vacuum.
  RMatrix g = RMatrix::Identity(k.rows(), k.cols());
  double log_norm = 0.0;
  std::vector<double> y;
  y.reserve(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    if (i > 0) {
      g = step * g;
      const double nrm = g.norm();
      g /= nrm;
      log_norm += std::log(nrm);
    }
    y.push_back(2.0 * log_norm + std::log(0.5 * g.squaredNorm()));
  }
  return y;
}

DynamicsClass classify_dynamics(const DynMatrix& m, const DynamicsOptions& opts) {
  if (!(opts.dt > 0.0) || !(opts.t_max > opts.dt)) throw ValidationError("dynamics window needs 0 < dt < t_max");
  const RMatrix k = real_drift(to_quadrature(m));
  const RMatrix step = expm(RMatrix(opts.dt * k));
  const int dim = static_cast<int>(k.rows());
  const int steps = static_cast<int>(std::floor(opts.t_max / opts.dt + 1e-9));

  // Log singular values of G(t). A growing sector swamps any trace-like
  // observable, but an oscillating sector still shows up as turning points
  // in the bounded singular values. The window ends once the growth makes
  // the small singular values unresolvable.
  RMatrix g = RMatrix::Identity(dim, dim);
  std::vector<double> y{std::log(0.5 * dim)};
  std::vector<std::vector<double>> sv(dim);
  bool capped = false;
  for (int i = 1; i <= steps; ++i) {
    g = step * g;
    const double yi = std::log(0.5 * g.squaredNorm());
    if (!std::isfinite(yi) || yi > opts.log_cap) {
      capped = true;
      break;
    }
    y.push_back(yi);
    Eigen::JacobiSVD<RMatrix> svd(g);
    const RVector s = svd.singularValues();
    for (int j = 0; j < dim; ++j)
      if (s(j) > 1e-9 * s(0)) sv[j].push_back(std::log(s(j)));
  }

  bool growth = capped;
  if (!growth) {
    const std::size_t half = y.size() / 2;
    const double early = *std::max_element(y.begin(), y.begin() + half);
    const double late = *std::max_element(y.begin() + half, y.end());
    growth = late - early > opts.growth_margin;
  }
  if (!growth) return DynamicsClass::Oscillatory;

  int wiggles = 0;
  for (const auto& trace : sv) {
    int count = 0;
    double last = trace.empty() ? 0.0 : trace.front();
    for (std::size_t i = 1; i + 1 < trace.size(); ++i) {
      const bool turn = (trace[i] - trace[i - 1]) * (trace[i + 1] - trace[i]) < 0.0;
      if (turn && std::abs(trace[i] - last) > opts.wiggle_threshold) {
        ++count;
        last = trace[i];
      }
    }
    wiggles = std::max(wiggles, count);
  }
  return wiggles >= opts.min_wiggles ? DynamicsClass::Mixed : DynamicsClass::Exponential;
}

std::optional<DynamicsClass> expected_dynamics(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::PurelyImaginary: return DynamicsClass::Exponential;
    case RegimeLabel::PurelyReal: return DynamicsClass::Oscillatory;
    case RegimeLabel::Complex: return DynamicsClass::Mixed;
    case RegimeLabel::ExceptionalPoint: return std::nullopt;
  }
  return std::nullopt;
}

std::vector<RegimeCell> regime_map(const SmsBkcParams& base, const std::vector<double>& eta_grid,
                                   const std::vector<double>& g_grid, const DynamicsOptions& opts) {
  if (base.n_sites != 2) throw ValidationError("regime map uses the two-mode SMS-extended BKC (N = 2)");
  std::vector<RegimeCell> out;
  for (double eta : eta_grid)
    for (double g : g_grid) {
      SmsBkcParams p = base;
      p.eta = eta;
      p.g = g;
      const auto m = build_real_space(build_preset(p));
      RegimeCell c;
      c.eta = eta;
      c.g = g;
      c.spectral = classify_regime(eig(m)).label;
      c.dynamics = classify_dynamics(m, opts);
      const auto want = expected_dynamics(c.spectral);
      c.comparable = want.has_value();
      c.agree = want.has_value() && *want == c.dynamics;
      out.push_back(c);
    }
  return out;
}

}  // namespace qbs
