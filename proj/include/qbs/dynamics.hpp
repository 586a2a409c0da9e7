#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qbs/spectral.hpp"

namespace qbs {

struct Propagator {
  CMatrix G;  // exp(-i M t) in the particle-hole basis, exp(K t) in the quadrature basis
  double t = 0.0;
  Basis basis = Basis::Quadrature;
  std::string method = "pade-scaling-squaring";

  /// Real quadrature propagator; throws unless basis is Quadrature.
  RMatrix real() const;
};

/// Dense matrix exponential. Entries above `magnitude_cap` (or non-finite)
/// raise NumericalError suggesting a shorter t.
Propagator propagate(const DynMatrix& m, double t, double magnitude_cap = 1e150);

/// Interleaved symplectic form (+)_j [[0, 1], [-1, 0]].
RMatrix symplectic_form(int n_modes);

struct GaussianState {
  RVector mean;
  RMatrix cov;

  int n_modes() const { return static_cast<int>(mean.size() / 2); }
  /// Vacuum: zero mean, cov = I/2.
  static GaussianState vacuum(int n_modes);
};

/// Smallest eigenvalue of cov + i Omega / 2 (>= 0 for physical states).
double physicality_margin(const GaussianState& s);
/// Throws ValidationError if the margin is below -tol * max(1, ||cov||).
void require_physical(const GaussianState& s, double tol = 1e-9);

/// mean -> G mean, cov -> G cov G^T, followed by a physicality check.
GaussianState evolve_state(const GaussianState& s, const Propagator& p, double tol = 1e-9);

/// Logarithmic negativity sum_k max(0, -log2(2 nu_k)) over the symplectic
/// spectrum of the partial transpose (p -> -p on the complement of side_a).
double entanglement(const GaussianState& s, const std::vector<int>& side_a);

struct SqueezeTrace {
  std::vector<double> times;
  std::vector<double> S;  // |A| + |B|
  std::vector<cplx> A;    // coefficient of a_1 in a_1(t)
  std::vector<cplx> B;    // coefficient of a_2^dag in a_1(t)
  RegimeLabel regime = RegimeLabel::PurelyReal;
  std::optional<double> rate;    // exponential regime, log-linear fit on the final 30%
  std::optional<double> period;  // oscillating regime, mean peak spacing
  std::optional<double> s_max;   // oscillating regime, largest interpolated peak
};

/// S(t) for a damping-free two-mode model propagated numerically.
/// Throws NumericalError when the trace is too short for the regime's fit.
SqueezeTrace squeezing_factor(const QbsModel& model, const std::vector<double>& times);

/// Closed forms for H = delta (n1 + n2) + i kappa (a1^dag a2^dag - a1 a2):
/// A = cosh(st) - i delta sinh(st)/s, B = kappa sinh(st)/s, s = sqrt(kappa^2 - delta^2).
struct SqueezeCoefficients {
  cplx A;
  cplx B;
};
SqueezeCoefficients squeeze_coefficients(double delta, double kappa, double t);
double squeeze_rate(double delta, double kappa);    // sqrt(kappa^2 - delta^2)
double squeeze_period(double delta, double kappa);  // pi / sqrt(delta^2 - kappa^2)
double squeeze_peak(double delta, double kappa);    // sqrt((delta + kappa)/(delta - kappa))
double squeeze_at_ep(double delta, double kappa, double t);  // sqrt(1 + delta^2 t^2) + kappa t

enum class DynamicsClass { Exponential, Oscillatory, Mixed };
std::string_view to_string(DynamicsClass c);

struct DynamicsOptions {
  double t_max = 80.0;
  double dt = 0.02;
  double growth_margin = 0.5;      // ln tr cov: second-half max minus first-half max
  double log_cap = 25.0;           // stop once ln tr cov exceeds this (counts as growth)
  double wiggle_threshold = 1e-4;  // swing of a log singular value counted as a turn
  int min_wiggles = 2;
};

/// Empirical class of the evolution from vacuum: growth when ln tr cov
/// escapes (or its late maximum clears the early one), oscillation from
/// turning points of the log singular values of G(t).
DynamicsClass classify_dynamics(const DynMatrix& m, const DynamicsOptions& opts = {});

/// ln tr cov(t) from vacuum on the grid 0, dt, ..., t_max.
std::vector<double> log_trace_covariance(const DynMatrix& m, const DynamicsOptions& opts = {});

/// The class that each spectral label predicts; none at an EP.
std::optional<DynamicsClass> expected_dynamics(RegimeLabel label);

struct RegimeCell {
  double eta = 0.0;
  double g = 0.0;
  RegimeLabel spectral = RegimeLabel::PurelyReal;
  DynamicsClass dynamics = DynamicsClass::Oscillatory;
  bool comparable = true;  // false at an EP
  bool agree = true;
};

/// Spectral and empirical classification over an (eta, g) grid for the
/// two-mode SMS-extended BKC; `base` supplies J (and must have n_sites = 2).
std::vector<RegimeCell> regime_map(const SmsBkcParams& base, const std::vector<double>& eta_grid,
                                   const std::vector<double>& g_grid, const DynamicsOptions& opts = {});

}  // namespace qbs
