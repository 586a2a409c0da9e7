#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qbs/bdg.hpp"

namespace qbs {

struct SpectralOptions {
  /// Cluster radius relative to ||M||_F (absolute floor 1e-12).
  double cluster_radius = 1e-7;
  /// Gram condition above which a cluster counts as defective.
  double defect_threshold = 1e6;
  /// Relative eigen-residual that raises NumericalError.
  double residual_tol = 1e-8;
};

/// Eigen-decomposition of a dynamical matrix. Eigenvalues are always those of
/// M (frequency convention, Re = oscillation, Im = gain/loss); for a
/// quadrature-basis input they are i * eig(K). Vectors live in the input basis.
///
/// The solver works on the quadrature drift after diagonal balancing, because
/// skin-effect chains are exponentially non-normal in the site basis. The
/// defectiveness diagnostics are measured in those balanced coordinates so
/// that localization alone is not mistaken for an exceptional point.
struct SpectralResult {
  Basis basis = Basis::ParticleHole;
  CVector eigenvalues;  // sorted by (Re, Im)
  CMatrix right;        // columns, unit 2-norm
  CMatrix left;         // rows of right^{-1}; empty when right is singular
  std::vector<std::vector<int>> clusters;
  std::vector<double> ep_diagnostic;  // per cluster: Gram condition of its vectors
  double vector_condition = 1.0;      // cond of all balanced eigenvectors
  bool defective = false;             // some cluster exceeds the defect threshold
  double matrix_norm = 0.0;           // ||M||_F
  double max_residual = 0.0;          // max_i ||K w_i - mu_i w_i|| / ||K||, balanced
  double biorth_residual = 0.0;       // ||L R - I||_max, +inf without left vectors
};

SpectralResult eig(const DynMatrix& m, const SpectralOptions& opts = {});
/// Eigenvalues only (same balanced path, cheaper).
CVector eigenvalues(const DynMatrix& m);
/// Eigenvalues of a raw particle-hole matrix such as a Bloch block M(q).
CVector eigenvalues(const CMatrix& m);

enum class RegimeLabel { PurelyReal, PurelyImaginary, Complex, ExceptionalPoint };
std::string_view to_string(RegimeLabel label);

struct Regime {
  RegimeLabel label = RegimeLabel::PurelyReal;
  double max_abs_real = 0.0;
  double max_abs_imag = 0.0;
};

/// EP when every eigenvalue sits within tol of one value and the
/// eigenvectors are defective; otherwise by which parts vanish. The zero
/// matrix is PurelyReal.
Regime classify_regime(const SpectralResult& s, double tol = 1e-9);

struct EpPoint {
  double parameter = 0.0;
  int order = 0;               // size of the coalescing cluster
  cplx location;               // cluster centroid
  double gram_condition = 0.0;
};

struct EpScan {
  std::vector<double> parameters;
  std::vector<RegimeLabel> labels;
  std::vector<double> vector_condition;
  std::vector<EpPoint> points;
  std::vector<std::string> warnings;
};

struct EpOptions {
  double candidate_condition = 1e3;  // cond(V) local maxima above this are refined
  int refine_iterations = 80;
  SpectralOptions spectral{};
  double regime_tol = 1e-9;
};

/// Sweeps a one-parameter family, flags EP candidates from peaks of the
/// eigenvector condition number and from regime changes, refines each by a
/// golden-section search, and keeps those whose coalescing cluster is
/// defective. Unconfirmed candidates produce warnings, never points.
EpScan detect_ep(const std::function<QbsModel(double)>& family, const std::vector<double>& values,
                 const EpOptions& opts = {});

// ---------------------------------------------------------------------------
// Closed-form spectra used as oracles.

/// +-sqrt(J^2 - kappa^2) for the two-mode BKC.
std::vector<cplx> two_mode_bkc_spectrum(double J, double kappa);
/// Open chain in hopping/pairing form: +-sqrt(t^2 - Delta^2) cos(n pi/(N+1)),
/// n = 1..N, each value twice (2N entries, sorted).
std::vector<cplx> bkc_obc_spectrum(int n_sites, double t, double Delta);
/// Bloch pair t sin(phi_t) sin q +- i sqrt(Delta^2 - t^2 cos^2 phi_t) cos q.
std::vector<cplx> bkc_pbc_spectrum(double t, double Delta, double phi_t, double q);
/// The two squared energies X_+-(k) = D^2 + 2 (t1 t2 - g1 g2) cos k +- 2i (t1 g2 - t2 g1) sin k,
/// D^2 = t1^2 + t2^2 - g1^2 - g2^2.
std::vector<cplx> squeezed_ssh_energy_squared(double t1, double t2, double g1, double g2, double k);
/// The four Bloch eigenvalues +-sqrt(X_+-(k)).
std::vector<cplx> squeezed_ssh_spectrum(double t1, double t2, double g1, double g2, double k);

/// Name-keyed dispatch: "two-mode-bkc" (J, kappa), "bkc-obc" (N, t, Delta),
/// "bkc-pbc" (t, Delta, phi_t; q), "squeezed-ssh" (t1, t2, g1, g2; q).
std::vector<cplx> analytic_spectrum(std::string_view preset, const std::map<std::string, double>& params,
                                    double q = 0.0);

}  // namespace qbs
