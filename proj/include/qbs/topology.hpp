#pragma once

#include <vector>

#include "qbs/spectral.hpp"

namespace qbs {

struct WindingResult {
  cplx reference_energy;
  int winding = 0;
  double phase_residual = 0.0;  // |accumulated phase - 2 pi W|
  double max_phase_step = 0.0;  // largest single-step phase increment
  double min_gap = 0.0;         // min over the grid of min_i |lambda_i(q) - e_ref|
  bool reliable = true;
};

struct WindingOptions {
  int n_grid = 4096;
  double gap_tol = 1e-9;            // |lambda - e_ref| below this is "on-gap"
  double max_reliable_step = 1.0;   // radians per grid step
  double residual_tol = 1e-6;
};

/// W = (1/2 pi) * total phase of det(M(q) - e_ref) over q in [0, 2 pi),
/// the determinant taken as the product of (lambda_i(q) - e_ref).
/// Throws NumericalError ("on-gap") when e_ref touches the spectrum.
WindingResult winding_number(const BlochMatrix& bloch, cplx e_ref, const WindingOptions& opts = {});

/// Windings of the individual spectral loops. Bands are tracked continuously
/// in q; after one period the bands close into cycles, and each cycle is a
/// closed curve whose winding about e_ref is reported. Particle-hole symmetry
/// forces det(M(q) - 0) to be real and positive for several presets, so the
/// determinant winding at e_ref = 0 vanishes even when each loop winds; the
/// per-loop numbers carry the topology there.
struct LoopWindings {
  cplx reference_energy;
  std::vector<int> windings;       // one entry per closed loop
  std::vector<int> loop_bands;     // number of bands joined into each loop
  double min_gap = 0.0;
  double max_phase_step = 0.0;
  double min_separation_ratio = 0.0;  // worst (distance to rival) / (distance to match)
  bool reliable = true;
};

LoopWindings loop_windings(const BlochMatrix& bloch, cplx e_ref, const WindingOptions& opts = {});

struct ObcPbcSpectra {
  CVector obc;                   // real-space open chain
  CVector pbc;                   // real-space ring
  std::vector<double> q;         // Bloch grid
  std::vector<CVector> curve;    // Bloch eigenvalues per q
  double obc_max_abs_imag = 0.0;
  double obc_real_extent = 0.0;  // max |Re| over the open spectrum
  double pbc_real_extent = 0.0;
  double pbc_imag_extent = 0.0;
  bool encloses = false;         // OBC spectrum inside the hull of the PBC curve
};

/// Takes a periodic, translation-invariant model; the open chain drops the
/// wrap-around bonds.
ObcPbcSpectra obc_pbc_spectra(const QbsModel& model, int n_grid = 512);

/// Least-squares amplitude A of sorted open-chain eigenvalues against
/// A cos(n pi / (N + 1)), the standing-wave band of a nearest-neighbour chain.
double standing_wave_halfwidth(const CVector& obc_sorted_real, int n_sites);

struct BogoliubovTransform {
  CMatrix U;          // N x N, U(j, k) = u^k_j
  CMatrix V;          // N x N
  CVector lambda;     // N branch eigenvalues
  CMatrix T;          // [[U, V*], [V, U*]] up to matched partners for unstable modes
  double residual = 0.0;                // max_k ||M t_k - l_k t_k|| / (||M|| ||t_k||)
  double paraunitarity_residual = -1.0; // ||U^dag U - V^dag V - I||_max; -1 when not applicable
  double condition = 1.0;               // cond(T)
};

struct BogoliubovOptions {
  double condition_threshold = 1e10;  // balanced eigenvector condition
  double norm_tol = 1e-8;
  double real_tol = 1e-9;
  SpectralOptions spectral{};
};

/// Solves M T = T diag(Lambda, -Lambda). Modes with positive symplectic norm
/// (|u|^2 - |v|^2 > 0) form Lambda and are normalized to norm 1. Modes with
/// zero norm (complex frequencies) join Lambda when Re > 0, ties going to
/// Im > 0. Damped matrices are rejected; defective ones raise NumericalError.
BogoliubovTransform bogoliubov_diagonalize(const DynMatrix& m, const BogoliubovOptions& opts = {});

struct SkinMetrics {
  RMatrix profiles;               // N x N, column k is rho_k(j), unit mass
  RVector edge_weight;            // per mode
  RVector ipr;                    // per mode
  double edge_fraction = 0.1;
  int edge_sites = 1;             // sites counted on each side
  double mean_edge_weight = 0.0;
  double mean_ipr = 0.0;
};

SkinMetrics skin_metrics(const BogoliubovTransform& t, double edge_fraction = 0.1);

}  // namespace qbs
