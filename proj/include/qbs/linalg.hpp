#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace qbs {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// Diagonal similarity D^{-1} A D that equalizes off-diagonal row and column
/// norms. Chains with directional coupling ratio r need scales ~ r^N, far
/// beyond what the usual power-of-two sweeps reach, so the scales are solved
/// for directly. Returns the diagonal of D; `a` is overwritten.
RVector balance(CMatrix& a, int max_iterations = 200);

/// 2-norm condition number (ratio of extreme singular values). Returns +inf
/// for an exactly singular input.
double condition_number(const CMatrix& a);

/// Matrix exponential (Pade approximant with scaling and squaring).
CMatrix expm(const CMatrix& a);
RMatrix expm(const RMatrix& a);

/// Single-linkage clustering of complex values: i and j share a cluster when
/// a chain of pairwise distances below `radius` connects them. Clusters are
/// returned in order of their smallest member index.
std::vector<std::vector<int>> cluster_values(const CVector& values, double radius);

/// e^{i phase} with components below 1e-15 snapped to zero, so phases such as
/// pi/2 or pi written in floating point produce exact 0 and +-1 entries.
/// Strongly non-normal chains amplify a 1e-17 residue by orders of magnitude.
cplx unit_phase(double phase);

/// Unwrapped phase increment arg(b) - arg(a) mapped to (-pi, pi].
double phase_step(cplx a, cplx b);

/// Inclusive linear grid of `count` points; count == 1 yields {start}.
std::vector<double> linspace(double start, double stop, int count);

}  // namespace qbs
