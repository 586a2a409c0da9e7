#pragma once

#include <span>
#include <utility>
#include <vector>

#include "qbs/linalg.hpp"
#include "qbs/model.hpp"

namespace qbs {

/// ParticleHole: `data` is M with i d/dt Psi = M Psi, Psi = (a_1..a_N, a_1^dag..a_N^dag).
/// Quadrature:   `data` is the drift K with dq/dt = K q, q = (x_1, p_1, ..., x_N, p_N),
///               x = (a + a^dag)/sqrt2, p = -i(a - a^dag)/sqrt2.
enum class Basis { ParticleHole, Quadrature };

struct DynMatrix {
  CMatrix data;
  Basis basis = Basis::ParticleHole;
  Boundary boundary = Boundary::Open;
  bool has_damping = false;

  int n_modes() const { return static_cast<int>(data.rows() / 2); }
};

/// M generated term by term from the bosonic commutators. DAMPING adds
/// -i gamma/2 to both diagonal entries of its mode.
DynMatrix build_real_space(const QbsModel& model);

/// Unitary map Lambda with q = Lambda Psi.
CMatrix quadrature_transform(int n_modes);

/// K = Lambda (-i M) Lambda^dag.
DynMatrix to_quadrature(const DynMatrix& m);
/// M = i Lambda^dag K Lambda.
DynMatrix from_quadrature(const DynMatrix& k);

/// Real part of a quadrature drift; throws if the imaginary part exceeds tol.
RMatrix real_drift(const DynMatrix& k, double tol = 1e-12);

/// Block-diagonal rotation (+)_j R(phi_j), R(phi) = [[cos, sin], [-sin, cos]].
RMatrix gauge_rotation(std::span<const double> angles);

/// R K R^T for a quadrature-basis matrix. angles.size() must equal n_modes.
DynMatrix rotate_gauge(const DynMatrix& k, std::span<const double> angles);

/// max |(tau_x M^* tau_x + M)_ij| for a ParticleHole matrix.
double particle_hole_residual(const DynMatrix& m);

/// Lazily evaluated momentum-space matrix M(q) for a periodic model with
/// n_cell modes per unit cell. Basis per q: (a_{q,1..n_cell}, a_{-q,1..n_cell}^dag).
class BlochMatrix {
 public:
  BlochMatrix(int n_cell, std::vector<std::pair<int, CMatrix>> hops);

  CMatrix operator()(double q) const;
  int n_cell() const { return n_cell_; }
  int dimension() const { return 2 * n_cell_; }
  /// Cell offsets R and the 2n_cell x 2n_cell coupling blocks (row cell 0).
  const std::vector<std::pair<int, CMatrix>>& hops() const { return hops_; }

 private:
  int n_cell_;
  std::vector<std::pair<int, CMatrix>> hops_;
};

/// M(q) = sum_R M_{(0,s),(R,t)} e^{iqR}, read off the real-space generator.
/// Requires a periodic, translation-invariant model whose couplings do not
/// reach half the ring (otherwise the cell offset is ambiguous).
BlochMatrix build_bloch(const QbsModel& model);

/// Momenta 2 pi n / n_cells, n = 0..n_cells-1.
std::vector<double> bloch_momenta(int n_cells);

}  // namespace qbs
