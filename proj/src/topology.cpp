#include "qbs/topology.hpp"

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

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Bloch blocks are small and close to normal; no balancing needed.
CVector bloch_eigenvalues(const BlochMatrix& bloch, double q) {
  Eigen::ComplexEigenSolver<CMatrix> es(bloch(q), false);
  if (es.info() != Eigen::Success) throw NumericalError("Bloch eigen-decomposition did not converge");
  return es.eigenvalues();
}

double min_distance(const CVector& v, cplx e) { return (v.array() - e).abs().minCoeff(); }

[[noreturn]] void on_gap(cplx e_ref, double q, double gap) {
  std::ostringstream os;
  os << "on-gap: reference energy (" << e_ref.real() << ", " << e_ref.imag()
     << ") lies on the spectrum (distance " << gap << " at q = " << q << ")";
  throw NumericalError(os.str());
}

void require_grid(int n_grid) {
  if (n_grid < 8) throw ValidationError("winding grid needs at least 8 points");
}

}  // namespace

WindingResult winding_number(const BlochMatrix& bloch, cplx e_ref, const WindingOptions& opts) {
  require_grid(opts.n_grid);
  WindingResult out;
  out.reference_energy = e_ref;
  out.min_gap = std::numeric_limits<double>::infinity();
  double total = 0.0;
  cplx first{};
  cplx prev{};
  for (int i = 0; i <= opts.n_grid; ++i) {
    cplx det = 1.0;
    if (i < opts.n_grid) {
      const double q = kTwoPi * i / opts.n_grid;
      const CVector lam = bloch_eigenvalues(bloch, q);
      const double gap = min_distance(lam, e_ref);
      if (gap < opts.gap_tol) on_gap(e_ref, q, gap);
      out.min_gap = std::min(out.min_gap, gap);
      // Normalize each factor: only the phase matters and this avoids under/overflow.
      for (cplx l : lam) det *= (l - e_ref) / std::abs(l - e_ref);
    } else {
      det = first;
    }
    if (i == 0) {
      first = det;
    } else {
      const double step = phase_step(prev, det);
      out.max_phase_step = std::max(out.max_phase_step, std::abs(step));
      total += step;
    }
    prev = det;
  }
  out.winding = static_cast<int>(std::lround(total / kTwoPi));
  out.phase_residual = std::abs(total - kTwoPi * out.winding);
  out.reliable = out.phase_residual < opts.residual_tol && out.max_phase_step < opts.max_reliable_step;
  return out;
}

LoopWindings loop_windings(const BlochMatrix& bloch, cplx e_ref, const WindingOptions& opts) {
  require_grid(opts.n_grid);
  const int n = opts.n_grid;
  const int dim = bloch.dimension();
  // Offset grid: high-symmetry momenta, where bands often touch, are avoided
  // so the closing permutation after one period is unambiguous.
  const double q0 = 0.5 * (std::sqrt(5.0) - 1.0) * kTwoPi / n;

  LoopWindings out;
  out.reference_energy = e_ref;
  out.min_gap = std::numeric_limits<double>::infinity();
  out.min_separation_ratio = std::numeric_limits<double>::infinity();

  const CVector start = bloch_eigenvalues(bloch, q0);
  CVector cur = start;
  CVector prev = start;
  std::vector<double> phase(dim, 0.0);
  std::vector<int> closing(dim, -1);

  for (int i = 1; i <= n; ++i) {
    const double q = q0 + kTwoPi * i / n;
    const CVector next = i == n ? start : bloch_eigenvalues(bloch, q);
    const double gap = min_distance(next, e_ref);
    if (gap < opts.gap_tol) on_gap(e_ref, q, gap);
    out.min_gap = std::min(out.min_gap, gap);

    CVector pred = i == 1 ? cur : CVector(2.0 * cur - prev);
    // Greedy assignment of tracks to new eigenvalues by predicted distance.
    std::vector<std::tuple<double, int, int>> pairs;
    for (int b = 0; b < dim; ++b)
      for (int c = 0; c < dim; ++c) pairs.emplace_back(std::abs(pred(b) - next(c)), b, c);
    std::sort(pairs.begin(), pairs.end());
    std::vector<int> match(dim, -1);
    std::vector<bool> used(dim, false);
    for (const auto& [d, b, c] : pairs) {
      if (match[b] >= 0 || used[c]) continue;
      match[b] = c;
      used[c] = true;
    }
    for (int b = 0; b < dim; ++b) {
      const double d = std::abs(pred(b) - next(match[b]));
      double rival = std::numeric_limits<double>::infinity();
      for (int c = 0; c < dim; ++c)
        if (c != match[b]) rival = std::min(rival, std::abs(pred(b) - next(c)));
      if (d > 0.0) out.min_separation_ratio = std::min(out.min_separation_ratio, rival / d);
    }

    CVector moved(dim);
    for (int b = 0; b < dim; ++b) {
      moved(b) = next(match[b]);
      const double step = phase_step(cur(b) - e_ref, moved(b) - e_ref);
      out.max_phase_step = std::max(out.max_phase_step, std::abs(step));
      phase[b] += step;
    }
    if (i == n) closing = match;
    prev = cur;
    cur = moved;
  }

  // Track b started at start(b) and ends at start(closing[b]); follow cycles.
  std::vector<bool> seen(dim, false);
  for (int b = 0; b < dim; ++b) {
    if (seen[b]) continue;
    double total = 0.0;
    int bands = 0;
    for (int c = b; !seen[c]; c = closing[c]) {
      seen[c] = true;
      total += phase[c];
      ++bands;
    }
    const int w = static_cast<int>(std::lround(total / kTwoPi));
    if (std::abs(total - kTwoPi * w) > opts.residual_tol) out.reliable = false;
    out.windings.push_back(w);
    out.loop_bands.push_back(bands);
  }
  if (out.max_phase_step > opts.max_reliable_step || out.min_separation_ratio < 2.0) out.reliable = false;

  // Loop order depends on the solver's band order; report it canonically.
  std::vector<int> order(out.windings.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::pair(-out.windings[a], out.loop_bands[a]) < std::pair(-out.windings[b], out.loop_bands[b]);
  });
  std::vector<int> w, bands;
  for (int i : order) {
    w.push_back(out.windings[i]);
    bands.push_back(out.loop_bands[i]);
  }
  out.windings = std::move(w);
  out.loop_bands = std::move(bands);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Pt {
  double x, y;
};

double cross(const Pt& o, const Pt& a, const Pt& b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

std::vector<Pt> convex_hull(std::vector<Pt> pts) {
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (pts.size() < 3) return pts;
  std::vector<Pt> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(const std::vector<Pt>& h) {
  double a = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& p = h[i];
    const auto& q = h[(i + 1) % h.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * std::abs(a);
}

// Counter-clockwise hull: inside when left of (or within tol of) every edge.
bool inside_hull(const std::vector<Pt>& h, const Pt& p, double tol) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& a = h[i];
    const auto& b = h[(i + 1) % h.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len == 0.0) continue;
    if (cross(a, b, p) / len < -tol) return false;
  }
  return true;
}

}  // namespace

ObcPbcSpectra obc_pbc_spectra(const QbsModel& model, int n_grid) {
  if (model.boundary != Boundary::Periodic)
    throw ValidationError("obc_pbc_spectra takes the periodic form of the model");
  if (n_grid < 3) throw ValidationError("Bloch grid needs at least 3 points");
  const auto bloch = build_bloch(model);
  ObcPbcSpectra out;
  out.pbc = eigenvalues(build_real_space(model));
  out.obc = eigenvalues(build_real_space(with_open_boundary(model)));
  out.q = linspace(0.0, kTwoPi, n_grid + 1);
  out.q.pop_back();
  std::vector<Pt> pts;
  for (double q : out.q) {
    out.curve.push_back(bloch_eigenvalues(bloch, q));
    for (cplx l : out.curve.back()) {
      pts.push_back({l.real(), l.imag()});
      out.pbc_real_extent = std::max(out.pbc_real_extent, std::abs(l.real()));
      out.pbc_imag_extent = std::max(out.pbc_imag_extent, std::abs(l.imag()));
    }
  }
  out.obc_max_abs_imag = out.obc.imag().cwiseAbs().maxCoeff();
  out.obc_real_extent = out.obc.real().cwiseAbs().maxCoeff();

  const auto hull = convex_hull(pts);
  const double scale = std::max({out.pbc_real_extent, out.pbc_imag_extent, 1e-300});
  if (hull.size() >= 3 && polygon_area(hull) > 1e-10 * scale * scale) {
    out.encloses = std::all_of(out.obc.begin(), out.obc.end(),
                               [&](cplx l) { return inside_hull(hull, {l.real(), l.imag()}, 1e-9 * scale); });
  }
  return out;
}

double standing_wave_halfwidth(const CVector& obc_sorted_real, int n_sites) {
  // The 2N open-chain eigenvalues pair up, so the basis cos(n pi/(N+1)) is
  // repeated to match; both lists are sorted ascending.
  const int m = static_cast<int>(obc_sorted_real.size());
  if (m == 0 || m % n_sites != 0) throw ValidationError("standing_wave_halfwidth: size mismatch");
  const int rep = m / n_sites;
  std::vector<double> basis;
  for (int n = 1; n <= n_sites; ++n)
    for (int r = 0; r < rep; ++r) basis.push_back(std::cos(n * std::numbers::pi / (n_sites + 1)));
  std::sort(basis.begin(), basis.end());
  std::vector<double> vals(m);
  for (int i = 0; i < m; ++i) vals[i] = obc_sorted_real(i).real();
  std::sort(vals.begin(), vals.end());
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < m; ++i) {
    num += basis[i] * vals[i];
    den += basis[i] * basis[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

// ---------------------------------------------------------------------------

BogoliubovTransform bogoliubov_diagonalize(const DynMatrix& m, const BogoliubovOptions& opts) {
  if (m.basis != Basis::ParticleHole) throw ValidationError("Bogoliubov diagonalization needs a particle-hole matrix");
  if (m.has_damping) throw ValidationError("Bogoliubov diagonalization needs a damping-free matrix");
  const int n = m.n_modes();
  const auto s = eig(m, opts.spectral);

  if (s.defective || s.vector_condition > opts.condition_threshold) {
    std::ostringstream os;
    os << "non-diagonalizable: eigenvector condition " << s.vector_condition;
    for (std::size_t c = 0; c < s.clusters.size(); ++c) {
      if (s.clusters[c].size() < 2) continue;
      cplx centre = 0.0;
      for (int k : s.clusters[c]) centre += s.eigenvalues(k);
      centre /= static_cast<double>(s.clusters[c].size());
      os << "; cluster of " << s.clusters[c].size() << " at (" << centre.real() << ", " << centre.imag()
         << ") Gram condition " << s.ep_diagnostic[c];
    }
    throw NumericalError(os.str());
  }

  // Symplectic metric sigma = diag(I, -I). Within each degenerate cluster,
  // rotate the basis so the metric is diagonal and each vector has a sign.
  struct Mode {
    CVector v;
    cplx lambda;
    double norm;
  };
  std::vector<Mode> modes;
  RVector sigma(2 * n);
  sigma << RVector::Ones(n), -RVector::Ones(n);
  for (const auto& cl : s.clusters) {
    const int k = static_cast<int>(cl.size());
    CMatrix vc(2 * n, k);
    cplx centre = 0.0;
    for (int i = 0; i < k; ++i) {
      vc.col(i) = s.right.col(cl[i]);
      centre += s.eigenvalues(cl[i]);
    }
    centre /= static_cast<double>(k);
    const CMatrix g = vc.adjoint() * sigma.asDiagonal() * vc;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
    const CMatrix rotated = vc * es.eigenvectors();
    for (int i = 0; i < k; ++i) {
      const CVector v = rotated.col(i).normalized();
      const double norm = (v.adjoint() * sigma.asDiagonal() * v)(0, 0).real();
      modes.push_back({v, k == 1 ? s.eigenvalues(cl[i]) : centre, norm});
    }
  }

  auto plus_branch = [&](const Mode& md) {
    if (md.norm > opts.norm_tol) return true;
    if (md.norm < -opts.norm_tol) return false;
    if (md.lambda.real() > opts.real_tol) return true;
    if (md.lambda.real() < -opts.real_tol) return false;
    return md.lambda.imag() > opts.real_tol;
  };
  std::vector<int> plus;
  std::vector<int> zero_rest;  // zero-norm vectors left for pairing
  std::vector<int> ambiguous;  // zero-norm at lambda ~ 0
  for (int i = 0; i < static_cast<int>(modes.size()); ++i) {
    const auto& md = modes[i];
    const bool zero_norm = std::abs(md.norm) <= opts.norm_tol;
    if (zero_norm && std::abs(md.lambda) <= opts.real_tol) {
      ambiguous.push_back(i);
    } else if (plus_branch(md)) {
      plus.push_back(i);
    } else if (zero_norm) {
      zero_rest.push_back(i);
    }
  }
  // Null modes at lambda = 0 have no branch label; split them by order.
  for (std::size_t i = 0; i < ambiguous.size(); ++i)
    (i < ambiguous.size() / 2 ? plus : zero_rest).push_back(ambiguous[i]);

  if (static_cast<int>(plus.size()) != n) {
    std::ostringstream os;
    os << "branch split failed: " << plus.size() << " + branch modes for " << n << " bosonic modes";
    throw NumericalError(os.str());
  }
  std::stable_sort(plus.begin(), plus.end(), [&](int a, int b) {
    const cplx la = modes[a].lambda;
    const cplx lb = modes[b].lambda;
    return la.real() != lb.real() ? la.real() < lb.real() : la.imag() < lb.imag();
  });

  BogoliubovTransform out;
  out.T = CMatrix(2 * n, 2 * n);
  out.lambda = CVector(n);
  std::vector<bool> taken(modes.size(), false);
  for (int k = 0; k < n; ++k) {
    const auto& md = modes[plus[k]];
    CVector v = md.v;
    if (md.norm > opts.norm_tol) v /= std::sqrt(md.norm);
    out.T.col(k) = v;
    out.lambda(k) = md.lambda;
    if (md.norm > opts.norm_tol) {
      // Particle-hole partner (v^*, u^*) with eigenvalue -lambda.
      out.T.col(n + k) << v.tail(n).conjugate(), v.head(n).conjugate();
    } else {
      int best = -1;
      for (int j : zero_rest)
        if (!taken[j] && (best < 0 || std::abs(modes[j].lambda + md.lambda) <
                                          std::abs(modes[best].lambda + md.lambda)))
          best = j;
      if (best < 0) throw NumericalError("branch split failed: no partner for an unstable mode");
      taken[best] = true;
      out.T.col(n + k) = modes[best].v;
    }
  }
  out.U = out.T.topLeftCorner(n, n);
  out.V = out.T.bottomLeftCorner(n, n);

  const double mnorm = std::max(m.data.norm(), std::numeric_limits<double>::min());
  for (int c = 0; c < 2 * n; ++c) {
    const cplx l = c < n ? out.lambda(c) : -out.lambda(c - n);
    const double r = (m.data * out.T.col(c) - l * out.T.col(c)).norm() / (mnorm * out.T.col(c).norm());
    out.residual = std::max(out.residual, r);
  }
  const bool stable = out.lambda.imag().cwiseAbs().maxCoeff() < opts.real_tol &&
                      std::all_of(plus.begin(), plus.end(), [&](int i) { return modes[i].norm > opts.norm_tol; });
  if (stable) {
    const CMatrix p = out.U.adjoint() * out.U - out.V.adjoint() * out.V - CMatrix::Identity(n, n);
    out.paraunitarity_residual = p.cwiseAbs().maxCoeff();
  }
  out.condition = condition_number(out.T);
  return out;
}

SkinMetrics skin_metrics(const BogoliubovTransform& t, double edge_fraction) {
  if (!(edge_fraction > 0.0 && edge_fraction <= 0.5)) throw ValidationError("edge fraction must lie in (0, 0.5]");
  const int n = static_cast<int>(t.U.rows());
  SkinMetrics out;
  out.edge_fraction = edge_fraction;
  out.edge_sites = std::max(1, static_cast<int>(std::floor(edge_fraction * n + 1e-9)));
  out.profiles = RMatrix(n, n);
  out.edge_weight = RVector(n);
  out.ipr = RVector(n);
  for (int k = 0; k < n; ++k) {
    RVector rho = t.U.col(k).cwiseAbs2() + t.V.col(k).cwiseAbs2();
    rho /= rho.sum();
    out.profiles.col(k) = rho;
    const int e = std::min(out.edge_sites, n / 2 > 0 ? n / 2 : 1);
    double edge = rho.head(e).sum();
    if (n > 1) edge += rho.tail(e).sum();
    out.edge_weight(k) = std::min(edge, 1.0);
    out.ipr(k) = rho.squaredNorm();
  }
  out.mean_edge_weight = out.edge_weight.mean();
  out.mean_ipr = out.ipr.mean();
  return out;
}

}  // namespace qbs
