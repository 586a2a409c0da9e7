#include "qbs/linalg.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/MatrixFunctions>

namespace qbs {

RVector balance(CMatrix& a, int max_iterations) {
  // Osborne balancing as convex minimization of F(x) = sum_{i!=j} |a_ij|^2 e^{2(x_j - x_i)}
  // over the log scales x, by damped Newton steps. The Hessian is a weighted
  // graph Laplacian, so long directional chains converge in a few dozen
  // steps where coordinate sweeps would need O(N^2).
  const Eigen::Index n = a.rows();
  RVector x = RVector::Zero(n);
  if (n < 2) return RVector::Ones(n);
  constexpr double kTol = 1e-10;
  constexpr double kMaxLog = 330.0;  // keeps scales inside double range

  RMatrix b = a.cwiseAbs2();
  b.diagonal().setZero();
  const RMatrix b0 = b;
  auto weights = [&](const RVector& xs) {
    RMatrix w(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) w(i, j) = b0(i, j) == 0.0 ? 0.0 : b0(i, j) * std::exp(2.0 * (xs(j) - xs(i)));
    return w;
  };
  double f = b.sum();
  for (int it = 0; it < max_iterations; ++it) {
    const RVector col = b.colwise().sum().transpose();
    const RVector row = b.rowwise().sum();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (col(i) + row(i) > 0.0) worst = std::max(worst, std::abs(col(i) - row(i)) / (col(i) + row(i)));
    if (worst < kTol) break;

    const RVector g = 2.0 * (col - row);
    RMatrix h = -4.0 * (b + b.transpose());
    h.diagonal() = 4.0 * (col + row);
    const double reg = 1e-12 * std::max(h.diagonal().maxCoeff(), 1e-300);
    h.diagonal().array() += reg;
    const RVector step = -h.ldlt().solve(g);
    if (!step.allFinite()) break;

    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      const RVector trial = (x + alpha * step).cwiseMax(-kMaxLog).cwiseMin(kMaxLog);
      RMatrix bt = weights(trial);
      const double ft = bt.sum();
      if (std::isfinite(ft) && ft <= f + 1e-4 * alpha * g.dot(step)) {
        x = trial;
        b = std::move(bt);
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  x.array() -= x.mean();
  RVector d = x.array().exp();
  for (Eigen::Index j = 0; j < n; ++j) a.col(j) *= d(j);
  for (Eigen::Index i = 0; i < n; ++i) a.row(i) /= d(i);
  return d;
}

double condition_number(const CMatrix& a) {
  if (a.size() == 0) return 1.0;
  Eigen::JacobiSVD<CMatrix> svd(a);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

CMatrix expm(const CMatrix& a) { return a.exp(); }

RMatrix expm(const RMatrix& a) { return a.exp(); }

std::vector<std::vector<int>> cluster_values(const CVector& values, double radius) {
  const int n = static_cast<int>(values.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(values(i) - values(j)) < radius) {
        const int ri = find(i);
        const int rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
  std::vector<std::vector<int>> out;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[root]].push_back(i);
  }
  return out;
}

cplx unit_phase(double phase) {
  double c = std::cos(phase);
  double s = std::sin(phase);
  if (std::abs(c) < 1e-15) c = 0.0;
  if (std::abs(s) < 1e-15) s = 0.0;
  return {c, s};
}

double phase_step(cplx a, cplx b) {
  double step = std::arg(b) - std::arg(a);
  while (step > std::numbers::pi) step -= 2.0 * std::numbers::pi;
  while (step <= -std::numbers::pi) step += 2.0 * std::numbers::pi;
  return step;
}

std::vector<double> linspace(double start, double stop, int count) {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) return {start};
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    // Pin the endpoint exactly; interior points from the start.
    out.push_back(i == count - 1 ? stop : start + (stop - start) * i / (count - 1));
  }
  return out;
}

}  // namespace qbs
