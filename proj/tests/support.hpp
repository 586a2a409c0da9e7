#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbs/bdg.hpp"
#include "qbs/model.hpp"

namespace qbs::test {

inline nlohmann::json load_json(const std::string& name) {
  std::ifstream in(std::string(QBS_TEST_DATA) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return nlohmann::json::parse(ss.str());
}

inline CMatrix read_matrix(const nlohmann::json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  const int rows = static_cast<int>(re.size());
  const int cols = static_cast<int>(re.at(0).size());
  CMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = {re[r][c].get<double>(), im[r][c].get<double>()};
  return m;
}

inline std::vector<cplx> read_vector(const nlohmann::json& j) {
  std::vector<cplx> v;
  for (std::size_t i = 0; i < j.at("re").size(); ++i) v.emplace_back(j["re"][i].get<double>(), j["im"][i].get<double>());
  return v;
}

inline std::vector<cplx> to_std(const CVector& v) { return {v.data(), v.data() + v.size()}; }

/// Largest distance in an optimal-ish matching of two multisets: each value
/// of `a` takes the nearest unused value of `b`, largest errors first being
/// irrelevant at the tolerances used here.
inline double multiset_distance(std::vector<cplx> a, std::vector<cplx> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  std::vector<bool> used(b.size(), false);
  double worst = 0.0;
  for (const cplx& x : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < b.size(); ++i)
      if (!used[i] && std::abs(b[i] - x) < best) {
        best = std::abs(b[i] - x);
        arg = i;
      }
    used[arg] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Random damping-free model: a translation-invariant ring when `periodic`,
/// otherwise an open chain with arbitrary-range couplings. Strengths are O(1).
struct RandomModels {
  std::mt19937_64 rng;
  explicit RandomModels(std::uint64_t seed) : rng(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }

  QbsModel open_chain(int max_modes) {
    QbsModel m;
    m.n_modes = integer(1, max_modes);
    const int n = m.n_modes;
    for (int j = 0; j < n; ++j) {
      if (uniform(0, 1) < 0.5) m.terms.push_back(onsite(j, uniform(-1, 1)));
      if (uniform(0, 1) < 0.3) m.terms.push_back(sms(j, uniform(0, 0.5), uniform(-3.2, 3.2)));
    }
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const double p = k == j + 1 ? 0.8 : 2.0 / n;
        if (uniform(0, 1) < p) m.terms.push_back(bs(j, k, uniform(0, 1), uniform(-3.2, 3.2)));
        if (uniform(0, 1) < p * 0.6) m.terms.push_back(tms(j, k, uniform(0, 0.6), uniform(-3.2, 3.2)));
      }
    return m;
  }

  /// Ring of `cells` cells of `cell` modes with couplings reaching at most
  /// `reach` cells. cells > 2 * reach keeps every bond unambiguous.
  QbsModel ring(int cell, int cells, int reach) {
    QbsModel m;
    m.n_modes = cell * cells;
    m.boundary = Boundary::Periodic;
    m.unit_cell = cell;
    struct Bond {
      TermKind kind;
      int a, b, dr;
      double s, ph;
    };
    std::vector<Bond> bonds;
    for (int a = 0; a < cell; ++a) {
      if (uniform(0, 1) < 0.5) bonds.push_back({TermKind::Onsite, a, a, 0, uniform(-1, 1), 0.0});
      if (uniform(0, 1) < 0.3) bonds.push_back({TermKind::SMS, a, a, 0, uniform(0, 0.4), uniform(-3.2, 3.2)});
    }
    for (int dr = 0; dr <= reach; ++dr)
      for (int a = 0; a < cell; ++a)
        for (int b = 0; b < cell; ++b) {
          if (dr == 0 && b <= a) continue;
          if (uniform(0, 1) < 0.6) bonds.push_back({TermKind::BS, a, b, dr, uniform(0, 1), uniform(-3.2, 3.2)});
          if (uniform(0, 1) < 0.4) bonds.push_back({TermKind::TMS, a, b, dr, uniform(0, 0.5), uniform(-3.2, 3.2)});
        }
    for (int c = 0; c < cells; ++c)
      for (const auto& bd : bonds) {
        const int j = c * cell + bd.a;
        const int k = ((c + bd.dr) % cells) * cell + bd.b;
        switch (bd.kind) {
          case TermKind::Onsite: m.terms.push_back(onsite(j, bd.s)); break;
          case TermKind::SMS: m.terms.push_back(sms(j, bd.s, bd.ph)); break;
          case TermKind::BS: m.terms.push_back(bs(j, k, bd.s, bd.ph)); break;
          case TermKind::TMS: m.terms.push_back(tms(j, k, bd.s, bd.ph)); break;
          default: break;
        }
      }
    return m;
  }
};

}  // namespace qbs::test
