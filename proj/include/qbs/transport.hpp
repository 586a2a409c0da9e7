#pragma once

#include <span>
#include <string>
#include <vector>

#include "qbs/bdg.hpp"

namespace qbs {

struct Port {
  int mode = 0;
  double rate = 0.0;  // kappa_p > 0
};

struct PortSpec {
  std::vector<Port> ports;
  std::vector<double> internal_loss;  // per mode; empty means lossless
  double omega = 0.0;
};

enum class ResponseKind { Susceptibility, Scattering };

/// Response over quadrature channels, interleaved (x, p) per channel mode.
/// data(i, j) is the response of output channel i to input channel j.
struct ResponseMatrix {
  ResponseKind kind = ResponseKind::Susceptibility;
  CMatrix data;
  std::vector<int> modes;            // channel modes, in order
  std::vector<double> gauge;         // per-mode rotation angles of the whole model
  double omega = 0.0;

  std::string label(int channel) const;  // "x3", "p3", ...
};

/// chi = (i omega I + K)^{-1}, then R chi R^T. An empty gauge means no rotation.
/// Throws NumericalError when i omega + K is singular.
ResponseMatrix susceptibility(const QbsModel& model, std::span<const double> gauge, double omega);

/// S = I + Gamma^{1/2} chi Gamma^{1/2} over the port channels, where chi is
/// built from K plus -(kappa_int + kappa_p)/2 on every port and lossy mode.
/// Port and internal losses add to any DAMPING terms already in the model.
ResponseMatrix scattering(const QbsModel& model, const PortSpec& ports, std::span<const double> gauge);

struct PairReport {
  int a = 0;  // channel indices, a < b
  int b = 0;
  double forward = 0.0;   // |R(b <- a)|
  double backward = 0.0;  // |R(a <- b)|
  double asymmetry = 0.0; // forward - backward
  bool flagged = false;   // |asymmetry| > threshold
};

std::vector<PairReport> nonreciprocity_report(const ResponseMatrix& r, double threshold = 1e-6);

struct ChainScanParams {
  int n_sites = 13;
  double t = 1.0;
  double Delta = 0.5;
  double phi_t = 1.5707963267948966;  // quadrature-decoupled point
  double internal_loss = 0.01;
  double kappa_L = 1.0;
  double kappa_M = 2.0;
  double kappa_R = 1.0;
  double theta = 0.0;           // probed quadrature x cos(theta) + p sin(theta)
  std::vector<double> omegas;   // empty: 201 points on [-3t, 3t]
};

struct ChainScanRow {
  double omega = 0.0;
  double gain_right = 0.0;  // |S(R <- M)|^2 in the theta quadrature
  double gain_left = 0.0;   // |S(L <- M)|^2
  double reflection = 0.0;  // |S(M <- M)|^2
};

/// Three-port scan of the hopping/pairing BKC with ports on the first,
/// middle and last sites. N must be odd.
std::vector<ChainScanRow> chain_scattering_scan(const ChainScanParams& p);

}  // namespace qbs
