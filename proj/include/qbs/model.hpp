#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qbs {

enum class TermKind { BS, TMS, SMS, Onsite, Damping };
enum class Boundary { Open, Periodic };

std::string_view to_string(TermKind kind);
std::string_view to_string(Boundary boundary);

/// One quadratic term of the Hamiltonian. Two-site kinds store the "+h.c."
/// representative with site_j < site_k; the conjugate is implied.
///
///   BS      strength e^{i phase} a_j^dag a_k     + h.c.
///   TMS     strength e^{i phase} a_j^dag a_k^dag + h.c.
///   SMS     strength e^{i phase} (a_j^dag)^2     + h.c.
///   Onsite  strength a_j^dag a_j            (already Hermitian, phase must be 0)
///   Damping energy decay rate gamma_j       (phase must be 0)
struct CouplingTerm {
  TermKind kind = TermKind::BS;
  int site_j = 0;
  int site_k = 0;
  double strength = 0.0;
  double phase = 0.0;

  bool operator==(const CouplingTerm&) const = default;
};

struct QbsModel {
  int n_modes = 1;
  std::vector<CouplingTerm> terms;
  Boundary boundary = Boundary::Open;
  int unit_cell = 1;

  bool operator==(const QbsModel&) const = default;

  bool has_damping() const;
};

// Term constructors. bs() and tms() accept the sites in either order and
// canonicalize (a BS phase flips sign when the sites are swapped).
CouplingTerm bs(int from, int to, double strength, double phase = 0.0);
CouplingTerm tms(int a, int b, double strength, double phase = 0.0);
CouplingTerm sms(int site, double strength, double phase = 0.0);
CouplingTerm onsite(int site, double energy);
CouplingTerm damping(int site, double rate);

/// Human-readable invariant violations; empty means valid. Never throws.
std::vector<std::string> validate(const QbsModel& model);

/// Throws ValidationError carrying every violation when the model is invalid.
void require_valid(const QbsModel& model);

/// Shift all site indices by `shift` (mod n_modes) and re-canonicalize.
QbsModel translated(const QbsModel& model, int shift);

/// True when both models hold the same terms up to ordering, with complex
/// coefficients strength*e^{i phase} equal to within `tol`.
bool equivalent_terms(const QbsModel& a, const QbsModel& b, double tol = 1e-12);

/// Open-boundary version of a periodic model: two-site terms whose site
/// separation exceeds half the ring (the wrap-around bonds) are dropped.
/// A separation of exactly half the ring is ambiguous and rejected.
QbsModel with_open_boundary(const QbsModel& model);

// ---------------------------------------------------------------------------
// Named presets.

/// H = J e^{i phi_J} a1^dag a2 + kappa e^{i phi_kappa} a1^dag a2^dag + h.c.,
/// optionally with uniform damping gamma on both modes.
struct TwoModeBkcParams {
  double J = 1.0;
  double kappa = 0.0;
  double phi_J = 0.0;
  double phi_kappa = 0.0;
  double gamma = 0.0;
};

/// Nearest-neighbour bosonic Kitaev chain
///   sum_j (J e^{i phi_J} a_j^dag a_{j+1} + kappa e^{i phi_kappa} a_j^dag a_{j+1}^dag + h.c.)
/// plus an optional uniform onsite shift mu and damping gamma.
struct BkcParams {
  int n_sites = 2;
  double J = 1.0;
  double kappa = 0.0;
  double phi_J = 0.0;
  double phi_kappa = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  Boundary boundary = Boundary::Open;

  /// The hopping/pairing form sum_j (t e^{i phi_t} a_{j+1}^dag a_j
  /// + i Delta a_{j+1}^dag a_j^dag + h.c.)/2, rewritten in BKC parameters:
  /// J = t/2, phi_J = -phi_t, kappa = Delta/2, phi_kappa = pi/2.
  static BkcParams from_hopping_pairing(int n_sites, double t, double Delta, double phi_t,
                                        Boundary boundary = Boundary::Open);
};

/// Squeezed SSH chain with A/B sublattices (mode 2c is A_c, 2c+1 is B_c):
///   sum_c (t1 A_c^dag B_c + t2 A_{c+1}^dag B_c + g1 A_c B_c + g2 A_{c+1} B_c + h.c.)
struct SqueezedSshParams {
  int cells = 2;
  double t1 = 1.0;
  double t2 = 1.0;
  double g1 = 0.0;
  double g2 = 0.0;
  Boundary boundary = Boundary::Periodic;
};

/// H = delta (a1^dag a1 + a2^dag a2) + i kappa (a1^dag a2^dag - a1 a2).
struct TwoModeSqueezeParams {
  double delta = 1.0;
  double kappa = 0.0;
};

/// BKC with single-mode squeezing, in the notation of the source Hamiltonian
///   sum_j (g a_j^dag a_{j+1} + J a_j^dag a_{j+1}^dag) + sum_j eta (a_j^dag)^2 / 2 + h.c.
/// Here g is the beam-splitter strength and J the two-mode squeezing strength.
struct SmsBkcParams {
  int n_sites = 2;
  double g = 1.0;
  double J = 1.0;
  double eta = 0.0;
  Boundary boundary = Boundary::Open;
};

using PresetParams =
    std::variant<TwoModeBkcParams, BkcParams, SqueezedSshParams, TwoModeSqueezeParams, SmsBkcParams>;

QbsModel build_preset(const PresetParams& params);

/// Name-keyed entry point used by config documents and the CLI. Names are
/// "two-mode-bkc", "bkc", "squeezed-ssh", "two-mode-squeeze", "sms-bkc".
/// Each preset documents its required and optional keys in preset_keys().
PresetParams preset_params(std::string_view name, const std::map<std::string, double>& values);
QbsModel build_preset(std::string_view name, const std::map<std::string, double>& values);

struct PresetKeys {
  std::vector<std::string> required;
  std::map<std::string, double> optional;  // key -> default
};
PresetKeys preset_keys(std::string_view name);
std::vector<std::string> preset_names();

// ---------------------------------------------------------------------------
// Model documents (JSON).
//
// Explicit form:
//   {"n_modes": 2, "boundary": "obc", "unit_cell": 1,
//    "terms": [{"kind": "bs", "j": 0, "k": 1, "strength": 1.0, "phase": 0.0}]}
// Preset form:
//   {"preset": "squeezed-ssh", "params": {"cells": 4, "t1": 1, ...}}
// Unknown keys are rejected. Boundary values in preset params use
// "boundary": 0 (obc) or 1 (pbc).

QbsModel load_model(std::string_view text);
std::string save_model(const QbsModel& model);

}  // namespace qbs
