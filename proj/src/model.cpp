#include "qbs/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qbs/errors.hpp"

namespace qbs {

using json = nlohmann::json;

std::string_view to_string(TermKind kind) {
  switch (kind) {
    case TermKind::BS: return "bs";
    case TermKind::TMS: return "tms";
    case TermKind::SMS: return "sms";
    case TermKind::Onsite: return "onsite";
    case TermKind::Damping: return "damping";
  }
  return "?";
}

std::string_view to_string(Boundary boundary) {
  return boundary == Boundary::Periodic ? "pbc" : "obc";
}

bool QbsModel::has_damping() const {
  return std::any_of(terms.begin(), terms.end(),
                     [](const CouplingTerm& t) { return t.kind == TermKind::Damping && t.strength != 0.0; });
}

CouplingTerm bs(int from, int to, double strength, double phase) {
  if (from > to) return {TermKind::BS, to, from, strength, -phase};
  return {TermKind::BS, from, to, strength, phase};
}

CouplingTerm tms(int a, int b, double strength, double phase) {
  return {TermKind::TMS, std::min(a, b), std::max(a, b), strength, phase};
}

CouplingTerm sms(int site, double strength, double phase) {
  return {TermKind::SMS, site, site, strength, phase};
}

CouplingTerm onsite(int site, double energy) { return {TermKind::Onsite, site, site, energy, 0.0}; }

CouplingTerm damping(int site, double rate) { return {TermKind::Damping, site, site, rate, 0.0}; }

namespace {

bool two_site(TermKind kind) { return kind == TermKind::BS || kind == TermKind::TMS; }

std::string describe(std::size_t index, const CouplingTerm& t) {
  std::ostringstream os;
  os << "term " << index << " (" << to_string(t.kind) << " " << t.site_j << "," << t.site_k << ")";
  return os.str();
}

}  // namespace

std::vector<std::string> validate(const QbsModel& model) {
  std::vector<std::string> out;
  if (model.n_modes < 1) out.push_back("n_modes must be >= 1");
  if (model.unit_cell < 1) {
    out.push_back("unit_cell must be >= 1");
  } else if (model.boundary == Boundary::Periodic && model.n_modes >= 1 &&
             model.n_modes % model.unit_cell != 0) {
    out.push_back("unit_cell must divide n_modes for periodic boundary");
  }

  std::set<std::tuple<TermKind, int, int>> seen;
  for (std::size_t i = 0; i < model.terms.size(); ++i) {
    const auto& t = model.terms[i];
    const auto where = describe(i, t);
    if (t.site_j < 0 || t.site_j >= model.n_modes || t.site_k < 0 || t.site_k >= model.n_modes)
      out.push_back(where + ": site index out of range");
    if (!std::isfinite(t.strength)) out.push_back(where + ": strength must be finite");
    if (!std::isfinite(t.phase)) out.push_back(where + ": phase must be finite");
    if (two_site(t.kind)) {
      if (t.site_j == t.site_k)
        out.push_back(where + ": " + std::string(t.kind == TermKind::BS ? "BS" : "TMS") +
                      " requires distinct sites");
      else if (t.site_j > t.site_k)
        out.push_back(where + ": two-site terms must be stored with site_j < site_k");
    } else if (t.site_j != t.site_k) {
      out.push_back(where + ": single-site term requires site_j == site_k");
    }
    if (t.kind == TermKind::Damping && t.strength < 0.0) out.push_back(where + ": damping rate must be >= 0");
    if ((t.kind == TermKind::Onsite || t.kind == TermKind::Damping) && t.phase != 0.0)
      out.push_back(where + ": phase must be 0 for onsite and damping terms");

    const auto key = std::make_tuple(t.kind, std::min(t.site_j, t.site_k), std::max(t.site_j, t.site_k));
    if (!seen.insert(key).second) out.push_back(where + ": duplicate term");
  }
  return out;
}

void require_valid(const QbsModel& model) {
  const auto report = validate(model);
  if (report.empty()) return;
  std::string msg;
  for (const auto& v : report) {
    if (!msg.empty()) msg += "; ";
    msg += v;
  }
  throw ValidationError(msg);
}

QbsModel translated(const QbsModel& model, int shift) {
  QbsModel out = model;
  const int n = model.n_modes;
  auto wrap = [n](int s) { return ((s % n) + n) % n; };
  for (auto& t : out.terms) {
    const int j = wrap(t.site_j + shift);
    const int k = wrap(t.site_k + shift);
    switch (t.kind) {
      case TermKind::BS: t = bs(j, k, t.strength, t.phase); break;
      case TermKind::TMS: t = tms(j, k, t.strength, t.phase); break;
      default: t.site_j = j; t.site_k = j; break;
    }
  }
  return out;
}

bool equivalent_terms(const QbsModel& a, const QbsModel& b, double tol) {
  if (a.n_modes != b.n_modes || a.terms.size() != b.terms.size()) return false;
  using Key = std::tuple<TermKind, int, int>;
  auto index = [](const QbsModel& m) {
    std::map<Key, std::complex<double>> out;
    for (const auto& t : m.terms) out[{t.kind, t.site_j, t.site_k}] += std::polar(t.strength, t.phase);
    return out;
  };
  const auto ia = index(a);
  const auto ib = index(b);
  if (ia.size() != ib.size()) return false;
  for (const auto& [key, value] : ia) {
    auto it = ib.find(key);
    if (it == ib.end() || std::abs(it->second - value) > tol) return false;
  }
  return true;
}

QbsModel with_open_boundary(const QbsModel& model) {
  require_valid(model);
  if (model.boundary != Boundary::Periodic) throw ValidationError("with_open_boundary needs a periodic model");
  QbsModel out = model;
  out.boundary = Boundary::Open;
  out.terms.clear();
  const int n = model.n_modes;
  for (const auto& t : model.terms) {
    if (two_site(t.kind)) {
      const int sep = t.site_k - t.site_j;
      if (2 * sep == n) throw ValidationError("bond spans exactly half the ring; boundary is ambiguous");
      if (2 * sep > n) continue;
    }
    out.terms.push_back(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Presets

BkcParams BkcParams::from_hopping_pairing(int n_sites, double t, double Delta, double phi_t, Boundary boundary) {
  BkcParams p;
  p.n_sites = n_sites;
  p.J = t / 2.0;
  p.phi_J = -phi_t;
  p.kappa = Delta / 2.0;
  p.phi_kappa = std::numbers::pi / 2.0;
  p.boundary = boundary;
  return p;
}

namespace {

void require_finite(std::initializer_list<std::pair<const char*, double>> values) {
  for (const auto& [name, v] : values)
    if (!std::isfinite(v)) throw ValidationError(std::string("preset parameter '") + name + "' is not finite");
}

void push_if(std::vector<CouplingTerm>& terms, const CouplingTerm& t) {
  if (t.strength != 0.0) terms.push_back(t);
}

void require_chain_length(int n, Boundary boundary, const char* what) {
  const int min_n = boundary == Boundary::Periodic ? 3 : 2;
  if (n < min_n)
    throw ValidationError(std::string(what) + " needs at least " + std::to_string(min_n) + " sites for " +
                          std::string(to_string(boundary)));
}

QbsModel make(const TwoModeBkcParams& p) {
  require_finite({{"J", p.J}, {"kappa", p.kappa}, {"phi_J", p.phi_J}, {"phi_kappa", p.phi_kappa}, {"gamma", p.gamma}});
  QbsModel m;
  m.n_modes = 2;
  push_if(m.terms, bs(0, 1, p.J, p.phi_J));
  push_if(m.terms, tms(0, 1, p.kappa, p.phi_kappa));
  push_if(m.terms, damping(0, p.gamma));
  push_if(m.terms, damping(1, p.gamma));
  return m;
}

QbsModel make(const BkcParams& p) {
  require_finite({{"J", p.J}, {"kappa", p.kappa}, {"phi_J", p.phi_J}, {"phi_kappa", p.phi_kappa}, {"mu", p.mu},
                  {"gamma", p.gamma}});
  require_chain_length(p.n_sites, p.boundary, "bkc");
  QbsModel m;
  m.n_modes = p.n_sites;
  m.boundary = p.boundary;
  const int bonds = p.boundary == Boundary::Periodic ? p.n_sites : p.n_sites - 1;
  for (int j = 0; j < bonds; ++j) {
    const int k = (j + 1) % p.n_sites;
    push_if(m.terms, bs(j, k, p.J, p.phi_J));
    push_if(m.terms, tms(j, k, p.kappa, p.phi_kappa));
  }
  for (int j = 0; j < p.n_sites; ++j) {
    push_if(m.terms, onsite(j, p.mu));
    push_if(m.terms, damping(j, p.gamma));
  }
  return m;
}

QbsModel make(const SqueezedSshParams& p) {
  require_finite({{"t1", p.t1}, {"t2", p.t2}, {"g1", p.g1}, {"g2", p.g2}});
  const int min_cells = p.boundary == Boundary::Periodic ? 2 : 1;
  if (p.cells < min_cells)
    throw ValidationError("squeezed-ssh needs at least " + std::to_string(min_cells) + " cells");
  QbsModel m;
  m.n_modes = 2 * p.cells;
  m.boundary = p.boundary;
  m.unit_cell = 2;
  for (int c = 0; c < p.cells; ++c) {
    const int a = 2 * c;
    const int b = 2 * c + 1;
    push_if(m.terms, bs(a, b, p.t1));
    push_if(m.terms, tms(a, b, p.g1));
    if (c + 1 < p.cells || p.boundary == Boundary::Periodic) {
      const int a_next = (2 * c + 2) % m.n_modes;
      push_if(m.terms, bs(a_next, b, p.t2));
      push_if(m.terms, tms(a_next, b, p.g2));
    }
  }
  return m;
}

QbsModel make(const TwoModeSqueezeParams& p) {
  require_finite({{"delta", p.delta}, {"kappa", p.kappa}});
  QbsModel m;
  m.n_modes = 2;
  push_if(m.terms, onsite(0, p.delta));
  push_if(m.terms, onsite(1, p.delta));
  push_if(m.terms, tms(0, 1, p.kappa, std::numbers::pi / 2.0));
  return m;
}

QbsModel make(const SmsBkcParams& p) {
  require_finite({{"g", p.g}, {"J", p.J}, {"eta", p.eta}});
  require_chain_length(p.n_sites, p.boundary, "sms-bkc");
  QbsModel m;
  m.n_modes = p.n_sites;
  m.boundary = p.boundary;
  const int bonds = p.boundary == Boundary::Periodic ? p.n_sites : p.n_sites - 1;
  for (int j = 0; j < bonds; ++j) {
    const int k = (j + 1) % p.n_sites;
    push_if(m.terms, bs(j, k, p.g));
    push_if(m.terms, tms(j, k, p.J));
  }
  // Stored SMS strength multiplies (a^dag)^2 directly.
  for (int j = 0; j < p.n_sites; ++j) push_if(m.terms, sms(j, p.eta / 2.0));
  return m;
}

struct PresetSpec {
  std::vector<std::string> required;
  std::map<std::string, double> optional;
};

const std::map<std::string, PresetSpec, std::less<>>& preset_table() {
  static const std::map<std::string, PresetSpec, std::less<>> table = {
      {"two-mode-bkc", {{"J", "kappa"}, {{"phi_J", 0.0}, {"phi_kappa", 0.0}, {"gamma", 0.0}}}},
      {"bkc",
       {{"N"},
        {{"J", 0.0},
         {"kappa", 0.0},
         {"phi_J", 0.0},
         {"phi_kappa", 0.0},
         {"t", 0.0},
         {"Delta", 0.0},
         {"phi_t", 0.0},
         {"mu", 0.0},
         {"gamma", 0.0},
         {"boundary", 0.0}}}},
      {"squeezed-ssh", {{"cells", "t1", "t2", "g1", "g2"}, {{"boundary", 1.0}}}},
      {"two-mode-squeeze", {{"delta", "kappa"}, {}}},
      {"sms-bkc", {{"N", "g", "J", "eta"}, {{"boundary", 0.0}}}},
  };
  return table;
}

int as_count(const std::string& key, double v) {
  if (!std::isfinite(v) || v != std::floor(v) || v > 1e9 || v < -1e9)
    throw ValidationError("preset parameter '" + key + "' must be an integer");
  return static_cast<int>(v);
}

Boundary as_boundary(double v) {
  if (v == 0.0) return Boundary::Open;
  if (v == 1.0) return Boundary::Periodic;
  throw ValidationError("preset parameter 'boundary' must be 0 (obc) or 1 (pbc)");
}

}  // namespace

QbsModel build_preset(const PresetParams& params) {
  QbsModel m = std::visit([](const auto& p) { return make(p); }, params);
  require_valid(m);
  return m;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, spec] : preset_table()) out.push_back(name);
  return out;
}

PresetKeys preset_keys(std::string_view name) {
  const auto& table = preset_table();
  auto it = table.find(name);
  if (it == table.end()) throw ValidationError("unknown preset '" + std::string(name) + "'");
  return {it->second.required, it->second.optional};
}

PresetParams preset_params(std::string_view name, const std::map<std::string, double>& values) {
  const PresetKeys keys = preset_keys(name);
  for (const auto& [key, v] : values) {
    const bool known = std::find(keys.required.begin(), keys.required.end(), key) != keys.required.end() ||
                       keys.optional.count(key) > 0;
    if (!known) throw ValidationError("preset '" + std::string(name) + "' has no parameter '" + key + "'");
    if (std::isnan(v)) throw ValidationError("preset parameter '" + key + "' is NaN");
  }
  for (const auto& key : keys.required)
    if (!values.count(key))
      throw ValidationError("preset '" + std::string(name) + "' is missing parameter '" + key + "'");
  auto get = [&](const std::string& key) {
    auto it = values.find(key);
    if (it != values.end()) return it->second;
    return keys.optional.at(key);
  };

  if (name == "two-mode-bkc") {
    return TwoModeBkcParams{get("J"), get("kappa"), get("phi_J"), get("phi_kappa"), get("gamma")};
  }
  if (name == "bkc") {
    const int n = as_count("N", get("N"));
    const Boundary boundary = as_boundary(get("boundary"));
    const bool hopping_form = values.count("t") || values.count("Delta") || values.count("phi_t");
    const bool coupling_form = values.count("J") || values.count("kappa") || values.count("phi_J") ||
                               values.count("phi_kappa");
    if (hopping_form && coupling_form)
      throw ValidationError("bkc takes either (J, kappa, phi_J, phi_kappa) or (t, Delta, phi_t), not both");
    BkcParams p;
    if (hopping_form) {
      p = BkcParams::from_hopping_pairing(n, get("t"), get("Delta"), get("phi_t"), boundary);
    } else {
      p.n_sites = n;
      p.J = get("J");
      p.kappa = get("kappa");
      p.phi_J = get("phi_J");
      p.phi_kappa = get("phi_kappa");
      p.boundary = boundary;
    }
    p.mu = get("mu");
    p.gamma = get("gamma");
    return p;
  }
  if (name == "squeezed-ssh") {
    return SqueezedSshParams{as_count("cells", get("cells")), get("t1"), get("t2"), get("g1"), get("g2"),
                             as_boundary(get("boundary"))};
  }
  if (name == "two-mode-squeeze") {
    return TwoModeSqueezeParams{get("delta"), get("kappa")};
  }
  // sms-bkc
  return SmsBkcParams{as_count("N", get("N")), get("g"), get("J"), get("eta"), as_boundary(get("boundary"))};
}

QbsModel build_preset(std::string_view name, const std::map<std::string, double>& values) {
  return build_preset(preset_params(name, values));
}

// ---------------------------------------------------------------------------
// Documents

namespace {

std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ParseError(where + ": unknown key '" + it.key() + "'");
  }
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
  const auto x = v.get<long long>();
  if (x < -1000000000LL || x > 1000000000LL) throw ParseError(where + ": integer out of range");
  return static_cast<int>(x);
}

TermKind parse_kind(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected a string");
  const auto s = v.get<std::string>();
  for (TermKind k : {TermKind::BS, TermKind::TMS, TermKind::SMS, TermKind::Onsite, TermKind::Damping})
    if (s == to_string(k)) return k;
  throw ParseError(where + ": unknown term kind '" + s + "'");
}

Boundary parse_boundary(const json& v, const std::string& where) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "obc") return Boundary::Open;
    if (s == "pbc") return Boundary::Periodic;
  }
  throw ParseError(where + ": expected \"obc\" or \"pbc\"");
}

QbsModel explicit_model(const json& doc) {
  reject_unknown(doc, {"n_modes", "boundary", "unit_cell", "terms"}, "document");
  QbsModel m;
  m.n_modes = integer(field(doc, "n_modes", "document"), "n_modes");
  if (m.n_modes < 1) throw ParseError("n_modes: must be a positive integer");
  m.boundary = parse_boundary(field(doc, "boundary", "document"), "boundary");
  m.unit_cell = doc.contains("unit_cell") ? integer(doc["unit_cell"], "unit_cell") : 1;
  if (m.unit_cell < 1) throw ParseError("unit_cell: must be a positive integer");
  const json& terms = field(doc, "terms", "document");
  if (!terms.is_array()) throw ParseError("terms: expected a list");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string where = "terms[" + std::to_string(i) + "]";
    const json& t = terms[i];
    if (!t.is_object()) throw ParseError(where + ": expected an object");
    reject_unknown(t, {"kind", "j", "k", "strength", "phase"}, where);
    CouplingTerm term;
    term.kind = parse_kind(field(t, "kind", where), where + ".kind");
    term.site_j = integer(field(t, "j", where), where + ".j");
    term.site_k = t.contains("k") ? integer(t["k"], where + ".k") : term.site_j;
    term.strength = number(field(t, "strength", where), where + ".strength");
    term.phase = t.contains("phase") ? number(t["phase"], where + ".phase") : 0.0;
    m.terms.push_back(term);
  }
  require_valid(m);
  return m;
}

QbsModel preset_model(const json& doc) {
  reject_unknown(doc, {"preset", "params"}, "document");
  const json& name = field(doc, "preset", "document");
  if (!name.is_string()) throw ParseError("preset: expected a string");
  std::map<std::string, double> values;
  if (doc.contains("params")) {
    const json& params = doc["params"];
    if (!params.is_object()) throw ParseError("params: expected an object");
    for (auto it = params.begin(); it != params.end(); ++it) {
      const std::string where = "params." + it.key();
      if (it.key() == "boundary" && it->is_string())
        values[it.key()] = parse_boundary(*it, where) == Boundary::Periodic ? 1.0 : 0.0;
      else
        values[it.key()] = number(*it, where);
    }
  }
  return build_preset(name.get<std::string>(), values);
}

}  // namespace

QbsModel load_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(locate(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("document: expected an object");
  return doc.contains("preset") ? preset_model(doc) : explicit_model(doc);
}

std::string save_model(const QbsModel& model) {
  require_valid(model);
  json terms = json::array();
  for (const auto& t : model.terms) {
    terms.push_back({{"kind", to_string(t.kind)},
                     {"j", t.site_j},
                     {"k", t.site_k},
                     {"strength", t.strength},
                     {"phase", t.phase}});
  }
  json doc = {{"n_modes", model.n_modes},
              {"boundary", to_string(model.boundary)},
              {"unit_cell", model.unit_cell},
              {"terms", terms}};
  return doc.dump(2) + "\n";
}

}  // namespace qbs
