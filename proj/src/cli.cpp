#include "qbs/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "qbs/dynamics.hpp"
#include "qbs/errors.hpp"
#include "qbs/topology.hpp"
#include "qbs/transport.hpp"

namespace qbs::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Numbers and ranges

double parse_number(std::string_view text, std::string_view what) {
  std::string s(text);
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  if (s.empty()) throw ParseError("empty value for " + std::string(what));
  // from_chars does not take a leading '+'.
  const std::size_t skip = s[0] == '+' ? 1 : 0;
  double v = 0.0;
  const auto* first = s.data() + skip;
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec == std::errc::result_out_of_range) throw ValidationError(std::string(what) + " is out of range: " + s);
  if (ec != std::errc() || ptr != last) throw ParseError("cannot read " + std::string(what) + " from '" + s + "'");
  if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite, got " + s);
  return v;
}

namespace {

int parse_int(std::string_view text, std::string_view what) {
  const double v = parse_number(text, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ValidationError(std::string(what) + " must be an integer");
  return static_cast<int>(v);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Range parse_range(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw ParseError("range '" + std::string(text) + "' is not start:stop:count");
  Range r;
  r.start = parse_number(parts[0], "range start");
  r.stop = parse_number(parts[1], "range stop");
  const double c = parse_number(parts[2], "range count");
  if (c != std::floor(c)) throw ParseError("range count must be an integer in '" + std::string(text) + "'");
  if (c < 1 || c > 1e7) throw ValidationError("range count must lie in [1, 1e7]");
  r.count = static_cast<int>(c);
  if (r.count == 1 && r.start != r.stop) throw ValidationError("a one-point range needs start == stop");
  return r;
}

std::vector<double> Range::values() const {
  if (count == 1) return {start};
  return linspace(start, stop, count);
}

// ---------------------------------------------------------------------------
// Tables

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // no "-0"
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return std::get<std::string>(c);
}

Cell read_cell(const std::string& s) {
  long long i = 0;
  auto [p1, e1] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (e1 == std::errc() && p1 == s.data() + s.size() && !s.empty()) return i;
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double d = 0.0;
  auto [p2, e2] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (e2 == std::errc() && p2 == s.data() + s.size() && !s.empty()) return d;
  return s;
}

}  // namespace

std::string to_csv(const Table& t) {
  std::ostringstream os;
  os << "# qbs " << t.command << "\n";
  for (const auto& [k, v] : t.parameters) os << "# " << k << " = " << v << "\n";
  for (const auto& n : t.notes) os << "# note: " << n << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
    os << "\n";
  }
  return os.str();
}

std::string to_json(const Table& t) {
  json j;
  j["command"] = t.command;
  j["parameters"] = t.parameters;
  j["notes"] = t.notes;
  j["columns"] = t.columns;
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& c : row) {
      if (const auto* i = std::get_if<long long>(&c)) r.push_back(*i);
      else if (const auto* d = std::get_if<double>(&c)) r.push_back(std::isfinite(*d) ? json(*d) : json(nullptr));
      else r.push_back(std::get<std::string>(c));
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(1) + "\n";
}

Table parse_csv(std::string_view text) {
  Table t;
  std::istringstream is{std::string(text)};
  std::string line;
  bool have_columns = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# qbs ", 0) == 0) {
      t.command = line.substr(6);
    } else if (line.rfind("# note: ", 0) == 0) {
      t.notes.push_back(line.substr(8));
    } else if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) throw ParseError("bad header line: " + line);
      t.parameters[line.substr(2, eq - 2)] = line.substr(eq + 3);
    } else if (!have_columns) {
      t.columns = split(line, ',');
      have_columns = true;
    } else {
      std::vector<Cell> row;
      for (const auto& s : split(line, ',')) row.push_back(read_cell(s));
      if (row.size() != t.columns.size()) throw ParseError("row width differs from the column count");
      t.rows.push_back(std::move(row));
    }
  }
  if (!have_columns) throw ParseError("csv has no column line");
  return t;
}

Table parse_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
  Table t;
  try {
    t.command = j.at("command").get<std::string>();
    t.parameters = j.at("parameters").get<std::map<std::string, std::string>>();
    t.notes = j.at("notes").get<std::vector<std::string>>();
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      std::vector<Cell> row;
      for (const auto& c : r) {
        if (c.is_null()) row.emplace_back(std::nan(""));
        else if (c.is_number_integer()) row.emplace_back(c.get<long long>());
        else if (c.is_number()) row.emplace_back(c.get<double>());
        else row.emplace_back(c.get<std::string>());
      }
      if (row.size() != t.columns.size()) throw ParseError("row width differs from the column count");
      t.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Jobs

namespace {

// Union of every preset parameter; each gets --KEY and --KEY-range flags.
const std::vector<std::string> kPresetKeys = {"J",  "kappa", "phi_J", "phi_kappa", "gamma", "N",  "t",
                                              "Delta", "phi_t", "mu", "cells", "t1", "t2", "g1",
                                              "g2", "delta", "eta", "g"};

struct Job {
  std::string command;
  std::string preset;
  std::string config;
  std::string output;
  std::string format = "csv";
  std::string boundary;
  int jobs = 0;
  std::map<std::string, std::string> values;  // preset keys and command options, raw text
  std::vector<std::pair<std::string, std::string>> ranges;
};

// Evaluates f(0..n-1) on worker threads. Results keep their index order and
// the lowest-index failure is rethrown, so output never depends on timing.
template <class F>
auto parallel_map(std::size_t n, int jobs, F f) -> std::vector<decltype(f(std::size_t{0}))> {
  using R = decltype(f(std::size_t{0}));
  std::vector<std::optional<R>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads = std::min<std::size_t>(n, jobs > 0 ? jobs : std::min<std::size_t>(hw, 8));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Where the model comes from: a named preset (whose parameters can be swept)
/// or an explicit term list from a config document.
struct ModelSource {
  std::string preset;
  std::map<std::string, double> params;
  std::optional<QbsModel> fixed;

  bool sweepable(const std::string& key) const {
    if (preset.empty()) return false;
    const auto keys = preset_keys(preset);
    return std::find(keys.required.begin(), keys.required.end(), key) != keys.required.end() ||
           keys.optional.count(key) > 0;
  }

  QbsModel build(const std::string& key = "", double value = 0.0) const {
    if (fixed) return *fixed;
    auto p = params;
    if (!key.empty()) p[key] = value;
    return build_preset(preset, p);
  }
};

class Runner {
 public:
  explicit Runner(Job job) : job_(std::move(job)) {}

  Table run();

 private:
  Job job_;
  Table table_;

  bool has(const std::string& key) const { return job_.values.count(key) > 0; }
  double number(const std::string& key, double fallback) const {
    auto it = job_.values.find(key);
    return it == job_.values.end() ? fallback : parse_number(it->second, "--" + key);
  }
  int integer(const std::string& key, int fallback) const {
    auto it = job_.values.find(key);
    return it == job_.values.end() ? fallback : parse_int(it->second, "--" + key);
  }
  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : split(job_.values.at(key), ',')) out.push_back(parse_int(s, "--" + key));
    return out;
  }

  void record(const std::string& key, const std::string& value) { table_.parameters[key] = value; }
  void record(const std::string& key, double value) { record(key, format_double(value)); }

  ModelSource model_source();
  /// The single allowed sweep, if any. `extra` lists command-level keys that
  /// may be swept besides the preset parameters.
  std::optional<std::pair<std::string, std::vector<double>>> sweep(const ModelSource& src,
                                                                    const std::vector<std::string>& extra,
                                                                    bool required);
  void reject_ranges_except(const std::vector<std::string>& allowed) const;
  void reject_model_flags(const std::vector<std::string>& allowed) const;

  void spectrum();
  void ep_scan();
  void winding();
  void skin();
  void transport();
  void chain_scan();
  void evolve();
  void regime_map_cmd();
};

ModelSource Runner::model_source() {
  if (!job_.preset.empty() && !job_.config.empty()) throw ValidationError("give either --preset or --config, not both");
  if (job_.preset.empty() && job_.config.empty()) throw ValidationError("a model is required: --preset NAME or --config FILE");
  ModelSource src;
  if (!job_.config.empty()) {
    const std::string text = read_file(job_.config);
    const QbsModel m = load_model(text);  // full validation of the document
    const json doc = json::parse(text);
    record("config", job_.config);
    if (doc.contains("preset")) {
      src.preset = doc.at("preset").get<std::string>();
      if (doc.contains("params"))
        for (const auto& [k, v] : doc.at("params").items())
          src.params[k] = v.is_string() ? (v.get<std::string>() == "pbc" ? 1.0 : 0.0) : v.get<double>();
    } else {
      src.fixed = m;
      record("model", json::parse(save_model(m)).dump());
    }
  } else {
    src.preset = job_.preset;
  }
  for (const auto& key : kPresetKeys)
    if (has(key)) {
      if (src.preset.empty()) throw ValidationError("--" + key + " needs a preset model");
      src.params[key] = number(key, 0.0);
    }
  if (!job_.boundary.empty()) {
    if (src.preset.empty()) throw ValidationError("--boundary needs a preset model");
    if (job_.boundary == "obc" || job_.boundary == "0") src.params["boundary"] = 0.0;
    else if (job_.boundary == "pbc" || job_.boundary == "1") src.params["boundary"] = 1.0;
    else throw ValidationError("--boundary takes obc or pbc");
  }
  if (!src.preset.empty()) {
    record("preset", src.preset);
    for (const auto& [k, v] : src.params) record(k, v);
  }
  return src;
}

std::optional<std::pair<std::string, std::vector<double>>> Runner::sweep(const ModelSource& src,
                                                                         const std::vector<std::string>& extra,
                                                                         bool required) {
  if (job_.ranges.size() > 1) throw ValidationError("only one --KEY-range sweep is allowed for " + job_.command);
  if (job_.ranges.empty()) {
    if (required) throw ValidationError(job_.command + " needs a --KEY-range sweep");
    return std::nullopt;
  }
  const auto& [key, text] = job_.ranges.front();
  const bool command_key = std::find(extra.begin(), extra.end(), key) != extra.end();
  if (!command_key && !src.sweepable(key))
    throw ValidationError("cannot sweep '" + key + "'" + (src.preset.empty() ? " without a preset" : " for preset " + src.preset));
  if (has(key)) throw ValidationError("--" + key + " and --" + key + "-range both given");
  const Range r = parse_range(text);
  record(key + "-range", text);
  table_.parameters.erase(key);
  return std::make_pair(key, r.values());
}

void Runner::reject_ranges_except(const std::vector<std::string>& allowed) const {
  for (const auto& [key, text] : job_.ranges)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError(job_.command + " does not take --" + key + "-range");
}

void Runner::reject_model_flags(const std::vector<std::string>& allowed) const {
  if (!job_.preset.empty() || !job_.config.empty() || !job_.boundary.empty())
    throw ValidationError(job_.command + " builds its own model; --preset, --config and --boundary do not apply");
  for (const auto& key : kPresetKeys)
    if (has(key) && std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError(job_.command + " does not take --" + key);
}

Table Runner::run() {
  table_.command = job_.command;
  if (job_.command == "spectrum") spectrum();
  else if (job_.command == "ep-scan") ep_scan();
  else if (job_.command == "winding") winding();
  else if (job_.command == "skin") skin();
  else if (job_.command == "transport") transport();
  else if (job_.command == "chain-scan") chain_scan();
  else if (job_.command == "evolve") evolve();
  else regime_map_cmd();
  return std::move(table_);
}

// spectrum: one row per eigenvalue of M, sorted by (Re, Im).
void Runner::spectrum() {
  const auto src = model_source();
  const auto sw = sweep(src, {}, false);
  const std::vector<double> points = sw ? sw->second : std::vector<double>{0.0};
  const std::string key = sw ? sw->first : "";
  const auto spectra = parallel_map(points.size(), job_.jobs, [&](std::size_t i) {
    return eigenvalues(build_real_space(src.build(key, points[i])));
  });
  if (sw) table_.columns.push_back(key);
  for (const char* c : {"index", "re", "im"}) table_.columns.emplace_back(c);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int k = 0; k < spectra[i].size(); ++k) {
      std::vector<Cell> row;
      if (sw) row.emplace_back(points[i]);
      row.emplace_back(static_cast<long long>(k));
      row.emplace_back(spectra[i](k).real());
      row.emplace_back(spectra[i](k).imag());
      table_.rows.push_back(std::move(row));
    }
}

// ep-scan: one row per confirmed exceptional point.
void Runner::ep_scan() {
  const auto src = model_source();
  const auto sw = sweep(src, {}, true);
  EpOptions opts;
  opts.candidate_condition = number("candidate-condition", opts.candidate_condition);
  record("candidate-condition", opts.candidate_condition);
  const std::string key = sw->first;
  const auto scan = detect_ep([&](double v) { return src.build(key, v); }, sw->second, opts);
  table_.columns = {key, "order", "re", "im", "gram_condition"};
  for (const auto& p : scan.points)
    table_.rows.push_back({p.parameter, static_cast<long long>(p.order), p.location.real(), p.location.imag(),
                           p.gram_condition});
  table_.notes = scan.warnings;
}

// winding: per-loop windings (default) or the determinant winding.
void Runner::winding() {
  const auto src = model_source();
  const auto sw = sweep(src, {"eref"}, false);
  const std::string method = job_.values.count("method") ? job_.values.at("method") : "loop";
  if (method != "loop" && method != "det") throw ValidationError("--method takes loop or det");
  WindingOptions opts;
  opts.n_grid = integer("grid", opts.n_grid);
  const double eref_re = number("eref", 0.0);
  const double eref_im = number("eref-im", 0.0);
  record("method", method);
  record("grid", std::to_string(opts.n_grid));
  if (!(sw && sw->first == "eref")) record("eref", eref_re);
  record("eref-im", eref_im);

  const std::vector<double> points = sw ? sw->second : std::vector<double>{0.0};
  const std::string key = sw ? sw->first : "";
  const bool scanning = sw.has_value();
  const auto rows = parallel_map(points.size(), job_.jobs, [&](std::size_t i) {
    const bool eref_sweep = key == "eref";
    const QbsModel m = src.build(eref_sweep ? "" : key, points[i]);
    const cplx e(eref_sweep ? points[i] : eref_re, eref_im);
    const auto bloch = build_bloch(m);
    std::vector<Cell> row;
    if (scanning) row.emplace_back(points[i]);
    try {
      if (method == "loop") {
        const auto w = loop_windings(bloch, e, opts);
        std::string loops;
        for (std::size_t l = 0; l < w.windings.size(); ++l)
          loops += (l ? ";" : "") + std::to_string(w.windings[l]) + "/" + std::to_string(w.loop_bands[l]);
        // Loops are sorted by decreasing winding, so the first is the largest.
        row.emplace_back(static_cast<long long>(w.windings.empty() ? 0 : w.windings.front()));
        row.emplace_back(loops);
        row.emplace_back(w.min_gap);
        row.emplace_back(w.reliable ? "ok" : "unreliable");
      } else {
        const auto w = winding_number(bloch, e, opts);
        row.emplace_back(static_cast<long long>(w.winding));
        row.emplace_back(w.phase_residual);
        row.emplace_back(w.min_gap);
        row.emplace_back(w.reliable ? "ok" : "unreliable");
      }
    } catch (const NumericalError&) {
      // A scan crossing the spectrum keeps going; a single run reports the failure.
      if (!scanning) throw;
      row.emplace_back(std::nan(""));
      row.emplace_back(method == "loop" ? Cell(std::string("-")) : Cell(std::nan("")));
      row.emplace_back(0.0);
      row.emplace_back("on-gap");
    }
    return row;
  });
  if (scanning) table_.columns.push_back(key);
  if (method == "loop") table_.columns.insert(table_.columns.end(), {"winding", "loops", "min_gap", "status"});
  else table_.columns.insert(table_.columns.end(), {"winding", "phase_residual", "min_gap", "status"});
  table_.rows = rows;
}

// skin: per-mode profiles summary, or per-sample means with --summary.
void Runner::skin() {
  const auto src = model_source();
  const auto sw = sweep(src, {}, false);
  const double f = number("edge-fraction", 0.1);
  const bool summary = job_.values.count("summary") > 0;
  record("edge-fraction", f);
  record("summary", summary ? "1" : "0");
  const std::vector<double> points = sw ? sw->second : std::vector<double>{0.0};
  const std::string key = sw ? sw->first : "";
  const auto results = parallel_map(points.size(), job_.jobs, [&](std::size_t i) {
    const auto t = bogoliubov_diagonalize(build_real_space(src.build(key, points[i])));
    return std::make_pair(t.lambda, skin_metrics(t, f));
  });
  if (sw) table_.columns.push_back(key);
  if (summary) table_.columns.insert(table_.columns.end(), {"mean_edge_weight", "mean_ipr", "edge_sites"});
  else table_.columns.insert(table_.columns.end(), {"mode", "re", "im", "edge_weight", "ipr"});
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& [lambda, sk] = results[i];
    if (summary) {
      std::vector<Cell> row;
      if (sw) row.emplace_back(points[i]);
      row.insert(row.end(), {sk.mean_edge_weight, sk.mean_ipr, static_cast<long long>(sk.edge_sites)});
      table_.rows.push_back(std::move(row));
      continue;
    }
    for (int k = 0; k < lambda.size(); ++k) {
      std::vector<Cell> row;
      if (sw) row.emplace_back(points[i]);
      row.insert(row.end(), {static_cast<long long>(k), lambda(k).real(), lambda(k).imag(), sk.edge_weight(k),
                             sk.ipr(k)});
      table_.rows.push_back(std::move(row));
    }
  }
}

// transport: susceptibility, or the port scattering matrix with --ports.
void Runner::transport() {
  const auto src = model_source();
  const auto sw = sweep(src, {"omega"}, false);
  const double omega = number("omega", 0.0);
  const bool report = job_.values.count("report") > 0;
  const double threshold = number("threshold", 1e-6);
  if (!(sw && sw->first == "omega")) record("omega", omega);
  record("report", report ? "1" : "0");
  if (report) record("threshold", threshold);

  std::vector<double> gauge_in;
  if (has("gauge")) {
    for (const auto& s : split(job_.values.at("gauge"), ',')) gauge_in.push_back(parse_number(s, "--gauge"));
    record("gauge", job_.values.at("gauge"));
  }
  std::vector<Port> ports;
  if (has("ports")) {
    for (const auto& item : split(job_.values.at("ports"), ',')) {
      const auto mr = split(item, ':');
      if (mr.size() != 2) throw ParseError("port '" + item + "' is not mode:rate");
      ports.push_back({parse_int(mr[0], "port mode"), parse_number(mr[1], "port rate")});
    }
    record("ports", job_.values.at("ports"));
  }
  const double internal = number("internal-loss", 0.0);
  if (has("internal-loss") && ports.empty()) throw ValidationError("--internal-loss only applies with --ports");
  if (!ports.empty()) record("internal-loss", internal);

  const std::vector<double> points = sw ? sw->second : std::vector<double>{0.0};
  const std::string key = sw ? sw->first : "";
  const auto results = parallel_map(points.size(), job_.jobs, [&](std::size_t i) {
    const bool omega_sweep = key == "omega";
    const QbsModel m = src.build(omega_sweep ? "" : key, points[i]);
    const double w = omega_sweep ? points[i] : omega;
    // A single angle rotates every mode alike.
    std::vector<double> gauge = gauge_in;
    if (gauge.size() == 1) gauge.assign(m.n_modes, gauge_in.front());
    if (ports.empty()) return susceptibility(m, gauge, w);
    PortSpec spec{ports, internal > 0.0 ? std::vector<double>(m.n_modes, internal) : std::vector<double>{}, w};
    return scattering(m, spec, gauge);
  });

  if (sw) table_.columns.push_back(key);
  if (report) table_.columns.insert(table_.columns.end(), {"a", "b", "forward", "backward", "asymmetry", "flagged"});
  else table_.columns.insert(table_.columns.end(), {"out", "in", "re", "im", "abs"});
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = results[i];
    auto start = [&] {
      std::vector<Cell> row;
      if (sw) row.emplace_back(points[i]);
      return row;
    };
    if (report) {
      for (const auto& p : nonreciprocity_report(r, threshold)) {
        auto row = start();
        row.insert(row.end(), {r.label(p.a), r.label(p.b), p.forward, p.backward, p.asymmetry,
                               static_cast<long long>(p.flagged)});
        table_.rows.push_back(std::move(row));
      }
      continue;
    }
    for (int o = 0; o < r.data.rows(); ++o)
      for (int c = 0; c < r.data.cols(); ++c) {
        auto row = start();
        row.insert(row.end(), {r.label(o), r.label(c), r.data(o, c).real(), r.data(o, c).imag(), std::abs(r.data(o, c))});
        table_.rows.push_back(std::move(row));
      }
  }
}

// chain-scan: three-port gain curves of the hopping/pairing chain.
void Runner::chain_scan() {
  reject_model_flags({"N", "t", "Delta", "phi_t"});
  reject_ranges_except({"omega"});
  ChainScanParams p;
  p.n_sites = integer("N", p.n_sites);
  p.t = number("t", p.t);
  p.Delta = number("Delta", p.Delta);
  p.phi_t = number("phi_t", p.phi_t);
  p.theta = number("theta", p.theta);
  p.internal_loss = number("kappa-int", p.internal_loss);
  p.kappa_L = number("kappa-L", p.kappa_L);
  p.kappa_M = number("kappa-M", p.kappa_M);
  p.kappa_R = number("kappa-R", p.kappa_R);
  std::string omega_text = format_double(-3.0 * p.t) + ":" + format_double(3.0 * p.t) + ":201";
  if (!job_.ranges.empty()) omega_text = job_.ranges.front().second;
  const auto omegas = parse_range(omega_text).values();
  record("N", std::to_string(p.n_sites));
  record("t", p.t);
  record("Delta", p.Delta);
  record("phi_t", p.phi_t);
  record("theta", p.theta);
  record("kappa-int", p.internal_loss);
  record("kappa-L", p.kappa_L);
  record("kappa-M", p.kappa_M);
  record("kappa-R", p.kappa_R);
  record("omega-range", omega_text);
  const auto rows = parallel_map(omegas.size(), job_.jobs, [&](std::size_t i) {
    ChainScanParams q = p;
    q.omegas = {omegas[i]};
    return chain_scattering_scan(q).front();
  });
  table_.columns = {"omega", "gain_right", "gain_left", "reflection"};
  for (const auto& r : rows) table_.rows.push_back({r.omega, r.gain_right, r.gain_left, r.reflection});
}

// evolve: vacuum evolution sampled on --times.
void Runner::evolve() {
  const auto src = model_source();
  reject_ranges_except({});
  if (!has("times")) throw ValidationError("evolve needs --times start:stop:count");
  const auto times = parse_range(job_.values.at("times")).values();
  record("times", job_.values.at("times"));
  const QbsModel model = src.build();
  if (model.has_damping()) throw ValidationError("evolve needs a damping-free model (no noise model for losses)");
  const int n = model.n_modes;

  std::vector<int> pair{0, std::min(1, n - 1)};
  if (has("pair")) pair = int_list("pair");
  if (pair.size() != 2 || pair[0] < 0 || pair[1] < 0 || pair[0] >= n || pair[1] >= n)
    throw ValidationError("--pair needs two mode indices in [0, " + std::to_string(n) + ")");
  std::vector<int> side_a;
  for (int j = 0; j < n / 2; ++j) side_a.push_back(j);
  if (has("side-a")) side_a = int_list("side-a");
  record("pair", std::to_string(pair[0]) + "," + std::to_string(pair[1]));
  std::string side_text;
  for (std::size_t i = 0; i < side_a.size(); ++i) side_text += (i ? "," : "") + std::to_string(side_a[i]);
  record("side-a", side_text);
  if (n < 2) table_.notes.push_back("single mode: E_N is undefined and reported as nan");

  const auto m = build_real_space(model);
  const CMatrix lam = quadrature_transform(n);
  const auto vac = GaussianState::vacuum(n);
  const auto rows = parallel_map(times.size(), job_.jobs, [&](std::size_t i) {
    const auto ph = propagate(m, times[i]);
    // S = |A| + |B| with a_i(t) = A a_i + B a_j^dag + ...
    const double s = std::abs(ph.G(pair[0], pair[0])) + std::abs(ph.G(pair[0], n + pair[1]));
    Propagator q = ph;
    q.basis = Basis::Quadrature;
    q.G = lam * ph.G * lam.adjoint();
    const auto st = evolve_state(vac, q);
    const double en = n < 2 ? std::nan("") : entanglement(st, side_a);
    Eigen::SelfAdjointEigenSolver<RMatrix> es(st.cov, Eigen::EigenvaluesOnly);
    return std::vector<Cell>{times[i], s, en, es.eigenvalues().maxCoeff()};
  });
  table_.columns = {"t", "S", "E_N", "max_cov_eig"};
  table_.rows = rows;
}

// regime-map: spectral label against the empirical dynamics class.
void Runner::regime_map_cmd() {
  reject_model_flags({"J"});
  reject_ranges_except({"eta", "g"});
  std::string eta_text, g_text;
  for (const auto& [key, text] : job_.ranges) (key == "eta" ? eta_text : g_text) = text;
  if (eta_text.empty() || g_text.empty()) throw ValidationError("regime-map needs --eta-range and --g-range");
  const auto etas = parse_range(eta_text).values();
  const auto gs = parse_range(g_text).values();
  SmsBkcParams base;
  base.J = number("J", 1.0);
  DynamicsOptions opts;
  opts.t_max = number("t-max", opts.t_max);
  opts.dt = number("dt", opts.dt);
  record("J", base.J);
  record("eta-range", eta_text);
  record("g-range", g_text);
  record("t-max", opts.t_max);
  record("dt", opts.dt);
  const auto blocks = parallel_map(etas.size(), job_.jobs, [&](std::size_t i) {
    return regime_map(base, {etas[i]}, gs, opts);
  });
  table_.columns = {"eta", "g", "spectral", "dynamics", "comparable", "agree"};
  for (const auto& block : blocks)
    for (const auto& c : block)
      table_.rows.push_back({c.eta, c.g, std::string(to_string(c.spectral)), std::string(to_string(c.dynamics)),
                             static_cast<long long>(c.comparable), static_cast<long long>(c.agree)});
}

// ---------------------------------------------------------------------------
// Command line

struct CommandInfo {
  const char* name;
  const char* help;
};

const std::vector<CommandInfo> kCommands = {
    {"spectrum", "eigenvalues of the dynamical matrix, optionally over a parameter sweep"},
    {"ep-scan", "exceptional points along a parameter sweep"},
    {"winding", "point-gap winding numbers of a periodic model"},
    {"skin", "mode localization of an open chain"},
    {"transport", "susceptibility or port scattering matrix"},
    {"chain-scan", "three-port gain curves of the hopping/pairing chain"},
    {"evolve", "vacuum evolution: squeezing, entanglement, covariance"},
    {"regime-map", "spectral regime against dynamics class for the SMS-extended chain"},
};

void add_common(CLI::App* sub, Job& job) {
  sub->add_option("--preset", job.preset, "named model: " + [] {
    std::string s;
    for (const auto& n : preset_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());
  sub->add_option("--config", job.config, "model document (JSON)");
  sub->add_option("--boundary", job.boundary, "obc or pbc (preset models)");
  sub->add_option("-o,--output", job.output, "output file (default stdout)");
  sub->add_option("--format", job.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--jobs", job.jobs, "worker threads for scans (default: hardware, at most 8)");
  for (const auto& key : kPresetKeys) {
    sub->add_option_function<std::string>("--" + key, [&job, key](const std::string& v) { job.values[key] = v; },
                                          "preset parameter " + key);
    sub->add_option_function<std::string>(
        "--" + key + "-range", [&job, key](const std::string& v) { job.ranges.emplace_back(key, v); },
        "sweep " + key + " over start:stop:count");
  }
}

void add_value(CLI::App* sub, Job& job, const std::string& key, const std::string& help) {
  sub->add_option_function<std::string>("--" + key, [&job, key](const std::string& v) { job.values[key] = v; }, help);
}

void add_range(CLI::App* sub, Job& job, const std::string& key, const std::string& help) {
  sub->add_option_function<std::string>(
      "--" + key + "-range", [&job, key](const std::string& v) { job.ranges.emplace_back(key, v); }, help);
}

void add_flag(CLI::App* sub, Job& job, const std::string& key, const std::string& help) {
  sub->add_flag_function("--" + key, [&job, key](std::int64_t) { job.values[key] = "1"; }, help);
}

void configure(CLI::App& app, Job& job) {
  app.require_subcommand(1);
  app.footer(
      "Ranges are start:stop:count with both ends included. Every preset parameter KEY has --KEY and "
      "--KEY-range flags.\nExit codes: 2 parse error, 3 validation error, 4 numerical failure.");
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, job);
    sub->callback([&job, name = std::string(c.name)] { job.command = name; });
    const std::string n = c.name;
    if (n == "ep-scan") add_value(sub, job, "candidate-condition", "eigenvector condition that triggers refinement");
    if (n == "winding") {
      add_value(sub, job, "eref", "reference energy, real part");
      add_value(sub, job, "eref-im", "reference energy, imaginary part");
      add_range(sub, job, "eref", "sweep the reference energy");
      add_value(sub, job, "grid", "Brillouin-zone grid points");
      add_value(sub, job, "method", "loop (per-loop windings) or det");
    }
    if (n == "skin") {
      add_value(sub, job, "edge-fraction", "fraction of sites counted at each edge");
      add_flag(sub, job, "summary", "one row of means per sample");
    }
    if (n == "transport") {
      add_value(sub, job, "omega", "probe frequency");
      add_range(sub, job, "omega", "sweep the probe frequency");
      add_value(sub, job, "gauge", "rotation angle(s): one for all modes or one per mode, comma separated");
      add_value(sub, job, "ports", "ports as mode:rate,...; switches to the scattering matrix");
      add_value(sub, job, "internal-loss", "uniform internal loss with --ports");
      add_flag(sub, job, "report", "pairwise nonreciprocity table");
      add_value(sub, job, "threshold", "asymmetry flag threshold");
    }
    if (n == "chain-scan") {
      add_value(sub, job, "theta", "probed quadrature x cos(theta) + p sin(theta)");
      add_value(sub, job, "kappa-int", "internal loss per site");
      add_value(sub, job, "kappa-L", "left port rate");
      add_value(sub, job, "kappa-M", "middle port rate");
      add_value(sub, job, "kappa-R", "right port rate");
      add_range(sub, job, "omega", "probe frequencies (default -3t:3t:201)");
    }
    if (n == "evolve") {
      add_value(sub, job, "times", "sample times start:stop:count");
      add_value(sub, job, "pair", "modes i,j for S = |A| + |B| (default 0,1)");
      add_value(sub, job, "side-a", "modes of one side of the entanglement cut (default first half)");
    }
    if (n == "regime-map") {
      add_value(sub, job, "t-max", "evolution window");
      add_value(sub, job, "dt", "sampling step");
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Job job;
  CLI::App app{"Quadratic bosonic systems: spectra, exceptional points, topology, transport and dynamics", "qbs"};
  configure(app, job);
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("qbs");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Table t = Runner(job).run();
    t.parameters["format"] = job.format;
    const std::string text = job.format == "json" ? to_json(t) : to_csv(t);
    if (job.output.empty()) {
      out << text;
    } else {
      std::ofstream f(job.output, std::ios::binary);
      if (!f) throw ValidationError("cannot write '" + job.output + "'");
      f << text;
    }
    return 0;
  } catch (const ParseError& e) {
    err << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << e.what() << "\n";
    return 4;
  } catch (const json::exception& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace qbs::cli
