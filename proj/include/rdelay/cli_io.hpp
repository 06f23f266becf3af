#ifndef RDELAY_CLI_IO_HPP
#define RDELAY_CLI_IO_HPP

// Experiment configuration, CSV/SVG emission and the batch commands behind
// the rdtool executable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rdelay/bifurcation.hpp"
#include "rdelay/errors.hpp"
#include "rdelay/kernel_equivalence.hpp"
#include "rdelay/model_catalog.hpp"
#include "rdelay/parallel.hpp"
#include "rdelay/spectral_core.hpp"
#include "rdelay/steady_state.hpp"
#include "rdelay/time_integration.hpp"

namespace rdelay {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitBound = 4 };

class ConfigError : public Error {
public:
  ConfigError(const std::string& field, int line, const std::string& what)
      : Error(format(field, line, what)), field_(field), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

private:
  static std::string format(const std::string& field, int line, const std::string& what) {
    std::string out = "config";
    if (line > 0) out += " line " + std::to_string(line);
    if (!field.empty()) out += " field '" + field + "'";
    return out + ": " + what;
  }
  std::string field_;
  int line_;
};

// ---------------------------------------------------------------------------
// Flat dotted key = value files.

class KeyValueConfig {
public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      const auto hash = raw.find('#');
      std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("", lineno, "expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("", lineno, "empty key");
      if (value.empty()) throw ConfigError(key, lineno, "empty value");
      if (cfg.entries_.count(key)) throw ConfigError(key, lineno, "duplicate key");
      cfg.entries_[key] = {value, lineno};
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot open '" + path + "'");
    return parse(in);
  }

  static KeyValueConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  int line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  std::optional<std::string> str(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    used_.insert(key);
    return it->second.value;
  }

  std::optional<double> num(const std::string& key) const {
    auto s = str(key);
    if (!s) return std::nullopt;
    return to_number(key, *s);
  }

  std::optional<long long> integer(const std::string& key) const {
    auto x = num(key);
    if (!x) return std::nullopt;
    if (std::floor(*x) != *x) throw ConfigError(key, line_of(key), "expected an integer");
    return static_cast<long long>(*x);
  }

  std::optional<bool> boolean(const std::string& key) const {
    auto s = str(key);
    if (!s) return std::nullopt;
    if (*s == "true" || *s == "yes" || *s == "1") return true;
    if (*s == "false" || *s == "no" || *s == "0") return false;
    throw ConfigError(key, line_of(key), "expected true or false");
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    auto s = str(key);
    if (!s) return out;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) throw ConfigError(key, line_of(key), "empty list item");
      out.push_back(to_number(key, item));
    }
    return out;
  }

  // Keys under `prefix.` other than those in `skip`.
  std::map<std::string, std::string> section(const std::string& prefix,
                                             const std::set<std::string>& skip = {}) const {
    std::map<std::string, std::string> out;
    const std::string p = prefix + ".";
    for (const auto& [key, entry] : entries_) {
      if (key.rfind(p, 0) != 0) continue;
      const std::string sub = key.substr(p.size());
      if (skip.count(sub)) continue;
      used_.insert(key);
      out[sub] = entry.value;
    }
    return out;
  }

  void reject_unused() const {
    for (const auto& [key, entry] : entries_)
      if (!used_.count(key)) throw ConfigError(key, entry.line, "unknown key");
  }

  // Numbers, optionally written as a multiple of pi ("pi", "2pi", "0.5*pi").
  double to_number(const std::string& key, const std::string& text) const {
    std::string t = text;
    double factor = 1.0;
    if (t.size() >= 2 && t.compare(t.size() - 2, 2, "pi") == 0) {
      factor = std::numbers::pi;
      t = trim(t.substr(0, t.size() - 2));
      if (!t.empty() && t.back() == '*') t = trim(t.substr(0, t.size() - 1));
      if (t.empty()) return factor;
    }
    std::size_t pos = 0;
    double x = 0.0;
    try {
      x = std::stod(t, &pos);
    } catch (...) {
      throw ConfigError(key, line_of(key), "'" + text + "' is not a number");
    }
    if (pos != t.size()) throw ConfigError(key, line_of(key), "'" + text + "' is not a number");
    if (!std::isfinite(x)) throw ConfigError(key, line_of(key), "value must be finite");
    return x * factor;
  }

private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Experiment description.

struct HistorySpec {
  enum class Shape { sine, constant } shape = Shape::sine;
  double amplitude = 0.0;
  double horizon = 0.0;
};

struct ExperimentConfig {
  std::string command;
  ModelSpec model = ModelSpec::logistic(1.0, 0.5, 0.4);
  KernelOrder kernel_order = KernelOrder::weak;
  std::optional<double> tau;
  std::vector<double> tau_values;
  double L = std::numbers::pi;
  int n = 128;
  std::optional<double> d;
  std::optional<double> d_start, d_end;
  int d_steps = 0;
  std::vector<double> d_values;
  std::optional<HistorySpec> history;
  SimConfig sim;
  std::vector<std::pair<int, double>> ladder;
  double verify_bound = 1e-3;
  int probe_starts = 20;
  std::uint64_t seed = 12345;
  std::string out_dir = ".";
  bool svg = true;

  Grid1D grid() const { return Grid1D(L, n); }
  KernelSpec kernel() const { return KernelSpec(kernel_order, *tau); }

  HistoryFn history_fn() const {
    const HistorySpec h = *history;
    const double L_ = L;
    if (h.shape == HistorySpec::Shape::sine)
      return {[h, L_](double x, double) { return h.amplitude * std::sin(std::numbers::pi * x / L_); },
              h.horizon};
    return {[h](double, double) { return h.amplitude; }, h.horizon};
  }
};

namespace detail {
inline int line_or_zero(const KeyValueConfig& kv, const std::string& key) { return kv.line_of(key); }

template <class T>
T require(const std::optional<T>& value, const KeyValueConfig& kv, const std::string& key) {
  if (!value) throw ConfigError(key, 0, "missing required field");
  (void)kv;
  return *value;
}
} // namespace detail

inline ExperimentConfig parse_experiment(const KeyValueConfig& kv) {
  ExperimentConfig e;
  e.command = kv.str("command").value_or("");

  const std::string model_name = kv.str("model.name").value_or("");
  if (model_name.empty()) throw ConfigError("model.name", 0, "missing required field");
  std::map<std::string, double> params;
  for (const auto& [key, value] : kv.section("model", {"name"}))
    params[key] = kv.to_number("model." + key, value);
  try {
    e.model = ModelSpec::from_name(model_name, params);
  } catch (const DomainError& err) {
    throw ConfigError("model.name", kv.line_of("model.name"), err.what());
  }

  if (auto order = kv.str("kernel.order")) {
    if (*order == "weak") e.kernel_order = KernelOrder::weak;
    else if (*order == "strong") e.kernel_order = KernelOrder::strong;
    else throw ConfigError("kernel.order", kv.line_of("kernel.order"), "expected weak or strong");
  }
  e.tau = kv.num("kernel.tau");
  if (e.tau && !(*e.tau > 0.0))
    throw ConfigError("kernel.tau", kv.line_of("kernel.tau"), "must be positive");

  e.tau_values = kv.list("tau.values");
  const auto t0 = kv.num("tau.start"), t1 = kv.num("tau.end"), ts = kv.num("tau.step");
  if (t0 || t1 || ts) {
    if (!t0 || !t1 || !ts)
      throw ConfigError(!t0 ? "tau.start" : !t1 ? "tau.end" : "tau.step", 0,
                        "tau range needs start, end and step");
    if (!(*ts > 0.0) || *t1 < *t0)
      throw ConfigError("tau.step", kv.line_of("tau.step"), "empty tau range");
    const long count = std::lround(std::floor((*t1 - *t0) / *ts + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) e.tau_values.push_back(*t0 + i * *ts);
  }
  for (double t : e.tau_values)
    if (!(t > 0.0)) throw ConfigError("tau.values", kv.line_of("tau.values"), "tau must be positive");

  if (auto L = kv.num("grid.L")) e.L = *L;
  if (auto n = kv.integer("grid.n")) e.n = static_cast<int>(*n);
  if (!(e.L > 0.0)) throw ConfigError("grid.L", kv.line_of("grid.L"), "must be positive");
  if (e.n < 3) throw ConfigError("grid.n", kv.line_of("grid.n"), "need at least 3 interior nodes");

  e.d = kv.num("d");
  e.d_start = kv.num("d.start");
  e.d_end = kv.num("d.end");
  if (auto s = kv.integer("d.steps")) e.d_steps = static_cast<int>(*s);
  e.d_values = kv.list("d.values");
  if (e.d && !(*e.d > 0.0)) throw ConfigError("d", kv.line_of("d"), "must be positive");
  for (double d : e.d_values)
    if (!(d > 0.0)) throw ConfigError("d.values", kv.line_of("d.values"), "d must be positive");

  const auto hist = kv.section("history");
  if (!hist.empty()) {
    HistorySpec h;
    const auto type = kv.str("history.type");
    if (!type) throw ConfigError("history.type", 0, "missing required field");
    if (*type == "sine") h.shape = HistorySpec::Shape::sine;
    else if (*type == "constant") h.shape = HistorySpec::Shape::constant;
    else throw ConfigError("history.type", kv.line_of("history.type"), "expected sine or constant");
    h.amplitude = detail::require(kv.num("history.amplitude"), kv, "history.amplitude");
    if (h.amplitude < 0.0)
      throw ConfigError("history.amplitude", kv.line_of("history.amplitude"), "must be >= 0");
    h.horizon = kv.num("history.horizon").value_or(0.0);
    if (h.horizon < 0.0)
      throw ConfigError("history.horizon", kv.line_of("history.horizon"), "must be >= 0");
    for (const auto& [key, value] : hist)
      if (key != "type" && key != "amplitude" && key != "horizon")
        throw ConfigError("history." + key, kv.line_of("history." + key), "unknown key");
    e.history = h;
  }

  if (auto x = kv.num("sim.dt")) e.sim.dt = *x;
  if (auto x = kv.num("sim.t_end")) e.sim.t_end = *x;
  if (auto x = kv.integer("sim.output_stride")) e.sim.output_stride = static_cast<int>(*x);
  if (auto x = kv.num("sim.convergence_tol")) e.sim.convergence_tol = *x;
  if (auto x = kv.num("sim.attractor_tol")) e.sim.attractor_tol = *x;
  if (auto x = kv.num("sim.zero_tol")) e.sim.zero_tol = *x;
  if (auto x = kv.boolean("sim.stop_on_convergence")) e.sim.stop_on_convergence = *x;
  if (auto x = kv.integer("sim.history_cap")) e.sim.history_cap = static_cast<std::size_t>(*x);

  if (auto s = kv.str("verify.ladder")) {
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw ConfigError("verify.ladder", kv.line_of("verify.ladder"), "expected n:dt pairs");
      const double n = kv.to_number("verify.ladder", item.substr(0, colon));
      const double dt = kv.to_number("verify.ladder", item.substr(colon + 1));
      if (n < 3 || std::floor(n) != n || !(dt > 0.0))
        throw ConfigError("verify.ladder", kv.line_of("verify.ladder"), "bad n:dt pair");
      e.ladder.emplace_back(static_cast<int>(n), dt);
    }
  }
  if (auto x = kv.num("verify.bound")) e.verify_bound = *x;
  if (auto x = kv.integer("probe.starts")) e.probe_starts = static_cast<int>(*x);
  if (e.probe_starts < 1) throw ConfigError("probe.starts", kv.line_of("probe.starts"), "must be >= 1");
  if (auto x = kv.num("seed")) e.seed = static_cast<std::uint64_t>(*x);
  if (auto s = kv.str("output.dir")) e.out_dir = *s;
  if (auto x = kv.boolean("output.svg")) e.svg = *x;

  kv.reject_unused();
  return e;
}

// ---------------------------------------------------------------------------
// CSV and SVG writers.

inline std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class CsvWriter {
public:
  // columns: "name [unit]" strings, emitted as the leading '#' line.
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
            const std::vector<std::string>& notes = {})
      : out_(path), width_(columns.size()) {
    if (!out_) throw Error("cannot write '" + path.string() + "'");
    out_ << "# ";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? ", " : "") << columns[i];
    out_ << "\n";
    for (const auto& n : notes) out_ << "# " << n << "\n";
  }

  template <class... Cells> void row(const Cells&... cells) {
    std::vector<std::string> v{cell(cells)...};
    if (v.size() != width_) throw Error("CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
    out_ << "\n";
  }

private:
  static std::string cell(double x) { return fmt_num(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(long x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }

  std::ofstream out_;
  std::size_t width_;
};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
};

// Minimal self-contained SVG plots: line charts and a raster heat map.
class SvgPlot {
public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void add(Series s) { series_.push_back(std::move(s)); }

  // values(row, col) over t rows and x columns.
  void heatmap(std::vector<double> t, std::vector<double> x, std::vector<std::vector<double>> values) {
    heat_t_ = std::move(t);
    heat_x_ = std::move(x);
    heat_ = std::move(values);
  }

  std::string render() const {
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    auto grow = [&](double x, double y) {
      if (!std::isfinite(x) || !std::isfinite(y)) return;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    };
    for (const auto& s : series_)
      for (auto [x, y] : s.points) grow(x, y);
    if (!heat_.empty()) {
      grow(heat_x_.front(), heat_t_.front());
      grow(heat_x_.back(), heat_t_.back());
    }
    if (!(x0 < x1)) x0 -= 0.5, x1 += 0.5;
    if (!(y0 < y1)) y0 -= 0.5, y1 += 0.5;
    const double W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 55;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title_) << "</text>\n";

    if (!heat_.empty()) {
      double lo = kInf, hi = -kInf;
      for (const auto& r : heat_)
        for (double v : r) lo = std::min(lo, v), hi = std::max(hi, v);
      if (!(lo < hi)) hi = lo + 1.0;
      const std::size_t rows = heat_.size(), cols = heat_x_.size();
      for (std::size_t i = 0; i < rows; ++i) {
        const double ta = i == 0 ? heat_t_[0] : 0.5 * (heat_t_[i - 1] + heat_t_[i]);
        const double tb = i + 1 == rows ? heat_t_[i] : 0.5 * (heat_t_[i] + heat_t_[i + 1]);
        for (std::size_t j = 0; j < cols; ++j) {
          const double xa = j == 0 ? heat_x_[0] : 0.5 * (heat_x_[j - 1] + heat_x_[j]);
          const double xb = j + 1 == cols ? heat_x_[j] : 0.5 * (heat_x_[j] + heat_x_[j + 1]);
          o << "<rect x=\"" << fmt(px(xa)) << "\" y=\"" << fmt(py(tb)) << "\" width=\""
            << fmt(std::max(0.0, px(xb) - px(xa)) + 0.3) << "\" height=\""
            << fmt(std::max(0.0, py(ta) - py(tb)) + 0.3) << "\" fill=\""
            << colormap((heat_[i][j] - lo) / (hi - lo)) << "\"/>\n";
        }
      }
      o << "<text x=\"" << W - mr << "\" y=\"" << mt - 6 << "\" text-anchor=\"end\">range "
        << fmt_num(lo) << " .. " << fmt_num(hi) << "</text>\n";
    }

    // Axes with five ticks each.
    o << "<g stroke=\"black\" fill=\"none\">\n";
    o << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb << "\"/>\n";
    o << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb << "\"/>\n";
    o << "</g>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
      o << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">"
        << fmt_tick(xv) << "</text>\n";
      o << "<text x=\"" << ml - 6 << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">"
        << fmt_tick(yv) << "</text>\n";
    }
    o << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << escape(xlabel_) << "</text>\n";
    o << "<text x=\"16\" y=\"" << (mt + H - mb) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (mt + H - mb) / 2 << ")\">" << escape(ylabel_) << "</text>\n";

    int legend = 0;
    for (const auto& s : series_) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (auto [x, y] : s.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        o << (first ? "" : " ") << fmt(px(x)) << "," << fmt(py(y));
        first = false;
      }
      o << "\"/>\n";
      if (!s.label.empty()) {
        const double ly = mt + 14 + 16 * legend++;
        o << "<line x1=\"" << W - mr - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - mr - 130
          << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << W - mr - 125 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
      }
    }
    o << "</svg>\n";
    return o.str();
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << render();
  }

private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  static std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
  }
  static std::string fmt_tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(x) < 1e-12 ? 0.0 : x);
    return buf;
  }
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else if (c == '&') out += "&amp;";
      else out += c;
    }
    return out;
  }
  // Blue -> yellow ramp.
  static std::string colormap(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(std::lround(40 + 215 * t));
    const int g = static_cast<int>(std::lround(40 + 190 * t));
    const int b = static_cast<int>(std::lround(140 - 110 * t));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
  }

  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
  std::vector<double> heat_t_, heat_x_;
  std::vector<std::vector<double>> heat_;
};

// ---------------------------------------------------------------------------
// Commands. Each writes into cfg.out_dir, logs to `log`, and returns an exit
// code; errors propagate as exceptions and are mapped by run_command.

namespace detail {

inline double need_tau(const ExperimentConfig& cfg) {
  if (!cfg.tau) throw ConfigError("kernel.tau", 0, "missing required field");
  return *cfg.tau;
}

inline double need_d(const ExperimentConfig& cfg) {
  if (!cfg.d) throw ConfigError("d", 0, "missing required field");
  return *cfg.d;
}

inline std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

inline double opt_or_nan(const std::optional<double>& x) {
  return x ? *x : std::numeric_limits<double>::quiet_NaN();
}

} // namespace detail

inline int cmd_bif_table(const ExperimentConfig& cfg, std::ostream& log) {
  std::vector<double> taus = cfg.tau_values;
  if (taus.empty() && cfg.tau) taus.push_back(*cfg.tau);
  if (taus.empty()) throw ConfigError("tau.values", 0, "empty tau grid");
  const Grid1D grid = cfg.grid();
  const EigenPair eig = principal_eigenpair(grid);
  const PhiMoments mom = phi_moments(grid, eig.phi);

  const auto rows = parallel_map<BifSummary>(
      taus.size(), [&](std::size_t i) { return bif_summary(cfg.model, taus[i], eig.lambda, mom); });

  CsvWriter csv(detail::out_path(cfg, "bif_table.csv"),
                {"tau [time]", "lambda1 [1/length^2]", "mu1 [1/time]", "d_star [length^2/time]",
                 "M [1]", "d_prime0 [length^2/time per density]", "direction [+1 super, -1 sub]",
                 "sign_test [1]", "d_star_star [length^2/time]", "d_star_star_star [length^2/time]",
                 "u_bound [density]", "v_bound [density]"},
                {"model " + cfg.model.name() + ", L " + fmt_num(cfg.L) + ", n " +
                 std::to_string(cfg.n)});
  Series curve{"d*(tau)", {}, "#1f77b4"};
  for (const auto& s : rows) {
    csv.row(s.tau, s.lambda1, s.mu1, s.d_star, s.M, s.d_prime0,
            s.d_prime0 < 0.0 ? 1 : (s.d_prime0 > 0.0 ? -1 : 0), s.sign_test,
            detail::opt_or_nan(s.d_star_star), detail::opt_or_nan(s.d_star_star_star),
            s.bounds ? s.bounds->u_max : std::numeric_limits<double>::quiet_NaN(),
            s.bounds ? s.bounds->v_max : std::numeric_limits<double>::quiet_NaN());
    curve.points.emplace_back(s.tau, s.d_star);
    log << "tau=" << fmt_num(s.tau) << " d_star=" << fmt_num(s.d_star) << "\n";
  }
  if (cfg.svg && rows.size() > 1) {
    SvgPlot plot("critical diffusion, " + cfg.model.name(), "tau", "d*");
    plot.add(std::move(curve));
    plot.write(detail::out_path(cfg, "bif_table.svg"));
  }
  return kExitOk;
}

inline void write_branch(const ExperimentConfig& cfg, const std::vector<BranchPoint>& branch,
                         const Grid1D& grid, double d_star) {
  CsvWriter csv(detail::out_path(cfg, "branch.csv"),
                {"d [length^2/time]", "s_max_u [density]", "u_mid [density]", "v_max [density]",
                 "v_mid [density]", "leading_eig [1/time]", "min_sv [1/time]", "stable [0/1]"},
                {"model " + cfg.model.name() + ", tau " + fmt_num(*cfg.tau) + ", d_star " +
                 fmt_num(d_star)});
  Series amp{"max u", {}, "#d62728"};
  const int mid = grid.center_index();
  for (const auto& p : branch) {
    csv.row(p.d, p.amplitude, p.state.u[mid], p.state.v.maxCoeff(), p.state.v[mid], p.leading_eig,
            p.min_sv, p.leading_eig < -1e-8 ? 1 : 0);
    amp.points.emplace_back(p.d, p.amplitude);
  }
  if (cfg.svg) {
    SvgPlot plot("positive branch, " + cfg.model.name(), "d", "max u");
    plot.add(std::move(amp));
    plot.write(detail::out_path(cfg, "branch.svg"));
  }
}

inline int cmd_branch(const ExperimentConfig& cfg, std::ostream& log) {
  const double tau = detail::need_tau(cfg);
  if (!cfg.d_end) throw ConfigError("d.end", 0, "missing required field");
  const Grid1D grid = cfg.grid();
  const BifSummary bs = bif_summary(cfg.model, tau, grid);
  const double d_start = cfg.d_start.value_or(bs.d_star * (1.0 - 1e-3));
  const int steps = cfg.d_steps > 0 ? cfg.d_steps : 50;
  log << "d_star=" << fmt_num(bs.d_star) << " d_prime0=" << fmt_num(bs.d_prime0) << "\n";
  try {
    const auto branch = continue_branch(cfg.model, tau, grid, d_start, *cfg.d_end, steps);
    write_branch(cfg, branch, grid, bs.d_star);
    log << "points=" << branch.size() << "\n";
  } catch (const FoldDetectedError& e) {
    write_branch(cfg, e.partial(), grid, bs.d_star);
    throw;
  }
  return kExitOk;
}

inline int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log) {
  const double tau = detail::need_tau(cfg);
  const double d = detail::need_d(cfg);
  if (!cfg.history) throw ConfigError("history.type", 0, "missing required field");
  const Grid1D grid = cfg.grid();
  const KernelSpec kernel = cfg.kernel();
  const Trajectory traj = simulate(cfg.model, kernel, d, grid, cfg.history_fn(), cfg.sim);
  const bool strong = kernel.order == KernelOrder::strong;

  std::vector<std::string> cols{"t [time]", "x [length]", "u [density]", "v [density]"};
  if (strong) cols.push_back("w [density]");
  CsvWriter csv(detail::out_path(cfg, "trajectory.csv"), cols);
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    const FieldState& s = traj.snapshots[k];
    for (int i = 0; i < grid.size(); ++i) {
      if (strong) csv.row(traj.t[k], grid.x(i), s.u[i], s.v[i], (*s.w)[i]);
      else csv.row(traj.t[k], grid.x(i), s.u[i], s.v[i]);
    }
  }
  CsvWriter summary(detail::out_path(cfg, "summary.csv"),
                    {"verdict [label]", "final_time [time]", "final_max_u [density]",
                     "attractor_distance [density]", "stopped_early [0/1]"});
  summary.row(std::string(to_string(traj.verdict)), traj.final_time, traj.final_state.u.maxCoeff(),
              traj.attractor_distance, traj.stopped_early ? 1 : 0);

  if (cfg.svg) {
    const std::size_t rows = traj.t.size();
    const std::size_t row_step = std::max<std::size_t>(1, rows / 100);
    const int col_step = std::max(1, grid.size() / 64);
    std::vector<double> ts, xs;
    std::vector<std::vector<double>> vals;
    for (int i = 0; i < grid.size(); i += col_step) xs.push_back(grid.x(i));
    for (std::size_t k = 0; k < rows; k += row_step) {
      ts.push_back(traj.t[k]);
      std::vector<double> r;
      for (int i = 0; i < grid.size(); i += col_step) r.push_back(traj.snapshots[k].u[i]);
      vals.push_back(std::move(r));
    }
    SvgPlot heat("u(x, t), d = " + fmt_num(d), "x", "t");
    heat.heatmap(ts, xs, vals);
    heat.write(detail::out_path(cfg, "simulate_heatmap.svg"));

    SvgPlot prof("final profile, t = " + fmt_num(traj.final_time), "x", "density");
    Series u{"u", {}, "#d62728"}, v{"v", {}, "#1f77b4"};
    for (int i = 0; i < grid.size(); ++i) {
      u.points.emplace_back(grid.x(i), traj.final_state.u[i]);
      v.points.emplace_back(grid.x(i), traj.final_state.v[i]);
    }
    prof.add(std::move(u));
    prof.add(std::move(v));
    prof.write(detail::out_path(cfg, "simulate_profile.svg"));
  }
  log << "verdict=" << to_string(traj.verdict) << "\n";
  return kExitOk;
}

struct LadderResult {
  int n = 0;
  double dt = 0.0;
  EquivalenceGap gap;
};

inline std::vector<LadderResult> run_equivalence_ladder(const ExperimentConfig& cfg) {
  const double d = detail::need_d(cfg);
  detail::need_tau(cfg);
  if (!cfg.history) throw ConfigError("history.type", 0, "missing required field");
  std::vector<std::pair<int, double>> ladder = cfg.ladder;
  if (ladder.empty()) ladder = {{64, 4e-3}, {128, 2e-3}, {256, 1e-3}};
  return parallel_map<LadderResult>(ladder.size(), [&](std::size_t i) {
    SimConfig sim = cfg.sim;
    sim.dt = ladder[i].second;
    const Grid1D grid(cfg.L, ladder[i].first);
    return LadderResult{ladder[i].first, ladder[i].second,
                        equivalence_gap(cfg.model, cfg.kernel(), d, grid, cfg.history_fn(), sim)};
  });
}

inline int cmd_verify_equivalence(const ExperimentConfig& cfg, std::ostream& log) {
  const auto results = run_equivalence_ladder(cfg);
  CsvWriter csv(detail::out_path(cfg, "equivalence.csv"),
                {"level [index]", "n [nodes]", "dt [time]", "max_gap [density]", "t_at_max [time]"},
                {"model " + cfg.model.name() + ", kernel " + to_string(cfg.kernel_order) +
                 ", d " + fmt_num(*cfg.d) + ", t_end " + fmt_num(cfg.sim.t_end)});
  bool decreasing = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    csv.row(static_cast<int>(i), r.n, r.dt, r.gap.max_gap, r.gap.t_at_max);
    log << "level=" << i << " n=" << r.n << " dt=" << fmt_num(r.dt)
        << " max_gap=" << fmt_num(r.gap.max_gap) << "\n";
    if (i > 0 && !(r.gap.max_gap < results[i - 1].gap.max_gap)) decreasing = false;
  }
  const double finest = results.back().gap.max_gap;
  log << "decreasing=" << (decreasing ? "yes" : "no") << " finest_gap=" << fmt_num(finest)
      << " bound=" << fmt_num(cfg.verify_bound) << "\n";
  return finest <= cfg.verify_bound ? kExitOk : kExitBound;
}

inline int cmd_uniqueness_probe(const ExperimentConfig& cfg, std::ostream& log) {
  const double tau = detail::need_tau(cfg);
  std::vector<double> ds = cfg.d_values;
  if (ds.empty() && cfg.d) ds.push_back(*cfg.d);
  if (ds.empty()) throw ConfigError("d.values", 0, "missing required field");
  const Grid1D grid = cfg.grid();
  ProbeOptions opts;
  opts.seed = cfg.seed;

  CsvWriter csv(detail::out_path(cfg, "probe.csv"),
                {"d [length^2/time]", "verdict [label]", "distinct [count]", "positive [count]",
                 "trivial [count]", "discarded [count]", "max_u [density]", "min_sv [1/time]"},
                {"model " + cfg.model.name() + ", tau " + fmt_num(tau) + ", starts " +
                 std::to_string(cfg.probe_starts) + ", seed " + std::to_string(cfg.seed)});
  for (double d : ds) {
    const ProbeResult r = uniqueness_probe(cfg.model, d, tau, grid, cfg.probe_starts, opts);
    double max_u = std::numeric_limits<double>::quiet_NaN();
    double min_sv = std::numeric_limits<double>::quiet_NaN();
    if (!r.distinct.empty()) {
      max_u = r.distinct.front().u.maxCoeff();
      min_sv = linearized_spectrum(cfg.model, d, tau, grid, r.distinct.front()).min_sv;
    }
    csv.row(d, std::string(to_string(r.verdict)), r.distinct.size(), r.converged_positive,
            r.converged_trivial, r.discarded, max_u, min_sv);
    log << "d=" << fmt_num(d) << " verdict=" << to_string(r.verdict)
        << " distinct=" << r.distinct.size() << "\n";
  }
  return kExitOk;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"bif-table", "branch", "simulate",
                                              "verify-equivalence", "uniqueness-probe"};
  return names;
}

// Parses the config, applies overrides, dispatches, and maps errors to exit
// codes. Diagnostics go to `err`.
inline int run_command(const std::string& command, const std::string& config_path,
                       const std::optional<std::string>& out_dir,
                       const std::optional<std::uint64_t>& seed, std::ostream& log,
                       std::ostream& err) {
  try {
    ExperimentConfig cfg = parse_experiment(KeyValueConfig::parse_file(config_path));
    if (!cfg.command.empty() && cfg.command != command)
      throw ConfigError("command", 0, "config is for '" + cfg.command + "', not '" + command + "'");
    if (out_dir) cfg.out_dir = *out_dir;
    if (seed) cfg.seed = *seed;
    if (command == "bif-table") return cmd_bif_table(cfg, log);
    if (command == "branch") return cmd_branch(cfg, log);
    if (command == "simulate") return cmd_simulate(cfg, log);
    if (command == "verify-equivalence") return cmd_verify_equivalence(cfg, log);
    if (command == "uniqueness-probe") return cmd_uniqueness_probe(cfg, log);
    throw ConfigError("command", 0, "unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    // Parameter validation surfacing from the compute layer.
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

} // namespace rdelay

#endif
