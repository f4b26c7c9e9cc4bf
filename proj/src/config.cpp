#include "hessvar/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace hessvar::cli {

namespace {

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    if (lead) *lead = s.size();
    return {};
  }
  const std::size_t e = s.find_last_not_of(" \t\r");
  if (lead) *lead = b;
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::optional<double> to_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || std::isnan(v)) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

nlohmann::ordered_json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "run.seed",
      "model.kind", "model.rho", "model.eta", "model.table", "model.negate",
      "grid.dim", "grid.nodes", "grid.half_width",
      "boundary.kind", "boundary.function", "boundary.amplitude", "boundary.file",
      "solver.grad_tol", "solver.max_iter", "solver.cg_rel_tol", "solver.cg_max_iter",
      "solver.margin", "solver.init",
      "output.format",
      "diagnostics.field", "diagnostics.ball_stride", "diagnostics.r_min", "diagnostics.r_max",
      "diagnostics.container", "diagnostics.jn_p", "diagnostics.campanato_p",
      "diagnostics.campanato_radii", "diagnostics.p0_scan", "diagnostics.k_max",
      "diagnostics.sigma_p0", "diagnostics.sigma_radii", "diagnostics.tau", "diagnostics.alpha",
      "diagnostics.holder_pairs", "diagnostics.holder_region", "diagnostics.omega_threshold",
      "diagnostics.rh_scales",
      "hamstat.potential", "hamstat.file", "hamstat.amplitude", "hamstat.eta", "hamstat.samples",
      "hamstat.inner_fraction",
      "campanato.field", "campanato.center", "campanato.radii", "campanato.p", "campanato.A",
      "campanato.kappa", "campanato.gamma", "campanato.B", "campanato.beta",
      "merge.inputs"};
  return keys;
}

Config Config::parse(const std::string& text, const std::string& source) {
  static const std::set<std::string> known(known_keys().begin(), known_keys().end());
  Config cfg;
  cfg.source_ = source;
  std::istringstream is(text);
  std::string raw, section;
  int line_no = 0;
  const auto error = [&](int col, const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(line_no) + ":" + std::to_string(col) + ": " + msg);
  };
  while (std::getline(is, raw)) {
    ++line_no;
    std::size_t lead = 0;
    const std::string line = trim(raw, &lead);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line[0] == '[') {
      if (line.back() != ']') error(int(lead + 1), "section header must end with ']'");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) error(int(lead + 2), "invalid section name '" + section + "'");
      continue;
    }
    const std::size_t eq = raw.find('=');
    if (eq == std::string::npos) error(int(lead + 1), "expected 'key = value'");
    const std::string key = trim(raw.substr(0, eq));
    if (!valid_name(key)) error(int(lead + 1), "invalid key '" + key + "'");
    if (section.empty()) error(int(lead + 1), "key '" + key + "' appears before any [section]");
    std::size_t vlead = 0;
    std::string value = trim(raw.substr(eq + 1), &vlead);
    // Trailing comments need whitespace before the marker.
    for (const char* marker : {" #", "\t#", " ;", "\t;"}) {
      const std::size_t c = value.find(marker);
      if (c != std::string::npos) value = trim(value.substr(0, c));
    }
    const int vcol = int(eq + 2 + vlead);
    if (value.empty()) error(vcol, "missing value for '" + key + "'");
    const std::string full = section + "." + key;
    if (!known.count(full)) error(int(lead + 1), "unknown key '" + full + "'");
    if (cfg.entries_.count(full)) error(int(lead + 1), "duplicate key '" + full + "'");
    cfg.entries_[full] = Entry{value, line_no, vcol};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Config cfg = parse(ss.str(), path.string());
  cfg.base_ = path.parent_path();
  return cfg;
}

void Config::set_override(const std::string& key, const std::string& value) {
  entries_[key] = Entry{value, 0, 0};
}

std::string Config::where(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return source_ + ": ";
  if (it->second.line == 0) return "command line: ";
  return source_ + ":" + std::to_string(it->second.line) + ":" + std::to_string(it->second.column) + ": ";
}

void Config::fail(const std::string& key, const std::string& message) const {
  throw ConfigError(where(key) + key + ": " + message);
}

void Config::record(const std::string& key, nlohmann::ordered_json value) {
  const std::size_t dot = key.find('.');
  resolved_[key.substr(0, dot)][key.substr(dot + 1)] = std::move(value);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) {
  const auto it = entries_.find(key);
  const std::string v = it == entries_.end() ? fallback : it->second.value;
  record(key, v);
  return v;
}

std::optional<std::string> Config::get_optional(const std::string& key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  record(key, it->second.value);
  return it->second.value;
}

std::string Config::get_choice(const std::string& key, const std::string& fallback,
                               const std::vector<std::string>& choices) {
  const std::string v = get_string(key, fallback);
  if (std::find(choices.begin(), choices.end(), v) == choices.end()) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    fail(key, "'" + v + "' is not one of: " + list);
  }
  return v;
}

double Config::get_double(const std::string& key, double fallback) {
  const auto it = entries_.find(key);
  double v = fallback;
  if (it != entries_.end()) {
    const auto parsed = to_double(it->second.value);
    if (!parsed) fail(key, "expected a number, got '" + it->second.value + "'");
    v = *parsed;
  }
  record(key, number_json(v));
  return v;
}

double Config::require_double(const std::string& key) {
  if (!has(key)) fail(key, "required value is missing");
  return get_double(key, 0.0);
}

double Config::get_double_in(const std::string& key, double fallback, double lo, double hi,
                             bool lo_closed, bool hi_closed) {
  const double v = get_double(key, fallback);
  const bool ok_lo = lo_closed ? v >= lo : v > lo;
  const bool ok_hi = hi_closed ? v <= hi : v < hi;
  if (!ok_lo || !ok_hi) {
    std::ostringstream range;
    range << (lo_closed ? "[" : "(") << lo << ", " << hi << (hi_closed ? "]" : ")");
    std::ostringstream val;
    val << v;
    fail(key, "value " + val.str() + " outside " + range.str());
  }
  return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback, std::int64_t lo,
                             std::int64_t hi) {
  const auto it = entries_.find(key);
  std::int64_t v = fallback;
  if (it != entries_.end()) {
    const std::string& s = it->second.value;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(key, "expected an integer, got '" + s + "'");
  }
  if (v < lo || v > hi) fail(key, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  record(key, v);
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) {
  const auto it = entries_.find(key);
  bool v = fallback;
  if (it != entries_.end()) {
    const std::string& s = it->second.value;
    if (s == "true" || s == "yes" || s == "1") v = true;
    else if (s == "false" || s == "no" || s == "0") v = false;
    else fail(key, "expected true or false, got '" + s + "'");
  }
  record(key, v);
  return v;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) {
  const auto it = entries_.find(key);
  std::vector<double> v = fallback;
  if (it != entries_.end()) {
    v.clear();
    for (const std::string& item : split_list(it->second.value)) {
      const auto parsed = to_double(item);
      if (!parsed) fail(key, "expected a comma-separated list of numbers, got '" + item + "'");
      v.push_back(*parsed);
    }
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (double x : v) arr.push_back(number_json(x));
  record(key, arr);
  return v;
}

std::vector<std::string> Config::get_strings(const std::string& key, const std::vector<std::string>& fallback) {
  const auto it = entries_.find(key);
  std::vector<std::string> v = it == entries_.end() ? fallback : split_list(it->second.value);
  for (const auto& s : v)
    if (s.empty()) fail(key, "empty list item");
  record(key, v);
  return v;
}

std::optional<std::filesystem::path> Config::get_path(const std::string& key) {
  const auto s = get_optional(key);
  if (!s) return std::nullopt;
  std::filesystem::path p(*s);
  if (p.is_relative() && !base_.empty()) p = base_ / p;
  if (!std::filesystem::exists(p)) fail(key, "file does not exist: " + p.string());
  return p;
}

}  // namespace hessvar::cli
