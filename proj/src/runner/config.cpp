#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fwbrw/runner.hpp"
#include "json.hpp"

namespace fwbrw::runner {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(std::size_t line) {
  return line == 0 ? std::string("command line") : "line " + std::to_string(line);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && first != last;
}

struct RawEntry {
  std::string value;
  std::size_t line = 0;
};

Value parse_typed(const std::string& key, const RawEntry& raw, ValueType type) {
  switch (type) {
    case ValueType::integer: {
      std::int64_t v = 0;
      if (!parse_number(raw.value, v)) {
        throw ConfigError(where(raw.line) + ": key '" + key + "' expects an integer, got '" + raw.value + "'",
                          raw.line);
      }
      return v;
    }
    case ValueType::real: {
      double v = 0.0;
      if (!parse_number(raw.value, v) || !std::isfinite(v)) {
        throw ConfigError(where(raw.line) + ": key '" + key + "' expects a real number, got '" + raw.value + "'",
                          raw.line);
      }
      return v;
    }
    case ValueType::string:
      return raw.value;
  }
  return raw.value;
}

std::string unquote(std::string_view v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return std::string(v);
}

}  // namespace

double RunConfig::real(const std::string& key) const {
  const Value& v = params.at(key);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

std::int64_t RunConfig::integer(const std::string& key) const { return std::get<std::int64_t>(params.at(key)); }

const std::string& RunConfig::string(const std::string& key) const { return std::get<std::string>(params.at(key)); }

std::vector<double> RunConfig::real_list(const std::string& key) const {
  std::vector<double> out;
  std::string_view rest = string(key);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    double v = 0.0;
    if (!parse_number(item, v)) throw ConfigError("key '" + key + "': bad list entry '" + std::string(item) + "'", 0);
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list", 0);
  return out;
}

RunConfig parse_config(std::string_view text, std::span<const Override> overrides) {
  std::map<std::string, RawEntry> raw;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where(line_no) + ": expected 'key = value', got '" + std::string(line) + "'", line_no);
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError(where(line_no) + ": empty key", line_no);
    raw[key] = {unquote(trim(line.substr(eq + 1))), line_no};
  }
  for (const Override& o : overrides) {
    std::string key = o.key;
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    raw[key] = {o.value, 0};
  }

  RunConfig cfg;
  const auto exp_it = raw.find("experiment");
  if (exp_it == raw.end() || exp_it->second.value.empty()) throw ConfigError("missing experiment name", 0);
  const ExperimentInfo* info = find_experiment(exp_it->second.value);
  if (!info) {
    std::string names;
    for (const auto& e : registry()) names += (names.empty() ? "" : ", ") + e.name;
    throw ConfigError(where(exp_it->second.line) + ": unknown experiment '" + exp_it->second.value +
                          "'; registered: " + names,
                      exp_it->second.line);
  }
  cfg.experiment = info->name;
  raw.erase(exp_it);

  if (auto it = raw.find("seed"); it != raw.end()) {
    if (!parse_number(it->second.value, cfg.seed)) {
      throw ConfigError(where(it->second.line) + ": key 'seed' expects an unsigned 64-bit integer, got '" +
                            it->second.value + "'",
                        it->second.line);
    }
    raw.erase(it);
  }
  if (auto it = raw.find("out"); it != raw.end()) {
    cfg.out_dir = it->second.value;
    raw.erase(it);
  }
  cfg.replicas = info->default_replicas;
  if (auto it = raw.find("replicas"); it != raw.end()) {
    std::uint64_t r = 0;
    if (!parse_number(it->second.value, r) || r == 0) {
      throw ConfigError(where(it->second.line) + ": key 'replicas' expects a positive integer, got '" +
                            it->second.value + "'",
                        it->second.line);
    }
    cfg.replicas = static_cast<std::size_t>(r);
    raw.erase(it);
  }
  if (auto it = raw.find("format"); it != raw.end()) {
    if (it->second.value == "csv") {
      cfg.format = Format::csv;
    } else if (it->second.value == "json") {
      cfg.format = Format::json;
    } else {
      throw ConfigError(where(it->second.line) + ": key 'format' expects csv or json, got '" + it->second.value + "'",
                        it->second.line);
    }
    raw.erase(it);
  }

  for (const ParamSpec& spec : info->params) {
    auto it = raw.find(spec.key);
    if (it == raw.end()) {
      cfg.params[spec.key] = spec.default_value;
      continue;
    }
    cfg.params[spec.key] = parse_typed(spec.key, it->second, spec.type);
    raw.erase(it);
  }
  if (!raw.empty()) {
    // Report the earliest offending line.
    auto first = std::min_element(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
      const auto la = a.second.line == 0 ? SIZE_MAX : a.second.line;
      const auto lb = b.second.line == 0 ? SIZE_MAX : b.second.line;
      return la < lb;
    });
    throw ConfigError(where(first->second.line) + ": unknown key '" + first->first + "' for experiment '" +
                          cfg.experiment + "'",
                      first->second.line);
  }
  return cfg;
}

std::string_view version() { return "fwbrw 1.0.0"; }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_value(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  return std::get<std::string>(v);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

std::string format_name(Format f) { return f == Format::csv ? "csv" : "json"; }

}  // namespace

std::string to_csv(const RunConfig& config, const RunResult& result) {
  std::ostringstream os;
  os << "# version=" << version() << '\n';
  os << "# experiment=" << config.experiment << '\n';
  os << "# seed=" << config.seed << '\n';
  os << "# replicas=" << config.replicas << '\n';
  for (const auto& [k, v] : config.params) os << "# config." << k << '=' << format_value(v) << '\n';
  for (const auto& [k, v] : result.summary) os << "# summary." << k << '=' << format_double(v) << '\n';
  for (std::size_t i = 0; i < result.table.columns.size(); ++i) {
    os << (i ? "," : "") << csv_field(result.table.columns[i]);
  }
  os << '\n';
  for (const auto& row : result.table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
  return os.str();
}

std::string to_json(const RunConfig& config, const RunResult& result) {
  using nlohmann::ordered_json;
  auto num = [](double x) -> ordered_json {
    if (std::isfinite(x)) return x;
    return format_double(x);
  };
  ordered_json cfg = ordered_json::object();
  cfg["experiment"] = config.experiment;
  cfg["replicas"] = config.replicas;
  cfg["format"] = format_name(config.format);
  for (const auto& [k, v] : config.params) {
    std::visit([&](const auto& x) { cfg[k] = x; }, v);
  }
  ordered_json summary = ordered_json::object();
  for (const auto& [k, v] : result.summary) summary[k] = num(v);
  ordered_json rows = ordered_json::array();
  for (const auto& row : result.table.rows) {
    ordered_json r = ordered_json::array();
    for (double x : row) r.push_back(num(x));
    rows.push_back(std::move(r));
  }
  ordered_json doc;
  doc["version"] = version();
  doc["config"] = std::move(cfg);
  doc["seed"] = config.seed;
  doc["results"] = {{"summary", std::move(summary)}, {"columns", result.table.columns}, {"rows", std::move(rows)}};
  return doc.dump(2) + "\n";
}

std::filesystem::path write_artifact(const RunConfig& config, const RunResult& result) {
  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  const auto path = dir / (config.experiment + "." + format_name(config.format));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << (config.format == Format::csv ? to_csv(config, result) : to_json(config, result));
  if (!out) throw std::runtime_error("write failed for " + path.string());
  return path;
}

}  // namespace fwbrw::runner
