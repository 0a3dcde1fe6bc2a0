#pragma once

// Configuration parsing, experiment registry and result export.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fwbrw::runner {

using Value = std::variant<std::int64_t, double, std::string>;

enum class ValueType { integer, real, string };
enum class Format { csv, json };

struct ParamSpec {
  std::string key;
  ValueType type = ValueType::real;
  Value default_value;
  std::string help;
};

struct ExperimentInfo {
  std::string name;
  std::string summary;
  std::size_t default_replicas = 1;
  std::vector<ParamSpec> params;
};

class ConfigError : public std::runtime_error {
 public:
  // line 0 marks a command-line override.
  ConfigError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RunConfig {
  std::string experiment;
  std::map<std::string, Value> params;  // every schema key, defaults filled in
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::size_t replicas = 0;
  Format format = Format::csv;

  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  const std::string& string(const std::string& key) const;
  // Comma-separated list of reals stored under a string key.
  std::vector<double> real_list(const std::string& key) const;
};

struct Override {
  std::string key;
  std::string value;
};

// Parses "key = value" lines ('#' starts a comment), then applies the
// overrides. Reserved keys: experiment, seed, out, replicas, format.
RunConfig parse_config(std::string_view text, std::span<const Override> overrides = {});

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  std::vector<std::pair<std::string, double>> summary;
  Table table;
};

const std::vector<ExperimentInfo>& registry();
// Resolves registered names and aliases; nullptr if unknown.
const ExperimentInfo* find_experiment(std::string_view name);

// Throws std::invalid_argument listing the registered names if unknown.
RunResult run_experiment(const RunConfig& config);

std::string_view version();
// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);
std::string format_value(const Value& v);

std::string to_csv(const RunConfig& config, const RunResult& result);
std::string to_json(const RunConfig& config, const RunResult& result);

// Writes <out_dir>/<experiment>.<csv|json>, creating the directory.
std::filesystem::path write_artifact(const RunConfig& config, const RunResult& result);

}  // namespace fwbrw::runner
