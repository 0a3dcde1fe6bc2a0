#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fwbrw/parallel.hpp"
#include "fwbrw/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// "--key value" and "--key=value" pairs left over after the fixed options.
std::vector<fwbrw::runner::Override> collect_overrides(const std::vector<std::string>& extras) {
  std::vector<fwbrw::runner::Override> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3) throw std::runtime_error("unexpected argument '" + tok + "'");
    const auto eq = tok.find('=');
    if (eq != std::string::npos) {
      out.push_back({tok.substr(2, eq - 2), tok.substr(eq + 1)});
      continue;
    }
    if (i + 1 >= extras.size()) throw std::runtime_error("option '" + tok + "' needs a value");
    out.push_back({tok.substr(2), extras[++i]});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-Wright / branching random walk experiment runner"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0: all cores)");

  auto* list = app.add_subcommand("list", "print the experiment registry");
  bool verbose = false;
  list->add_flag("-v,--verbose", verbose, "show parameters and defaults");

  auto* run = app.add_subcommand("run", "run one experiment");
  run->allow_extras();
  std::string experiment, config_path, out_dir, seed;
  run->add_option("--experiment", experiment, "registered experiment name");
  run->add_option("--config", config_path, "key = value configuration file");
  run->add_option("--seed", seed, "master seed (unsigned 64-bit)");
  run->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);
  fwbrw::set_worker_threads(threads);

  try {
    if (*list) {
      for (const auto& info : fwbrw::runner::registry()) {
        std::cout << info.name << "  " << info.summary << '\n';
        if (!verbose) continue;
        std::cout << "    replicas = " << info.default_replicas << '\n';
        for (const auto& p : info.params) {
          std::cout << "    " << p.key << " = " << fwbrw::runner::format_value(p.default_value) << "  (" << p.help
                    << ")\n";
        }
      }
      return 0;
    }
    auto overrides = collect_overrides(run->remaining());
    if (!experiment.empty()) overrides.push_back({"experiment", experiment});
    if (!seed.empty()) overrides.push_back({"seed", seed});
    if (!out_dir.empty()) overrides.push_back({"out", out_dir});
    const std::string text = config_path.empty() ? std::string() : read_file(config_path);
    const auto cfg = fwbrw::runner::parse_config(text, overrides);
    const auto result = fwbrw::runner::run_experiment(cfg);
    const auto path = fwbrw::runner::write_artifact(cfg, result);
    for (const auto& [k, v] : result.summary) std::cout << k << " = " << fwbrw::runner::format_double(v) << '\n';
    std::cout << "wrote " << path.string() << '\n';
  } catch (const fwbrw::runner::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
