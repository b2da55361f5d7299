#include "cascade/cli.hpp"
#include "cascade/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
  using namespace cascade;
  CLI::App app{"Rate-distortion regions for cascade, triangular and two-way source coding with degraded side information"};
  app.set_version_flag("--version", kToolVersion);

  std::string command, config_path;
  bool summary = false;
  app.add_option("command", command, "command to run")->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "key-value configuration file");
  app.add_flag("--summary", summary, "print a summary block to stderr");

  std::map<std::string, std::string> scalar;
  std::vector<std::string> sweeps;
  for (const auto& key : config_keys()) {
    const std::string name = key.substr(key.find('.') + 1);
    if (name == "command") continue;
    if (name == "sweep") {
      app.add_option("--sweep", sweeps, "sweep axis name:lin|log:min:max:steps (repeatable)");
      continue;
    }
    app.add_option("--" + name, scalar[name], "sets " + key);
  }

  CLI11_PARSE(app, argc, argv);

  ResultTable table;
  std::string out;
  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    std::vector<std::pair<std::string, std::string>> flags;
    for (const auto& [name, value] : scalar) {
      if (app.count("--" + name) > 0) flags.emplace_back(name, value);
    }
    for (const auto& s : sweeps) flags.emplace_back("sweep", s);
    if (!command.empty()) flags.emplace_back("command", command);
    apply_overrides(cfg, flags);
    if (cfg.command.empty()) throw ConfigError("command", 0, "missing required key");
    table = run_command(cfg);
    out = cfg.text_or("run.out", "");
    if (out.empty()) write_csv(std::cout, table);
    else emit_csv(table, out);
  } catch (const ConfigError& e) {
    std::cerr << "cascade-rd: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cascade-rd: " << e.what() << "\n";
    return 3;
  }
  if (summary) write_summary(std::cerr, table);
  return table.any_error() ? 1 : 0;
}
