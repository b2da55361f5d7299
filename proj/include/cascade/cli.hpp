#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cascade {

inline constexpr const char* kToolVersion = "0.1.0";

// One sweep axis: "name:lin|log:min:max:steps".
struct SweepAxis {
  std::string key;  // canonical "section.name"
  bool log = false;
  double min = 0.0, max = 0.0;
  int steps = 1;
  std::vector<double> values() const;
};

// Flat key-value configuration. Keys are "section.name"; the matching command
// line flag is "--name". Values are kept as text and parsed on use.
struct RunConfig {
  std::string command;
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;  // key -> config file line, 0 for flags
  std::vector<SweepAxis> sweeps;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  double number(const std::string& key) const;
  std::optional<double> optional_number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer_or(const std::string& key, long fallback) const;
  std::uint64_t seed() const;
  std::string text_or(const std::string& key, const std::string& fallback) const;

  // Stable text form used for the provenance hash; excludes the output path.
  std::string canonical() const;
};

const std::vector<std::string>& command_names();
// All recognised keys in "section.name" form.
const std::vector<std::string>& config_keys();
// Maps "name" or "section.name" to the canonical key; throws ConfigError if unknown.
std::string canonical_key(const std::string& name, int line = 0);

SweepAxis parse_sweep(const std::string& text);

// Parses the text format: "section.name = value" per line, '#' comments,
// repeated "run.sweep" lines accumulate.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);
// Applies flag values over cfg; flags are (name, value) pairs without dashes.
void apply_overrides(RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& flags);
// Checks the command, required keys per command, numeric syntax, and sweep keys.
void validate_config(const RunConfig& cfg);

struct ResultTable {
  std::vector<std::string> provenance;  // written as "# " lines
  std::vector<std::string> columns;     // last two are status and message
  std::vector<std::vector<std::string>> rows;

  bool any_error() const;
  std::size_t status_column() const { return columns.size() - 2; }
};

std::string format_number(double v);  // 12 significant digits; empty for inf/nan
std::uint64_t fnv1a(const std::string& text);

ResultTable run_command(const RunConfig& cfg);

void write_csv(std::ostream& os, const ResultTable& table);
// Writes to a temporary file next to path, then renames over it.
void emit_csv(const ResultTable& table, const std::string& path);
// Short human-readable digest of a table.
void write_summary(std::ostream& os, const ResultTable& table);

}  // namespace cascade
