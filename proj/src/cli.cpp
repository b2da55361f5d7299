#include "cascade/cli.hpp"

#include "cascade/discrete.hpp"
#include "cascade/errors.hpp"
#include "cascade/gaussian.hpp"
#include "cascade/probability.hpp"
#include "cascade/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace cascade {

namespace {

struct KeyInfo {
  const char* key;
  bool numeric;
  const char* fallback = nullptr;  // default applied before dispatch
};

// Flag names are the part after the dot and are unique.
const std::vector<KeyInfo>& key_table() {
  static const std::vector<KeyInfo> table = {
      {"run.command", false},        {"run.seed", false, "0"},           {"run.out", false},
      {"run.sweep", false},          {"source.var-a", true},        {"source.var-b", true},
      {"source.var-z", true},        {"input.source-file", false},  {"input.aux-file", false},
      {"input.setting", false, "cascade"},      {"query.d1", true},            {"query.d2", true},
      {"query.d3", true},            {"query.dz1", true},           {"query.dz2", true},
      {"query.r2", true},            {"query.r3", true},            {"query.r4", true},
      {"query.r5", true},            {"solver.grid", true, "400"},         {"solver.bisection-steps", true, "200"},
      {"solver.restarts", true, "16"},     {"solver.tolerance", true, "1e-6"},    {"solver.u-size", true, "2"},
      {"solver.max-iterations", true, "200"}, {"sim.n", true, "16"},             {"sim.epsilon", true, "0.5"},
      {"sim.delta", true, "0.15"},           {"sim.trials", true, "1000"},          {"kaspi.first-pair", false},
      {"kaspi.second-pair", false},  {"kaspi.m1", false},           {"kaspi.m2", false},
      {"kaspi.instances", true, "1"},     {"kaspi.alphabet", true, "2"},
  };
  return table;
}

bool is_numeric_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (key == k.key) return k.numeric;
  }
  return false;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto r = std::from_chars(t.data(), end, v);
  if (t.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

void add_sweep(RunConfig& cfg, const std::string& text, int line) {
  try {
    cfg.sweeps.push_back(parse_sweep(text));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("run.sweep", line, e.what());
  }
}

void set_value(RunConfig& cfg, const std::string& name, const std::string& value, int line) {
  const std::string key = canonical_key(name, line);
  if (key == "run.sweep") {
    add_sweep(cfg, value, line);
    return;
  }
  if (key == "run.command") {
    cfg.command = value;
    return;
  }
  cfg.values[key] = value;
  cfg.lines[key] = line;
}

const std::map<std::string, std::vector<std::string>>& required_keys() {
  static const std::map<std::string, std::vector<std::string>> req = {
      {"gaussian-cascade", {"source.var-a", "source.var-b", "source.var-z", "query.d1", "query.d2", "query.r2"}},
      {"gaussian-triangular", {"source.var-a", "source.var-b", "source.var-z", "query.d1", "query.d2", "query.r2", "query.r3"}},
      {"gaussian-two-way",
       {"source.var-a", "source.var-b", "source.var-z", "query.d1", "query.d2", "query.d3", "query.r2", "query.r3", "query.r4"}},
      {"gaussian-extended", {"source.var-a", "source.var-b", "source.var-z", "query.dz1", "query.dz2", "query.r3", "query.r4"}},
      {"discrete-eval", {"input.source-file", "input.aux-file"}},
      {"discrete-search", {"input.source-file", "query.d1", "query.d2", "query.r2"}},
      {"simulate", {"input.source-file", "input.aux-file"}},
      {"kaspi-check", {}},
  };
  return req;
}

// ---- table helpers ----

struct Row {
  std::vector<std::string> cells;
  void num(double v) { cells.push_back(format_number(v)); }
  void integer(long long v) { cells.push_back(std::to_string(v)); }
};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::ifstream open_input(const std::string& path, const std::string& key) {
  std::ifstream is(path);
  if (!is) throw ConfigError(key, 0, "cannot open '" + path + "'");
  return is;
}

GaussianCascadeSource gaussian_source(const RunConfig& c) {
  GaussianCascadeSource s{c.number("source.var-a"), c.number("source.var-b"), c.number("source.var-z")};
  s.validate();
  return s;
}

ForwardSolverOptions forward_options(const RunConfig& c) {
  ForwardSolverOptions o;
  o.grid = static_cast<int>(c.integer_or("solver.grid", o.grid));
  o.bisection_steps = static_cast<int>(c.integer_or("solver.bisection-steps", o.bisection_steps));
  return o;
}

SourceSpec discrete_source(const RunConfig& c) {
  auto is = open_input(c.values.at("input.source-file"), "input.source-file");
  return read_source(is);
}

AuxiliarySystem discrete_aux(const RunConfig& c) {
  auto is = open_input(c.values.at("input.aux-file"), "input.aux-file");
  return read_aux(is);
}

// Each command declares its echoed inputs and output columns, and fills the
// output cells of a row; errors are caught by the caller.
struct Command {
  std::vector<std::string> inputs;   // config keys echoed as columns
  std::vector<std::string> outputs;  // output column names
  std::function<std::vector<Row>(const RunConfig&)> run;
};

void forward_cells(Row& r, const ForwardSolution& s, const GaussianCascadeSource& src) {
  r.num(s.r1);
  r.num(s.aux.alpha);
  r.num(s.aux.beta);
  r.num(s.aux.var_zstar);
  r.num(aux_statistics(src, s.aux).r2_required);
}

GaussianQuery query_of(const RunConfig& c) {
  GaussianQuery q;
  q.d1 = c.optional_number("query.d1");
  q.d2 = c.optional_number("query.d2");
  q.d3 = c.optional_number("query.d3");
  q.dz1 = c.optional_number("query.dz1");
  q.dz2 = c.optional_number("query.dz2");
  q.r2 = c.optional_number("query.r2");
  q.r3 = c.optional_number("query.r3");
  q.r4 = c.optional_number("query.r4");
  q.r5 = c.optional_number("query.r5");
  return q;
}

const std::vector<std::string> kForwardOut = {"r1", "alpha", "beta", "var_zstar", "r2_used"};

RegionPoint evaluate_setting(const std::string& setting, const SourceSpec& src, const AuxiliarySystem& aux) {
  if (setting == "cascade") return eval_cascade_point(src, aux);
  if (setting == "triangular") return eval_triangular_point(src, aux);
  if (setting == "two-way-cascade") return eval_two_way_cascade_point(src, aux);
  if (setting == "two-way-triangular") return eval_two_way_triangular_point(src, aux);
  if (setting == "helper") return eval_helper_triangular_point(src, aux);
  throw ConfigError("input.setting", 0,
                    "unknown setting '" + setting + "' (cascade, triangular, two-way-cascade, two-way-triangular, helper)");
}

JointPMF random_pmf(std::vector<int> sizes, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  JointPMF u = JointPMF::uniform(sizes);
  Eigen::ArrayXd p(static_cast<Eigen::Index>(u.num_entries()));
  for (auto& v : p) v = e(rng);
  return JointPMF(std::move(sizes), p / p.sum());
}

DeterministicMap random_map(std::vector<int> sizes, int out, std::mt19937_64& rng) {
  std::size_t n = 1;
  for (int s : sizes) n *= static_cast<std::size_t>(s);
  std::vector<int> values(n);
  std::uniform_int_distribution<int> d(0, out - 1);
  for (auto& v : values) v = d(rng);
  return DeterministicMap(std::move(sizes), out, std::move(values));
}

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"gaussian-cascade",
       {{"source.var-a", "source.var-b", "source.var-z", "query.d1", "query.d2", "query.r2"}, kForwardOut,
        [](const RunConfig& c) {
          const auto src = gaussian_source(c);
          Row r;
          forward_cells(r, cascade_min_r1(src, query_of(c), forward_options(c)), src);
          return std::vector<Row>{r};
        }}},
      {"gaussian-triangular",
       {{"source.var-a", "source.var-b", "source.var-z", "query.d1", "query.d2", "query.r2", "query.r3"}, kForwardOut,
        [](const RunConfig& c) {
          const auto src = gaussian_source(c);
          Row r;
          forward_cells(r, triangular_min_r1(src, query_of(c), forward_options(c)), src);
          return std::vector<Row>{r};
        }}},
      {"gaussian-two-way",
       {{"source.var-a", "source.var-b", "source.var-z", "query.d1", "query.d2", "query.d3", "query.r2", "query.r3", "query.r4"},
        {"r1", "alpha", "beta", "var_zstar", "r2_used", "r4_threshold"},
        [](const RunConfig& c) {
          const auto src = gaussian_source(c);
          const auto s = two_way_triangular_min_r1(src, query_of(c), forward_options(c));
          Row r;
          forward_cells(r, s.forward, src);
          r.num(s.r4_threshold);
          return std::vector<Row>{r};
        }}},
      {"gaussian-extended",
       {{"source.var-a", "source.var-b", "source.var-z", "query.dz1", "query.dz2", "query.r3", "query.r4"},
        {"case", "w1_var", "w2_var", "w3_var", "d_prime", "d_double_prime", "r3_used", "r4_used", "r5_used", "dz1_achieved",
         "dz2_achieved", "slack_r3", "slack_r3_r5", "slack_r4_r5"},
        [](const RunConfig& c) {
          const auto src = gaussian_source(c);
          const double dz1 = c.number("query.dz1"), dz2 = c.number("query.dz2");
          const auto b = extended_backward_achievability(src, dz1, dz2, c.number("query.r3"), c.number("query.r4"));
          const auto chk = extended_backward_region_check(src, b.r3, b.r4, b.r5, dz1, dz2);
          Row r;
          r.integer(b.case_id);
          for (double v : {b.w1_var, b.w2_var, b.w3_var, b.d_prime, b.d_double_prime, b.r3, b.r4, b.r5, b.dz1_achieved,
                           b.dz2_achieved, chk.slack[0], chk.slack[1], chk.slack[2]}) {
            r.num(v);  // infinite noise variances print as empty cells
          }
          return std::vector<Row>{r};
        }}},
      {"discrete-eval",
       {{"input.source-file", "input.aux-file", "input.setting"},
        {"r1", "r2", "r3", "r4", "rh", "d1", "d2", "d3"},
        [](const RunConfig& c) {
          const auto p = evaluate_setting(c.text_or("input.setting", "cascade"), discrete_source(c), discrete_aux(c));
          Row r;
          for (double v : {p.r1, p.r2, p.r3, p.r4, p.rh, p.d1, p.d2, p.d3}) r.num(v);
          return std::vector<Row>{r};
        }}},
      {"discrete-search",
       {{"input.source-file", "query.d1", "query.d2", "query.r2", "solver.u-size", "solver.restarts", "run.seed"},
        {"r1", "r2_used", "d1_achieved", "d2_achieved", "restart"},
        [](const RunConfig& c) {
          SearchOptions o;
          o.u_size = static_cast<int>(c.integer_or("solver.u-size", o.u_size));
          o.restarts = static_cast<int>(c.integer_or("solver.restarts", o.restarts));
          o.tolerance = c.number_or("solver.tolerance", o.tolerance);
          o.max_iterations = static_cast<int>(c.integer_or("solver.max-iterations", o.max_iterations));
          o.seed = c.seed();
          const auto s = min_r1_cascade_search(discrete_source(c), c.number("query.d1"), c.number("query.d2"), c.number("query.r2"), o);
          Row r;
          for (double v : {s.r1, s.point.r2, s.point.d1, s.point.d2}) r.num(v);
          r.integer(s.restart);
          return std::vector<Row>{r};
        }}},
      {"simulate",
       {{"input.source-file", "input.aux-file", "sim.n", "sim.epsilon", "sim.delta", "sim.trials", "run.seed"},
        {"r_l", "r_10", "r_11", "r_2", "bits_l", "bits_10", "bits_11", "bits_2", "e0", "e1", "e2", "e3", "e4", "e5", "e0_exposed",
         "e1_exposed", "e2_exposed", "e3_exposed", "e4_exposed", "e5_exposed", "flagged",
         "d1_mean", "d1_ci", "d2_mean", "d2_ci", "unflagged", "d1_unflagged", "d1_unflagged_ci", "d2_unflagged",
         "d2_unflagged_ci"},
        [](const RunConfig& c) {
          TypicalityParams tp;
          tp.n = static_cast<int>(c.integer_or("sim.n", tp.n));
          tp.epsilon = c.number_or("sim.epsilon", tp.epsilon);
          const auto s = run_simulation(discrete_source(c), discrete_aux(c), tp, c.number_or("sim.delta", 0.15),
                                        static_cast<int>(c.integer_or("sim.trials", 1000)), c.seed());
          Row r;
          for (double v : {s.rates.r_l, s.rates.r_10, s.rates.r_11, s.rates.r_2}) r.num(v);
          for (int v : {s.rates.bits_l, s.rates.bits_10, s.rates.bits_11, s.rates.bits_2}) r.integer(v);
          for (long v : s.events) r.integer(v);
          for (long v : s.exposure) r.integer(v);
          r.integer(s.flagged);
          for (double v : {s.d1_mean, s.d1_half_width, s.d2_mean, s.d2_half_width}) r.num(v);
          r.integer(s.unflagged);
          for (double v : {s.d1_unflagged, s.d1_unflagged_half_width, s.d2_unflagged, s.d2_unflagged_half_width}) r.num(v);
          return std::vector<Row>{r};
        }}},
      {"kaspi-check",
       {{"kaspi.instances", "kaspi.alphabet", "run.seed"},
        {"instance", "i_a2_b1", "i_b1_m1", "i_a2_m2", "max"},
        [](const RunConfig& c) {
          std::vector<Row> rows;
          auto emit = [&](long i, const KaspiValues& v) {
            Row r;
            r.integer(i);
            for (double x : {v.a2_b1, v.b1_m1, v.a2_m2, v.max()}) r.num(x);
            rows.push_back(r);
          };
          const bool files = c.has("kaspi.first-pair") || c.has("kaspi.second-pair") || c.has("kaspi.m1") || c.has("kaspi.m2");
          if (files) {
            for (const char* k : {"kaspi.first-pair", "kaspi.second-pair", "kaspi.m1", "kaspi.m2"}) {
              if (!c.has(k)) throw ConfigError(k, 0, "required when any Kaspi input file is given");
            }
            auto f1 = open_input(c.values.at("kaspi.first-pair"), "kaspi.first-pair");
            auto f2 = open_input(c.values.at("kaspi.second-pair"), "kaspi.second-pair");
            auto f3 = open_input(c.values.at("kaspi.m1"), "kaspi.m1");
            auto f4 = open_input(c.values.at("kaspi.m2"), "kaspi.m2");
            const auto p1 = read_pmf(f1), p2 = read_pmf(f2);
            const auto m1 = read_map(f3), m2 = read_map(f4);
            emit(0, kaspi_lemma_check(p1, p2, m1, m2));
            return rows;
          }
          const long count = c.integer_or("kaspi.instances", 1);
          const int k = static_cast<int>(c.integer_or("kaspi.alphabet", 2));
          if (count < 1 || k < 1 || k > 8) throw ArgumentError("kaspi-check needs instances >= 1 and alphabet in 1..8");
          std::mt19937_64 rng(c.seed());
          for (long i = 0; i < count; ++i) {
            const auto p1 = random_pmf({k, k}, rng), p2 = random_pmf({k, k}, rng);
            const auto m1 = random_map({k, k}, k, rng);
            const auto m2 = random_map({k, k, k}, k, rng);
            emit(i, kaspi_lemma_check(p1, p2, m1, m2));
          }
          return rows;
        }}},
  };
  return table;
}

std::string column_name(const std::string& key) {
  std::string name = key.substr(key.find('.') + 1);
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

}  // namespace

// ---- SweepAxis / RunConfig ----

std::vector<double> SweepAxis::values() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double t = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    out.push_back(log ? std::exp(std::log(min) + t * (std::log(max) - std::log(min))) : min + t * (max - min));
  }
  if (steps > 1) out.back() = max;
  return out;
}

double RunConfig::number(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ConfigError(column_name(key), 0, "missing required key");
  const auto v = parse_double(it->second);
  if (!v) throw ConfigError(key, lines.count(key) ? lines.at(key) : 0, "malformed number '" + it->second + "'");
  return *v;
}

std::optional<double> RunConfig::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

double RunConfig::number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

long RunConfig::integer_or(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 1e15) {
    throw ConfigError(key, lines.count(key) ? lines.at(key) : 0, "expected an integer, got '" + values.at(key) + "'");
  }
  return static_cast<long>(v);
}

std::uint64_t RunConfig::seed() const {
  if (!has("run.seed")) return 0;
  const std::string t = trim(values.at("run.seed"));
  std::uint64_t v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    throw ConfigError("run.seed", lines.count("run.seed") ? lines.at("run.seed") : 0, "malformed seed '" + t + "'");
  }
  return v;
}

std::string RunConfig::text_or(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : trim(it->second);
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "run.command=" << command << "\n";
  for (const auto& [k, v] : values) {
    if (k != "run.out") os << k << "=" << trim(v) << "\n";
  }
  for (const auto& s : sweeps) {
    os << "run.sweep=" << s.key << ":" << (s.log ? "log" : "lin") << ":" << format_number(s.min) << ":" << format_number(s.max)
       << ":" << s.steps << "\n";
  }
  return os.str();
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : commands()) n.push_back(k);
    return n;
  }();
  return names;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : key_table()) k.emplace_back(e.key);
    return k;
  }();
  return keys;
}

std::string canonical_key(const std::string& name, int line) {
  for (const auto& e : key_table()) {
    const std::string key = e.key;
    if (name == key || name == key.substr(key.find('.') + 1)) return key;
  }
  throw ConfigError(name, line, "unknown key");
}

SweepAxis parse_sweep(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(trim(text));
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 5) throw ConfigError("run.sweep", 0, "expected name:lin|log:min:max:steps, got '" + text + "'");
  SweepAxis a;
  a.key = canonical_key(parts[0]);
  if (!is_numeric_key(a.key)) throw ConfigError("run.sweep", 0, "parameter '" + parts[0] + "' is not numeric");
  if (parts[1] != "lin" && parts[1] != "log") throw ConfigError("run.sweep", 0, "spacing must be lin or log");
  a.log = parts[1] == "log";
  const auto lo = parse_double(parts[2]), hi = parse_double(parts[3]), st = parse_double(parts[4]);
  if (!lo || !hi) throw ConfigError("run.sweep", 0, "malformed sweep bound in '" + text + "'");
  if (!st || *st < 1 || *st != std::floor(*st) || *st > 1e6) throw ConfigError("run.sweep", 0, "steps must be an integer >= 1");
  if (a.log && (*lo <= 0 || *hi <= 0)) throw ConfigError("run.sweep", 0, "log sweep needs positive bounds");
  a.min = *lo;
  a.max = *hi;
  a.steps = static_cast<int>(*st);
  return a;
}

RunConfig parse_config(std::istream& is) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.find('.') == std::string::npos) throw ConfigError(key, lineno, "keys in files carry a section prefix (section.name)");
    set_value(cfg, key, trim(line.substr(eq + 1)), lineno);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", 0, "cannot open '" + path + "'");
  return parse_config(is);
}

void apply_overrides(RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& flags) {
  bool sweep_reset = false;
  for (const auto& [name, value] : flags) {
    // Flag sweeps replace file sweeps as a group.
    if (canonical_key(name) == "run.sweep" && !sweep_reset) {
      cfg.sweeps.clear();
      sweep_reset = true;
    }
    set_value(cfg, name, value, 0);
  }
}

void validate_config(const RunConfig& cfg) {
  const auto req = required_keys().find(cfg.command);
  if (req == required_keys().end()) throw ConfigError("run.command", 0, "unknown command '" + cfg.command + "'");
  std::set<std::string> swept;
  for (const auto& s : cfg.sweeps) swept.insert(s.key);
  for (const auto& k : req->second) {
    if (!cfg.has(k) && !swept.count(k)) throw ConfigError(column_name(k), 0, "missing required key");
  }
  for (const auto& [k, v] : cfg.values) {
    if (is_numeric_key(k) && !parse_double(v)) throw ConfigError(k, cfg.lines.at(k), "malformed number '" + v + "'");
  }
  if (cfg.has("run.seed")) cfg.seed();
}

// ---- tables ----

bool ResultTable::any_error() const {
  if (columns.size() < 2) return false;
  return std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r[status_column()] == "error"; });
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "";
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

ResultTable run_command(const RunConfig& cfg) {
  validate_config(cfg);
  const Command& cmd = commands().at(cfg.command);

  std::vector<std::string> inputs = cmd.inputs;
  for (const auto& s : cfg.sweeps) {
    if (std::find(inputs.begin(), inputs.end(), s.key) == inputs.end()) inputs.push_back(s.key);
  }

  ResultTable t;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.canonical())));
  t.provenance = {std::string("cascade-rd ") + kToolVersion, "command " + cfg.command, "seed " + std::to_string(cfg.seed()),
                  std::string("config-hash ") + hash};
  for (const auto& k : inputs) t.columns.push_back(column_name(k));
  t.columns.insert(t.columns.end(), cmd.outputs.begin(), cmd.outputs.end());
  t.columns.push_back("status");
  t.columns.push_back("message");

  // Cartesian product over sweep axes; the first axis varies slowest.
  std::vector<std::vector<double>> axes;
  std::size_t total = 1;
  for (const auto& s : cfg.sweeps) {
    axes.push_back(s.values());
    total *= axes.back().size();
  }
  for (std::size_t p = 0; p < total; ++p) {
    RunConfig point = cfg;
    for (const auto& e : key_table()) {
      if (e.fallback && !point.has(e.key)) point.values[e.key] = e.fallback;
    }
    std::size_t rem = p;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& vals = axes[a];
      std::ostringstream os;
      os << std::setprecision(17) << vals[rem % vals.size()];
      point.values[cfg.sweeps[a].key] = os.str();
      rem /= vals.size();
    }
    std::vector<std::string> echo;
    for (const auto& k : inputs) {
      const auto v = point.values.find(k);
      if (v == point.values.end()) echo.emplace_back("");
      else if (k == "run.seed") echo.push_back(std::to_string(point.seed()));
      else if (is_numeric_key(k)) echo.push_back(format_number(*parse_double(v->second)));
      else echo.push_back(v->second);
    }
    auto fail = [&](const std::string& status, const std::string& msg) {
      std::vector<std::string> r = echo;
      r.insert(r.end(), cmd.outputs.size(), "");
      r.push_back(status);
      r.push_back(msg);
      t.rows.push_back(std::move(r));
    };
    try {
      for (auto& row : cmd.run(point)) {
        std::vector<std::string> r = echo;
        r.insert(r.end(), row.cells.begin(), row.cells.end());
        r.push_back("ok");
        r.push_back("");
        t.rows.push_back(std::move(r));
      }
    } catch (const ConfigError&) {
      throw;  // unreadable inputs abort the run
    } catch (const InfeasibleError& e) {
      fail("infeasible", e.what());
    } catch (const std::exception& e) {
      fail("error", e.what());
    }
  }
  return t;
}

void write_csv(std::ostream& os, const ResultTable& table) {
  for (const auto& p : table.provenance) os << "# " << p << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << csv_escape(table.columns[i]);
  os << "\n";
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_escape(r[i]);
    os << "\n";
  }
}

void emit_csv(const ResultTable& table, const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(fnv1a(path) & 0xffff);
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    write_csv(os, table);
    os.flush();
    if (!os) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at '" + path + "'");
  }
}

void write_summary(std::ostream& os, const ResultTable& table) {
  std::size_t ok = 0, infeasible = 0, error = 0;
  for (const auto& r : table.rows) {
    const auto& s = r[table.status_column()];
    ok += s == "ok";
    infeasible += s == "infeasible";
    error += s == "error";
  }
  for (const auto& p : table.provenance) os << p << "\n";
  os << table.rows.size() << " rows: " << ok << " ok, " << infeasible << " infeasible, " << error << " error\n";
  for (const auto& r : table.rows) {
    const auto& s = r[table.status_column()];
    if (s != "ok") os << "  " << s << ": " << r.back() << "\n";
  }
}

}  // namespace cascade
