#include "cascade/discrete.hpp"

#include "cascade/errors.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace cascade {

namespace {

enum : int { X = 0, Y = 1, Z = 2 };

void check_table(const Eigen::MatrixXd& d, int rows, const char* name) {
  if (d.rows() != rows || d.cols() < 1) {
    throw ArgumentError(std::string("distortion table ") + name + " must have " + std::to_string(rows) + " rows");
  }
  if (!d.allFinite() || (d.array() < 0.0).any()) throw ArgumentError(std::string("distortion table ") + name + " must be finite and nonnegative");
}

const CondPMF& channel(const std::optional<CondPMF>& c, const char* name, const std::vector<int>& inputs, int output) {
  if (!c) throw InvalidAuxiliaryError(std::string("auxiliary system is missing ") + name);
  if (c->input_sizes() != inputs) throw InvalidAuxiliaryError(std::string(name) + " has the wrong input alphabets");
  if (output > 0 && c->output_size() != output) {
    throw InvalidAuxiliaryError(std::string(name) + " must have " + std::to_string(output) + " outputs");
  }
  return *c;
}

const DeterministicMap& function(const std::optional<DeterministicMap>& m, const char* name, const std::vector<int>& inputs,
                                 int output) {
  if (!m) throw InvalidAuxiliaryError(std::string("auxiliary system is missing ") + name);
  if (m->input_sizes() != inputs) throw InvalidAuxiliaryError(std::string(name) + " has the wrong input alphabets");
  if (m->output_size() != output) throw InvalidAuxiliaryError(std::string(name) + " must have " + std::to_string(output) + " outputs");
  return *m;
}

void check_budget(int size, long long bound, const char* what) {
  if (size > bound) {
    throw InvalidAuxiliaryError(std::string("|") + what + "| = " + std::to_string(size) + " exceeds the cardinality bound " +
                                std::to_string(bound));
  }
}

// Forward-link auxiliaries must not look at Z beyond what (X,Y) carry.
void check_factorization(const JointPMF& joint, const VarSet& forward_vars) {
  const double dev = conditional_mutual_information(joint, forward_vars, {Z}, {X, Y});
  if (dev > 1e-8) throw InvalidAuxiliaryError("induced joint violates the factorization (deviation " + std::to_string(dev) + ")");
}

int size_of(const std::optional<CondPMF>& c) { return c ? c->output_size() : 0; }

}  // namespace

void SourceSpec::validate() const {
  if (pmf.arity() != 3) throw ArgumentError("source pmf must be over (X,Y,Z)");
  const double dev = check_markov_chain(pmf, {X}, {Y}, {Z});
  if (dev > 1e-10) throw ArgumentError("source violates the Markov chain X-Y-Z (I(X;Z|Y) = " + std::to_string(dev) + ")");
  check_table(d1, x_size(), "d1");
  check_table(d2, x_size(), "d2");
  if (d3) check_table(*d3, z_size(), "d3");
}

double expected_distortion(const JointPMF& joint, int target, int var, const Eigen::MatrixXd& d) {
  const VarSet vars = target < var ? VarSet{target, var} : VarSet{var, target};
  const JointPMF m = joint.marginal(vars);
  double e = 0.0;
  int idx[2];
  for (std::size_t f = 0; f < m.num_entries(); ++f) {
    m.unflatten(f, idx);
    const int t = target < var ? idx[0] : idx[1];
    const int v = target < var ? idx[1] : idx[0];
    e += m.probs()(static_cast<Eigen::Index>(f)) * d(t, v);
  }
  return e;
}

double expected_distortion(const JointPMF& joint, int target, const DeterministicMap& map, const VarSet& inputs,
                           const Eigen::MatrixXd& d) {
  VarSet vars = inputs;
  vars.push_back(target);
  std::sort(vars.begin(), vars.end());
  const JointPMF m = joint.marginal(vars);
  std::vector<int> idx(vars.size()), in(inputs.size());
  std::vector<std::size_t> pos(inputs.size());
  std::size_t tpos = 0;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i] == target) tpos = i;
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      if (vars[i] == inputs[j]) pos[j] = i;
    }
  }
  double e = 0.0;
  for (std::size_t f = 0; f < m.num_entries(); ++f) {
    m.unflatten(f, idx);
    for (std::size_t j = 0; j < inputs.size(); ++j) in[j] = idx[pos[j]];
    e += m.probs()(static_cast<Eigen::Index>(f)) * d(idx[tpos], map(in));
  }
  return e;
}

RegionPoint eval_cascade_point(const SourceSpec& src, const AuxiliarySystem& aux) {
  src.validate();
  const int nx = src.x_size(), ny = src.y_size(), nz = src.z_size();
  const int nu = size_of(aux.p_u);
  check_budget(nu, static_cast<long long>(nx) * ny + 3, "U");
  const JointPMF j1 = extend(src.pmf, channel(aux.p_u, "p_u", {nx, ny}, 0), {X, Y});  // U = 3
  const JointPMF j = extend(j1, channel(aux.p_xhat1, "p_xhat1", {nx, ny, nu}, static_cast<int>(src.d1.cols())), {X, Y, 3});
  const auto& g2 = function(aux.g2, "g2", {nu, nz}, static_cast<int>(src.d2.cols()));
  check_factorization(j, {3, 4});
  RegionPoint p;
  p.r1 = conditional_mutual_information(j, {X}, {4, 3}, {Y});
  p.r2 = conditional_mutual_information(j, {3}, {X, Y}, {Z});
  p.d1 = expected_distortion(j, X, 4, src.d1);
  p.d2 = expected_distortion(j, X, g2, {3, Z}, src.d2);
  return p;
}

RegionPoint eval_triangular_point(const SourceSpec& src, const AuxiliarySystem& aux) {
  src.validate();
  const int nx = src.x_size(), ny = src.y_size(), nz = src.z_size();
  const int nu = size_of(aux.p_u), nv = size_of(aux.p_v);
  const long long xy = static_cast<long long>(nx) * ny;
  check_budget(nu, xy + 4, "U");
  check_budget(nv, (xy + 4) * (xy + 1), "V");
  const JointPMF j1 = extend(src.pmf, channel(aux.p_u, "p_u", {nx, ny}, 0), {X, Y});                                   // U = 3
  const JointPMF j2 = extend(j1, channel(aux.p_xhat1, "p_xhat1", {nx, ny, nu}, static_cast<int>(src.d1.cols())), {X, Y, 3});  // Xhat1 = 4
  const JointPMF j = extend(j2, channel(aux.p_v, "p_v", {nx, ny, nu}, 0), {X, Y, 3});                                  // V = 5
  const auto& g2 = function(aux.g2, "g2", {nu, nv, nz}, static_cast<int>(src.d2.cols()));
  check_factorization(j, {3, 4, 5});
  RegionPoint p;
  p.r1 = conditional_mutual_information(j, {X}, {4, 3}, {Y});
  p.r2 = conditional_mutual_information(j, {3}, {X, Y}, {Z});
  p.r3 = conditional_mutual_information(j, {X, Y}, {5}, {3, Z});
  p.d1 = expected_distortion(j, X, 4, src.d1);
  p.d2 = expected_distortion(j, X, g2, {3, 5, Z}, src.d2);
  return p;
}

RegionPoint eval_two_way_cascade_point(const SourceSpec& src, const AuxiliarySystem& aux) {
  src.validate();
  if (!src.d3) throw ArgumentError("two-way evaluation needs the d3 table");
  const int nx = src.x_size(), ny = src.y_size(), nz = src.z_size();
  const int nu = size_of(aux.p_u), nu2 = size_of(aux.p_u2);
  check_budget(nu, static_cast<long long>(nx) * ny + 5, "U1");
  check_budget(nu2, static_cast<long long>(nu) * (nz + 1), "U2");
  const JointPMF j1 = extend(src.pmf, channel(aux.p_u, "p_u", {nx, ny}, 0), {X, Y});                                   // U1 = 3
  const JointPMF j2 = extend(j1, channel(aux.p_xhat1, "p_xhat1", {nx, ny, nu}, static_cast<int>(src.d1.cols())), {X, Y, 3});  // Xhat1 = 4
  const JointPMF j = extend(j2, channel(aux.p_u2, "p_u2", {nz, nu}, 0), {Z, 3});                                       // U2 = 5
  const auto& g2 = function(aux.g2, "g2", {nu, nz}, static_cast<int>(src.d2.cols()));
  const auto& g3 = function(aux.g3, "g3", {nu, nu2, nx, ny}, static_cast<int>(src.d3->cols()));
  check_factorization(j, {3, 4});
  RegionPoint p;
  p.r1 = conditional_mutual_information(j, {X}, {4, 3}, {Y});
  p.r2 = conditional_mutual_information(j, {3}, {X, Y}, {Z});
  p.r3 = conditional_mutual_information(j, {5}, {Z}, {3, X, Y});
  p.d1 = expected_distortion(j, X, 4, src.d1);
  p.d2 = expected_distortion(j, X, g2, {3, Z}, src.d2);
  p.d3 = expected_distortion(j, Z, g3, {3, 5, X, Y}, *src.d3);
  return p;
}

RegionPoint eval_two_way_triangular_point(const SourceSpec& src, const AuxiliarySystem& aux) {
  src.validate();
  if (!src.d3) throw ArgumentError("two-way evaluation needs the d3 table");
  const int nx = src.x_size(), ny = src.y_size(), nz = src.z_size();
  const int nu = size_of(aux.p_u), nv = size_of(aux.p_v), nu2 = size_of(aux.p_u2);
  const long long xy = static_cast<long long>(nx) * ny;
  check_budget(nu, xy + 6, "U1");
  check_budget(nv, static_cast<long long>(nu) * (xy + 3), "V");
  check_budget(nu2, static_cast<long long>(nu) * nv * (nz + 1), "U2");
  const JointPMF j1 = extend(src.pmf, channel(aux.p_u, "p_u", {nx, ny}, 0), {X, Y});                                   // U1 = 3
  const JointPMF j2 = extend(j1, channel(aux.p_xhat1, "p_xhat1", {nx, ny, nu}, static_cast<int>(src.d1.cols())), {X, Y, 3});  // Xhat1 = 4
  const JointPMF j3 = extend(j2, channel(aux.p_v, "p_v", {nx, ny, nu}, 0), {X, Y, 3});                                 // V = 5
  const JointPMF j = extend(j3, channel(aux.p_u2, "p_u2", {nz, nu, nv}, 0), {Z, 3, 5});                                // U2 = 6
  const auto& g2 = function(aux.g2, "g2", {nu, nv, nz}, static_cast<int>(src.d2.cols()));
  const auto& g3 = function(aux.g3, "g3", {nu, nu2, nv, nx, ny}, static_cast<int>(src.d3->cols()));
  check_factorization(j, {3, 4, 5});
  RegionPoint p;
  p.r1 = conditional_mutual_information(j, {X}, {4, 3}, {Y});
  p.r2 = conditional_mutual_information(j, {3}, {X, Y}, {Z});
  p.r3 = conditional_mutual_information(j, {X, Y}, {5}, {3, Z});
  p.r4 = conditional_mutual_information(j, {6}, {Z}, {3, 5, X, Y});
  p.d1 = expected_distortion(j, X, 4, src.d1);
  p.d2 = expected_distortion(j, X, g2, {3, 5, Z}, src.d2);
  p.d3 = expected_distortion(j, Z, g3, {3, 6, 5, X, Y}, *src.d3);
  return p;
}

RegionPoint eval_helper_triangular_point(const SourceSpec& src, const AuxiliarySystem& aux) {
  src.validate();
  const int nx = src.x_size(), ny = src.y_size(), nz = src.z_size();
  const int nh = size_of(aux.p_uh), nu = size_of(aux.p_u), nu2 = size_of(aux.p_v);
  const JointPMF j1 = extend(src.pmf, channel(aux.p_uh, "p_uh", {ny}, 0), {Y});                                          // Uh = 3
  const JointPMF j2 = extend(j1, channel(aux.p_u, "p_u", {nx, ny, nh}, 0), {X, Y, 3});                                    // U1 = 4
  const JointPMF j3 = extend(j2, channel(aux.p_xhat1, "p_xhat1", {nx, ny, nu, nh}, static_cast<int>(src.d1.cols())), {X, Y, 4, 3});  // Xhat1 = 5
  const JointPMF j = extend(j3, channel(aux.p_v, "p_v", {nx, ny, nu, nh}, 0), {X, Y, 4, 3});                              // U2 = 6
  const auto& g2 = function(aux.g2, "g2", {nu, nu2, nh, nz}, static_cast<int>(src.d2.cols()));
  check_factorization(j, {3, 4, 5, 6});
  RegionPoint p;
  p.r1 = conditional_mutual_information(j, {X}, {5, 4}, {Y, 3});
  p.r2 = conditional_mutual_information(j, {4}, {X, Y}, {Z, 3});
  p.r3 = conditional_mutual_information(j, {X, Y}, {6}, {4, 3, Z});
  p.rh = conditional_mutual_information(j, {3}, {Y}, {Z});
  p.d1 = expected_distortion(j, X, 5, src.d1);
  p.d2 = expected_distortion(j, X, g2, {4, 6, 3, Z}, src.d2);
  return p;
}

namespace {

bool next_content_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return true;
  }
  return false;
}

void write_table(std::ostream& os, const char* name, const Eigen::MatrixXd& d) {
  os << "distortion " << name << ' ' << d.rows() << ' ' << d.cols() << '\n' << std::setprecision(17);
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.cols(); ++c) os << d(r, c) << (c + 1 < d.cols() ? " " : "\n");
  }
}

}  // namespace

void write_source(std::ostream& os, const SourceSpec& src) {
  write_pmf(os, src.pmf);
  write_table(os, "d1", src.d1);
  write_table(os, "d2", src.d2);
  if (src.d3) write_table(os, "d3", *src.d3);
}

SourceSpec read_source(std::istream& is) {
  JointPMF pmf = read_pmf(is);
  std::optional<Eigen::MatrixXd> d1, d2, d3;
  std::string line;
  while (next_content_line(is, line)) {
    std::istringstream ls(line);
    std::string word, name;
    Eigen::Index rows = 0, cols = 0;
    if (!(ls >> word >> name >> rows >> cols) || word != "distortion" || rows < 1 || cols < 1) {
      throw ArgumentError("source file: expected 'distortion <name> <rows> <cols>', got '" + line + "'");
    }
    Eigen::MatrixXd d(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (!next_content_line(is, line)) throw ArgumentError("source file: truncated distortion table " + name);
      std::istringstream rs(line);
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!(rs >> d(r, c))) throw ArgumentError("source file: malformed row in distortion table " + name);
      }
    }
    if (name == "d1") d1 = d;
    else if (name == "d2") d2 = d;
    else if (name == "d3") d3 = d;
    else throw ArgumentError("source file: unknown distortion table " + name);
  }
  if (!d1 || !d2) throw ArgumentError("source file: d1 and d2 tables are required");
  SourceSpec src{std::move(pmf), *d1, *d2, d3};
  src.validate();
  return src;
}

void write_aux(std::ostream& os, const AuxiliarySystem& aux) {
  auto ch = [&](const char* name, const std::optional<CondPMF>& c) {
    if (c) {
      os << "channel " << name << '\n';
      write_condpmf(os, *c);
    }
  };
  auto fn = [&](const char* name, const std::optional<DeterministicMap>& m) {
    if (m) {
      os << "function " << name << '\n';
      write_map(os, *m);
    }
  };
  ch("p_u", aux.p_u);
  ch("p_xhat1", aux.p_xhat1);
  ch("p_v", aux.p_v);
  ch("p_u2", aux.p_u2);
  ch("p_uh", aux.p_uh);
  fn("g2", aux.g2);
  fn("g3", aux.g3);
}

AuxiliarySystem read_aux(std::istream& is) {
  AuxiliarySystem aux;
  std::string line;
  while (next_content_line(is, line)) {
    std::istringstream ls(line);
    std::string kind, name;
    ls >> kind >> name;
    if (kind == "channel") {
      CondPMF c = read_condpmf(is);
      if (name == "p_u") aux.p_u = c;
      else if (name == "p_xhat1") aux.p_xhat1 = c;
      else if (name == "p_v") aux.p_v = c;
      else if (name == "p_u2") aux.p_u2 = c;
      else if (name == "p_uh") aux.p_uh = c;
      else throw ArgumentError("aux file: unknown channel " + name);
    } else if (kind == "function") {
      DeterministicMap m = read_map(is);
      if (name == "g2") aux.g2 = m;
      else if (name == "g3") aux.g3 = m;
      else throw ArgumentError("aux file: unknown function " + name);
    } else {
      throw ArgumentError("aux file: expected 'channel <name>' or 'function <name>', got '" + line + "'");
    }
  }
  return aux;
}

}  // namespace cascade
