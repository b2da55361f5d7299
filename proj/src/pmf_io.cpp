#include "cascade/errors.hpp"
#include "cascade/probability.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace cascade {

namespace {

// Next line that is neither blank nor a '#' comment.
bool next_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return true;
  }
  return false;
}

std::istringstream expect_line(std::istream& is, const char* what) {
  std::string line;
  if (!next_line(is, line)) throw ArgumentError(std::string(what) + ": unexpected end of input");
  return std::istringstream(line);
}

void expect_keyword(std::istringstream& ls, const char* keyword) {
  std::string word;
  if (!(ls >> word) || word != keyword) throw ArgumentError(std::string("expected '") + keyword + "' header, got '" + word + "'");
}

std::vector<int> read_ints(std::istringstream& ls, int count, const char* what) {
  std::vector<int> v(static_cast<std::size_t>(count));
  for (auto& x : v) {
    if (!(ls >> x)) throw ArgumentError(std::string(what) + ": malformed header");
  }
  return v;
}

void expect_index(std::istringstream& ls, int expected, const char* what) {
  int i = -1;
  if (!(ls >> i) || i != expected) throw ArgumentError(std::string(what) + ": rows must be listed in row-major order");
}

void write_index(std::ostream& os, const std::vector<int>& sizes, std::size_t flat) {
  std::vector<int> idx(sizes.size());
  for (std::size_t i = sizes.size(); i-- > 0;) {
    idx[i] = static_cast<int>(flat % static_cast<std::size_t>(sizes[i]));
    flat /= static_cast<std::size_t>(sizes[i]);
  }
  for (int v : idx) os << v << ' ';
}

void read_index(std::istringstream& ls, const std::vector<int>& sizes, std::size_t flat, const char* what) {
  std::vector<int> idx(sizes.size());
  for (std::size_t i = sizes.size(); i-- > 0;) {
    idx[i] = static_cast<int>(flat % static_cast<std::size_t>(sizes[i]));
    flat /= static_cast<std::size_t>(sizes[i]);
  }
  for (int v : idx) expect_index(ls, v, what);
}

void write_sizes(std::ostream& os, const char* keyword, const std::vector<int>& sizes) {
  os << keyword << ' ' << sizes.size();
  for (int s : sizes) os << ' ' << s;
}

}  // namespace

void write_pmf(std::ostream& os, const JointPMF& pmf) {
  write_sizes(os, "jointpmf", pmf.sizes());
  os << '\n' << std::setprecision(17);
  for (std::size_t f = 0; f < pmf.num_entries(); ++f) {
    write_index(os, pmf.sizes(), f);
    os << pmf.probs()(static_cast<Eigen::Index>(f)) << '\n';
  }
}

JointPMF read_pmf(std::istream& is) {
  auto header = expect_line(is, "jointpmf");
  expect_keyword(header, "jointpmf");
  int arity = 0;
  if (!(header >> arity) || arity < 1) throw ArgumentError("jointpmf: bad arity");
  const auto sizes = read_ints(header, arity, "jointpmf");
  Eigen::ArrayXd probs(static_cast<Eigen::Index>(table_size(sizes)));
  for (Eigen::Index f = 0; f < probs.size(); ++f) {
    auto ls = expect_line(is, "jointpmf");
    read_index(ls, sizes, static_cast<std::size_t>(f), "jointpmf");
    if (!(ls >> probs(f))) throw ArgumentError("jointpmf: malformed probability");
  }
  return JointPMF(sizes, std::move(probs));
}

void write_condpmf(std::ostream& os, const CondPMF& c) {
  write_sizes(os, "condpmf", c.input_sizes());
  os << ' ' << c.output_size() << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < c.num_inputs(); ++r) {
    write_index(os, c.input_sizes(), r);
    for (int o = 0; o < c.output_size(); ++o) os << c(r, o) << (o + 1 < c.output_size() ? " " : "\n");
  }
}

CondPMF read_condpmf(std::istream& is) {
  auto header = expect_line(is, "condpmf");
  expect_keyword(header, "condpmf");
  int arity = 0;
  if (!(header >> arity) || arity < 1) throw ArgumentError("condpmf: bad arity");
  const auto sizes = read_ints(header, arity, "condpmf");
  int out = 0;
  if (!(header >> out)) throw ArgumentError("condpmf: missing output size");
  Eigen::MatrixXd t(static_cast<Eigen::Index>(table_size(sizes)), out);
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    auto ls = expect_line(is, "condpmf");
    read_index(ls, sizes, static_cast<std::size_t>(r), "condpmf");
    for (int o = 0; o < out; ++o) {
      if (!(ls >> t(r, o))) throw ArgumentError("condpmf: malformed row");
    }
  }
  return CondPMF(sizes, out, std::move(t));
}

void write_map(std::ostream& os, const DeterministicMap& m) {
  write_sizes(os, "map", m.input_sizes());
  os << ' ' << m.output_size() << '\n';
  for (std::size_t r = 0; r < m.num_inputs(); ++r) {
    write_index(os, m.input_sizes(), r);
    os << m(r) << '\n';
  }
}

DeterministicMap read_map(std::istream& is) {
  auto header = expect_line(is, "map");
  expect_keyword(header, "map");
  int arity = 0;
  if (!(header >> arity) || arity < 1) throw ArgumentError("map: bad arity");
  const auto sizes = read_ints(header, arity, "map");
  int out = 0;
  if (!(header >> out)) throw ArgumentError("map: missing output size");
  std::vector<int> outputs(table_size(sizes));
  for (std::size_t r = 0; r < outputs.size(); ++r) {
    auto ls = expect_line(is, "map");
    read_index(ls, sizes, r, "map");
    if (!(ls >> outputs[r])) throw ArgumentError("map: malformed row");
  }
  return DeterministicMap(sizes, out, std::move(outputs));
}

}  // namespace cascade
