#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace cascade {

using VarSet = std::vector<int>;

inline constexpr double kNormalizationTol = 1e-12;
inline constexpr std::size_t kMaxTableEntries = 10'000'000;

// Dense joint distribution over finitely many variables. Entries are stored
// row-major: the last variable varies fastest.
class JointPMF {
 public:
  JointPMF(std::vector<int> sizes, Eigen::ArrayXd probs);

  // Uniform distribution over the given alphabets.
  static JointPMF uniform(std::vector<int> sizes);

  int arity() const { return static_cast<int>(sizes_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  int size(int var) const { return sizes_.at(static_cast<std::size_t>(var)); }
  std::size_t num_entries() const { return static_cast<std::size_t>(probs_.size()); }
  const Eigen::ArrayXd& probs() const { return probs_; }

  double operator()(std::span<const int> index) const { return probs_(static_cast<Eigen::Index>(flat_index(index))); }
  std::size_t flat_index(std::span<const int> index) const;
  void unflatten(std::size_t flat, std::span<int> index) const;

  // Marginal over vars, in the order given. Entries of the result are
  // accumulated in row-major order of this table.
  JointPMF marginal(const VarSet& vars) const;

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> strides_;
  Eigen::ArrayXd probs_;
};

// p(out | inputs). Row r of the table is the conditional for the input tuple
// with row-major flat index r.
class CondPMF {
 public:
  CondPMF(std::vector<int> input_sizes, int output_size, Eigen::MatrixXd table);

  const std::vector<int>& input_sizes() const { return input_sizes_; }
  int output_size() const { return output_size_; }
  const Eigen::MatrixXd& table() const { return table_; }
  double operator()(std::size_t input_flat, int out) const { return table_(static_cast<Eigen::Index>(input_flat), out); }
  std::size_t num_inputs() const { return static_cast<std::size_t>(table_.rows()); }

  // Deterministic channel out = map(in), as a 0/1 table.
  static CondPMF from_function(std::vector<int> input_sizes, int output_size, const std::vector<int>& outputs);
  // Output independent of the input, distributed as dist.
  static CondPMF constant(std::vector<int> input_sizes, const Eigen::VectorXd& dist);

 private:
  std::vector<int> input_sizes_;
  int output_size_;
  Eigen::MatrixXd table_;
};

class DeterministicMap {
 public:
  DeterministicMap(std::vector<int> input_sizes, int output_size, std::vector<int> outputs);

  const std::vector<int>& input_sizes() const { return input_sizes_; }
  int output_size() const { return output_size_; }
  const std::vector<int>& outputs() const { return outputs_; }
  int operator()(std::size_t input_flat) const { return outputs_[input_flat]; }
  int operator()(std::span<const int> input) const;
  std::size_t num_inputs() const { return outputs_.size(); }

  static DeterministicMap constant(std::vector<int> input_sizes, int output_size, int value);

 private:
  std::vector<int> input_sizes_;
  int output_size_;
  std::vector<int> outputs_;
};

std::size_t table_size(const std::vector<int>& sizes);

// Append a variable drawn from channel(. | inputs).
JointPMF extend(const JointPMF& joint, const CondPMF& channel, const VarSet& inputs);
// Append a variable equal to map(inputs).
JointPMF extend(const JointPMF& joint, const DeterministicMap& map, const VarSet& inputs);
// Independent product; variables of b follow those of a.
JointPMF product(const JointPMF& a, const JointPMF& b);
// p(x) p(y|x) p(z|y) over (X, Y, Z).
JointPMF compose(const Eigen::VectorXd& px, const CondPMF& y_given_x, const CondPMF& z_given_y);

double entropy(const JointPMF& pmf, const VarSet& subset);
double conditional_mutual_information(const JointPMF& pmf, const VarSet& a, const VarSet& b, const VarSet& c = {});
inline double mutual_information(const JointPMF& pmf, const VarSet& a, const VarSet& b) {
  return conditional_mutual_information(pmf, a, b, {});
}

// I(A;C|B); zero iff A - B - C.
double check_markov_chain(const JointPMF& pmf, const VarSet& a, const VarSet& b, const VarSet& c);

struct KaspiValues {
  double a2_b1;  // I(A2;B1|M1,M2,A1,B2)
  double b1_m1;  // I(B1;M1|A1,B2)
  double a2_m2;  // I(A2;M2|M1,A1,B2)
  double max() const;
};

// first_pair is p(a1,b1), second_pair is p(a2,b2); m1 acts on (A1,A2) and m2
// on (B1,B2,M1).
KaspiValues kaspi_lemma_check(const JointPMF& first_pair, const JointPMF& second_pair,
                              const DeterministicMap& m1, const DeterministicMap& m2);
// Same three quantities on an explicit joint ordered (A1,B1,A2,B2,M1,M2).
KaspiValues kaspi_values(const JointPMF& joint);

// Text format:
//   jointpmf <arity> <size_1> ... <size_k>
//   i_1 ... i_k p        (one row per entry, row-major, p at 17 significant digits)
void write_pmf(std::ostream& os, const JointPMF& pmf);
JointPMF read_pmf(std::istream& is);

//   condpmf <input_arity> <input sizes...> <output_size>
//   i_1 ... i_k p_0 ... p_{m-1}
void write_condpmf(std::ostream& os, const CondPMF& c);
CondPMF read_condpmf(std::istream& is);

//   map <input_arity> <input sizes...> <output_size>
//   i_1 ... i_k out
void write_map(std::ostream& os, const DeterministicMap& m);
DeterministicMap read_map(std::istream& is);

}  // namespace cascade
