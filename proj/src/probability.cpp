#include "cascade/probability.hpp"

#include "cascade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cascade {

namespace {

void check_sizes(const std::vector<int>& sizes, const char* what) {
  for (int s : sizes) {
    if (s < 1) throw ArgumentError(std::string(what) + ": alphabet sizes must be positive");
  }
}

std::vector<std::size_t> row_major_strides(const std::vector<int>& sizes) {
  std::vector<std::size_t> strides(sizes.size());
  std::size_t stride = 1;
  for (std::size_t i = sizes.size(); i-- > 0;) {
    strides[i] = stride;
    stride *= static_cast<std::size_t>(sizes[i]);
  }
  return strides;
}

void check_vars(const JointPMF& pmf, const VarSet& vars, const char* what) {
  for (int v : vars) {
    if (v < 0 || v >= pmf.arity()) {
      throw ArgumentError(std::string(what) + ": variable index " + std::to_string(v) + " out of range");
    }
  }
}

VarSet sorted_unique(VarSet v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool disjoint(const VarSet& a, const VarSet& b) {
  for (int x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) return false;
  }
  return true;
}

VarSet join(const VarSet& a, const VarSet& b) {
  VarSet out = a;
  out.insert(out.end(), b.begin(), b.end());
  return sorted_unique(out);
}

// Walks all entries of a table of the given sizes while tracking the flat
// index of a projected sub-tuple.
template <typename F>
void for_each_projected(const std::vector<int>& sizes, const std::vector<std::size_t>& proj_strides, F&& f) {
  const std::size_t k = sizes.size();
  std::vector<int> idx(k, 0);
  std::size_t total = table_size(sizes);
  std::size_t proj = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    f(flat, proj, idx);
    for (std::size_t d = k; d-- > 0;) {
      if (++idx[d] < sizes[d]) {
        proj += proj_strides[d];
        break;
      }
      proj -= proj_strides[d] * static_cast<std::size_t>(sizes[d] - 1);
      idx[d] = 0;
    }
  }
}

double entropy_of(const Eigen::ArrayXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log2(p(i));
  }
  return h;
}

}  // namespace

std::size_t table_size(const std::vector<int>& sizes) {
  std::size_t n = 1;
  for (int s : sizes) {
    n *= static_cast<std::size_t>(s);
    if (n > kMaxTableEntries) {
      throw ResourceError("table of " + std::to_string(n) + "+ entries exceeds the cap of 1e7");
    }
  }
  return n;
}

JointPMF::JointPMF(std::vector<int> sizes, Eigen::ArrayXd probs)
    : sizes_(std::move(sizes)), probs_(std::move(probs)) {
  if (sizes_.empty()) throw ArgumentError("JointPMF: arity must be at least 1");
  check_sizes(sizes_, "JointPMF");
  const std::size_t n = table_size(sizes_);
  if (static_cast<std::size_t>(probs_.size()) != n) {
    throw ArgumentError("JointPMF: expected " + std::to_string(n) + " entries, got " + std::to_string(probs_.size()));
  }
  if (!probs_.allFinite() || (probs_ < 0.0).any()) throw ArgumentError("JointPMF: entries must be finite and nonnegative");
  if (std::abs(probs_.sum() - 1.0) > kNormalizationTol) {
    throw ArgumentError("JointPMF: entries sum to " + std::to_string(probs_.sum()) + ", not 1");
  }
  strides_ = row_major_strides(sizes_);
}

JointPMF JointPMF::uniform(std::vector<int> sizes) {
  const std::size_t n = table_size(sizes);
  return JointPMF(std::move(sizes), Eigen::ArrayXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

std::size_t JointPMF::flat_index(std::span<const int> index) const {
  if (index.size() != sizes_.size()) throw ArgumentError("JointPMF: index arity mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= sizes_[i]) throw ArgumentError("JointPMF: symbol out of range");
    flat += strides_[i] * static_cast<std::size_t>(index[i]);
  }
  return flat;
}

void JointPMF::unflatten(std::size_t flat, std::span<int> index) const {
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    index[i] = static_cast<int>(flat / strides_[i]);
    flat %= strides_[i];
  }
}

JointPMF JointPMF::marginal(const VarSet& vars) const {
  check_vars(*this, vars, "marginal");
  if (sorted_unique(vars).size() != vars.size()) throw ArgumentError("marginal: repeated variable");
  std::vector<int> out_sizes;
  for (int v : vars) out_sizes.push_back(sizes_[static_cast<std::size_t>(v)]);
  const auto out_strides = row_major_strides(out_sizes);
  std::vector<std::size_t> proj(sizes_.size(), 0);
  for (std::size_t i = 0; i < vars.size(); ++i) proj[static_cast<std::size_t>(vars[i])] = out_strides[i];

  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(table_size(out_sizes)));
  for_each_projected(sizes_, proj, [&](std::size_t flat, std::size_t p, const std::vector<int>&) {
    out(static_cast<Eigen::Index>(p)) += probs_(static_cast<Eigen::Index>(flat));
  });
  // Sums of valid entries stay within tolerance, so construction cannot fail.
  return JointPMF(std::move(out_sizes), std::move(out));
}

CondPMF::CondPMF(std::vector<int> input_sizes, int output_size, Eigen::MatrixXd table)
    : input_sizes_(std::move(input_sizes)), output_size_(output_size), table_(std::move(table)) {
  check_sizes(input_sizes_, "CondPMF");
  if (output_size_ < 1) throw ArgumentError("CondPMF: output size must be positive");
  const std::size_t rows = table_size(input_sizes_);
  if (static_cast<std::size_t>(table_.rows()) != rows || table_.cols() != output_size_) {
    throw ArgumentError("CondPMF: table must be " + std::to_string(rows) + "x" + std::to_string(output_size_));
  }
  if (!table_.allFinite() || (table_.array() < 0.0).any()) throw ArgumentError("CondPMF: entries must be finite and nonnegative");
  for (Eigen::Index r = 0; r < table_.rows(); ++r) {
    if (std::abs(table_.row(r).sum() - 1.0) > kNormalizationTol) {
      throw ArgumentError("CondPMF: row " + std::to_string(r) + " does not sum to 1");
    }
  }
}

CondPMF CondPMF::from_function(std::vector<int> input_sizes, int output_size, const std::vector<int>& outputs) {
  const std::size_t rows = table_size(input_sizes);
  if (outputs.size() != rows) throw ArgumentError("CondPMF::from_function: wrong number of outputs");
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), output_size);
  for (std::size_t r = 0; r < rows; ++r) {
    if (outputs[r] < 0 || outputs[r] >= output_size) throw ArgumentError("CondPMF::from_function: output out of range");
    t(static_cast<Eigen::Index>(r), outputs[r]) = 1.0;
  }
  return CondPMF(std::move(input_sizes), output_size, std::move(t));
}

CondPMF CondPMF::constant(std::vector<int> input_sizes, const Eigen::VectorXd& dist) {
  const std::size_t rows = table_size(input_sizes);
  Eigen::MatrixXd t = dist.transpose().replicate(static_cast<Eigen::Index>(rows), 1);
  return CondPMF(std::move(input_sizes), static_cast<int>(dist.size()), std::move(t));
}

DeterministicMap::DeterministicMap(std::vector<int> input_sizes, int output_size, std::vector<int> outputs)
    : input_sizes_(std::move(input_sizes)), output_size_(output_size), outputs_(std::move(outputs)) {
  check_sizes(input_sizes_, "DeterministicMap");
  if (output_size_ < 1) throw ArgumentError("DeterministicMap: output size must be positive");
  if (outputs_.size() != table_size(input_sizes_)) throw ArgumentError("DeterministicMap: not a total function on its input grid");
  for (int o : outputs_) {
    if (o < 0 || o >= output_size_) throw ArgumentError("DeterministicMap: output out of range");
  }
}

int DeterministicMap::operator()(std::span<const int> input) const {
  if (input.size() != input_sizes_.size()) throw ArgumentError("DeterministicMap: input arity mismatch");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < input.size(); ++i) flat = flat * static_cast<std::size_t>(input_sizes_[i]) + static_cast<std::size_t>(input[i]);
  return outputs_[flat];
}

DeterministicMap DeterministicMap::constant(std::vector<int> input_sizes, int output_size, int value) {
  const std::size_t n = table_size(input_sizes);
  return DeterministicMap(std::move(input_sizes), output_size, std::vector<int>(n, value));
}

namespace {

// Flat index of the inputs tuple for each joint entry, in joint row-major order.
std::vector<std::size_t> input_rows(const JointPMF& joint, const std::vector<int>& channel_inputs, const VarSet& inputs,
                                    const char* what) {
  check_vars(joint, inputs, what);
  if (sorted_unique(inputs).size() != inputs.size()) throw ArgumentError(std::string(what) + ": repeated input variable");
  if (channel_inputs.size() != inputs.size()) throw ArgumentError(std::string(what) + ": input arity mismatch");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (channel_inputs[i] != joint.size(inputs[i])) {
      throw ArgumentError(std::string(what) + ": input " + std::to_string(i) + " has size " + std::to_string(channel_inputs[i]) +
                          " but variable " + std::to_string(inputs[i]) + " has size " + std::to_string(joint.size(inputs[i])));
    }
  }
  const auto in_strides = row_major_strides(channel_inputs);
  std::vector<std::size_t> proj(joint.sizes().size(), 0);
  for (std::size_t i = 0; i < inputs.size(); ++i) proj[static_cast<std::size_t>(inputs[i])] = in_strides[i];
  std::vector<std::size_t> rows(joint.num_entries());
  for_each_projected(joint.sizes(), proj, [&](std::size_t flat, std::size_t p, const std::vector<int>&) { rows[flat] = p; });
  return rows;
}

}  // namespace

JointPMF extend(const JointPMF& joint, const CondPMF& channel, const VarSet& inputs) {
  const auto rows = input_rows(joint, channel.input_sizes(), inputs, "extend");
  std::vector<int> sizes = joint.sizes();
  sizes.push_back(channel.output_size());
  const std::size_t m = static_cast<std::size_t>(channel.output_size());
  Eigen::ArrayXd out(static_cast<Eigen::Index>(table_size(sizes)));
  for (std::size_t flat = 0; flat < joint.num_entries(); ++flat) {
    const double p = joint.probs()(static_cast<Eigen::Index>(flat));
    for (std::size_t o = 0; o < m; ++o) out(static_cast<Eigen::Index>(flat * m + o)) = p * channel(rows[flat], static_cast<int>(o));
  }
  return JointPMF(std::move(sizes), std::move(out));
}

JointPMF extend(const JointPMF& joint, const DeterministicMap& map, const VarSet& inputs) {
  const auto rows = input_rows(joint, map.input_sizes(), inputs, "extend");
  std::vector<int> sizes = joint.sizes();
  sizes.push_back(map.output_size());
  const std::size_t m = static_cast<std::size_t>(map.output_size());
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(table_size(sizes)));
  for (std::size_t flat = 0; flat < joint.num_entries(); ++flat) {
    out(static_cast<Eigen::Index>(flat * m + static_cast<std::size_t>(map(rows[flat])))) = joint.probs()(static_cast<Eigen::Index>(flat));
  }
  return JointPMF(std::move(sizes), std::move(out));
}

JointPMF product(const JointPMF& a, const JointPMF& b) {
  std::vector<int> sizes = a.sizes();
  sizes.insert(sizes.end(), b.sizes().begin(), b.sizes().end());
  const Eigen::Index nb = static_cast<Eigen::Index>(b.num_entries());
  Eigen::ArrayXd out(static_cast<Eigen::Index>(table_size(sizes)));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(a.num_entries()); ++i) {
    out.segment(i * nb, nb) = a.probs()(i) * b.probs();
  }
  return JointPMF(std::move(sizes), std::move(out));
}

JointPMF compose(const Eigen::VectorXd& px, const CondPMF& y_given_x, const CondPMF& z_given_y) {
  JointPMF x({static_cast<int>(px.size())}, px.array());
  return extend(extend(x, y_given_x, {0}), z_given_y, {1});
}

double entropy(const JointPMF& pmf, const VarSet& subset) {
  if (subset.empty()) throw ArgumentError("entropy: subset must be nonempty");
  check_vars(pmf, subset, "entropy");
  return entropy_of(pmf.marginal(sorted_unique(subset)).probs());
}

namespace {

double entropy_or_zero(const JointPMF& pmf, const VarSet& s) { return s.empty() ? 0.0 : entropy_of(pmf.marginal(s).probs()); }

}  // namespace

double conditional_mutual_information(const JointPMF& pmf, const VarSet& a_in, const VarSet& b_in, const VarSet& c_in) {
  if (a_in.empty() || b_in.empty()) throw ArgumentError("conditional_mutual_information: A and B must be nonempty");
  check_vars(pmf, a_in, "conditional_mutual_information");
  check_vars(pmf, b_in, "conditional_mutual_information");
  check_vars(pmf, c_in, "conditional_mutual_information");
  VarSet a = sorted_unique(a_in), b = sorted_unique(b_in);
  const VarSet c = sorted_unique(c_in);
  if (!disjoint(a, b) || !disjoint(a, c) || !disjoint(b, c)) {
    throw ArgumentError("conditional_mutual_information: variable sets must be disjoint");
  }
  // Canonical order makes I(A;B|C) and I(B;A|C) bitwise identical.
  if (b < a) std::swap(a, b);
  const double h_ac = entropy_or_zero(pmf, join(a, c));
  const double h_bc = entropy_or_zero(pmf, join(b, c));
  const double h_abc = entropy_or_zero(pmf, join(join(a, b), c));
  const double h_c = entropy_or_zero(pmf, c);
  return std::max(0.0, (h_ac - h_abc) + (h_bc - h_c));
}

double check_markov_chain(const JointPMF& pmf, const VarSet& a, const VarSet& b, const VarSet& c) {
  return conditional_mutual_information(pmf, a, c, b);
}

double KaspiValues::max() const { return std::max({a2_b1, b1_m1, a2_m2}); }

KaspiValues kaspi_values(const JointPMF& joint) {
  if (joint.arity() != 6) throw ArgumentError("kaspi_values: expected a joint over (A1,B1,A2,B2,M1,M2)");
  enum { A1, B1, A2, B2, M1, M2 };
  return {conditional_mutual_information(joint, {A2}, {B1}, {M1, M2, A1, B2}),
          conditional_mutual_information(joint, {B1}, {M1}, {A1, B2}),
          conditional_mutual_information(joint, {A2}, {M2}, {M1, A1, B2})};
}

KaspiValues kaspi_lemma_check(const JointPMF& first_pair, const JointPMF& second_pair, const DeterministicMap& m1,
                              const DeterministicMap& m2) {
  if (first_pair.arity() != 2 || second_pair.arity() != 2) throw ArgumentError("kaspi_lemma_check: pair distributions must have arity 2");
  const JointPMF base = product(first_pair, second_pair);  // (A1,B1,A2,B2)
  const JointPMF with_m1 = extend(base, m1, {0, 2});
  const JointPMF joint = extend(with_m1, m2, {1, 3, 4});
  return kaspi_values(joint);
}

}  // namespace cascade
