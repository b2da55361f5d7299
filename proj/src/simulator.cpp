#include "cascade/simulator.hpp"

#include "cascade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cascade {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_seq(std::span<const std::uint8_t> s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint32_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::uint32_t>(std::min<std::size_t>(n - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n))));
}

// Inverse-CDF draw from a probability row.
template <typename Row>
int draw(std::mt19937_64& rng, const Row& p) {
  const double t = unit(rng);
  double acc = 0.0;
  int last = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    acc += p(i);
    last = static_cast<int>(i);
    if (t < acc) return last;
  }
  return last;
}

int ceil_bits(int n, double rate) {
  const double v = static_cast<double>(n) * rate;
  return std::max(0, static_cast<int>(std::ceil(v - 1e-9)));
}

void check_cap(int bits, const char* what) {
  if (bits > kMaxCodeBits) {
    throw ResourceError(std::string("codebook 2^{n ") + what + "} = 2^" + std::to_string(bits) + " exceeds the 2^20 cap");
  }
}

// Counts of joint symbols over n positions; index = sum of seq[k][i] * stride[k].
class Counter {
 public:
  explicit Counter(const JointPMF& pmf) : pmf_(pmf), counts_(pmf.num_entries(), 0) {
    std::size_t s = 1;
    strides_.resize(pmf.sizes().size());
    for (std::size_t k = pmf.sizes().size(); k-- > 0;) {
      strides_[k] = s;
      s *= static_cast<std::size_t>(pmf.sizes()[k]);
    }
  }

  bool typical(std::initializer_list<std::span<const std::uint8_t>> seqs, int n, double eps) {
    std::fill(counts_.begin(), counts_.end(), 0u);
    for (int i = 0; i < n; ++i) {
      std::size_t idx = 0, k = 0;
      for (const auto& s : seqs) idx += strides_[k++] * s[static_cast<std::size_t>(i)];
      ++counts_[idx];
    }
    return robustly_typical(pmf_, counts_, n, eps);
  }

 private:
  const JointPMF& pmf_;
  std::vector<std::size_t> strides_;
  std::vector<std::uint32_t> counts_;
};

}  // namespace

void TypicalityParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("typicality epsilon must lie in (0, 1)");
  if (n < 1) throw ArgumentError("blocklength n must be positive");
}

bool robustly_typical(const JointPMF& pmf, std::span<const std::uint32_t> counts, int n, double epsilon) {
  const double dn = static_cast<double>(n);
  for (std::size_t a = 0; a < counts.size(); ++a) {
    const double p = pmf.probs()(static_cast<Eigen::Index>(a));
    if (std::abs(static_cast<double>(counts[a]) - dn * p) > epsilon * dn * p + 1e-9) return false;
  }
  return true;
}

CascadeRates cascade_rates(const SourceSpec& src, const AuxiliarySystem& aux, int n, double delta) {
  if (!aux.p_u || !aux.p_xhat1) throw InvalidAuxiliaryError("simulation needs p_u and p_xhat1");
  if (!(delta >= 0.0)) throw ArgumentError("rate slack delta must be nonnegative");
  const JointPMF j = extend(extend(src.pmf, *aux.p_u, {0, 1}), *aux.p_xhat1, {0, 1, 3});
  CascadeRates r;
  r.r_l = mutual_information(j, {3}, {0, 1}) + delta;
  r.r_10 = std::min(conditional_mutual_information(j, {3}, {0}, {1}) + 2 * delta, r.r_l);
  r.r_11 = conditional_mutual_information(j, {4}, {0}, {3, 1}) + delta;
  r.r_2 = std::min(conditional_mutual_information(j, {3}, {0, 1}, {2}) + 2 * delta, r.r_l);
  r.bits_l = ceil_bits(n, r.r_l);
  r.bits_10 = std::min(ceil_bits(n, r.r_10), r.bits_l);
  r.bits_11 = ceil_bits(n, r.r_11);
  r.bits_2 = std::min(ceil_bits(n, r.r_2), r.bits_l);
  return r;
}

Sequence CascadeCode::xhat1_codeword(std::size_t l, std::span<const std::uint8_t> y, std::size_t m) const {
  std::mt19937_64 rng(mix(seed ^ mix(0x5848ULL + l) ^ mix(hash_seq(y)) ^ mix(mix(m) + 7)));
  const auto u = codeword(l);
  Sequence out(static_cast<std::size_t>(tp.n));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(draw(rng, xhat1_given_uy.row(u[i] * ny + y[i])));
  return out;
}

CascadeCode build_cascade_code(const SourceSpec& src, const AuxiliarySystem& aux, const TypicalityParams& tp, double delta,
                               std::uint64_t seed) {
  src.validate();
  tp.validate();
  if (!aux.g2) throw InvalidAuxiliaryError("simulation needs g2");
  eval_cascade_point(src, aux);  // shape and budget checks
  CascadeCode code;
  code.tp = tp;
  code.seed = seed;
  code.rates = cascade_rates(src, aux, tp.n, delta);
  check_cap(code.rates.bits_l, "R_l");
  check_cap(code.rates.bits_11, "R_11");
  code.nx = src.x_size();
  code.ny = src.y_size();
  code.nz = src.z_size();
  code.nu = aux.p_u->output_size();
  code.nk1 = aux.p_xhat1->output_size();
  if (std::max({code.nx, code.ny, code.nz, code.nu, code.nk1}) > 255) throw ResourceError("simulation alphabets are capped at 255");

  const JointPMF j = extend(extend(src.pmf, *aux.p_u, {0, 1}), *aux.p_xhat1, {0, 1, 3});  // X Y Z U Xhat1
  code.p_xy = j.marginal({0, 1});
  code.p_uxy = j.marginal({3, 0, 1});
  code.p_uxyz = j.marginal({3, 0, 1, 2});
  code.p_uy = j.marginal({3, 1});
  code.p_uz = j.marginal({3, 2});
  code.p_uhxy = j.marginal({3, 4, 0, 1});
  const JointPMF uyk = j.marginal({3, 1, 4});
  code.xhat1_given_uy = Eigen::MatrixXd::Zero(code.nu * code.ny, code.nk1);
  for (int w = 0; w < code.nu * code.ny; ++w) {
    for (int k = 0; k < code.nk1; ++k) code.xhat1_given_uy(w, k) = uyk.probs()(w * code.nk1 + k);
    const double s = code.xhat1_given_uy.row(w).sum();
    if (s > 0.0) code.xhat1_given_uy.row(w) /= s;
    else code.xhat1_given_uy(w, 0) = 1.0;
  }

  const JointPMF pu = j.marginal({3});
  std::mt19937_64 rng(mix(seed ^ 0x55ULL));
  const std::size_t count = code.num_codewords();
  code.codewords.resize(count * static_cast<std::size_t>(tp.n));
  for (auto& s : code.codewords) s = static_cast<std::uint8_t>(draw(rng, pu.probs()));
  std::mt19937_64 rng1(mix(seed ^ 0xB1ULL)), rng2(mix(seed ^ 0xB2ULL));
  const std::size_t nb1 = std::size_t{1} << code.rates.bits_10, nb2 = std::size_t{1} << code.rates.bits_2;
  code.bin1.resize(count);
  code.bin2.resize(count);
  code.bin1_members.assign(nb1, {});
  code.bin2_members.assign(nb2, {});
  // A bin index as long as the codeword index sends the codeword index itself.
  const bool id1 = code.rates.bits_10 >= code.rates.bits_l, id2 = code.rates.bits_2 >= code.rates.bits_l;
  for (std::size_t l = 0; l < count; ++l) {
    code.bin1[l] = id1 ? static_cast<std::uint32_t>(l) : uniform_index(rng1, nb1);
    code.bin2[l] = id2 ? static_cast<std::uint32_t>(l) : uniform_index(rng2, nb2);
    code.bin1_members[code.bin1[l]].push_back(static_cast<std::uint32_t>(l));
    code.bin2_members[code.bin2[l]].push_back(static_cast<std::uint32_t>(l));
  }
  return code;
}

EncodeResult encode_node0(const CascadeCode& code, std::span<const std::uint8_t> x, std::span<const std::uint8_t> y,
                          std::mt19937_64& rng) {
  const int n = code.tp.n;
  const double eps = code.tp.epsilon;
  EncodeResult res;
  Counter uxy(*code.p_uxy);
  std::vector<std::uint32_t> hits;
  for (std::size_t l = 0; l < code.num_codewords(); ++l) {
    if (uxy.typical({code.codeword(l), x, y}, n, eps)) hits.push_back(static_cast<std::uint32_t>(l));
  }
  if (hits.empty()) {
    res.e1 = true;
    res.l = uniform_index(rng, code.num_codewords());
  } else {
    res.l = hits[uniform_index(rng, hits.size())];
  }
  Counter uhxy(*code.p_uhxy);
  hits.clear();
  for (std::size_t m = 0; m < code.num_xhat1(); ++m) {
    const Sequence xh = code.xhat1_codeword(res.l, y, m);
    if (uhxy.typical({code.codeword(res.l), xh, x, y}, n, eps)) hits.push_back(static_cast<std::uint32_t>(m));
  }
  if (hits.empty()) {
    res.e3 = true;
    res.m11 = uniform_index(rng, code.num_xhat1());
  } else {
    res.m11 = hits[uniform_index(rng, hits.size())];
  }
  res.m10 = code.bin1[res.l];
  return res;
}

RelayResult relay_node1(const CascadeCode& code, std::uint32_t m10, std::uint32_t m11, std::span<const std::uint8_t> y) {
  if (m10 >= code.bin1_members.size() || m11 >= code.num_xhat1()) throw ArgumentError("relay_node1: index out of range");
  RelayResult res;
  Counter uy(*code.p_uy);
  for (auto l : code.bin1_members[m10]) {
    if (uy.typical({code.codeword(l), y}, code.tp.n, code.tp.epsilon)) res.typical.push_back(l);
  }
  res.flag = res.typical.size() != 1;
  res.l_hat = res.flag ? 0 : res.typical.front();
  res.m2 = code.bin2[res.l_hat];
  res.xhat1 = code.xhat1_codeword(res.l_hat, y, m11);
  return res;
}

DecodeResult decode_node2(const CascadeCode& code, std::uint32_t m2, std::span<const std::uint8_t> z, const DeterministicMap& g2) {
  if (m2 >= code.bin2_members.size()) throw ArgumentError("decode_node2: bin index out of range");
  DecodeResult res;
  Counter uz(*code.p_uz);
  for (auto l : code.bin2_members[m2]) {
    if (uz.typical({code.codeword(l), z}, code.tp.n, code.tp.epsilon)) res.typical.push_back(l);
  }
  res.flag = res.typical.size() != 1;
  res.l_tilde = res.flag ? 0 : res.typical.front();
  const auto u = code.codeword(res.l_tilde);
  res.xhat2.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const int in[2] = {u[i], z[i]};
    res.xhat2[i] = static_cast<std::uint8_t>(g2(std::span<const int>(in, 2)));
  }
  return res;
}

std::array<double, 2> wilson_interval(long k, long n) {
  if (n <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054, p = static_cast<double>(k) / static_cast<double>(n), dn = static_cast<double>(n);
  const double centre = (p + z * z / (2 * dn)) / (1 + z * z / dn);
  const double half = z * std::sqrt(p * (1 - p) / dn + z * z / (4 * dn * dn)) / (1 + z * z / dn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

struct Moments {
  long k = 0;
  double sum = 0, sumsq = 0;
  void add(double v) {
    ++k;
    sum += v;
    sumsq += v * v;
  }
  double mean() const { return k ? sum / static_cast<double>(k) : 0.0; }
  double half_width() const {
    if (k < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sumsq - static_cast<double>(k) * m * m) / static_cast<double>(k - 1));
    return 1.959963984540054 * std::sqrt(var / static_cast<double>(k));
  }
};

}  // namespace

SimResult run_simulation(const SourceSpec& src, const AuxiliarySystem& aux, const TypicalityParams& tp, double delta, int trials,
                         std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("trials must be at least 1");
  const CascadeCode code = build_cascade_code(src, aux, tp, delta, seed);
  const int n = tp.n;
  SimResult res;
  res.trials = trials;
  res.n = n;
  res.epsilon = tp.epsilon;
  res.delta = delta;
  res.seed = seed;
  res.rates = code.rates;

  Counter xy(*code.p_xy), uxyz(*code.p_uxyz), uy(*code.p_uy), uz(*code.p_uz);
  Moments d1_all, d2_all, d1_ok, d2_ok;
  Sequence x(static_cast<std::size_t>(n)), y(x), z(x);
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(mix(seed ^ mix(0x7A11ULL + static_cast<std::uint64_t>(t))));
    int idx[3];
    for (int i = 0; i < n; ++i) {
      src.pmf.unflatten(static_cast<std::size_t>(draw(rng, src.pmf.probs())), idx);
      x[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(idx[0]);
      y[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(idx[1]);
      z[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(idx[2]);
    }

    const EncodeResult enc = encode_node0(code, x, y, rng);
    const RelayResult rel = relay_node1(code, enc.m10, enc.m11, y);
    const DecodeResult dec = decode_node2(code, rel.m2, z, *aux.g2);

    const bool other_in_b1 = std::any_of(rel.typical.begin(), rel.typical.end(), [&](auto l) { return l != enc.l; });
    const bool other_in_b2 = std::any_of(dec.typical.begin(), dec.typical.end(), [&](auto l) { return l != enc.l; });
    const bool ev[6] = {
        !xy.typical({x, y}, n, tp.epsilon),
        enc.e1,
        !uxyz.typical({code.codeword(enc.l), x, y, z}, n, tp.epsilon),
        enc.e3,
        other_in_b1,
        other_in_b2,
    };
    bool clean = true;
    for (std::size_t i = 0; i < 6 && clean; ++i) {
      ++res.exposure[i];
      if (ev[i]) {
        ++res.events[i];
        clean = false;
      }
    }
    if (!clean) ++res.flagged;

    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s1 += src.d1(x[i], rel.xhat1[i]);
      s2 += src.d2(x[i], dec.xhat2[i]);
    }
    s1 /= n;
    s2 /= n;
    d1_all.add(s1);
    d2_all.add(s2);
    if (clean) {
      d1_ok.add(s1);
      d2_ok.add(s2);
    }
  }
  res.d1_mean = d1_all.mean();
  res.d2_mean = d2_all.mean();
  res.d1_half_width = d1_all.half_width();
  res.d2_half_width = d2_all.half_width();
  res.unflagged = d1_ok.k;
  res.d1_unflagged = d1_ok.mean();
  res.d2_unflagged = d2_ok.mean();
  res.d1_unflagged_half_width = d1_ok.half_width();
  res.d2_unflagged_half_width = d2_ok.half_width();
  return res;
}

}  // namespace cascade
