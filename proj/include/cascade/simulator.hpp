#pragma once

#include "cascade/discrete.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cascade {

using Sequence = std::vector<std::uint8_t>;

struct TypicalityParams {
  double epsilon = 0.5;
  int n = 16;
  void validate() const;
};

// Robust typicality: |count(a)/n - p(a)| <= epsilon p(a) for every tuple a.
// counts are indexed like pmf.probs().
bool robustly_typical(const JointPMF& pmf, std::span<const std::uint32_t> counts, int n, double epsilon);

struct CascadeRates {
  double r_l = 0, r_10 = 0, r_11 = 0, r_2 = 0;  // bits per symbol
  int bits_l = 0, bits_10 = 0, bits_11 = 0, bits_2 = 0;  // ceil(n R)
};

inline constexpr int kMaxCodeBits = 20;

class CascadeCode {
 public:
  CascadeRates rates;
  TypicalityParams tp;
  std::uint64_t seed = 0;
  int nx = 0, ny = 0, nz = 0, nu = 0, nk1 = 0;

  std::vector<std::uint8_t> codewords;  // num_codewords() x n, row-major
  std::vector<std::uint32_t> bin1, bin2;
  std::vector<std::vector<std::uint32_t>> bin1_members, bin2_members;

  // Reference distributions for the typicality tests; variable order in brackets.
  std::optional<JointPMF> p_xy;     // (X,Y)
  std::optional<JointPMF> p_uxy;    // (U,X,Y)
  std::optional<JointPMF> p_uxyz;   // (U,X,Y,Z)
  std::optional<JointPMF> p_uy;     // (U,Y)
  std::optional<JointPMF> p_uz;     // (U,Z)
  std::optional<JointPMF> p_uhxy;   // (U,Xhat1,X,Y)
  Eigen::MatrixXd xhat1_given_uy;   // rows u * |Y| + y

  std::size_t num_codewords() const { return std::size_t{1} << rates.bits_l; }
  std::size_t num_xhat1() const { return std::size_t{1} << rates.bits_11; }
  std::span<const std::uint8_t> codeword(std::size_t l) const {
    return {codewords.data() + l * static_cast<std::size_t>(tp.n), static_cast<std::size_t>(tp.n)};
  }
  // X-hat1 codeword m of the codebook attached to (l, y); generated on demand
  // from a sub-seed hashed from (seed, l, y, m).
  Sequence xhat1_codeword(std::size_t l, std::span<const std::uint8_t> y, std::size_t m) const;
};

CascadeRates cascade_rates(const SourceSpec& src, const AuxiliarySystem& aux, int n, double delta);
CascadeCode build_cascade_code(const SourceSpec& src, const AuxiliarySystem& aux, const TypicalityParams& tp, double delta,
                               std::uint64_t seed);

struct EncodeResult {
  std::uint32_t l = 0, m10 = 0, m11 = 0;
  bool e1 = false;  // no typical U codeword: random fallback
  bool e3 = false;  // no typical X-hat1 codeword: random fallback
};
EncodeResult encode_node0(const CascadeCode& code, std::span<const std::uint8_t> x, std::span<const std::uint8_t> y,
                          std::mt19937_64& rng);

struct RelayResult {
  std::uint32_t l_hat = 0, m2 = 0;
  Sequence xhat1;
  bool flag = false;                    // not exactly one typical codeword
  std::vector<std::uint32_t> typical;   // typical codewords found in the bin
};
RelayResult relay_node1(const CascadeCode& code, std::uint32_t m10, std::uint32_t m11, std::span<const std::uint8_t> y);

struct DecodeResult {
  std::uint32_t l_tilde = 0;
  Sequence xhat2;
  bool flag = false;
  std::vector<std::uint32_t> typical;
};
DecodeResult decode_node2(const CascadeCode& code, std::uint32_t m2, std::span<const std::uint8_t> z, const DeterministicMap& g2);

struct SimResult {
  int trials = 0;
  int n = 0;
  double epsilon = 0.0, delta = 0.0;
  std::uint64_t seed = 0;
  CascadeRates rates;
  // Events E0..E5 attributed to the first one that occurs in a trial;
  // exposure[i] counts trials that reached the test for E_i.
  std::array<long, 6> events{};
  std::array<long, 6> exposure{};
  long flagged = 0;
  double d1_mean = 0, d2_mean = 0, d1_half_width = 0, d2_half_width = 0;
  long unflagged = 0;
  double d1_unflagged = 0, d2_unflagged = 0, d1_unflagged_half_width = 0, d2_unflagged_half_width = 0;

  double event_rate(int i) const {
    return exposure[static_cast<std::size_t>(i)] > 0
               ? static_cast<double>(events[static_cast<std::size_t>(i)]) / static_cast<double>(exposure[static_cast<std::size_t>(i)])
               : 0.0;
  }
};

SimResult run_simulation(const SourceSpec& src, const AuxiliarySystem& aux, const TypicalityParams& tp, double delta, int trials,
                         std::uint64_t seed);

// Wilson score interval at 95% for k successes out of n.
std::array<double, 2> wilson_interval(long k, long n);

}  // namespace cascade
