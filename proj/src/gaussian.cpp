#include "cascade/gaussian.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace cascade {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double half_log2(double ratio) { return 0.5 * std::log2(ratio); }

double require(const std::optional<double>& v, const char* name) {
  if (!v) throw ArgumentError(std::string("query is missing ") + name);
  return *v;
}

void check_distortion(double d, const char* name) {
  if (!(d > 0.0) || !std::isfinite(d)) throw ArgumentError(std::string(name) + " must be a positive finite distortion");
}

void check_rate(double r, const char* name) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw ArgumentError(std::string(name) + " must be a nonnegative finite rate");
}

struct Program {
  double a, b, s_power, k;  // varA, varB, 2^{2R2}-1, varA+varB-D2

  double explained(double alpha, double beta) const {
    const double c = alpha * a + beta * b;
    return c * c / (alpha * alpha * a + beta * beta * b + 1.0);
  }

  // Best beta for a fixed alpha under the power budget, or NaN if alpha alone
  // exceeds it.
  double best_beta(double alpha) const {
    const double rem = s_power - alpha * alpha * a;
    if (rem < -1e-12 * std::max(1.0, s_power)) return std::numeric_limits<double>::quiet_NaN();
    if (b == 0.0) return 0.0;
    const double bmax = std::sqrt(std::max(0.0, rem) / b);
    double best = bmax;
    double val = explained(alpha, bmax);
    if (explained(alpha, -bmax) > val) {
      best = -bmax;
      val = explained(alpha, -bmax);
    }
    if (alpha > 0.0) {
      const double stationary = (alpha * alpha * a + 1.0) / (alpha * a);
      if (stationary <= bmax && explained(alpha, stationary) > val) best = stationary;
    }
    return best;
  }

  bool feasible(double alpha) const {
    const double beta = best_beta(alpha);
    if (std::isnan(beta)) return false;
    return explained(alpha, beta) >= k - 1e-12 * (a + b);
  }
};

}  // namespace

AuxStatistics aux_statistics(const GaussianCascadeSource& src, const GaussianAux& aux) {
  src.validate();
  if (!(aux.var_zstar > 0.0)) throw ArgumentError("GaussianAux: var_zstar must be positive");
  const double a = src.var_a, b = src.var_b;
  const double var_u = aux.alpha * aux.alpha * a + aux.beta * aux.beta * b + aux.var_zstar;
  const double cov = aux.alpha * a + aux.beta * b;
  AuxStatistics st{};
  st.var_u = var_u;
  st.var_a_given_ub = a * aux.var_zstar / (aux.alpha * aux.alpha * a + aux.var_zstar);
  st.var_ab_given_u = std::max(0.0, (a + b) - cov * cov / var_u);
  st.r2_required = half_log2(var_u / aux.var_zstar);
  return st;
}

double forward_r1(const GaussianCascadeSource& src, double d1, double var_a_given_ub) {
  const double a = src.var_a;
  if (a == 0.0) return 0.0;
  double r1 = std::max(0.0, half_log2(a / d1));
  if (var_a_given_ub > 0.0) r1 = std::max(r1, half_log2(a / var_a_given_ub));
  return r1;
}

ForwardSolution solve_forward_program(const GaussianCascadeSource& src, double d1, double d2_limit, double r2,
                                      const ForwardSolverOptions& opt) {
  src.validate();
  check_distortion(d1, "D1");
  check_distortion(d2_limit, "D2");
  check_rate(r2, "R2");
  const double a = src.var_a, b = src.var_b, total = a + b;
  const double threshold = total > 0.0 ? std::max(0.0, half_log2(total / d2_limit)) : 0.0;
  if (r2 < threshold - 1e-12) {
    throw InfeasibleError("R2 is below the feasibility threshold 1/2 log((varA+varB)/D2) = " + std::to_string(threshold), threshold);
  }

  ForwardSolution sol;
  const double k = total - d2_limit;
  if (k <= 0.0) {
    sol.aux = GaussianAux{0.0, 0.0, 1.0};  // U constant
  } else {
    const Program prog{a, b, std::exp2(2.0 * std::min(r2, 500.0)) - 1.0, k};
    if (a == 0.0) {
      sol.aux = GaussianAux{0.0, prog.best_beta(0.0), 1.0};
    } else if (prog.feasible(0.0)) {
      sol.aux = GaussianAux{0.0, prog.best_beta(0.0), 1.0};
    } else {
      // The D2-tight auxiliary (alpha = beta) is feasible whenever R2 clears the
      // threshold, so the minimal alpha lies in (0, aligned].
      const double aligned = std::sqrt(prog.s_power / total);
      const int g = std::max(2, opt.grid);
      double lo = 0.0, hi = aligned;
      for (int i = 0; i < g; ++i) {
        const double alpha = aligned * std::pow(10.0, -6.0 + 6.0 * i / (g - 1));
        if (prog.feasible(alpha)) {
          hi = alpha;
          break;
        }
        lo = alpha;
      }
      for (int it = 0; it < opt.bisection_steps && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (prog.feasible(mid) ? hi : lo) = mid;
      }
      sol.aux = GaussianAux{hi, prog.best_beta(hi), 1.0};
    }
  }
  sol.stats = aux_statistics(src, sol.aux);
  sol.r1 = forward_r1(src, d1, sol.stats.var_a_given_ub);
  return sol;
}

ForwardSolution cascade_min_r1(const GaussianCascadeSource& src, const GaussianQuery& q, const ForwardSolverOptions& opt) {
  return solve_forward_program(src, require(q.d1, "D1"), require(q.d2, "D2"), require(q.r2, "R2"), opt);
}

ForwardSolution triangular_min_r1(const GaussianCascadeSource& src, const GaussianQuery& q, const ForwardSolverOptions& opt) {
  src.validate();
  const double d1 = require(q.d1, "D1"), d2 = require(q.d2, "D2");
  const double r2 = require(q.r2, "R2"), r3 = require(q.r3, "R3");
  check_distortion(d2, "D2");
  check_rate(r2, "R2");
  check_rate(r3, "R3");
  const double total = src.var_a + src.var_b;
  const double threshold = total > 0.0 ? std::max(0.0, half_log2(total / d2)) : 0.0;
  if (r2 + r3 < threshold - 1e-12) {
    throw InfeasibleError("R2+R3 is below the feasibility threshold 1/2 log((varA+varB)/D2) = " + std::to_string(threshold),
                          threshold);
  }
  return solve_forward_program(src, d1, d2 * std::exp2(2.0 * std::min(r3, 500.0)), r2, opt);
}

TwoWaySolution two_way_triangular_min_r1(const GaussianCascadeSource& src, const GaussianQuery& q,
                                         const ForwardSolverOptions& opt) {
  src.validate();
  const double d3 = require(q.d3, "D3"), r4 = require(q.r4, "R4");
  check_distortion(d3, "D3");
  check_rate(r4, "R4");
  const double s = src.var_z_given_y();
  TwoWaySolution out;
  out.r4_threshold = s > 0.0 ? std::max(0.0, half_log2(s / d3)) : 0.0;
  if (r4 < out.r4_threshold - 1e-12) {
    throw InfeasibleError("R4 is below the threshold 1/2 log(var(Z|Y)/D3) = " + std::to_string(out.r4_threshold),
                          out.r4_threshold);
  }
  out.forward = triangular_min_r1(src, q, opt);
  return out;
}

namespace {

double checked_s(const GaussianCascadeSource& src, double dz1, double dz2) {
  src.validate();
  const double s = src.var_z_given_y();
  for (double d : {dz1, dz2}) {
    if (!(d > 0.0 && d <= s)) {
      throw ArgumentError("backward distortions must lie in (0, var(Z|Y)] = (0, " + std::to_string(s) + "]");
    }
  }
  return s;
}

// Nested Gaussian test channels U_k = Z + N_k. levels[k] is the target
// Var(Z | Y, U_k); a level at s means U_k is uninformative and is dropped.
class Chain {
 public:
  Chain(const GaussianCascadeSource& src, std::vector<double> levels) : s_(src.var_z_given_y()), levels_(std::move(levels)) {
    for (double l : levels_) noise_.push_back(l >= s_ ? kInf : q_map(l, s_));
    std::vector<int> finite;
    for (std::size_t i = 0; i < noise_.size(); ++i) {
      if (std::isfinite(noise_[i])) {
        index_.push_back(2 + static_cast<Eigen::Index>(finite.size()));
        finite.push_back(static_cast<int>(i));
      } else {
        index_.push_back(-1);
      }
    }
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(finite.size());
    const double vz = src.var_z;
    cov_ = Eigen::MatrixXd::Constant(n, n, vz);  // Z, Y and every U share Var(Z)
    cov_(1, 1) = src.var_b + vz;
    for (std::size_t i = 0; i < finite.size(); ++i) {
      for (std::size_t j = 0; j < finite.size(); ++j) {
        const double shared = std::min(noise_[static_cast<std::size_t>(finite[i])], noise_[static_cast<std::size_t>(finite[j])]);
        cov_(2 + static_cast<Eigen::Index>(i), 2 + static_cast<Eigen::Index>(j)) = vz + shared;
      }
    }
  }

  double noise(int k) const { return noise_[static_cast<std::size_t>(k)]; }

  // Var(Z | Y, U_k for k in layers)
  double mmse(std::initializer_list<int> layers) const {
    std::vector<Eigen::Index> obs{1};
    for (int k : layers) {
      if (index_[static_cast<std::size_t>(k)] >= 0) obs.push_back(index_[static_cast<std::size_t>(k)]);
    }
    return conditional_variance(cov_, 0, std::span<const Eigen::Index>(obs));
  }

  double rate(double from, double to) const { return to >= from ? 0.0 : half_log2(from / to); }
  double s() const { return s_; }

 private:
  double s_;
  std::vector<double> levels_;
  std::vector<double> noise_;
  std::vector<Eigen::Index> index_;
  Eigen::MatrixXd cov_;
};

double noise_gap(double coarse, double fine) { return std::isinf(coarse) ? kInf : std::max(0.0, coarse - fine); }

}  // namespace

BackwardCheck extended_backward_region_check(const GaussianCascadeSource& src, double r3, double r4, double r5, double dz1,
                                             double dz2) {
  const double s = checked_s(src, dz1, dz2);
  check_rate(r3, "R3");
  check_rate(r4, "R4");
  check_rate(r5, "R5");
  BackwardCheck c;
  c.slack[0] = r3 - half_log2(s / dz1);
  c.slack[1] = r3 + r5 - half_log2(s / std::min(dz1, dz2));
  c.slack[2] = r4 + r5 - half_log2(s / dz2);
  c.member = c.slack[0] >= -1e-12 && c.slack[1] >= -1e-12 && c.slack[2] >= -1e-12;
  return c;
}

BackwardConstruction extended_backward_achievability(const GaussianCascadeSource& src, double dz1, double dz2, double r3_budget,
                                                     double r4_budget) {
  const double s = checked_s(src, dz1, dz2);
  check_rate(r3_budget, "R3");
  check_rate(r4_budget, "R4");
  const double need_r3 = half_log2(s / dz1);
  if (r3_budget < need_r3 - 1e-12) {
    throw InfeasibleError("violates R3 >= 1/2 log(var(Z|Y)/DZ1) = " + std::to_string(need_r3), need_r3);
  }
  const double l_dz2 = half_log2(s / dz2);
  auto level_for = [s](double rate) { return s * std::exp2(-2.0 * std::min(rate, 500.0)); };

  BackwardConstruction out;
  if (dz1 <= dz2) {
    // U1 = Z + W1 (finest), U3 = U1 + W3, U2 = U3 + W2 (coarsest).
    out.case_id = 1;
    out.d_prime = std::clamp(level_for(r4_budget), dz2, s);
    out.d_double_prime = out.d_prime;
    const Chain chain(src, {dz1, out.d_prime, dz2});  // U1, U2, U3
    out.w1_var = chain.noise(0);
    out.w3_var = noise_gap(chain.noise(2), chain.noise(0));
    out.w2_var = noise_gap(chain.noise(1), chain.noise(2));
    out.r3 = chain.rate(s, chain.mmse({0, 1}));
    out.r4 = chain.rate(s, chain.mmse({1}));
    out.r5 = chain.rate(chain.mmse({1}), chain.mmse({1, 2}));
    out.dz1_achieved = chain.mmse({0});
    out.dz2_achieved = chain.mmse({2});
    return out;
  }

  // DZ1 > DZ2: U3 = Z + W3 (finest), U1 = U3 + W1, U2 = U1 + W2 or U2 = U1.
  out.d_prime = r3_budget > l_dz2 ? dz2 : std::clamp(level_for(r3_budget), dz2, dz1);
  if (r3_budget >= r4_budget) {
    out.case_id = 2;
    out.d_double_prime = r4_budget > l_dz2 ? dz2 : std::clamp(level_for(r4_budget), out.d_prime, s);
  } else {
    out.case_id = 3;
    out.d_double_prime = out.d_prime;
  }
  const Chain chain(src, {out.d_prime, out.d_double_prime, dz2});  // U1, U2, U3
  out.w3_var = chain.noise(2);
  out.w1_var = noise_gap(chain.noise(0), chain.noise(2));
  out.w2_var = out.case_id == 3 ? 0.0 : noise_gap(chain.noise(1), chain.noise(0));
  out.r3 = chain.rate(s, chain.mmse({0, 1}));
  out.r4 = chain.rate(s, chain.mmse({1}));
  out.r5 = chain.rate(chain.mmse({1}), chain.mmse({1, 2}));
  out.dz1_achieved = chain.mmse({0});
  out.dz2_achieved = chain.mmse({2});
  return out;
}

PermuterTransform permuter_equivalent_transform(const GaussianCascadeSource& src) {
  src.validate();
  if (!(src.var_b > 0.0)) throw NumericDomainError("permuter_equivalent_transform: varB must be positive");
  const double var_x = src.var_a + src.var_b;
  const double alpha = src.var_b / var_x;
  return {alpha, (src.var_b - alpha * alpha * var_x) / (alpha * alpha)};
}

}  // namespace cascade
