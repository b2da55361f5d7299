#pragma once

#include "cascade/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>

namespace cascade {

// X = A + B + Z, Y = B + Z, with A, B, Z independent zero-mean Gaussians.
template <typename Scalar>
struct BasicGaussianSource {
  Scalar var_a{0}, var_b{0}, var_z{0};

  void validate() const {
    if (!(var_a >= 0 && var_b >= 0 && var_z >= 0)) throw ArgumentError("Gaussian source: variances must be nonnegative");
    if (!(var_a > 0 || var_b > 0 || var_z > 0)) throw ArgumentError("Gaussian source: at least one variance must be positive");
  }

  // sigma^2_{Z|Y}
  Scalar var_z_given_y() const {
    const Scalar t = var_b + var_z;
    return t > 0 ? var_z * var_b / t : Scalar(0);
  }

  // Covariance of (X, Y, Z).
  Eigen::Matrix<Scalar, 3, 3> covariance() const {
    const Scalar x = var_a + var_b + var_z, y = var_b + var_z;
    Eigen::Matrix<Scalar, 3, 3> c;
    c << x, y, var_z,
         y, y, var_z,
         var_z, var_z, var_z;
    return c;
  }
};
using GaussianCascadeSource = BasicGaussianSource<double>;

// U = alpha A + beta B + Z*, Var(Z*) = var_zstar. Canonical scale has var_zstar = 1.
struct GaussianAux {
  double alpha = 0.0;
  double beta = 0.0;
  double var_zstar = 1.0;
  bool u_constant() const { return alpha == 0.0 && beta == 0.0; }
};

struct GaussianQuery {
  std::optional<double> d1, d2, d3, dz1, dz2;
  std::optional<double> r2, r3, r4, r5;
};

// Var(target | observed) by Schur complement. A singular observed block is
// handled with the Moore-Penrose pseudo-inverse, which is the exact Gaussian
// conditional for degenerate observations.
template <typename Derived>
typename Derived::Scalar conditional_variance(const Eigen::MatrixBase<Derived>& cov, Eigen::Index target,
                                              std::span<const Eigen::Index> observed) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = cov.rows();
  if (cov.cols() != n) throw ArgumentError("conditional_variance: covariance must be square");
  if (target < 0 || target >= n) throw ArgumentError("conditional_variance: target index out of range");
  for (auto o : observed) {
    if (o < 0 || o >= n) throw ArgumentError("conditional_variance: observed index out of range");
  }
  const Mat c = cov;
  const Scalar scale = std::max(Scalar(1), c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * scale) {
    throw NumericDomainError("conditional_variance: covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> full(c, Eigen::EigenvaluesOnly);
  if (full.eigenvalues().minCoeff() < Scalar(-1e-10) * scale) {
    throw NumericDomainError("conditional_variance: covariance is not positive semidefinite");
  }
  if (std::find(observed.begin(), observed.end(), target) != observed.end()) return Scalar(0);
  const Scalar tt = c(target, target);
  if (observed.empty()) return std::max(Scalar(0), tt);

  const auto k = static_cast<Eigen::Index>(observed.size());
  Mat oo(k, k);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> to(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    to(i) = c(target, observed[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < k; ++j) oo(i, j) = c(observed[static_cast<std::size_t>(i)], observed[static_cast<std::size_t>(j)]);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(oo);
  const auto& ev = es.eigenvalues();
  const Scalar cutoff = Scalar(1e-12) * std::max(Scalar(1e-300), ev.cwiseAbs().maxCoeff());
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> proj = es.eigenvectors().transpose() * to;
  Scalar explained = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (ev(i) > cutoff) explained += proj(i) * proj(i) / ev(i);
  }
  return std::max(Scalar(0), tt - explained);
}

template <typename Derived>
typename Derived::Scalar conditional_variance(const Eigen::MatrixBase<Derived>& cov, Eigen::Index target,
                                              std::initializer_list<Eigen::Index> observed) {
  return conditional_variance(cov, target, std::span<const Eigen::Index>(observed.begin(), observed.size()));
}

// Q(x) = x s / (s - x): the noise variance W with Var(Z | Y, Z + W) = x when
// Var(Z | Y) = s. Q(0) = 0.
template <typename Scalar>
Scalar q_map(Scalar x, Scalar s) {
  if (!(s > 0)) throw NumericDomainError("q_map: s must be positive");
  if (!(x >= 0)) throw NumericDomainError("q_map: x must be nonnegative");
  if (!(x < s)) throw NumericDomainError("q_map: x must be below s (noise variance would be infinite or negative)");
  return x * s / (s - x);
}

// Second-order statistics of U for a given auxiliary (any var_zstar).
struct AuxStatistics {
  double var_u;
  double var_a_given_ub;  // sigma^2_{A|U,B}
  double var_ab_given_u;  // sigma^2_{A+B|U}
  double r2_required;     // 1/2 log(var_u / var_zstar)
};
AuxStatistics aux_statistics(const GaussianCascadeSource& src, const GaussianAux& aux);

struct ForwardSolution {
  double r1 = 0.0;
  GaussianAux aux;
  AuxStatistics stats{};
};

struct TwoWaySolution {
  ForwardSolution forward;
  double r4_threshold = 0.0;
};

struct ForwardSolverOptions {
  int grid = 400;             // log-spaced alpha points before bisection
  int bisection_steps = 200;
};

// R1 = max{1/2 log(varA/D1), 1/2 log(varA/sigma^2_{A|U,B}), 0}.
double forward_r1(const GaussianCascadeSource& src, double d1, double var_a_given_ub);

// Minimal R1 subject to R2 >= 1/2 log var_u and d2_limit >= sigma^2_{A+B|U}.
ForwardSolution solve_forward_program(const GaussianCascadeSource& src, double d1, double d2_limit, double r2,
                                      const ForwardSolverOptions& opt = {});

ForwardSolution cascade_min_r1(const GaussianCascadeSource& src, const GaussianQuery& q, const ForwardSolverOptions& opt = {});
ForwardSolution triangular_min_r1(const GaussianCascadeSource& src, const GaussianQuery& q, const ForwardSolverOptions& opt = {});
TwoWaySolution two_way_triangular_min_r1(const GaussianCascadeSource& src, const GaussianQuery& q,
                                         const ForwardSolverOptions& opt = {});

struct BackwardCheck {
  bool member = false;
  double slack[3] = {0, 0, 0};  // R3, R3+R5, R4+R5 inequalities
};
BackwardCheck extended_backward_region_check(const GaussianCascadeSource& src, double r3, double r4, double r5, double dz1,
                                             double dz2);

// W-chain for the backward link. Each U is Z plus cumulative noise; a chain
// variance of +infinity means that layer carries no information (rate 0).
struct BackwardConstruction {
  int case_id = 1;
  double w1_var = 0.0, w2_var = 0.0, w3_var = 0.0;
  double d_prime = 0.0, d_double_prime = 0.0;
  double r3 = 0.0, r4 = 0.0, r5 = 0.0;
  double dz1_achieved = 0.0, dz2_achieved = 0.0;
};
BackwardConstruction extended_backward_achievability(const GaussianCascadeSource& src, double dz1, double dz2, double r3_budget,
                                                     double r4_budget);

struct PermuterTransform {
  double alpha;
  double var_z_equiv;
};
PermuterTransform permuter_equivalent_transform(const GaussianCascadeSource& src);

}  // namespace cascade
