#pragma once

// Reference computations for tests. They avoid the library's table machinery
// and work from explicit enumeration, so they make an independent path.

#include "cascade/discrete.hpp"
#include "cascade/gaussian.hpp"
#include "cascade/probability.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <vector>

namespace oracle {

// A joint distribution as a list of (assignment, probability).
struct Atom {
  std::vector<int> v;
  double p;
};
using Joint = std::vector<Atom>;

inline Joint from_pmf(const cascade::JointPMF& pmf) {
  Joint j;
  std::vector<int> idx(pmf.sizes().size());
  for (std::size_t f = 0; f < pmf.num_entries(); ++f) {
    // Manual row-major decoding.
    std::size_t rem = f;
    for (std::size_t k = idx.size(); k-- > 0;) {
      idx[k] = static_cast<int>(rem % static_cast<std::size_t>(pmf.sizes()[k]));
      rem /= static_cast<std::size_t>(pmf.sizes()[k]);
    }
    j.push_back({idx, pmf.probs()(static_cast<Eigen::Index>(f))});
  }
  return j;
}

// Row index of an input tuple in a channel table (row-major, last fastest).
inline std::size_t row_of(const std::vector<int>& sizes, const std::vector<int>& values) {
  std::size_t r = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) r = r * static_cast<std::size_t>(sizes[k]) + static_cast<std::size_t>(values[k]);
  return r;
}

// Appends a variable drawn from a channel whose inputs are the listed variables.
inline Joint append(const Joint& j, const cascade::CondPMF& ch, const std::vector<int>& inputs) {
  Joint out;
  for (const auto& a : j) {
    std::vector<int> in;
    for (int i : inputs) in.push_back(a.v[static_cast<std::size_t>(i)]);
    const auto r = row_of(ch.input_sizes(), in);
    for (int o = 0; o < ch.output_size(); ++o) {
      auto v = a.v;
      v.push_back(o);
      out.push_back({v, a.p * ch.table()(static_cast<Eigen::Index>(r), o)});
    }
  }
  return out;
}

inline double H(const Joint& j, const std::vector<int>& vars) {
  std::map<std::vector<int>, double> m;
  for (const auto& a : j) {
    std::vector<int> key;
    for (int i : vars) key.push_back(a.v[static_cast<std::size_t>(i)]);
    m[key] += a.p;
  }
  double h = 0.0;
  for (const auto& [k, p] : m) {
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

inline std::vector<int> cat(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)
inline double I(const Joint& j, const std::vector<int>& a, const std::vector<int>& b, const std::vector<int>& c = {}) {
  return H(j, cat(a, c)) + H(j, cat(b, c)) - H(j, cat(cat(a, b), c)) - H(j, c);
}

// E d(v[target], f(atom)).
inline double expect(const Joint& j, const std::function<double(const std::vector<int>&)>& cost) {
  double s = 0.0;
  for (const auto& a : j) s += a.p * cost(a.v);
  return s;
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

// ---- random objects ----

inline Eigen::ArrayXd random_simplex(int n, std::mt19937_64& rng, double sparsity = 0.0) {
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::ArrayXd p(n);
  for (int i = 0; i < n; ++i) p(i) = u(rng) < sparsity ? 0.0 : e(rng);
  if (p.sum() <= 0.0) p(0) = 1.0;
  return p / p.sum();
}

inline cascade::JointPMF random_pmf(std::vector<int> sizes, std::mt19937_64& rng, double sparsity = 0.0) {
  return cascade::JointPMF(sizes, random_simplex(static_cast<int>(cascade::table_size(sizes)), rng, sparsity));
}

inline cascade::CondPMF random_channel(std::vector<int> inputs, int out, std::mt19937_64& rng, double sparsity = 0.0) {
  const auto rows = static_cast<Eigen::Index>(cascade::table_size(inputs));
  Eigen::MatrixXd t(rows, out);
  for (Eigen::Index r = 0; r < rows; ++r) t.row(r) = random_simplex(out, rng, sparsity).matrix().transpose();
  return cascade::CondPMF(std::move(inputs), out, t);
}

inline cascade::DeterministicMap random_map(std::vector<int> inputs, int out, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, out - 1);
  std::vector<int> v(cascade::table_size(inputs));
  for (auto& x : v) x = d(rng);
  return cascade::DeterministicMap(std::move(inputs), out, std::move(v));
}

inline Eigen::MatrixXd hamming(int n) { return Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n); }

// Source with X - Y - Z built from p(x) p(y|x) p(z|y).
inline cascade::SourceSpec random_source(int nx, int ny, int nz, std::mt19937_64& rng) {
  const Eigen::VectorXd px = random_simplex(nx, rng).matrix();
  const auto src = cascade::compose(px, random_channel({nx}, ny, rng), random_channel({ny}, nz, rng));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd d1(nx, nx), d2(nx, nx), d3(nz, nz);
  for (auto* d : {&d1, &d2, &d3}) {
    for (Eigen::Index i = 0; i < d->size(); ++i) d->data()[i] = u(rng);
  }
  return {src, d1, d2, d3};
}

// Binary uniform X, Y = X, Z constant, Hamming distortions.
inline cascade::SourceSpec binary_y_equals_x() {
  Eigen::ArrayXd p(4);
  p << 0.5, 0.0, 0.0, 0.5;  // (x, y) with |Z| = 1
  cascade::JointPMF pmf({2, 2, 1}, p);
  return {pmf, hamming(2), hamming(2), std::nullopt};
}

// Auxiliary for the binary Y = X instance: U = X through BSC(c), Xhat1 = X,
// g2(u, z) = u.
inline cascade::AuxiliarySystem binary_bsc_aux(double c) {
  cascade::AuxiliarySystem aux;
  Eigen::MatrixXd pu(4, 2);
  pu << 1 - c, c, 1 - c, c, c, 1 - c, c, 1 - c;  // rows (x, y)
  aux.p_u = cascade::CondPMF({2, 2}, 2, pu);
  std::vector<int> xh(8);
  for (int i = 0; i < 8; ++i) xh[static_cast<std::size_t>(i)] = i / 4;
  aux.p_xhat1 = cascade::CondPMF::from_function({2, 2, 2}, 2, xh);
  aux.g2 = cascade::DeterministicMap({2, 1}, 2, {0, 1});
  return aux;
}

// ---- Gaussian grid oracle ----

// Closed-form feasibility of U = alpha A + beta B + Z*, Var(Z*) = 1:
// alpha^2 a + beta^2 b <= 2^{2 r2} - 1 and Var(A + B | U) <= d2.
inline bool gaussian_point_feasible(double a, double b, double d2, double r2, double alpha, double beta, double rel = 1e-12) {
  const double su = alpha * alpha * a + beta * beta * b;
  if (su > (std::pow(2.0, 2.0 * r2) - 1.0) * (1 + rel)) return false;
  const double c = alpha * a + beta * b;
  return (a + b) - c * c / (su + 1.0) <= d2 * (1 + rel);
}

inline double gaussian_r1(double a, double d1, double alpha) {
  const double cond = a / (1.0 + alpha * alpha * a);  // Var(A | U, B)
  double r = 0.0;
  if (d1 < a) r = std::max(r, 0.5 * std::log2(a / d1));
  if (cond > 0 && cond < a) r = std::max(r, 0.5 * std::log2(a / cond));
  return r;
}

// Smallest R1 over U = alpha A + beta B + Z*, Var(Z*) = 1, on a log-spaced
// n x n grid in (alpha, |beta|) with both signs of beta, then refined twice:
// each pass rescans n x n over one alpha cell below the best point and a
// beta window 50 cells either side. R1 grows with alpha, so the scan keeps
// the smallest feasible alpha.
struct GaussianGridResult {
  double r1 = std::numeric_limits<double>::infinity();
  double alpha = 0.0, beta = 0.0;
  bool feasible = false;
};

inline GaussianGridResult gaussian_grid_min_r1(double a, double b, double d1, double d2, double r2, int n = 800) {
  GaussianGridResult best;
  if (a + b <= d2) {
    best = {gaussian_r1(a, d1, 0.0), 0.0, 0.0, true};
    return best;
  }
  auto scan = [&](double alo, double ahi, double blo, double bhi) {
    const double la = std::log(alo), ua = std::log(ahi), lb = std::log(blo), ub = std::log(bhi);
    for (int i = 0; i < n; ++i) {
      const double alpha = std::exp(la + (ua - la) * i / (n - 1));
      if (best.feasible && alpha >= best.alpha) break;
      for (int k = 0; k < n; ++k) {
        const double mag = std::exp(lb + (ub - lb) * k / (n - 1));
        for (double beta : {mag, -mag}) {
          if (gaussian_point_feasible(a, b, d2, r2, alpha, beta) && (!best.feasible || alpha < best.alpha)) {
            best = {gaussian_r1(a, d1, alpha), alpha, beta, true};
          }
        }
      }
    }
  };
  double ra = std::pow(1e8, 1.0 / (n - 1)), rb = ra;
  scan(1e-4, 1e4, 1e-4, 1e4);
  for (int pass = 0; pass < 2 && best.feasible; ++pass) {
    const double a0 = best.alpha, b0 = std::abs(best.beta), wb = std::pow(rb, 50);
    scan(a0 / ra, a0, b0 / wb, b0 * wb);
    ra = std::pow(ra, 1.0 / (n - 1));
    rb = std::pow(wb * wb, 1.0 / (n - 1));
  }
  return best;
}

}  // namespace oracle
