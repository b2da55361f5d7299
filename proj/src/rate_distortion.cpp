#include "cascade/discrete.hpp"
#include "cascade/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cascade {

namespace {

// Kernel exp(-slope (d(x,k) - min_k d(x,k))); slope = inf keeps only the
// per-row minimizers.
Eigen::MatrixXd kernel(const Eigen::MatrixXd& d, double slope) {
  Eigen::MatrixXd k(d.rows(), d.cols());
  for (Eigen::Index x = 0; x < d.rows(); ++x) {
    const double m = d.row(x).minCoeff();
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      k(x, c) = std::isinf(slope) ? (d(x, c) <= m + 1e-12 ? 1.0 : 0.0) : std::exp(-slope * (d(x, c) - m));
    }
  }
  return k;
}

struct BA {
  const Eigen::VectorXd& pw;
  const Eigen::MatrixXd& px;
  const Eigen::MatrixXd& d;

  // Iterates to a fixed point from the given output distribution.
  ConditionalRD run(double slope, Eigen::MatrixXd output) const {
    const Eigen::MatrixXd kern = kernel(d, slope);
    const Eigen::Index nw = pw.size(), nx = d.rows(), nk = d.cols();
    ConditionalRD res;
    res.slope = slope;
    res.channel.assign(static_cast<std::size_t>(nw), Eigen::MatrixXd::Zero(nx, nk));
    for (Eigen::Index w = 0; w < nw; ++w) {
      Eigen::RowVectorXd r = output.row(w);
      Eigen::MatrixXd& q = res.channel[static_cast<std::size_t>(w)];
      for (int it = 0; it < 3000; ++it) {
        for (Eigen::Index x = 0; x < nx; ++x) {
          q.row(x) = r.cwiseProduct(kern.row(x));
          const double s = q.row(x).sum();
          if (s > 0.0) q.row(x) /= s;
          else q.row(x) = kern.row(x) / kern.row(x).sum();
        }
        const Eigen::RowVectorXd next = px.row(w) * q;
        const double change = (next - r).cwiseAbs().maxCoeff();
        r = next;
        if (change < 1e-14) break;
      }
      output.row(w) = r;
    }
    res.output = std::move(output);
    for (Eigen::Index w = 0; w < nw; ++w) {
      const Eigen::MatrixXd& q = res.channel[static_cast<std::size_t>(w)];
      for (Eigen::Index x = 0; x < nx; ++x) {
        const double pxw = pw(w) * px(w, x);
        if (pxw <= 0.0) continue;
        for (Eigen::Index k = 0; k < nk; ++k) {
          if (q(x, k) <= 0.0) continue;
          res.distortion += pxw * q(x, k) * d(x, k);
          res.rate += pxw * q(x, k) * std::log2(q(x, k) / res.output(w, k));
        }
      }
    }
    res.rate = std::max(0.0, res.rate);
    return res;
  }
};

}  // namespace

ConditionalRD conditional_rate_distortion(const Eigen::VectorXd& pw, const Eigen::MatrixXd& px_given_w, const Eigen::MatrixXd& d,
                                          double target) {
  const Eigen::Index nw = pw.size(), nk = d.cols();
  if (px_given_w.rows() != nw || px_given_w.cols() != d.rows()) throw ArgumentError("conditional_rate_distortion: shape mismatch");

  double d_zero = 0.0, d_min = 0.0;
  std::vector<Eigen::Index> best_const(static_cast<std::size_t>(nw), 0);
  for (Eigen::Index w = 0; w < nw; ++w) {
    const Eigen::RowVectorXd cost = px_given_w.row(w) * d;
    Eigen::Index k = 0;
    for (Eigen::Index c = 1; c < nk; ++c) {
      if (cost(c) < cost(k)) k = c;
    }
    best_const[static_cast<std::size_t>(w)] = k;
    d_zero += pw(w) * cost(k);
    d_min += pw(w) * px_given_w.row(w).dot(d.rowwise().minCoeff());
  }
  if (target < d_min - 1e-12) {
    throw InfeasibleError("distortion " + std::to_string(target) + " is below the minimum achievable " + std::to_string(d_min), d_min);
  }

  if (target >= d_zero) {
    ConditionalRD res;
    res.distortion = d_zero;
    res.output = Eigen::MatrixXd::Zero(nw, nk);
    res.channel.assign(static_cast<std::size_t>(nw), Eigen::MatrixXd::Zero(d.rows(), nk));
    for (Eigen::Index w = 0; w < nw; ++w) {
      const Eigen::Index k = best_const[static_cast<std::size_t>(w)];
      res.output(w, k) = 1.0;
      res.channel[static_cast<std::size_t>(w)].col(k).setOnes();
    }
    return res;
  }

  const BA ba{pw, px_given_w, d};
  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(nw, nk, 1.0 / static_cast<double>(nk));
  const ConditionalRD limit = ba.run(std::numeric_limits<double>::infinity(), uniform);
  if (target <= d_min + 1e-12) return limit;

  double lo = 0.0, hi = 1.0;
  ConditionalRD best = ba.run(hi, uniform);
  while (best.distortion > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return limit;
    best = ba.run(hi, best.output);
  }
  for (int it = 0; it < 60 && hi - lo > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    ConditionalRD r = ba.run(mid, best.output);
    if (r.distortion <= target) {
      hi = mid;
      best = std::move(r);
    } else {
      lo = mid;
    }
  }
  return best;
}

}  // namespace cascade
