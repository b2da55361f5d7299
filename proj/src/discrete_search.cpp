#include "cascade/discrete.hpp"
#include "cascade/errors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace cascade {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kFeasTol = 1e-12;

// Uniform double in [0,1) from 53 random bits.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Dense view of the cascade-region quantities as functions of q = p(u|x,y), with
// rows indexed by x * |Y| + y.
class CascadeModel {
 public:
  CascadeModel(const SourceSpec& src, int nu, double d1) : src_(src), nu_(nu), d1_(d1) {
    nx_ = src.x_size();
    ny_ = src.y_size();
    nz_ = src.z_size();
    pxyz_ = Eigen::MatrixXd::Zero(nx_ * ny_, nz_);
    int idx[3];
    for (std::size_t f = 0; f < src.pmf.num_entries(); ++f) {
      src.pmf.unflatten(f, idx);
      pxyz_(idx[0] * ny_ + idx[1], idx[2]) = src.pmf.probs()(static_cast<Eigen::Index>(f));
    }
    pxy_ = pxyz_.rowwise().sum();
    pz_ = pxyz_.colwise().sum().transpose();
    py_ = Eigen::VectorXd::Zero(ny_);
    for (int r = 0; r < nx_ * ny_; ++r) py_(r % ny_) += pxy_(r);
  }

  int rows() const { return nx_ * ny_; }
  int nu() const { return nu_; }
  double pxy(int r) const { return pxy_(r); }

  struct Eval {
    double i_xu_given_y = 0.0, r2 = 0.0, d2 = 0.0;
    ConditionalRD rd;
    std::vector<int> g2;  // index u * |Z| + z
    double r1() const { return i_xu_given_y + rd.rate; }
  };

  Eval evaluate(const Eigen::MatrixXd& q) const {
    Eval e;
    const Eigen::MatrixXd puz = q.transpose() * pxyz_;  // nu x nz
    Eigen::MatrixXd puy = Eigen::MatrixXd::Zero(nu_, ny_);
    for (int r = 0; r < rows(); ++r) puy.col(r % ny_) += pxy_(r) * q.row(r).transpose();
    for (int r = 0; r < rows(); ++r) {
      const int y = r % ny_;
      for (int u = 0; u < nu_; ++u) {
        const double quv = q(r, u);
        if (quv <= 0.0 || pxy_(r) <= 0.0) continue;
        e.i_xu_given_y += pxy_(r) * quv * std::log2(quv * py_(y) / puy(u, y));
        for (int z = 0; z < nz_; ++z) {
          if (pxyz_(r, z) > 0.0) e.r2 += pxyz_(r, z) * quv * std::log2(quv * pz_(z) / puz(u, z));
        }
      }
    }
    e.i_xu_given_y = std::max(0.0, e.i_xu_given_y);
    e.r2 = std::max(0.0, e.r2);

    // Best-response g2, ties to the lowest index.
    e.g2.assign(static_cast<std::size_t>(nu_ * nz_), 0);
    const Eigen::Index nk = src_.d2.cols();
    for (int u = 0; u < nu_; ++u) {
      for (int z = 0; z < nz_; ++z) {
        Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(nk);
        for (int r = 0; r < rows(); ++r) cost += pxyz_(r, z) * q(r, u) * src_.d2.row(r / ny_);
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < nk; ++k) {
          if (cost(k) < cost(best)) best = k;
        }
        e.g2[static_cast<std::size_t>(u * nz_ + z)] = static_cast<int>(best);
        e.d2 += cost(best);
      }
    }

    // X-hat1 part: conditional rate-distortion over cells w = u * |Y| + y.
    Eigen::VectorXd pw(nu_ * ny_);
    Eigen::MatrixXd px_w = Eigen::MatrixXd::Zero(nu_ * ny_, nx_);
    for (int u = 0; u < nu_; ++u) {
      for (int y = 0; y < ny_; ++y) {
        const int w = u * ny_ + y;
        pw(w) = puy(u, y);
        for (int x = 0; x < nx_; ++x) px_w(w, x) = pw(w) > 0.0 ? pxy_(x * ny_ + y) * q(x * ny_ + y, u) / pw(w) : 1.0 / nx_;
      }
    }
    e.rd = conditional_rate_distortion(pw, px_w, src_.d1, d1_);
    return e;
  }

  // Gradient of I(X;U|Y) + R_{X|U,Y}(D1) + penalty terms with respect to q.
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& q, const Eval& e, double r2_excess, double d2_excess, double mu) const {
    const Eigen::MatrixXd puz = q.transpose() * pxyz_;
    Eigen::MatrixXd puy = Eigen::MatrixXd::Zero(nu_, ny_);
    for (int r = 0; r < rows(); ++r) puy.col(r % ny_) += pxy_(r) * q.row(r).transpose();
    Eigen::MatrixXd kern(src_.d1.rows(), src_.d1.cols());
    for (Eigen::Index x = 0; x < kern.rows(); ++x) {
      const double m = src_.d1.row(x).minCoeff();
      for (Eigen::Index k = 0; k < kern.cols(); ++k) {
        kern(x, k) = std::isinf(e.rd.slope) ? (src_.d1(x, k) <= m + 1e-12 ? 1.0 : 0.0) : std::exp(-e.rd.slope * (src_.d1(x, k) - m));
      }
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows(), nu_);
    for (int r = 0; r < rows(); ++r) {
      const int x = r / ny_, y = r % ny_;
      for (int u = 0; u < nu_; ++u) {
        const double quv = std::max(q(r, u), 1e-300);
        const double pu_y = std::max(puy(u, y) / py_(y), 1e-300);
        double v = pxy_(r) * std::log2(quv / pu_y);
        const double mass = e.rd.output.row(u * ny_ + y).dot(kern.row(x));
        v += pxy_(r) * -std::log(std::max(mass, 1e-300)) / kLn2;
        double dr2 = 0.0, dd2 = 0.0;
        for (int z = 0; z < nz_; ++z) {
          if (pxyz_(r, z) <= 0.0) continue;
          dr2 += pxyz_(r, z) * std::log2(quv * pz_(z) / std::max(puz(u, z), 1e-300));
          dd2 += pxyz_(r, z) * src_.d2(x, e.g2[static_cast<std::size_t>(u * nz_ + z)]);
        }
        v += 2.0 * mu * (r2_excess * dr2 + d2_excess * dd2);
        g(r, u) = v;
      }
    }
    return g;
  }

  // Channel p(xhat1|x,y,u) from the conditional rate-distortion solution.
  CondPMF xhat1_channel(const ConditionalRD& rd) const {
    const Eigen::Index nk = src_.d1.cols();
    Eigen::MatrixXd t(rows() * nu_, nk);
    for (int x = 0; x < nx_; ++x) {
      for (int y = 0; y < ny_; ++y) {
        for (int u = 0; u < nu_; ++u) {
          Eigen::RowVectorXd row = rd.channel[static_cast<std::size_t>(u * ny_ + y)].row(x);
          const double s = row.sum();
          if (s > 0.0) row /= s;
          else row = Eigen::RowVectorXd::Unit(nk, 0);
          t.row((x * ny_ + y) * nu_ + u) = row;
        }
      }
    }
    return CondPMF({nx_, ny_, nu_}, static_cast<int>(nk), std::move(t));
  }

  CondPMF u_channel(const Eigen::MatrixXd& q) const {
    Eigen::MatrixXd t = q;
    for (Eigen::Index r = 0; r < t.rows(); ++r) t.row(r) /= t.row(r).sum();
    return CondPMF({nx_, ny_}, nu_, std::move(t));
  }

  DeterministicMap g2_map(const std::vector<int>& g2) const {
    return DeterministicMap({nu_, nz_}, static_cast<int>(src_.d2.cols()), g2);
  }

 private:
  const SourceSpec& src_;
  int nu_, nx_ = 0, ny_ = 0, nz_ = 0;
  double d1_;
  Eigen::MatrixXd pxyz_;
  Eigen::VectorXd pxy_, pz_, py_;
};

struct Candidate {
  double r1 = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd q;
  CascadeModel::Eval eval;
  int restart = -1;
};

class Search {
 public:
  Search(const CascadeModel& model, double d2, double r2) : model_(model), d2_(d2), r2_(r2) {}

  bool feasible(const CascadeModel::Eval& e) const { return e.r2 <= r2_ + kFeasTol && e.d2 <= d2_ + kFeasTol; }

  void offer(const Eigen::MatrixXd& q, const CascadeModel::Eval& e, int restart) {
    if (!feasible(e)) return;
    if (e.r1() < best_.r1 - 1e-12) {
      best_.r1 = e.r1();
      best_.q = q;
      best_.eval = e;
      best_.restart = restart;
    }
  }

  void offer(const Eigen::MatrixXd& q, int restart) { offer(q, model_.evaluate(q), restart); }

  double objective(const CascadeModel::Eval& e, double mu) const {
    const double a = std::max(0.0, e.r2 - r2_), b = std::max(0.0, e.d2 - d2_);
    return e.r1() + mu * (a * a + b * b);
  }

  // Mixes q toward an input-independent channel until R2 fits.
  void project_rate(const Eigen::MatrixXd& q, const CascadeModel::Eval& e, int restart) {
    if (e.r2 <= r2_) return;
    Eigen::RowVectorXd pu = Eigen::RowVectorXd::Zero(q.cols());
    for (Eigen::Index r = 0; r < q.rows(); ++r) pu += model_.pxy(static_cast<int>(r)) * q.row(r);
    auto mixed = [&](double lam) {
      Eigen::MatrixXd m = lam * q;
      m.rowwise() += (1.0 - lam) * pu;
      return m;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      (model_.evaluate(mixed(mid)).r2 <= r2_ ? lo : hi) = mid;
    }
    offer(mixed(lo), restart);
  }

  void snap(const Eigen::MatrixXd& q, int restart) {
    Eigen::MatrixXd s = (q.array() < 1e-3).select(0.0, q);
    for (Eigen::Index r = 0; r < s.rows(); ++r) s.row(r) /= s.row(r).sum();
    offer(s, restart);
  }

  void descend(Eigen::MatrixXd q, int restart, double tolerance, int max_iterations) {
    double mu = 10.0;
    for (int round = 0; round < 5; ++round, mu *= 10.0) {
      CascadeModel::Eval e = model_.evaluate(q);
      offer(q, e, restart);
      double j = objective(e, mu);
      double eta = 1.0;
      int stalled = 0;
      for (int it = 0; it < max_iterations; ++it) {
        const Eigen::MatrixXd g =
            model_.gradient(q, e, std::max(0.0, e.r2 - r2_), std::max(0.0, e.d2 - d2_), mu);
        bool moved = false;
        for (int tries = 0; tries < 25; ++tries) {
          Eigen::MatrixXd next = q;
          for (Eigen::Index r = 0; r < q.rows(); ++r) {
            const double w = model_.pxy(static_cast<int>(r));
            if (w <= 0.0) continue;
            Eigen::RowVectorXd step = (-eta * g.row(r) / w).array();
            step.array() -= step.maxCoeff();
            next.row(r) = q.row(r).cwiseProduct(step.array().exp().matrix());
            next.row(r) /= next.row(r).sum();
          }
          CascadeModel::Eval en = model_.evaluate(next);
          const double jn = objective(en, mu);
          if (jn < j) {
            stalled = (j - jn < tolerance * 1e-2) ? stalled + 1 : 0;
            q = std::move(next);
            e = std::move(en);
            j = jn;
            eta = std::min(eta * 1.5, 64.0);
            moved = true;
            offer(q, e, restart);
            break;
          }
          eta *= 0.5;
        }
        if (!moved || stalled >= 5) break;
      }
      snap(q, restart);
      project_rate(q, e, restart);
    }
  }

  const Candidate& best() const { return best_; }

 private:
  const CascadeModel& model_;
  double d2_, r2_;
  Candidate best_;
};

}  // namespace

SearchResult min_r1_cascade_search(const SourceSpec& src, double d1, double d2, double r2, const SearchOptions& opt) {
  src.validate();
  const int nx = src.x_size(), ny = src.y_size(), nz = src.z_size();
  if (opt.u_size < 1 || opt.u_size > nx * ny + 3) {
    throw ArgumentError("search budget |U| = " + std::to_string(opt.u_size) + " outside [1, |X||Y|+3]");
  }
  if (!(d1 >= 0.0) || !(d2 >= 0.0) || !(r2 >= 0.0)) throw ArgumentError("search: distortions and R2 must be nonnegative");

  // Feasibility pre-checks over constant reconstructions and the identity bound.
  const JointPMF px = src.pmf.marginal({0});
  double d1_min = 0.0, d2_min = 0.0;
  for (int x = 0; x < nx; ++x) {
    d1_min += px.probs()(x) * src.d1.row(x).minCoeff();
    d2_min += px.probs()(x) * src.d2.row(x).minCoeff();
  }
  if (d1 < d1_min - kFeasTol) throw InfeasibleError("D1 is below the minimum achievable distortion", d1_min);
  if (d2 < d2_min - kFeasTol) throw InfeasibleError("D2 is below the minimum achievable distortion", d2_min);
  const JointPMF pxz = src.pmf.marginal({0, 2});
  double d2_const = 0.0;
  for (int z = 0; z < nz; ++z) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < src.d2.cols(); ++k) {
      double c = 0.0;
      for (int x = 0; x < nx; ++x) c += pxz.probs()(x * nz + z) * src.d2(x, k);
      best = std::min(best, c);
    }
    d2_const += best;
  }

  const CascadeModel model(src, opt.u_size, d1);
  Search search(model, d2, r2);
  const int rows = model.rows();

  if (d2 >= d2_const - kFeasTol) {
    // U constant meets D2 and R1 reduces to the conditional rate-distortion
    // function of X given Y, which lower-bounds every choice of U.
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(rows, opt.u_size);
    q.col(0).setOnes();
    search.offer(q, -1);
  } else {
    if (r2 <= 0.0) throw InfeasibleError("D2 needs a description of X but R2 = 0", 0.0);
    // Deterministic channels first (cheap, and they reach zero-distortion corners).
    double count = std::pow(static_cast<double>(opt.u_size), rows);
    std::optional<Eigen::MatrixXd> best_det;
    if (count <= 4096) {
      std::vector<int> digits(static_cast<std::size_t>(rows), 0);
      for (long long m = 0; m < static_cast<long long>(count); ++m) {
        long long v = m;
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(rows, opt.u_size);
        for (int r = 0; r < rows; ++r) {
          q(r, static_cast<int>(v % opt.u_size)) = 1.0;
          v /= opt.u_size;
        }
        const double before = search.best().r1;
        search.offer(q, -1);
        if (search.best().r1 < before) best_det = q;
      }
    }
    for (int restart = 0; restart < opt.restarts; ++restart) {
      std::mt19937_64 rng(mix(opt.seed ^ mix(static_cast<std::uint64_t>(restart) + 1)));
      Eigen::MatrixXd q(rows, opt.u_size);
      if (restart == 0 && best_det) {
        q = 0.8 * *best_det + Eigen::MatrixXd::Constant(rows, opt.u_size, 0.2 / opt.u_size);
      } else {
        for (int r = 0; r < rows; ++r) {
          for (int u = 0; u < opt.u_size; ++u) q(r, u) = -std::log(1.0 - unit(rng));
          q.row(r) /= q.row(r).sum();
        }
      }
      search.descend(q, restart, opt.tolerance, opt.max_iterations);
    }
  }

  const Candidate& best = search.best();
  if (!std::isfinite(best.r1)) throw InfeasibleError("no feasible auxiliary found for the given (D1, D2, R2)", r2);
  SearchResult res;
  res.aux.p_u = model.u_channel(best.q);
  res.aux.p_xhat1 = model.xhat1_channel(best.eval.rd);
  res.aux.g2 = model.g2_map(best.eval.g2);
  res.point = eval_cascade_point(src, res.aux);
  res.r1 = res.point.r1;
  res.restart = best.restart;
  return res;
}

}  // namespace cascade
