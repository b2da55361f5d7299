#include "cascade/discrete.hpp"
#include "cascade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cascade {

namespace {

// Points of the simplex over m symbols with coordinates in multiples of
// 1/(res-1); res = 1 gives the vertices.
std::vector<Eigen::RowVectorXd> simplex_grid(int m, int res) {
  std::vector<Eigen::RowVectorXd> out;
  if (res <= 1) {
    for (int k = 0; k < m; ++k) out.push_back(Eigen::RowVectorXd::Unit(m, k));
    return out;
  }
  const int total = res - 1;
  std::vector<int> parts(static_cast<std::size_t>(m), 0);
  // Enumerate compositions of total into m parts in lexicographic order.
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == m - 1) {
      parts[static_cast<std::size_t>(pos)] = left;
      Eigen::RowVectorXd v(m);
      for (int k = 0; k < m; ++k) v(k) = static_cast<double>(parts[static_cast<std::size_t>(k)]) / total;
      out.push_back(v);
      return;
    }
    for (int c = left; c >= 0; --c) {
      parts[static_cast<std::size_t>(pos)] = c;
      self(self, pos + 1, left - c);
    }
  };
  rec(rec, 0, total);
  return out;
}

double h2(double p) { return (p <= 0.0 || p >= 1.0) ? 0.0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

struct Stair {
  double rate, dist;
  std::uint64_t choice;  // packed per-cell option indices, 8 bits each
};

void prune(std::vector<Stair>& s) {
  std::sort(s.begin(), s.end(), [](const Stair& a, const Stair& b) { return a.dist != b.dist ? a.dist < b.dist : a.rate < b.rate; });
  std::vector<Stair> out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : s) {
    if (p.rate < best - 1e-15) {
      out.push_back(p);
      best = p.rate;
    }
  }
  s.swap(out);
}

struct Raw {
  double r1, r2, d1, d2;
  std::uint64_t pu;      // mixed-radix index of the U channel
  std::uint64_t choice;  // X-hat1 choices (see Stair)
  std::uint32_t g2;
  int xhat_const;        // resolution 1 only
};

}  // namespace

double oracle_lipschitz_slack(int resolution, int alphabet) {
  const double step = resolution >= 2 ? 1.0 / (resolution - 1) : 1.0;
  const double delta = std::min(0.5, 0.5 * step);
  return delta * std::log2(std::max(1, alphabet - 1)) + h2(delta);
}

std::vector<OraclePoint> brute_force_region_oracle(const SourceSpec& src, const OracleBudget& budget) {
  src.validate();
  const int nx = src.x_size(), ny = src.y_size(), nz = src.z_size(), nu = budget.u_size;
  const int nk1 = static_cast<int>(src.d1.cols()), nk2 = static_cast<int>(src.d2.cols());
  const int res = budget.resolution;
  if (nx > 2 || ny > 2 || nz > 2) throw ResourceError("oracle: source alphabets are capped at 2");
  if (nu < 1 || nu > 3) throw ResourceError("oracle: |U| is capped at 3");
  if (res < 1 || res > 9) throw ResourceError("oracle: grid resolution must lie in [1, 9]");
  if (nk1 > 3 || nk2 > 3) throw ResourceError("oracle: reconstruction alphabets are capped at 3");

  const int rows = nx * ny;
  Eigen::MatrixXd pxyz = Eigen::MatrixXd::Zero(rows, nz);
  {
    int idx[3];
    for (std::size_t f = 0; f < src.pmf.num_entries(); ++f) {
      src.pmf.unflatten(f, idx);
      pxyz(idx[0] * ny + idx[1], idx[2]) = src.pmf.probs()(static_cast<Eigen::Index>(f));
    }
  }
  const Eigen::VectorXd pxy = pxyz.rowwise().sum();

  const auto ugrid = simplex_grid(nu, res);
  const auto kgrid = simplex_grid(nk1, res);
  const std::uint64_t ng = ugrid.size();
  double n_channels = std::pow(static_cast<double>(ng), res >= 2 ? rows : 1);
  if (n_channels > 2e6) throw ResourceError("oracle: " + std::to_string(static_cast<long long>(n_channels)) + " U channels exceed the cap");
  const std::uint64_t n_g2 = static_cast<std::uint64_t>(std::llround(std::pow(nk2, nu * nz)));

  auto u_table = [&](std::uint64_t id) {
    Eigen::MatrixXd q(rows, nu);
    for (int r = 0; r < rows; ++r) {
      q.row(r) = ugrid[res >= 2 ? id % ng : id];
      if (res >= 2) id /= ng;
    }
    return q;
  };

  // X-hat1 options per cell: one grid row per x (or a shared vertex at res 1).
  std::vector<std::vector<int>> cell_options;
  {
    const std::uint64_t nkg = kgrid.size();
    const std::uint64_t combos = static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(nkg), nx)));
    for (std::uint64_t c = 0; c < combos; ++c) {
      std::vector<int> rowsel(static_cast<std::size_t>(nx));
      std::uint64_t v = c;
      for (int x = 0; x < nx; ++x) {
        rowsel[static_cast<std::size_t>(x)] = static_cast<int>(v % nkg);
        v /= nkg;
      }
      cell_options.push_back(rowsel);
    }
    if (cell_options.size() > 255) throw ResourceError("oracle: too many X-hat1 options per cell at this resolution");
  }

  std::vector<Raw> raw;
  for (std::uint64_t id = 0; id < static_cast<std::uint64_t>(n_channels); ++id) {
    const Eigen::MatrixXd q = u_table(id);
    Eigen::MatrixXd puy = Eigen::MatrixXd::Zero(nu, ny), puz = q.transpose() * pxyz;
    for (int r = 0; r < rows; ++r) puy.col(r % ny) += pxy(r) * q.row(r).transpose();
    Eigen::VectorXd py = puy.colwise().sum().transpose(), pz = pxyz.colwise().sum().transpose();

    // Direct sums: I(X;U|Y) and I(U;X,Y|Z).
    double ixu = 0.0, r2 = 0.0;
    for (int r = 0; r < rows; ++r) {
      for (int u = 0; u < nu; ++u) {
        const double p = pxy(r) * q(r, u);
        if (p <= 0.0) continue;
        ixu += p * std::log2(q(r, u) * py(r % ny) / puy(u, r % ny));
        for (int z = 0; z < nz; ++z) {
          const double pr = pxyz(r, z) * q(r, u);
          if (pr > 0.0) r2 += pr * std::log2(q(r, u) * pz(z) / puz(u, z));
        }
      }
    }
    ixu = std::max(0.0, ixu);
    r2 = std::max(0.0, r2);

    // Every g2: (u, z) -> xhat2, keeping the first minimizer.
    double d2 = std::numeric_limits<double>::infinity();
    std::uint32_t g2_best = 0;
    for (std::uint64_t g = 0; g < n_g2; ++g) {
      std::uint64_t v = g;
      double e = 0.0;
      for (int u = 0; u < nu; ++u) {
        for (int z = 0; z < nz; ++z) {
          const int k = static_cast<int>(v % static_cast<std::uint64_t>(nk2));
          v /= static_cast<std::uint64_t>(nk2);
          for (int r = 0; r < rows; ++r) e += pxyz(r, z) * q(r, u) * src.d2(r / ny, k);
        }
      }
      if (e < d2) {
        d2 = e;
        g2_best = static_cast<std::uint32_t>(g);
      }
    }

    if (res == 1) {
      for (int k = 0; k < nk1; ++k) {
        double d1 = 0.0;
        for (int r = 0; r < rows; ++r) d1 += pxy(r) * src.d1(r / ny, k);
        raw.push_back({ixu, r2, d1, d2, id, 0, g2_best, k});
      }
      continue;
    }

    // Cells (u, y) are independent given q: build each staircase and merge.
    std::vector<Stair> merged{{0.0, 0.0, 0}};
    for (int u = 0; u < nu; ++u) {
      for (int y = 0; y < ny; ++y) {
        const int cell = u * ny + y;
        const double w = puy(u, y);
        std::vector<Stair> opts;
        for (std::size_t o = 0; o < cell_options.size(); ++o) {
          double rate = 0.0, dist = 0.0;
          if (w > 0.0) {
            Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(nk1);
            for (int x = 0; x < nx; ++x) out += pxy(x * ny + y) * q(x * ny + y, u) / w * kgrid[static_cast<std::size_t>(cell_options[o][static_cast<std::size_t>(x)])];
            for (int x = 0; x < nx; ++x) {
              const double px_w = pxy(x * ny + y) * q(x * ny + y, u) / w;
              if (px_w <= 0.0) continue;
              const auto& row = kgrid[static_cast<std::size_t>(cell_options[o][static_cast<std::size_t>(x)])];
              for (int k = 0; k < nk1; ++k) {
                if (row(k) <= 0.0) continue;
                rate += px_w * row(k) * std::log2(row(k) / out(k));
                dist += px_w * row(k) * src.d1(x, k);
              }
            }
          }
          opts.push_back({w * std::max(0.0, rate), w * dist, static_cast<std::uint64_t>(o)});
          if (w <= 0.0) break;  // any option will do for an empty cell
        }
        prune(opts);
        std::vector<Stair> next;
        for (const auto& a : merged) {
          for (const auto& b : opts) next.push_back({a.rate + b.rate, a.dist + b.dist, a.choice | (b.choice << (8 * cell))});
        }
        prune(next);
        merged.swap(next);
      }
    }
    for (const auto& s : merged) raw.push_back({ixu + s.rate, r2, s.dist, d2, id, s.choice, g2_best, -1});
  }

  // Pareto filter on (R1, R2, D1, D2), all minimized.
  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
    if (a.r1 != b.r1) return a.r1 < b.r1;
    if (a.r2 != b.r2) return a.r2 < b.r2;
    if (a.d1 != b.d1) return a.d1 < b.d1;
    return a.d2 < b.d2;
  });
  std::vector<Raw> front;
  for (const auto& p : raw) {
    bool dominated = false;
    for (const auto& f : front) {
      if (f.r2 <= p.r2 + 1e-15 && f.d1 <= p.d1 + 1e-15 && f.d2 <= p.d2 + 1e-15) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(p);
  }

  std::vector<OraclePoint> out;
  for (const auto& f : front) {
    AuxiliarySystem aux;
    const Eigen::MatrixXd q = u_table(f.pu);
    aux.p_u = CondPMF({nx, ny}, nu, q);
    Eigen::MatrixXd t(rows * nu, nk1);
    for (int x = 0; x < nx; ++x) {
      for (int y = 0; y < ny; ++y) {
        for (int u = 0; u < nu; ++u) {
          const int cell = u * ny + y;
          Eigen::RowVectorXd row;
          if (f.xhat_const >= 0) {
            row = Eigen::RowVectorXd::Unit(nk1, f.xhat_const);
          } else {
            const auto o = static_cast<std::size_t>((f.choice >> (8 * cell)) & 0xff);
            row = kgrid[static_cast<std::size_t>(cell_options[o][static_cast<std::size_t>(x)])];
          }
          t.row((x * ny + y) * nu + u) = row;
        }
      }
    }
    aux.p_xhat1 = CondPMF({nx, ny, nu}, nk1, t);
    std::vector<int> g2(static_cast<std::size_t>(nu * nz));
    std::uint64_t v = f.g2;
    for (auto& k : g2) {
      k = static_cast<int>(v % static_cast<std::uint64_t>(nk2));
      v /= static_cast<std::uint64_t>(nk2);
    }
    aux.g2 = DeterministicMap({nu, nz}, nk2, g2);
    out.push_back({eval_cascade_point(src, aux), std::move(aux)});
  }
  return out;
}

std::optional<double> frontier_min_r1(const std::vector<OraclePoint>& frontier, double d1, double d2, double r2) {
  std::optional<double> best;
  for (const auto& p : frontier) {
    if (p.point.r2 <= r2 + 1e-12 && p.point.d1 <= d1 + 1e-12 && p.point.d2 <= d2 + 1e-12) {
      if (!best || p.point.r1 < *best) best = p.point.r1;
    }
  }
  return best;
}

}  // namespace cascade
