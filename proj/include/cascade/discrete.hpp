#pragma once

#include "cascade/probability.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace cascade {

// Variables of the source joint: X = 0, Y = 1, Z = 2.
struct SourceSpec {
  JointPMF pmf;
  Eigen::MatrixXd d1;                 // d1(x, xhat1)
  Eigen::MatrixXd d2;                 // d2(x, xhat2)
  std::optional<Eigen::MatrixXd> d3;  // d3(z, zhat)

  int x_size() const { return pmf.size(0); }
  int y_size() const { return pmf.size(1); }
  int z_size() const { return pmf.size(2); }
  void validate() const;
};

struct AuxiliarySystem {
  std::optional<CondPMF> p_u;       // p(u|x,y); U1 in the two-way settings
  std::optional<CondPMF> p_xhat1;   // p(xhat1|x,y,u), helper: p(xhat1|x,y,u1,uh)
  std::optional<CondPMF> p_v;       // p(v|x,y,u), helper: U2 as p(u2|x,y,u1,uh)
  std::optional<CondPMF> p_u2;      // p(u2|z,u1) or p(u2|z,u1,v)
  std::optional<CondPMF> p_uh;      // p(uh|y)
  std::optional<DeterministicMap> g2;
  std::optional<DeterministicMap> g3;
};

struct RegionPoint {
  double r1 = 0.0, r2 = 0.0, r3 = 0.0, r4 = 0.0, rh = 0.0;
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
};

// Cascade: R1 >= I(X;Xhat1,U|Y), R2 >= I(U;X,Y|Z); g2 on (U,Z).
RegionPoint eval_cascade_point(const SourceSpec& src, const AuxiliarySystem& aux);
// Triangular: adds R3 >= I(X,Y;V|U,Z); g2 on (U,V,Z).
RegionPoint eval_triangular_point(const SourceSpec& src, const AuxiliarySystem& aux);
// Two-way cascade: R3 >= I(U2;Z|U1,X,Y); g2 on (U1,Z), g3 on (U1,U2,X,Y).
RegionPoint eval_two_way_cascade_point(const SourceSpec& src, const AuxiliarySystem& aux);
// Two-way triangular: R3 >= I(X,Y;V|Z,U1), R4 >= I(U2;Z|U1,V,X,Y); g2 on (U1,V,Z),
// g3 on (U1,U2,V,X,Y).
RegionPoint eval_two_way_triangular_point(const SourceSpec& src, const AuxiliarySystem& aux);
// Triangular with a helper: Uh ~ p(uh|y), U1 ~ p(u1|x,y,uh), U2 ~ p(u2|x,y,u1,uh) (held
// in p_v); R1 >= I(X;Xhat1,U1|Y,Uh), R2 >= I(U1;X,Y|Z,Uh),
// R3 >= I(X,Y;U2|U1,Uh,Z), Rh >= I(Uh;Y|Z); g2 on (U1,U2,Uh,Z).
RegionPoint eval_helper_triangular_point(const SourceSpec& src, const AuxiliarySystem& aux);

// E d(joint[target], joint[var]).
double expected_distortion(const JointPMF& joint, int target, int var, const Eigen::MatrixXd& d);
// E d(joint[target], map(joint[inputs])).
double expected_distortion(const JointPMF& joint, int target, const DeterministicMap& map, const VarSet& inputs,
                           const Eigen::MatrixXd& d);

// Conditional rate-distortion by Blahut-Arimoto: minimize I(X;Xhat|W) subject
// to E d(X,Xhat) <= target, given p(w) and p(x|w) (rows indexed by w).
struct ConditionalRD {
  double rate = 0.0;        // bits
  double distortion = 0.0;
  double slope = 0.0;       // nats per unit distortion; +inf at the minimum-distortion end
  Eigen::MatrixXd output;   // r(xhat|w), rows w
  std::vector<Eigen::MatrixXd> channel;  // channel[w](x, xhat)
};
ConditionalRD conditional_rate_distortion(const Eigen::VectorXd& pw, const Eigen::MatrixXd& px_given_w,
                                          const Eigen::MatrixXd& d, double target);

struct SearchOptions {
  int u_size = 2;
  int restarts = 16;
  double tolerance = 1e-6;  // stop when R1 improves by less than this
  int max_iterations = 200;  // exponentiated-gradient steps per penalty round
  std::uint64_t seed = 0;
};

struct SearchResult {
  double r1 = 0.0;
  AuxiliarySystem aux;
  RegionPoint point;
  int restart = -1;  // -1 for deterministic candidates and closed-form cases
};

SearchResult min_r1_cascade_search(const SourceSpec& src, double d1, double d2, double r2, const SearchOptions& opt = {});

struct OracleBudget {
  int u_size = 2;
  int resolution = 3;  // probability levels per simplex coordinate
};

struct OraclePoint {
  RegionPoint point;
  AuxiliarySystem aux;
};

// Enumerates quantized p(u|x,y) and p(xhat1|x,y,u) on a simplex grid with
// step 1/(resolution-1) and every g2, and returns the Pareto frontier of
// (R1, R2, D1, D2). resolution 1 keeps only input-independent point-mass
// channels.
std::vector<OraclePoint> brute_force_region_oracle(const SourceSpec& src, const OracleBudget& budget);

// Smallest R1 on a frontier meeting the constraints, or nullopt.
std::optional<double> frontier_min_r1(const std::vector<OraclePoint>& frontier, double d1, double d2, double r2);

// Slack allowed between search and oracle at a grid resolution: the entropy
// continuity bound for a total-variation perturbation of half a grid step.
double oracle_lipschitz_slack(int resolution, int alphabet);

// Text format: a jointpmf block, then "distortion <name> <rows> <cols>" blocks.
void write_source(std::ostream& os, const SourceSpec& src);
SourceSpec read_source(std::istream& is);
// Text format: "channel <name>" followed by a condpmf block, or "function <name>"
// followed by a map block. Names: p_u p_xhat1 p_v p_u2 p_uh g2 g3.
void write_aux(std::ostream& os, const AuxiliarySystem& aux);
AuxiliarySystem read_aux(std::istream& is);

}  // namespace cascade
