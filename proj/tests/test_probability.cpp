#include <doctest.h>

#include "cascade/errors.hpp"
#include "cascade/probability.hpp"
#include "oracles.hpp"

#include <sstream>

using namespace cascade;

namespace {

JointPMF bsc_pair(double crossover) {
  Eigen::ArrayXd p(4);
  p << 0.5 * (1 - crossover), 0.5 * crossover, 0.5 * crossover, 0.5 * (1 - crossover);
  return JointPMF({2, 2}, p);
}

}  // namespace

TEST_CASE("JointPMF construction validates its table") {
  CHECK_THROWS_AS(JointPMF({2}, Eigen::ArrayXd::Constant(2, 0.4)), ArgumentError);
  Eigen::ArrayXd neg(2);
  neg << 1.5, -0.5;
  CHECK_THROWS_AS(JointPMF({2}, neg), ArgumentError);
  CHECK_THROWS_AS(JointPMF({2, 2}, Eigen::ArrayXd::Constant(3, 1.0 / 3)), ArgumentError);
  CHECK_THROWS_AS(JointPMF({0}, Eigen::ArrayXd()), ArgumentError);
  CHECK_THROWS_AS(table_size({1000, 1000, 11}), ResourceError);
  CHECK_NOTHROW(JointPMF({2}, Eigen::ArrayXd::Constant(2, 0.5 + 1e-13)));
}

TEST_CASE("row-major indexing and marginals") {
  std::mt19937_64 rng(1);
  const JointPMF p = oracle::random_pmf({2, 3, 4}, rng);
  const int idx[3] = {1, 2, 3};
  CHECK(p.flat_index(idx) == 1 * 12 + 2 * 4 + 3);
  int back[3];
  p.unflatten(23, back);
  CHECK(back[0] == 1);
  CHECK(back[1] == 2);
  CHECK(back[2] == 3);

  const JointPMF m = p.marginal({2, 0});  // order as given
  CHECK(m.sizes() == std::vector<int>{4, 2});
  for (int z = 0; z < 4; ++z) {
    for (int x = 0; x < 2; ++x) {
      double s = 0;
      for (int y = 0; y < 3; ++y) {
        const int i[3] = {x, y, z};
        s += p(i);
      }
      const int j[2] = {z, x};
      CHECK(m(j) == doctest::Approx(s).epsilon(1e-15));
    }
  }
  CHECK_THROWS_AS(p.marginal({0, 0}), ArgumentError);
  CHECK_THROWS_AS(p.marginal({3}), ArgumentError);
}

TEST_CASE("entropy examples") {
  CHECK(entropy(JointPMF::uniform({4}), {0}) == doctest::Approx(2.0).epsilon(1e-15));
  Eigen::ArrayXd point(3);
  point << 0, 1, 0;
  CHECK(entropy(JointPMF({3}, point), {0}) == 0.0);
  Eigen::ArrayXd bern(2);
  bern << 0.9, 0.1;
  CHECK(std::abs(entropy(JointPMF({2}, bern), {0}) - 0.468996) < 1e-6);
  CHECK_THROWS_AS(entropy(JointPMF::uniform({2}), {1}), ArgumentError);
  CHECK_THROWS_AS(entropy(JointPMF::uniform({2}), {}), ArgumentError);
}

TEST_CASE("mutual information examples") {
  CHECK(oracle::near(mutual_information(JointPMF::uniform({2, 2}), {0}, {1}), 0.0, 1e-15));
  CHECK(mutual_information(bsc_pair(0.0), {0}, {1}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(mutual_information(bsc_pair(0.1), {0}, {1}) - 0.531004) < 1e-6);
  CHECK_THROWS_AS(conditional_mutual_information(JointPMF::uniform({2, 2, 2}), {0}, {0, 1}), ArgumentError);
  CHECK_THROWS_AS(conditional_mutual_information(JointPMF::uniform({2, 2, 2}), {0}, {1}, {1}), ArgumentError);
}

TEST_CASE("conditional MI matches the enumeration oracle and is symmetric") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const JointPMF p = oracle::random_pmf({2, 3, 2, 2}, rng, 0.2);
    const auto j = oracle::from_pmf(p);
    const double lib = conditional_mutual_information(p, {0, 3}, {1}, {2});
    CHECK(oracle::near(lib, oracle::I(j, {0, 3}, {1}, {2}), 1e-12));
    CHECK(lib == conditional_mutual_information(p, {1}, {0, 3}, {2}));
    CHECK(lib == conditional_mutual_information(p, {1}, {3, 0}, {2}));
    CHECK(lib >= 0.0);
    CHECK(oracle::near(entropy(p, {2, 0}), oracle::H(j, {0, 2}), 1e-12));
  }
}

TEST_CASE("Markov chain check") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd px = oracle::random_simplex(3, rng).matrix();
    const JointPMF p = compose(px, oracle::random_channel({3}, 2, rng), oracle::random_channel({2}, 3, rng));
    CHECK(check_markov_chain(p, {0}, {1}, {2}) <= 1e-12);
    const JointPMF q = oracle::random_pmf({2, 2, 2}, rng);
    CHECK(check_markov_chain(q, {0}, {1}, {2}) == conditional_mutual_information(q, {0}, {2}, {1}));
  }
  // X = Z uniform, Y independent.
  Eigen::ArrayXd p(8);
  p << 0.25, 0, 0.25, 0, 0, 0.25, 0, 0.25;
  CHECK(check_markov_chain(JointPMF({2, 2, 2}, p), {0}, {1}, {2}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("extend, product and deterministic maps") {
  std::mt19937_64 rng(11);
  const JointPMF base = oracle::random_pmf({2, 3}, rng);
  const CondPMF ch = oracle::random_channel({3, 2}, 2, rng);
  const JointPMF e = extend(base, ch, {1, 0});
  const auto ref = oracle::append(oracle::from_pmf(base), ch, {1, 0});
  REQUIRE(ref.size() == e.num_entries());
  for (std::size_t f = 0; f < ref.size(); ++f) CHECK(e.probs()(static_cast<Eigen::Index>(f)) == doctest::Approx(ref[f].p).epsilon(1e-15));

  const DeterministicMap xor_map({2, 2}, 2, {0, 1, 1, 0});
  const JointPMF two = JointPMF::uniform({2, 2});
  const JointPMF with = extend(two, xor_map, {0, 1});
  CHECK(entropy(with, {2}) == doctest::Approx(1.0));
  CHECK(conditional_mutual_information(with, {2}, {0, 1}) == doctest::Approx(1.0));
  CHECK(entropy(with, {0, 1, 2}) == doctest::Approx(2.0));
  const int in[2] = {1, 0};
  CHECK(xor_map(std::span<const int>(in, 2)) == 1);
  CHECK(CondPMF::from_function({2, 2}, 2, xor_map.outputs()).table()(3, 0) == 1.0);
  CHECK_THROWS_AS(extend(two, xor_map, {0}), ArgumentError);
  CHECK_THROWS_AS(extend(two, xor_map, {0, 0}), ArgumentError);
  CHECK_THROWS_AS(DeterministicMap({2}, 2, {0}), ArgumentError);

  const JointPMF prod = product(bsc_pair(0.2), JointPMF::uniform({3}));
  CHECK(prod.sizes() == std::vector<int>{2, 2, 3});
  CHECK(oracle::near(mutual_information(prod, {0, 1}, {2}), 0.0, 1e-15));
}

TEST_CASE("text formats round-trip exactly") {
  std::mt19937_64 rng(5);
  const JointPMF p = oracle::random_pmf({2, 3, 2}, rng);
  std::stringstream ss;
  write_pmf(ss, p);
  const JointPMF q = read_pmf(ss);
  CHECK(q.sizes() == p.sizes());
  CHECK((q.probs() == p.probs()).all());

  const CondPMF c = oracle::random_channel({2, 2}, 3, rng);
  std::stringstream cs;
  write_condpmf(cs, c);
  CHECK(read_condpmf(cs).table() == c.table());

  const DeterministicMap m = oracle::random_map({3, 2}, 4, rng);
  std::stringstream ms;
  write_map(ms, m);
  CHECK(read_map(ms).outputs() == m.outputs());

  std::stringstream bad("jointpmf 1 2\n# comment\n1 0.5\n0 0.5\n");
  CHECK_THROWS_AS(read_pmf(bad), ArgumentError);
  std::stringstream ok("jointpmf 1 2\n\n# comment\n0 0.25\n1 0.75\n");
  CHECK(read_pmf(ok).probs()(1) == 0.75);
}

TEST_CASE("Kaspi lemma quantities vanish under the premise") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 30; ++t) {
    const int k = 2 + t % 2;
    const auto v = kaspi_lemma_check(oracle::random_pmf({k, k}, rng), oracle::random_pmf({k, k}, rng),
                                     oracle::random_map({k, k}, k, rng), oracle::random_map({k, k, k}, k, rng));
    CHECK(v.max() <= 1e-10);
  }
  const auto c = kaspi_lemma_check(bsc_pair(0.3), bsc_pair(0.2), DeterministicMap::constant({2, 2}, 1, 0),
                                   DeterministicMap::constant({2, 2, 1}, 1, 0));
  CHECK(c.max() <= 1e-12);
  CHECK_THROWS_AS(kaspi_lemma_check(bsc_pair(0.3), bsc_pair(0.2), DeterministicMap::constant({2, 3}, 1, 0),
                                    DeterministicMap::constant({2, 2, 1}, 1, 0)),
                  ArgumentError);
}

TEST_CASE("Kaspi control: M2 reading A2 breaks the identities") {
  // m1 = A1, m2 = A2 xor B1 exposes A2 at the second node.
  const JointPMF base = product(bsc_pair(0.2), bsc_pair(0.3));  // A1 B1 A2 B2
  const JointPMF with_m1 = extend(base, DeterministicMap({2, 2}, 2, {0, 0, 1, 1}), {0, 2});
  const JointPMF joint = extend(with_m1, DeterministicMap({2, 2}, 2, {0, 1, 1, 0}), {1, 2});
  CHECK(kaspi_values(joint).max() > 1e-3);
}
