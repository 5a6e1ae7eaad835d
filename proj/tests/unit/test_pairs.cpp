#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "priq/error.hpp"
#include "priq/pairs.hpp"
#include "support.hpp"

using namespace priq;

namespace {

std::vector<double> tied_scores(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 100);
  std::vector<double> q(n);
  for (double& v : q) v = d(rng);  // integer scores: many ties
  return q;
}

void check_sample(const std::vector<double>& q, Polarity pol, double t, std::size_t n, std::uint64_t seed) {
  const auto pairs = sample_pairs(q, pol, t, n, seed);
  const auto m = oracle::pair_count(q, t);
  CHECK(pairs.size() == std::min<std::uint64_t>(n, m));
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  for (const auto& p : pairs) {
    CHECK(std::abs(q[p.i] - q[p.j]) > t);
    const int s = q[p.i] > q[p.j] ? 1 : -1;
    CHECK(p.y == (pol == Polarity::kMos ? s : -s));
    CHECK(seen.insert({std::min(p.i, p.j), std::max(p.i, p.j)}).second);
  }
}

}  // namespace

TEST_SUITE("pairs") {

TEST_CASE("max_pair_count matches brute force") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = tied_scores(150, seed);
    for (double t : {0.0, 0.5, 5.0, 25.0, 99.0, 100.0}) CHECK(max_pair_count(q, t) == oracle::pair_count(q, t));
  }
  const std::vector<double> distinct{1, 2, 3, 4, 5};
  CHECK(max_pair_count(distinct, 0.0) == 10);
}

TEST_CASE("T = 0 on distinct scores counts every pair") {
  std::vector<double> q(808);
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = 0.1 * k;
  CHECK(max_pair_count(q, 0.0) == 326028u);
  CHECK(326028u == 808u * 807u / 2u);
}

TEST_CASE("sampled pairs are distinct, eligible and correctly labelled") {
  const auto q = tied_scores(300, 42);
  for (double t : {0.0, 5.0, 10.0, 25.0}) {
    check_sample(q, Polarity::kDmos, t, 500, 1);        // rejection path
    check_sample(q, Polarity::kMos, t, 40000, 2);       // enumeration path
    check_sample(q, Polarity::kDmos, t, 10000000, 3);   // everything
  }
  CHECK(sample_pairs(q, Polarity::kDmos, 10.0, 500, 7) == sample_pairs(q, Polarity::kDmos, 10.0, 500, 7));
  CHECK(sample_pairs(q, Polarity::kDmos, 10.0, 500, 7) != sample_pairs(q, Polarity::kDmos, 10.0, 500, 8));
}

TEST_CASE("orientation is randomized") {
  const auto q = tied_scores(200, 5);
  int pos = 0;
  const auto pairs = sample_pairs(q, Polarity::kMos, 0.0, 2000, 1);
  for (const auto& p : pairs) pos += p.y > 0;
  CHECK(pos > 800);
  CHECK(pos < 1200);
}

TEST_CASE("no eligible pairs") {
  const std::vector<double> q{1.0, 2.0, 3.0};
  try {
    sample_pairs(q, Polarity::kDmos, 1e9, 10, 1);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNoEligiblePairs);
  }
}

TEST_CASE("gen_pairs_from_scores maps to image ids") {
  const auto& m = testing::small_corpus().manifest;
  const auto pairs = gen_pairs_from_scores(m, 5.0, 100, 3);
  std::map<std::int64_t, double> score;
  for (const auto& im : m.images) score[im.id] = im.score;
  for (const auto& p : pairs) {
    REQUIRE(score.count(p.i));
    REQUIRE(score.count(p.j));
    CHECK(p.y == (score[p.i] < score[p.j] ? 1 : -1));  // DMOS: lower is better
  }
}

TEST_CASE("vote aggregation") {
  CHECK(aggregate_votes(std::vector<int>{1, 1, -1}) == 1);
  CHECK(aggregate_votes(std::vector<int>{-1, 0}) == -1);
  CHECK(aggregate_votes(std::vector<int>{1, -1}) == 0);
  CHECK_THROWS_AS(aggregate_votes(std::vector<int>{}), Error);
  CHECK_THROWS_AS(aggregate_votes(std::vector<int>{2}), Error);

  const std::vector<Vote> votes{{1, 2, 1}, {2, 1, 1}, {2, 1, 1}, {3, 4, 1}, {4, 3, 1}, {5, 6, -1}};
  const auto pairs = pairs_from_votes(votes);
  // (1,2): +1 -1 -1 -> -1; (3,4): tie dropped; (5,6): -1.
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == PrefPair{1, 2, -1});
  CHECK(pairs[1] == PrefPair{5, 6, -1});
}

TEST_CASE("diff set is mirror closed") {
  const auto& c = testing::small_corpus();
  const auto pairs = gen_pairs_from_scores(c.manifest, 5.0, 50, 1);
  const auto d = build_diffset(pairs, c.features);
  REQUIRE(d.rows() == 2 * pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& fi = c.features.at(pairs[k].i);
    const auto& fj = c.features.at(pairs[k].j);
    for (std::size_t c2 = 0; c2 < kFeatureDim; ++c2) {
      CHECK(d.row(k)[c2] == fi[c2] - fj[c2]);
      CHECK(d.row(k + d.n_pairs)[c2] == -d.row(k)[c2]);
    }
    CHECK(d.y[k] == pairs[k].y);
    CHECK(d.y[k + d.n_pairs] == -pairs[k].y);
  }
  const std::vector<PrefPair> unknown{{1000, 1, 1}};
  CHECK_THROWS_AS(build_diffset(unknown, c.features), Error);
}

TEST_CASE("pair and vote files") {
  testing::TempDir dir;
  const std::vector<PrefPair> pairs{{3, 9, 1}, {9, 4, -1}};
  write_pair_file(dir / "p.csv", pairs, {"demo", 10.0, 2, 77});
  std::ifstream in(dir / "p.csv");
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  CHECK(first == "# source=demo threshold=10 pairs=2 seed=77");
  CHECK(second == "i,j,y");
  CHECK(read_pair_file(dir / "p.csv") == pairs);

  std::ofstream(dir / "v.csv") << "i,j,label\n1,2,1\n2,1,-1\n";
  const auto votes = read_vote_file(dir / "v.csv");
  REQUIRE(votes.size() == 2);
  CHECK(votes[1].label == -1);

  std::ofstream(dir / "bad.csv") << "i,j,y\n1,2,7\n";
  CHECK_THROWS_AS(read_pair_file(dir / "bad.csv"), Error);
}

}
