#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "oracles.hpp"
#include "priq/error.hpp"
#include "priq/eval.hpp"
#include "support.hpp"

using namespace priq;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::vector<double> v(n);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> small(0, 9);
  for (double& x : v) x = ties ? small(rng) : nd(rng);
  return v;
}

Dataset small_dataset() {
  const auto& c = testing::small_corpus();
  return {c.manifest, c.features, {}};
}

Protocol small_protocol(int trials) {
  Protocol p;
  p.trials = trials;
  p.per_dataset = {{4, 5.0, 200}};
  return p;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("perfect agreement and reversal") {
  std::mt19937_64 rng(1);
  const auto a = random_vec(rng, 50, false);
  auto neg = a;
  for (double& v : neg) v = -v;
  CHECK(srcc(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(krcc(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(plcc(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(srcc(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(krcc(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(plcc(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("metrics match definitional oracles, with and without ties") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const bool ties = k % 2;
    const std::size_t n = 3 + rng() % 150;
    const auto a = random_vec(rng, n, ties);
    const auto b = random_vec(rng, n, ties && k % 4 == 1);
    bool deg = false;
    const double s = srcc(a, b, &deg);
    if (deg) continue;
    CHECK(std::abs(s - oracle::spearman(a, b)) <= 1e-12);
    CHECK(std::abs(krcc(a, b) - oracle::kendall_tau_b(a, b)) <= 1e-12);
    CHECK(std::abs(plcc(a, b) - oracle::pearson(a, b)) <= 1e-12);
  }
}

TEST_CASE("average ranks") {
  const std::vector<double> v{3, 1, 3, 2};
  CHECK(average_ranks(v) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("rank metrics ignore strictly increasing transforms") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_vec(rng, 80, k % 2);
    const auto b = random_vec(rng, 80, false);
    std::vector<double> t(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) t[i] = std::exp(0.3 * a[i]) + 5.0 * a[i] * a[i] * a[i];
    CHECK(std::abs(srcc(a, b) - srcc(t, b)) <= 1e-12);
    CHECK(std::abs(krcc(a, b) - krcc(t, b)) <= 1e-12);
  }
}

TEST_CASE("constant input is flagged and scores 0") {
  const std::vector<double> c(10, 4.0);
  std::vector<double> v(10);
  for (int k = 0; k < 10; ++k) v[k] = k;
  for (auto fn : {&srcc, &krcc, &plcc}) {
    bool deg = false;
    CHECK(fn(c, v, &deg) == 0.0);
    CHECK(deg);
    CHECK(fn(v, c, &deg) == 0.0);
    fn(v, v, &deg);
    CHECK_FALSE(deg);
  }
  CHECK_THROWS_AS(srcc(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  CHECK_THROWS_AS(plcc(v, std::vector<double>{1, 2, 3}), Error);
}

TEST_CASE("logistic fit recovers a planted curve") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  const LogisticParams truth{80.0, 0.1, 50.0, 0.2, 30.0};
  std::vector<double> pred(150), target(150);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    pred[k] = u(rng);
    target[k] = vqeg_logistic(truth, pred[k]);
  }
  const auto fit = logistic_remap(pred, target);
  double sse = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) sse += std::pow(fit.remapped[k] - target[k], 2);
  const auto [lo, hi] = std::minmax_element(target.begin(), target.end());
  CHECK(std::sqrt(sse / pred.size()) < 1e-3 * (*hi - *lo));
  CHECK_FALSE(fit.degenerate);
}

TEST_CASE("logistic remap never loses linear correlation") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 30; ++k) {
    std::vector<double> pred(60), target(60);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred[i] = 50 + 20 * nd(rng);
      target[i] = (k % 3 == 0 ? -1 : 1) * pred[i] * (0.5 + 0.01 * pred[i]) + 10 * nd(rng);
    }
    const auto fit = logistic_remap(pred, target);
    CHECK(plcc(fit.remapped, target) >= plcc(pred, target) - 1e-9);
  }
  const std::vector<double> same{1, 2, 3, 5, 8, 13};
  CHECK(plcc(logistic_remap(same, same).remapped, same) >= plcc(same, same) - 1e-9);
}

TEST_CASE("constant predictions fall back to identity") {
  const std::vector<double> pred(8, 2.0);
  const std::vector<double> target{1, 2, 3, 4, 5, 6, 7, 8};
  const auto fit = logistic_remap(pred, target);
  CHECK(fit.degenerate);
  CHECK(fit.warning.has_value());
  CHECK(fit.remapped == pred);
  bool deg = false;
  CHECK(plcc(fit.remapped, target, &deg) == 0.0);
  CHECK(deg);
  CHECK_THROWS_AS(logistic_remap(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 4}), Error);
}

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(1, 0, 0) == derive_seed(1, 0, 0));
  CHECK(derive_seed(1, 0, 0) != derive_seed(1, 0, 1));
  CHECK(derive_seed(1, 0, 0) != derive_seed(1, 1, 0));
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
}

TEST_CASE("single trial summary equals the trial") {
  const std::vector<Dataset> ds{small_dataset()};
  const auto s = run_trials(ds, small_protocol(1), 9);
  REQUIRE(s.trials.size() == 1);
  const auto& t = s.trials[0];
  REQUIRE(t.ok);
  CHECK(s.median_srcc == t.srcc);
  CHECK(s.median_krcc == t.krcc);
  CHECK(s.median_plcc == t.plcc);
  CHECK(s.srcc_std == 0.0);
  CHECK(s.trials_completed == 1);
  for (const auto& [tag, v] : t.breakdown) {
    CHECK((tag == "wn" || tag == "gblur"));
    CHECK(std::isfinite(v));
  }
  CHECK(t.srcc > 0.5);
}

TEST_CASE("trials are reproducible and summaries recompute from the list") {
  const std::vector<Dataset> ds{small_dataset()};
  const auto a = run_trials(ds, small_protocol(3), 21);
  const auto b = run_trials(ds, small_protocol(3), 21);
  REQUIRE(a.trials.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(a.trials[k] == b.trials[k]);
  CHECK(run_trial(ds, small_protocol(3), 1, 21) == a.trials[1]);

  std::vector<double> s;
  for (const auto& t : a.trials) s.push_back(t.srcc);
  std::sort(s.begin(), s.end());
  CHECK(a.median_srcc == s[1]);
  const double m = (s[0] + s[1] + s[2]) / 3;
  const double sd = std::sqrt(((s[0] - m) * (s[0] - m) + (s[1] - m) * (s[1] - m) + (s[2] - m) * (s[2] - m)) / 2);
  CHECK(a.srcc_std == doctest::Approx(sd).epsilon(1e-12));

  ExperimentSummary copy = a;
  copy.trials[2].ok = false;
  summarize(copy);
  CHECK(copy.trials_completed == 2);
  CHECK(copy.trials_failed == 1);
  CHECK(copy.median_srcc == doctest::Approx(0.5 * (a.trials[0].srcc + a.trials[1].srcc)));
}

TEST_CASE("infeasible protocols") {
  const std::vector<Dataset> ds{small_dataset()};
  auto p = small_protocol(1);
  p.per_dataset[0].n_train_groups = 6;
  try {
    run_trials(ds, p, 1);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasible);
  }
  const std::vector<double> grid{5.0, 1e9};
  const auto sweep = threshold_sweep(ds[0], small_protocol(2), grid, 3);
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].summary.feasible());
  CHECK_FALSE(sweep[1].summary.feasible());
  CHECK(sweep[1].summary.trials_failed == 2);
}

TEST_CASE("sweep points share splits") {
  const std::vector<Dataset> ds{small_dataset()};
  const std::vector<double> grid{0.0, 5.0};
  const auto sweep = threshold_sweep(ds[0], small_protocol(2), grid, 3);
  for (int t = 0; t < 2; ++t) {
    CHECK(sweep[0].summary.trials[t].seed == sweep[1].summary.trials[t].seed);
    CHECK(sweep[0].summary.trials[t].n_train == sweep[1].summary.trials[t].n_train);
  }
}

TEST_CASE("hybrid training over manifests on different scales") {
  Dataset a = small_dataset();
  Dataset b = small_dataset();
  b.manifest.name = "rescaled";
  b.manifest.score_max = 1.0;
  for (auto& im : b.manifest.images) im.score /= 100.0;
  Protocol p;
  p.trials = 1;
  p.per_dataset = {{4, 5.0, 150}, {3, 0.05, 150}};
  const std::vector<Dataset> ds{a, b};
  const auto s = run_trials(ds, p, 4);
  REQUIRE(s.trials_completed == 1);
  const auto& t = s.trials[0];
  CHECK(t.datasets.size() == 2);
  CHECK(t.n_pairs == 300);
  CHECK(t.breakdown.count("rescaled/wn") == 1);
  const double w0 = static_cast<double>(t.datasets[0].n_test);
  const double w1 = static_cast<double>(t.datasets[1].n_test);
  CHECK(t.srcc == doctest::Approx((w0 * t.datasets[0].srcc + w1 * t.datasets[1].srcc) / (w0 + w1)));
}

TEST_CASE("label score override drives pairs only") {
  Dataset d = small_dataset();
  d.label_scores = d.manifest.scores();
  const std::vector<Dataset> with{d};
  const std::vector<Dataset> without{small_dataset()};
  CHECK(run_trial(with, small_protocol(1), 0, 5) == run_trial(without, small_protocol(1), 0, 5));
  d.label_scores.pop_back();
  const std::vector<Dataset> bad{d};
  CHECK_FALSE(run_trials(bad, small_protocol(1), 5).trials[0].ok);
}

TEST_CASE("reports") {
  testing::TempDir dir;
  const std::vector<Dataset> ds{small_dataset()};
  const auto s = run_trials(ds, small_protocol(2), 8);
  write_experiment_report(dir / "r.json", R"({"trials": 2})", s);
  std::ifstream in(dir / "r.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["trials"].size() == 2);
  CHECK(j["summary"]["trials_completed"] == 2);
  CHECK(j["config"]["trials"] == 2);
  CHECK(j["trials"][0].contains("breakdown"));
  CHECK(format_summary_table(s).find("SRCC") != std::string::npos);
}

}
