#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "peerlearn/error.hpp"
#include "peerlearn/sim/simulator.hpp"

using namespace peerlearn;
using namespace peerlearn::sim;

TEST_CASE("cohort generation is deterministic") {
  auto a = generate_cohort(30, 20, 3, 42);
  auto b = generate_cohort(30, 20, 3, 42);
  CHECK(a == b);
  CHECK_FALSE(a == generate_cohort(30, 20, 3, 43));
  CHECK(a.students.size() == 30);
  CHECK(a.questions.size() == 20);
  for (const auto& s : a.students) CHECK(s.true_ability.size() == 3);
  for (std::size_t i = 0; i < a.questions.size(); ++i) {
    CHECK(a.questions[i].tags == std::vector<std::size_t>{i % 3});
    CHECK(a.questions[i].correct_index >= 0);
    CHECK(a.questions[i].correct_index < a.questions[i].choices);
    CHECK(a.questions[i].latent_quality >= 0.0);
    CHECK(a.questions[i].latent_quality <= 1.0);
  }
}

TEST_CASE("cohort generation validates sizes") {
  CHECK_THROWS_AS(generate_cohort(10, 0, 1, 1), Error);
  CHECK_THROWS_AS(generate_cohort(0, 10, 1, 1), Error);
  CHECK_THROWS_AS(generate_cohort(10, 10, 0, 1), Error);
}

TEST_CASE("ability sample mean within three standard errors") {
  auto f = generate_cohort(10000, 1, 1, 2024);
  double sum = 0;
  for (const auto& s : f.students) sum += s.true_ability[0];
  const double mean = sum / 10000;
  CHECK(std::fabs(mean) <= 3 * 1.0 / std::sqrt(10000.0));
}

TEST_CASE("rasch probability") {
  SyntheticStudent s{{1.0, -1.0}, {}};
  SyntheticQuestion q;
  q.tags = {0};
  q.true_difficulty = 1.0;
  CHECK(rasch_probability(s, q) == doctest::Approx(0.5));
  q.tags = {0, 1};
  q.true_difficulty = -1.0;
  CHECK(rasch_probability(s, q) == doctest::Approx(1 / (1 + std::exp(-1.0))));
}

TEST_CASE("spearman matches the counting oracle") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> small(0, 5);  // many ties
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + trial % 40;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = trial % 2 ? small(rng) : normal(rng);
      b[i] = a[i] + (trial % 3 ? small(rng) : normal(rng));
    }
    auto got = spearman(a, b);
    bool constant_a = std::all_of(a.begin(), a.end(), [&](double x) { return x == a[0]; });
    bool constant_b = std::all_of(b.begin(), b.end(), [&](double x) { return x == b[0]; });
    if (constant_a || constant_b) {
      CHECK_FALSE(got);
      continue;
    }
    REQUIRE(got);
    CHECK(*got == doctest::Approx(oracle::spearman(a, b)).epsilon(1e-12));
  }
  CHECK_FALSE(spearman({1, 1, 1}, {1, 2, 3}));
  CHECK(*spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
}

TEST_CASE("zero attempts leave every rating at the start") {
  auto f = generate_cohort(20, 10, 2, 5);
  auto r = run_simulation(f, Policy::Random, 0, 5);
  CHECK(r.attempts_total == 0);
  REQUIRE(r.spearman_by_topic.size() == 2);
  CHECK_FALSE(r.spearman_by_topic[0]);
  CHECK_FALSE(r.spearman_by_topic[1]);
  CHECK_FALSE(r.mean_spearman());
}

TEST_CASE("simulation is reproducible and recovers ability") {
  auto f = generate_cohort(60, 40, 1, 9);
  for (Policy p : {Policy::Random, Policy::Recommended}) {
    auto a = run_simulation(f, p, 30, 11);
    auto b = run_simulation(f, p, 30, 11);
    CHECK(a == b);
    CHECK(a.attempts_total == 60 * 30);
    CHECK(a.seed == 11);
    CHECK(a.mean_expected_success > 0.0);
    CHECK(a.mean_expected_success < 1.0);
  }
  auto few = run_simulation(f, Policy::Random, 5, 11);
  auto many = run_simulation(f, Policy::Random, 40, 11);
  REQUIRE(few.mean_spearman());
  REQUIRE(many.mean_spearman());
  CHECK(*many.mean_spearman() > 0.7);
  CHECK(*many.mean_spearman() >= *few.mean_spearman());
  CHECK(*many.rmse_difficulty <= *few.rmse_difficulty);
}

TEST_CASE("policy comparison") {
  auto f = generate_cohort(20, 15, 2, 4);
  std::vector<std::uint64_t> seeds{1, 2, 3};
  auto self = compare_policies(f, 10, seeds, Policy::Random, Policy::Random);
  CHECK(self.pairs.size() == 3);
  CHECK(self.mean_difference == 0.0);
  for (std::size_t i = 0; i < seeds.size(); ++i) CHECK(self.pairs[i].seed == seeds[i]);

  auto a = compare_policies(f, 10, seeds);
  auto b = compare_policies(f, 10, seeds);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].first == b.pairs[i].first);
    CHECK(a.pairs[i].second == b.pairs[i].second);
  }
  double mean = 0;
  for (auto& p : a.pairs) mean += p.difference() / a.pairs.size();
  CHECK(a.mean_difference == doctest::Approx(mean));
  CHECK_THROWS_AS(compare_policies(f, 10, {1}), Error);
}

TEST_CASE("report csv layout") {
  auto f = generate_cohort(10, 6, 2, 1);
  auto r = run_simulation(f, Policy::Random, 4, 1);
  auto rows = oracle::parse_csv(report_csv(r));
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == std::vector<std::string>{"topic", "spearman"});
  CHECK(rows[1][0] == "topic-1");
  CHECK(rows[2][0] == "topic-2");
  bool has_mean = false;
  for (auto& row : rows) has_mean = has_mean || row[0] == "mean";
  CHECK(has_mean);
  CHECK(parse_policy("recommended") == Policy::Recommended);
  CHECK_THROWS_AS(parse_policy("greedy"), Error);
}
