#include <algorithm>

#include "doctest.h"
#include "peerlearn/error.hpp"
#include "peerlearn/recommend/recommender.hpp"
#include "world.hpp"

using namespace peerlearn;
using recommend::ResourceCard;
using recommend::SortKey;
using world::World;

namespace {

std::vector<ResourceId> ids(const std::vector<ResourceCard>& cards) {
  std::vector<ResourceId> out;
  for (auto& c : cards) out.push_back(c.resource);
  return out;
}

}  // namespace

TEST_CASE("personal fit arithmetic") {
  recommend::FitInputs in{0.65, 5.0, false};
  CHECK(recommend::personal_fit(in) == doctest::Approx(1.0));

  for (double wg : {0.0, 0.3, 1.0}) {
    recommend::FitParams p;
    p.weights = {wg, 1.0 - wg, 0.0};
    recommend::FitInputs at_target{0.65, 1.0, false};
    CHECK(recommend::personal_fit(at_target, p) == doctest::Approx(wg));
  }

  recommend::FitInputs fresh{0.4, 3.0, false}, seen{0.4, 3.0, true};
  CHECK(recommend::personal_fit(seen) < recommend::personal_fit(fresh));

  for (double p = 0.0; p <= 1.0; p += 0.01) {
    const double f = recommend::personal_fit({p, std::nullopt, false});
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("fit weights must lie on the simplex") {
  CHECK_NOTHROW(recommend::validate(recommend::FitWeights{0.5, 0.3, 0.2}));
  CHECK_THROWS_AS(recommend::validate(recommend::FitWeights{0.5, 0.3, 0.3}), Error);
  CHECK_THROWS_AS(recommend::validate(recommend::FitWeights{1.2, -0.2, 0.0}), Error);
}

TEST_CASE("sort keys and tie breaks") {
  std::vector<ResourceCard> cards(3);
  const double diffs[] = {1100, 900, 1300};
  for (int i = 0; i < 3; ++i) {
    cards[i].resource = ResourceId{static_cast<std::uint64_t>(i + 1)};
    cards[i].difficulty = diffs[i];
    cards[i].created_at = i;
  }
  auto by_diff = recommend::sort_cards(cards, SortKey::Difficulty);
  CHECK(by_diff[0].difficulty == 1300);
  CHECK(by_diff[1].difficulty == 1100);
  CHECK(by_diff[2].difficulty == 900);

  cards[0].quality = cards[1].quality = 4.0;
  cards[0].created_at = 10;
  cards[1].created_at = 20;
  cards[2].quality = 3.0;
  auto by_q = recommend::sort_cards(cards, SortKey::Quality);
  CHECK(ids(by_q) == std::vector<ResourceId>{ResourceId{2}, ResourceId{1}, ResourceId{3}});

  cards[1].created_at = 10;  // full tie: lower id
  by_q = recommend::sort_cards(cards, SortKey::Quality);
  CHECK(by_q[0].resource == ResourceId{1});

  cards[0].personal_fit = 0.2;
  cards[1].personal_fit = 0.9;
  cards[2].personal_fit = 0.9;
  cards[2].created_at = 30;
  auto rec = recommend::sort_cards(cards, SortKey::Recommended);
  CHECK(ids(rec) == std::vector<ResourceId>{ResourceId{3}, ResourceId{2}, ResourceId{1}});

  cards[0].attempts_count = 5;
  CHECK(recommend::sort_cards(cards, SortKey::Responses)[0].resource == ResourceId{1});
}

TEST_CASE("filters on the search fixture") {
  World w({"SQL", "Security"});
  const TopicId sql = w.topics[0], sec = w.topics[1];
  UserId author = w.student("author");
  auto m1 = w.mcq(author, {sql}, 4, 0, false, "Select all rows");
  auto m2 = w.mcq(author, {sql}, 4, 0, false, "GROUP BY semantics");
  auto n1 = w.note(author, {sql}, "Joins cheat sheet");
  auto m3 = w.mcq(author, {sec}, 4, 0, false, "Password hashing");
  w.mcq(author, {sql}, 4, 0, true, "draft select");  // never listed

  UserId s = w.student();

  recommend::SearchQuery q;
  q.kinds = {content::ResourceKind::Mcq};
  q.topics = {sql};
  auto hits = ids(w.eng.search(s, w.off, q));
  std::sort(hits.begin(), hits.end());
  CHECK(hits == std::vector<ResourceId>{m1, m2});

  CHECK(w.eng.search(s, w.off, {}).size() == 4);

  recommend::SearchQuery kw;
  kw.keywords = "SELECT";
  CHECK(ids(w.eng.search(s, w.off, kw)) == std::vector<ResourceId>{m1});

  w.eng.attempt(s, m1, 1, w.tick());
  w.eng.attempt(s, m2, 0, w.tick());
  w.eng.attempt(s, m3, 0, w.tick());
  recommend::SearchQuery wrong;
  wrong.status = {recommend::StatusFilter::IncorrectlyAnswered};
  CHECK(ids(w.eng.search(s, w.off, wrong)) == std::vector<ResourceId>{m1});

  recommend::SearchQuery fresh;
  fresh.status = {recommend::StatusFilter::NotAttempted};
  CHECK(ids(w.eng.search(s, w.off, fresh)) == std::vector<ResourceId>{n1});

  recommend::SearchQuery seen;
  seen.status = {recommend::StatusFilter::Attempted};
  CHECK(w.eng.search(s, w.off, seen).size() == 3);

  auto cards = w.eng.search(s, w.off, {});
  for (auto& c : cards) {
    if (c.resource == m1) CHECK(c.attempts_count == 1);
    CHECK(c.personal_fit >= 0.0);
    CHECK(c.personal_fit <= 1.0);
  }
}

TEST_CASE("recommend equals search then sort then take") {
  World w({"SQL"});
  UserId author = w.student("author");
  for (int i = 0; i < 5; ++i) w.mcq(author, w.topics);
  UserId s = w.student();

  auto all = w.eng.recommend(s, w.off, 100);
  CHECK(all.size() == 5);
  // Fresh student, unrated items at 1000: identical fit, so newest first.
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i].personal_fit == all[0].personal_fit);
    CHECK(all[i - 1].created_at > all[i].created_at);
  }
  auto top2 = w.eng.recommend(s, w.off, 2);
  CHECK(ids(top2) == std::vector<ResourceId>{all[0].resource, all[1].resource});
  CHECK_THROWS_AS(w.eng.recommend(s, w.off, 0), Error);
}

TEST_CASE("different learners get different orders") {
  World w({"SQL"});
  const TopicId t = w.topics[0];
  auto hard = w.mcq(w.instructor, {t}, 4, 0, false, "hard");
  auto easy = w.mcq(w.instructor, {t}, 4, 0, false, "easy");
  for (int i = 0; i < 3; ++i) w.eng.attempt(w.student(), easy, 0, w.tick());  // lowers its difficulty
  CHECK(w.difficulty(easy) < 960);

  UserId weak = w.student("weak"), strong = w.student("strong");
  while (w.rating(strong, t) < 1150) w.eng.attempt(strong, w.mcq(w.instructor, {t}), 0, w.tick());

  auto order = [&](UserId u) {
    recommend::SearchQuery q;
    q.keywords = "";
    std::vector<ResourceId> out;
    for (auto& c : w.eng.recommend(u, w.off, 100))
      if (c.resource == hard || c.resource == easy) out.push_back(c.resource);
    return out;
  };
  CHECK(w.eng.expected_correctness(w.off, weak, easy) < 0.65);
  CHECK(w.eng.expected_correctness(w.off, strong, hard) > 0.65);
  CHECK(order(weak) == std::vector<ResourceId>{easy, hard});
  CHECK(order(strong) == std::vector<ResourceId>{hard, easy});
}

TEST_CASE("custom fit strategy replaces the heuristic") {
  struct Constant : recommend::FitStrategy {
    double score(const recommend::FitInputs&) const override { return 0.125; }
  } constant;
  World w({"SQL"});
  w.mcq(w.instructor, w.topics);
  w.eng.set_fit_strategy(&constant);
  UserId s = w.student();
  CHECK(w.eng.recommend(s, w.off, 1)[0].personal_fit == 0.125);
}
