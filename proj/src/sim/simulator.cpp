#include "peerlearn/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include "peerlearn/error.hpp"
#include "peerlearn/service/engine.hpp"
#include "peerlearn/util/csv.hpp"

namespace peerlearn::sim {

using service::Engine;

Fixture generate_cohort(std::size_t n_students, std::size_t n_questions, std::size_t topics, std::uint64_t seed,
                        const CohortParams& params) {
  if (n_students < 1) fail(ErrorCode::Validation, "n_students must be at least 1");
  if (n_questions < 1) fail(ErrorCode::Validation, "n_questions must be at least 1");
  if (topics < 1) fail(ErrorCode::Validation, "topics must be at least 1");
  if (params.choices < 2) fail(ErrorCode::Validation, "questions need at least 2 choices");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> ability(params.ability_mean, params.ability_sd);
  std::normal_distribution<double> difficulty(params.difficulty_mean, params.difficulty_sd);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> choice(0, params.choices - 1);

  Fixture f;
  f.topics = topics;
  f.seed = seed;
  f.students.resize(n_students);
  for (auto& s : f.students) {
    s.true_ability.resize(topics);
    for (double& a : s.true_ability) a = ability(rng);
    s.behaviour = params.behaviour;
  }
  f.questions.resize(n_questions);
  for (std::size_t q = 0; q < n_questions; ++q) {
    auto& question = f.questions[q];
    question.true_difficulty = difficulty(rng);
    question.tags = {q % topics};
    question.latent_quality = unit(rng);
    question.choices = params.choices;
    question.correct_index = choice(rng);
  }
  return f;
}

std::string_view to_string(Policy policy) { return policy == Policy::Random ? "random" : "recommended"; }

Policy parse_policy(std::string_view text) {
  if (text == "random") return Policy::Random;
  if (text == "recommended") return Policy::Recommended;
  fail(ErrorCode::Validation, "policy must be random or recommended");
}

double rasch_probability(const SyntheticStudent& student, const SyntheticQuestion& question) {
  double ability = 0.0;
  for (std::size_t t : question.tags) ability += student.true_ability.at(t);
  ability /= static_cast<double>(question.tags.size());
  return 1.0 / (1.0 + std::exp(-(ability - question.true_difficulty)));
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorCode::Validation, "spearman inputs differ in length");
  const std::size_t n = a.size();
  if (n < 2) return std::nullopt;
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

std::optional<double> SimulationReport::mean_spearman() const {
  double sum = 0;
  int n = 0;
  for (const auto& s : spearman_by_topic)
    if (s) {
      sum += *s;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

SimulationReport run_simulation(const Fixture& fixture, Policy policy, std::size_t attempts_per_student,
                                std::uint64_t seed) {
  if (fixture.students.empty() || fixture.questions.empty()) fail(ErrorCode::Validation, "fixture is empty");

  Engine engine;
  Timestamp now = 1'700'000'000;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const UserId instructor = engine.register_user("instructor", now).user;
  std::vector<std::string> topic_names;
  for (std::size_t t = 0; t < fixture.topics; ++t) topic_names.push_back("topic-" + std::to_string(t + 1));
  const OfferingId offering =
      engine.create_offering(instructor, {"Simulated University", "SIM101", "Simulation", "S1", now}, topic_names, now);
  const auto topic_ids = engine.offering(offering).offering.topic_ids();

  std::vector<ResourceId> resources;
  std::map<ResourceId, std::size_t> question_of;
  for (std::size_t q = 0; q < fixture.questions.size(); ++q) {
    const auto& question = fixture.questions[q];
    service::ResourceDraft draft;
    draft.kind = content::ResourceKind::Mcq;
    draft.content.body = "Synthetic question " + std::to_string(q + 1);
    content::McqContent mcq;
    for (int c = 0; c < question.choices; ++c) mcq.choices.push_back("option " + std::to_string(c + 1));
    mcq.correct_index = question.correct_index;
    mcq.explanation = "Option " + std::to_string(question.correct_index + 1) + " is correct.";
    draft.content.mcq = mcq;
    for (std::size_t t : question.tags) draft.tags.push_back(topic_ids.at(t));
    const ResourceId id = engine.author_resource(instructor, offering, std::move(draft), ++now);
    resources.push_back(id);
    question_of[id] = q;
  }

  std::vector<UserId> students;
  for (std::size_t s = 0; s < fixture.students.size(); ++s) {
    students.push_back(engine.register_user("student-" + std::to_string(s + 1), ++now).user);
    engine.add_member(instructor, offering, students.back(), core::Role::Student, now);
  }

  SimulationReport report;
  report.seed = seed;
  std::vector<std::vector<char>> seen(students.size(), std::vector<char>(resources.size(), 0));
  std::vector<std::size_t> seen_count(students.size(), 0);
  double expected_sum = 0.0;

  for (std::size_t round = 0; round < attempts_per_student; ++round) {
    for (std::size_t s = 0; s < students.size(); ++s) {
      std::size_t pick = 0;
      if (policy == Policy::Random) {
        // Unseen items first, so early attempts all count.
        const std::size_t unseen = resources.size() - seen_count[s];
        if (unseen > 0) {
          std::size_t k = std::uniform_int_distribution<std::size_t>(0, unseen - 1)(rng);
          for (pick = 0; pick < resources.size(); ++pick)
            if (!seen[s][pick] && k-- == 0) break;
        } else {
          pick = std::uniform_int_distribution<std::size_t>(0, resources.size() - 1)(rng);
        }
      } else {
        const auto cards = engine.recommend(students[s], offering, 1);
        pick = question_of.at(cards.front().resource);
      }

      const SyntheticStudent& student = fixture.students[s];
      const SyntheticQuestion& question = fixture.questions[pick];
      const double p = rasch_probability(student, question);
      expected_sum += p;
      const bool correct = unit(rng) < p;
      int chosen = question.correct_index;
      if (!correct) {
        chosen = std::uniform_int_distribution<int>(0, question.choices - 2)(rng);
        if (chosen >= question.correct_index) ++chosen;
      }
      engine.attempt(students[s], resources[pick], chosen, ++now);
      if (!seen[s][pick]) {
        seen[s][pick] = 1;
        ++seen_count[s];
      }
      ++report.attempts_total;

      if (unit(rng) < student.behaviour.rating_rate) {
        const double raw = 1.0 + 4.0 * question.latent_quality +
                           std::normal_distribution<double>(0.0, student.behaviour.rating_noise)(rng);
        const int stars = std::clamp(static_cast<int>(std::lround(raw)), 1, 5);
        engine.rate_resource(students[s], resources[pick], stars, now);
      }
    }
  }

  // Estimated vs true, per topic.
  std::vector<std::vector<double>> estimated(fixture.topics), truth(fixture.topics);
  for (std::size_t s = 0; s < students.size(); ++s) {
    const auto ks = engine.knowledge_state(instructor, offering, students[s], learner::KnowledgeMode::Current);
    for (std::size_t t = 0; t < fixture.topics; ++t) {
      estimated[t].push_back(ks.current.at(t).rating);
      truth[t].push_back(fixture.students[s].true_ability[t]);
    }
  }
  for (std::size_t t = 0; t < fixture.topics; ++t) report.spearman_by_topic.push_back(spearman(estimated[t], truth[t]));

  if (report.attempts_total > 0) {
    const auto& ratings = engine.offering(offering).resource_ratings;
    const double scale = std::log(10.0) / 400.0;
    std::vector<double> est, tru;
    for (std::size_t q = 0; q < resources.size(); ++q) {
      est.push_back(ratings.at(resources[q]).rating.points() * scale);
      tru.push_back(fixture.questions[q].true_difficulty);
    }
    const double me = std::accumulate(est.begin(), est.end(), 0.0) / est.size();
    const double mt = std::accumulate(tru.begin(), tru.end(), 0.0) / tru.size();
    double ss = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) ss += std::pow((est[i] - me) - (tru[i] - mt), 2);
    report.rmse_difficulty = std::sqrt(ss / est.size());
    report.mean_expected_success = expected_sum / static_cast<double>(report.attempts_total);
  }
  return report;
}

PolicyComparison compare_policies(const Fixture& fixture, std::size_t attempts_per_student,
                                  const std::vector<std::uint64_t>& seeds, Policy first, Policy second) {
  if (seeds.size() < 2) fail(ErrorCode::Validation, "compare_policies needs at least 2 seeds");
  PolicyComparison out;
  out.first = first;
  out.second = second;
  std::vector<std::future<PolicyPair>> jobs;
  for (std::uint64_t seed : seeds)
    jobs.push_back(std::async(std::launch::async, [&, seed] {
      PolicyPair pair;
      pair.seed = seed;
      pair.first = run_simulation(fixture, first, attempts_per_student, seed).mean_expected_success;
      pair.second = run_simulation(fixture, second, attempts_per_student, seed).mean_expected_success;
      return pair;
    }));
  double sum = 0.0;
  for (auto& j : jobs) {
    out.pairs.push_back(j.get());
    sum += out.pairs.back().difference();
  }
  out.mean_difference = sum / static_cast<double>(out.pairs.size());
  return out;
}

std::string report_csv(const SimulationReport& report) {
  std::string out = "topic,spearman\n";
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string("none"); };
  for (std::size_t t = 0; t < report.spearman_by_topic.size(); ++t)
    out += "topic-" + std::to_string(t + 1) + "," + opt(report.spearman_by_topic[t]) + "\n";
  out += "mean," + opt(report.mean_spearman()) + "\n";
  out += "rmse_difficulty," + opt(report.rmse_difficulty) + "\n";
  out += "attempts_total," + std::to_string(report.attempts_total) + "\n";
  out += "mean_expected_success," + csv::format_number(report.mean_expected_success) + "\n";
  out += "seed," + std::to_string(report.seed) + "\n";
  return out;
}

}  // namespace peerlearn::sim
