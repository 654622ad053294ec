#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace peerlearn::sim {

struct Behaviour {
  double rating_rate = 0.3;   // chance of leaving a star rating after an attempt
  double rating_noise = 0.5;  // sd of the noise added to 1 + 4*quality
};

struct SyntheticStudent {
  std::vector<double> true_ability;  // one logit per topic
  Behaviour behaviour;
};

struct SyntheticQuestion {
  double true_difficulty = 0.0;  // logit
  std::vector<std::size_t> tags;  // topic indices
  double latent_quality = 0.5;
  int choices = 4;
  int correct_index = 0;
};

struct Fixture {
  std::size_t topics = 1;
  std::vector<SyntheticStudent> students;
  std::vector<SyntheticQuestion> questions;
  std::uint64_t seed = 0;

  bool operator==(const Fixture&) const = default;
};

inline bool operator==(const Behaviour& a, const Behaviour& b) {
  return a.rating_rate == b.rating_rate && a.rating_noise == b.rating_noise;
}
inline bool operator==(const SyntheticStudent& a, const SyntheticStudent& b) {
  return a.true_ability == b.true_ability && a.behaviour == b.behaviour;
}
inline bool operator==(const SyntheticQuestion& a, const SyntheticQuestion& b) {
  return a.true_difficulty == b.true_difficulty && a.tags == b.tags && a.latent_quality == b.latent_quality &&
         a.choices == b.choices && a.correct_index == b.correct_index;
}

struct CohortParams {
  double ability_mean = 0.0;
  double ability_sd = 1.0;
  double difficulty_mean = 0.0;
  double difficulty_sd = 1.0;
  int choices = 4;
  Behaviour behaviour;
};

// Questions are single-topic, spread round-robin over the topics.
Fixture generate_cohort(std::size_t n_students, std::size_t n_questions, std::size_t topics, std::uint64_t seed,
                        const CohortParams& params = {});

enum class Policy { Random, Recommended };
std::string_view to_string(Policy policy);
Policy parse_policy(std::string_view text);

// Rasch success probability using the tag-mean ability.
double rasch_probability(const SyntheticStudent& student, const SyntheticQuestion& question);

struct SimulationReport {
  std::vector<std::optional<double>> spearman_by_topic;  // none when undefined
  std::optional<double> rmse_difficulty;                 // logits, after centring both scales
  std::uint64_t attempts_total = 0;
  std::uint64_t seed = 0;
  double mean_expected_success = 0.0;  // Rasch probability of the items actually attempted

  std::optional<double> mean_spearman() const;
  bool operator==(const SimulationReport&) const = default;
};

// Drives an embedded engine through its public commands only: one
// instructor authors every question, students enrol, then take turns (one
// attempt each per round) choosing items by `policy` and answering by a
// Rasch draw.
SimulationReport run_simulation(const Fixture& fixture, Policy policy, std::size_t attempts_per_student,
                                std::uint64_t seed);

struct PolicyPair {
  std::uint64_t seed = 0;
  double first = 0.0;
  double second = 0.0;
  double difference() const { return first - second; }
};

struct PolicyComparison {
  Policy first = Policy::Recommended;
  Policy second = Policy::Random;
  std::vector<PolicyPair> pairs;
  double mean_difference = 0.0;
};

// Runs both policies with the same seed per replication, in parallel across
// seeds.
PolicyComparison compare_policies(const Fixture& fixture, std::size_t attempts_per_student,
                                  const std::vector<std::uint64_t>& seeds, Policy first = Policy::Recommended,
                                  Policy second = Policy::Random);

// Average-rank Spearman correlation; none when either side is constant.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

// `topic,spearman` rows followed by summary rows.
std::string report_csv(const SimulationReport& report);

}  // namespace peerlearn::sim
