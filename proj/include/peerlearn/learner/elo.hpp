#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "peerlearn/ids.hpp"

namespace peerlearn::learner {

// Elo points in fixed point (2^-32 point resolution). Integer storage makes
// adding and later subtracting a stored delta exact, so reversal and ledger
// replay reproduce ratings bit for bit regardless of ordering.
class EloPoints {
 public:
  static constexpr double kScale = 4294967296.0;

  constexpr EloPoints() = default;
  static constexpr EloPoints from_raw(std::int64_t raw) { return EloPoints(raw); }
  static EloPoints from_points(double points) {
    return EloPoints(static_cast<std::int64_t>(std::llround(points * kScale)));
  }

  constexpr std::int64_t raw() const { return raw_; }
  constexpr double points() const { return static_cast<double>(raw_) / kScale; }

  constexpr EloPoints& operator+=(EloPoints o) { raw_ += o.raw_; return *this; }
  constexpr EloPoints& operator-=(EloPoints o) { raw_ -= o.raw_; return *this; }
  friend constexpr EloPoints operator+(EloPoints a, EloPoints b) { return a += b; }
  friend constexpr EloPoints operator-(EloPoints a, EloPoints b) { return a -= b; }
  friend constexpr EloPoints operator-(EloPoints a) { return EloPoints(-a.raw_); }
  constexpr auto operator<=>(const EloPoints&) const = default;

 private:
  constexpr explicit EloPoints(std::int64_t raw) : raw_(raw) {}
  std::int64_t raw_ = 0;
};

struct EloParams {
  double initial = 1000.0;
  double k_base = 40.0;   // a in a / (1 + b n)
  double k_decay = 0.05;  // b
};

struct BandThresholds {
  double yellow_from = 1000.0;
  double blue_from = 1200.0;
};

enum class CompetencyBand { Red, Yellow, Blue };

std::string_view to_string(CompetencyBand band);

// 1 / (1 + 10^(-x/400)).
double logistic(double rating_gap);

double k_factor(std::uint32_t attempts, const EloParams& params = {});

CompetencyBand competency_band(double rating, const BandThresholds& thresholds = {});

struct TopicRating {
  EloPoints rating;
  std::uint32_t attempts = 0;
};

struct Snapshot {
  Timestamp at = 0;
  std::map<TopicId, EloPoints> ratings;
};

struct LearnerState {
  UserId student;
  std::map<TopicId, TopicRating> ratings;
  // snapshots[0] is the initial state; later entries hold the end-of-day
  // state for each calendar day with rating activity.
  std::vector<Snapshot> snapshots;

  TopicRating& entry(TopicId topic, const EloParams& params);
  double rating_on(TopicId topic, const EloParams& params) const;
};

struct ResourceRating {
  ResourceId resource;
  EloPoints rating;
  std::uint32_t attempts = 0;

  static ResourceRating initial(ResourceId id, const EloParams& params = {}) {
    return {id, EloPoints::from_points(params.initial), 0};
  }
};

struct RatingDelta {
  AttemptId attempt;
  UserId student;
  ResourceId resource;
  std::vector<std::pair<TopicId, EloPoints>> per_topic_student_delta;
  EloPoints resource_delta;
  bool applied = false;
};

LearnerState make_learner(UserId student, std::span<const TopicId> topics, Timestamp at,
                          const EloParams& params = {});

// Logistic of (mean student rating over tags - resource rating). Missing tags
// default to the initial rating.
double expected_correctness(const std::map<TopicId, TopicRating>& student_ratings,
                            EloPoints resource_rating, std::span<const TopicId> tags,
                            const EloParams& params = {});

// Convenience overload on plain point values.
double expected_correctness(std::span<const double> tag_ratings, double resource_rating);

RatingDelta apply_attempt(LearnerState& learner, ResourceRating& resource,
                          std::span<const TopicId> tags, bool correct,
                          const EloParams& params = {});

// Returns false (and changes nothing) when the delta is not applied.
bool revert_delta(RatingDelta& delta, LearnerState& learner, ResourceRating& resource);

// Records the learner's current ratings as the snapshot for the day of `at`.
void record_snapshot(LearnerState& learner, Timestamp at);

// Rating on `topic` as of time `at` according to the snapshot series.
double rating_at(const LearnerState& learner, TopicId topic, Timestamp at,
                 const EloParams& params = {});

}  // namespace peerlearn::learner
