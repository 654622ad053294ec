#pragma once

#include <cstdint>

#include "peerlearn/learner/elo.hpp"
#include "peerlearn/recommend/fit.hpp"

namespace peerlearn::core {

struct ModerationParams {
  double competence_threshold = 1100.0;  // reviewer tag-mean rating
  int review_quorum = 3;
  int flag_threshold = 3;
};

struct BadgeThresholds {
  std::uint32_t bronze = 1;
  std::uint32_t silver = 10;
  std::uint32_t gold = 50;
};

// Tunables carried by every offering; copied from service defaults at creation.
struct OfferingConfig {
  learner::EloParams elo;
  learner::BandThresholds bands;
  recommend::FitParams fit;
  ModerationParams moderation;
  BadgeThresholds badges;
};

void validate(const OfferingConfig& config);

}  // namespace peerlearn::core
