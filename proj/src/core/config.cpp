#include "peerlearn/core/config.hpp"

#include <cmath>

#include "peerlearn/error.hpp"

namespace peerlearn {

namespace recommend {

void validate(const FitWeights& w) {
  if (w.gap < 0 || w.quality < 0 || w.novelty < 0)
    fail(ErrorCode::Validation, "fit weights must be non-negative");
  if (std::abs(w.gap + w.quality + w.novelty - 1.0) > 1e-9)
    fail(ErrorCode::Validation, "fit weights must sum to 1");
}

}  // namespace recommend

namespace core {

void validate(const OfferingConfig& c) {
  recommend::validate(c.fit.weights);
  if (!(c.fit.target_success > 0.0 && c.fit.target_success < 1.0))
    fail(ErrorCode::Validation, "target success rate must lie in (0,1)");
  if (!(c.elo.k_base > 0.0) || c.elo.k_decay < 0.0) fail(ErrorCode::Validation, "K-factor needs a > 0 and b >= 0");
  if (!(c.bands.yellow_from < c.bands.blue_from)) fail(ErrorCode::Validation, "band thresholds must increase");
  if (c.moderation.flag_threshold < 1) fail(ErrorCode::Validation, "flag threshold must be positive");
  if (c.moderation.review_quorum < 1) fail(ErrorCode::Validation, "review quorum must be positive");
  if (!(c.badges.bronze <= c.badges.silver && c.badges.silver <= c.badges.gold) || c.badges.bronze == 0)
    fail(ErrorCode::Validation, "badge thresholds must be positive and non-decreasing");
}

}  // namespace core

}  // namespace peerlearn
