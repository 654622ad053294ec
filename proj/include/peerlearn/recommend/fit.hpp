#pragma once

namespace peerlearn::recommend {

// Weights of the personal-fit terms. Must lie on the simplex.
struct FitWeights {
  double gap = 0.5;
  double quality = 0.3;
  double novelty = 0.2;
};

void validate(const FitWeights& weights);

struct FitParams {
  FitWeights weights;
  double target_success = 0.65;
  double unrated_quality = 0.5;
  double attempted_novelty = 0.25;
};

}  // namespace peerlearn::recommend
