#pragma once

#include <span>
#include <vector>

#include "peerlearn/psm/subject.hpp"

namespace peerlearn::psm {

struct IrlsOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;
};

// Logistic model of treatment on z-scored covariates. coefficients[0] is
// the intercept, then one slope per covariate in kCovariateNames order.
// Constant covariates get a zero slope.
struct PropensityModel {
  std::vector<double> coefficients;
  std::vector<double> standard_errors;
  std::vector<double> means;
  std::vector<double> sds;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;  // one per iteration, first is the start point
  int iterations = 0;
  bool converged = false;

  double linear_predictor(const Subject& s) const;
  double score(const Subject& s) const;
  // Slopes on the original covariate scale.
  std::vector<double> raw_slopes() const;
};

// Throws Validation when an arm is empty and Separation, naming the
// covariate, when the arms are perfectly separated.
PropensityModel fit_propensity(std::span<const Subject> subjects, const IrlsOptions& options = {});

std::vector<double> scores(const PropensityModel& model, std::span<const Subject> subjects);

}  // namespace peerlearn::psm
