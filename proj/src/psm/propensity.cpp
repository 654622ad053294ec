#include "peerlearn/psm/propensity.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "peerlearn/error.hpp"
#include "peerlearn/psm/stats.hpp"

namespace peerlearn::psm {

namespace {

constexpr std::size_t kK = kCovariateNames.size();

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    // log(1 + exp(e)) without overflow
    const double softplus = std::max(e, 0.0) + std::log1p(std::exp(-std::fabs(e)));
    ll += y[i] * e - softplus;
  }
  return ll;
}

double sigmoid(double e) { return e >= 0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e)); }

[[noreturn]] void separation(std::string_view covariate) {
  fail(ErrorCode::Separation, "treatment is perfectly separated by covariate '" + std::string(covariate) + "'",
       {std::string(covariate)});
}

}  // namespace

double PropensityModel::linear_predictor(const Subject& s) const {
  const auto x = s.covariates();
  double eta = coefficients.at(0);
  for (std::size_t k = 0; k < kK; ++k) eta += coefficients.at(k + 1) * (x[k] - means.at(k)) / sds.at(k);
  return eta;
}

double PropensityModel::score(const Subject& s) const {
  // Kept strictly inside (0,1) even for extreme predictors.
  const double p = sigmoid(linear_predictor(s));
  return std::clamp(p, 1e-15, 1.0 - 1e-15);
}

std::vector<double> PropensityModel::raw_slopes() const {
  std::vector<double> out(kK);
  for (std::size_t k = 0; k < kK; ++k) out[k] = coefficients.at(k + 1) / sds.at(k);
  return out;
}

PropensityModel fit_propensity(std::span<const Subject> subjects, const IrlsOptions& options) {
  std::size_t treated = 0;
  for (const auto& s : subjects) treated += s.treated ? 1 : 0;
  if (treated == 0 || treated == subjects.size())
    fail(ErrorCode::Validation, "propensity model needs at least one treated and one control subject");

  PropensityModel m;
  m.means.assign(kK, 0.0);
  m.sds.assign(kK, 1.0);
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < kK; ++k) {
    std::vector<double> col, t_col, c_col;
    for (const auto& s : subjects) {
      const double v = s.covariates()[k];
      col.push_back(v);
      (s.treated ? t_col : c_col).push_back(v);
    }
    const auto g = summarize(col);
    m.means[k] = g.mean;
    if (g.sd > 0) {
      m.sds[k] = g.sd;
      active.push_back(k);
    }
    const auto [tmin, tmax] = std::minmax_element(t_col.begin(), t_col.end());
    const auto [cmin, cmax] = std::minmax_element(c_col.begin(), c_col.end());
    if (*tmax < *cmin || *cmax < *tmin) separation(kCovariateNames[k]);
  }

  const auto n = static_cast<Eigen::Index>(subjects.size());
  const auto p = static_cast<Eigen::Index>(active.size() + 1);
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = subjects[static_cast<std::size_t>(i)];
    const auto x = s.covariates();
    X(i, 0) = 1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const std::size_t k = active[a];
      X(i, static_cast<Eigen::Index>(a + 1)) = (x[k] - m.means[k]) / m.sds[k];
    }
    y[i] = s.treated ? 1.0 : 0.0;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double rate = static_cast<double>(treated) / static_cast<double>(subjects.size());
  beta[0] = std::log(rate / (1.0 - rate));
  Eigen::VectorXd eta = X * beta;
  double ll = log_likelihood(eta, y);
  m.log_likelihood_trace.push_back(ll);

  Eigen::MatrixXd H(p, p);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::VectorXd prob(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = sigmoid(eta[i]);
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    const Eigen::VectorXd grad = X.transpose() * (y - prob);
    H = X.transpose() * w.asDiagonal() * X;
    if (grad.cwiseAbs().maxCoeff() < options.gradient_tolerance) {
      m.converged = true;
      break;
    }
    const Eigen::VectorXd delta = H.ldlt().solve(grad);
    if (!delta.allFinite()) break;

    // Step-halving keeps the log-likelihood from decreasing.
    double step = 1.0;
    bool moved = false;
    for (int h = 0; h < 60; ++h, step /= 2) {
      const Eigen::VectorXd cand = beta + step * delta;
      const Eigen::VectorXd cand_eta = X * cand;
      const double cand_ll = log_likelihood(cand_eta, y);
      if (cand_ll >= ll) {
        moved = cand != beta;
        beta = cand;
        eta = cand_eta;
        ll = cand_ll;
        break;
      }
    }
    ++m.iterations;
    m.log_likelihood_trace.push_back(ll);
    if (!moved) {
      // No ascent left at machine precision.
      m.converged = grad.cwiseAbs().maxCoeff() < 1e-6 * static_cast<double>(n);
      break;
    }
  }

  // Diverging slopes mean a covariate combination separates the arms.
  Eigen::Index worst = 0;
  const double largest = beta.tail(p - 1).size() ? beta.tail(p - 1).cwiseAbs().maxCoeff(&worst) : 0.0;
  if (!m.converged && largest > 15.0) separation(kCovariateNames[active[static_cast<std::size_t>(worst)]]);

  m.coefficients.assign(kK + 1, 0.0);
  m.standard_errors.assign(kK + 1, 0.0);
  const Eigen::MatrixXd cov = H.inverse();
  m.coefficients[0] = beta[0];
  m.standard_errors[0] = std::sqrt(cov(0, 0));
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto idx = static_cast<Eigen::Index>(a + 1);
    m.coefficients[active[a] + 1] = beta[idx];
    m.standard_errors[active[a] + 1] = std::sqrt(cov(idx, idx));
  }
  m.log_likelihood = ll;
  return m;
}

std::vector<double> scores(const PropensityModel& model, std::span<const Subject> subjects) {
  std::vector<double> out;
  out.reserve(subjects.size());
  for (const auto& s : subjects) out.push_back(model.score(s));
  return out;
}

}  // namespace peerlearn::psm
