#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace peerlearn::psm {

inline constexpr std::array<std::string_view, 4> kCovariateNames{"gpa", "age", "residency", "program_level"};

struct Subject {
  std::string id;
  bool treated = false;
  double gpa = 0.0;
  double age = 0.0;
  int residency = 0;      // 0 domestic, 1 international
  int program_level = 0;  // 0 bachelor, 1 master
  double outcome = 0.0;   // exam percent

  std::array<double, 4> covariates() const {
    return {gpa, age, static_cast<double>(residency), static_cast<double>(program_level)};
  }
};

// Header `id,treated,gpa,age,residency,program_level,outcome`. Binary
// columns take 0/1 or their labels. Missing or malformed values are
// rejected with the offending line.
std::vector<Subject> read_subjects(std::istream& in);
std::string write_subjects(const std::vector<Subject>& subjects);

struct ConfoundedSpec {
  std::size_t n = 2000;
  double effect = 5.0;            // outcome points added by treatment
  double treat_intercept = -1.2;  // logit of treatment at average covariates
  double treat_gpa = 0.75;        // per GPA point
  double treat_age = 0.15;        // per year
  double treat_residency = 0.4;
  double treat_program = 0.3;
  double outcome_gpa = 8.0;
  double outcome_noise = 10.0;
};

// Synthetic cohort where GPA drives both treatment uptake and the outcome.
std::vector<Subject> simulate_subjects(const ConfoundedSpec& spec, std::uint64_t seed);

}  // namespace peerlearn::psm
