#include "peerlearn/psm/subject.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include "peerlearn/error.hpp"
#include "peerlearn/util/csv.hpp"

namespace peerlearn::psm {

namespace {

double parse_real(const std::string& text, std::size_t line, std::string_view column) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v))
    fail(ErrorCode::Validation,
         "line " + std::to_string(line) + ": " + std::string(column) + " is not a number: '" + text + "'");
  return v;
}

int parse_binary(const std::string& text, std::size_t line, std::string_view column, std::string_view zero,
                 std::string_view one) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "0" || t == zero) return 0;
  if (t == "1" || t == one) return 1;
  fail(ErrorCode::Validation, "line " + std::to_string(line) + ": " + std::string(column) + " must be 0/1, " +
                                  std::string(zero) + " or " + std::string(one) + ", got '" + text + "'");
}

}  // namespace

std::vector<Subject> read_subjects(std::istream& in) {
  const auto rows = csv::read(in);
  const std::vector<std::string> header{"id", "treated", "gpa", "age", "residency", "program_level", "outcome"};
  if (rows.empty() || rows.front() != header)
    fail(ErrorCode::Validation, "subjects header must be id,treated,gpa,age,residency,program_level,outcome");
  std::vector<Subject> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::size_t line = i + 1;
    if (r.size() == 1 && r[0].empty()) continue;
    if (r.size() != header.size())
      fail(ErrorCode::Validation, "line " + std::to_string(line) + ": expected 7 columns, got " + std::to_string(r.size()));
    for (std::size_t c = 0; c < r.size(); ++c)
      if (r[c].empty()) fail(ErrorCode::Validation, "line " + std::to_string(line) + ": missing " + header[c]);
    Subject s;
    s.id = r[0];
    s.treated = parse_binary(r[1], line, "treated", "false", "true") == 1;
    s.gpa = parse_real(r[2], line, "gpa");
    s.age = parse_real(r[3], line, "age");
    s.residency = parse_binary(r[4], line, "residency", "domestic", "international");
    s.program_level = parse_binary(r[5], line, "program_level", "bachelor", "master");
    s.outcome = parse_real(r[6], line, "outcome");
    out.push_back(std::move(s));
  }
  return out;
}

std::string write_subjects(const std::vector<Subject>& subjects) {
  std::string out = "id,treated,gpa,age,residency,program_level,outcome\n";
  for (const auto& s : subjects)
    out += csv::join_row({s.id, s.treated ? "1" : "0", csv::format_number(s.gpa), csv::format_number(s.age),
                          std::to_string(s.residency), std::to_string(s.program_level), csv::format_number(s.outcome)}) +
           "\n";
  return out;
}

std::vector<Subject> simulate_subjects(const ConfoundedSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gpa(5.0, 1.0), age(21.0, 2.0), noise(0.0, spec.outcome_noise);
  std::bernoulli_distribution residency(0.3), program(0.2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Subject> out(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Subject& s = out[i];
    s.id = "s" + std::to_string(i + 1);
    s.gpa = std::clamp(gpa(rng), 1.0, 7.0);
    s.age = std::max(17.0, age(rng));
    s.residency = residency(rng) ? 1 : 0;
    s.program_level = program(rng) ? 1 : 0;
    const double logit = spec.treat_intercept + spec.treat_gpa * (s.gpa - 5.0) + spec.treat_age * (s.age - 21.0) +
                         spec.treat_residency * s.residency + spec.treat_program * s.program_level;
    s.treated = unit(rng) < 1.0 / (1.0 + std::exp(-logit));
    s.outcome = 60.0 + spec.outcome_gpa * (s.gpa - 5.0) + 0.5 * (s.age - 21.0) + 3.0 * s.residency +
                2.0 * s.program_level + (s.treated ? spec.effect : 0.0) + noise(rng);
  }
  return out;
}

}  // namespace peerlearn::psm
