#include "peerlearn/content/resource.hpp"

#include <cctype>

#include "peerlearn/error.hpp"

namespace peerlearn::content {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace

std::string_view to_string(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::Mcq: return "mcq";
    case ResourceKind::WorkedExample: return "worked_example";
    case ResourceKind::Note: return "note";
  }
  return "mcq";
}

std::string_view to_string(ResourceStatus status) {
  switch (status) {
    case ResourceStatus::Draft: return "draft";
    case ResourceStatus::PendingModeration: return "pending_moderation";
    case ResourceStatus::Published: return "published";
    case ResourceStatus::Deleted: return "deleted";
  }
  return "draft";
}

ResourceKind parse_kind(std::string_view text) {
  const std::string t = lower(text);
  if (t == "mcq") return ResourceKind::Mcq;
  if (t == "worked_example") return ResourceKind::WorkedExample;
  if (t == "note") return ResourceKind::Note;
  fail(ErrorCode::Validation, "unknown resource kind '" + std::string(text) + "'");
}

ResourceStatus parse_status(std::string_view text) {
  const std::string t = lower(text);
  if (t == "draft") return ResourceStatus::Draft;
  if (t == "pending_moderation") return ResourceStatus::PendingModeration;
  if (t == "published") return ResourceStatus::Published;
  if (t == "deleted") return ResourceStatus::Deleted;
  fail(ErrorCode::Validation, "unknown resource status '" + std::string(text) + "'");
}

std::string sanitize_markup(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x20 && c != '\n' && c != '\t') continue;
    if (c == 0x7f) continue;
    if (c == '<' && i + 1 < text.size()) {
      const auto next = static_cast<unsigned char>(text[i + 1]);
      if (std::isalpha(next) || next == '/' || next == '!' || next == '?') {
        out += "&lt;";
        continue;
      }
    }
    out += static_cast<char>(c);
  }
  return out;
}

ResourceContent sanitize(ResourceContent content) {
  content.body = sanitize_markup(content.body);
  if (content.mcq) {
    for (auto& c : content.mcq->choices) c = sanitize_markup(c);
    content.mcq->explanation = sanitize_markup(content.mcq->explanation);
  }
  if (content.worked_example) {
    for (auto& s : content.worked_example->steps) s = sanitize_markup(s);
    content.worked_example->final_solution = sanitize_markup(content.worked_example->final_solution);
  }
  return content;
}

void validate_content(ResourceKind kind, const ResourceContent& content) {
  if (blank(content.body)) fail(ErrorCode::Validation, "resource body must not be empty");
  for (const std::string& url : content.media) {
    if (url.rfind("https://", 0) != 0 && url.rfind("http://", 0) != 0)
      fail(ErrorCode::Validation, "media reference must be an http(s) URL", {url});
  }
  switch (kind) {
    case ResourceKind::Mcq: {
      if (!content.mcq) fail(ErrorCode::Validation, "MCQ needs choices and an explanation");
      const McqContent& m = *content.mcq;
      if (m.choices.size() < kMinChoices || m.choices.size() > kMaxChoices)
        fail(ErrorCode::Validation, "MCQ needs between 2 and 10 choices");
      for (const auto& c : m.choices)
        if (blank(c)) fail(ErrorCode::Validation, "MCQ choices must not be empty");
      if (m.correct_index < 0 || static_cast<std::size_t>(m.correct_index) >= m.choices.size())
        fail(ErrorCode::Validation, "correct_index " + std::to_string(m.correct_index) + " is out of range for " +
                                        std::to_string(m.choices.size()) + " choices");
      if (blank(m.explanation)) fail(ErrorCode::Validation, "MCQ explanation must not be empty");
      if (content.worked_example) fail(ErrorCode::Validation, "MCQ cannot carry worked-example steps");
      break;
    }
    case ResourceKind::WorkedExample: {
      if (!content.worked_example) fail(ErrorCode::Validation, "worked example needs steps and a final solution");
      const auto& w = *content.worked_example;
      if (w.steps.empty()) fail(ErrorCode::Validation, "worked example needs at least one step");
      for (const auto& s : w.steps)
        if (blank(s)) fail(ErrorCode::Validation, "worked example steps must not be empty");
      if (blank(w.final_solution)) fail(ErrorCode::Validation, "worked example needs a final solution");
      if (content.mcq) fail(ErrorCode::Validation, "worked example cannot carry MCQ choices");
      break;
    }
    case ResourceKind::Note:
      if (content.mcq || content.worked_example)
        fail(ErrorCode::Validation, "notes carry only a body and media");
      break;
  }
}

bool can_transition(ResourceStatus from, ResourceStatus to) {
  using S = ResourceStatus;
  switch (from) {
    case S::Draft: return to == S::PendingModeration || to == S::Deleted;
    case S::PendingModeration: return to == S::Published || to == S::Draft;
    case S::Published: return to == S::PendingModeration || to == S::Deleted;
    case S::Deleted: return false;
  }
  return false;
}

void transition(Resource& resource, ResourceStatus to) {
  if (!can_transition(resource.status, to))
    fail(ErrorCode::Lifecycle, "resource " + resource.id.str() + " cannot move from " +
                                   std::string(to_string(resource.status)) + " to " + std::string(to_string(to)));
  resource.status = to;
}

QualitySummary summarize_stars(const std::map<UserId, int>& stars_by_rater) {
  QualitySummary s;
  if (stars_by_rater.empty()) return s;
  long total = 0;
  for (const auto& [rater, stars] : stars_by_rater) total += stars;
  s.count = static_cast<int>(stars_by_rater.size());
  s.mean_stars = static_cast<double>(total) / s.count;
  return s;
}

void validate_stars(int stars) {
  if (stars < 1 || stars > 5) fail(ErrorCode::Validation, "stars must be between 1 and 5");
}

std::vector<int> answer_distribution(std::span<const AttemptRecord> attempts, ResourceId resource,
                                     std::size_t choice_count) {
  std::vector<int> counts(choice_count, 0);
  for (const AttemptRecord& a : attempts) {
    if (a.resource != resource || !a.chosen_index) continue;
    const int idx = *a.chosen_index;
    if (idx >= 0 && static_cast<std::size_t>(idx) < choice_count) ++counts[static_cast<std::size_t>(idx)];
  }
  return counts;
}

Verdict parse_verdict(std::string_view text) {
  const std::string t = lower(text);
  if (t == "approve") return Verdict::Approve;
  if (t == "reject") return Verdict::Reject;
  fail(ErrorCode::Validation, "verdict must be approve or reject");
}

std::string_view to_string(Verdict verdict) { return verdict == Verdict::Approve ? "approve" : "reject"; }

TallyOutcome tally(const std::map<UserId, Verdict>& reviews, int quorum) {
  const int total = static_cast<int>(reviews.size());
  if (total < quorum) return TallyOutcome::Pending;
  int approvals = 0;
  for (const auto& [reviewer, v] : reviews) approvals += v == Verdict::Approve;
  const int rejections = total - approvals;
  if (approvals > rejections) return TallyOutcome::Publish;
  if (rejections > approvals) return TallyOutcome::ReturnToDraft;
  return TallyOutcome::Pending;
}

}  // namespace peerlearn::content
