#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerlearn/ids.hpp"

namespace peerlearn::content {

enum class ResourceKind { Mcq, WorkedExample, Note };
enum class ResourceStatus { Draft, PendingModeration, Published, Deleted };

std::string_view to_string(ResourceKind kind);
std::string_view to_string(ResourceStatus status);
ResourceKind parse_kind(std::string_view text);
ResourceStatus parse_status(std::string_view text);

inline constexpr std::size_t kMinChoices = 2;
inline constexpr std::size_t kMaxChoices = 10;

struct McqContent {
  std::vector<std::string> choices;
  int correct_index = 0;
  std::string explanation;
};

struct WorkedExampleContent {
  std::vector<std::string> steps;
  std::string final_solution;
};

// Rich content is portable markup (text, tables, $math$); images and video
// are referenced by URL in `media`.
struct ResourceContent {
  std::string body;
  std::vector<std::string> media;
  std::optional<McqContent> mcq;
  std::optional<WorkedExampleContent> worked_example;
};

struct Resource {
  ResourceId id;
  OfferingId offering;
  UserId author;
  ResourceKind kind = ResourceKind::Mcq;
  ResourceContent content;
  std::vector<TopicId> tags;
  ResourceStatus status = ResourceStatus::Draft;
  Timestamp created_at = 0;
  Timestamp edited_at = 0;
  bool endorsed = false;
  std::string moderation_note;
};

// Strips control characters and neutralises raw HTML tags; math and plain
// comparison operators survive.
std::string sanitize_markup(std::string_view text);

ResourceContent sanitize(ResourceContent content);

// Validation error describing the first broken kind invariant.
void validate_content(ResourceKind kind, const ResourceContent& content);

// Draft -> PendingModeration -> {Published, Draft}; Published ->
// {PendingModeration, Deleted}; Draft -> Deleted.
bool can_transition(ResourceStatus from, ResourceStatus to);
void transition(Resource& resource, ResourceStatus to);

struct AttemptRecord {
  AttemptId id;
  UserId student;
  ResourceId resource;
  std::optional<int> chosen_index;
  std::optional<bool> correct;  // none for note / worked-example views
  bool scored = false;          // a rating delta was recorded
  Timestamp at = 0;
};

struct QualitySummary {
  double mean_stars = 0.0;
  int count = 0;
};

QualitySummary summarize_stars(const std::map<UserId, int>& stars_by_rater);

void validate_stars(int stars);

std::vector<int> answer_distribution(std::span<const AttemptRecord> attempts, ResourceId resource,
                                     std::size_t choice_count);

struct Comment {
  CommentId id;
  UserId author;
  ResourceId resource;
  std::string text;
  Timestamp at = 0;
};

struct Flag {
  UserId flagger;
  std::string reason;
  Timestamp at = 0;
};

enum class Verdict { Approve, Reject };
enum class TallyOutcome { Pending, Publish, ReturnToDraft };

Verdict parse_verdict(std::string_view text);
std::string_view to_string(Verdict verdict);

// Decided once at least `quorum` reviews are in, by strict majority.
TallyOutcome tally(const std::map<UserId, Verdict>& reviews, int quorum);

}  // namespace peerlearn::content
