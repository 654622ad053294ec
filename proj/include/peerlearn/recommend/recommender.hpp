#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerlearn/content/resource.hpp"
#include "peerlearn/recommend/fit.hpp"

namespace peerlearn::recommend {

enum class StatusFilter { Attempted, NotAttempted, IncorrectlyAnswered, OwnDeleted };
enum class SortKey { Difficulty, Quality, Responses, Recommended };

std::string_view to_string(StatusFilter f);
std::string_view to_string(SortKey k);
StatusFilter parse_status_filter(std::string_view text);
SortKey parse_sort_key(std::string_view text);

// Empty sets mean "no restriction".
struct SearchQuery {
  std::set<content::ResourceKind> kinds;
  std::set<TopicId> topics;
  std::set<StatusFilter> status;
  std::string keywords;
  SortKey sort_key = SortKey::Recommended;
  std::size_t limit = 100;
};

struct ResourceCard {
  ResourceId resource;
  double personal_fit = 0.0;
  double quality = 0.0;  // mean stars, 0 when unrated
  int ratings_count = 0;
  double difficulty = 0.0;
  int attempts_count = 0;
  int comments_count = 0;
  Timestamp created_at = 0;
};

// What the caller has done with each resource.
struct CallerHistory {
  std::set<ResourceId> attempted;
  std::map<ResourceId, bool> latest_correct;  // MCQs only
};

struct FitInputs {
  double expected_correctness = 0.5;
  std::optional<double> mean_stars;
  bool attempted = false;
};

double personal_fit(const FitInputs& inputs, const FitParams& params = {});

// Scoring is a strategy so another ranking (e.g. collaborative filtering)
// can replace the heuristic.
class FitStrategy {
 public:
  virtual ~FitStrategy() = default;
  virtual double score(const FitInputs& inputs) const = 0;
};

class HeuristicFit final : public FitStrategy {
 public:
  explicit HeuristicFit(FitParams params = {}) : params_(params) {}
  double score(const FitInputs& inputs) const override { return personal_fit(inputs, params_); }

 private:
  FitParams params_;
};

bool matches_keywords(const content::Resource& resource, std::string_view keywords);

// Published resources (plus the caller's own Deleted ones under OwnDeleted)
// that satisfy every populated filter.
std::vector<const content::Resource*> filter_resources(UserId caller,
                                                       std::span<const content::Resource* const> resources,
                                                       const CallerHistory& history, const SearchQuery& query);

// Stable descending sort by key; ties go to the newer resource, then the
// lower id.
std::vector<ResourceCard> sort_cards(std::vector<ResourceCard> cards, SortKey key);

}  // namespace peerlearn::recommend
