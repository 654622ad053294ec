#include "peerlearn/recommend/recommender.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "peerlearn/error.hpp"

namespace peerlearn::recommend {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double sort_value(const ResourceCard& c, SortKey key) {
  switch (key) {
    case SortKey::Difficulty: return c.difficulty;
    case SortKey::Quality: return c.quality;
    case SortKey::Responses: return c.attempts_count;
    case SortKey::Recommended: return c.personal_fit;
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(StatusFilter f) {
  switch (f) {
    case StatusFilter::Attempted: return "attempted";
    case StatusFilter::NotAttempted: return "not_attempted";
    case StatusFilter::IncorrectlyAnswered: return "incorrectly_answered";
    case StatusFilter::OwnDeleted: return "own_deleted";
  }
  return "attempted";
}

std::string_view to_string(SortKey k) {
  switch (k) {
    case SortKey::Difficulty: return "difficulty";
    case SortKey::Quality: return "quality";
    case SortKey::Responses: return "responses";
    case SortKey::Recommended: return "recommended";
  }
  return "recommended";
}

StatusFilter parse_status_filter(std::string_view text) {
  const std::string t = lower(text);
  for (auto f : {StatusFilter::Attempted, StatusFilter::NotAttempted, StatusFilter::IncorrectlyAnswered,
                 StatusFilter::OwnDeleted})
    if (t == to_string(f)) return f;
  fail(ErrorCode::Validation, "unknown status filter '" + std::string(text) + "'");
}

SortKey parse_sort_key(std::string_view text) {
  const std::string t = lower(text);
  for (auto k : {SortKey::Difficulty, SortKey::Quality, SortKey::Responses, SortKey::Recommended})
    if (t == to_string(k)) return k;
  fail(ErrorCode::Validation, "unknown sort key '" + std::string(text) + "'");
}

double personal_fit(const FitInputs& in, const FitParams& params) {
  const double target = params.target_success;
  const double gap = 1.0 - std::abs(in.expected_correctness - target) / std::max(target, 1.0 - target);
  const double quality = in.mean_stars ? (*in.mean_stars - 1.0) / 4.0 : params.unrated_quality;
  const double novelty = in.attempted ? params.attempted_novelty : 1.0;
  const FitWeights& w = params.weights;
  return std::clamp(w.gap * gap + w.quality * quality + w.novelty * novelty, 0.0, 1.0);
}

bool matches_keywords(const content::Resource& resource, std::string_view keywords) {
  const std::string needle = lower(trim(keywords));
  if (needle.empty()) return true;
  return lower(resource.content.body).find(needle) != std::string::npos;
}

std::vector<const content::Resource*> filter_resources(UserId caller,
                                                       std::span<const content::Resource* const> resources,
                                                       const CallerHistory& history, const SearchQuery& query) {
  using content::ResourceStatus;
  const bool own_deleted = query.status.count(StatusFilter::OwnDeleted) > 0;
  std::vector<const content::Resource*> out;
  for (const content::Resource* r : resources) {
    const bool visible = r->status == ResourceStatus::Published ||
                         (own_deleted && r->status == ResourceStatus::Deleted && r->author == caller);
    if (!visible) continue;
    if (!query.kinds.empty() && !query.kinds.count(r->kind)) continue;
    if (!query.topics.empty() &&
        std::none_of(r->tags.begin(), r->tags.end(), [&](TopicId t) { return query.topics.count(t) > 0; }))
      continue;
    const bool attempted = history.attempted.count(r->id) > 0;
    if (query.status.count(StatusFilter::Attempted) && !attempted) continue;
    if (query.status.count(StatusFilter::NotAttempted) && attempted) continue;
    if (query.status.count(StatusFilter::IncorrectlyAnswered)) {
      auto it = history.latest_correct.find(r->id);
      if (it == history.latest_correct.end() || it->second) continue;
    }
    if (!matches_keywords(*r, query.keywords)) continue;
    out.push_back(r);
  }
  return out;
}

std::vector<ResourceCard> sort_cards(std::vector<ResourceCard> cards, SortKey key) {
  std::stable_sort(cards.begin(), cards.end(), [key](const ResourceCard& a, const ResourceCard& b) {
    const double va = sort_value(a, key), vb = sort_value(b, key);
    if (va != vb) return va > vb;
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.resource < b.resource;
  });
  return cards;
}

}  // namespace peerlearn::recommend
