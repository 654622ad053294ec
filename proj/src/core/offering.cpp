#include "peerlearn/core/offering.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "peerlearn/error.hpp"
#include "peerlearn/util/csv.hpp"

namespace peerlearn::core {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

void renumber(Offering& offering) {
  for (std::size_t i = 0; i < offering.topics.size(); ++i) offering.topics[i].ordinal = static_cast<int>(i);
}

}  // namespace

std::string_view to_string(Role role) { return role == Role::Instructor ? "instructor" : "student"; }

std::string_view to_string(ModerationPolicy policy) {
  switch (policy) {
    case ModerationPolicy::None: return "none";
    case ModerationPolicy::Staff: return "staff";
    case ModerationPolicy::CompetentStudent: return "competent_student";
  }
  return "none";
}

Role parse_role(std::string_view text) {
  const std::string t = lower(text);
  if (t == "instructor") return Role::Instructor;
  if (t == "student") return Role::Student;
  fail(ErrorCode::Validation, "unknown role '" + std::string(text) + "'");
}

ModerationPolicy parse_policy(std::string_view text) {
  const std::string t = lower(text);
  if (t == "none") return ModerationPolicy::None;
  if (t == "staff") return ModerationPolicy::Staff;
  if (t == "competent_student") return ModerationPolicy::CompetentStudent;
  fail(ErrorCode::Validation, "unknown moderation policy '" + std::string(text) + "'");
}

const Topic* Offering::find_topic(TopicId id) const {
  for (const Topic& t : topics)
    if (t.id == id) return &t;
  return nullptr;
}

const Topic* Offering::find_topic(std::string_view name) const {
  for (const Topic& t : topics)
    if (t.name == name) return &t;
  return nullptr;
}

std::vector<TopicId> Offering::topic_ids() const {
  std::vector<TopicId> ids;
  ids.reserve(topics.size());
  for (const Topic& t : topics) ids.push_back(t.id);
  return ids;
}

void validate_topic_names(std::span<const std::string> names) {
  if (names.empty()) fail(ErrorCode::Validation, "an offering needs at least one topic");
  std::set<std::string> seen;
  std::vector<std::string> dups;
  for (const std::string& n : names) {
    if (trim(n).empty()) fail(ErrorCode::Validation, "topic names must be non-empty");
    if (!seen.insert(n).second && std::find(dups.begin(), dups.end(), n) == dups.end()) dups.push_back(n);
  }
  if (!dups.empty()) fail(ErrorCode::Validation, "duplicate topic name '" + dups.front() + "'", dups);
}

Offering create_offering(OfferingId id, OfferingMeta meta, std::span<const std::string> topic_names,
                         TopicId first_topic, OfferingConfig config) {
  validate_topic_names(topic_names);
  validate(config);
  Offering o;
  o.id = id;
  o.meta = std::move(meta);
  o.config = config;
  for (std::size_t i = 0; i < topic_names.size(); ++i)
    o.topics.push_back({TopicId{first_topic.value + i}, topic_names[i], static_cast<int>(i)});
  return o;
}

void add_topic(Offering& offering, TopicId id, std::string name) {
  if (trim(name).empty()) fail(ErrorCode::Validation, "topic names must be non-empty");
  if (offering.find_topic(name)) fail(ErrorCode::Validation, "duplicate topic name '" + name + "'", {name});
  offering.topics.push_back({id, std::move(name), static_cast<int>(offering.topics.size())});
}

void rename_topic(Offering& offering, TopicId id, std::string name) {
  if (trim(name).empty()) fail(ErrorCode::Validation, "topic names must be non-empty");
  auto it = std::find_if(offering.topics.begin(), offering.topics.end(), [&](const Topic& t) { return t.id == id; });
  if (it == offering.topics.end()) fail(ErrorCode::NotFound, "unknown topic " + id.str());
  if (const Topic* other = offering.find_topic(name); other && other->id != id)
    fail(ErrorCode::Validation, "duplicate topic name '" + name + "'", {name});
  it->name = std::move(name);
}

void reorder_topics(Offering& offering, std::span<const TopicId> order) {
  std::vector<TopicId> current = offering.topic_ids();
  std::vector<TopicId> wanted(order.begin(), order.end());
  std::sort(current.begin(), current.end());
  std::sort(wanted.begin(), wanted.end());
  if (current != wanted) fail(ErrorCode::Validation, "topic order must be a permutation of the offering's topics");
  std::vector<Topic> sorted;
  for (TopicId id : order) sorted.push_back(*offering.find_topic(id));
  offering.topics = std::move(sorted);
  renumber(offering);
}

void remove_topic(Offering& offering, TopicId id) {
  auto it = std::find_if(offering.topics.begin(), offering.topics.end(), [&](const Topic& t) { return t.id == id; });
  if (it == offering.topics.end()) fail(ErrorCode::NotFound, "unknown topic " + id.str());
  if (offering.topics.size() == 1) fail(ErrorCode::Validation, "an offering needs at least one topic");
  offering.topics.erase(it);
  renumber(offering);
}

std::string topics_to_csv(std::span<const Topic> topics) {
  std::string out = "ordinal,name\n";
  for (const Topic& t : topics) out += csv::join_row({std::to_string(t.ordinal), t.name}) + "\n";
  return out;
}

std::vector<std::string> topics_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto rows = csv::read(in);
  if (rows.empty() || rows.front() != std::vector<std::string>{"ordinal", "name"})
    fail(ErrorCode::Validation, "topic CSV must start with header 'ordinal,name'");
  std::vector<std::pair<int, std::string>> entries;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) fail(ErrorCode::Validation, "topic CSV row " + std::to_string(i) + " needs 2 fields");
    int ordinal = 0;
    try {
      std::size_t used = 0;
      ordinal = std::stoi(rows[i][0], &used);
      if (used != rows[i][0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(ErrorCode::Validation, "bad ordinal '" + rows[i][0] + "'");
    }
    entries.emplace_back(ordinal, rows[i][1]);
  }
  std::sort(entries.begin(), entries.end());
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].first != static_cast<int>(i))
      fail(ErrorCode::Validation, "topic ordinals must form a permutation of 0..n-1");
  std::vector<std::string> names;
  for (auto& e : entries) names.push_back(std::move(e.second));
  validate_topic_names(names);
  return names;
}

const RoleMapping& default_role_mapping() {
  static const RoleMapping mapping = {
      {"instructor", Role::Instructor}, {"teaching assistant", Role::Instructor},
      {"grader", Role::Instructor},     {"student", Role::Student},
      {"guest", Role::Student},         {"observer", Role::Student},
  };
  return mapping;
}

Role map_lms_role(const LaunchRecord& launch, const RoleMapping& mapping) {
  auto it = mapping.find(lower(trim(launch.lms_role)));
  if (it == mapping.end())
    fail(ErrorCode::UnknownRole, "no role mapping for LMS role '" + launch.lms_role + "'", {launch.lms_role});
  return it->second;
}

std::string_view to_string(TicketKind kind) {
  return kind == TicketKind::Invitation ? "invitation" : "access_code";
}

TicketKind parse_ticket_kind(std::string_view text) {
  const std::string t = lower(text);
  if (t == "invitation") return TicketKind::Invitation;
  if (t == "access_code") return TicketKind::AccessCode;
  fail(ErrorCode::Validation, "unknown ticket kind '" + std::string(text) + "'");
}

void check_ticket(const EnrolmentTicket& ticket, OfferingId offering, Timestamp now) {
  if (ticket.offering != offering) fail(ErrorCode::InvalidCode, "enrolment code does not belong to this offering");
  if (ticket.expiry && now > *ticket.expiry) fail(ErrorCode::InvalidCode, "enrolment code has expired");
  if (ticket.kind == TicketKind::Invitation && ticket.used)
    fail(ErrorCode::AlreadyUsed, "invitation has already been used");
}

}  // namespace peerlearn::core
