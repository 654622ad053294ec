#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerlearn/core/config.hpp"
#include "peerlearn/ids.hpp"

namespace peerlearn::core {

enum class Role { Instructor, Student };
enum class ModerationPolicy { None, Staff, CompetentStudent };

std::string_view to_string(Role role);
std::string_view to_string(ModerationPolicy policy);
Role parse_role(std::string_view text);
ModerationPolicy parse_policy(std::string_view text);

struct Topic {
  TopicId id;
  std::string name;
  int ordinal = 0;
};

struct OfferingMeta {
  std::string university_name;
  std::string course_code;
  std::string course_name;
  std::string semester;
  Timestamp teaching_start = 0;
};

struct Offering {
  OfferingId id;
  OfferingMeta meta;
  std::vector<Topic> topics;  // sorted by ordinal
  ModerationPolicy moderation_policy = ModerationPolicy::None;
  bool created_from_lms = false;
  OfferingConfig config;

  const Topic* find_topic(TopicId id) const;
  const Topic* find_topic(std::string_view name) const;
  std::vector<TopicId> topic_ids() const;
  int flag_threshold() const { return config.moderation.flag_threshold; }
};

// Throws Validation on an empty list, empty names or duplicates (duplicates
// are listed in the error details).
void validate_topic_names(std::span<const std::string> names);

// Builds an offering whose topics take consecutive ids starting at first_topic.
Offering create_offering(OfferingId id, OfferingMeta meta, std::span<const std::string> topic_names,
                         TopicId first_topic, OfferingConfig config = {});

void add_topic(Offering& offering, TopicId id, std::string name);
void rename_topic(Offering& offering, TopicId id, std::string name);
// `order` must be a permutation of the current topic ids.
void reorder_topics(Offering& offering, std::span<const TopicId> order);
void remove_topic(Offering& offering, TopicId id);

std::string topics_to_csv(std::span<const Topic> topics);
// Parses `ordinal,name` rows and returns names in ordinal order.
std::vector<std::string> topics_from_csv(std::string_view text);

// ---- roles and enrolment -------------------------------------------------

struct LaunchRecord {
  std::string lms_role;
  OfferingId offering_ref;
  std::string user_ref;
};

using RoleMapping = std::map<std::string, Role, std::less<>>;

const RoleMapping& default_role_mapping();

// Case-insensitive lookup; UnknownRole when the label is not in the table.
Role map_lms_role(const LaunchRecord& launch, const RoleMapping& mapping = default_role_mapping());

enum class TicketKind { Invitation, AccessCode };

std::string_view to_string(TicketKind kind);
TicketKind parse_ticket_kind(std::string_view text);

struct EnrolmentTicket {
  TicketKind kind = TicketKind::AccessCode;
  std::string code;
  OfferingId offering;
  std::optional<Timestamp> expiry;
  Role role = Role::Student;
  std::string email;  // invitations only
  bool used = false;
};

struct Enrolment {
  UserId user;
  Role role = Role::Student;
  Timestamp enrolled_at = 0;
};

// InvalidCode for a ticket of another offering or past its expiry;
// AlreadyUsed for a consumed invitation.
void check_ticket(const EnrolmentTicket& ticket, OfferingId offering, Timestamp now);

}  // namespace peerlearn::core
