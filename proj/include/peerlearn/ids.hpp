#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace peerlearn {

template <class Tag>
struct Id {
  std::uint64_t value = 0;

  constexpr auto operator<=>(const Id&) const = default;
  constexpr explicit operator bool() const { return value != 0; }
  std::string str() const { return std::to_string(value); }
};

using OfferingId = Id<struct OfferingTag>;
using TopicId = Id<struct TopicTag>;
using UserId = Id<struct UserTag>;
using ResourceId = Id<struct ResourceTag>;
using AttemptId = Id<struct AttemptTag>;
using CommentId = Id<struct CommentTag>;

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

constexpr std::int64_t day_of(Timestamp t) {
  return t >= 0 ? t / 86400 : (t - 86399) / 86400;
}

}  // namespace peerlearn

template <class Tag>
struct std::hash<peerlearn::Id<Tag>> {
  std::size_t operator()(const peerlearn::Id<Tag>& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
