#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

namespace eventimp {

/// Strongly typed dense index. Values are positions into the owning
/// contest's event or contestant tables.
template <class Tag>
class Id {
 public:
  constexpr Id() = default;
  constexpr explicit Id(std::size_t value) : value_(static_cast<std::uint32_t>(value)) {}

  [[nodiscard]] constexpr std::size_t index() const { return value_; }

  constexpr auto operator<=>(const Id&) const = default;

 private:
  std::uint32_t value_ = 0;
};

using EventId = Id<struct EventTag>;
using ContestantId = Id<struct ContestantTag>;

/// Position in an event's ordered outcome space.
using OutcomeIndex = std::uint32_t;
/// Position in a reward function's declared label set.
using RewardLabel = std::uint32_t;

inline constexpr OutcomeIndex kUnresolved = std::numeric_limits<OutcomeIndex>::max();

}  // namespace eventimp

template <class Tag>
struct std::hash<eventimp::Id<Tag>> {
  std::size_t operator()(eventimp::Id<Tag> id) const noexcept { return id.index(); }
};
