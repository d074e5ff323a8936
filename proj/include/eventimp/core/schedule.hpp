#pragma once

#include <optional>
#include <vector>

#include "eventimp/core/ids.hpp"

namespace eventimp {

/// One point in time of a contest; parallel events share a slot.
struct TimeSlot {
  int index = 0;
  std::vector<EventId> events;

  bool operator==(const TimeSlot&) const = default;
};

enum class ScheduleSide { kBefore, kAfter };

/// Ordered slots with strictly increasing indices. Every event appears in
/// exactly one slot; a full contest schedule is non-empty.
class ContestSchedule {
 public:
  ContestSchedule() = default;
  /// Validates ordering and event uniqueness; throws ContractViolation.
  explicit ContestSchedule(std::vector<TimeSlot> slots);

  [[nodiscard]] const std::vector<TimeSlot>& slots() const { return slots_; }
  [[nodiscard]] std::size_t size() const { return slots_.size(); }
  [[nodiscard]] bool empty() const { return slots_.empty(); }
  [[nodiscard]] const TimeSlot& operator[](std::size_t position) const { return slots_[position]; }

  /// Position of the slot with the given time index.
  [[nodiscard]] std::optional<std::size_t> position_of(int index) const;
  [[nodiscard]] std::size_t event_count() const;

  bool operator==(const ContestSchedule&) const = default;

 private:
  friend class ContestState;
  std::vector<TimeSlot> slots_;
};

/// Slots with index <= t (before) or index > t (after). Throws
/// ContractViolation when t is not a slot index.
ContestSchedule sub_schedule(const ContestSchedule& schedule, int t, ScheduleSide side);

}  // namespace eventimp
