#include "eventimp/core/schedule.hpp"

#include <string>
#include <unordered_set>

#include "eventimp/core/errors.hpp"

namespace eventimp {

ContestSchedule::ContestSchedule(std::vector<TimeSlot> slots) : slots_(std::move(slots)) {
  std::unordered_set<EventId> seen;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (i > 0 && slots_[i].index <= slots_[i - 1].index) {
      throw ContractViolation("slot indices must be strictly increasing");
    }
    if (slots_[i].events.empty()) {
      throw ContractViolation("slot " + std::to_string(slots_[i].index) + " has no events");
    }
    for (EventId e : slots_[i].events) {
      if (!seen.insert(e).second) {
        throw ContractViolation("event " + std::to_string(e.index()) +
                                " appears in more than one slot");
      }
    }
  }
}

std::optional<std::size_t> ContestSchedule::position_of(int index) const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i].index == index) return i;
  }
  return std::nullopt;
}

std::size_t ContestSchedule::event_count() const {
  std::size_t n = 0;
  for (const auto& s : slots_) n += s.events.size();
  return n;
}

ContestSchedule sub_schedule(const ContestSchedule& schedule, int t, ScheduleSide side) {
  const auto pos = schedule.position_of(t);
  if (!pos) throw ContractViolation("unknown slot index " + std::to_string(t));
  const auto& all = schedule.slots();
  const auto split = all.begin() + static_cast<std::ptrdiff_t>(*pos) + 1;
  if (side == ScheduleSide::kBefore) return ContestSchedule({all.begin(), split});
  return ContestSchedule({split, all.end()});
}

}  // namespace eventimp
