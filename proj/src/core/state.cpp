#include "eventimp/core/state.hpp"

#include <algorithm>
#include <atomic>
#include <string>

#include "eventimp/core/errors.hpp"

namespace eventimp {

namespace {

// Epoch values are unique across all states and threads, so two states
// with equal epochs are guaranteed to carry equal covariates.
std::uint64_t next_epoch() {
  static std::atomic<std::uint64_t> blocks{0};
  constexpr std::uint64_t kBlock = 1u << 20;
  thread_local std::uint64_t next = 0;
  thread_local std::uint64_t end = 0;
  if (next == end) {
    next = (blocks.fetch_add(1, std::memory_order_relaxed) + 1) * kBlock;
    end = next + kBlock;
  }
  return next++;
}

}  // namespace

ContestState::ContestState(std::shared_ptr<const ContestDefinition> contest)
    : contest_(std::move(contest)) {
  if (!contest_) throw ContractViolation("contest state needs a contest");
  const auto& def = *contest_;
  if (def.schedule.empty()) throw ContractViolation("contest schedule is empty");

  schedule_ = std::make_shared<ScheduleIndex>();
  schedule_->schedule = def.schedule;
  resolutions_.resize(def.events.size());
  rebuild_open_counts();
  if (schedule_->schedule.event_count() != def.events.size()) {
    throw ContractViolation("every event must be scheduled exactly once");
  }

  auto covs = std::make_shared<std::vector<CovariateSet>>();
  covs->reserve(def.events.size());
  for (const auto& e : def.events) covs->push_back(e.covariates);
  event_covariates_ = std::move(covs);
  contestant_covariates_ = def.contestant_covariates;
  edit_epoch_ = next_epoch();
}

void ContestState::rebuild_open_counts() {
  const auto& slots = schedule_->schedule.slots();
  schedule_->slot_of_event.assign(resolutions_.size(), 0);
  open_in_slot_.assign(slots.size(), 0);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    for (EventId e : slots[s].events) {
      if (e.index() >= resolutions_.size()) {
        throw ContractViolation("schedule references unknown event " + std::to_string(e.index()));
      }
      schedule_->slot_of_event[e.index()] = static_cast<std::uint32_t>(s);
      if (resolutions_[e.index()].outcome == kUnresolved) ++open_in_slot_[s];
    }
  }
  cursor_ = 0;
  while (cursor_ < open_in_slot_.size() && open_in_slot_[cursor_] == 0) ++cursor_;
}

std::optional<std::size_t> ContestState::current_slot() const {
  if (complete()) return std::nullopt;
  return cursor_;
}

std::optional<OutcomeIndex> ContestState::outcome(EventId event) const {
  const auto& r = resolutions_.at(event.index());
  if (r.outcome == kUnresolved) return std::nullopt;
  return r.outcome;
}

std::optional<OutcomeDetail> ContestState::detail(EventId event) const {
  const auto& r = resolutions_.at(event.index());
  if (!r.has_detail) return std::nullopt;
  return r.detail;
}

OutcomeRecord ContestState::record(EventId event) const {
  const auto& r = resolutions_.at(event.index());
  if (r.outcome == kUnresolved) {
    throw ContractViolation("event '" + contest_->event(event).name + "' is unresolved");
  }
  OutcomeRecord out{event, r.outcome, std::nullopt};
  if (r.has_detail) out.detail = r.detail;
  return out;
}

std::vector<EventId> ContestState::resolved_events() const {
  std::vector<EventId> out;
  for (std::size_t i = 0; i < resolutions_.size(); ++i) {
    if (resolutions_[i].outcome != kUnresolved) out.emplace_back(i);
  }
  return out;
}

std::vector<EventId> ContestState::unresolved_events() const {
  std::vector<EventId> out;
  for (std::size_t i = 0; i < resolutions_.size(); ++i) {
    if (resolutions_[i].outcome == kUnresolved) out.emplace_back(i);
  }
  return out;
}

ContestState ContestState::apply_outcome(const OutcomeRecord& record) const {
  ContestState next = *this;
  next.apply_outcome_in_place(record);
  return next;
}

void ContestState::apply_outcome_in_place(const OutcomeRecord& record) {
  const auto idx = record.event.index();
  if (idx >= resolutions_.size()) {
    throw ContractViolation("unknown event " + std::to_string(idx));
  }
  const Event& event = contest_->events[idx];
  auto& r = resolutions_[idx];
  if (r.outcome != kUnresolved) {
    throw ContractViolation("event '" + event.name + "' is already resolved");
  }
  if (record.outcome >= event.outcome_space.size()) {
    throw ContractViolation("outcome " + std::to_string(record.outcome) +
                            " is outside the outcome space of event '" + event.name + "'");
  }
  const std::size_t slot = schedule_->slot_of_event[idx];
  if (slot != cursor_) {
    throw ContractViolation("event '" + event.name + "' is not in the current slot");
  }

  r.outcome = record.outcome;
  r.has_detail = record.detail.has_value();
  if (record.detail) r.detail = *record.detail;

  if (--open_in_slot_[slot] > 0) return;
  if (contest_->generator) {
    FutureEditor editor(*this, slot);
    contest_->generator->generate(editor);
  }
  cursor_ = slot + 1;
  while (cursor_ < open_in_slot_.size() && open_in_slot_[cursor_] == 0) ++cursor_;
}

CovariateSet& ContestState::mutable_event_covariates(EventId event) {
  if (event_covariates_.use_count() > 1) {
    event_covariates_ = std::make_shared<std::vector<CovariateSet>>(*event_covariates_);
  }
  edit_epoch_ = next_epoch();
  return (*event_covariates_)[event.index()];
}

ContestState::ScheduleIndex& ContestState::mutable_schedule() {
  if (schedule_.use_count() > 1) schedule_ = std::make_shared<ScheduleIndex>(*schedule_);
  edit_epoch_ = next_epoch();
  return *schedule_;
}

void FutureEditor::require_future(EventId event) const {
  if (event.index() >= state_.resolutions_.size()) {
    throw ContractViolation("unknown event " + std::to_string(event.index()));
  }
  if (state_.slot_of(event) <= resolved_) {
    throw ContractViolation("generator may only edit future events; '" +
                            state_.contest().event(event).name + "' is not in the future");
  }
}

void FutureEditor::set_contestant_covariate(Feature feature, ContestantId contestant,
                                            double value) {
  state_.contestant_covariates_.set(feature, contestant, value);
  state_.edit_epoch_ = next_epoch();
}

void FutureEditor::set_contest_covariate(Feature feature, double value) {
  state_.contestant_covariates_.set(feature, value);
  state_.edit_epoch_ = next_epoch();
}

void FutureEditor::set_event_covariate(EventId event, Feature feature, double value,
                                       std::optional<ContestantId> contestant) {
  require_future(event);
  state_.mutable_event_covariates(event).set(CovariateKey{feature, contestant}, value);
}

void FutureEditor::move_event(EventId event, int slot_index) {
  require_future(event);
  const auto& current = state_.schedule();
  if (slot_index <= current[resolved_].index) {
    throw ContractViolation("cannot move an event to slot " + std::to_string(slot_index) +
                            ", which is not in the future");
  }
  std::vector<TimeSlot> slots = current.slots();
  for (auto& s : slots) std::erase(s.events, event);
  auto it = std::find_if(slots.begin(), slots.end(),
                         [&](const TimeSlot& s) { return s.index >= slot_index; });
  if (it != slots.end() && it->index == slot_index) {
    it->events.push_back(event);
  } else {
    slots.insert(it, TimeSlot{slot_index, {event}});
  }
  std::erase_if(slots, [](const TimeSlot& s) { return s.events.empty(); });

  auto& index = state_.mutable_schedule();
  index.schedule = ContestSchedule(std::move(slots));
  // Positions up to the resolved slot are unchanged, so the cursor stays valid.
  const std::size_t saved = state_.cursor_;
  state_.rebuild_open_counts();
  state_.cursor_ = std::min(saved, state_.cursor_);
}

}  // namespace eventimp
