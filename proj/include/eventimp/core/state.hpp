#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "eventimp/core/contest.hpp"

namespace eventimp {

/// Snapshot of a contest: which events are resolved, with what outcome, and
/// the covariates and schedule produced so far by the generator.
///
/// A value type. apply_outcome() returns a new state; the in-place variant
/// exists for the simulation loop, which recycles one scratch state per path.
class ContestState {
 public:
  explicit ContestState(std::shared_ptr<const ContestDefinition> contest);

  [[nodiscard]] ContestState apply_outcome(const OutcomeRecord& record) const;
  void apply_outcome_in_place(const OutcomeRecord& record);

  [[nodiscard]] const ContestDefinition& contest() const { return *contest_; }
  [[nodiscard]] const std::shared_ptr<const ContestDefinition>& contest_ptr() const {
    return contest_;
  }
  [[nodiscard]] const ContestSchedule& schedule() const { return schedule_->schedule; }

  [[nodiscard]] bool complete() const { return cursor_ == schedule().size(); }
  /// Position (not time index) of the first slot with unresolved events.
  [[nodiscard]] std::optional<std::size_t> current_slot() const;
  [[nodiscard]] std::size_t slot_of(EventId event) const {
    return schedule_->slot_of_event.at(event.index());
  }

  [[nodiscard]] bool is_resolved(EventId event) const {
    return resolutions_.at(event.index()).outcome != kUnresolved;
  }
  [[nodiscard]] std::optional<OutcomeIndex> outcome(EventId event) const;
  [[nodiscard]] std::optional<OutcomeDetail> detail(EventId event) const;
  /// Throws ContractViolation for unresolved events.
  [[nodiscard]] OutcomeRecord record(EventId event) const;

  [[nodiscard]] std::vector<EventId> resolved_events() const;
  [[nodiscard]] std::vector<EventId> unresolved_events() const;

  [[nodiscard]] CovariateView covariates(EventId event) const {
    return {(*event_covariates_)[event.index()], contestant_covariates_};
  }
  [[nodiscard]] const CovariateSet& contestant_covariates() const {
    return contestant_covariates_;
  }

  /// Changes on every generator edit. Equal epochs imply equal covariates,
  /// so callers may cache outcome model output per (event, epoch).
  [[nodiscard]] std::uint64_t edit_epoch() const { return edit_epoch_; }

 private:
  friend class FutureEditor;

  struct Resolution {
    OutcomeIndex outcome = kUnresolved;
    bool has_detail = false;
    OutcomeDetail detail;
  };

  struct ScheduleIndex {
    ContestSchedule schedule;
    std::vector<std::uint32_t> slot_of_event;
  };

  void rebuild_open_counts();
  CovariateSet& mutable_event_covariates(EventId event);
  ScheduleIndex& mutable_schedule();

  std::shared_ptr<const ContestDefinition> contest_;
  std::shared_ptr<ScheduleIndex> schedule_;
  std::vector<Resolution> resolutions_;
  std::vector<std::uint32_t> open_in_slot_;
  std::size_t cursor_ = 0;
  std::shared_ptr<std::vector<CovariateSet>> event_covariates_;
  CovariateSet contestant_covariates_;
  std::uint64_t edit_epoch_ = 0;
};

/// Write access handed to a CovariateGenerator right after a slot resolves.
/// Every edit is restricted to slots after the resolved one.
class FutureEditor {
 public:
  FutureEditor(ContestState& state, std::size_t resolved_slot)
      : state_(state), resolved_(resolved_slot) {}

  [[nodiscard]] const ContestState& history() const { return state_; }
  [[nodiscard]] const TimeSlot& resolved_slot() const { return state_.schedule()[resolved_]; }
  [[nodiscard]] std::size_t resolved_position() const { return resolved_; }

  void set_contestant_covariate(Feature feature, ContestantId contestant, double value);
  void set_contest_covariate(Feature feature, double value);
  void set_event_covariate(EventId event, Feature feature, double value,
                           std::optional<ContestantId> contestant = {});
  /// Moves a future event to the slot with time index `slot_index`, creating
  /// that slot when needed and dropping slots left empty.
  void move_event(EventId event, int slot_index);

 private:
  void require_future(EventId event) const;

  ContestState& state_;
  std::size_t resolved_;
};

}  // namespace eventimp
