#include "eventimp/core/contest.hpp"

#include <set>
#include <string>
#include <unordered_set>

#include "eventimp/core/errors.hpp"
#include "eventimp/core/state.hpp"

namespace eventimp {

std::optional<OutcomeIndex> Event::find_outcome(std::string_view label) const {
  for (std::size_t i = 0; i < outcome_space.size(); ++i) {
    if (outcome_space[i] == label) return static_cast<OutcomeIndex>(i);
  }
  return std::nullopt;
}

bool Event::involves(ContestantId k) const {
  for (ContestantId p : participants) {
    if (p == k) return true;
  }
  return false;
}

OutcomeDetail OutcomeModel::sample_detail(const Event& event, OutcomeIndex, RandomStream&) const {
  throw ContractViolation("outcome model does not sample details for event '" + event.name + "'");
}

std::vector<RewardScenario> RewardFunction::reward_scenarios(const ContestState& final_state) const {
  if (randomized()) {
    throw ContractViolation("randomized reward function must provide reward_scenarios()");
  }
  RandomStream unused(0, 0);
  RewardScenario scenario;
  scenario.labels.resize(final_state.contest().contestants.size());
  rewards(final_state, unused, scenario.labels);
  return {std::move(scenario)};
}

RewardLabel RewardFunction::reward(const ContestState& final_state, ContestantId contestant,
                                   RandomStream& rng) const {
  std::vector<RewardLabel> all(final_state.contest().contestants.size());
  rewards(final_state, rng, all);
  return all.at(contestant.index());
}

std::optional<EventId> ContestDefinition::find_event(std::string_view name) const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].name == name) return EventId(i);
  }
  return std::nullopt;
}

std::optional<ContestantId> ContestDefinition::find_contestant(std::string_view name) const {
  for (std::size_t i = 0; i < contestants.size(); ++i) {
    if (contestants[i].name == name) return ContestantId(i);
  }
  return std::nullopt;
}

ValidationReport validate_contest(const ContestDefinition& contest) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::string message) {
    report.push_back({kind, std::move(message)});
  };

  if (contest.schedule.empty()) add(ViolationKind::kEmptySchedule, "schedule is empty");
  if (!contest.outcome_model) add(ViolationKind::kMissingContract, "missing outcome model");
  if (!contest.reward) add(ViolationKind::kMissingContract, "missing reward function");

  std::set<std::string_view> names;
  for (std::size_t i = 0; i < contest.events.size(); ++i) {
    const Event& e = contest.events[i];
    const std::string tag = "event '" + e.name + "'";
    if (!names.insert(e.name).second) add(ViolationKind::kDuplicateEvent, "duplicate " + tag);
    if (e.outcome_space.size() < 2) {
      add(ViolationKind::kOutcomeSpaceTooSmall, tag + ": outcome space < 2");
    }
    std::set<std::string_view> labels(e.outcome_space.begin(), e.outcome_space.end());
    if (labels.size() != e.outcome_space.size()) {
      add(ViolationKind::kDuplicateOutcome, tag + ": duplicate outcome label");
    }
    if (e.participants.empty()) add(ViolationKind::kNoParticipants, tag + ": no participants");
    for (ContestantId k : e.participants) {
      if (k.index() >= contest.contestants.size()) {
        add(ViolationKind::kUnknownContestant,
            tag + ": unknown contestant " + std::to_string(k.index()));
      }
    }
  }

  std::unordered_set<EventId> scheduled;
  for (const TimeSlot& slot : contest.schedule.slots()) {
    for (EventId e : slot.events) {
      if (e.index() >= contest.events.size()) {
        add(ViolationKind::kUnknownEvent, "slot " + std::to_string(slot.index) +
                                              " references unknown event " +
                                              std::to_string(e.index()));
      } else if (!scheduled.insert(e).second) {
        add(ViolationKind::kDuplicateEvent,
            "event '" + contest.events[e.index()].name + "' scheduled twice");
      }
    }
  }
  for (std::size_t i = 0; i < contest.events.size(); ++i) {
    if (!scheduled.contains(EventId(i))) {
      add(ViolationKind::kUnscheduledEvent, "event '" + contest.events[i].name + "' is unscheduled");
    }
  }
  for (const auto& [key, value] : contest.contestant_covariates) {
    if (key.contestant && key.contestant->index() >= contest.contestants.size()) {
      add(ViolationKind::kUnknownContestant, "covariate '" + std::string(key.feature.name()) +
                                                 "' references unknown contestant");
    }
  }
  return report;
}

}  // namespace eventimp
