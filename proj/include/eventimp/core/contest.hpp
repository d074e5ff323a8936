#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eventimp/core/covariates.hpp"
#include "eventimp/core/ids.hpp"
#include "eventimp/core/random.hpp"
#include "eventimp/core/reward_distribution.hpp"
#include "eventimp/core/schedule.hpp"

namespace eventimp {

class ContestState;
class FutureEditor;

struct Contestant {
  std::string name;
};

/// A single event: who takes part, what can happen, what is known about it.
struct Event {
  std::string name;
  std::vector<ContestantId> participants;
  std::vector<std::string> outcome_space;
  CovariateSet covariates;

  [[nodiscard]] std::optional<OutcomeIndex> find_outcome(std::string_view label) const;
  [[nodiscard]] bool involves(ContestantId k) const;
};

/// Application payload attached to an outcome (a score pair, for example).
/// The framework stores it and hands it back; it never interprets it.
struct OutcomeDetail {
  std::array<std::int32_t, 4> values{};
  std::uint8_t size = 0;

  static OutcomeDetail pair(std::int32_t first, std::int32_t second) {
    return OutcomeDetail{{first, second, 0, 0}, 2};
  }
  bool operator==(const OutcomeDetail&) const = default;
};

struct OutcomeRecord {
  EventId event;
  OutcomeIndex outcome = 0;
  std::optional<OutcomeDetail> detail;

  bool operator==(const OutcomeRecord&) const = default;
};

enum class ImportanceUsage {
  kIgnored,   // never reads ("ei", k) covariates
  kOptional,  // reads them when present, works without
  kRequired,  // cannot be evaluated without them
};

/// out(x_e): probability of every label of an event's outcome space.
///
/// Implementations must be pure and safe to call concurrently. The engine
/// checks every returned vector (non-negative, sums to one within 1e-9).
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;

  virtual void probabilities(const Event& event, const CovariateView& covariates,
                             std::span<double> out) const = 0;

  [[nodiscard]] virtual bool samples_detail() const { return false; }
  virtual OutcomeDetail sample_detail(const Event& event, OutcomeIndex outcome,
                                      RandomStream& rng) const;

  [[nodiscard]] virtual ImportanceUsage importance_usage() const {
    return ImportanceUsage::kIgnored;
  }
};

/// gen(): invoked once each time a slot becomes fully resolved. May only
/// touch covariates and schedule positions of events still in the future.
class CovariateGenerator {
 public:
  virtual ~CovariateGenerator() = default;
  virtual void generate(FutureEditor& editor) const = 0;
};

struct RewardScenario {
  double probability = 1.0;
  std::vector<RewardLabel> labels;  // one per contestant
};

/// rew_k(): reward label of every contestant once the contest is complete.
class RewardFunction {
 public:
  virtual ~RewardFunction() = default;

  [[nodiscard]] virtual const std::shared_ptr<const RewardLabelSet>& labels() const = 0;

  /// Any internal randomness must come from `rng`.
  virtual void rewards(const ContestState& final_state, RandomStream& rng,
                       std::span<RewardLabel> out) const = 0;

  /// True when rewards() draws from its stream.
  [[nodiscard]] virtual bool randomized() const { return false; }

  /// True when the resolved events already fix every contestant's reward.
  /// The engine then stops drawing and evaluates rewards() on the partial
  /// state, so rewards() must accept such states.
  [[nodiscard]] virtual bool settled(const ContestState&) const { return false; }

  /// Exact distribution over reward vectors. Randomized reward functions
  /// must override this to be usable with exact enumeration.
  [[nodiscard]] virtual std::vector<RewardScenario> reward_scenarios(
      const ContestState& final_state) const;

  [[nodiscard]] RewardLabel reward(const ContestState& final_state, ContestantId contestant,
                                   RandomStream& rng) const;
};

struct ContestDefinition {
  std::vector<Contestant> contestants;
  std::vector<Event> events;  // EventId indexes this vector
  ContestSchedule schedule;
  CovariateSet contestant_covariates;
  std::shared_ptr<const OutcomeModel> outcome_model;
  std::shared_ptr<const CovariateGenerator> generator;  // optional
  std::shared_ptr<const RewardFunction> reward;

  [[nodiscard]] const Event& event(EventId id) const { return events.at(id.index()); }
  [[nodiscard]] std::optional<EventId> find_event(std::string_view name) const;
  [[nodiscard]] std::optional<ContestantId> find_contestant(std::string_view name) const;
};

enum class ViolationKind {
  kEmptySchedule,
  kDuplicateEvent,
  kUnknownEvent,
  kUnscheduledEvent,
  kOutcomeSpaceTooSmall,
  kDuplicateOutcome,
  kNoParticipants,
  kUnknownContestant,
  kMissingContract,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Report-style structural check; an empty report means well-formed.
ValidationReport validate_contest(const ContestDefinition& contest);

}  // namespace eventimp
