#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "eventimp/core/contest.hpp"
#include "eventimp/core/state.hpp"
#include "eventimp/distance/distance.hpp"

namespace eventimp {

struct SimulationConfig {
  std::uint64_t n_mc = 7500;
  std::uint64_t seed = 0;
  unsigned iterations = 3;
  DistanceSpec distance;
  bool reuse_paths = true;
  unsigned threads = 0;  // 0: OpenMP default

  /// Throws ContractViolation when n_mc or iterations is zero.
  void validate() const;
};

struct EIRecord {
  EventId event;
  ContestantId contestant;
  double value = 0.0;
  unsigned iteration = 1;
  /// Mean number of paths behind each conditional distribution.
  std::uint64_t n_mc_effective = 0;
  std::uint64_t seed = 0;

  bool operator==(const EIRecord&) const = default;
};

/// Reward distribution of every contestant, one entry per ContestantId.
using RewardProfile = std::vector<RewardDistribution>;

/// Evaluates out(x_e) at the given state and checks the contract.
std::vector<double> outcome_probabilities(const ContestState& state, EventId event);

/// Draws every unresolved event until the contest is complete.
ContestState simulate_remainder(const ContestState& state, RandomStream& rng);

/// Conditional end-of-contest reward distributions of all contestants given
/// that `event` ends with `outcome`. Slots before the event's slot are
/// simulated as well, so the event need not be in the current slot.
RewardProfile conditional_reward_profile(const ContestState& state, EventId event,
                                         OutcomeIndex outcome, const SimulationConfig& config,
                                         unsigned iteration = 1);

RewardDistribution conditional_reward_distribution(const ContestState& state, EventId event,
                                                   OutcomeIndex outcome, ContestantId contestant,
                                                   const SimulationConfig& config);

/// EI of one event for each of its participants.
std::vector<EIRecord> event_importances(const ContestState& state, EventId event,
                                        const SimulationConfig& config, unsigned iteration = 1);

EIRecord event_importance(const ContestState& state, EventId event, ContestantId contestant,
                          const SimulationConfig& config);

/// EI of every event in the current slot (prospective analysis).
std::vector<EIRecord> slot_importance(const ContestState& state, const SimulationConfig& config,
                                      unsigned iteration = 1);

/// Weighted mixture of a slot's conditionals, reused by the backward sweep.
struct PathCacheEntry {
  RewardProfile mixture;
  std::uint64_t paths = 0;
};

/// Entries keyed by slot time index. Only the mixture is kept, not the
/// continuation paths it was estimated from.
class PathCache {
 public:
  void store(int slot_index, PathCacheEntry entry) { entries_.insert_or_assign(slot_index, std::move(entry)); }
  [[nodiscard]] const PathCacheEntry* find(int slot_index) const {
    auto it = entries_.find(slot_index);
    return it == entries_.end() ? nullptr : &it->second;
  }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }

 private:
  std::map<int, PathCacheEntry> entries_;
};

/// Post-hoc EI for every event, iterating slots from last to first.
/// `history` must contain a realized outcome for every event.
std::vector<EIRecord> backward_sweep(std::shared_ptr<const ContestDefinition> contest,
                                     std::span<const OutcomeRecord> history,
                                     const SimulationConfig& config, unsigned iteration = 1,
                                     PathCache* cache = nullptr);

/// Covariate carrying the previous iteration's EI, keyed by contestant.
Feature ei_feature();

/// Copy of `contest` whose events carry ("ei", k) for every participant k.
std::shared_ptr<const ContestDefinition> with_importance_covariates(
    const ContestDefinition& contest, std::span<const EIRecord> records);

/// Fixed-point EI: iteration 1 without EI covariates, later iterations with
/// the previous estimates injected. Returns one record list per iteration.
std::vector<std::vector<EIRecord>> iterative_ei(std::shared_ptr<const ContestDefinition> contest,
                                                std::span<const OutcomeRecord> history,
                                                const SimulationConfig& config);

inline constexpr std::uint64_t kDefaultPathGuard = 1'000'000;

/// Exact conditional reward distributions by enumerating every outcome
/// path. Throws PathGuardExceeded beyond `guard` paths, and ContractViolation
/// for models that sample outcome details.
RewardProfile exact_conditional_profile(const ContestState& state, EventId event,
                                        OutcomeIndex outcome,
                                        std::uint64_t guard = kDefaultPathGuard);

RewardDistribution exact_enumeration(const ContestState& state, EventId event, OutcomeIndex outcome,
                                     ContestantId contestant,
                                     std::uint64_t guard = kDefaultPathGuard);

/// EI of one event from exact conditionals.
std::vector<EIRecord> exact_event_importances(const ContestState& state, EventId event,
                                              const DistanceSpec& distance,
                                              std::uint64_t guard = kDefaultPathGuard);

}  // namespace eventimp
