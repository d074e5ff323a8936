#include "eventimp/engine/engine.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <unordered_map>

#include "eventimp/core/errors.hpp"

namespace eventimp {

namespace {

void check_probabilities(const Event& event, std::span<const double> p) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ContractViolation("outcome model returned an invalid probability for event '" +
                              event.name + "'");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > RewardDistribution::kTolerance) {
    throw ContractViolation("outcome model probabilities for event '" + event.name +
                            "' sum to " + std::to_string(total));
  }
}

void normalize(std::vector<double>& w) {
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
}

/// Per-worker memo of out(x_e), valid while the state's epoch is unchanged.
class ProbabilityCache {
 public:
  explicit ProbabilityCache(const ContestDefinition& contest)
      : contest_(contest), epochs_(contest.events.size(), kNoEpoch) {
    offsets_.reserve(contest.events.size() + 1);
    std::size_t offset = 0;
    for (const auto& e : contest.events) {
      offsets_.push_back(offset);
      offset += e.outcome_space.size();
    }
    offsets_.push_back(offset);
    values_.resize(offset);
  }

  std::span<const double> get(const ContestState& state, EventId event) {
    const auto i = event.index();
    std::span<double> out(values_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]);
    if (epochs_[i] != state.edit_epoch()) {
      const Event& e = contest_.events[i];
      contest_.outcome_model->probabilities(e, state.covariates(event), out);
      check_probabilities(e, out);
      epochs_[i] = state.edit_epoch();
    }
    return out;
  }

 private:
  static constexpr std::uint64_t kNoEpoch = ~std::uint64_t{0};
  const ContestDefinition& contest_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
  std::vector<std::uint64_t> epochs_;
};

void resolve(ContestState& state, EventId event, OutcomeIndex outcome, RandomStream& rng) {
  const ContestDefinition& def = state.contest();
  OutcomeRecord record{event, outcome, std::nullopt};
  if (def.outcome_model->samples_detail()) {
    record.detail = def.outcome_model->sample_detail(def.event(event), outcome, rng);
  }
  state.apply_outcome_in_place(record);
}

/// Completes `state` in place. When `forced` is set, that event takes
/// `forced_outcome` as soon as its slot comes up; every other event is drawn.
/// With `stop_when_settled`, returns early once the rewards are fixed.
void run_to_end(ContestState& state, RandomStream& rng, ProbabilityCache& cache,
                std::vector<EventId>& buffer, std::optional<EventId> forced,
                OutcomeIndex forced_outcome, bool stop_when_settled) {
  const RewardFunction& reward = *state.contest().reward;
  while (auto slot = state.current_slot()) {
    if (stop_when_settled && reward.settled(state)) return;
    const auto& events = state.schedule()[*slot].events;
    buffer.assign(events.begin(), events.end());
    if (forced && state.slot_of(*forced) == *slot) {
      resolve(state, *forced, forced_outcome, rng);
    }
    for (EventId e : buffer) {
      if (state.is_resolved(e)) continue;
      const auto p = cache.get(state, e);
      resolve(state, e, static_cast<OutcomeIndex>(rng.categorical(p)), rng);
    }
  }
}

/// Everything one thread needs to simulate paths from a fixed start state.
class PathWorker {
 public:
  explicit PathWorker(const ContestState& start)
      : start_(start),
        cache_(start.contest()),
        scratch_(start),
        labels_(start.contest().contestants.size()),
        label_count_(start.contest().reward->labels()->size()) {}

  /// Simulates one path and returns the reward label of each contestant.
  std::span<const RewardLabel> run(RandomStream& rng, std::optional<EventId> forced,
                                   OutcomeIndex outcome) {
    scratch_ = start_;
    run_to_end(scratch_, rng, cache_, buffer_, forced, outcome, true);
    start_.contest().reward->rewards(scratch_, rng, labels_);
    for (RewardLabel l : labels_) {
      if (l >= label_count_) throw ContractViolation("reward function returned an unknown label");
    }
    return labels_;
  }

 private:
  const ContestState& start_;
  ProbabilityCache cache_;
  ContestState scratch_;
  std::vector<EventId> buffer_;
  std::vector<RewardLabel> labels_;
  std::size_t label_count_;
};

int thread_count(const SimulationConfig& config) {
  return config.threads > 0 ? static_cast<int>(config.threads) : omp_get_max_threads();
}

/// Reward-label counts (contestant-major) over `n` paths. Integer counts make
/// the reduction independent of how paths are spread over threads.
std::vector<std::uint64_t> count_rewards(const ContestState& start, std::optional<EventId> forced,
                                         OutcomeIndex outcome, std::uint64_t n,
                                         std::uint64_t key, int threads) {
  const std::size_t K = start.contest().contestants.size();
  const std::size_t L = start.contest().reward->labels()->size();
  std::vector<std::uint64_t> total(K * L, 0);
  std::exception_ptr error;
  std::atomic<bool> failed{false};

#pragma omp parallel num_threads(threads)
  {
    std::vector<std::uint64_t> local(K * L, 0);
    try {
      PathWorker worker(start);
#pragma omp for schedule(static)
      for (std::int64_t p = 0; p < static_cast<std::int64_t>(n); ++p) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
          RandomStream rng(key, static_cast<std::uint64_t>(p));
          const auto labels = worker.run(rng, forced, outcome);
          for (std::size_t k = 0; k < K; ++k) ++local[k * L + labels[k]];
        } catch (...) {
#pragma omp critical(eventimp_error)
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    } catch (...) {
#pragma omp critical(eventimp_error)
      if (!error) error = std::current_exception();
      failed = true;
    }
#pragma omp critical(eventimp_reduce)
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += local[i];
  }
  if (error) std::rethrow_exception(error);
  return total;
}

RewardProfile profile_from_counts(const ContestDefinition& def,
                                  std::span<const std::uint64_t> counts) {
  const auto& labels = def.reward->labels();
  const std::size_t L = labels->size();
  RewardProfile out;
  out.reserve(def.contestants.size());
  for (std::size_t k = 0; k < def.contestants.size(); ++k) {
    out.push_back(RewardDistribution::from_counts(labels, counts.subspan(k * L, L)));
  }
  return out;
}

RewardProfile mixture(const ContestDefinition& def, std::span<const RewardProfile> profiles,
                      std::span<const double> weights) {
  const auto& labels = def.reward->labels();
  RewardProfile out;
  for (std::size_t k = 0; k < def.contestants.size(); ++k) {
    std::vector<double> mass(labels->size(), 0.0);
    for (std::size_t y = 0; y < profiles.size(); ++y) {
      for (std::size_t j = 0; j < mass.size(); ++j) mass[j] += weights[y] * profiles[y][k][j];
    }
    out.emplace_back(labels, std::move(mass));
  }
  return out;
}

std::vector<EIRecord> make_records(const ContestDefinition& def, EventId event,
                                   const std::vector<double>& weights,
                                   const std::vector<RewardProfile>& profiles,
                                   std::uint64_t mean_paths, const DistanceSpec& distance,
                                   unsigned iteration, std::uint64_t seed) {
  std::vector<EIRecord> out;
  for (ContestantId k : def.event(event).participants) {
    std::vector<RewardDistribution> members;
    members.reserve(profiles.size());
    for (const auto& p : profiles) members.push_back(p.at(k.index()));
    const WeightedDistributionFamily family(std::move(members), weights);
    out.push_back(EIRecord{event, k, distance(family), iteration, mean_paths, seed});
  }
  return out;
}

std::uint64_t branch_key(const SimulationConfig& config, unsigned iteration, EventId event,
                         OutcomeIndex outcome) {
  return RandomStream::derive(config.seed, {iteration, event.index(), outcome});
}

void require_open(const ContestState& state, EventId event) {
  if (event.index() >= state.contest().events.size()) {
    throw ContractViolation("unknown event " + std::to_string(event.index()));
  }
  if (state.is_resolved(event)) {
    throw ContractViolation("event '" + state.contest().event(event).name +
                            "' is already resolved");
  }
}

}  // namespace

void SimulationConfig::validate() const {
  if (n_mc < 1) throw ContractViolation("n_mc must be at least 1");
  if (iterations < 1) throw ContractViolation("iterations must be at least 1");
}

std::vector<double> outcome_probabilities(const ContestState& state, EventId event) {
  const Event& e = state.contest().event(event);
  std::vector<double> p(e.outcome_space.size());
  state.contest().outcome_model->probabilities(e, state.covariates(event), p);
  check_probabilities(e, p);
  return p;
}

ContestState simulate_remainder(const ContestState& state, RandomStream& rng) {
  ContestState out = state;
  ProbabilityCache cache(state.contest());
  std::vector<EventId> buffer;
  run_to_end(out, rng, cache, buffer, std::nullopt, 0, false);
  return out;
}

RewardProfile conditional_reward_profile(const ContestState& state, EventId event,
                                         OutcomeIndex outcome, const SimulationConfig& config,
                                         unsigned iteration) {
  config.validate();
  require_open(state, event);
  if (outcome >= state.contest().event(event).outcome_space.size()) {
    throw ContractViolation("outcome outside the outcome space of event '" +
                            state.contest().event(event).name + "'");
  }
  const auto counts = count_rewards(state, event, outcome, config.n_mc,
                                    branch_key(config, iteration, event, outcome),
                                    thread_count(config));
  return profile_from_counts(state.contest(), counts);
}

RewardDistribution conditional_reward_distribution(const ContestState& state, EventId event,
                                                   OutcomeIndex outcome, ContestantId contestant,
                                                   const SimulationConfig& config) {
  return conditional_reward_profile(state, event, outcome, config).at(contestant.index());
}

std::vector<EIRecord> event_importances(const ContestState& state, EventId event,
                                        const SimulationConfig& config, unsigned iteration) {
  require_open(state, event);
  auto weights = outcome_probabilities(state, event);
  normalize(weights);
  std::vector<RewardProfile> profiles;
  for (OutcomeIndex y = 0; y < weights.size(); ++y) {
    profiles.push_back(conditional_reward_profile(state, event, y, config, iteration));
  }
  return make_records(state.contest(), event, weights, profiles, config.n_mc, config.distance,
                      iteration, config.seed);
}

EIRecord event_importance(const ContestState& state, EventId event, ContestantId contestant,
                          const SimulationConfig& config) {
  for (const auto& r : event_importances(state, event, config)) {
    if (r.contestant == contestant) return r;
  }
  throw ContractViolation("contestant does not take part in event '" +
                          state.contest().event(event).name + "'");
}

std::vector<EIRecord> slot_importance(const ContestState& state, const SimulationConfig& config,
                                      unsigned iteration) {
  const auto slot = state.current_slot();
  if (!slot) throw ContractViolation("contest is already complete");
  std::vector<EIRecord> out;
  for (EventId e : state.schedule()[*slot].events) {
    if (state.is_resolved(e)) continue;
    auto records = event_importances(state, e, config, iteration);
    out.insert(out.end(), records.begin(), records.end());
  }
  return out;
}

std::vector<EIRecord> backward_sweep(std::shared_ptr<const ContestDefinition> contest,
                                     std::span<const OutcomeRecord> history,
                                     const SimulationConfig& config, unsigned iteration,
                                     PathCache* cache) {
  config.validate();
  const ContestDefinition& def = *contest;
  std::vector<std::optional<OutcomeRecord>> realized(def.events.size());
  for (const auto& r : history) realized.at(r.event.index()) = r;
  for (std::size_t i = 0; i < realized.size(); ++i) {
    if (!realized[i]) {
      throw ContractViolation("history has no realized outcome for event '" + def.events[i].name +
                              "'");
    }
  }

  // State at the start of each slot along the realized history.
  std::vector<ContestState> states;
  {
    ContestState s(contest);
    while (auto slot = s.current_slot()) {
      states.push_back(s);
      const auto events = s.schedule()[*slot].events;
      for (EventId e : events) s.apply_outcome_in_place(*realized[e.index()]);
    }
  }

  PathCache local_cache;
  PathCache& paths = cache ? *cache : local_cache;
  const int threads = thread_count(config);
  std::vector<std::vector<EIRecord>> per_step(states.size());
  const PathCacheEntry* next = nullptr;

  for (std::size_t step = states.size(); step-- > 0;) {
    const ContestState& st = states[step];
    const TimeSlot& slot = st.schedule()[*st.current_slot()];
    const bool sole = slot.events.size() == 1;
    const bool last = step + 1 == states.size();

    std::vector<RewardProfile> event_mixtures;
    std::uint64_t slot_paths = 0;
    for (EventId e : slot.events) {
      auto weights = outcome_probabilities(st, e);
      normalize(weights);
      std::vector<RewardProfile> profiles;
      std::uint64_t used = 0;
      for (OutcomeIndex y = 0; y < weights.size(); ++y) {
        if (config.reuse_paths && !last && sole && next && y == realized[e.index()]->outcome) {
          profiles.push_back(next->mixture);
          used += next->paths;
          continue;
        }
        const auto counts = count_rewards(st, e, y, config.n_mc,
                                          branch_key(config, iteration, e, y), threads);
        profiles.push_back(profile_from_counts(def, counts));
        used += config.n_mc;
      }
      auto records = make_records(def, e, weights, profiles, used / weights.size(),
                                  config.distance, iteration, config.seed);
      per_step[step].insert(per_step[step].end(), records.begin(), records.end());
      event_mixtures.push_back(mixture(def, profiles, weights));
      slot_paths += used;
    }

    // Parallel events each estimate the same slot distribution; average them.
    const std::vector<double> equal(event_mixtures.size(), 1.0 / event_mixtures.size());
    paths.store(slot.index, PathCacheEntry{mixture(def, event_mixtures, equal),
                                           slot_paths / slot.events.size()});
    next = paths.find(slot.index);
  }

  std::vector<EIRecord> out;
  for (auto& records : per_step) out.insert(out.end(), records.begin(), records.end());
  return out;
}

Feature ei_feature() {
  static const Feature feature = Feature::named("ei");
  return feature;
}

std::shared_ptr<const ContestDefinition> with_importance_covariates(
    const ContestDefinition& contest, std::span<const EIRecord> records) {
  auto out = std::make_shared<ContestDefinition>(contest);
  for (const auto& r : records) {
    out->events.at(r.event.index()).covariates.set(ei_feature(), r.contestant, r.value);
  }
  return out;
}

std::vector<std::vector<EIRecord>> iterative_ei(std::shared_ptr<const ContestDefinition> contest,
                                                std::span<const OutcomeRecord> history,
                                                const SimulationConfig& config) {
  config.validate();
  if (contest->outcome_model->importance_usage() == ImportanceUsage::kRequired) {
    throw ContractViolation(
        "outcome model requires EI covariates, which do not exist in the first iteration");
  }
  std::vector<std::vector<EIRecord>> rounds;
  for (unsigned it = 1; it <= config.iterations; ++it) {
    auto current = it == 1 ? contest : with_importance_covariates(*contest, rounds.back());
    rounds.push_back(backward_sweep(current, history, config, it));
  }
  return rounds;
}

namespace {

class Enumerator {
 public:
  Enumerator(const ContestDefinition& def, EventId forced, OutcomeIndex outcome,
             std::uint64_t guard)
      : def_(def),
        forced_(forced),
        outcome_(outcome),
        guard_(guard),
        L_(def.reward->labels()->size()),
        mass_(def.contestants.size() * L_, 0.0) {}

  void visit(const ContestState& s, double probability) {
    if (probability <= 0.0) return;
    const auto slot = s.current_slot();
    if (!slot || def_.reward->settled(s)) {
      if (++leaves_ > guard_) {
        throw PathGuardExceeded("exact enumeration exceeds " + std::to_string(guard_) +
                                " paths; use a smaller instance");
      }
      for (const auto& scenario : def_.reward->reward_scenarios(s)) {
        for (std::size_t k = 0; k < scenario.labels.size(); ++k) {
          mass_.at(k * L_ + scenario.labels[k]) += probability * scenario.probability;
        }
      }
      return;
    }
    const auto& events = s.schedule()[*slot].events;
    EventId next = events.front();
    bool found = false;
    for (EventId e : events) {
      if (e == forced_ && !s.is_resolved(e)) {
        next = e;
        found = true;
        break;
      }
    }
    if (!found) {
      for (EventId e : events) {
        if (!s.is_resolved(e)) {
          next = e;
          break;
        }
      }
    }
    if (next == forced_) {
      visit(s.apply_outcome({next, outcome_, std::nullopt}), probability);
      return;
    }
    const auto p = outcome_probabilities(s, next);
    for (OutcomeIndex y = 0; y < p.size(); ++y) {
      if (p[y] > 0.0) visit(s.apply_outcome({next, y, std::nullopt}), probability * p[y]);
    }
  }

  RewardProfile profile() const {
    const auto& labels = def_.reward->labels();
    RewardProfile out;
    for (std::size_t k = 0; k < def_.contestants.size(); ++k) {
      std::vector<double> m(mass_.begin() + static_cast<std::ptrdiff_t>(k * L_),
                            mass_.begin() + static_cast<std::ptrdiff_t>((k + 1) * L_));
      normalize(m);
      out.emplace_back(labels, std::move(m));
    }
    return out;
  }

 private:
  const ContestDefinition& def_;
  EventId forced_;
  OutcomeIndex outcome_;
  std::uint64_t guard_;
  std::uint64_t leaves_ = 0;
  std::size_t L_;
  std::vector<double> mass_;
};

}  // namespace

RewardProfile exact_conditional_profile(const ContestState& state, EventId event,
                                        OutcomeIndex outcome, std::uint64_t guard) {
  require_open(state, event);
  if (state.contest().outcome_model->samples_detail()) {
    throw ContractViolation("exact enumeration needs an outcome model without outcome details");
  }
  if (outcome >= state.contest().event(event).outcome_space.size()) {
    throw ContractViolation("outcome outside the outcome space");
  }
  Enumerator en(state.contest(), event, outcome, guard);
  en.visit(state, 1.0);
  return en.profile();
}

RewardDistribution exact_enumeration(const ContestState& state, EventId event, OutcomeIndex outcome,
                                     ContestantId contestant, std::uint64_t guard) {
  return exact_conditional_profile(state, event, outcome, guard).at(contestant.index());
}

std::vector<EIRecord> exact_event_importances(const ContestState& state, EventId event,
                                              const DistanceSpec& distance, std::uint64_t guard) {
  auto weights = outcome_probabilities(state, event);
  normalize(weights);
  std::vector<RewardProfile> profiles;
  for (OutcomeIndex y = 0; y < weights.size(); ++y) {
    profiles.push_back(exact_conditional_profile(state, event, y, guard));
  }
  return make_records(state.contest(), event, weights, profiles, 0, distance, 1, 0);
}

}  // namespace eventimp
