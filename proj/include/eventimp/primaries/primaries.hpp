#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "eventimp/core/contest.hpp"
#include "eventimp/core/random.hpp"
#include "eventimp/engine/engine.hpp"

namespace eventimp::primaries {

/// One election unit: state, territory, or Democrats Abroad.
struct StateRecord {
  std::string name;
  std::string date;  // ISO yyyy-mm-dd
  int delegates = 0;
};

/// Reads name,date,delegates. Throws DataError with the offending line.
std::vector<StateRecord> parse_states_csv(std::istream& in, const std::string& source);
std::vector<StateRecord> read_states_csv(const std::filesystem::path& path);

struct CandidateParams {
  std::array<double, 2> eta{0.5, 0.0};
  std::array<double, 2> rho{-1.0, 1.0};
};

/// Cumulative delegates of the two candidates over decided states.
struct PrimaryRace {
  std::array<long, 2> delegates_won{0, 0};

  [[nodiscard]] long decided() const { return delegates_won[0] + delegates_won[1]; }
};

/// Realized minus reputation-implied delegate share; zero before any result.
double spillover(const PrimaryRace& race, const CandidateParams& params, int candidate);

/// Systematic utility psi without the extreme-value error.
double utility_components(double rho_state, int candidate, const PrimaryRace& race,
                          const CandidateParams& params);

/// Conditional logit probability that `candidate` wins the state.
double win_probability(double rho_state, const PrimaryRace& race, const CandidateParams& params,
                       int candidate = 0);

inline constexpr std::string_view kNominated = "nominated";
inline constexpr std::string_view kNotNominated = "not-nominated";

/// Label per candidate: nominated with a strict majority of `total_delegates`,
/// otherwise not-nominated (a tie nominates nobody).
std::array<std::string_view, 2> nomination_reward(const PrimaryRace& final_race,
                                                  long total_delegates);

enum class ScheduleMode { kRegular, kRandom, kRankIncrease };

ScheduleMode parse_mode(std::string_view text);
std::string_view mode_name(ScheduleMode mode);

/// State indices per slot. Regular follows the dates; the other modes keep
/// the regular slot sizes and reassign states to positions.
using SlotAssignment = std::vector<std::vector<std::size_t>>;

SlotAssignment regular_slots(const std::vector<StateRecord>& states);
SlotAssignment build_slots(const std::vector<StateRecord>& states, ScheduleMode mode,
                           RandomStream* rng = nullptr);
ContestSchedule build_schedule(const std::vector<StateRecord>& states, ScheduleMode mode,
                               RandomStream* rng = nullptr);
ContestSchedule to_schedule(const SlotAssignment& slots);

/// Regular ordering with `state` moved to flat rank `position` (1-based);
/// the others shift to fill and slot sizes stay fixed.
SlotAssignment positional_slots(const std::vector<StateRecord>& states, std::size_t state,
                                std::size_t position);

/// Two-candidate contest with one binary event per state; events carry the
/// state preference as covariate "rho_s".
std::shared_ptr<const ContestDefinition> make_primary_contest(
    const std::vector<StateRecord>& states, const ContestSchedule& schedule,
    const std::vector<double>& preferences, const CandidateParams& params = {});

/// One N(0,1) preference per state.
std::vector<double> draw_preferences(std::size_t n_states, RandomStream& rng);

struct StudyConfig {
  std::size_t samples = 1000;
  std::uint64_t n_mc = 5000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  CandidateParams params;
};

struct StudyResult {
  std::vector<std::string> names;
  std::vector<int> delegates;
  std::vector<std::vector<double>> samples;  // [sample][state]
  std::vector<double> mean;
  std::vector<double> sd;
};

/// EI of every state's election from a fresh race, per preference sample.
StudyResult run_study(const std::vector<StateRecord>& states, ScheduleMode mode,
                      const StudyConfig& config);

struct PositionalResult {
  std::string state;
  std::vector<std::size_t> positions;
  std::vector<std::vector<double>> values;  // [position][sample]
};

PositionalResult positional_study(const std::vector<StateRecord>& states,
                                  std::string_view state_name,
                                  const std::vector<std::size_t>& positions,
                                  const StudyConfig& config);

}  // namespace eventimp::primaries
