#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eventimp/core/contest.hpp"
#include "eventimp/core/random.hpp"
#include "eventimp/engine/engine.hpp"

namespace eventimp::league {

struct Fixture {
  int matchday = 0;
  std::string home;
  std::string away;
  std::optional<std::array<int, 2>> result;  // goals home, away

  bool operator==(const Fixture&) const = default;
};

/// Circle method; second half mirrors the first with venues swapped. When
/// `rng` is given the team order is shuffled first. Throws for odd counts.
std::vector<Fixture> generate_double_round_robin(std::vector<std::string> teams,
                                                 RandomStream* rng = nullptr);
/// First half only (one meeting per pair).
std::vector<Fixture> generate_single_round_robin(std::vector<std::string> teams,
                                                 RandomStream* rng = nullptr);

enum Outcome : OutcomeIndex { kHome = 0, kDraw = 1, kAway = 2 };

Outcome outcome_of(int goals_home, int goals_away);

struct MatchModelParams {
  double cut_low = -0.6;
  double cut_high = 0.6;
  double strength_coef = 1.0;
  double home_coef = 0.35;
  double ei_home_coef = 0.0;
  double ei_away_coef = 0.0;
  double lambda_home = 1.55;
  double lambda_away = 1.16;
  bool scores = true;  // draw exact scores with each outcome

  /// Throws ContractViolation for unordered cuts or non-positive means.
  void validate() const;
};

struct MatchCovariates {
  double strength_diff = 0.0;  // home minus away
  double home_advantage = 1.0;
  double ei_home = 0.0;
  double ei_away = 0.0;
};

/// Ordered logit: P(A) = F(c1 - z), P(D) = F(c2 - z) - F(c1 - z), P(H) = 1 - F(c2 - z).
std::array<double, 3> match_outcome_probs(const MatchCovariates& x, const MatchModelParams& params);

/// Inverse-CDF Poisson sampler for a fixed mean.
class PoissonSampler {
 public:
  explicit PoissonSampler(double lambda);
  int operator()(RandomStream& rng) const;
  [[nodiscard]] double lambda() const { return lambda_; }

 private:
  double lambda_;
  std::vector<double> cdf_;
};

inline constexpr int kMaxScoreAttempts = 10'000;

/// Independent Poisson goals, resampled until their sign matches `outcome`.
std::array<int, 2> draw_score(Outcome outcome, const PoissonSampler& home,
                              const PoissonSampler& away, RandomStream& rng);
std::array<int, 2> draw_score(Outcome outcome, const MatchModelParams& params, RandomStream& rng);

/// The distribution draw_score() samples from, tabulated: the independent
/// Poisson pair conditioned on its sign. One draw costs a single uniform.
class ScoreTable {
 public:
  ScoreTable(double lambda_home, double lambda_away);
  std::array<int, 2> operator()(Outcome outcome, RandomStream& rng) const;
  /// Probability of (home, away) given `outcome`; zero off the table.
  [[nodiscard]] double probability(Outcome outcome, int home, int away) const;

 private:
  struct Entry {
    double cdf;
    std::array<int, 2> score;
  };
  std::array<std::vector<Entry>, 3> tables_;
};

struct TeamRecord {
  int points = 0;
  int goal_difference = 0;
  int goals_for = 0;

  bool operator==(const TeamRecord&) const = default;
};

/// Standings keyed by ContestantId index.
struct SeasonState {
  std::vector<TeamRecord> teams;

  void add_result(std::size_t home, std::size_t away, Outcome outcome,
                  std::optional<std::array<int, 2>> score);
};

/// Points, goal difference, goals scored, then name. Returns team indices
/// from first to last.
std::vector<std::size_t> final_ranking(const SeasonState& state,
                                       const std::vector<std::string>& names);

inline constexpr std::string_view kChampion = "champion";
inline constexpr std::string_view kChampionsLeague = "champions-league";
inline constexpr std::string_view kEuropaLeague = "europa-league";
inline constexpr std::string_view kEuropaLeaguePlayoff = "europa-league-playoff";
inline constexpr std::string_view kNone = "none";
inline constexpr std::string_view kRelegationPlayoff = "relegation-playoff";
inline constexpr std::string_view kDirectRelegation = "direct-relegation";

/// Every league reward label, best to worst.
const std::vector<std::string>& league_labels();

/// Reward codes seen in the data.
const std::vector<std::string>& reward_code_vocabulary();

struct Region {
  std::string label;
  int size = 0;

  bool operator==(const Region&) const = default;
};

struct RewardStructure {
  std::string code;
  std::vector<Region> regions;  // from rank 1 down

  [[nodiscard]] int league_size() const;
  /// Last rank whose region qualifies for an international competition.
  [[nodiscard]] int international_last_rank() const;
  /// Last rank of the europa-league region, or 0 without one.
  [[nodiscard]] int europa_last_rank() const;
};

/// "C/E/R..." per the code vocabulary. Throws ContractViolation listing the
/// vocabulary for unknown codes.
RewardStructure reward_regions(std::string_view code, int league_size);

/// "label:size,label:size,..." from rank 1 down.
RewardStructure explicit_regions(std::string_view spec, int league_size);

/// Label remapping for one team ("from" label to "to" label).
struct RewardOverride {
  std::string team;
  std::string from;
  std::string to;
};

std::string_view reward_of_rank(int rank, const RewardStructure& structure);
std::string_view reward_of_rank(int rank, const RewardStructure& structure,
                                std::string_view team,
                                const std::vector<RewardOverride>& overrides);

/// A domestic cup whose final pairing is fixed.
struct CupState {
  std::vector<std::size_t> finalists;  // team indices
  std::vector<double> weights;         // win probability per finalist
};

/// Effective labels per team given a final ranking and the realized cup
/// winners (one per cup). A winner outside the international places gets a
/// europa-league place; a winner already qualified, or already holding the
/// other cup, passes its place to the next ranked team.
std::vector<std::string_view> apply_cup_transfer(const std::vector<std::size_t>& ranking,
                                                 const std::vector<std::size_t>& cup_winners,
                                                 const RewardStructure& structure);

struct RewardConfig {
  RewardStructure structure;
  std::vector<RewardOverride> overrides;
  std::vector<std::vector<std::pair<std::string, double>>> cups;  // by team name
};

/// Flat key = value text: league_size, code, regions, override, cup.
RewardConfig parse_reward_config(std::istream& in, const std::string& source);
RewardConfig read_reward_config(const std::filesystem::path& path);

std::vector<Fixture> parse_fixtures_csv(std::istream& in, const std::string& source);
std::vector<Fixture> read_fixtures_csv(const std::filesystem::path& path);
std::map<std::string, double> parse_ratings_csv(std::istream& in, const std::string& source);
std::map<std::string, double> read_ratings_csv(const std::filesystem::path& path);
std::map<std::string, TeamRecord> parse_standings_csv(std::istream& in, const std::string& source);
std::map<std::string, TeamRecord> read_standings_csv(const std::filesystem::path& path);

/// Everything needed to build a league contest.
struct LeagueSetup {
  std::vector<std::string> teams;  // ContestantId order
  std::vector<double> strengths;
  std::vector<TeamRecord> base;  // standings before the first fixture; empty = zeros
  std::vector<Fixture> fixtures;
  RewardConfig rewards;
  MatchModelParams params;
};

/// Teams in rating order; every fixture team needs a rating.
LeagueSetup make_setup(const std::map<std::string, double>& ratings,
                       const std::vector<Fixture>& fixtures, RewardConfig rewards,
                       MatchModelParams params,
                       const std::map<std::string, TeamRecord>& standings = {});

/// One slot per matchday, one H/D/A event per fixture (EventId = fixture index).
std::shared_ptr<const ContestDefinition> make_league_contest(const LeagueSetup& setup);

/// Realized outcomes of played fixtures.
std::vector<OutcomeRecord> realized_history(const LeagueSetup& setup);

/// Standings after applying base and all resolved fixtures of `state`.
SeasonState season_state_of(const ContestState& state, const std::vector<TeamRecord>& base);

/// Draws a complete season from the model.
std::vector<Fixture> simulate_season(const LeagueSetup& setup, std::uint64_t seed);

struct MatchEI {
  int matchday = 0;
  std::string home;
  std::string away;
  double ei_home = 0.0;
  double ei_away = 0.0;
  std::array<double, 3> pi{};
  unsigned iteration = 1;
};

/// Post-hoc EI of every fixture (all results known), one list per iteration.
std::vector<std::vector<MatchEI>> season_ei(const LeagueSetup& setup,
                                            const SimulationConfig& config);

/// Prospective EI for the fixtures of `matchday`; earlier results are history.
std::vector<MatchEI> matchday_ei(const LeagueSetup& setup, int matchday,
                                 const SimulationConfig& config);

}  // namespace eventimp::league
