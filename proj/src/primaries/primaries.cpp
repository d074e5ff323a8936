#include "eventimp/primaries/primaries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "eventimp/core/csv.hpp"
#include "eventimp/core/errors.hpp"
#include "eventimp/core/state.hpp"

namespace eventimp::primaries {

namespace {

// Stream tags for the per-sample seeds.
constexpr std::uint64_t kPreferenceTag = 1;
constexpr std::uint64_t kPermutationTag = 2;
constexpr std::uint64_t kEngineTag = 3;

bool iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

double reputation_share(const CandidateParams& p, int candidate) {
  return 1.0 / (1.0 + std::exp(p.eta[1 - candidate] - p.eta[candidate]));
}

/// P(candidate 0 wins). Uses psi_0 - psi_1 with zeta_1 = -zeta_0, which
/// needs a single exponential.
/// `share0` is candidate 0's reputation-implied share.
double logit_win(double rho_state, double won0, double won1, const CandidateParams& p,
                 double share0) {
  double zeta0 = 0.0;
  if (const double decided = won0 + won1; decided > 0.0) zeta0 = won0 / decided - share0;
  const double d0 = p.rho[0] - rho_state;
  const double d1 = p.rho[1] - rho_state;
  const double gap = (p.eta[0] - p.eta[1]) + 2.0 * zeta0 - (d0 * d0 - d1 * d1) / 2.0;
  return 1.0 / (1.0 + std::exp(-gap));
}

const Feature& rho_feature() {
  static const Feature f = Feature::named("rho_s");
  return f;
}

const Feature& won_feature() {
  static const Feature f = Feature::named("delegates_won");
  return f;
}

class ElectionModel final : public OutcomeModel {
 public:
  explicit ElectionModel(CandidateParams params)
      : params_(params), share0_(reputation_share(params, 0)) {}

  void probabilities(const Event&, const CovariateView& x, std::span<double> out) const override {
    const double won0 = x.at(won_feature(), ContestantId(0));
    const double won1 = x.at(won_feature(), ContestantId(1));
    const double p0 = logit_win(x.at(rho_feature()), won0, won1, params_, share0_);
    out[0] = p0;
    out[1] = 1.0 - p0;
  }

 private:
  CandidateParams params_;
  double share0_;
};

/// Adds the delegates of each state in the resolved slot to its winner.
class DelegateTally final : public CovariateGenerator {
 public:
  explicit DelegateTally(std::vector<int> delegates) : delegates_(std::move(delegates)) {}

  void generate(FutureEditor& editor) const override {
    const ContestState& s = editor.history();
    std::array<double, 2> won{s.contestant_covariates().at(won_feature(), ContestantId(0)),
                              s.contestant_covariates().at(won_feature(), ContestantId(1))};
    for (EventId e : editor.resolved_slot().events) {
      won[*s.outcome(e)] += delegates_[e.index()];
    }
    editor.set_contestant_covariate(won_feature(), ContestantId(0), won[0]);
    editor.set_contestant_covariate(won_feature(), ContestantId(1), won[1]);
  }

 private:
  std::vector<int> delegates_;
};

class NominationReward final : public RewardFunction {
 public:
  explicit NominationReward(long total)
      : total_(total),
        labels_(std::make_shared<const RewardLabelSet>(
            std::vector<std::string>{std::string(kNominated), std::string(kNotNominated)})) {}

  const std::shared_ptr<const RewardLabelSet>& labels() const override { return labels_; }

  void rewards(const ContestState& state, RandomStream&,
               std::span<RewardLabel> out) const override {
    const auto labels = nomination_reward(race_of(state), total_);
    out[0] = labels_->at(labels[0]);
    out[1] = labels_->at(labels[1]);
  }

  // Once a candidate holds a majority the remaining states cannot matter.
  bool settled(const ContestState& state) const override {
    const PrimaryRace race = race_of(state);
    return 2 * race.delegates_won[0] > total_ || 2 * race.delegates_won[1] > total_;
  }

 private:
  static PrimaryRace race_of(const ContestState& state) {
    const auto& x = state.contestant_covariates();
    PrimaryRace race;
    race.delegates_won[0] = static_cast<long>(x.at(won_feature(), ContestantId(0)));
    race.delegates_won[1] = static_cast<long>(x.at(won_feature(), ContestantId(1)));
    return race;
  }

  long total_;
  std::shared_ptr<const RewardLabelSet> labels_;
};

SlotAssignment fill_framework(const SlotAssignment& framework,
                              const std::vector<std::size_t>& order) {
  SlotAssignment out;
  std::size_t next = 0;
  for (const auto& slot : framework) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(next),
                     order.begin() + static_cast<std::ptrdiff_t>(next + slot.size()));
    next += slot.size();
  }
  return out;
}

std::vector<std::size_t> flatten(const SlotAssignment& slots) {
  std::vector<std::size_t> out;
  for (const auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// EI of one state's election from a fresh race.
double state_ei(const ContestState& fresh, std::size_t state, const SimulationConfig& config) {
  const auto records = event_importances(fresh, EventId(state), config);
  return records.front().value;
}

SimulationConfig engine_config(const StudyConfig& config, std::size_t sample) {
  SimulationConfig sim;
  sim.n_mc = config.n_mc;
  sim.seed = RandomStream::derive(config.seed, {kEngineTag, sample});
  sim.iterations = 1;
  sim.distance = DistanceSpec{DistanceKind::kWinProbDifference, std::string(kNominated)};
  sim.reuse_paths = false;
  sim.threads = config.threads;
  return sim;
}

void check_study(const std::vector<StateRecord>& states, const StudyConfig& config) {
  if (states.empty()) throw ContractViolation("no states");
  if (config.samples == 0) throw ContractViolation("samples must be at least 1");
  if (config.n_mc == 0) throw ContractViolation("n_mc must be at least 1");
}

}  // namespace

std::vector<StateRecord> parse_states_csv(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  csv.require_columns({"name", "date", "delegates"});
  std::vector<StateRecord> out;
  std::set<std::string> names;
  while (csv.next()) {
    StateRecord r{csv.field("name"), csv.field("date"), csv.to_int("delegates")};
    if (r.name.empty()) csv.fail("empty state name");
    if (!names.insert(r.name).second) csv.fail("duplicate state '" + r.name + "'");
    if (!iso_date(r.date)) csv.fail("date '" + r.date + "' is not yyyy-mm-dd");
    if (r.delegates < 1) csv.fail("delegates must be at least 1");
    out.push_back(std::move(r));
  }
  if (out.empty()) throw DataError(source, 0, "no states");
  return out;
}

std::vector<StateRecord> read_states_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string(), 0, "cannot open file");
  return parse_states_csv(in, path.string());
}

double spillover(const PrimaryRace& race, const CandidateParams& params, int candidate) {
  const double decided = static_cast<double>(race.decided());
  if (decided <= 0.0) return 0.0;
  const double share = static_cast<double>(race.delegates_won[candidate]) / decided;
  return share - reputation_share(params, candidate);
}

double utility_components(double rho_state, int candidate, const PrimaryRace& race,
                          const CandidateParams& params) {
  const double d = params.rho[candidate] - rho_state;
  return params.eta[candidate] + spillover(race, params, candidate) - d * d / 2.0;
}

double win_probability(double rho_state, const PrimaryRace& race, const CandidateParams& params,
                       int candidate) {
  const double p0 = logit_win(rho_state, static_cast<double>(race.delegates_won[0]),
                              static_cast<double>(race.delegates_won[1]), params,
                              reputation_share(params, 0));
  return candidate == 0 ? p0 : 1.0 - p0;
}

std::array<std::string_view, 2> nomination_reward(const PrimaryRace& final_race,
                                                  long total_delegates) {
  std::array<std::string_view, 2> out{kNotNominated, kNotNominated};
  for (int k = 0; k < 2; ++k) {
    if (2 * final_race.delegates_won[k] > total_delegates) out[k] = kNominated;
  }
  return out;
}

ScheduleMode parse_mode(std::string_view text) {
  if (text == "regular") return ScheduleMode::kRegular;
  if (text == "random") return ScheduleMode::kRandom;
  if (text == "rank-increase" || text == "rank_increase") return ScheduleMode::kRankIncrease;
  throw ContractViolation("unknown schedule mode '" + std::string(text) +
                          "' (expected regular, random or rank-increase)");
}

std::string_view mode_name(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::kRegular:
      return "regular";
    case ScheduleMode::kRandom:
      return "random";
    case ScheduleMode::kRankIncrease:
      return "rank-increase";
  }
  return "?";
}

SlotAssignment regular_slots(const std::vector<StateRecord>& states) {
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return states[a].date < states[b].date; });
  SlotAssignment out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || states[order[i]].date != states[order[i - 1]].date) out.emplace_back();
    out.back().push_back(order[i]);
  }
  return out;
}

SlotAssignment build_slots(const std::vector<StateRecord>& states, ScheduleMode mode,
                           RandomStream* rng) {
  if (states.empty()) throw ContractViolation("no states");
  const SlotAssignment regular = regular_slots(states);
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), 0);
  switch (mode) {
    case ScheduleMode::kRegular:
      return regular;
    case ScheduleMode::kRandom:
      if (!rng) throw ContractViolation("random schedule needs a random stream");
      std::shuffle(order.begin(), order.end(), *rng);
      return fill_framework(regular, order);
    case ScheduleMode::kRankIncrease:
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (states[a].delegates != states[b].delegates) {
          return states[a].delegates < states[b].delegates;
        }
        return states[a].name < states[b].name;
      });
      return fill_framework(regular, order);
  }
  throw ContractViolation("unknown schedule mode");
}

ContestSchedule to_schedule(const SlotAssignment& slots) {
  std::vector<TimeSlot> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    TimeSlot t{static_cast<int>(i + 1), {}};
    for (std::size_t s : slots[i]) t.events.emplace_back(s);
    out.push_back(std::move(t));
  }
  return ContestSchedule(std::move(out));
}

ContestSchedule build_schedule(const std::vector<StateRecord>& states, ScheduleMode mode,
                               RandomStream* rng) {
  return to_schedule(build_slots(states, mode, rng));
}

SlotAssignment positional_slots(const std::vector<StateRecord>& states, std::size_t state,
                                std::size_t position) {
  if (state >= states.size()) throw ContractViolation("unknown state");
  if (position < 1 || position > states.size()) {
    throw ContractViolation("position " + std::to_string(position) + " outside 1.." +
                            std::to_string(states.size()));
  }
  const SlotAssignment regular = regular_slots(states);
  auto order = flatten(regular);
  std::erase(order, state);
  order.insert(order.begin() + static_cast<std::ptrdiff_t>(position - 1), state);
  return fill_framework(regular, order);
}

std::shared_ptr<const ContestDefinition> make_primary_contest(
    const std::vector<StateRecord>& states, const ContestSchedule& schedule,
    const std::vector<double>& preferences, const CandidateParams& params) {
  if (preferences.size() != states.size()) {
    throw ContractViolation("need one preference per state");
  }
  auto def = std::make_shared<ContestDefinition>();
  def->contestants = {{"candidate-0"}, {"candidate-1"}};
  std::vector<int> delegates;
  long total = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    Event e;
    e.name = states[i].name;
    e.participants = {ContestantId(0), ContestantId(1)};
    e.outcome_space = {"candidate-0", "candidate-1"};
    e.covariates.set(rho_feature(), preferences[i]);
    def->events.push_back(std::move(e));
    delegates.push_back(states[i].delegates);
    total += states[i].delegates;
  }
  def->schedule = schedule;
  def->contestant_covariates.set(won_feature(), ContestantId(0), 0.0);
  def->contestant_covariates.set(won_feature(), ContestantId(1), 0.0);
  def->outcome_model = std::make_shared<ElectionModel>(params);
  def->generator = std::make_shared<DelegateTally>(std::move(delegates));
  def->reward = std::make_shared<NominationReward>(total);
  return def;
}

std::vector<double> draw_preferences(std::size_t n_states, RandomStream& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n_states);
  for (double& v : out) v = normal(rng);
  return out;
}

StudyResult run_study(const std::vector<StateRecord>& states, ScheduleMode mode,
                      const StudyConfig& config) {
  check_study(states, config);
  StudyResult result;
  for (const auto& s : states) {
    result.names.push_back(s.name);
    result.delegates.push_back(s.delegates);
  }
  for (std::size_t j = 0; j < config.samples; ++j) {
    RandomStream pref_rng(RandomStream::derive(config.seed, {kPreferenceTag, j}), 0);
    const auto preferences = draw_preferences(states.size(), pref_rng);
    RandomStream perm_rng(RandomStream::derive(config.seed, {kPermutationTag, j}), 0);
    const auto schedule = build_schedule(states, mode, &perm_rng);
    const auto def = make_primary_contest(states, schedule, preferences, config.params);
    const ContestState fresh(def);
    const auto sim = engine_config(config, j);
    std::vector<double> row(states.size());
    for (std::size_t s = 0; s < states.size(); ++s) row[s] = state_ei(fresh, s, sim);
    result.samples.push_back(std::move(row));
  }
  for (std::size_t s = 0; s < states.size(); ++s) {
    std::vector<double> col;
    for (const auto& row : result.samples) col.push_back(row[s]);
    const auto [m, sd] = mean_sd(col);
    result.mean.push_back(m);
    result.sd.push_back(sd);
  }
  return result;
}

PositionalResult positional_study(const std::vector<StateRecord>& states,
                                  std::string_view state_name,
                                  const std::vector<std::size_t>& positions,
                                  const StudyConfig& config) {
  check_study(states, config);
  const auto it = std::find_if(states.begin(), states.end(),
                               [&](const StateRecord& s) { return s.name == state_name; });
  if (it == states.end()) throw ContractViolation("unknown state '" + std::string(state_name) + "'");
  const auto state = static_cast<std::size_t>(it - states.begin());

  PositionalResult result{std::string(state_name), positions, {}};
  for (std::size_t p : positions) {
    const auto schedule = to_schedule(positional_slots(states, state, p));
    std::vector<double> values;
    for (std::size_t j = 0; j < config.samples; ++j) {
      RandomStream pref_rng(RandomStream::derive(config.seed, {kPreferenceTag, j}), 0);
      const auto preferences = draw_preferences(states.size(), pref_rng);
      const auto def = make_primary_contest(states, schedule, preferences, config.params);
      values.push_back(state_ei(ContestState(def), state, engine_config(config, j)));
    }
    result.values.push_back(std::move(values));
  }
  return result;
}

}  // namespace eventimp::primaries
