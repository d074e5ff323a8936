#include "eventimp/league/league.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "eventimp/core/csv.hpp"
#include "eventimp/core/errors.hpp"
#include "eventimp/core/state.hpp"

namespace eventimp::league {

namespace {

constexpr std::uint64_t kSeasonTag = 11;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool is_label(std::string_view label) {
  const auto& all = league_labels();
  return std::find(all.begin(), all.end(), label) != all.end();
}

bool international(std::string_view label) {
  return label == kChampion || label == kChampionsLeague || label == kEuropaLeague;
}

std::string vocabulary_text() {
  std::string out;
  for (const auto& c : reward_code_vocabulary()) out += (out.empty() ? "" : ", ") + c;
  return out;
}

const Feature& strength_feature() {
  static const Feature f = Feature::named("strength");
  return f;
}

const Feature& home_feature() {
  static const Feature f = Feature::named("home_advantage");
  return f;
}

class OrderedLogitModel final : public OutcomeModel {
 public:
  explicit OrderedLogitModel(MatchModelParams params)
      : params_(params), scores_(params.lambda_home, params.lambda_away) {
    params_.validate();
  }

  void probabilities(const Event& event, const CovariateView& x,
                     std::span<double> out) const override {
    const ContestantId h = event.participants[0];
    const ContestantId a = event.participants[1];
    MatchCovariates m;
    m.strength_diff = x.at(strength_feature(), h) - x.at(strength_feature(), a);
    m.home_advantage = x.find(home_feature()).value_or(1.0);
    m.ei_home = x.find(ei_feature(), h).value_or(0.0);
    m.ei_away = x.find(ei_feature(), a).value_or(0.0);
    const auto p = match_outcome_probs(m, params_);
    std::copy(p.begin(), p.end(), out.begin());
  }

  bool samples_detail() const override { return params_.scores; }

  OutcomeDetail sample_detail(const Event&, OutcomeIndex outcome,
                              RandomStream& rng) const override {
    const auto s = scores_(static_cast<Outcome>(outcome), rng);
    return OutcomeDetail::pair(s[0], s[1]);
  }

  ImportanceUsage importance_usage() const override {
    return params_.ei_home_coef != 0.0 || params_.ei_away_coef != 0.0 ? ImportanceUsage::kOptional
                                                                       : ImportanceUsage::kIgnored;
  }

 private:
  MatchModelParams params_;
  ScoreTable scores_;
};

SeasonState tally(const ContestState& state, const std::vector<TeamRecord>& base) {
  const ContestDefinition& def = state.contest();
  SeasonState season;
  season.teams = base.empty() ? std::vector<TeamRecord>(def.contestants.size()) : base;
  for (std::size_t i = 0; i < def.events.size(); ++i) {
    const EventId e(i);
    const auto outcome = state.outcome(e);
    if (!outcome) {
      throw ContractViolation("fixture '" + def.events[i].name + "' is unresolved");
    }
    std::optional<std::array<int, 2>> score;
    if (const auto d = state.detail(e)) score = std::array<int, 2>{d->values[0], d->values[1]};
    season.add_result(def.events[i].participants[0].index(), def.events[i].participants[1].index(),
                      static_cast<Outcome>(*outcome), score);
  }
  return season;
}

class LeagueReward final : public RewardFunction {
 public:
  LeagueReward(std::vector<std::string> names, std::vector<TeamRecord> base,
               RewardStructure structure, std::vector<RewardOverride> overrides,
               std::vector<CupState> cups)
      : names_(std::move(names)),
        base_(std::move(base)),
        structure_(std::move(structure)),
        overrides_(std::move(overrides)),
        cups_(std::move(cups)),
        labels_(std::make_shared<const RewardLabelSet>(league_labels())) {}

  const std::shared_ptr<const RewardLabelSet>& labels() const override { return labels_; }

  bool randomized() const override { return !cups_.empty(); }

  void rewards(const ContestState& state, RandomStream& rng,
               std::span<RewardLabel> out) const override {
    const auto ranking = final_ranking(tally(state, base_), names_);
    std::vector<std::size_t> winners;
    for (const auto& cup : cups_) winners.push_back(cup.finalists[rng.categorical(cup.weights)]);
    assign(ranking, winners, out);
  }

  std::vector<RewardScenario> reward_scenarios(const ContestState& state) const override {
    const auto ranking = final_ranking(tally(state, base_), names_);
    std::vector<RewardScenario> out;
    std::vector<std::size_t> pick(cups_.size(), 0);
    while (true) {
      RewardScenario s;
      std::vector<std::size_t> winners;
      for (std::size_t c = 0; c < cups_.size(); ++c) {
        s.probability *= cups_[c].weights[pick[c]];
        winners.push_back(cups_[c].finalists[pick[c]]);
      }
      s.labels.resize(names_.size());
      assign(ranking, winners, s.labels);
      if (s.probability > 0.0) out.push_back(std::move(s));
      std::size_t c = 0;
      while (c < pick.size() && ++pick[c] == cups_[c].finalists.size()) pick[c++] = 0;
      if (c == pick.size()) break;
    }
    return out;
  }

 private:
  void assign(const std::vector<std::size_t>& ranking, const std::vector<std::size_t>& winners,
              std::span<RewardLabel> out) const {
    const auto effective = apply_cup_transfer(ranking, winners, structure_);
    for (std::size_t t = 0; t < names_.size(); ++t) {
      std::string_view label = effective[t];
      for (const auto& o : overrides_) {
        if (o.team == names_[t] && o.from == label) label = o.to;
      }
      out[t] = labels_->at(label);
    }
  }

  std::vector<std::string> names_;
  std::vector<TeamRecord> base_;
  RewardStructure structure_;
  std::vector<RewardOverride> overrides_;
  std::vector<CupState> cups_;
  std::shared_ptr<const RewardLabelSet> labels_;
};

std::vector<Fixture> circle_rounds(std::vector<std::string> teams, RandomStream* rng) {
  const std::size_t n = teams.size();
  if (n < 2 || n % 2 != 0) {
    throw ContractViolation("round robin needs an even number of teams, got " + std::to_string(n));
  }
  std::set<std::string> unique(teams.begin(), teams.end());
  if (unique.size() != n) throw ContractViolation("duplicate team names");
  if (rng) std::shuffle(teams.begin(), teams.end(), *rng);

  std::vector<Fixture> out;
  std::vector<std::string> arr = teams;
  for (std::size_t r = 0; r + 1 < n; ++r) {
    for (std::size_t i = 0; i < n / 2; ++i) {
      const auto& a = arr[i];
      const auto& b = arr[n - 1 - i];
      const bool a_home = (i + r) % 2 == 0;
      out.push_back(Fixture{static_cast<int>(r + 1), a_home ? a : b, a_home ? b : a, std::nullopt});
    }
    std::rotate(arr.begin() + 1, arr.end() - 1, arr.end());
  }
  return out;
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string(), 0, "cannot open file");
  return in;
}

MatchEI make_match_ei(const ContestDefinition& def, const Fixture& f, EventId e,
                      std::span<const EIRecord> records, const std::vector<double>& pi,
                      unsigned iteration) {
  MatchEI m{f.matchday, f.home, f.away, 0.0, 0.0, {pi[0], pi[1], pi[2]}, iteration};
  const auto& participants = def.event(e).participants;
  for (const auto& r : records) {
    if (r.event != e) continue;
    if (r.contestant == participants[0]) m.ei_home = r.value;
    if (r.contestant == participants[1]) m.ei_away = r.value;
  }
  return m;
}

}  // namespace

std::vector<Fixture> generate_double_round_robin(std::vector<std::string> teams,
                                                 RandomStream* rng) {
  auto first = circle_rounds(std::move(teams), rng);
  const int half = first.empty() ? 0 : first.back().matchday;
  std::vector<Fixture> out = first;
  for (const auto& f : first) out.push_back(Fixture{f.matchday + half, f.away, f.home, std::nullopt});
  return out;
}

std::vector<Fixture> generate_single_round_robin(std::vector<std::string> teams,
                                                 RandomStream* rng) {
  return circle_rounds(std::move(teams), rng);
}

Outcome outcome_of(int goals_home, int goals_away) {
  if (goals_home > goals_away) return kHome;
  if (goals_home < goals_away) return kAway;
  return kDraw;
}

void MatchModelParams::validate() const {
  if (!(cut_low < cut_high)) throw ContractViolation("cut points must be strictly increasing");
  if (!(lambda_home > 0.0) || !(lambda_away > 0.0)) {
    throw ContractViolation("Poisson means must be positive");
  }
}

std::array<double, 3> match_outcome_probs(const MatchCovariates& x,
                                          const MatchModelParams& params) {
  const double z = params.strength_coef * x.strength_diff + params.home_coef * x.home_advantage +
                   params.ei_home_coef * x.ei_home + params.ei_away_coef * x.ei_away;
  const double f_low = logistic(params.cut_low - z);
  const double f_high = logistic(params.cut_high - z);
  return {1.0 - f_high, f_high - f_low, f_low};
}

PoissonSampler::PoissonSampler(double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ContractViolation("Poisson mean must be positive");
  }
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  cdf_.push_back(cdf);
  for (int k = 1; (k <= lambda || 1.0 - cdf > 1e-15) && k < 1000; ++k) {
    pmf *= lambda / k;
    cdf += pmf;
    cdf_.push_back(cdf);
  }
}

int PoissonSampler::operator()(RandomStream& rng) const {
  const double u = static_cast<double>(rng()) * 0x1.0p-32;
  for (std::size_t k = 0; k < cdf_.size(); ++k) {
    if (u < cdf_[k]) return static_cast<int>(k);
  }
  return static_cast<int>(cdf_.size());
}

std::array<int, 2> draw_score(Outcome outcome, const PoissonSampler& home,
                              const PoissonSampler& away, RandomStream& rng) {
  for (int attempt = 0; attempt < kMaxScoreAttempts; ++attempt) {
    const int h = home(rng);
    const int a = away(rng);
    if (outcome_of(h, a) == outcome) return {h, a};
  }
  throw std::runtime_error("score rejection sampling exceeded " +
                           std::to_string(kMaxScoreAttempts) + " attempts");
}

std::array<int, 2> draw_score(Outcome outcome, const MatchModelParams& params, RandomStream& rng) {
  return draw_score(outcome, PoissonSampler(params.lambda_home), PoissonSampler(params.lambda_away),
                    rng);
}

ScoreTable::ScoreTable(double lambda_home, double lambda_away) {
  auto pmf = [](double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw ContractViolation("Poisson mean must be positive");
    }
    std::vector<double> p{std::exp(-lambda)};
    double cdf = p[0];
    for (int k = 1; (k <= lambda || 1.0 - cdf > 1e-15) && k < 1000; ++k) {
      p.push_back(p.back() * lambda / k);
      cdf += p.back();
    }
    return p;
  };
  const auto ph = pmf(lambda_home);
  const auto pa = pmf(lambda_away);
  std::array<double, 3> total{};
  for (std::size_t h = 0; h < ph.size(); ++h) {
    for (std::size_t a = 0; a < pa.size(); ++a) {
      const auto o = outcome_of(static_cast<int>(h), static_cast<int>(a));
      total[o] += ph[h] * pa[a];
      tables_[o].push_back({total[o], {static_cast<int>(h), static_cast<int>(a)}});
    }
  }
  for (std::size_t o = 0; o < 3; ++o) {
    for (auto& e : tables_[o]) e.cdf /= total[o];
    tables_[o].back().cdf = 1.0;
  }
}

std::array<int, 2> ScoreTable::operator()(Outcome outcome, RandomStream& rng) const {
  const auto& t = tables_.at(outcome);
  const double u = static_cast<double>(rng()) * 0x1.0p-32;
  const auto it = std::upper_bound(t.begin(), t.end(), u,
                                   [](double v, const Entry& e) { return v < e.cdf; });
  return it == t.end() ? t.back().score : it->score;
}

double ScoreTable::probability(Outcome outcome, int home, int away) const {
  const auto& t = tables_.at(outcome);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].score == std::array<int, 2>{home, away}) {
      return t[i].cdf - (i == 0 ? 0.0 : t[i - 1].cdf);
    }
  }
  return 0.0;
}

void SeasonState::add_result(std::size_t home, std::size_t away, Outcome outcome,
                             std::optional<std::array<int, 2>> score) {
  auto& h = teams.at(home);
  auto& a = teams.at(away);
  if (score && outcome_of((*score)[0], (*score)[1]) != outcome) {
    throw ContractViolation("score does not match the outcome");
  }
  switch (outcome) {
    case kHome:
      h.points += 3;
      break;
    case kDraw:
      h.points += 1;
      a.points += 1;
      break;
    case kAway:
      a.points += 3;
      break;
  }
  if (score) {
    const int gh = (*score)[0];
    const int ga = (*score)[1];
    h.goal_difference += gh - ga;
    a.goal_difference += ga - gh;
    h.goals_for += gh;
    a.goals_for += ga;
  }
}

std::vector<std::size_t> final_ranking(const SeasonState& state,
                                       const std::vector<std::string>& names) {
  if (names.size() != state.teams.size()) {
    throw ContractViolation("ranking needs one name per team");
  }
  std::vector<std::size_t> order(state.teams.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = state.teams[x];
    const auto& b = state.teams[y];
    if (a.points != b.points) return a.points > b.points;
    if (a.goal_difference != b.goal_difference) return a.goal_difference > b.goal_difference;
    if (a.goals_for != b.goals_for) return a.goals_for > b.goals_for;
    return names[x] < names[y];
  });
  return order;
}

const std::vector<std::string>& league_labels() {
  static const std::vector<std::string> labels{
      std::string(kChampion),         std::string(kChampionsLeague),
      std::string(kEuropaLeague),     std::string(kEuropaLeaguePlayoff),
      std::string(kNone),             std::string(kRelegationPlayoff),
      std::string(kDirectRelegation)};
  return labels;
}

const std::vector<std::string>& reward_code_vocabulary() {
  static const std::vector<std::string> codes{"4/3/DDD", "4/3/PDD", "3/3/DDD", "3/3/DD",
                                              "3/3/PDD", "3/3/PD",  "2/4/DD",  "2/3/DDD",
                                              "2/3/DD",  "2/3/PPD", "2/2/DD",  "2/2/PPD"};
  return codes;
}

int RewardStructure::league_size() const {
  int n = 0;
  for (const auto& r : regions) n += r.size;
  return n;
}

int RewardStructure::international_last_rank() const {
  int rank = 0;
  int last = 0;
  for (const auto& r : regions) {
    rank += r.size;
    if (international(r.label)) last = rank;
  }
  return last;
}

int RewardStructure::europa_last_rank() const {
  int rank = 0;
  int last = 0;
  for (const auto& r : regions) {
    rank += r.size;
    if (r.label == kEuropaLeague) last = rank;
  }
  return last;
}

RewardStructure reward_regions(std::string_view code, int league_size) {
  const auto& vocab = reward_code_vocabulary();
  if (std::find(vocab.begin(), vocab.end(), code) == vocab.end()) {
    throw ContractViolation("unknown reward code '" + std::string(code) +
                            "'; known codes: " + vocabulary_text());
  }
  const auto parts = split(code, '/');
  const int cl = std::stoi(parts[0]);
  const int el = std::stoi(parts[1]);
  const std::string& relegation = parts[2];
  const int playoff = static_cast<int>(std::count(relegation.begin(), relegation.end(), 'P'));
  const int direct = static_cast<int>(std::count(relegation.begin(), relegation.end(), 'D'));
  // Two relegation play-off places mark the Dutch format, where the last
  // europa-league place goes through a four-team play-off block.
  const bool el_playoff = playoff >= 2;

  RewardStructure s{std::string(code), {}};
  s.regions.push_back({std::string(kChampion), 1});
  s.regions.push_back({std::string(kChampionsLeague), cl - 1});
  if (el_playoff) {
    s.regions.push_back({std::string(kEuropaLeague), el - 1});
    s.regions.push_back({std::string(kEuropaLeaguePlayoff), 4});
  } else {
    s.regions.push_back({std::string(kEuropaLeague), el});
  }
  const int used = s.league_size() + playoff + direct;
  if (used > league_size) {
    throw ContractViolation("reward code '" + std::string(code) + "' needs more than " +
                            std::to_string(league_size) + " teams");
  }
  s.regions.push_back({std::string(kNone), league_size - used});
  s.regions.push_back({std::string(kRelegationPlayoff), playoff});
  s.regions.push_back({std::string(kDirectRelegation), direct});
  std::erase_if(s.regions, [](const Region& r) { return r.size == 0; });
  return s;
}

RewardStructure explicit_regions(std::string_view spec, int league_size) {
  RewardStructure s{"custom", {}};
  for (const auto& item : split(spec, ',')) {
    const auto kv = split(item, ':');
    if (kv.size() != 2) throw ContractViolation("region '" + item + "' is not label:size");
    if (!is_label(kv[0])) throw ContractViolation("unknown reward label '" + kv[0] + "'");
    int size = 0;
    try {
      size = std::stoi(kv[1]);
    } catch (const std::exception&) {
      throw ContractViolation("region size '" + kv[1] + "' is not an integer");
    }
    if (size < 0) throw ContractViolation("region sizes must be non-negative");
    if (size > 0) s.regions.push_back({kv[0], size});
  }
  if (s.league_size() != league_size) {
    throw ContractViolation("regions cover " + std::to_string(s.league_size()) + " ranks, league has " +
                            std::to_string(league_size));
  }
  return s;
}

std::string_view reward_of_rank(int rank, const RewardStructure& structure) {
  if (rank < 1 || rank > structure.league_size()) {
    throw ContractViolation("rank " + std::to_string(rank) + " outside the league");
  }
  int last = 0;
  for (const auto& r : structure.regions) {
    last += r.size;
    if (rank <= last) return r.label;
  }
  throw ContractViolation("rank outside the league");
}

std::string_view reward_of_rank(int rank, const RewardStructure& structure, std::string_view team,
                                const std::vector<RewardOverride>& overrides) {
  std::string_view label = reward_of_rank(rank, structure);
  for (const auto& o : overrides) {
    if (o.team == team && o.from == label) label = o.to;
  }
  return label;
}

std::vector<std::string_view> apply_cup_transfer(const std::vector<std::size_t>& ranking,
                                                 const std::vector<std::size_t>& cup_winners,
                                                 const RewardStructure& structure) {
  const std::size_t n = ranking.size();
  if (static_cast<int>(n) != structure.league_size()) {
    throw ContractViolation("ranking size does not match the reward structure");
  }
  std::vector<std::string_view> label(n);
  std::vector<int> rank_of(n);
  for (std::size_t r = 0; r < n; ++r) {
    rank_of.at(ranking[r]) = static_cast<int>(r + 1);
    label[ranking[r]] = reward_of_rank(static_cast<int>(r + 1), structure);
  }

  const int qualified = structure.international_last_rank();
  int extra = 0;
  std::vector<bool> via_cup(n, false);
  for (std::size_t c = 0; c < cup_winners.size(); ++c) {
    const std::size_t w = cup_winners[c];
    const bool repeat =
        std::find(cup_winners.begin(), cup_winners.begin() + static_cast<std::ptrdiff_t>(c), w) !=
        cup_winners.begin() + static_cast<std::ptrdiff_t>(c);
    if (repeat || rank_of.at(w) <= qualified) {
      ++extra;
    } else {
      via_cup[w] = true;
      label[w] = kEuropaLeague;
    }
  }

  int rank = structure.europa_last_rank() > 0 ? structure.europa_last_rank() : qualified;
  while (extra > 0 && rank < static_cast<int>(n)) {
    const std::size_t t = ranking[static_cast<std::size_t>(rank)];
    ++rank;
    if (via_cup[t]) continue;
    if (label[t] != kNone && label[t] != kEuropaLeaguePlayoff) break;
    label[t] = kEuropaLeague;
    --extra;
  }
  return label;
}

RewardConfig parse_reward_config(std::istream& in, const std::string& source) {
  int league_size = 0;
  std::string code;
  std::string regions;
  int code_line = 0;
  int regions_line = 0;
  RewardConfig cfg;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> void { throw DataError(source, line_no, what); };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key == "league_size") {
      try {
        league_size = std::stoi(value);
      } catch (const std::exception&) {
        fail("league_size must be an integer");
      }
    } else if (key == "code") {
      code = value;
      code_line = line_no;
    } else if (key == "regions") {
      regions = value;
      regions_line = line_no;
    } else if (key == "override") {
      const auto colon = value.rfind(':');
      const auto arrow = value.find("->");
      if (colon == std::string::npos || arrow == std::string::npos || arrow < colon) {
        fail("override must be 'team: from -> to'");
      }
      RewardOverride o{trim(std::string_view(value).substr(0, colon)),
                       trim(std::string_view(value).substr(colon + 1, arrow - colon - 1)),
                       trim(std::string_view(value).substr(arrow + 2))};
      if (!is_label(o.from) || !is_label(o.to)) fail("override uses an unknown reward label");
      cfg.overrides.push_back(std::move(o));
    } else if (key == "cup") {
      std::vector<std::pair<std::string, double>> cup;
      double total = 0.0;
      for (const auto& item : split(value, ',')) {
        const auto colon = item.rfind(':');
        if (colon == std::string::npos) fail("cup entries must be 'team: probability'");
        double w = 0.0;
        try {
          w = std::stod(item.substr(colon + 1));
        } catch (const std::exception&) {
          fail("cup probability is not a number");
        }
        if (!(w >= 0.0)) fail("cup probabilities must be non-negative");
        total += w;
        cup.emplace_back(trim(std::string_view(item).substr(0, colon)), w);
      }
      if (std::abs(total - 1.0) > 1e-9) fail("cup probabilities must sum to one");
      cfg.cups.push_back(std::move(cup));
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (league_size <= 0) throw DataError(source, 0, "league_size is required");
  try {
    if (!regions.empty()) {
      cfg.structure = explicit_regions(regions, league_size);
      if (!code.empty()) cfg.structure.code = code;
    } else if (!code.empty()) {
      cfg.structure = reward_regions(code, league_size);
    } else {
      throw DataError(source, 0, "either code or regions is required");
    }
  } catch (const ContractViolation& e) {
    throw DataError(source, regions.empty() ? code_line : regions_line, e.what());
  }
  return cfg;
}

RewardConfig read_reward_config(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_reward_config(in, path.string());
}

std::vector<Fixture> parse_fixtures_csv(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  csv.require_columns({"matchday", "home", "away", "goals_home", "goals_away"});
  std::vector<Fixture> out;
  std::map<int, std::set<std::string>> busy;
  while (csv.next()) {
    Fixture f{csv.to_int("matchday"), trim(csv.field("home")), trim(csv.field("away")),
              std::nullopt};
    if (f.home.empty() || f.away.empty()) csv.fail("empty team name");
    if (f.home == f.away) csv.fail("team '" + f.home + "' plays itself");
    for (const auto& team : {f.home, f.away}) {
      if (!busy[f.matchday].insert(team).second) {
        csv.fail("team '" + team + "' plays twice on matchday " + std::to_string(f.matchday));
      }
    }
    const bool has_home = !trim(csv.field("goals_home")).empty();
    const bool has_away = !trim(csv.field("goals_away")).empty();
    if (has_home != has_away) csv.fail("both goals or neither must be given");
    if (has_home) {
      const int gh = csv.to_int("goals_home");
      const int ga = csv.to_int("goals_away");
      if (gh < 0 || ga < 0) csv.fail("goals must be non-negative");
      f.result = std::array<int, 2>{gh, ga};
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Fixture> read_fixtures_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_fixtures_csv(in, path.string());
}

std::map<std::string, double> parse_ratings_csv(std::istream& in, const std::string& source) {
  CsvReader csv(in, source);
  csv.require_columns({"team", "strength"});
  std::map<std::string, double> out;
  while (csv.next()) {
    const std::string team = trim(csv.field("team"));
    const double s = csv.to_double("strength");
    if (!std::isfinite(s)) csv.fail("strength must be finite");
    if (!out.emplace(team, s).second) csv.fail("duplicate team '" + team + "'");
  }
  return out;
}

std::map<std::string, double> read_ratings_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_ratings_csv(in, path.string());
}

std::map<std::string, TeamRecord> parse_standings_csv(std::istream& in,
                                                      const std::string& source) {
  CsvReader csv(in, source);
  csv.require_columns({"team", "points", "goal_difference", "goals_for"});
  std::map<std::string, TeamRecord> out;
  while (csv.next()) {
    const std::string team = trim(csv.field("team"));
    TeamRecord r{csv.to_int("points"), csv.to_int("goal_difference"), csv.to_int("goals_for")};
    if (!out.emplace(team, r).second) csv.fail("duplicate team '" + team + "'");
  }
  return out;
}

std::map<std::string, TeamRecord> read_standings_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_standings_csv(in, path.string());
}

LeagueSetup make_setup(const std::map<std::string, double>& ratings,
                       const std::vector<Fixture>& fixtures, RewardConfig rewards,
                       MatchModelParams params,
                       const std::map<std::string, TeamRecord>& standings) {
  params.validate();
  LeagueSetup s;
  for (const auto& [team, strength] : ratings) {
    s.teams.push_back(team);
    s.strengths.push_back(strength);
  }
  for (const auto& f : fixtures) {
    for (const auto& team : {f.home, f.away}) {
      if (!ratings.contains(team)) throw DataError("fixtures", 0, "team '" + team + "' has no rating");
    }
  }
  if (!standings.empty()) {
    for (const auto& [team, record] : standings) {
      if (!ratings.contains(team)) throw DataError("standings", 0, "unknown team '" + team + "'");
    }
    for (const auto& team : s.teams) {
      const auto it = standings.find(team);
      s.base.push_back(it == standings.end() ? TeamRecord{} : it->second);
    }
  }
  if (rewards.structure.league_size() != static_cast<int>(s.teams.size())) {
    throw DataError("rewards", 0,
                    "reward regions cover " + std::to_string(rewards.structure.league_size()) +
                        " ranks but the league has " + std::to_string(s.teams.size()) + " teams");
  }
  for (const auto& o : rewards.overrides) {
    if (!ratings.contains(o.team)) throw DataError("rewards", 0, "unknown team '" + o.team + "'");
  }
  for (const auto& cup : rewards.cups) {
    for (const auto& [team, w] : cup) {
      if (!ratings.contains(team)) throw DataError("rewards", 0, "unknown cup team '" + team + "'");
    }
  }
  s.fixtures = fixtures;
  s.rewards = std::move(rewards);
  s.params = params;
  return s;
}

std::shared_ptr<const ContestDefinition> make_league_contest(const LeagueSetup& setup) {
  auto def = std::make_shared<ContestDefinition>();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < setup.teams.size(); ++i) {
    def->contestants.push_back({setup.teams[i]});
    index[setup.teams[i]] = i;
    def->contestant_covariates.set(strength_feature(), ContestantId(i), setup.strengths.at(i));
  }
  std::map<int, std::vector<EventId>> by_matchday;
  for (std::size_t i = 0; i < setup.fixtures.size(); ++i) {
    const auto& f = setup.fixtures[i];
    Event e;
    e.name = "matchday " + std::to_string(f.matchday) + ": " + f.home + " - " + f.away;
    e.participants = {ContestantId(index.at(f.home)), ContestantId(index.at(f.away))};
    e.outcome_space = {"H", "D", "A"};
    def->events.push_back(std::move(e));
    by_matchday[f.matchday].emplace_back(i);
  }
  std::vector<TimeSlot> slots;
  for (auto& [md, events] : by_matchday) slots.push_back(TimeSlot{md, std::move(events)});
  def->schedule = ContestSchedule(std::move(slots));

  std::vector<CupState> cups;
  for (const auto& cup : setup.rewards.cups) {
    CupState c;
    for (const auto& [team, w] : cup) {
      c.finalists.push_back(index.at(team));
      c.weights.push_back(w);
    }
    cups.push_back(std::move(c));
  }
  def->outcome_model = std::make_shared<OrderedLogitModel>(setup.params);
  def->reward = std::make_shared<LeagueReward>(setup.teams, setup.base, setup.rewards.structure,
                                               setup.rewards.overrides, std::move(cups));
  return def;
}

std::vector<OutcomeRecord> realized_history(const LeagueSetup& setup) {
  std::vector<OutcomeRecord> out;
  for (std::size_t i = 0; i < setup.fixtures.size(); ++i) {
    const auto& r = setup.fixtures[i].result;
    if (!r) continue;
    OutcomeRecord rec{EventId(i), outcome_of((*r)[0], (*r)[1]), std::nullopt};
    if (setup.params.scores) rec.detail = OutcomeDetail::pair((*r)[0], (*r)[1]);
    out.push_back(rec);
  }
  return out;
}

SeasonState season_state_of(const ContestState& state, const std::vector<TeamRecord>& base) {
  return tally(state, base);
}

std::vector<Fixture> simulate_season(const LeagueSetup& setup, std::uint64_t seed) {
  LeagueSetup blank = setup;
  for (auto& f : blank.fixtures) f.result.reset();
  const auto def = make_league_contest(blank);
  RandomStream rng(RandomStream::derive(seed, {kSeasonTag}), 0);
  const ContestState done = simulate_remainder(ContestState(def), rng);
  std::vector<Fixture> out = blank.fixtures;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const EventId e(i);
    if (const auto d = done.detail(e)) {
      out[i].result = std::array<int, 2>{d->values[0], d->values[1]};
    } else {
      // Without scores a representative result keeps the outcome.
      static constexpr std::array<std::array<int, 2>, 3> kScore{{{1, 0}, {0, 0}, {0, 1}}};
      out[i].result = kScore.at(*done.outcome(e));
    }
  }
  return out;
}

std::vector<std::vector<MatchEI>> season_ei(const LeagueSetup& setup,
                                            const SimulationConfig& config) {
  for (const auto& f : setup.fixtures) {
    if (!f.result) {
      throw ContractViolation("post-hoc analysis needs every result; " + f.home + " - " + f.away +
                              " is unplayed");
    }
  }
  const auto contest = make_league_contest(setup);
  const auto history = realized_history(setup);
  const auto rounds = iterative_ei(contest, history, config);
  std::vector<std::vector<MatchEI>> out;
  for (std::size_t it = 0; it < rounds.size(); ++it) {
    const auto def = it == 0 ? contest : with_importance_covariates(*contest, rounds[it - 1]);
    const ContestState fresh(def);
    std::vector<MatchEI> matches;
    for (std::size_t i = 0; i < setup.fixtures.size(); ++i) {
      const EventId e(i);
      matches.push_back(make_match_ei(*def, setup.fixtures[i], e, rounds[it],
                                      outcome_probabilities(fresh, e),
                                      static_cast<unsigned>(it + 1)));
    }
    out.push_back(std::move(matches));
  }
  return out;
}

std::vector<MatchEI> matchday_ei(const LeagueSetup& setup, int matchday,
                                 const SimulationConfig& config) {
  const auto def = make_league_contest(setup);
  const auto pos = def->schedule.position_of(matchday);
  if (!pos) throw ContractViolation("no fixtures on matchday " + std::to_string(matchday));

  std::vector<OutcomeRecord> records(setup.fixtures.size());
  for (const auto& r : realized_history(setup)) records[r.event.index()] = r;
  ContestState state(def);
  for (std::size_t s = 0; s < *pos; ++s) {
    for (EventId e : def->schedule[s].events) {
      if (!setup.fixtures[e.index()].result) {
        throw ContractViolation("fixture " + setup.fixtures[e.index()].home + " - " +
                                setup.fixtures[e.index()].away + " before the cut-off is unplayed");
      }
      state.apply_outcome_in_place(records[e.index()]);
    }
  }
  const auto ei = slot_importance(state, config, 1);
  std::vector<MatchEI> out;
  for (EventId e : def->schedule[*pos].events) {
    out.push_back(make_match_ei(*def, setup.fixtures[e.index()], e, ei,
                                outcome_probabilities(state, e), 1));
  }
  return out;
}

}  // namespace eventimp::league
