#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "eventimp/core/errors.hpp"
#include "eventimp/core/state.hpp"
#include "eventimp/primaries/primaries.hpp"

using namespace eventimp;
using namespace eventimp::primaries;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::vector<StateRecord>& states() {
  static const auto s = read_states_csv(EVENTIMP_DATA_DIR "/primaries_2020.csv");
  return s;
}

std::size_t index_of(std::string_view name) {
  const auto& s = states();
  return static_cast<std::size_t>(
      std::find_if(s.begin(), s.end(), [&](const StateRecord& r) { return r.name == name; }) -
      s.begin());
}

std::size_t slot_of(const SlotAssignment& slots, std::size_t state) {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (std::find(slots[i].begin(), slots[i].end(), state) != slots[i].end()) return i;
  }
  return slots.size();
}

std::vector<std::size_t> sizes(const SlotAssignment& slots) {
  std::vector<std::size_t> out;
  for (const auto& s : slots) out.push_back(s.size());
  return out;
}

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
double ks_p_value(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  const double n = static_cast<double>(a.size() * b.size()) / static_cast<double>(a.size() + b.size());
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace

TEST_CASE("states file") {
  const auto& s = states();
  REQUIRE(s.size() == 57);
  const long total = std::accumulate(s.begin(), s.end(), 0L,
                                     [](long acc, const StateRecord& r) { return acc + r.delegates; });
  // Column sum of the bundled delegate counts.
  CHECK(total == 3979);
  CHECK(s[index_of("California")].delegates == 415);
  CHECK(s[index_of("Iowa")].date == "2020-02-03");
}

TEST_CASE("states file diagnostics carry line numbers") {
  std::istringstream bad_date("name,date,delegates\nIowa,2020-02-03,41\nOhio,April,136\n");
  try {
    (void)parse_states_csv(bad_date, "states.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream dup("name,date,delegates\nIowa,2020-02-03,41\nIowa,2020-02-04,3\n");
  CHECK_THROWS_AS(parse_states_csv(dup, "x"), DataError);
  std::istringstream zero("name,date,delegates\nIowa,2020-02-03,0\n");
  CHECK_THROWS_AS(parse_states_csv(zero, "x"), DataError);
  std::istringstream missing("name,delegates\nIowa,41\n");
  CHECK_THROWS_AS(parse_states_csv(missing, "x"), DataError);
}

TEST_CASE("utility components") {
  const CandidateParams p;
  const PrimaryRace fresh;
  CHECK(utility_components(0.0, 0, fresh, p) == Catch::Approx(0.0).margin(1e-15));
  // rho_s = 0 makes both distance terms equal.
  PrimaryRace r;
  r.delegates_won = {30, 22};
  const double gap = utility_components(0.0, 0, r, p) - utility_components(0.0, 1, r, p);
  CHECK(gap == Catch::Approx(0.5 + spillover(r, p, 0) - spillover(r, p, 1)).epsilon(1e-12));
  CHECK(utility_components(1.0, 1, fresh, p) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("win probability") {
  CandidateParams equal;
  equal.eta = {0.0, 0.0};
  CHECK(win_probability(0.0, PrimaryRace{}, equal, 0) == Catch::Approx(0.5).epsilon(1e-12));
  CandidateParams ln3;
  ln3.eta = {std::log(3.0), 0.0};
  CHECK(win_probability(0.0, PrimaryRace{}, ln3, 0) == Catch::Approx(0.75).epsilon(1e-12));
  CHECK(win_probability(0.0, PrimaryRace{}, CandidateParams{}, 0) ==
        Catch::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-12));
  CHECK(win_probability(0.0, PrimaryRace{}, CandidateParams{}, 0) ==
        Catch::Approx(0.6224593312018546).epsilon(1e-12));
}

TEST_CASE("win probabilities are complementary and spillovers cancel") {
  const CandidateParams p;
  for (double rho : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    for (std::array<long, 2> won : {std::array<long, 2>{0, 0}, {41, 0}, {12, 300}, {500, 499}}) {
      PrimaryRace r;
      r.delegates_won = won;
      CHECK(win_probability(rho, r, p, 0) + win_probability(rho, r, p, 1) ==
            Catch::Approx(1.0).margin(1e-15));
      if (r.decided() > 0) CHECK(spillover(r, p, 0) + spillover(r, p, 1) == Catch::Approx(0.0).margin(1e-15));
    }
  }
}

TEST_CASE("spillover") {
  const CandidateParams p;
  CHECK(spillover(PrimaryRace{}, p, 0) == 0.0);
  PrimaryRace all;
  all.delegates_won = {52, 0};
  CHECK(spillover(all, p, 0) == Catch::Approx(0.3775406687981454).epsilon(1e-12));
  // A realized share equal to the reputation share gives no spillover.
  CandidateParams even;
  even.eta = {0.0, 0.0};
  PrimaryRace half;
  half.delegates_won = {26, 26};
  CHECK(spillover(half, even, 0) == 0.0);
}

TEST_CASE("nomination reward") {
  PrimaryRace r;
  r.delegates_won = {3979, 0};
  CHECK(nomination_reward(r, 3979)[0] == kNominated);
  CHECK(nomination_reward(r, 3979)[1] == kNotNominated);
  r.delegates_won = {2000, 2000};
  CHECK(nomination_reward(r, 4000) == std::array<std::string_view, 2>{kNotNominated, kNotNominated});
  r.delegates_won = {2001, 0};
  CHECK(nomination_reward(r, 4000)[0] == kNominated);
  r.delegates_won = {2000, 0};
  CHECK(nomination_reward(r, 4000)[0] == kNotNominated);
}

TEST_CASE("schedules") {
  const auto& s = states();
  SECTION("regular") {
    const auto slots = build_slots(s, ScheduleMode::kRegular);
    REQUIRE(slots[0] == std::vector<std::size_t>{index_of("Iowa")});
    CHECK(slots[1] == std::vector<std::size_t>{index_of("New Hampshire")});
    CHECK(slot_of(slots, index_of("California")) == slot_of(slots, index_of("Texas")));
    const auto sched = build_schedule(s, ScheduleMode::kRegular);
    CHECK(sched.event_count() == 57);
  }
  SECTION("rank increase") {
    const auto slots = build_slots(s, ScheduleMode::kRankIncrease);
    CHECK(sizes(slots) == sizes(build_slots(s, ScheduleMode::kRegular)));
    CHECK(slot_of(slots, index_of("American Samoa")) == 0);
    CHECK(slot_of(slots, index_of("California")) == slots.size() - 1);
    CHECK(slots.back().back() == index_of("California"));
  }
  SECTION("random is reproducible and keeps the framework") {
    RandomStream a(5, 0), b(5, 0), c(6, 0);
    const auto x = build_slots(s, ScheduleMode::kRandom, &a);
    CHECK(x == build_slots(s, ScheduleMode::kRandom, &b));
    CHECK(x != build_slots(s, ScheduleMode::kRandom, &c));
    CHECK(sizes(x) == sizes(build_slots(s, ScheduleMode::kRegular)));
    CHECK_THROWS_AS(build_slots(s, ScheduleMode::kRandom, nullptr), ContractViolation);
  }
  SECTION("positional moves one state by flat rank") {
    const auto regular = build_slots(s, ScheduleMode::kRegular);
    const auto iowa = index_of("Iowa");
    CHECK(positional_slots(s, iowa, 1) == regular);
    const auto at5 = positional_slots(s, iowa, 5);
    CHECK(sizes(at5) == sizes(regular));
    CHECK(slot_of(at5, iowa) == slot_of(regular, index_of("California")));
    CHECK(at5[0] == std::vector<std::size_t>{index_of("New Hampshire")});
    const auto at57 = positional_slots(s, iowa, 57);
    CHECK(at57.back().back() == iowa);
    CHECK_THROWS_AS(positional_slots(s, iowa, 58), ContractViolation);
  }
  SECTION("mode names") {
    CHECK(parse_mode("rank-increase") == ScheduleMode::kRankIncrease);
    CHECK(parse_mode("rank_increase") == ScheduleMode::kRankIncrease);
    CHECK(mode_name(parse_mode("random")) == "random");
    CHECK_THROWS_AS(parse_mode("sorted"), ContractViolation);
  }
}

TEST_CASE("both candidates see the same importance") {
  const auto& s = states();
  RandomStream rng(1, 0);
  const auto prefs = draw_preferences(s.size(), rng);
  const auto def = make_primary_contest(s, build_schedule(s, ScheduleMode::kRegular), prefs);
  CHECK(validate_contest(*def).empty());
  SimulationConfig c;
  c.n_mc = 500;
  c.distance = DistanceSpec::parse("winprob:nominated");
  for (std::size_t i : {index_of("Iowa"), index_of("Ohio")}) {
    const auto r = event_importances(ContestState(def), EventId(i), c);
    REQUIRE(r.size() == 2);
    CHECK(r[0].value == Catch::Approx(r[1].value).margin(1e-12));
  }
  c.distance = DistanceSpec::parse("jsd");
  const auto r = event_importances(ContestState(def), EventId(index_of("Iowa")), c);
  CHECK(r[0].value == Catch::Approx(r[1].value).margin(1e-12));
}

TEST_CASE("simulated races deliver every delegate") {
  const auto& s = states();
  RandomStream rng(2, 0);
  const auto prefs = draw_preferences(s.size(), rng);
  const auto def = make_primary_contest(s, build_schedule(s, ScheduleMode::kRegular), prefs);
  const auto done = simulate_remainder(ContestState(def), rng);
  REQUIRE(done.complete());
  std::array<long, 2> won{};
  for (std::size_t i = 0; i < s.size(); ++i) won[*done.outcome(EventId(i))] += s[i].delegates;
  CHECK(won[0] + won[1] == 3979);
}

TEST_CASE("study runs are reproducible") {
  StudyConfig c;
  c.samples = 3;
  c.n_mc = 300;
  c.seed = 17;
  const auto a = run_study(states(), ScheduleMode::kRandom, c);
  const auto b = run_study(states(), ScheduleMode::kRandom, c);
  CHECK(a.samples == b.samples);
  CHECK(a.mean.size() == 57);
  for (std::size_t i = 0; i < 57; ++i) {
    CHECK(a.mean[i] >= 0.0);
    CHECK(a.mean[i] <= 1.0);
  }
  c.samples = 0;
  CHECK_THROWS_AS(run_study(states(), ScheduleMode::kRegular, c), ContractViolation);
}

TEST_CASE("positional study at the regular slot matches the plain study") {
  StudyConfig c;
  c.samples = 40;
  c.n_mc = 1000;
  c.seed = 3;
  const auto nh = index_of("New Hampshire");
  const auto plain = run_study(states(), ScheduleMode::kRegular, c);
  std::vector<double> plain_nh;
  for (const auto& row : plain.samples) plain_nh.push_back(row[nh]);

  const auto same_seed = positional_study(states(), "New Hampshire", {2}, c);
  CHECK(same_seed.values[0] == plain_nh);

  c.seed = 4;
  const auto other_seed = positional_study(states(), "New Hampshire", {2}, c);
  CHECK(ks_p_value(other_seed.values[0], plain_nh) > 0.01);
  CHECK_THROWS_AS(positional_study(states(), "Atlantis", {1}, c), ContractViolation);
}
