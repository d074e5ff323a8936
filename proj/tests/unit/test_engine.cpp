#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numeric>

#include "eventimp/core/errors.hpp"
#include "eventimp/engine/engine.hpp"
#include "toy_contest.hpp"

using namespace eventimp;

namespace {

SimulationConfig config(std::uint64_t n_mc, std::uint64_t seed = 1, unsigned iterations = 1) {
  SimulationConfig c;
  c.n_mc = n_mc;
  c.seed = seed;
  c.iterations = iterations;
  return c;
}

double tv(const RewardDistribution& a, const RewardDistribution& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.mass()[i] - b.mass()[i]);
  return 0.5 * s;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<OutcomeRecord> history_of(std::initializer_list<OutcomeIndex> outcomes) {
  std::vector<OutcomeRecord> h;
  std::size_t i = 0;
  for (auto y : outcomes) h.push_back({EventId(i++), y, std::nullopt});
  return h;
}

/// Three binary events, contestant 0 wins with at least two zeros.
std::shared_ptr<ContestDefinition> majority3(std::vector<std::vector<std::size_t>> slots = {{0}, {1}, {2}}) {
  return toy::make_contest(1, {{{0.6, 0.4}}, {{0.3, 0.7}}, {{0.5, 0.5}}}, slots,
                           toy::win_if_count(2));
}

}  // namespace

TEST_CASE("simulate_remainder") {
  SECTION("complete state is returned unchanged") {
    auto def = majority3();
    ContestState s(def);
    for (auto& r : history_of({1, 0, 1})) s = s.apply_outcome(r);
    RandomStream rng(1, 0);
    const auto done = simulate_remainder(s, rng);
    for (std::size_t i = 0; i < 3; ++i) CHECK(done.outcome(EventId(i)) == s.outcome(EventId(i)));
  }
  SECTION("deterministic model gives one path") {
    auto def = toy::make_contest(1, {{{1.0, 0.0}}, {{0.0, 1.0, 0.0}}}, {{0}, {1}}, toy::win_if_all_zero);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      RandomStream rng(seed, seed);
      const auto done = simulate_remainder(ContestState(def), rng);
      CHECK(done.outcome(EventId(0)) == 0u);
      CHECK(done.outcome(EventId(1)) == 1u);
    }
  }
  SECTION("two fair binary events") {
    auto def = toy::make_contest(1, {{{0.5, 0.5}}, {{0.5, 0.5}}}, {{0}, {1}}, toy::win_if_all_zero);
    std::map<std::pair<unsigned, unsigned>, int> freq;
    const ContestState start(def);
    constexpr int n = 10'000;
    for (int i = 0; i < n; ++i) {
      RandomStream rng(99, static_cast<std::uint64_t>(i));
      const auto done = simulate_remainder(start, rng);
      ++freq[{*done.outcome(EventId(0)), *done.outcome(EventId(1))}];
    }
    REQUIRE(freq.size() == 4);
    for (const auto& [path, count] : freq) {
      CHECK(static_cast<double>(count) / n == Catch::Approx(0.25).margin(0.02));
    }
  }
}

TEST_CASE("conditional reward distributions") {
  SECTION("last event decides the reward") {
    auto def = toy::make_contest(1, {{{0.5, 0.5}}, {{0.5, 0.5}}}, {{0}, {1}},
                                 [](const ContestState& s, std::span<RewardLabel> out) {
                                   out[0] = *s.outcome(EventId(1)) == 0 ? 0 : 1;
                                 });
    ContestState s(def);
    s = s.apply_outcome({EventId(0), 1, std::nullopt});
    const auto d = conditional_reward_distribution(s, EventId(1), 0, ContestantId(0), config(500));
    CHECK(d[0] == 1.0);
  }
  SECTION("constant reward is a point mass") {
    auto def = toy::make_contest(1, {{{0.5, 0.5}}, {{0.5, 0.5}}}, {{0}, {1}},
                                 [](const ContestState&, std::span<RewardLabel> out) { out[0] = 1; });
    for (OutcomeIndex y = 0; y < 2; ++y) {
      const auto d = conditional_reward_distribution(ContestState(def), EventId(0), y,
                                                     ContestantId(0), config(500));
      CHECK(d[1] == 1.0);
    }
  }
  SECTION("Monte Carlo matches exact enumeration") {
    auto def = majority3();
    const ContestState s(def);
    const std::uint64_t n = 50'000;
    const double bound = 3.0 * std::sqrt(std::log(2.0 / 1e-3) / (2.0 * n));
    for (std::size_t e = 0; e < 3; ++e) {
      for (OutcomeIndex y = 0; y < 2; ++y) {
        const auto mc = conditional_reward_distribution(s, EventId(e), y, ContestantId(0), config(n));
        const auto exact = exact_enumeration(s, EventId(e), y, ContestantId(0));
        CHECK(tv(mc, exact) <= 0.02);
        for (std::size_t l = 0; l < mc.size(); ++l) {
          CHECK(std::abs(mc.mass()[l] - exact.mass()[l]) <= bound);
        }
      }
    }
  }
}

TEST_CASE("event importance extremes") {
  SECTION("settled contestant has zero importance") {
    auto def = toy::make_contest(1, {{{0.3, 0.7}}, {{0.5, 0.5}}}, {{0}, {1}},
                                 [](const ContestState&, std::span<RewardLabel> out) { out[0] = 0; });
    for (const char* metric : {"jsd", "tv", "winprob:win"}) {
      auto c = config(2000);
      c.distance = DistanceSpec::parse(metric);
      CHECK(event_importance(ContestState(def), EventId(0), ContestantId(0), c).value == 0.0);
    }
  }
  SECTION("final decisive event has importance one") {
    auto def = toy::make_contest(1, {{{0.5, 0.5}}, {{0.5, 0.5}}}, {{0}, {1}},
                                 [](const ContestState& s, std::span<RewardLabel> out) {
                                   out[0] = *s.outcome(EventId(1));
                                 });
    ContestState s(def);
    s = s.apply_outcome({EventId(0), 0, std::nullopt});
    for (const char* metric : {"jsd", "winprob:win"}) {
      auto c = config(1000);
      c.distance = DistanceSpec::parse(metric);
      CHECK(event_importance(s, EventId(1), ContestantId(0), c).value ==
            Catch::Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("importance stays within [0, 1] for every metric") {
  auto def = toy::make_contest(2,
                               {{{0.2, 0.3, 0.5}, {0, 1}}, {{0.6, 0.4}, {0, 1}}, {{0.5, 0.5}, {1}},
                                {{0.1, 0.9}, {0}}},
                               {{0, 1}, {2}, {3}}, toy::win_if_all_zero);
  def->reward = std::make_shared<toy::CallbackReward>(
      [](const ContestState& s, std::span<RewardLabel> out) {
        const auto a = *s.outcome(EventId(0)) + *s.outcome(EventId(3));
        const auto b = *s.outcome(EventId(1)) + *s.outcome(EventId(2));
        out[0] = a > b ? 0 : (a == b ? 1 : 2);
        out[1] = a < b ? 0 : (a == b ? 1 : 2);
      },
      std::vector<std::string>{"win", "tie", "lose"});
  auto history = history_of({2, 0, 1, 1});
  for (const char* metric : {"jsd", "tv"}) {
    auto c = config(3000);
    c.distance = DistanceSpec::parse(metric);
    for (const auto& r : backward_sweep(def, history, c)) {
      CHECK(r.value >= 0.0);
      CHECK(r.value <= 1.0);
    }
  }
}

TEST_CASE("backward sweep") {
  SECTION("reuse on and off agree") {
    auto def = toy::make_contest(1, {{{0.6, 0.4}}, {{0.3, 0.7}}, {{0.5, 0.5}}, {{0.45, 0.55}}},
                                 {{0}, {1}, {2}, {3}}, toy::win_if_count(2));
    const auto history = history_of({0, 1, 0, 1});
    auto on = config(20'000, 5);
    auto off = on;
    off.reuse_paths = false;
    PathCache cache;
    const auto a = backward_sweep(def, history, on, 1, &cache);
    const auto b = backward_sweep(def, history, off);
    CHECK(cache.size() == 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].event == b[i].event);
      CHECK(std::abs(a[i].value - b[i].value) <= 0.03);
    }
    // Reused branches count the cached paths as well.
    CHECK(a.front().n_mc_effective >= 20'000);
  }
  SECTION("single slot equals direct calls") {
    auto def = toy::make_contest(2, {{{0.6, 0.4}, {0, 1}}, {{0.3, 0.7}, {1}}}, {{0, 1}},
                                 [](const ContestState& s, std::span<RewardLabel> out) {
                                   out[0] = *s.outcome(EventId(0));
                                   out[1] = *s.outcome(EventId(1));
                                 });
    const auto c = config(4000, 8);
    const auto sweep = backward_sweep(def, history_of({1, 0}), c);
    std::vector<EIRecord> direct;
    for (std::size_t e = 0; e < 2; ++e) {
      auto r = event_importances(ContestState(def), EventId(e), c);
      direct.insert(direct.end(), r.begin(), r.end());
    }
    CHECK(sweep == direct);
  }
  SECTION("parallel slots never hit the cache") {
    auto def = toy::make_contest(1, std::vector<toy::EventSpec>(6, {{0.55, 0.45}}),
                                 {{0, 1}, {2, 3}, {4, 5}}, toy::win_if_count(3));
    const auto history = history_of({0, 1, 1, 0, 0, 1});
    auto on = config(3000, 2);
    auto off = on;
    off.reuse_paths = false;
    CHECK(backward_sweep(def, history, on) == backward_sweep(def, history, off));
  }
  SECTION("history must be complete") {
    auto def = majority3();
    CHECK_THROWS_AS(backward_sweep(def, history_of({0, 1}), config(10)), ContractViolation);
  }
}

TEST_CASE("results do not depend on the thread count") {
  auto def = toy::make_contest(1, std::vector<toy::EventSpec>(5, {{0.5, 0.3, 0.2}}),
                               {{0}, {1, 2}, {3}, {4}}, toy::win_if_count(2));
  const auto history = history_of({0, 2, 1, 0, 1});
  auto c = config(5000, 13);
  c.threads = 1;
  const auto one = backward_sweep(def, history, c);
  c.threads = 4;
  const auto four = backward_sweep(def, history, c);
  c.threads = 8;
  CHECK(one == four);
  CHECK(one == backward_sweep(def, history, c));
}

namespace {

class NeedsImportance final : public OutcomeModel {
 public:
  void probabilities(const Event&, const CovariateView&, std::span<double> out) const override {
    out[0] = out[1] = 0.5;
  }
  ImportanceUsage importance_usage() const override { return ImportanceUsage::kRequired; }
};

/// Shifts probability toward outcome 0 by the participant's injected EI.
class ReadsImportance final : public OutcomeModel {
 public:
  void probabilities(const Event& e, const CovariateView& x, std::span<double> out) const override {
    const double ei = x.find(ei_feature(), e.participants[0]).value_or(0.0);
    out[0] = 0.5 + 0.4 * ei;
    out[1] = 1.0 - out[0];
  }
  ImportanceUsage importance_usage() const override { return ImportanceUsage::kOptional; }
};

}  // namespace

TEST_CASE("iterative importance") {
  auto def = toy::make_contest(1, std::vector<toy::EventSpec>(8, {{0.5, 0.5}}),
                               {{0}, {1}, {2}, {3}, {4}, {5}, {6}, {7}}, toy::win_if_count(4));
  const auto history = history_of({0, 1, 1, 0, 0, 1, 0, 1});

  SECTION("one iteration is the plain sweep") {
    const auto c = config(2000, 4, 1);
    const auto rounds = iterative_ei(def, history, c);
    REQUIRE(rounds.size() == 1);
    CHECK(rounds[0] == backward_sweep(def, history, c));
  }
  SECTION("a model ignoring importance gives stable iterations") {
    auto c = config(7500, 4, 2);
    c.reuse_paths = false;
    const auto rounds = iterative_ei(def, history, c);
    REQUIRE(rounds.size() == 2);
    std::vector<double> a, b;
    for (std::size_t i = 0; i < rounds[0].size(); ++i) {
      a.push_back(rounds[0][i].value);
      b.push_back(rounds[1][i].value);
      CHECK(rounds[1][i].iteration == 2u);
    }
    CHECK(pearson(a, b) > 0.95);
  }
  SECTION("importance feeds back into a model that reads it") {
    def->outcome_model = std::make_shared<ReadsImportance>();
    const auto rounds = iterative_ei(def, history, config(2000, 4, 2));
    const auto injected = with_importance_covariates(*def, rounds[0]);
    for (const auto& r : rounds[0]) {
      CHECK(injected->event(r.event).covariates.at(ei_feature(), r.contestant) == r.value);
    }
    CHECK(rounds[0] != rounds[1]);
  }
  SECTION("a model that needs importance cannot start") {
    def->outcome_model = std::make_shared<NeedsImportance>();
    CHECK_THROWS_AS(iterative_ei(def, history, config(100)), ContractViolation);
  }
}

TEST_CASE("exact enumeration") {
  SECTION("deterministic model") {
    auto def = toy::make_contest(1, {{{1.0, 0.0}}, {{1.0, 0.0}}}, {{0}, {1}}, toy::win_if_all_zero);
    const auto d = exact_enumeration(ContestState(def), EventId(0), 0, ContestantId(0));
    CHECK(d[0] == 1.0);
  }
  SECTION("product rule") {
    auto def = toy::make_contest(1, {{{0.5, 0.5}}, {{0.5, 0.5}}, {{1.0, 0.0}}}, {{0}, {1}, {2}},
                                 toy::win_if_all_zero);
    // Condition on the certain third event to see the joint of the first two.
    const auto d = exact_enumeration(ContestState(def), EventId(2), 0, ContestantId(0));
    CHECK(d[0] == Catch::Approx(0.25).epsilon(1e-12));
  }
  SECTION("path guard") {
    auto def = toy::make_contest(1, std::vector<toy::EventSpec>(12, {{0.5, 0.5}}),
                                 {{0, 1, 2, 3, 4, 5}, {6, 7, 8, 9, 10, 11}}, toy::win_if_count(6));
    CHECK_THROWS_AS(exact_enumeration(ContestState(def), EventId(0), 0, ContestantId(0), 1000),
                    PathGuardExceeded);
    CHECK_NOTHROW(exact_enumeration(ContestState(def), EventId(0), 0, ContestantId(0), 2048));
  }
  SECTION("exact importance matches Monte Carlo") {
    auto def = majority3();
    const ContestState s(def);
    const auto exact = exact_event_importances(s, EventId(1), DistanceSpec::parse("jsd"));
    const auto mc = event_importances(s, EventId(1), config(50'000));
    CHECK(mc[0].value == Catch::Approx(exact[0].value).margin(0.01));
  }
}

TEST_CASE("estimator variance shrinks like 1/n") {
  auto def = majority3();
  const ContestState s(def);
  std::vector<double> log_n, log_var;
  for (std::uint64_t n : {250, 1000, 4000}) {
    std::vector<double> v;
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
      v.push_back(event_importance(s, EventId(0), ContestantId(0), config(n, seed + 1000)).value);
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_var.push_back(std::log(ss / (v.size() - 1)));
  }
  const double mx = std::accumulate(log_n.begin(), log_n.end(), 0.0) / 3;
  const double my = std::accumulate(log_var.begin(), log_var.end(), 0.0) / 3;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    sxy += (log_n[i] - mx) * (log_var[i] - my);
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
  }
  const double slope = sxy / sxx;
  CHECK(slope >= -1.3);
  CHECK(slope <= -0.7);
}
