#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "eventimp/cli/cli.hpp"

namespace fs = std::filesystem;
using namespace eventimp::cli;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string kData = EVENTIMP_DATA_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "eventimp_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::string> toy_league(const std::string& out) {
  return {"league",   "--fixtures", kData + "/toy_league/fixtures.csv", "--ratings",
          kData + "/toy_league/ratings.csv", "--rewards", kData + "/toy_league/rewards.cfg",
          "--n-mc",   "300",        "--matchday", "1", "--seed", "5", "--out", out,
          "--timestamp", "2024-01-01T00:00:00Z"};
}

std::vector<std::string> bundesliga(const std::string& out, const std::string& distance) {
  const std::string dir = kData + "/bundesliga_2017_18";
  return {"league", "--fixtures", dir + "/fixtures.csv", "--ratings", dir + "/ratings.csv",
          "--rewards", dir + "/rewards.cfg", "--standings", dir + "/standings.csv", "--n-mc", "300",
          "--iterations", "1", "--distance", distance, "--out", out};
}

// Rows keyed by "home-away" with their two EI values.
std::map<std::string, std::pair<double, double>> league_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::map<std::string, std::pair<double, double>> out;
  std::getline(in, line);  // manifest
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    out[f.at(1) + "-" + f.at(2)] = {std::stod(f.at(3)), std::stod(f.at(4))};
  }
  return out;
}

}  // namespace

TEST_CASE("format_fixed") {
  CHECK(format_fixed(0.5) == "0.500000");
  CHECK(format_fixed(-0.0) == "0.000000");
  CHECK(format_fixed(-1e-9) == "0.000000");
  CHECK(format_fixed(1.0 / 3.0, 3) == "0.333");
}

TEST_CASE("usage errors") {
  CHECK(invoke({"--help"}).code == kOk);
  CHECK(invoke({}).code == kUsage);
  CHECK(invoke({"bogus"}).code == kUsage);
  const auto r = invoke({"primaries", "--states", kData + "/primaries_2020.csv", "--samples", "0",
                         "--out", scratch("zero.csv").string()});
  CHECK(r.code == kUsage);
  CHECK(invoke({"primaries", "--states", kData + "/primaries_2020.csv", "--mode", "sorted", "--out",
                scratch("m.csv").string()})
            .code == kUsage);
  CHECK(invoke({"league", "--fixtures", "x"}).code == kUsage);
}

TEST_CASE("invalid thread environment") {
  ::setenv("EI_THREADS", "many", 1);
  const auto r = invoke(toy_league(scratch("env.csv").string()));
  ::unsetenv("EI_THREADS");
  CHECK(r.code == kUsage);
  CHECK_THAT(r.err, ContainsSubstring("EI_THREADS"));
}

TEST_CASE("data errors") {
  SECTION("malformed states file names the line") {
    const auto bad = scratch("states.csv");
    write(bad, "name,date,delegates\nIowa,2020-02-03,41\nOhio,2020-04-28,lots\n");
    const auto r = invoke({"primaries", "--states", bad.string(), "--out", scratch("p.csv").string()});
    CHECK(r.code == kDataError);
    CHECK_THAT(r.err, ContainsSubstring(":3"));
  }
  SECTION("unknown reward code lists the vocabulary") {
    const auto cfg = scratch("rewards.cfg");
    write(cfg, "league_size = 4\ncode = 1/1/Q\n");
    auto args = toy_league(scratch("l.csv").string());
    args[6] = cfg.string();
    const auto r = invoke(args);
    CHECK(r.code == kDataError);
    CHECK_THAT(r.err, ContainsSubstring("4/3/PDD"));
    CHECK_THAT(r.err, ContainsSubstring("2/2/PPD"));
  }
  SECTION("team playing twice on a matchday") {
    const auto fx = scratch("fixtures.csv");
    write(fx, "matchday,home,away,goals_home,goals_away\n1,Alpha,Bravo,,\n1,Alpha,Delta,,\n");
    auto args = toy_league(scratch("l.csv").string());
    args[2] = fx.string();
    const auto r = invoke(args);
    CHECK(r.code == kDataError);
    CHECK_THAT(r.err, ContainsSubstring("plays twice"));
  }
  SECTION("missing file") {
    auto args = toy_league(scratch("l.csv").string());
    args[4] = "/nonexistent/ratings.csv";
    CHECK(invoke(args).code == kDataError);
  }
}

TEST_CASE("league runs are byte-identical and replayable") {
  const auto a = scratch("a.csv"), b = scratch("b.csv"), c = scratch("c.csv");
  REQUIRE(invoke(toy_league(a.string())).code == kOk);
  REQUIRE(invoke(toy_league(b.string())).code == kOk);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("# manifest: ", 0) == 0);

  const auto manifest = nlohmann::json::parse(slurp(a.string() + ".manifest.json"));
  CHECK(manifest.at("timestamp") == "2024-01-01T00:00:00Z");
  CHECK(manifest.at("seed") == 5);

  const auto r = invoke({"rerun", "--manifest", a.string() + ".manifest.json", "--out", c.string()});
  REQUIRE(r.code == kOk);
  CHECK(slurp(a) == slurp(c));

  // Dot decimals and the documented columns.
  const std::string text = slurp(a);
  CHECK_THAT(text, ContainsSubstring("matchday,home,away,ei_home,ei_away,pi_h,pi_d,pi_a,iteration"));
  CHECK(league_rows(text).size() == 2);
}

TEST_CASE("season runs need every result") {
  auto args = toy_league(scratch("s.csv").string());
  args.erase(args.begin() + 9, args.begin() + 11);  // drop --matchday
  const auto r = invoke(args);
  CHECK(r.code == kDataError);
  CHECK_THAT(r.err, ContainsSubstring("--matchday"));
  args = toy_league(scratch("s.csv").string());
  args[10] = "3";
  CHECK(invoke(args).code == kDataError);
}

TEST_CASE("thread count does not change the output") {
  std::string first;
  for (const char* t : {"1", "3"}) {
    const auto p = scratch(std::string("t") + t + ".csv");
    auto args = toy_league(p.string());
    args.push_back("--threads");
    args.push_back(t);
    REQUIRE(invoke(args).code == kOk);
    const auto text = slurp(p);
    const auto body = text.substr(text.find('\n'));
    if (first.empty()) {
      first = body;
    } else {
      CHECK(body == first);
    }
  }
}

TEST_CASE("structural zeros are metric independent") {
  const auto j = scratch("jsd.csv"), t = scratch("tv.csv");
  REQUIRE(invoke(bundesliga(j.string(), "jsd")).code == kOk);
  REQUIRE(invoke(bundesliga(t.string(), "tv")).code == kOk);
  const auto a = league_rows(slurp(j));
  const auto b = league_rows(slurp(t));
  REQUIRE(a.size() == 9);
  for (const auto& [match, ei] : a) {
    CHECK((ei.first == 0.0) == (b.at(match).first == 0.0));
    CHECK((ei.second == 0.0) == (b.at(match).second == 0.0));
  }
  CHECK(a.at("Bayern M.-Stuttgart").first == 0.0);
  CHECK(a.at("Bayern M.-Stuttgart").second > 0.0);
}

TEST_CASE("oracle") {
  const std::vector<std::string> base{"oracle", "--fixtures", kData + "/toy_league/fixtures.csv",
                                      "--ratings", kData + "/toy_league/ratings.csv", "--rewards",
                                      kData + "/toy_league/rewards.cfg"};
  SECTION("passes at full sampling") {
    const auto r = invoke(base);
    CHECK(r.code == kOk);
    CHECK_THAT(r.out, ContainsSubstring("event,outcome,contestant,tv_gap,ei_mc,ei_exact"));
  }
  SECTION("under-sampling fails with a report") {
    auto args = base;
    args.insert(args.end(), {"--n-mc", "10"});
    const auto r = invoke(args);
    CHECK(r.code == kOracleMismatch);
    CHECK_THAT(r.err, ContainsSubstring("10000"));
  }
  SECTION("guard suggests a smaller instance") {
    auto args = base;
    args.insert(args.end(), {"--guard", "10"});
    const auto r = invoke(args);
    CHECK(r.code != kOk);
    CHECK(r.code != kOracleMismatch);
  }
}

TEST_CASE("primaries output") {
  const auto p = scratch("prim.csv");
  const std::vector<std::string> args{"primaries", "--states", kData + "/primaries_2020.csv",
                                      "--mode", "random", "--samples", "2", "--n-mc", "100",
                                      "--seed", "9", "--out", p.string(), "--timestamp", "x"};
  REQUIRE(invoke(args).code == kOk);
  const auto first = slurp(p);
  REQUIRE(invoke(args).code == kOk);
  CHECK(slurp(p) == first);
  CHECK_THAT(first, ContainsSubstring("state,mode,mean_ei,sd_ei,n_samples,n_mc,seed"));
  CHECK_THAT(first, ContainsSubstring("Iowa,random,"));
}
