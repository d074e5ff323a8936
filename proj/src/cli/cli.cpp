#include "eventimp/cli/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "eventimp/core/csv.hpp"
#include "eventimp/core/errors.hpp"
#include "eventimp/core/state.hpp"
#include "eventimp/engine/engine.hpp"
#include "eventimp/league/league.hpp"
#include "eventimp/primaries/primaries.hpp"

#ifndef EVENTIMP_VERSION
#define EVENTIMP_VERSION "unknown"
#endif

namespace eventimp::cli {

namespace {

using nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;
  std::string out;
  std::string timestamp;
};

struct PrimariesArgs {
  std::string states;
  std::string mode = "regular";
  std::size_t samples = 1000;
  std::uint64_t n_mc = 5000;
  std::string state;
  std::vector<std::size_t> positions;
};

struct LeagueArgs {
  std::string fixtures;
  std::string ratings;
  std::string rewards;
  std::string standings;
  std::uint64_t n_mc = 7500;
  unsigned iterations = 3;
  std::optional<int> matchday;
  std::string distance = "jsd";
  double ei_coef = 0.0;
  bool no_scores = false;
};

struct OracleArgs {
  std::string fixtures;
  std::string ratings;
  std::string rewards;
  std::uint64_t n_mc = 50'000;
  std::string distance = "jsd";
  double tolerance = 0.02;
  std::uint64_t guard = kDefaultPathGuard;
};

unsigned resolve_threads(const std::optional<unsigned>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv("EI_THREADS");
  if (!env || !*env) return 0;
  unsigned value = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("EI_THREADS must be a non-negative integer, got '" + std::string(env) + "'");
  }
  return value;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return ec == std::errc() ? std::string(buf, ptr) : "nan";
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (auto v : values) out += (out.empty() ? "" : ",") + std::to_string(v);
  return out;
}

/// The manifest records the canonical argument list so a rerun parses the
/// same options again. Threads and output paths are not part of it.
struct Manifest {
  std::string command;
  std::vector<std::string> args;
  ordered_json config = ordered_json::object();
  std::uint64_t seed = 0;
  std::uint64_t n_mc = 0;
  unsigned iterations = 1;
  std::string distance;
  std::string timestamp;

  [[nodiscard]] ordered_json to_json(bool with_timestamp) const {
    ordered_json j;
    j["command"] = command;
    j["config"] = config;
    j["seed"] = seed;
    j["n_mc"] = n_mc;
    j["iterations"] = iterations;
    j["distance"] = distance;
    if (with_timestamp) j["timestamp"] = timestamp;
    j["version"] = EVENTIMP_VERSION;
    j["args"] = args;
    return j;
  }
};

void write_outputs(const std::string& out_path, const Manifest& manifest, const std::string& body) {
  // The CSV copy leaves out the timestamp so identical runs give identical bytes.
  std::ostringstream csv;
  csv << "# manifest: " << manifest.to_json(false).dump() << '\n' << body;
  {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw DataError(out_path, 0, "cannot write output");
    f << csv.str();
  }
  std::ofstream m(out_path + ".manifest.json", std::ios::binary);
  if (!m) throw DataError(out_path + ".manifest.json", 0, "cannot write manifest");
  m << manifest.to_json(true).dump(2) << '\n';
}

void cmd_primaries(const PrimariesArgs& a, const Common& c, std::ostream& err) {
  if (a.state.empty() != a.positions.empty()) {
    throw UsageError("--state and --positions go together");
  }
  const auto mode = [&] {
    try {
      return primaries::parse_mode(a.mode);
    } catch (const ContractViolation& e) {
      throw UsageError(e.what());
    }
  }();
  const auto states = primaries::read_states_csv(a.states);
  long total = 0;
  for (const auto& st : states) total += st.delegates;
  if (total % 2 == 0) {
    err << "primaries: " << total
        << " delegates in total; an exact tie is possible and leaves both candidates not nominated\n";
  }
  primaries::StudyConfig cfg;
  cfg.samples = a.samples;
  cfg.n_mc = a.n_mc;
  cfg.seed = c.seed;
  cfg.threads = resolve_threads(c.threads);

  Manifest m;
  m.command = "primaries";
  m.config["states"] = a.states;
  m.config["mode"] = std::string(primaries::mode_name(mode));
  m.config["samples"] = a.samples;
  m.seed = c.seed;
  m.n_mc = a.n_mc;
  m.distance = "winprob:nominated";
  m.timestamp = c.timestamp;
  m.args = {"primaries",  "--states",  a.states,    "--mode", std::string(primaries::mode_name(mode)),
            "--samples",  std::to_string(a.samples), "--n-mc", std::to_string(a.n_mc),
            "--seed",     std::to_string(c.seed)};

  std::ostringstream body;
  const auto start = std::chrono::steady_clock::now();
  if (!a.state.empty()) {
    m.config["state"] = a.state;
    m.config["positions"] = a.positions;
    m.args.insert(m.args.end(), {"--state", a.state, "--positions", join(a.positions)});
    err << "primaries: " << a.state << " at " << a.positions.size() << " positions, " << a.samples
        << " samples x " << a.n_mc << " paths\n";
    const auto r = primaries::positional_study(states, a.state, a.positions, cfg);
    body << "state,position,mean_ei,sd_ei,n_samples,n_mc,seed\n";
    for (std::size_t p = 0; p < r.positions.size(); ++p) {
      const auto& v = r.values[p];
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      body << csv_escape(r.state) << ',' << r.positions[p] << ',' << format_fixed(mean) << ','
           << format_fixed(sd) << ',' << v.size() << ',' << a.n_mc << ',' << c.seed << '\n';
    }
  } else {
    err << "primaries: " << states.size() << " states, mode " << primaries::mode_name(mode) << ", "
        << a.samples << " samples x " << a.n_mc << " paths\n";
    const auto r = primaries::run_study(states, mode, cfg);
    body << "state,mode,mean_ei,sd_ei,n_samples,n_mc,seed\n";
    for (std::size_t s = 0; s < r.names.size(); ++s) {
      body << csv_escape(r.names[s]) << ',' << primaries::mode_name(mode) << ','
           << format_fixed(r.mean[s]) << ',' << format_fixed(r.sd[s]) << ',' << a.samples << ','
           << a.n_mc << ',' << c.seed << '\n';
    }
  }
  write_outputs(c.out, m, body.str());
  err << "primaries: wrote " << c.out << " in "
      << format_fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1)
      << "s\n";
}

DistanceSpec parse_distance(const std::string& text) {
  try {
    return DistanceSpec::parse(text);
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
}

league::LeagueSetup load_league(const std::string& fixtures, const std::string& ratings,
                                const std::string& rewards, const std::string& standings,
                                const league::MatchModelParams& params) {
  std::map<std::string, league::TeamRecord> table;
  if (!standings.empty()) table = league::read_standings_csv(standings);
  try {
    return league::make_setup(league::read_ratings_csv(ratings), league::read_fixtures_csv(fixtures),
                              league::read_reward_config(rewards), params, table);
  } catch (const ContractViolation& e) {
    throw DataError(fixtures, 0, e.what());
  }
}

void cmd_league(const LeagueArgs& a, const Common& c, std::ostream& err) {
  SimulationConfig cfg;
  cfg.n_mc = a.n_mc;
  cfg.iterations = a.iterations;
  cfg.seed = c.seed;
  cfg.distance = parse_distance(a.distance);
  cfg.threads = resolve_threads(c.threads);
  league::MatchModelParams params;
  params.ei_home_coef = a.ei_coef;
  params.ei_away_coef = -a.ei_coef;
  params.scores = !a.no_scores;
  const auto setup = load_league(a.fixtures, a.ratings, a.rewards, a.standings, params);

  Manifest m;
  m.command = "league";
  m.config["fixtures"] = a.fixtures;
  m.config["ratings"] = a.ratings;
  m.config["rewards"] = a.rewards;
  if (!a.standings.empty()) m.config["standings"] = a.standings;
  m.config["ei_coef"] = a.ei_coef;
  m.config["scores"] = !a.no_scores;
  m.seed = c.seed;
  m.n_mc = a.n_mc;
  m.iterations = a.matchday ? 1 : a.iterations;
  m.distance = cfg.distance.name();
  m.timestamp = c.timestamp;
  m.args = {"league",       "--fixtures",   a.fixtures,  "--ratings",  a.ratings,
            "--rewards",    a.rewards,      "--n-mc",    std::to_string(a.n_mc),
            "--iterations", std::to_string(a.iterations), "--distance", m.distance,
            "--ei-coef",    shortest(a.ei_coef), "--seed", std::to_string(c.seed)};
  if (!a.standings.empty()) m.args.insert(m.args.end(), {"--standings", a.standings});
  if (a.no_scores) m.args.emplace_back("--no-scores");

  std::vector<std::vector<league::MatchEI>> rounds;
  const auto start = std::chrono::steady_clock::now();
  if (a.matchday) {
    m.config["matchday"] = *a.matchday;
    m.args.insert(m.args.end(), {"--matchday", std::to_string(*a.matchday)});
    err << "league: matchday " << *a.matchday << ", " << a.n_mc << " paths\n";
    try {
      rounds.push_back(league::matchday_ei(setup, *a.matchday, cfg));
    } catch (const ContractViolation& e) {
      throw DataError(a.fixtures, 0, e.what());
    }
  } else {
    for (const auto& f : setup.fixtures) {
      if (!f.result) {
        throw DataError(a.fixtures, 0,
                        "fixture " + f.home + " - " + f.away +
                            " is unplayed; a season run needs every result (use --matchday "
                            "for prospective EI)");
      }
    }
    err << "league: " << setup.fixtures.size() << " fixtures, " << a.iterations << " iterations x "
        << a.n_mc << " paths\n";
    rounds = league::season_ei(setup, cfg);
  }

  std::ostringstream body;
  body << "matchday,home,away,ei_home,ei_away,pi_h,pi_d,pi_a,iteration\n";
  for (const auto& round : rounds) {
    for (const auto& r : round) {
      body << r.matchday << ',' << csv_escape(r.home) << ',' << csv_escape(r.away) << ','
           << format_fixed(r.ei_home) << ',' << format_fixed(r.ei_away) << ','
           << format_fixed(r.pi[0]) << ',' << format_fixed(r.pi[1]) << ',' << format_fixed(r.pi[2])
           << ',' << r.iteration << '\n';
    }
  }
  write_outputs(c.out, m, body.str());
  err << "league: wrote " << c.out << " in "
      << format_fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 1)
      << "s\n";
}

int cmd_oracle(const OracleArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  SimulationConfig cfg;
  cfg.n_mc = a.n_mc;
  cfg.iterations = 1;
  cfg.seed = c.seed;
  cfg.distance = parse_distance(a.distance);
  cfg.threads = resolve_threads(c.threads);
  league::MatchModelParams params;
  params.scores = false;
  const auto setup = load_league(a.fixtures, a.ratings, a.rewards, "", params);
  for (const auto& f : setup.fixtures) {
    if (f.result) throw DataError(a.fixtures, 0, "the oracle expects unplayed fixtures only");
  }
  const auto contest = league::make_league_contest(setup);
  const ContestState fresh(contest);

  std::ostringstream body;
  body << "event,outcome,contestant,tv_gap,ei_mc,ei_exact\n";
  double worst = 0.0;
  std::size_t compared = 0;
  try {
    for (std::size_t i = 0; i < contest->events.size(); ++i) {
      const EventId e(i);
      const Event& event = contest->event(e);
      const auto exact_ei = exact_event_importances(fresh, e, cfg.distance, a.guard);
      const auto mc_ei = event_importances(fresh, e, cfg);
      for (std::size_t y = 0; y < event.outcome_space.size(); ++y) {
        const auto y_idx = static_cast<OutcomeIndex>(y);
        const auto exact = exact_conditional_profile(fresh, e, y_idx, a.guard);
        const auto mc = conditional_reward_profile(fresh, e, y_idx, cfg);
        for (std::size_t k = 0; k < contest->contestants.size(); ++k) {
          double gap = 0.0;
          for (std::size_t l = 0; l < exact[k].size(); ++l) {
            gap += std::abs(exact[k].mass()[l] - mc[k].mass()[l]);
          }
          gap *= 0.5;
          worst = std::max(worst, gap);
          ++compared;
          double ei_mc = 0.0;
          double ei_exact = 0.0;
          for (const auto& r : mc_ei) {
            if (r.contestant.index() == k) ei_mc = r.value;
          }
          for (const auto& r : exact_ei) {
            if (r.contestant.index() == k) ei_exact = r.value;
          }
          body << csv_escape(event.name) << ',' << event.outcome_space[y] << ','
               << csv_escape(contest->contestants[k].name) << ',' << format_fixed(gap, 8) << ','
               << format_fixed(ei_mc, 8) << ',' << format_fixed(ei_exact, 8) << '\n';
        }
      }
    }
  } catch (const PathGuardExceeded& e) {
    throw DataError(a.fixtures, 0,
                    std::string(e.what()) + "; use a smaller instance or raise --guard");
  }

  const bool pass = worst <= a.tolerance;
  std::ostringstream summary;
  summary << "oracle: " << compared << " conditionals, max TV gap " << format_fixed(worst, 6)
          << " (tolerance " << format_fixed(a.tolerance, 4) << ", n_mc " << a.n_mc << "): "
          << (pass ? "PASS" : "FAIL") << '\n';
  if (!pass && a.n_mc < 10'000) {
    summary << "oracle: n_mc " << a.n_mc << " is below 10000; sampling noise dominates the gaps\n";
  }

  if (c.out.empty()) {
    out << body.str();
  } else {
    Manifest m;
    m.command = "oracle";
    m.config["fixtures"] = a.fixtures;
    m.config["ratings"] = a.ratings;
    m.config["rewards"] = a.rewards;
    m.config["tolerance"] = a.tolerance;
    m.seed = c.seed;
    m.n_mc = a.n_mc;
    m.distance = cfg.distance.name();
    m.timestamp = c.timestamp;
    m.args = {"oracle",   "--fixtures", a.fixtures, "--ratings", a.ratings, "--rewards", a.rewards,
              "--n-mc",   std::to_string(a.n_mc),   "--distance", m.distance,
              "--tolerance", shortest(a.tolerance), "--guard", std::to_string(a.guard),
              "--seed",   std::to_string(c.seed)};
    write_outputs(c.out, m, body.str());
  }
  err << summary.str();
  return pass ? kOk : kOracleMismatch;
}

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (fallback: EI_THREADS; 0 = all cores)");
  auto* out = cmd->add_option("--out", c.out, "Output CSV; the manifest goes to <out>.manifest.json");
  if (out_required) out->required();
  cmd->add_option("--timestamp", c.timestamp, "Timestamp recorded in the manifest (default: now)");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             int depth);

int rerun(const std::string& manifest_path, const Common& c, std::ostream& out, std::ostream& err,
          int depth) {
  if (depth > 0) throw UsageError("a manifest cannot rerun another manifest");
  std::ifstream in(manifest_path);
  if (!in) throw DataError(manifest_path, 0, "cannot open manifest");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const ordered_json::exception& e) {
    throw DataError(manifest_path, 0, std::string("invalid manifest: ") + e.what());
  }
  if (!j.contains("args") || !j["args"].is_array()) {
    throw DataError(manifest_path, 0, "manifest has no argument list");
  }
  std::vector<std::string> args = j["args"].get<std::vector<std::string>>();
  if (!c.out.empty()) args.insert(args.end(), {"--out", c.out});
  if (c.threads) args.insert(args.end(), {"--threads", std::to_string(*c.threads)});
  const std::string ts = !c.timestamp.empty() ? c.timestamp : j.value("timestamp", std::string());
  if (!ts.empty()) args.insert(args.end(), {"--timestamp", ts});
  return dispatch(args, out, err, depth + 1);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             int depth) {
  CLI::App app{"Event importance studies for sequential contests", "eventimp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EVENTIMP_VERSION);

  Common common;
  PrimariesArgs pa;
  auto* prim = app.add_subcommand("primaries", "Presidential primaries study");
  prim->add_option("--states", pa.states, "States CSV (name,date,delegates)")->required();
  prim->add_option("--mode", pa.mode, "regular | random | rank-increase")->capture_default_str();
  prim->add_option("--samples", pa.samples, "Preference samples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  prim->add_option("--n-mc", pa.n_mc, "Paths per conditional")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  prim->add_option("--state", pa.state, "State for the positional study");
  prim->add_option("--positions", pa.positions, "Comma-separated flat ranks (1-based)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  add_common(prim, common, true);

  LeagueArgs la;
  auto* lg = app.add_subcommand("league", "Football league study");
  lg->add_option("--fixtures", la.fixtures, "Fixtures CSV")->required();
  lg->add_option("--ratings", la.ratings, "Ratings CSV (team,strength)")->required();
  lg->add_option("--rewards", la.rewards, "Reward config")->required();
  lg->add_option("--standings", la.standings, "Table before the first listed fixture");
  lg->add_option("--n-mc", la.n_mc, "Paths per conditional")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  lg->add_option("--iterations", la.iterations, "Iterations of the fixed-point loop")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  lg->add_option("--matchday", la.matchday, "Prospective EI of this matchday only");
  lg->add_option("--distance", la.distance, "jsd | tv | winprob[:label]")->capture_default_str();
  lg->add_option("--ei-coef", la.ei_coef,
                 "Latent-index weight of the home EI (the away EI enters with the opposite sign)")
      ->capture_default_str();
  lg->add_flag("--no-scores", la.no_scores, "Simulate outcomes only, without goals");
  add_common(lg, common, true);

  OracleArgs oa;
  auto* orc = app.add_subcommand("oracle", "Compare Monte Carlo against exact enumeration");
  orc->add_option("--fixtures", oa.fixtures, "Fixtures CSV")->required();
  orc->add_option("--ratings", oa.ratings, "Ratings CSV")->required();
  orc->add_option("--rewards", oa.rewards, "Reward config")->required();
  orc->add_option("--n-mc", oa.n_mc, "Paths per conditional")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  orc->add_option("--distance", oa.distance, "jsd | tv | winprob[:label]")->capture_default_str();
  orc->add_option("--tolerance", oa.tolerance, "Largest accepted TV gap")->capture_default_str();
  orc->add_option("--guard", oa.guard, "Path limit for enumeration")->capture_default_str();
  add_common(orc, common, false);

  std::string manifest;
  auto* re = app.add_subcommand("rerun", "Repeat a run from its manifest");
  re->add_option("--manifest", manifest, "Manifest JSON written next to an output")->required();
  re->add_option("--out", common.out, "Output CSV")->required();
  re->add_option("--threads", common.threads, "Worker threads");
  re->add_option("--timestamp", common.timestamp, "Override the recorded timestamp");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << EVENTIMP_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (common.timestamp.empty() && !*re) common.timestamp = utc_now();

  if (*prim) {
    cmd_primaries(pa, common, err);
  } else if (*lg) {
    cmd_league(la, common, err);
  } else if (*orc) {
    return cmd_oracle(oa, common, out, err);
  } else if (*re) {
    return rerun(manifest, common, out, err, depth);
  }
  return kOk;
}

}  // namespace

std::string format_fixed(double value, int decimals) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
  if (ec != std::errc()) return "nan";
  std::string s(buf, ptr);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, 0);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

}  // namespace eventimp::cli
