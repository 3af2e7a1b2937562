#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cgem/cli.hpp"
#include "cgem/imitation.hpp"
#include "cgem/manifest.hpp"
#include "cgem/state_set.hpp"

using namespace cgem;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() /
          fs::path("cgem_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return json::parse(in);
}

}  // namespace

TEST_CASE("explore writes a state set and an exact-budget manifest") {
  TempDir tmp;
  std::string out = tmp.path("states.jsonl");
  int rc = cli::run({"explore", "--env", "maze", "--method", "chronogem", "--n", "256",
                     "--k", "4", "--t", "100", "--seed", "1", "--out", out});
  REQUIRE(rc == 0);

  StateSet states = StateSet::load_jsonl(out);
  CHECK(states.size() == 256);
  CHECK(states.env_id == "maze");

  json manifest = read_json(out + ".manifest.json");
  CHECK(manifest["command"] == "explore");
  CHECK(manifest["env_steps"].get<uint64_t>() == 256ull * 4 * 100);
  REQUIRE(manifest["outputs"].size() == 1);
  CHECK(manifest["outputs"][0]["sha256"] == sha256_file(out));
}

TEST_CASE("state sets round-trip bitwise through JSONL") {
  TempDir tmp;
  std::string out = tmp.path("states.jsonl");
  REQUIRE(cli::run({"explore", "--env", "maze", "--method", "randomwalk", "--episodes",
                    "50", "--t", "64", "--seed", "3", "--out", out}) == 0);
  StateSet original = StateSet::load_jsonl(out);
  std::string again = tmp.path("again.jsonl");
  original.save_jsonl(again);
  StateSet reread = StateSet::load_jsonl(again);
  REQUIRE(reread.size() == original.size());
  for (Eigen::Index i = 0; i < original.size(); ++i)
    for (Eigen::Index j = 0; j < original.dim(); ++j)
      CHECK(reread.states(i, j) == original.states(i, j));
}

TEST_CASE("same command and seed give byte-identical outputs") {
  TempDir tmp;
  std::string a = tmp.path("a.jsonl");
  std::string b = tmp.path("b.jsonl");
  std::vector<std::string> base = {"explore", "--env",  "chain", "--method",
                                   "chronogem", "--n",  "64",    "--k",
                                   "3",         "--t",  "20",    "--density",
                                   "gaussian",  "--seed", "42",  "--workers", "1"};
  auto run_to = [&](const std::string& out) {
    auto args = base;
    args.push_back("--out");
    args.push_back(out);
    REQUIRE(cli::run(args) == 0);
  };
  run_to(a);
  run_to(b);
  CHECK(sha256_file(a) == sha256_file(b));
}

TEST_CASE("grid emits a valid PGM of the requested size") {
  TempDir tmp;
  std::string states = tmp.path("states.jsonl");
  REQUIRE(cli::run({"explore", "--env", "maze", "--method", "randomwalk", "--episodes",
                    "100", "--t", "50", "--seed", "5", "--out", states}) == 0);
  std::string pgm = tmp.path("grid.pgm");
  std::string csv = tmp.path("grid.csv");
  REQUIRE(cli::run({"grid", "--in", states, "--bins", "40", "--out", pgm, "--csv",
                    csv}) == 0);
  std::ifstream in(pgm);
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P2");
  CHECK(w == 40);
  CHECK(h == 40);
  CHECK(maxval == 255);
  CHECK(fs::exists(csv));
}

TEST_CASE("entropy command writes a report") {
  TempDir tmp;
  std::string states = tmp.path("states.jsonl");
  REQUIRE(cli::run({"explore", "--env", "maze", "--method", "randomwalk", "--episodes",
                    "500", "--t", "64", "--seed", "5", "--out", states}) == 0);
  std::string report = tmp.path("entropy.json");
  REQUIRE(cli::run({"entropy", "--in", states, "--family", "histogram", "--bins", "20",
                    "--seed", "1", "--out", report}) == 0);
  json doc = read_json(report);
  CHECK(doc["kind"] == "entropy_report");
  CHECK(doc["cross_entropy_nats"].is_number());
}

TEST_CASE("train/eval/imitate pipeline runs end to end") {
  TempDir tmp;
  std::string states = tmp.path("goals.jsonl");
  REQUIRE(cli::run({"explore", "--env", "maze", "--method", "chronogem", "--n", "256",
                    "--k", "4", "--t", "64", "--bins", "40", "--seed", "2", "--out",
                    states}) == 0);

  std::string policy = tmp.path("policy.json");
  std::string eval_goals = tmp.path("eval_goals.jsonl");
  REQUIRE(cli::run({"train", "--goals", states, "--learner", "cem", "--budget",
                    "60000", "--horizon", "64", "--train-goals", "128",
                    "--eval-goals", "32", "--cem-pop", "8", "--cem-goals", "2",
                    "--cem-update-every", "8", "--seed", "3", "--out", policy,
                    "--eval-goals-out", eval_goals, "--workers", "2"}) == 0);
  CHECK(fs::exists(policy));
  CHECK(fs::exists(policy + ".report.json"));
  json manifest = read_json(policy + ".manifest.json");
  CHECK(manifest["env_steps"].get<uint64_t>() >= 60000);

  std::string curve = tmp.path("curve.json");
  REQUIRE(cli::run({"eval", "--policy", policy, "--goals", eval_goals, "--eps-grid",
                    "1:100:10", "--t", "64", "--out", curve}) == 0);
  json curve_doc = read_json(curve);
  CHECK(curve_doc["success_rates"].size() == 10);

  // Scripted expert from the same env, tracked by the trained policy.
  std::string expert = tmp.path("expert.jsonl");
  {
    auto env = make_environment(std::string("maze"));
    std::vector<Action> actions(30, {0.0, 0.0});
    ExpertTrajectory traj = script_expert(*env, actions);
    traj.save_jsonl(expert);
  }
  std::string track = tmp.path("track.json");
  REQUIRE(cli::run({"imitate", "--policy", policy, "--expert", expert, "--stride",
                    "10", "--eps", "25", "--out", track}) == 0);
  json track_doc = read_json(track);
  CHECK(track_doc["targets"].size() == 4);
}

TEST_CASE("select-model command selects over file datasets") {
  TempDir tmp;
  std::string d1 = tmp.path("d1.jsonl");
  std::string d2 = tmp.path("d2.jsonl");
  REQUIRE(cli::run({"explore", "--env", "maze", "--method", "randomwalk", "--episodes",
                    "400", "--t", "32", "--seed", "1", "--out", d1}) == 0);
  REQUIRE(cli::run({"explore", "--env", "maze", "--method", "randomwalk", "--episodes",
                    "400", "--t", "64", "--seed", "2", "--out", d2}) == 0);
  std::string configs = tmp.path("configs.json");
  {
    std::ofstream out(configs);
    out << R"([{"name":"gaussian","family":"gaussian"},
               {"name":"kde","family":"kde"}])";
  }
  std::string report = tmp.path("selection.json");
  REQUIRE(cli::run({"select-model", "--datasets", d1 + "," + d2, "--configs", configs,
                    "--seed", "7", "--out", report}) == 0);
  json doc = read_json(report);
  CHECK(doc["kind"] == "model_selection_report");
  CHECK(doc["selected_name"].is_string());
}

TEST_CASE("error paths use distinct exit codes") {
  TempDir tmp;
  // Unknown flag: usage error.
  CHECK(cli::run({"explore", "--bogus-flag", "1", "--out", tmp.path("x.jsonl")}) == 2);
  // Unknown subcommand.
  CHECK(cli::run({"frobnicate"}) == 2);
  // Missing input file.
  CHECK(cli::run({"entropy", "--in", tmp.path("absent.jsonl"), "--out",
                  tmp.path("r.json")}) == 4);
  // Malformed config file.
  std::string bad = tmp.path("bad.json");
  {
    std::ofstream out(bad);
    out << "{not json";
  }
  CHECK(cli::run({"explore", "--config", bad, "--out", tmp.path("y.jsonl")}) == 3);

  // Env mismatch between policy and goals.
  std::string maze_states = tmp.path("maze.jsonl");
  REQUIRE(cli::run({"explore", "--env", "maze", "--method", "randomwalk", "--episodes",
                    "20", "--t", "8", "--seed", "1", "--out", maze_states}) == 0);
  std::string chain_states = tmp.path("chain.jsonl");
  REQUIRE(cli::run({"explore", "--env", "chain", "--method", "randomwalk", "--episodes",
                    "20", "--t", "8", "--seed", "1", "--out", chain_states}) == 0);
  std::string policy = tmp.path("p.json");
  REQUIRE(cli::run({"train", "--goals", maze_states, "--learner", "oracle",
                    "--episodes", "5", "--budget", "0", "--train-goals", "8",
                    "--eval-goals", "4", "--seed", "1", "--out", policy}) == 0);
  CHECK(cli::run({"eval", "--policy", policy, "--goals", chain_states, "--out",
                  tmp.path("c.json")}) == 5);
}

TEST_CASE("config file fills unset flags and flags win") {
  TempDir tmp;
  std::string cfg = tmp.path("cfg.json");
  {
    std::ofstream out(cfg);
    out << R"({"method":"randomwalk","episodes":30,"t":16,"seed":9})";
  }
  std::string out1 = tmp.path("o1.jsonl");
  REQUIRE(cli::run({"explore", "--config", cfg, "--out", out1}) == 0);
  StateSet s1 = StateSet::load_jsonl(out1);
  CHECK(s1.method == "randomwalk");
  CHECK(s1.size() == 30);
  CHECK(s1.horizon == 16);

  // --episodes beats the config value.
  std::string out2 = tmp.path("o2.jsonl");
  REQUIRE(cli::run({"explore", "--config", cfg, "--episodes", "12", "--out", out2}) == 0);
  CHECK(StateSet::load_jsonl(out2).size() == 12);
}
