#include "cgem/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cgem/baselines.hpp"
#include "cgem/c3po.hpp"
#include "cgem/chronogem.hpp"
#include "cgem/entropy.hpp"
#include "cgem/imitation.hpp"
#include "cgem/manifest.hpp"
#include "cgem/model_selection.hpp"
#include "cgem/rng.hpp"

#ifndef CGEM_VERSION
#define CGEM_VERSION "0.0.0"
#endif

namespace cgem::cli {

using nlohmann::json;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMalformed = 3;
constexpr int kExitMissingFile = 4;
constexpr int kExitValidation = 5;

struct CliError : std::runtime_error {
  int code;
  CliError(int code_, const std::string& msg) : std::runtime_error(msg), code(code_) {}
};

void require_file(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw CliError(kExitMissingFile, "missing input file: " + path);
}

json load_json_file(const std::string& path) {
  require_file(path);
  std::ifstream in(path, std::ios::binary);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CliError(kExitMalformed, "malformed JSON in " + path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError(kExitInternal, "cannot open for writing: " + path);
  out << text;
  if (!out) throw CliError(kExitInternal, "write failed: " + path);
}

std::unique_ptr<Environment> open_environment(const std::string& name,
                                              const std::string& config_path) {
  if (!config_path.empty()) {
    json spec = load_json_file(config_path);
    auto env = make_environment(spec);
    if (!name.empty() && env->id() != name)
      throw CliError(kExitValidation, "env mismatch: --env " + name +
                                          " vs config type " + env->id());
    return env;
  }
  return make_environment(name.empty() ? std::string("maze") : name);
}

std::vector<double> parse_eps_grid(const std::string& text, bool distance_units) {
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    double lo, hi;
    int count;
    char c1, c2;
    std::istringstream ss(text);
    if (!(ss >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1)
      throw CliError(kExitUsage, "bad --eps-grid, expected lo:hi:count");
    for (int i = 0; i < count; ++i)
      grid.push_back(count == 1 ? hi : lo + (hi - lo) * i / (count - 1));
  } else {
    std::istringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
  }
  if (grid.empty()) throw CliError(kExitUsage, "empty --eps-grid");
  if (distance_units)
    for (double& e : grid) e = e * e;
  for (double e : grid)
    if (!(e > 0.0)) throw CliError(kExitUsage, "thresholds must be positive");
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw CliError(kExitUsage, "--eps-grid must be ascending");
  return grid;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

DensityOptions density_options_for(const Environment* env, DensityFamily family,
                                   int bins, int gmm_components, double kde_bandwidth) {
  DensityOptions opts;
  opts.hist_bins = bins;
  opts.gmm_components = gmm_components;
  opts.kde_bandwidth = kde_bandwidth;
  if (env && family == DensityFamily::kHistogram)
    opts.box = BoundingBox{env->state_lo(), env->state_hi()};
  return opts;
}

struct ManifestWriter {
  ExperimentManifest manifest;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  std::string path;

  ManifestWriter(std::string command, const std::vector<std::string>& argv,
                 std::string manifest_path, const std::string& primary_out)
      : path(std::move(manifest_path)) {
    manifest.command = std::move(command);
    manifest.argv = argv;
    manifest.version = CGEM_VERSION;
    if (path.empty()) path = primary_out + ".manifest.json";
  }

  void finish(const json& config, uint64_t seed, uint64_t env_steps,
              const std::vector<std::string>& outputs) {
    manifest.config = config;
    manifest.seed = seed;
    manifest.env_steps = env_steps;
    manifest.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    for (const auto& out : outputs) manifest.add_output(out);
    manifest.save(path);
  }
};

// Flag value if given on the command line, else the config-file value, else
// the built-in default already stored in `value`.
template <typename T>
void merge_config(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

// ---------------------------------------------------------------------------

struct ExploreArgs {
  std::string env = "maze";
  std::string env_config;
  std::string method = "chronogem";
  int n = 4096;
  int k = 4;
  int t = 1000;
  int episodes = 4000;
  int grid_bins = 20;
  std::string density;  // default per env
  int bins = 40;
  int gmm_components = 3;
  double kde_bandwidth = 0.0;
  double ridge = -1.0;  // <0: per-env default
  std::string filter = "none";
  bool without_replacement = false;
  uint64_t seed = 0;
  int workers = 1;
  std::string out;
  std::string manifest;
  std::string config_file;
};

int cmd_explore(const ExploreArgs& a, const std::vector<std::string>& argv) {
  auto env = open_environment(a.env, a.env_config);
  std::string density_name =
      a.density.empty() ? (env->id() == "maze" ? "histogram" : "gaussian") : a.density;
  DensityFamily family = density_family_from_string(density_name);

  ManifestWriter mw("explore", argv, a.manifest, a.out);
  StateSet result;
  if (a.method == "chronogem") {
    DiffusionConfig cfg;
    cfg.n = a.n;
    cfg.k = a.k;
    cfg.t = a.t;
    cfg.density = family;
    cfg.density_options =
        density_options_for(env.get(), family, a.bins, a.gmm_components, a.kde_bandwidth);
    cfg.density_options.ridge =
        a.ridge >= 0.0 ? a.ridge : (env->id() == "chain" ? 1.0 : 1e-6);
    cfg.filter_name = a.filter;
    cfg.without_replacement = a.without_replacement;
    cfg.seed = a.seed;
    cfg.workers = a.workers;
    result = chronogem_explore(*env, cfg);
  } else if (a.method == "randomwalk") {
    result = random_walk_explore(*env, a.episodes, a.t, a.seed, a.workers);
  } else if (a.method == "countbonus") {
    result = count_bonus_explore(*env, a.episodes, a.t, a.grid_bins, a.k, a.seed);
  } else {
    throw CliError(kExitUsage, "unknown method: " + a.method);
  }
  result.save_jsonl(a.out);

  json config = {{"env", env->id()},       {"env_spec", env->spec_json()},
                 {"method", a.method},     {"run", result.config},
                 {"density", density_name}};
  mw.finish(config, a.seed, result.env_steps, {a.out});
  return 0;
}

struct EntropyArgs {
  std::string in;
  std::string family = "gaussian";
  double split = 0.8;
  int seeds = 1;
  int bins = 20;
  int gmm_components = 3;
  double kde_bandwidth = 0.0;
  uint64_t seed = 0;
  std::string out;
  std::string manifest;
  std::string config_file;
};

int cmd_entropy(const EntropyArgs& a, const std::vector<std::string>& argv) {
  require_file(a.in);
  StateSet states = StateSet::load_jsonl(a.in);
  DensityFamily family = density_family_from_string(a.family);
  std::unique_ptr<Environment> env;
  if (!states.env_id.empty() && (states.env_id == "maze" || states.env_id == "chain"))
    env = make_environment(states.env_id);
  DensityOptions opts =
      density_options_for(env.get(), family, a.bins, a.gmm_components, a.kde_bandwidth);

  ManifestWriter mw("entropy", argv, a.manifest, a.out);
  EntropyReport report = cross_entropy_multi_seed(states.states, family, opts, a.split,
                                                  a.seed, a.seeds);
  write_text(a.out, report.to_json().dump(2) + "\n");
  json config = {{"in", a.in},     {"family", a.family}, {"split", a.split},
                 {"seeds", a.seeds}, {"bins", a.bins}};
  mw.finish(config, a.seed, 0, {a.out});
  return 0;
}

struct GridArgs {
  std::string in;
  int bins = 40;
  std::string bounds = "auto";
  std::string proj = "auto";
  std::string out;
  std::string csv;
  std::string json_out;
  std::string manifest;
  std::string config_file;
};

int cmd_grid(const GridArgs& a, const std::vector<std::string>& argv) {
  require_file(a.in);
  StateSet states = StateSet::load_jsonl(a.in);

  std::array<int, 2> proj{0, 1};
  std::array<double, 2> lo{0, 0}, hi{0, 0};
  std::unique_ptr<Environment> env;
  if (states.env_id == "maze" || states.env_id == "chain")
    env = make_environment(states.env_id);

  if (a.proj == "auto") {
    if (env) proj = env->grid_projection();
  } else {
    auto parts = split_list(a.proj);
    if (parts.size() != 2) throw CliError(kExitUsage, "--proj expects i,j");
    proj = {std::stoi(parts[0]), std::stoi(parts[1])};
  }
  if (a.bounds == "auto") {
    if (env) {
      auto slo = env->state_lo();
      auto shi = env->state_hi();
      lo = {slo[proj[0]], slo[proj[1]]};
      hi = {shi[proj[0]], shi[proj[1]]};
    } else {
      lo = {states.states.col(proj[0]).minCoeff(), states.states.col(proj[1]).minCoeff()};
      hi = {states.states.col(proj[0]).maxCoeff(), states.states.col(proj[1]).maxCoeff()};
      for (int i = 0; i < 2; ++i) {
        double pad = std::max(1e-9, 1e-6 * (hi[i] - lo[i]));
        lo[i] -= pad;
        hi[i] += pad;
      }
    }
  } else {
    auto parts = split_list(a.bounds);
    if (parts.size() != 4) throw CliError(kExitUsage, "--bounds expects x0,x1,y0,y1");
    lo = {std::stod(parts[0]), std::stod(parts[2])};
    hi = {std::stod(parts[1]), std::stod(parts[3])};
  }

  ManifestWriter mw("grid", argv, a.manifest, a.out);
  FrequencyGrid grid = frequency_grid(states.states, proj, lo, hi, a.bins);
  std::vector<std::string> outputs;
  write_text(a.out, grid.to_pgm());
  outputs.push_back(a.out);
  if (!a.csv.empty()) {
    write_text(a.csv, grid.to_csv());
    outputs.push_back(a.csv);
  }
  if (!a.json_out.empty()) {
    write_text(a.json_out, grid.to_json().dump(2) + "\n");
    outputs.push_back(a.json_out);
  }
  json config = {{"in", a.in},
                 {"bins", a.bins},
                 {"bounds", {lo[0], hi[0], lo[1], hi[1]}},
                 {"proj", {proj[0], proj[1]}},
                 {"clamped", grid.clamped}};
  mw.finish(config, 0, 0, outputs);
  return 0;
}

struct TrainArgs {
  std::string goals;
  std::string env;
  std::string env_config;
  std::string learner = "cem";
  std::string eps0 = "auto";
  uint64_t budget = 2000000;
  uint64_t episodes = 0;
  int horizon = 128;
  int train_goals = 4096;
  int eval_goals = 128;
  int cem_pop = 48;
  double cem_elite = 0.25;
  double cem_sigma = 0.1;
  double cem_min_sigma = 0.003;
  int cem_update_every = 8;
  int cem_goals = 4;
  uint64_t seed = 0;
  int workers = 1;
  std::string out;
  std::string report;
  std::string eval_goals_out;
  std::string manifest;
  std::string config_file;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  require_file(a.goals);
  StateSet states = StateSet::load_jsonl(a.goals);
  auto env = open_environment(a.env.empty() ? states.env_id : a.env, a.env_config);
  if (env->id() != states.env_id)
    throw CliError(kExitValidation, "env mismatch: goals are for " + states.env_id);

  GoalSet goals = GoalSet::split(*env, states, a.train_goals, a.eval_goals, a.seed);

  double eps0 = -1.0;
  if (a.eps0 != "auto") {
    try {
      eps0 = std::stod(a.eps0);
    } catch (const std::exception&) {
      throw CliError(kExitUsage, "--eps0 expects a number or 'auto'");
    }
  }

  C3poOptions opts;
  opts.eps0 = eps0;
  opts.horizon = a.horizon;
  opts.max_env_steps = a.budget;
  opts.max_episodes = a.episodes;

  std::unique_ptr<Learner> learner;
  MlpPolicy seed_policy(env->id(), env->state_dim(), 2 * env->body_count(),
                        env->action_lo(), env->action_hi());
  if (a.learner == "cem") {
    auto init_rng = rng::stream(a.seed, "policy.init");
    seed_policy.init_weights(init_rng);
    CemLearnerConfig cfg;
    cfg.cem.population = a.cem_pop;
    cfg.cem.elite_frac = a.cem_elite;
    cfg.cem.init_sigma = a.cem_sigma;
    cfg.cem.min_sigma = a.cem_min_sigma;
    cfg.goals_per_eval = a.cem_goals;
    cfg.update_every = a.cem_update_every;
    cfg.horizon = a.horizon;
    cfg.workers = a.workers;
    learner = std::make_unique<CemLearner>(*env, seed_policy, cfg);
  } else if (a.learner == "oracle") {
    if (env->id() != "maze")
      throw CliError(kExitValidation, "oracle learner is maze-only");
    learner = std::make_unique<OracleLearner>(std::make_unique<MazeOracleController>());
  } else {
    throw CliError(kExitUsage, "unknown learner: " + a.learner);
  }

  ManifestWriter mw("train", argv, a.manifest, a.out);
  TrainResult result = c3po_train(*env, goals, *learner, opts, a.seed);

  std::vector<std::string> outputs;
  if (a.learner == "cem") {
    static_cast<const CemLearner*>(learner.get())->policy().save(a.out);
    outputs.push_back(a.out);
  } else {
    // The oracle has no parameters; persist the untouched seed policy so the
    // output is still a loadable policy document.
    seed_policy.save(a.out);
    outputs.push_back(a.out);
  }
  std::string report_path = a.report.empty() ? a.out + ".report.json" : a.report;
  write_text(report_path, result.to_json().dump(2) + "\n");
  outputs.push_back(report_path);

  if (!a.eval_goals_out.empty()) {
    StateSet eval_set;
    eval_set.states = goals.eval_states;
    eval_set.env_id = env->id();
    eval_set.method = states.method + "-eval";
    eval_set.seed = a.seed;
    eval_set.save_jsonl(a.eval_goals_out);
    outputs.push_back(a.eval_goals_out);
  }

  json config = {{"goals", a.goals},       {"env", env->id()},
                 {"learner", a.learner},   {"eps0", a.eps0},
                 {"budget", a.budget},     {"episodes", a.episodes},
                 {"horizon", a.horizon},   {"train_goals", goals.train.size()},
                 {"eval_goals", goals.eval.size()},
                 {"cem", {{"pop", a.cem_pop},
                          {"elite", a.cem_elite},
                          {"sigma", a.cem_sigma},
                          {"min_sigma", a.cem_min_sigma},
                          {"update_every", a.cem_update_every},
                          {"goals", a.cem_goals}}}};
  mw.finish(config, a.seed, result.env_steps, outputs);
  return 0;
}

struct EvalArgs {
  std::string policy;
  std::string goals;
  std::string env_config;
  std::string eps_grid = "0.25:25:50";
  std::string eps_unit = "squared";
  int horizon = 128;
  uint64_t seed = 0;
  int workers = 1;
  std::string out;
  std::string manifest;
  std::string config_file;
};

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  require_file(a.policy);
  require_file(a.goals);
  MlpPolicy policy = MlpPolicy::load(a.policy);
  StateSet states = StateSet::load_jsonl(a.goals);
  if (policy.env_id() != states.env_id)
    throw CliError(kExitValidation, "env mismatch: policy is for " + policy.env_id() +
                                        ", goals are for " + states.env_id);
  auto env = open_environment(policy.env_id(), a.env_config);

  std::vector<std::vector<double>> goals;
  for (Eigen::Index i = 0; i < states.states.rows(); ++i)
    goals.push_back(env->goal_vector(states.row(i)));

  auto grid = parse_eps_grid(a.eps_grid, a.eps_unit == "distance");

  ManifestWriter mw("eval", argv, a.manifest, a.out);
  EvaluationCurve curve =
      evaluate_curve(*env, policy, goals, grid, a.horizon, a.seed, a.workers);
  write_text(a.out, curve.to_json().dump(2) + "\n");
  json config = {{"policy", a.policy},   {"goals", a.goals},
                 {"eps_grid", a.eps_grid}, {"eps_unit", a.eps_unit},
                 {"horizon", a.horizon}, {"n_goals", goals.size()}};
  mw.finish(config, a.seed, curve.env_steps, {a.out});
  return 0;
}

struct CrossEvalArgs {
  std::string policies;
  std::string eval_sets;
  std::string labels;
  std::string eps_grid = "0.25:25:50";
  std::string eps_unit = "squared";
  std::string family = "gaussian";
  double split = 0.8;
  int horizon = 128;
  int bins = 20;
  uint64_t seed = 0;
  int workers = 1;
  std::string out;
  std::string manifest;
  std::string config_file;
};

int cmd_cross_eval(const CrossEvalArgs& a, const std::vector<std::string>& argv) {
  auto policy_paths = split_list(a.policies);
  auto set_paths = split_list(a.eval_sets);
  if (policy_paths.size() < 1 || set_paths.size() < 1)
    throw CliError(kExitUsage, "cross-eval needs --policies and --eval-sets");
  if (policy_paths.size() != set_paths.size())
    throw CliError(kExitUsage, "--policies and --eval-sets must pair up by source");
  std::vector<std::string> labels;
  if (!a.labels.empty()) {
    labels = split_list(a.labels);
    if (labels.size() != policy_paths.size())
      throw CliError(kExitUsage, "--labels size mismatch");
  } else {
    for (const auto& p : set_paths)
      labels.push_back(std::filesystem::path(p).stem().string());
  }

  std::vector<MlpPolicy> policies;
  std::vector<GoalSet> sets;
  std::unique_ptr<Environment> env;
  for (std::size_t i = 0; i < policy_paths.size(); ++i) {
    require_file(policy_paths[i]);
    require_file(set_paths[i]);
    policies.push_back(MlpPolicy::load(policy_paths[i]));
    StateSet states = StateSet::load_jsonl(set_paths[i]);
    if (policies.back().env_id() != states.env_id)
      throw CliError(kExitValidation, "env mismatch for source " + labels[i]);
    if (!env) env = open_environment(states.env_id, "");
    GoalSet set;
    set.env_id = states.env_id;
    set.source = labels[i];
    set.eval_states = states.states;
    for (Eigen::Index r = 0; r < states.states.rows(); ++r)
      set.eval.push_back(env->goal_vector(states.row(r)));
    sets.push_back(std::move(set));
  }

  CrossEvalInputs inputs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    inputs.policies_by_source[labels[i]] = &policies[i];
    inputs.eval_sets_by_source[labels[i]] = &sets[i];
  }
  inputs.eps_grid = parse_eps_grid(a.eps_grid, a.eps_unit == "distance");
  inputs.horizon = a.horizon;
  inputs.entropy_family = density_family_from_string(a.family);
  inputs.entropy_options =
      density_options_for(env.get(), inputs.entropy_family, a.bins, 3, 0.0);
  inputs.entropy_split = a.split;
  inputs.workers = a.workers;

  ManifestWriter mw("cross-eval", argv, a.manifest, a.out);
  CrossEvalResult result = cross_evaluate(*env, inputs, a.seed);
  write_text(a.out, result.to_json().dump(2) + "\n");
  json config = {{"policies", policy_paths}, {"eval_sets", set_paths},
                 {"labels", labels},         {"eps_grid", a.eps_grid},
                 {"family", a.family},       {"horizon", a.horizon}};
  mw.finish(config, a.seed, 0, {a.out});
  return 0;
}

struct SelectModelArgs {
  std::string datasets;
  std::string configs;
  double split = 0.8;
  uint64_t seed = 0;
  std::string out;
  std::string manifest;
  std::string config_file;
};

int cmd_select_model(const SelectModelArgs& a, const std::vector<std::string>& argv) {
  auto dataset_paths = split_list(a.datasets);
  if (dataset_paths.empty()) throw CliError(kExitUsage, "--datasets is required");
  json configs_doc = load_json_file(a.configs);
  std::vector<CandidateConfig> configs;
  for (const auto& cj : configs_doc) configs.push_back(CandidateConfig::from_json(cj));
  if (configs.size() < 2)
    throw CliError(kExitValidation, "model selection needs >= 2 candidate configs");

  std::vector<SelectionDataset> datasets;
  for (const auto& path : dataset_paths) {
    require_file(path);
    StateSet states = StateSet::load_jsonl(path);
    const Eigen::Index n = states.states.rows();
    if (n < 4)
      throw CliError(kExitValidation, "dataset too small to split: " + path);
    auto stream = rng::stream(a.seed, "selectmodel.split", rng::fnv1a64(path));
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (Eigen::Index i = n - 1; i > 0; --i) {
      auto j = static_cast<Eigen::Index>(rng::uniform_index(stream, i + 1));
      std::swap(perm[i], perm[j]);
    }
    Eigen::Index n_train = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::llround(a.split * n)), 1, n - 1);
    SelectionDataset ds;
    ds.name = std::filesystem::path(path).stem().string();
    ds.train.resize(n_train, states.states.cols());
    ds.eval.resize(n - n_train, states.states.cols());
    for (Eigen::Index i = 0; i < n_train; ++i) ds.train.row(i) = states.states.row(perm[i]);
    for (Eigen::Index i = n_train; i < n; ++i)
      ds.eval.row(i - n_train) = states.states.row(perm[i]);
    datasets.push_back(std::move(ds));
  }

  ManifestWriter mw("select-model", argv, a.manifest, a.out);
  ModelSelectionReport report = select_model(configs, datasets, a.seed);
  write_text(a.out, report.to_json().dump(2) + "\n");
  json config = {{"datasets", dataset_paths}, {"configs", a.configs}, {"split", a.split}};
  mw.finish(config, a.seed, 0, {a.out});
  return 0;
}

struct ImitateArgs {
  std::string policy;
  std::string expert;
  std::string env_config;
  int stride = 10;
  double eps = 1.0;
  std::string eps_unit = "squared";
  int budget_per_target = 32;
  std::string out;
  std::string manifest;
  std::string config_file;
};

int cmd_imitate(const ImitateArgs& a, const std::vector<std::string>& argv) {
  require_file(a.policy);
  require_file(a.expert);
  MlpPolicy policy = MlpPolicy::load(a.policy);
  ExpertTrajectory expert = ExpertTrajectory::load_jsonl(a.expert);
  if (policy.env_id() != expert.env_id)
    throw CliError(kExitValidation, "env mismatch: policy is for " + policy.env_id() +
                                        ", expert is for " + expert.env_id);
  auto env = open_environment(policy.env_id(), a.env_config);
  double eps = a.eps_unit == "distance" ? a.eps * a.eps : a.eps;

  ManifestWriter mw("imitate", argv, a.manifest, a.out);
  auto [track, report] =
      zero_shot_imitate(*env, policy, expert, a.stride, a.budget_per_target, eps);
  write_text(a.out, report.to_json().dump(2) + "\n");
  json config = {{"policy", a.policy},
                 {"expert", a.expert},
                 {"stride", a.stride},
                 {"eps", a.eps},
                 {"eps_unit", a.eps_unit},
                 {"budget_per_target", a.budget_per_target}};
  mw.finish(config, 0, report.env_steps, {a.out});
  return 0;
}

int fail(int code, const std::string& msg) {
  std::cerr << json{{"error", msg}, {"exit_code", code}}.dump() << "\n";
  return code;
}

}  // namespace

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Uniform-coverage exploration and goal-conditioned curriculum training"};
  app.set_version_flag("--version", CGEM_VERSION);
  app.require_subcommand(1);

  ExploreArgs ex;
  auto* explore = app.add_subcommand("explore", "Run an explorer and write a state set");
  explore->add_option("--env", ex.env, "maze|chain");
  explore->add_option("--env-config", ex.env_config, "environment spec JSON");
  explore->add_option("--method", ex.method, "chronogem|randomwalk|countbonus");
  explore->add_option("--n", ex.n, "population size");
  explore->add_option("--k", ex.k, "branching factor / candidate actions");
  explore->add_option("--t", ex.t, "horizon");
  explore->add_option("--episodes", ex.episodes, "episodes (randomwalk/countbonus)");
  explore->add_option("--grid-bins", ex.grid_bins, "visitation grid bins (countbonus)");
  explore->add_option("--density", ex.density, "gaussian|gmm|kde|histogram");
  explore->add_option("--bins", ex.bins, "histogram bins per axis");
  explore->add_option("--gmm-components", ex.gmm_components);
  explore->add_option("--kde-bandwidth", ex.kde_bandwidth);
  explore->add_option("--ridge", ex.ridge, "covariance jitter (gaussian/gmm)");
  explore->add_option("--filter", ex.filter, "state filter name");
  explore->add_flag("--without-replacement", ex.without_replacement);
  explore->add_option("--seed", ex.seed);
  explore->add_option("--workers", ex.workers);
  explore->add_option("--out", ex.out)->required();
  explore->add_option("--manifest", ex.manifest);
  explore->add_option("--config", ex.config_file, "JSON config file; flags win");

  EntropyArgs en;
  auto* entropy_cmd = app.add_subcommand("entropy", "Cross-entropy upper bound of a state set");
  entropy_cmd->add_option("--in", en.in)->required();
  entropy_cmd->add_option("--family", en.family);
  entropy_cmd->add_option("--split", en.split);
  entropy_cmd->add_option("--seeds", en.seeds, "number of split seeds (median reported)");
  entropy_cmd->add_option("--bins", en.bins);
  entropy_cmd->add_option("--gmm-components", en.gmm_components);
  entropy_cmd->add_option("--kde-bandwidth", en.kde_bandwidth);
  entropy_cmd->add_option("--seed", en.seed);
  entropy_cmd->add_option("--out", en.out)->required();
  entropy_cmd->add_option("--manifest", en.manifest);
  entropy_cmd->add_option("--config", en.config_file);

  GridArgs gr;
  auto* grid_cmd = app.add_subcommand("grid", "Spatial log-frequency grid (PGM/CSV/JSON)");
  grid_cmd->add_option("--in", gr.in)->required();
  grid_cmd->add_option("--bins", gr.bins);
  grid_cmd->add_option("--bounds", gr.bounds, "auto or x0,x1,y0,y1");
  grid_cmd->add_option("--proj", gr.proj, "auto or i,j state indices");
  grid_cmd->add_option("--out", gr.out, "PGM output")->required();
  grid_cmd->add_option("--csv", gr.csv);
  grid_cmd->add_option("--json", gr.json_out);
  grid_cmd->add_option("--manifest", gr.manifest);
  grid_cmd->add_option("--config", gr.config_file);

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "C3PO curriculum training");
  train->add_option("--goals", tr.goals)->required();
  train->add_option("--env", tr.env);
  train->add_option("--env-config", tr.env_config);
  train->add_option("--learner", tr.learner, "cem|oracle");
  train->add_option("--eps0", tr.eps0, "auto or a squared-distance threshold");
  train->add_option("--budget", tr.budget, "env-step budget");
  train->add_option("--episodes", tr.episodes, "episode budget (0 = unlimited)");
  train->add_option("--horizon", tr.horizon);
  train->add_option("--train-goals", tr.train_goals);
  train->add_option("--eval-goals", tr.eval_goals);
  train->add_option("--cem-pop", tr.cem_pop);
  train->add_option("--cem-elite", tr.cem_elite);
  train->add_option("--cem-sigma", tr.cem_sigma);
  train->add_option("--cem-min-sigma", tr.cem_min_sigma);
  train->add_option("--cem-update-every", tr.cem_update_every);
  train->add_option("--cem-goals", tr.cem_goals);
  train->add_option("--seed", tr.seed);
  train->add_option("--workers", tr.workers);
  train->add_option("--out", tr.out)->required();
  train->add_option("--report", tr.report);
  train->add_option("--eval-goals-out", tr.eval_goals_out,
                    "write the held-out eval goal states as JSONL");
  train->add_option("--manifest", tr.manifest);
  train->add_option("--config", tr.config_file);

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Success-vs-threshold curve for a policy");
  eval_cmd->add_option("--policy", ev.policy)->required();
  eval_cmd->add_option("--goals", ev.goals)->required();
  eval_cmd->add_option("--env-config", ev.env_config);
  eval_cmd->add_option("--eps-grid", ev.eps_grid, "lo:hi:count or comma list");
  eval_cmd->add_option("--eps-unit", ev.eps_unit, "squared|distance");
  eval_cmd->add_option("--t,--horizon", ev.horizon);
  eval_cmd->add_option("--seed", ev.seed);
  eval_cmd->add_option("--workers", ev.workers);
  eval_cmd->add_option("--out", ev.out)->required();
  eval_cmd->add_option("--manifest", ev.manifest);
  eval_cmd->add_option("--config", ev.config_file);

  CrossEvalArgs ce;
  auto* cross = app.add_subcommand("cross-eval", "Cross-source evaluation matrix + EWGA");
  cross->add_option("--policies", ce.policies, "comma list of policy files")->required();
  cross->add_option("--eval-sets", ce.eval_sets, "comma list of state-set files")->required();
  cross->add_option("--labels", ce.labels);
  cross->add_option("--eps-grid", ce.eps_grid);
  cross->add_option("--eps-unit", ce.eps_unit);
  cross->add_option("--family", ce.family, "entropy estimator family");
  cross->add_option("--split", ce.split);
  cross->add_option("--horizon", ce.horizon);
  cross->add_option("--bins", ce.bins);
  cross->add_option("--seed", ce.seed);
  cross->add_option("--workers", ce.workers);
  cross->add_option("--out", ce.out)->required();
  cross->add_option("--manifest", ce.manifest);
  cross->add_option("--config", ce.config_file);

  SelectModelArgs sm;
  auto* select = app.add_subcommand("select-model", "Density model selection harness");
  select->add_option("--datasets", sm.datasets, "comma list of state-set files")->required();
  select->add_option("--configs", sm.configs, "JSON array of candidate configs")->required();
  select->add_option("--split", sm.split);
  select->add_option("--seed", sm.seed);
  select->add_option("--out", sm.out)->required();
  select->add_option("--manifest", sm.manifest);
  select->add_option("--config", sm.config_file);

  ImitateArgs im;
  auto* imitate = app.add_subcommand("imitate", "Zero-shot expert tracking");
  imitate->add_option("--policy", im.policy)->required();
  imitate->add_option("--expert", im.expert)->required();
  imitate->add_option("--env-config", im.env_config);
  imitate->add_option("--stride", im.stride);
  imitate->add_option("--eps", im.eps);
  imitate->add_option("--eps-unit", im.eps_unit, "squared|distance");
  imitate->add_option("--budget-per-target", im.budget_per_target);
  imitate->add_option("--out", im.out)->required();
  imitate->add_option("--manifest", im.manifest);
  imitate->add_option("--config", im.config_file);

  std::vector<std::string> argv_copy = args;
  try {
    std::vector<const char*> cargs;
    cargs.push_back("cgem");
    for (const auto& s : args) cargs.push_back(s.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fail(kExitUsage, std::string("usage error: ") + e.what());
  }

  try {
    if (explore->parsed()) {
      if (!ex.config_file.empty()) {
        json cfg = load_json_file(ex.config_file);
        merge_config(explore->get_option("--env"), cfg, "env", ex.env);
        merge_config(explore->get_option("--method"), cfg, "method", ex.method);
        merge_config(explore->get_option("--n"), cfg, "n", ex.n);
        merge_config(explore->get_option("--k"), cfg, "k", ex.k);
        merge_config(explore->get_option("--t"), cfg, "t", ex.t);
        merge_config(explore->get_option("--episodes"), cfg, "episodes", ex.episodes);
        merge_config(explore->get_option("--grid-bins"), cfg, "grid_bins", ex.grid_bins);
        merge_config(explore->get_option("--density"), cfg, "density", ex.density);
        merge_config(explore->get_option("--bins"), cfg, "bins", ex.bins);
        merge_config(explore->get_option("--filter"), cfg, "filter", ex.filter);
        merge_config(explore->get_option("--seed"), cfg, "seed", ex.seed);
        merge_config(explore->get_option("--workers"), cfg, "workers", ex.workers);
      }
      return cmd_explore(ex, argv_copy);
    }
    if (entropy_cmd->parsed()) return cmd_entropy(en, argv_copy);
    if (grid_cmd->parsed()) return cmd_grid(gr, argv_copy);
    if (train->parsed()) {
      if (!tr.config_file.empty()) {
        json cfg = load_json_file(tr.config_file);
        merge_config(train->get_option("--learner"), cfg, "learner", tr.learner);
        merge_config(train->get_option("--eps0"), cfg, "eps0", tr.eps0);
        merge_config(train->get_option("--budget"), cfg, "budget", tr.budget);
        merge_config(train->get_option("--episodes"), cfg, "episodes", tr.episodes);
        merge_config(train->get_option("--horizon"), cfg, "horizon", tr.horizon);
        merge_config(train->get_option("--cem-pop"), cfg, "cem_pop", tr.cem_pop);
        merge_config(train->get_option("--cem-elite"), cfg, "cem_elite", tr.cem_elite);
        merge_config(train->get_option("--cem-sigma"), cfg, "cem_sigma", tr.cem_sigma);
        merge_config(train->get_option("--cem-update-every"), cfg, "cem_update_every",
                     tr.cem_update_every);
        merge_config(train->get_option("--cem-goals"), cfg, "cem_goals", tr.cem_goals);
        merge_config(train->get_option("--seed"), cfg, "seed", tr.seed);
        merge_config(train->get_option("--workers"), cfg, "workers", tr.workers);
      }
      return cmd_train(tr, argv_copy);
    }
    if (eval_cmd->parsed()) return cmd_eval(ev, argv_copy);
    if (cross->parsed()) return cmd_cross_eval(ce, argv_copy);
    if (select->parsed()) return cmd_select_model(sm, argv_copy);
    if (imitate->parsed()) return cmd_imitate(im, argv_copy);
    return fail(kExitUsage, "no subcommand given");
  } catch (const CliError& e) {
    return fail(e.code, e.what());
  } catch (const json::exception& e) {
    return fail(kExitMalformed, std::string("malformed document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kExitValidation, e.what());
  } catch (const std::exception& e) {
    return fail(kExitInternal, e.what());
  }
}

}  // namespace cgem::cli
