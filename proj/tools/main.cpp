#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "l2t/engine.hpp"
#include "l2t/errors.hpp"
#include "l2t/http_backend.hpp"
#include "l2t/oracle.hpp"
#include "l2t/report.hpp"
#include "l2t/tasks.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kExitSolved = 0;
constexpr int kExitUnsolved = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;

struct CommonOpts {
  std::string backend = "oracle";
  int regen_limit = 1;
  std::string base_url;
  std::string model;
  double oracle_error_rate = 0.0;
  std::string features = "hash";
  std::string prompts_dir;
  std::string checkpoint;
  int feature_dim = 64;
  int hidden = 64;
  int b_max = 5;
  std::uint64_t seed = 0;
  int beta = 2;
  int max_steps = 12;
  int max_nodes = 64;
  int classify_parallelism = 1;
  int max_tokens = 1024;
  std::string aggregation = "max";
  std::string out = "out";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--backend", opts.backend, "oracle or http")
      ->check(CLI::IsMember({"oracle", "http"}));
  cmd->add_option("--base-url", opts.base_url, "http backend base URL");
  cmd->add_option("--model", opts.model, "http backend model name");
  cmd->add_option("--oracle-error-rate", opts.oracle_error_rate,
                  "classification corruption rate of the scripted oracle");
  cmd->add_option("--features", opts.features, "hash or embedding")
      ->check(CLI::IsMember({"hash", "embedding"}));
  cmd->add_option("--prompts", opts.prompts_dir,
                  "directory overriding the prompt templates");
  cmd->add_option("--checkpoint", opts.checkpoint, "policy checkpoint to load");
  cmd->add_option("--feature-dim", opts.feature_dim, "node feature dimension");
  cmd->add_option("--hidden", opts.hidden, "policy hidden width");
  cmd->add_option("--b-max", opts.b_max, "maximum branch count");
  cmd->add_option("--seed", opts.seed, "run seed");
  cmd->add_option("--beta", opts.beta, "ancestor path bound");
  cmd->add_option("--max-steps", opts.max_steps, "step budget per episode");
  cmd->add_option("--max-nodes", opts.max_nodes, "node budget per episode");
  cmd->add_option("--classify-parallelism", opts.classify_parallelism,
                  "max in-flight classification calls");
  cmd->add_option("--regen-limit", opts.regen_limit,
                  "regeneration passes for all-stopped steps");
  cmd->add_option("--max-tokens", opts.max_tokens, "completion token cap");
  cmd->add_option("--agg", opts.aggregation,
                  "reward aggregation over an action's children")
      ->check(CLI::IsMember({"max", "mean"}));
  cmd->add_option("--out", opts.out, "output directory");
}

std::unique_ptr<l2t::llm::Backend> make_backend(const CommonOpts& opts) {
  if (opts.backend == "http") {
    l2t::llm::HttpConfig config;
    config.base_url = opts.base_url;
    config.model = opts.model;
    if (config.base_url.empty())
      throw l2t::Error(l2t::ErrorCode::InvalidArgument,
                       "--base-url is required with --backend http");
    return std::make_unique<l2t::llm::HttpBackend>(config);
  }
  l2t::llm::OracleConfig config;
  config.seed = opts.seed;
  config.classify_error_rate = opts.oracle_error_rate;
  return std::make_unique<l2t::llm::OracleBackend>(config);
}

std::unique_ptr<l2t::llm::FeatureProvider> make_provider(const CommonOpts& opts) {
  if (opts.features == "embedding") {
    l2t::llm::HttpConfig config;
    config.base_url = opts.base_url;
    config.model = opts.model;
    if (config.base_url.empty())
      throw l2t::Error(l2t::ErrorCode::InvalidArgument,
                       "--base-url is required with --features embedding");
    return std::make_unique<l2t::llm::EmbeddingFeatureProvider>(
        opts.feature_dim, config, l2t::hash_combine(opts.seed, 0xfea7ULL));
  }
  return std::make_unique<l2t::llm::HashFeatureProvider>(
      opts.feature_dim, l2t::hash_combine(opts.seed, 0xfea7ULL));
}

l2t::policy::PolicyParams load_policy(const CommonOpts& opts) {
  if (!opts.checkpoint.empty()) {
    std::ifstream in(opts.checkpoint);
    if (!in)
      throw l2t::Error(l2t::ErrorCode::IoError,
                       "cannot open checkpoint: " + opts.checkpoint);
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto params = l2t::policy::PolicyParams::from_json(buffer.str());
    if (params.d != opts.feature_dim)
      throw l2t::Error(l2t::ErrorCode::ShapeError,
                       "checkpoint feature dimension mismatch");
    return params;
  }
  l2t::policy::PolicyConfig config;
  config.d = opts.feature_dim;
  config.h = opts.hidden;
  config.b_max = opts.b_max;
  config.seed = l2t::hash_combine(opts.seed, 0x90110cULL);
  return l2t::policy::PolicyParams::init(config);
}

l2t::engine::EpisodeConfig episode_config(const CommonOpts& opts,
                                          std::uint64_t seed) {
  l2t::engine::EpisodeConfig cfg;
  cfg.beta = opts.beta;
  cfg.max_steps = opts.max_steps;
  cfg.max_nodes = opts.max_nodes;
  cfg.classify_parallelism = opts.classify_parallelism;
  cfg.regen_limit = opts.regen_limit;
  cfg.max_tokens = opts.max_tokens;
  cfg.mean_reward_aggregation = opts.aggregation == "mean";
  cfg.seed = seed;
  return cfg;
}

l2t::prompts::PromptLibrary load_prompts(const CommonOpts& opts) {
  if (!opts.prompts_dir.empty())
    return l2t::prompts::PromptLibrary::load_dir(opts.prompts_dir);
  return l2t::prompts::PromptLibrary::builtin();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw l2t::Error(l2t::ErrorCode::IoError,
                     "cannot write file: " + path.string());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw l2t::Error(l2t::ErrorCode::IoError,
                     "cannot open file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string format_double(double v) {
  char buffer[64];
  auto res = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, res.ptr);
}

std::string modes_csv(const std::vector<std::pair<int, l2t::engine::ModeRecord>>& rows) {
  std::string out =
      "episode,step,node,branch_count,temperature,top_p,use_dependency\n";
  for (const auto& [episode, record] : rows) {
    out += std::to_string(episode) + "," + std::to_string(record.step) + "," +
           std::to_string(record.node) + "," +
           std::to_string(record.mode.branch_count) + "," +
           format_double(record.mode.temperature) + "," +
           format_double(record.mode.top_p) + "," +
           (record.mode.use_dependency ? "1" : "0") + "\n";
  }
  return out;
}

struct EpisodeArtifacts {
  l2t::engine::EpisodeResult result;
  std::vector<l2t::engine::TraceEvent> events;
  bool verified = false;
};

EpisodeArtifacts run_one(const l2t::tasks::TaskSpec& task,
                         l2t::llm::Backend& backend,
                         l2t::llm::FeatureProvider& provider,
                         const l2t::prompts::PromptLibrary& lib,
                         const l2t::policy::PolicyParams& params,
                         l2t::engine::EpisodeConfig cfg, int episode_index) {
  EpisodeArtifacts artifacts;
  l2t::engine::EngineContext ctx;
  ctx.backend = &backend;
  ctx.features = &provider;
  ctx.prompts = &lib;
  ctx.params = &params;
  ctx.episode_index = episode_index;
  ctx.trace = [&artifacts](const l2t::engine::TraceEvent& event) {
    artifacts.events.push_back(event);
  };
  l2t::engine::Engine engine(ctx, cfg);
  artifacts.result = engine.run_episode(task);
  if (artifacts.result.outcome == l2t::engine::Outcome::Solved) {
    auto verdict = l2t::tasks::verify_solution(
        task, l2t::engine::solution_path_texts(artifacts.result));
    artifacts.verified = verdict.ok;
  }
  return artifacts;
}

std::string trace_to_jsonl(const std::vector<l2t::engine::TraceEvent>& events) {
  std::string out;
  for (const auto& event : events) out += event.to_json_line() + "\n";
  return out;
}

l2t::tasks::TaskSpec task_from_opts(const std::string& task_file,
                                    const std::string& family, int n,
                                    int extras, std::uint64_t instance_seed) {
  if (!task_file.empty()) return l2t::tasks::load_task_file(task_file);
  if (family.empty())
    throw l2t::Error(l2t::ErrorCode::InvalidArgument,
                     "either --task or --family is required");
  l2t::Rng rng(l2t::hash_combine(instance_seed, l2t::hash_text(family)));
  if (family == "game24") return l2t::tasks::gen_game24(rng);
  if (family == "latin") return l2t::tasks::gen_latin(rng, n, extras);
  if (family == "knights_knaves") return l2t::tasks::gen_knights_knaves(rng, n);
  if (family == "creative") return l2t::tasks::gen_creative(rng, n);
  throw l2t::Error(l2t::ErrorCode::InvalidArgument,
                   "unknown family: " + family);
}

std::vector<std::string> manifest_paths(const std::string& manifest_file) {
  ordered_json j = ordered_json::parse(read_file(manifest_file));
  std::vector<std::string> paths;
  fs::path base = fs::path(manifest_file).parent_path();
  for (const auto& item : j.at("instances")) {
    fs::path p = item.get<std::string>();
    paths.push_back(p.is_absolute() ? p.string() : (base / p).string());
  }
  if (paths.empty())
    throw l2t::Error(l2t::ErrorCode::InvalidArgument, "empty manifest");
  return paths;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int cmd_run(const CommonOpts& opts, const std::string& task_file,
            const std::string& family, int n, int extras,
            std::uint64_t instance_seed) {
  auto task = task_from_opts(task_file, family, n, extras, instance_seed);
  auto backend = make_backend(opts);
  auto provider = make_provider(opts);
  auto lib = load_prompts(opts);
  auto params = load_policy(opts);

  auto artifacts = run_one(task, *backend, *provider, lib, params,
                           episode_config(opts, opts.seed), 0);
  const auto& result = artifacts.result;

  write_file(fs::path(opts.out) / "trace.jsonl", trace_to_jsonl(artifacts.events));
  std::vector<std::pair<int, l2t::engine::ModeRecord>> modes;
  for (const auto& record : result.modes) modes.emplace_back(0, record);
  write_file(fs::path(opts.out) / "modes.csv", modes_csv(modes));

  ordered_json summary;
  summary["task"] = task.description;
  summary["family"] = l2t::tasks::family_name(task.family);
  summary["seed"] = opts.seed;
  summary["outcome"] = l2t::engine::outcome_name(result.outcome);
  summary["verified"] = artifacts.verified;
  summary["final_text"] = result.final_text
                              ? ordered_json(*result.final_text)
                              : ordered_json(nullptr);
  summary["generated_nodes"] = result.generated_nodes;
  summary["steps"] = result.steps_run;
  summary["usage"] = ordered_json::parse(result.usage.to_json());
  write_file(fs::path(opts.out) / "summary.json", summary.dump(2));

  std::cout << "outcome: " << l2t::engine::outcome_name(result.outcome)
            << "  nodes: " << result.generated_nodes
            << "  steps: " << result.steps_run
            << "  llm accesses: " << result.usage.access_count() << "\n";
  if (result.final_text) std::cout << "final: " << *result.final_text << "\n";
  return result.outcome == l2t::engine::Outcome::Solved ? kExitSolved
                                                        : kExitUnsolved;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const CommonOpts& opts, const std::string& manifest_file,
             int repeats, int jobs) {
  auto paths = manifest_paths(manifest_file);
  std::vector<l2t::tasks::TaskSpec> tasks;
  tasks.reserve(paths.size());
  for (const auto& p : paths) tasks.push_back(l2t::tasks::load_task_file(p));

  auto backend = make_backend(opts);
  auto provider = make_provider(opts);
  auto lib = load_prompts(opts);
  auto params = load_policy(opts);

  const int total = static_cast<int>(tasks.size()) * repeats;
  std::vector<EpisodeArtifacts> episodes(total);
  auto run_index = [&](int index) {
    int instance = index / repeats;
    int repeat = index % repeats;
    auto cfg = episode_config(
        opts, l2t::hash_combine(l2t::hash_combine(opts.seed, instance), repeat));
    episodes[index] = run_one(tasks[instance], *backend, *provider, lib,
                              params, cfg, index);
  };
  if (jobs <= 1) {
    for (int i = 0; i < total; ++i) run_index(i);
  } else {
    std::vector<std::future<void>> futures;
    int chunk = (total + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      int begin = w * chunk, end = std::min(total, begin + chunk);
      if (begin >= end) break;
      futures.push_back(std::async(std::launch::async, [&, begin, end]() {
        for (int i = begin; i < end; ++i) run_index(i);
      }));
    }
    for (auto& f : futures) f.get();
  }

  std::vector<l2t::report::EpisodeRow> rows;
  l2t::llm::UsageSnapshot usage;
  long long total_nodes = 0;
  std::string trace;
  std::vector<std::pair<int, l2t::engine::ModeRecord>> modes;
  for (int i = 0; i < total; ++i) {
    const auto& artifacts = episodes[i];
    l2t::report::EpisodeRow row;
    row.instance = paths[i / repeats];
    row.repeat = i % repeats;
    row.outcome = l2t::engine::outcome_name(artifacts.result.outcome);
    row.verified = artifacts.verified;
    row.generated_nodes = artifacts.result.generated_nodes;
    row.steps = artifacts.result.steps_run;
    row.llm_accesses = artifacts.result.usage.access_count();
    rows.push_back(std::move(row));
    usage += artifacts.result.usage;
    total_nodes += artifacts.result.generated_nodes;
    trace += trace_to_jsonl(artifacts.events);
    for (const auto& record : artifacts.result.modes)
      modes.emplace_back(i, record);
  }

  auto report = l2t::report::build_report(static_cast<int>(tasks.size()),
                                          repeats, std::move(rows), usage,
                                          total_nodes);
  write_file(fs::path(opts.out) / "report.json", report.to_json());
  write_file(fs::path(opts.out) / "report.txt", report.render_table());
  write_file(fs::path(opts.out) / "eval_trace.jsonl", trace);
  write_file(fs::path(opts.out) / "modes.csv", modes_csv(modes));
  std::cout << report.render_table();
  return kExitSolved;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const CommonOpts& opts, const std::string& manifest_file,
              const std::string& family, int n, int extras, int count,
              std::uint64_t instance_seed, int rounds, int episodes_per_round,
              bool resume, const l2t::trainer::TrainConfig& tcfg_in) {
  std::vector<l2t::tasks::TaskSpec> tasks;
  if (!manifest_file.empty()) {
    for (const auto& p : manifest_paths(manifest_file))
      tasks.push_back(l2t::tasks::load_task_file(p));
  } else {
    l2t::Rng rng(l2t::hash_combine(instance_seed, 0x7261696eULL));
    for (int i = 0; i < count; ++i) {
      if (family == "game24" || family.empty())
        tasks.push_back(l2t::tasks::gen_game24(rng));
      else if (family == "latin")
        tasks.push_back(l2t::tasks::gen_latin(rng, n, extras));
      else if (family == "knights_knaves")
        tasks.push_back(l2t::tasks::gen_knights_knaves(rng, n));
      else if (family == "creative")
        tasks.push_back(l2t::tasks::gen_creative(rng, n));
      else
        throw l2t::Error(l2t::ErrorCode::InvalidArgument,
                         "unknown family: " + family);
    }
  }
  if (tasks.empty())
    throw l2t::Error(l2t::ErrorCode::InvalidArgument, "no training instances");

  auto backend = make_backend(opts);
  auto provider = make_provider(opts);
  auto lib = load_prompts(opts);
  auto params = load_policy(opts);

  int start_round = 0;
  if (resume) {
    if (opts.checkpoint.empty())
      throw l2t::Error(l2t::ErrorCode::InvalidArgument,
                       "--resume requires --checkpoint");
    ordered_json j = ordered_json::parse(read_file(opts.checkpoint));
    start_round = j.value("round", -1) + 1;
  }

  l2t::trainer::TrainConfig tcfg = tcfg_in;
  fs::create_directories(opts.out);
  fs::path log_path = fs::path(opts.out) / "train_log.jsonl";
  // resuming appends to an existing log, a fresh run starts one
  std::ofstream log(log_path, resume ? std::ios::app : std::ios::trunc);
  if (!log)
    throw l2t::Error(l2t::ErrorCode::IoError,
                     "cannot write training log: " + log_path.string());
  for (int round = start_round; round < start_round + rounds; ++round) {
    l2t::trainer::TrajectoryBuffer buffer;
    double solved = 0;
    for (int e = 0; e < episodes_per_round; ++e) {
      const auto& task = tasks[(round * episodes_per_round + e) % tasks.size()];
      auto cfg = episode_config(
          opts, l2t::hash_combine(l2t::hash_combine(opts.seed, round), e));
      auto artifacts =
          run_one(task, *backend, *provider, lib, params, cfg, e);
      buffer.append(artifacts.result.transitions);
      solved += artifacts.result.outcome == l2t::engine::Outcome::Solved;
    }
    l2t::trainer::TrainStats stats;
    stats.update_idx = round;
    if (!buffer.empty()) {
      tcfg.seed = l2t::hash_combine(opts.seed, static_cast<std::uint64_t>(round));
      stats = l2t::trainer::update(params, buffer, tcfg, round);
    }
    log << stats.to_json_line() << "\n";
    log.flush();
    ordered_json checkpoint = ordered_json::parse(params.to_json());
    checkpoint["round"] = round;
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint_round_%03d.json", round);
    write_file(fs::path(opts.out) / name, checkpoint.dump());
    std::cout << "round " << round << ": solved " << solved << "/"
              << episodes_per_round << ", mean reward " << stats.mean_reward
              << ", entropy " << stats.entropy << "\n";
  }
  return kExitSolved;
}

// ---------------------------------------------------------------------------
// gen / trace
// ---------------------------------------------------------------------------

int cmd_gen(const std::string& family, int count, int n, int extras,
            std::uint64_t instance_seed, const std::string& out,
            bool solvable, bool sentences) {
  l2t::Rng rng(l2t::hash_combine(instance_seed, l2t::hash_text(family)));
  ordered_json manifest;
  manifest["instances"] = ordered_json::array();
  for (int i = 0; i < count; ++i) {
    l2t::tasks::TaskSpec task;
    if (family == "game24")
      task = l2t::tasks::gen_game24(rng, solvable);
    else if (family == "latin")
      task = l2t::tasks::gen_latin(rng, n, extras);
    else if (family == "knights_knaves")
      task = l2t::tasks::gen_knights_knaves(rng, n);
    else if (family == "creative")
      task = l2t::tasks::gen_creative(rng, n, sentences);
    else
      throw l2t::Error(l2t::ErrorCode::InvalidArgument,
                       "unknown family: " + family);
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%03d.json", family.c_str(), i);
    write_file(fs::path(out) / name, l2t::tasks::task_to_json(task));
    manifest["instances"].push_back(name);
  }
  write_file(fs::path(out) / "manifest.json", manifest.dump(2));
  std::cout << "wrote " << count << " instances to " << out << "\n";
  return kExitSolved;
}

int cmd_trace(const std::string& file) {
  std::istringstream in(read_file(file));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    std::string node =
        j.at("node").is_null() ? "-" : std::to_string(j.at("node").get<int>());
    std::printf("ep %3d step %2d %-10s node %-4s %s\n", j.value("episode", 0),
                j.value("step", 0), j.value("event", std::string("?")).c_str(),
                node.c_str(), j.at("payload").dump().c_str());
  }
  return kExitSolved;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"annotated-graph reasoning engine"};
  app.set_config("--config", "", "structured config file; flags win");
  app.require_subcommand(1);
  app.fallthrough();

  CommonOpts opts;

  // run
  auto* run = app.add_subcommand("run", "run one episode");
  add_common(run, opts);
  std::string run_task, run_family;
  int run_n = 3, run_extras = 3;
  std::uint64_t run_instance_seed = 0;
  run->add_option("--task", run_task, "task instance JSON file");
  run->add_option("--family", run_family, "generate an instance of a family");
  run->add_option("--n", run_n, "family size parameter");
  run->add_option("--givens", run_extras, "given cells (latin)");
  run->add_option("--instance-seed", run_instance_seed, "generator seed");

  // eval
  auto* eval = app.add_subcommand("eval", "run a batch and report");
  add_common(eval, opts);
  std::string eval_manifest;
  int eval_repeats = 1, eval_jobs = 1;
  eval->add_option("--manifest", eval_manifest, "instance manifest JSON")
      ->required();
  eval->add_option("--repeats", eval_repeats, "episodes per instance");
  eval->add_option("--jobs", eval_jobs, "concurrent episodes");

  // train
  auto* train = app.add_subcommand("train", "train the mode selector");
  add_common(train, opts);
  std::string train_manifest, train_family = "game24";
  int train_n = 3, train_extras = 3, train_count = 8;
  std::uint64_t train_instance_seed = 0;
  int rounds = 5, episodes_per_round = 8;
  bool resume = false;
  l2t::trainer::TrainConfig tcfg;
  train->add_option("--manifest", train_manifest, "instance manifest JSON");
  train->add_option("--family", train_family, "generated instance family");
  train->add_option("--n", train_n, "family size parameter");
  train->add_option("--givens", train_extras, "given cells (latin)");
  train->add_option("--count", train_count, "generated instance count");
  train->add_option("--instance-seed", train_instance_seed, "generator seed");
  train->add_option("--rounds", rounds, "training rounds");
  train->add_option("--episodes-per-round", episodes_per_round,
                    "episodes collected per round");
  train->add_flag("--resume", resume, "continue from --checkpoint");
  train->add_option("--lr", tcfg.lr, "learning rate");
  train->add_option("--epochs", tcfg.epochs, "inner epochs per update");
  train->add_option("--clip-eps", tcfg.clip_eps, "ppo clip parameter");
  train->add_option("--gamma", tcfg.gamma, "discount");
  train->add_option("--lam", tcfg.lam, "gae lambda");
  train->add_option("--entropy-coef", tcfg.entropy_coef, "entropy bonus");
  train->add_option("--value-coef", tcfg.value_coef, "value loss weight");
  train->add_option("--minibatch", tcfg.minibatch, "minibatch size (0 = full)");
  bool no_adv_norm = false;
  train->add_flag("--no-adv-norm", no_adv_norm,
                  "disable advantage normalization");

  // gen
  auto* gen = app.add_subcommand("gen", "emit seeded task instances");
  std::string gen_family = "game24", gen_out = "instances";
  int gen_count = 10, gen_n = 3, gen_extras = 3;
  std::uint64_t gen_seed = 0;
  bool gen_unsolvable = false;
  gen->add_option("--family", gen_family, "task family")->required();
  gen->add_option("--count", gen_count, "instance count");
  gen->add_option("--n", gen_n, "family size parameter");
  gen->add_option("--givens", gen_extras, "given cells (latin)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_flag("--unsolvable", gen_unsolvable,
                "emit unsolvable instances (game24 only)");
  bool gen_sentences = false;
  gen->add_flag("--sentences", gen_sentences,
                "creative: leading sentences instead of words");

  // trace
  auto* trace = app.add_subcommand("trace", "pretty-print a trace file");
  std::string trace_file;
  trace->add_option("--file", trace_file, "trace JSONL file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed())
      return cmd_run(opts, run_task, run_family, run_n, run_extras,
                     run_instance_seed);
    if (eval->parsed()) return cmd_eval(opts, eval_manifest, eval_repeats, eval_jobs);
    if (train->parsed()) {
      tcfg.normalize_adv = !no_adv_norm;
      return cmd_train(opts, train_manifest, train_family, train_n,
                       train_extras, train_count, train_instance_seed, rounds,
                       episodes_per_round, resume, tcfg);
    }
    if (gen->parsed())
      return cmd_gen(gen_family, gen_count, gen_n, gen_extras, gen_seed,
                     gen_out, !gen_unsolvable, gen_sentences);
    if (trace->parsed()) return cmd_trace(trace_file);
  } catch (const l2t::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case l2t::ErrorCode::Transport:
      case l2t::ErrorCode::RateLimited:
      case l2t::ErrorCode::MalformedProviderReply:
        return kExitBackend;
      default:
        return kExitUsage;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
