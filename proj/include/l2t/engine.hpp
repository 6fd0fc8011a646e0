#ifndef L2T_ENGINE_HPP_
#define L2T_ENGINE_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "l2t/graph.hpp"
#include "l2t/llm.hpp"
#include "l2t/policy.hpp"
#include "l2t/prompts.hpp"
#include "l2t/tasks.hpp"
#include "l2t/trainer.hpp"

namespace l2t::engine {

struct EpisodeConfig {
  int beta = 2;
  int max_steps = 12;
  int max_nodes = 64;
  int regen_limit = 1;
  int classify_parallelism = 1;
  std::uint64_t seed = 0;
  bool mean_reward_aggregation = false;  // max over an action's children otherwise
  int max_tokens = 1024;
};

enum class Outcome { Solved, Exhausted, BudgetHit };

const char* outcome_name(Outcome outcome);

struct TraceEvent {
  int episode = 0;
  int step = 0;
  std::string event;  // created|classified|expanded|labeled|rewarded|terminated
  std::optional<graph::NodeId> node;
  nlohmann::ordered_json payload;

  std::string to_json_line() const;
};

using TraceSink = std::function<void(const TraceEvent&)>;

// One mode-selection decision; emitted as CSV for external plotting.
struct ModeRecord {
  int step = 0;
  graph::NodeId node = 0;
  policy::ModeVector mode;
};

struct EpisodeResult {
  std::optional<std::string> final_text;
  std::optional<graph::NodeId> final_node;
  Outcome outcome = Outcome::Exhausted;
  graph::ReasoningGraph graph;
  trainer::TrajectoryBuffer transitions;
  llm::UsageSnapshot usage;
  int generated_nodes = 0;
  int steps_run = 0;
  std::vector<ModeRecord> modes;
};

// Thought texts along the root-to-final path (root excluded); the task
// verifier consumes these.
std::vector<std::string> solution_path_texts(const EpisodeResult& result);

struct StepReport {
  int step = 0;
  int classified = 0;
  int expanded = 0;
  int new_children = 0;
  bool regenerated = false;
  bool budget_hit = false;
  graph::TerminationKind state = graph::TerminationKind::Continue;
};

struct EngineContext {
  llm::Backend* backend = nullptr;
  llm::FeatureProvider* features = nullptr;
  const prompts::PromptLibrary* prompts = nullptr;
  const policy::PolicyParams* params = nullptr;
  TraceSink trace;        // optional
  int episode_index = 0;  // stamped into trace events
};

// Drives one episode: first step, k-th steps, reward assignment, trace
// emission. The graph is owned exclusively; only read-only LLM calls run
// concurrently (classification, bounded by classify_parallelism).
class Engine {
 public:
  Engine(EngineContext context, EpisodeConfig config);

  EpisodeResult run_episode(const tasks::TaskSpec& task);

  // Stepwise surface for tests.
  void begin(const tasks::TaskSpec& task);  // first step
  std::map<graph::NodeId, graph::Label> classify_pending();
  void resolve_rewards();
  StepReport expand_step();  // apply labels, select modes, generate
  StepReport kth_step();     // classify + resolve + terminate/expand

  graph::ReasoningGraph& episode_graph();
  const std::string& x_fmt() const { return x_fmt_; }
  const std::string& x_eva() const { return x_eva_; }
  const trainer::TrajectoryBuffer& transitions() const { return transitions_; }
  llm::UsageSnapshot usage() const;

 private:
  struct PendingReward {
    std::size_t transition_idx;
    std::vector<graph::NodeId> children;
  };

  llm::LlmResponse call(llm::RequestKind kind, const std::string& prompt,
                        double temperature, double top_p);
  void emit(TraceEvent event);
  void resolve_leftover_rewards();
  void regenerate_present();
  EpisodeResult finish(Outcome outcome, std::optional<graph::NodeId> final_node);

  EngineContext ctx_;
  EpisodeConfig cfg_;
  tasks::TaskSpec task_;
  std::unique_ptr<graph::ReasoningGraph> graph_;
  std::string x_fmt_, x_eva_;
  trainer::TrajectoryBuffer transitions_;
  std::vector<PendingReward> pending_;
  std::vector<ModeRecord> modes_;
  Rng rng_{0};
  int regen_used_ = 0;
  int steps_run_ = 0;
  mutable std::mutex usage_mutex_;
  llm::UsageSnapshot usage_;
};

}  // namespace l2t::engine

#endif  // L2T_ENGINE_HPP_
