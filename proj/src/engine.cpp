#include "l2t/engine.hpp"

#include <algorithm>
#include <future>

#include "l2t/errors.hpp"

namespace l2t::engine {

using graph::Label;
using graph::NodeId;
using graph::TerminationKind;
using llm::RequestKind;
using prompts::TemplateKind;

namespace {

// Classification, evaluation and the episode-level first-step calls run at
// the lowest legal temperature; only generation uses the sampled mode.
constexpr double kFixedTemperature = 0.05;
constexpr double kFixedTopP = 1.0;

}  // namespace

const char* outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::Solved: return "solved";
    case Outcome::Exhausted: return "exhausted";
    case Outcome::BudgetHit: return "budget_hit";
  }
  return "unknown";
}

std::string TraceEvent::to_json_line() const {
  nlohmann::ordered_json j;
  j["episode"] = episode;
  j["step"] = step;
  j["event"] = event;
  j["node"] = node ? nlohmann::ordered_json(*node) : nlohmann::ordered_json(nullptr);
  j["payload"] = payload;
  return j.dump();
}

std::vector<std::string> solution_path_texts(const EpisodeResult& result) {
  std::vector<std::string> texts;
  if (!result.final_node) return texts;
  NodeId cursor = *result.final_node;
  while (true) {
    const auto& n = result.graph.node(cursor);
    if (!n.parent) break;  // root text is the task description, not a thought
    texts.push_back(n.text);
    cursor = *n.parent;
  }
  std::reverse(texts.begin(), texts.end());
  return texts;
}

Engine::Engine(EngineContext context, EpisodeConfig config)
    : ctx_(context), cfg_(config), rng_(hash_combine(config.seed, 0x65706973ULL)) {
  if (!ctx_.backend || !ctx_.features || !ctx_.prompts || !ctx_.params)
    throw Error(ErrorCode::InvalidArgument, "engine context incomplete");
  if (ctx_.params->d != ctx_.features->dimension())
    throw Error(ErrorCode::ShapeError,
                "policy feature dimension does not match the provider");
  if (cfg_.max_steps < 0 || cfg_.max_nodes < 1 || cfg_.beta < 1)
    throw Error(ErrorCode::InvalidArgument, "invalid episode budgets");
}

llm::LlmResponse Engine::call(RequestKind kind, const std::string& prompt,
                              double temperature, double top_p) {
  llm::LlmRequest request;
  request.prompt = prompt;
  request.temperature = temperature;
  request.top_p = top_p;
  request.max_tokens = cfg_.max_tokens;
  request.kind = kind;
  llm::LlmResponse response = ctx_.backend->complete(request);
  {
    std::lock_guard<std::mutex> lock(usage_mutex_);
    auto& k = usage_.by_kind[static_cast<int>(kind)];
    k.requests += 1;
    k.prompt_tokens += response.prompt_tokens;
    k.completion_tokens += response.completion_tokens;
  }
  return response;
}

void Engine::emit(TraceEvent event) {
  if (!ctx_.trace) return;
  event.episode = ctx_.episode_index;
  ctx_.trace(event);
}

llm::UsageSnapshot Engine::usage() const {
  std::lock_guard<std::mutex> lock(usage_mutex_);
  return usage_;
}

graph::ReasoningGraph& Engine::episode_graph() {
  if (!graph_) throw Error(ErrorCode::InvalidArgument, "episode not started");
  return *graph_;
}

void Engine::begin(const tasks::TaskSpec& task) {
  task_ = task;
  graph_ = std::make_unique<graph::ReasoningGraph>(
      graph::ReasoningGraph::new_graph(task.description,
                                       ctx_.features->dimension()));
  transitions_ = {};
  pending_.clear();
  modes_.clear();
  regen_used_ = 0;
  steps_run_ = 0;

  x_fmt_ = call(RequestKind::Format,
                prompts::render(*ctx_.prompts, TemplateKind::Format,
                                {{"task", task_.description}}),
                kFixedTemperature, kFixedTopP)
               .text;
  x_eva_ = call(RequestKind::EvalInfo,
                prompts::render(*ctx_.prompts, TemplateKind::EvalInfo,
                                {{"task", task_.description}}),
                kFixedTemperature, kFixedTopP)
               .text;

  TraceEvent ev;
  ev.step = graph_->step();
  ev.event = "created";
  ev.node = graph_->root();
  ev.payload = {{"text", task_.description},
                {"parent", nullptr},
                {"llm", {{"format", 1}, {"eval_info", 1}}}};
  emit(std::move(ev));
}

std::map<NodeId, Label> Engine::classify_pending() {
  if (graph_->present().empty())
    throw Error(ErrorCode::InvalidArgument, "no pending nodes");
  const std::vector<NodeId> order = graph_->present();

  struct Result {
    Label label = Label::Stop;
    bool defaulted = false;
    int calls = 0;
    std::vector<double> feature;
  };
  std::vector<Result> results(order.size());

  auto classify_one = [this](NodeId v) {
    Result res;
    auto sub = graph_->ancestor_subgraph(v, cfg_.beta);
    std::string prompt = prompts::render(
        *ctx_.prompts, TemplateKind::NodeClass,
        {{"task", task_.description}, {"subgraph", prompts::tau(sub, *graph_)}});
    auto response = call(RequestKind::Classify, prompt, kFixedTemperature,
                         kFixedTopP);
    res.calls = 1;
    auto parsed = prompts::parse_label(response.text);
    if (!parsed) {
      response = call(RequestKind::Classify, prompt, kFixedTemperature,
                      kFixedTopP);
      res.calls = 2;
      parsed = prompts::parse_label(response.text);
    }
    if (parsed) {
      res.label = static_cast<Label>(parsed->label);
    } else {
      res.label = Label::Stop;  // unparseable twice: stop and log
      res.defaulted = true;
    }
    res.feature = ctx_.features->featurize(graph_->node(v).text);
    return res;
  };

  const int jobs = std::max(1, cfg_.classify_parallelism);
  if (jobs <= 1 || order.size() <= 1) {
    for (std::size_t i = 0; i < order.size(); ++i)
      results[i] = classify_one(order[i]);
  } else {
    // fixed slicing keeps assembly order independent of scheduling
    std::vector<std::future<void>> futures;
    std::size_t chunk = (order.size() + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      std::size_t begin = w * chunk;
      std::size_t end = std::min(order.size(), begin + chunk);
      if (begin >= end) break;
      futures.push_back(std::async(std::launch::async, [&, begin, end]() {
        for (std::size_t i = begin; i < end; ++i)
          results[i] = classify_one(order[i]);
      }));
    }
    for (auto& f : futures) f.get();
  }

  std::map<NodeId, Label> labels;
  for (std::size_t i = 0; i < order.size(); ++i) {
    NodeId v = order[i];
    graph_->set_feature(v, std::move(results[i].feature));
    graph_->annotate_label(v, results[i].label);
    labels[v] = results[i].label;
    TraceEvent ev;
    ev.step = graph_->step();
    ev.event = "classified";
    ev.node = v;
    ev.payload = {{"label", static_cast<int>(results[i].label)},
                  {"llm", {{"classify", results[i].calls}}}};
    if (results[i].defaulted) ev.payload["defaulted"] = true;
    emit(std::move(ev));
  }
  return labels;
}

void Engine::resolve_rewards() {
  for (const auto& pending : pending_) {
    auto& transition = transitions_.transitions.at(pending.transition_idx);
    bool final_child = false;
    for (NodeId child : pending.children) {
      if (graph_->node(child).label == Label::Final) final_child = true;
    }
    int evaluate_calls = 0;
    double reward = 0.0;
    nlohmann::ordered_json scores = nlohmann::ordered_json::array();
    if (final_child) {
      reward = 100.0;
    } else {
      double best = 0.0, sum = 0.0;
      for (NodeId child : pending.children) {
        std::string prompt = prompts::render(
            *ctx_.prompts, TemplateKind::Evaluate,
            {{"task", task_.description},
             {"results", graph_->node(child).text},
             {"eval_info", x_eva_}});
        auto response = call(RequestKind::Evaluate, prompt, kFixedTemperature,
                             kFixedTopP);
        ++evaluate_calls;
        int score = prompts::parse_score(response.text).value_or(0);
        graph_->set_eval_score(child, score);
        scores.push_back(score);
        best = std::max(best, static_cast<double>(score));
        sum += score;
      }
      reward = cfg_.mean_reward_aggregation && !pending.children.empty()
                   ? sum / static_cast<double>(pending.children.size())
                   : best;
    }
    transition.reward = reward;
    TraceEvent ev;
    ev.step = graph_->step();
    ev.event = "rewarded";
    ev.node = transition.node;
    ev.payload = {{"reward", reward},
                  {"child_scores", scores},
                  {"llm", {{"evaluate", evaluate_calls}}}};
    emit(std::move(ev));
  }
  pending_.clear();
}

void Engine::resolve_leftover_rewards() {
  // budget ended the episode before the children could be classified;
  // rewards fall back to evaluation scores only
  resolve_rewards();
}

void Engine::regenerate_present() {
  const std::vector<NodeId> order = graph_->present();
  for (NodeId v : order) {
    const auto& node = graph_->node(v);
    if (!node.parent) {
      // the root carries the task description; nothing to regenerate from
      graph_->replace_text(v, node.text);
      continue;
    }
    auto parent_sub = graph_->ancestor_subgraph(*node.parent, 1);
    std::string prompt = prompts::render(
        *ctx_.prompts, TemplateKind::Generate,
        {{"task", task_.description},
         {"subgraph", prompts::tau(parent_sub, *graph_)},
         {"format_info", x_fmt_},
         {"branch_number", "1"},
         {"dependency", ""}});
    auto response = call(RequestKind::Generate, prompt, 0.7, 0.9);
    auto thoughts = prompts::parse_thoughts(response.text, 1);
    std::string text = thoughts.empty() ? node.text : thoughts[0];
    graph_->replace_text(v, text);
    TraceEvent ev;
    ev.step = graph_->step();
    ev.event = "labeled";
    ev.node = v;
    ev.payload = {{"regenerated", true},
                  {"text", text},
                  {"llm", {{"generate", 1}}}};
    emit(std::move(ev));
  }
}

StepReport Engine::expand_step() {
  StepReport report;
  report.step = graph_->step();

  // all mode decisions read the pre-expansion graph; the snapshot is taken
  // before any membership effect is applied
  std::shared_ptr<const std::string> snapshot;
  policy::GraphInput input;
  const std::vector<NodeId> order = graph_->present();
  bool any_continue = std::any_of(order.begin(), order.end(), [this](NodeId v) {
    return graph_->node(v).label == Label::Continue;
  });
  if (any_continue) {
    snapshot = std::make_shared<const std::string>(graph_->to_json());
    input = policy::graph_input(*graph_);
  }

  std::vector<NodeId> queue;
  for (NodeId v : order) {
    auto label = graph_->node(v).label;
    if (!label) continue;  // restored parent awaiting classification
    switch (*label) {
      case Label::Continue:
        graph_->apply_label(v, Label::Continue);
        queue.push_back(v);
        break;
      case Label::Stop: {
        auto effect = graph_->apply_label(v, Label::Stop);
        TraceEvent ev;
        ev.step = report.step;
        ev.event = "labeled";
        ev.node = v;
        ev.payload = {{"label", 1}, {"moved_to_history", effect.moved_to_history}};
        emit(std::move(ev));
        break;
      }
      case Label::Backtrack: {
        TraceEvent ev;
        ev.step = report.step;
        ev.event = "labeled";
        ev.node = v;
        try {
          auto effect = graph_->apply_label(v, Label::Backtrack);
          ev.payload = {{"label", 4},
                        {"moved_to_history", effect.moved_to_history}};
          if (effect.parent_restored)
            ev.payload["parent_restored"] = *effect.parent_restored;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::RootBacktrack) throw;
          auto effect = graph_->apply_label(v, Label::Stop);
          ev.payload = {{"label", 4},
                        {"root_backtrack_as_stop", true},
                        {"moved_to_history", effect.moved_to_history}};
        }
        emit(std::move(ev));
        break;
      }
      case Label::Final:
        break;  // handled by the termination path
    }
  }

  for (NodeId v : queue) {
    Eigen::VectorXd m = policy::aggregate_row(input, static_cast<int>(v));
    policy::RowForward row = policy::row_forward(*ctx_.params, m);
    policy::ActionDistribution dist = policy::actor_dist(*ctx_.params, row.u);
    auto [mode, logp] = policy::sample_action(dist, rng_);
    double value = policy::critic_value(*ctx_.params, row.u);

    auto sub = graph_->ancestor_subgraph(v, mode.use_dependency ? cfg_.beta : 1);
    std::string dependency =
        mode.use_dependency ? " " + ctx_.prompts->dependency_sentence() : "";
    std::string prompt = prompts::render(
        *ctx_.prompts, TemplateKind::Generate,
        {{"task", task_.description},
         {"subgraph", prompts::tau(sub, *graph_)},
         {"format_info", x_fmt_},
         {"branch_number", std::to_string(mode.branch_count)},
         {"dependency", dependency}});
    int generate_calls = 1;
    auto response =
        call(RequestKind::Generate, prompt, mode.temperature, mode.top_p);
    auto texts = prompts::parse_thoughts(response.text, mode.branch_count);
    if (texts.empty()) {
      response =
          call(RequestKind::Generate, prompt, mode.temperature, mode.top_p);
      generate_calls = 2;
      texts = prompts::parse_thoughts(response.text, mode.branch_count);
    }
    if (texts.empty()) {
      // nothing usable twice: relabel as a stop
      graph_->stop_unexpanded(v);
      TraceEvent ev;
      ev.step = report.step;
      ev.event = "labeled";
      ev.node = v;
      ev.payload = {{"label", 1},
                    {"empty_generation", true},
                    {"llm", {{"generate", generate_calls}}}};
      emit(std::move(ev));
      continue;
    }

    auto children = graph_->add_children(v, texts);
    report.expanded += 1;
    report.new_children += static_cast<int>(children.size());

    TraceEvent ev;
    ev.step = report.step;
    ev.event = "expanded";
    ev.node = v;
    ev.payload = {{"children", children},
                  {"mode",
                   {{"branch_count", mode.branch_count},
                    {"temperature", mode.temperature},
                    {"top_p", mode.top_p},
                    {"use_dependency", mode.use_dependency}}},
                  {"llm", {{"generate", generate_calls}}}};
    emit(std::move(ev));
    for (NodeId child : children) {
      TraceEvent created;
      created.step = report.step;
      created.event = "created";
      created.node = child;
      created.payload = {{"text", graph_->node(child).text}, {"parent", v}};
      emit(std::move(created));
    }

    trainer::Transition transition;
    transition.graph_snapshot = snapshot;
    transition.node = v;
    transition.action = mode;
    transition.log_prob_old = logp;
    transition.reward = 0.0;  // resolved when the children are classified
    transition.value_old = value;
    transition.done = false;
    transition.step = report.step;
    transitions_.transitions.push_back(std::move(transition));
    pending_.push_back(
        {transitions_.transitions.size() - 1, children});
    modes_.push_back({report.step, v, mode});
  }
  return report;
}

StepReport Engine::kth_step() {
  StepReport report;
  report.step = graph_->step();
  if (graph_->present().empty()) {
    // every branch was retired mid-step (empty generations); nothing pends
    resolve_rewards();
    report.state = TerminationKind::AllStopped;
    return report;
  }
  auto labels = classify_pending();
  report.classified = static_cast<int>(labels.size());
  resolve_rewards();

  auto term = graph_->termination_state();
  report.state = term.kind;
  if (term.kind == TerminationKind::FinalFound) {
    return report;
  }
  if (term.kind == TerminationKind::AllStopped) {
    if (!graph_->present().empty() && regen_used_ < cfg_.regen_limit) {
      regenerate_present();
      ++regen_used_;
      report.regenerated = true;
      report.state = TerminationKind::Continue;
      graph_->advance_step();
      return report;
    }
    // retire the stopped nodes and finish
    for (NodeId v : std::vector<NodeId>(graph_->present().begin(),
                                        graph_->present().end())) {
      graph_->apply_label(v, Label::Stop);
    }
    return report;
  }
  if (static_cast<int>(graph_->size()) >= cfg_.max_nodes) {
    report.budget_hit = true;
    return report;
  }
  StepReport expand = expand_step();
  report.expanded = expand.expanded;
  report.new_children = expand.new_children;
  graph_->advance_step();
  return report;
}

EpisodeResult Engine::finish(Outcome outcome,
                             std::optional<NodeId> final_node) {
  resolve_leftover_rewards();
  if (!transitions_.transitions.empty()) {
    int last_step = transitions_.transitions.back().step;
    for (auto& t : transitions_.transitions) {
      if (t.step == last_step) t.done = true;
    }
  }
  EpisodeResult result;
  result.outcome = outcome;
  result.final_node = final_node;
  if (final_node) {
    result.final_text = graph_->node(*final_node).text;
    graph_->apply_label(*final_node, Label::Final);
  }
  result.steps_run = steps_run_;
  result.generated_nodes = static_cast<int>(graph_->size()) - 1;
  result.transitions = transitions_;
  result.modes = modes_;
  result.usage = usage();

  TraceEvent ev;
  ev.step = graph_->step();
  ev.event = "terminated";
  ev.node = final_node;
  ev.payload = {{"outcome", outcome_name(outcome)},
                {"generated_nodes", result.generated_nodes},
                {"steps", steps_run_}};
  emit(std::move(ev));

  result.graph = *graph_;
  return result;
}

EpisodeResult Engine::run_episode(const tasks::TaskSpec& task) {
  begin(task);
  Outcome outcome = Outcome::BudgetHit;
  std::optional<NodeId> final_node;
  while (steps_run_ < cfg_.max_steps) {
    StepReport report = kth_step();
    ++steps_run_;
    if (report.state == TerminationKind::FinalFound) {
      outcome = Outcome::Solved;
      final_node = graph_->termination_state().final_node;
      break;
    }
    if (report.state == TerminationKind::AllStopped && !report.regenerated) {
      outcome = Outcome::Exhausted;
      break;
    }
    if (report.budget_hit) {
      outcome = Outcome::BudgetHit;
      break;
    }
  }
  return finish(outcome, final_node);
}

}  // namespace l2t::engine
