#include "l2t/graph.hpp"

#include <algorithm>
#include <unordered_set>

#include <json.hpp>

#include "l2t/errors.hpp"

namespace l2t::graph {

using ordered_json = nlohmann::ordered_json;

ReasoningGraph ReasoningGraph::new_graph(const std::string& task_description,
                                         int feature_dim) {
  if (task_description.empty())
    throw Error(ErrorCode::InvalidTask, "empty task description");
  if (feature_dim < 1)
    throw Error(ErrorCode::InvalidArgument, "feature dimension must be >= 1");
  ReasoningGraph g;
  g.feature_dim_ = feature_dim;
  ThoughtNode root;
  root.id = 0;
  root.text = task_description;
  root.feature.assign(feature_dim, 0.0);
  root.step_created = 1;
  g.nodes_.push_back(std::move(root));
  g.label_applied_.push_back(false);
  g.present_.push_back(0);
  return g;
}

bool ReasoningGraph::contains(NodeId id) const { return id < nodes_.size(); }

const ThoughtNode& ReasoningGraph::node(NodeId id) const {
  if (!contains(id))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(id));
  return nodes_[id];
}

bool ReasoningGraph::in_present(NodeId id) const {
  return std::find(present_.begin(), present_.end(), id) != present_.end();
}

AncestorSubgraph ReasoningGraph::ancestor_subgraph(NodeId v, int beta) const {
  if (!contains(v))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(v));
  if (beta < 1)
    throw Error(ErrorCode::InvalidArgument, "beta must be positive");
  AncestorSubgraph sub;
  sub.focus = v;
  // path lengths 0 .. beta-1 up the parent chain
  std::vector<NodeId> chain{v};
  NodeId cursor = v;
  for (int depth = 1; depth < beta; ++depth) {
    const auto& parent = nodes_[cursor].parent;
    if (!parent) break;
    chain.push_back(*parent);
    cursor = *parent;
  }
  std::reverse(chain.begin(), chain.end());
  sub.node_ids = chain;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    sub.edge_ids.emplace_back(chain[i], chain[i + 1]);
  }
  return sub;
}

void ReasoningGraph::annotate_label(NodeId v, Label label) {
  if (!contains(v))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(v));
  if (!in_present(v))
    throw Error(ErrorCode::StaleNode,
                "cannot label history node " + std::to_string(v));
  if (nodes_[v].label == Label::Final && label != Label::Final)
    throw Error(ErrorCode::AlreadyLabeled,
                "final label never changes on node " + std::to_string(v));
  nodes_[v].label = label;
}

void ReasoningGraph::move_to_history(NodeId v) {
  auto it = std::find(present_.begin(), present_.end(), v);
  if (it != present_.end()) {
    present_.erase(it);
    history_.push_back(v);
  }
}

MembershipEffect ReasoningGraph::apply_label(NodeId v, Label label) {
  if (!contains(v))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(v));
  if (!in_present(v))
    throw Error(ErrorCode::StaleNode,
                "cannot label history node " + std::to_string(v));
  if (label_applied_[v]) {
    if (label == Label::Final && nodes_[v].label == Label::Final) {
      return MembershipEffect{Label::Final, false, true, std::nullopt};
    }
    throw Error(ErrorCode::AlreadyLabeled,
                "label already applied to node " + std::to_string(v));
  }
  if (label == Label::Backtrack && !nodes_[v].parent) {
    throw Error(ErrorCode::RootBacktrack, "root has no parent");
  }

  MembershipEffect effect;
  effect.applied = label;
  nodes_[v].label = label;
  label_applied_[v] = true;
  switch (label) {
    case Label::Stop:
      move_to_history(v);
      effect.moved_to_history = true;
      break;
    case Label::Continue:
      // stays pending; retired when children are attached
      break;
    case Label::Final:
      effect.final_marked = true;
      break;
    case Label::Backtrack: {
      move_to_history(v);
      effect.moved_to_history = true;
      NodeId parent = *nodes_[v].parent;
      if (!in_present(parent)) {
        auto it = std::find(history_.begin(), history_.end(), parent);
        if (it != history_.end()) history_.erase(it);
        present_.push_back(parent);
        nodes_[parent].label.reset();
        label_applied_[parent] = false;
        effect.parent_restored = parent;
      }
      break;
    }
  }
  return effect;
}

std::vector<NodeId> ReasoningGraph::add_children(
    NodeId parent, const std::vector<std::string>& texts) {
  if (!contains(parent))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(parent));
  if (!in_present(parent) || !label_applied_[parent] ||
      nodes_[parent].label != Label::Continue)
    throw Error(ErrorCode::IllegalExpansion,
                "parent " + std::to_string(parent) +
                    " is not pending expansion");
  if (texts.empty())
    throw Error(ErrorCode::IllegalExpansion, "no child texts given");
  std::vector<NodeId> ids;
  ids.reserve(texts.size());
  for (const auto& text : texts) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    ThoughtNode child;
    child.id = id;
    child.text = text;
    child.parent = parent;
    child.step_created = step_;
    child.feature.assign(feature_dim_, 0.0);
    nodes_.push_back(std::move(child));
    label_applied_.push_back(false);
    edges_.emplace_back(parent, id);
    present_.push_back(id);
    ids.push_back(id);
  }
  move_to_history(parent);
  return ids;
}

void ReasoningGraph::stop_unexpanded(NodeId v) {
  if (!contains(v))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(v));
  if (!in_present(v) || nodes_[v].label != Label::Continue ||
      !label_applied_[v])
    throw Error(ErrorCode::IllegalExpansion,
                "node " + std::to_string(v) + " is not pending expansion");
  nodes_[v].label = Label::Stop;
  move_to_history(v);
}

TerminationState ReasoningGraph::termination_state() const {
  for (const auto& n : nodes_) {
    if (n.label == Label::Final) {
      return {TerminationKind::FinalFound, n.id};
    }
  }
  if (present_.empty()) return {TerminationKind::AllStopped, std::nullopt};
  bool all_stop = std::all_of(present_.begin(), present_.end(),
                              [this](NodeId id) {
                                return nodes_[id].label == Label::Stop;
                              });
  if (all_stop) return {TerminationKind::AllStopped, std::nullopt};
  return {TerminationKind::Continue, std::nullopt};
}

void ReasoningGraph::set_feature(NodeId v, std::vector<double> feature) {
  if (!contains(v))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(v));
  if (static_cast<int>(feature.size()) != feature_dim_)
    throw Error(ErrorCode::ShapeError, "feature length mismatch");
  nodes_[v].feature = std::move(feature);
}

void ReasoningGraph::set_eval_score(NodeId v, int score) {
  if (!contains(v))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(v));
  nodes_[v].eval_score = score;
}

void ReasoningGraph::replace_text(NodeId v, std::string text) {
  if (!contains(v))
    throw Error(ErrorCode::UnknownNode, "node " + std::to_string(v));
  if (!in_present(v))
    throw Error(ErrorCode::StaleNode,
                "cannot regenerate history node " + std::to_string(v));
  nodes_[v].text = std::move(text);
  nodes_[v].label.reset();
  nodes_[v].eval_score.reset();
  nodes_[v].feature.assign(feature_dim_, 0.0);
  label_applied_[v] = false;
}

std::string ReasoningGraph::to_json() const {
  ordered_json j;
  j["version"] = 1;
  j["step"] = step_;
  j["feature_dim"] = feature_dim_;
  ordered_json nodes = ordered_json::array();
  for (const auto& n : nodes_) {
    ordered_json jn;
    jn["id"] = n.id;
    jn["text"] = n.text;
    jn["label"] = n.label ? ordered_json(static_cast<int>(*n.label))
                          : ordered_json(nullptr);
    jn["parent"] = n.parent ? ordered_json(*n.parent) : ordered_json(nullptr);
    jn["step_created"] = n.step_created;
    jn["eval_score"] =
        n.eval_score ? ordered_json(*n.eval_score) : ordered_json(nullptr);
    jn["feature"] = n.feature;
    nodes.push_back(std::move(jn));
  }
  j["nodes"] = std::move(nodes);
  ordered_json edges = ordered_json::array();
  for (const auto& [u, w] : edges_) edges.push_back({u, w});
  j["edges"] = std::move(edges);
  j["present"] = present_;
  j["history"] = history_;
  return j.dump();
}

ReasoningGraph ReasoningGraph::from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  if (j.at("version").get<int>() != 1)
    throw Error(ErrorCode::InvalidArgument, "unsupported graph version");
  ReasoningGraph g;
  g.step_ = j.at("step").get<int>();
  g.feature_dim_ = j.at("feature_dim").get<int>();
  for (const auto& jn : j.at("nodes")) {
    ThoughtNode n;
    n.id = jn.at("id").get<NodeId>();
    n.text = jn.at("text").get<std::string>();
    if (!jn.at("label").is_null())
      n.label = static_cast<Label>(jn.at("label").get<int>());
    if (!jn.at("parent").is_null()) n.parent = jn.at("parent").get<NodeId>();
    n.step_created = jn.at("step_created").get<int>();
    if (!jn.at("eval_score").is_null())
      n.eval_score = jn.at("eval_score").get<int>();
    n.feature = jn.at("feature").get<std::vector<double>>();
    if (n.id != g.nodes_.size())
      throw Error(ErrorCode::InvalidArgument, "non-sequential node ids");
    g.nodes_.push_back(std::move(n));
  }
  for (const auto& je : j.at("edges")) {
    g.edges_.emplace_back(je.at(0).get<NodeId>(), je.at(1).get<NodeId>());
  }
  g.present_ = j.at("present").get<std::vector<NodeId>>();
  g.history_ = j.at("history").get<std::vector<NodeId>>();
  g.label_applied_.assign(g.nodes_.size(), false);
  for (NodeId id : g.history_) g.label_applied_[id] = true;
  for (const auto& n : g.nodes_) {
    if (n.label == Label::Final) g.label_applied_[n.id] = true;
  }
  g.check_invariants();
  return g;
}

void ReasoningGraph::check_invariants() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "graph invariant violated: " + what);
  };
  if (nodes_.empty()) fail("no nodes");
  std::unordered_set<NodeId> pres(present_.begin(), present_.end());
  std::unordered_set<NodeId> hist(history_.begin(), history_.end());
  if (pres.size() != present_.size()) fail("duplicate in present");
  if (hist.size() != history_.size()) fail("duplicate in history");
  if (pres.size() + hist.size() != nodes_.size())
    fail("present/history do not partition nodes");
  for (NodeId id : pres) {
    if (hist.count(id)) fail("node in both present and history");
    if (id >= nodes_.size()) fail("present references unknown node");
  }
  for (NodeId id : hist) {
    if (id >= nodes_.size()) fail("history references unknown node");
  }
  int roots = 0;
  for (const auto& n : nodes_) {
    if (!n.parent) {
      ++roots;
    } else if (*n.parent >= nodes_.size()) {
      fail("dangling parent");
    }
  }
  if (roots != 1) fail("exactly one root required");
  std::vector<int> in_degree(nodes_.size(), 0);
  for (const auto& [u, w] : edges_) {
    if (u >= nodes_.size() || w >= nodes_.size()) fail("edge endpoint missing");
    ++in_degree[w];
    if (!nodes_[w].parent || *nodes_[w].parent != u)
      fail("edge does not match parent pointer");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (in_degree[i] > 1) fail("in-degree above 1");
    if (nodes_[i].parent && in_degree[i] != 1)
      fail("parented node without matching edge");
  }
  // acyclicity along parent pointers
  for (const auto& n : nodes_) {
    std::size_t hops = 0;
    std::optional<NodeId> cursor = n.id;
    while (cursor) {
      cursor = nodes_[*cursor].parent;
      if (++hops > nodes_.size()) fail("cycle in parent chain");
    }
  }
  for (const auto& n : nodes_) {
    if (!n.feature.empty() &&
        static_cast<int>(n.feature.size()) != feature_dim_)
      fail("feature dimension mismatch");
  }
}

}  // namespace l2t::graph
