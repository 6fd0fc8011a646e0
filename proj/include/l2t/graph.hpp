#ifndef L2T_GRAPH_HPP_
#define L2T_GRAPH_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace l2t::graph {

using NodeId = std::uint32_t;

// The four node actions. Numeric values match the reply digits the
// classifier parses.
enum class Label : int { Stop = 1, Continue = 2, Final = 3, Backtrack = 4 };

struct ThoughtNode {
  NodeId id = 0;
  std::string text;
  std::optional<Label> label;
  std::vector<double> feature;  // length d; zeros until first classification
  std::optional<NodeId> parent;
  int step_created = 1;
  std::optional<int> eval_score;
};

struct AncestorSubgraph {
  // ordered root-ward to focus; the focus node is always last
  std::vector<NodeId> node_ids;
  std::vector<std::pair<NodeId, NodeId>> edge_ids;
  NodeId focus = 0;
};

struct MembershipEffect {
  Label applied = Label::Stop;
  bool moved_to_history = false;
  bool final_marked = false;
  std::optional<NodeId> parent_restored;
};

enum class TerminationKind { Continue, FinalFound, AllStopped };

struct TerminationState {
  TerminationKind kind = TerminationKind::Continue;
  std::optional<NodeId> final_node;
};

// Tree-shaped reasoning graph with a present/history partition over nodes.
// Labels are assigned in two phases: annotate_label records the classifier's
// answer, apply_label performs the membership effect. Single-writer; deep
// snapshots via to_json travel freely between threads.
class ReasoningGraph {
 public:
  // An empty graph; only meaningful as an assignment target.
  ReasoningGraph() = default;

  static ReasoningGraph new_graph(const std::string& task_description,
                                  int feature_dim);

  NodeId root() const { return 0; }
  int step() const { return step_; }
  void advance_step() { ++step_; }
  int feature_dim() const { return feature_dim_; }

  std::size_t size() const { return nodes_.size(); }
  bool contains(NodeId id) const;
  const ThoughtNode& node(NodeId id) const;
  const std::vector<NodeId>& present() const { return present_; }
  const std::vector<NodeId>& history() const { return history_; }
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  bool in_present(NodeId id) const;

  // Nodes with a directed path to v shorter than beta, plus v itself, with
  // the induced edges. Walks the parent chain; the test oracle does a
  // reverse BFS instead.
  AncestorSubgraph ancestor_subgraph(NodeId v, int beta) const;

  // Records the classifier's label without membership changes.
  void annotate_label(NodeId v, Label label);

  MembershipEffect apply_label(NodeId v, Label label);

  // One child per text; parent must carry an applied Continue label and is
  // retired to history afterwards.
  std::vector<NodeId> add_children(NodeId parent,
                                   const std::vector<std::string>& texts);

  // Retires a Continue-labeled node that produced no usable children,
  // relabeling it as a stop.
  void stop_unexpanded(NodeId v);

  TerminationState termination_state() const;

  void set_feature(NodeId v, std::vector<double> feature);
  void set_eval_score(NodeId v, int score);

  // In-place regeneration: new text, label and feature cleared, id kept.
  void replace_text(NodeId v, std::string text);

  std::string to_json() const;
  static ReasoningGraph from_json(const std::string& text);

  // Throws on any violated structural invariant; used heavily in tests.
  void check_invariants() const;

 private:
  void move_to_history(NodeId v);

  std::vector<ThoughtNode> nodes_;  // index == id
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<NodeId> present_;  // insertion-ordered
  std::vector<NodeId> history_;
  std::vector<bool> label_applied_;
  int step_ = 1;
  int feature_dim_ = 0;
};

}  // namespace l2t::graph

#endif  // L2T_GRAPH_HPP_
