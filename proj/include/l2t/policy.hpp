#ifndef L2T_POLICY_HPP_
#define L2T_POLICY_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "l2t/graph.hpp"
#include "l2t/rng.hpp"

namespace l2t::policy {

enum class Activation { Relu, Identity };

// Bounds of the continuous action components.
inline constexpr double kTempLo = 0.1;
inline constexpr double kTempHi = 1.5;
inline constexpr double kTopPLo = 0.1;
inline constexpr double kTopPHi = 1.0;
// Scales are sigmoid-bounded: an unbounded scale would let the entropy bonus
// inflate the base distribution without limit behind the squash.
inline constexpr double kMinScale = 1e-3;
inline constexpr double kMaxScale = 1.5;

struct PolicyConfig {
  int d = 64;      // node feature dimension
  int h = 64;      // hidden width
  int b_max = 5;   // branch-count categories 1..b_max
  Activation hidden_act = Activation::Relu;
  std::uint64_t seed = 0;
};

// One-layer graph convolution, two-layer MLP trunk, then linear heads:
// branch-count logits, (mean, scale) pre-activations for temperature and
// top-p, a dependency logit, and the critic value.
struct PolicyParams {
  int d = 0, h = 0, b_max = 0;
  Activation hidden_act = Activation::Relu;
  std::uint64_t seed = 0;

  Eigen::MatrixXd gcn_w;     // d x h
  Eigen::MatrixXd mlp1_w;    // h x h
  Eigen::VectorXd mlp1_b;    // h
  Eigen::MatrixXd mlp2_w;    // h x h
  Eigen::VectorXd mlp2_b;    // h
  Eigen::MatrixXd branch_w;  // h x b_max
  Eigen::VectorXd branch_b;  // b_max
  Eigen::MatrixXd cont_w;    // h x 4: temp mean, temp scale, topp mean, topp scale
  Eigen::VectorXd cont_b;    // 4
  Eigen::VectorXd dep_w;     // h
  double dep_b = 0.0;
  Eigen::VectorXd critic_w;  // h
  double critic_b = 0.0;

  static PolicyParams init(const PolicyConfig& config);
  void validate() const;  // shape and finiteness checks

  // flattening order is fixed; used by gradient clipping and tests
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
  long long parameter_count() const;

  std::string to_json() const;  // versioned checkpoint document
  static PolicyParams from_json(const std::string& text);
};

// Same shapes as the parameters; accumulated by the backward pass.
struct PolicyGradients {
  Eigen::MatrixXd gcn_w, mlp1_w, mlp2_w, branch_w, cont_w;
  Eigen::VectorXd mlp1_b, mlp2_b, branch_b, cont_b, dep_w, critic_w;
  double dep_b = 0.0, critic_b = 0.0;

  static PolicyGradients zeros(const PolicyParams& params);
  Eigen::VectorXd flatten() const;
  double global_norm() const;
  void scale(double factor);
};

struct GraphInput {
  Eigen::MatrixXd features;  // n x d
  std::vector<std::pair<int, int>> edges;
};

GraphInput graph_input(const graph::ReasoningGraph& g);

// Row v of the symmetrically normalized adjacency (self-loops added, tree
// edges treated as bidirectional) times the feature matrix.
Eigen::VectorXd aggregate_row(const GraphInput& input, int v);

// sigma(A_hat X W): the graph-convolution layer alone.
Eigen::MatrixXd gcn_layer(const PolicyParams& params, const GraphInput& input);

// Full trunk: GCN layer then the two MLP layers; row v is the node
// representation g_[v]. Computed row-wise so a single-row recomputation is
// bitwise identical.
Eigen::MatrixXd gcn_forward(const PolicyParams& params, const GraphInput& input);

// Per-row forward with cached pre-activations for the backward pass.
struct RowForward {
  Eigen::VectorXd m;  // aggregated input, d
  Eigen::VectorXd p, q;  // gcn pre/post activation, h
  Eigen::VectorXd r, s;  // mlp1 pre/post, h
  Eigen::VectorXd t, u;  // mlp2 pre/post, h; u is the representation
};

RowForward row_forward(const PolicyParams& params, const Eigen::VectorXd& m);

struct ModeVector {
  int branch_count = 1;       // 1..b_max
  double temperature = 0.7;   // [kTempLo, kTempHi]
  double top_p = 0.9;         // [kTopPLo, kTopPHi]
  bool use_dependency = false;
};

struct ActionDistribution {
  Eigen::VectorXd branch_logits;  // b_max
  double temp_mean = 0.0, temp_scale = 1.0;  // post-activation scale > 0
  double topp_mean = 0.0, topp_scale = 1.0;
  double dep_logit = 0.0;
  // raw scale pre-activations, kept for the backward chain
  double temp_scale_pre = 0.0, topp_scale_pre = 0.0;
};

ActionDistribution actor_dist(const PolicyParams& params,
                              const Eigen::VectorXd& rep);

double critic_value(const PolicyParams& params, const Eigen::VectorXd& rep);

// Branch from the softmax, continuous components from tanh-squashed
// Gaussians mapped onto their bounds (Jacobian included in the density),
// dependency from the logistic probability. The returned log-probability is
// log_prob() evaluated at the returned sample.
std::pair<ModeVector, double> sample_action(const ActionDistribution& dist,
                                            Rng& rng);

double log_prob(const ActionDistribution& dist, const ModeVector& action);

// Entropy of the underlying sampling distribution: exact categorical and
// Bernoulli terms plus the Gaussian base entropies of the two squashed
// components.
double entropy(const ActionDistribution& dist);

// Gradients with respect to the head outputs (branch logits; the four raw
// continuous outputs; dependency logit).
struct DistGrad {
  Eigen::VectorXd branch_logits;  // b_max
  double temp_mean = 0.0, temp_scale_pre = 0.0;
  double topp_mean = 0.0, topp_scale_pre = 0.0;
  double dep_logit = 0.0;
};

DistGrad log_prob_grad(const ActionDistribution& dist, const ModeVector& action);
DistGrad entropy_grad(const ActionDistribution& dist);

// Accumulates parameter gradients for one focus row: `dist_grad` weights the
// actor-head outputs, `value_grad` weights the critic output.
void accumulate_row_gradients(const PolicyParams& params, const RowForward& row,
                              const DistGrad& dist_grad, double value_grad,
                              PolicyGradients& grads);

}  // namespace l2t::policy

#endif  // L2T_POLICY_HPP_
