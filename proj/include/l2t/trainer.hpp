#ifndef L2T_TRAINER_HPP_
#define L2T_TRAINER_HPP_

#include <memory>
#include <string>
#include <vector>

#include "l2t/policy.hpp"

namespace l2t::trainer {

// One per-node decision step. The serialized pre-expansion graph lets the
// forward pass be recomputed exactly during updates.
struct Transition {
  std::shared_ptr<const std::string> graph_snapshot;
  graph::NodeId node = 0;
  policy::ModeVector action;
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value_old = 0.0;
  bool done = false;
  int step = 0;
};

struct TrajectoryBuffer {
  std::vector<Transition> transitions;

  bool empty() const { return transitions.empty(); }
  std::size_t size() const { return transitions.size(); }
  void append(const TrajectoryBuffer& other) {
    transitions.insert(transitions.end(), other.transitions.begin(),
                       other.transitions.end());
  }
  // episodes are contiguous and end with done = true
  void validate() const;
};

struct TrainConfig {
  double lr = 5e-3;
  int epochs = 20;
  double clip_eps = 0.2;
  double max_grad_norm = 0.5;
  double gamma = 0.99;
  double lam = 0.95;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int minibatch = 0;  // 0 = full buffer
  bool normalize_adv = true;
  std::uint64_t seed = 0;
};

// delta_t = r_t + gamma * V(s_{t+1}) - V(s_t), with V(s_{t+1}) = 0 where
// done. final_value bootstraps the last element when the sequence was
// truncated rather than terminated; engine buffers always terminate, so the
// zero default applies there.
std::vector<double> td_errors(const std::vector<double>& rewards,
                              const std::vector<double>& values,
                              const std::vector<bool>& dones, double gamma,
                              double final_value = 0.0);

// A_t = delta_t + (gamma*lam) * delta_{t+1} + ..., resetting across episode
// boundaries; reverse recursion equal to the explicit sum.
std::vector<double> gae(const std::vector<double>& deltas, double gamma,
                        double lam, const std::vector<bool>& dones);

struct PreparedTransition {
  Eigen::VectorXd m;  // aggregated input row of the focus node
  policy::ModeVector action;
  double log_prob_old = 0.0;
  double value_old = 0.0;
  double reward = 0.0;
  bool done = false;
};

struct PreparedBatch {
  std::vector<PreparedTransition> items;
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + value_old
};

PreparedBatch prepare(const TrajectoryBuffer& buffer, const TrainConfig& cfg);

struct LossComponents {
  double loss = 0.0;
  double surrogate = 0.0;   // clipped surrogate, to be maximized
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
};

// loss = -surrogate + value_coef * value_loss - entropy_coef * entropy,
// means over the given indices. Forward-only; the finite-difference oracle
// in the tests differentiates this directly.
LossComponents ppo_loss(const policy::PolicyParams& params,
                        const PreparedBatch& batch,
                        const std::vector<int>& indices,
                        const TrainConfig& cfg);

// Same loss plus exact analytic gradients, averaged over the minibatch.
LossComponents ppo_loss_backward(const policy::PolicyParams& params,
                                 const PreparedBatch& batch,
                                 const std::vector<int>& indices,
                                 const TrainConfig& cfg,
                                 policy::PolicyGradients* grads);

struct TrainStats {
  int update_idx = 0;
  double mean_reward = 0.0;
  double mean_ratio = 0.0;
  double first_pass_ratio = 0.0;  // ratio mean before any step (theta == theta_old)
  double clip_fraction = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // maximum post-clip global norm

  std::string to_json_line() const;  // one JSONL training-log record
};

// cfg.epochs passes of minibatch gradient descent with global-norm clipping.
TrainStats update(policy::PolicyParams& params, const TrajectoryBuffer& buffer,
                  const TrainConfig& cfg, int update_idx = 0);

}  // namespace l2t::trainer

#endif  // L2T_TRAINER_HPP_
