#include "l2t/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "l2t/errors.hpp"
#include "l2t/graph.hpp"

namespace l2t::trainer {

void TrajectoryBuffer::validate() const {
  if (!transitions.empty() && !transitions.back().done)
    throw Error(ErrorCode::InvalidArgument,
                "buffer does not end with a terminal transition");
  for (const auto& t : transitions) {
    if (!std::isfinite(t.log_prob_old) || !std::isfinite(t.reward) ||
        !std::isfinite(t.value_old))
      throw Error(ErrorCode::NumericalError, "non-finite transition field");
  }
}

std::vector<double> td_errors(const std::vector<double>& rewards,
                              const std::vector<double>& values,
                              const std::vector<bool>& dones, double gamma,
                              double final_value) {
  if (rewards.size() != values.size() || rewards.size() != dones.size())
    throw Error(ErrorCode::ShapeError, "td_errors length mismatch");
  const std::size_t n = rewards.size();
  std::vector<double> deltas(n);
  for (std::size_t t = 0; t < n; ++t) {
    double next_value = 0.0;
    if (!dones[t]) next_value = t + 1 < n ? values[t + 1] : final_value;
    deltas[t] = rewards[t] + gamma * next_value - values[t];
  }
  return deltas;
}

std::vector<double> gae(const std::vector<double>& deltas, double gamma,
                        double lam, const std::vector<bool>& dones) {
  if (deltas.size() != dones.size())
    throw Error(ErrorCode::ShapeError, "gae length mismatch");
  std::vector<double> adv(deltas.size());
  double running = 0.0;
  for (std::size_t i = deltas.size(); i-- > 0;) {
    if (dones[i]) running = 0.0;
    running = deltas[i] + gamma * lam * running;
    adv[i] = running;
  }
  return adv;
}

PreparedBatch prepare(const TrajectoryBuffer& buffer, const TrainConfig& cfg) {
  if (buffer.empty()) throw Error(ErrorCode::EmptyBuffer, "no transitions");
  buffer.validate();
  PreparedBatch batch;
  // snapshots are shared within a step; parse each document once
  std::unordered_map<const std::string*, policy::GraphInput> inputs;
  for (const auto& t : buffer.transitions) {
    if (!t.graph_snapshot)
      throw Error(ErrorCode::InvalidArgument, "transition without a snapshot");
    const std::string* key = t.graph_snapshot.get();
    auto it = inputs.find(key);
    if (it == inputs.end()) {
      auto g = graph::ReasoningGraph::from_json(*t.graph_snapshot);
      it = inputs.emplace(key, policy::graph_input(g)).first;
    }
    PreparedTransition pt;
    pt.m = policy::aggregate_row(it->second, static_cast<int>(t.node));
    pt.action = t.action;
    pt.log_prob_old = t.log_prob_old;
    pt.value_old = t.value_old;
    pt.reward = t.reward;
    pt.done = t.done;
    batch.items.push_back(std::move(pt));
  }
  std::vector<double> rewards, values;
  std::vector<bool> dones;
  for (const auto& t : batch.items) {
    rewards.push_back(t.reward);
    values.push_back(t.value_old);
    dones.push_back(t.done);
  }
  std::vector<double> deltas = td_errors(rewards, values, dones, cfg.gamma);
  batch.advantages = gae(deltas, cfg.gamma, cfg.lam, dones);
  batch.returns.resize(batch.items.size());
  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    batch.returns[i] = batch.advantages[i] + batch.items[i].value_old;
  }
  return batch;
}

namespace {

LossComponents ppo_pass(const policy::PolicyParams& params,
                        const PreparedBatch& batch,
                        const std::vector<int>& indices,
                        const TrainConfig& cfg,
                        policy::PolicyGradients* grads) {
  if (indices.empty())
    throw Error(ErrorCode::EmptyBuffer, "empty minibatch");
  const double n = static_cast<double>(indices.size());
  LossComponents comps;
  for (int idx : indices) {
    const PreparedTransition& t = batch.items.at(idx);
    policy::RowForward row = policy::row_forward(params, t.m);
    policy::ActionDistribution dist = policy::actor_dist(params, row.u);
    double lp = policy::log_prob(dist, t.action);
    double ratio = std::exp(lp - t.log_prob_old);
    double adv = batch.advantages.at(idx);
    double unclipped = ratio * adv;
    double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
    bool clip_active = clipped < unclipped;
    double surr = clip_active ? clipped : unclipped;
    double value = policy::critic_value(params, row.u);
    double verr = value - batch.returns.at(idx);
    double ent = policy::entropy(dist);

    comps.surrogate += surr / n;
    comps.value_loss += verr * verr / n;
    comps.entropy += ent / n;
    comps.mean_ratio += ratio / n;
    comps.clip_fraction += (clip_active ? 1.0 : 0.0) / n;

    if (grads) {
      // d loss / d log-prob: the clipped branch is constant in theta
      double d_lp = clip_active ? 0.0 : -(ratio * adv) / n;
      double d_ent = -cfg.entropy_coef / n;
      double d_value = cfg.value_coef * 2.0 * verr / n;
      policy::DistGrad g_lp = policy::log_prob_grad(dist, t.action);
      policy::DistGrad g_ent = policy::entropy_grad(dist);
      policy::DistGrad combined;
      combined.branch_logits =
          d_lp * g_lp.branch_logits + d_ent * g_ent.branch_logits;
      combined.temp_mean = d_lp * g_lp.temp_mean + d_ent * g_ent.temp_mean;
      combined.temp_scale_pre =
          d_lp * g_lp.temp_scale_pre + d_ent * g_ent.temp_scale_pre;
      combined.topp_mean = d_lp * g_lp.topp_mean + d_ent * g_ent.topp_mean;
      combined.topp_scale_pre =
          d_lp * g_lp.topp_scale_pre + d_ent * g_ent.topp_scale_pre;
      combined.dep_logit = d_lp * g_lp.dep_logit + d_ent * g_ent.dep_logit;
      policy::accumulate_row_gradients(params, row, combined, d_value, *grads);
    }
  }
  comps.loss = -comps.surrogate + cfg.value_coef * comps.value_loss -
               cfg.entropy_coef * comps.entropy;
  if (!std::isfinite(comps.loss))
    throw Error(ErrorCode::NumericalError,
                "non-finite loss (surrogate=" + std::to_string(comps.surrogate) +
                    ", value=" + std::to_string(comps.value_loss) +
                    ", entropy=" + std::to_string(comps.entropy) + ")");
  return comps;
}

void apply_step(policy::PolicyParams& params,
                const policy::PolicyGradients& grads, double lr) {
  params.gcn_w -= lr * grads.gcn_w;
  params.mlp1_w -= lr * grads.mlp1_w;
  params.mlp1_b -= lr * grads.mlp1_b;
  params.mlp2_w -= lr * grads.mlp2_w;
  params.mlp2_b -= lr * grads.mlp2_b;
  params.branch_w -= lr * grads.branch_w;
  params.branch_b -= lr * grads.branch_b;
  params.cont_w -= lr * grads.cont_w;
  params.cont_b -= lr * grads.cont_b;
  params.dep_w -= lr * grads.dep_w;
  params.dep_b -= lr * grads.dep_b;
  params.critic_w -= lr * grads.critic_w;
  params.critic_b -= lr * grads.critic_b;
}

}  // namespace

LossComponents ppo_loss(const policy::PolicyParams& params,
                        const PreparedBatch& batch,
                        const std::vector<int>& indices,
                        const TrainConfig& cfg) {
  return ppo_pass(params, batch, indices, cfg, nullptr);
}

LossComponents ppo_loss_backward(const policy::PolicyParams& params,
                                 const PreparedBatch& batch,
                                 const std::vector<int>& indices,
                                 const TrainConfig& cfg,
                                 policy::PolicyGradients* grads) {
  if (!grads) throw Error(ErrorCode::InvalidArgument, "grads required");
  return ppo_pass(params, batch, indices, cfg, grads);
}

std::string TrainStats::to_json_line() const {
  nlohmann::ordered_json j;
  j["update_idx"] = update_idx;
  j["mean_reward"] = mean_reward;
  j["clip_fraction"] = clip_fraction;
  j["value_loss"] = value_loss;
  j["entropy"] = entropy;
  j["grad_norm"] = grad_norm;
  return j.dump();
}

TrainStats update(policy::PolicyParams& params, const TrajectoryBuffer& buffer,
                  const TrainConfig& cfg, int update_idx) {
  if (buffer.empty()) throw Error(ErrorCode::EmptyBuffer, "no transitions");
  PreparedBatch batch = prepare(buffer, cfg);
  const int n = static_cast<int>(batch.items.size());
  if (cfg.normalize_adv && n >= 2) {
    double mean =
        std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) /
        n;
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    double std = std::sqrt(var / n);
    for (double& a : batch.advantages) a = (a - mean) / (std + 1e-8);
  }

  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  const int mb = cfg.minibatch <= 0 ? n : std::min(cfg.minibatch, n);
  Rng rng(hash_combine(cfg.seed, 0x7261696eULL));

  TrainStats stats;
  stats.update_idx = update_idx;
  double reward_sum = 0.0;
  for (const auto& t : batch.items) reward_sum += t.reward;
  stats.mean_reward = reward_sum / n;

  int passes = 0;
  bool first = true;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (mb < n) {
      for (std::size_t i = indices.size(); i > 1; --i) {
        std::swap(indices[i - 1], indices[rng.uniform_int(i)]);
      }
    }
    for (int start = 0; start < n; start += mb) {
      std::vector<int> chunk(indices.begin() + start,
                             indices.begin() + std::min(start + mb, n));
      policy::PolicyGradients grads = policy::PolicyGradients::zeros(params);
      LossComponents comps = ppo_pass(params, batch, chunk, cfg, &grads);
      if (first) {
        stats.first_pass_ratio = comps.mean_ratio;
        first = false;
      }
      double norm = grads.global_norm();
      if (norm > cfg.max_grad_norm && norm > 0.0) {
        grads.scale(cfg.max_grad_norm / norm);
      }
      double post_norm = std::min(norm, cfg.max_grad_norm);
      apply_step(params, grads, cfg.lr);
      stats.mean_ratio += comps.mean_ratio;
      stats.clip_fraction += comps.clip_fraction;
      stats.value_loss += comps.value_loss;
      stats.entropy += comps.entropy;
      stats.grad_norm = std::max(stats.grad_norm, post_norm);
      ++passes;
    }
  }
  if (passes > 0) {
    stats.mean_ratio /= passes;
    stats.clip_fraction /= passes;
    stats.value_loss /= passes;
    stats.entropy /= passes;
  }
  params.validate();
  return stats;
}

}  // namespace l2t::trainer
