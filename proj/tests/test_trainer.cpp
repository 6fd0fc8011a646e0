#include <doctest.h>

#include <cmath>
#include <numeric>

#include "l2t/errors.hpp"
#include "l2t/graph.hpp"
#include "l2t/trainer.hpp"

using namespace l2t;
using namespace l2t::trainer;

namespace {

policy::PolicyParams small_params(std::uint64_t seed,
                                  policy::Activation act = policy::Activation::Relu) {
  policy::PolicyConfig cfg;
  cfg.d = 4;
  cfg.h = 6;
  cfg.b_max = 3;
  cfg.seed = seed;
  cfg.hidden_act = act;
  return policy::PolicyParams::init(cfg);
}

// Builds a buffer the way the engine does: a small tree per episode, features
// filled, one decision per pending node, log-probs and values from the
// current parameters.
TrajectoryBuffer make_buffer(const policy::PolicyParams& params,
                             std::uint64_t seed, int episodes,
                             int steps_per_episode) {
  Rng rng(seed);
  TrajectoryBuffer buffer;
  for (int ep = 0; ep < episodes; ++ep) {
    auto g = graph::ReasoningGraph::new_graph("task " + std::to_string(ep),
                                              params.d);
    graph::NodeId focus = 0;
    for (int step = 0; step < steps_per_episode; ++step) {
      std::vector<double> feature(params.d);
      for (auto& x : feature) x = rng.uniform(-1.0, 1.0);
      g.set_feature(focus, feature);
      auto snapshot = std::make_shared<const std::string>(g.to_json());
      auto input = policy::graph_input(g);
      auto row = policy::row_forward(
          params, policy::aggregate_row(input, static_cast<int>(focus)));
      auto dist = policy::actor_dist(params, row.u);
      auto [mode, logp] = policy::sample_action(dist, rng);
      Transition t;
      t.graph_snapshot = snapshot;
      t.node = focus;
      t.action = mode;
      t.log_prob_old = logp;
      t.value_old = policy::critic_value(params, row.u);
      t.reward = static_cast<double>(rng.uniform_int(11));
      t.done = step + 1 == steps_per_episode;
      t.step = step;
      buffer.transitions.push_back(std::move(t));
      // grow the tree so later snapshots differ
      g.annotate_label(focus, graph::Label::Continue);
      g.apply_label(focus, graph::Label::Continue);
      auto kids = g.add_children(focus, {"t" + std::to_string(step)});
      focus = kids[0];
    }
  }
  return buffer;
}

std::vector<int> all_indices(const PreparedBatch& batch) {
  std::vector<int> idx(batch.items.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

TEST_CASE("td errors implement the exact one-step formula") {
  auto d1 = td_errors({1.0}, {0.5}, {true}, 0.9);
  REQUIRE(d1.size() == 1);
  CHECK(d1[0] == doctest::Approx(0.5).epsilon(1e-15));

  // telescoping: zero rewards, constant value, no terminal, gamma = 1
  std::vector<double> rewards(6, 0.0), values(6, 3.25);
  std::vector<bool> dones(6, false);
  auto deltas = td_errors(rewards, values, dones, 1.0, /*final_value=*/3.25);
  for (double d : deltas) CHECK(d == doctest::Approx(0.0).epsilon(1e-15));

  // random episode against a per-index recomputation
  Rng rng(50);
  std::vector<double> r(10), v(10);
  std::vector<bool> done(10, false);
  done[4] = true;
  done[9] = true;
  for (int i = 0; i < 10; ++i) {
    r[i] = rng.uniform(-5, 5);
    v[i] = rng.uniform(-5, 5);
  }
  auto fast = td_errors(r, v, done, 0.95);
  for (int t = 0; t < 10; ++t) {
    double next = (!done[t] && t + 1 < 10) ? v[t + 1] : 0.0;
    CHECK(std::abs(fast[t] - (r[t] + 0.95 * next - v[t])) <= 1e-12);
  }

  CHECK_THROWS_AS(td_errors({1.0}, {1.0, 2.0}, {true}, 0.9), Error);
}

TEST_CASE("gae reduces to td errors at lambda zero") {
  Rng rng(51);
  std::vector<double> deltas(12);
  std::vector<bool> dones(12, false);
  dones[11] = true;
  for (auto& d : deltas) d = rng.uniform(-2, 2);
  auto adv = gae(deltas, 0.99, 0.0, dones);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    CHECK(adv[i] == doctest::Approx(deltas[i]).epsilon(1e-15));
  }
}

TEST_CASE("gae with gamma = lambda = 1 is a plain suffix sum") {
  std::vector<double> deltas{1.0, 2.0, 3.0, 4.0};
  std::vector<bool> dones(4, false);
  auto adv = gae(deltas, 1.0, 1.0, dones);
  CHECK(adv[0] == doctest::Approx(10.0));
  CHECK(adv[1] == doctest::Approx(9.0));
  CHECK(adv[2] == doctest::Approx(7.0));
  CHECK(adv[3] == doctest::Approx(4.0));
}

TEST_CASE("gae recursion equals the explicit O(T^2) sum with resets") {
  Rng rng(52);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 3 + static_cast<int>(rng.uniform_int(20));
    std::vector<double> deltas(n);
    std::vector<bool> dones(n, false);
    for (int i = 0; i < n; ++i) {
      deltas[i] = rng.uniform(-3, 3);
      if (rng.uniform() < 0.2) dones[i] = true;
    }
    dones[n - 1] = true;
    double gamma = 0.97, lam = 0.9;
    auto fast = gae(deltas, gamma, lam, dones);
    for (int t = 0; t < n; ++t) {
      double sum = 0.0, w = 1.0;
      for (int s = t; s < n; ++s) {
        sum += w * deltas[s];
        if (dones[s]) break;
        w *= gamma * lam;
      }
      CHECK(std::abs(fast[t] - sum) <= 1e-10);
    }
  }
}

TEST_CASE("new policy equal to old gives unit ratios and surrogate mean(A)") {
  auto params = small_params(9);
  auto buffer = make_buffer(params, 7, 2, 4);
  TrainConfig cfg;
  cfg.normalize_adv = false;
  auto batch = prepare(buffer, cfg);
  auto comps = ppo_loss(params, batch, all_indices(batch), cfg);
  CHECK(comps.mean_ratio == doctest::Approx(1.0).epsilon(1e-12));
  double mean_adv =
      std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) /
      batch.advantages.size();
  CHECK(comps.surrogate == doctest::Approx(mean_adv).epsilon(1e-10));
  CHECK(comps.clip_fraction == doctest::Approx(0.0));
}

TEST_CASE("every analytic gradient matches central finite differences") {
  for (int instance = 0; instance < 6; ++instance) {
    auto params = small_params(100 + instance);
    auto buffer = make_buffer(params, 200 + instance, 2, 3);
    TrainConfig cfg;
    cfg.normalize_adv = false;
    auto batch = prepare(buffer, cfg);
    auto indices = all_indices(batch);
    auto grads = policy::PolicyGradients::zeros(params);
    ppo_loss_backward(params, batch, indices, cfg, &grads);
    Eigen::VectorXd flat_grad = grads.flatten();
    Eigen::VectorXd flat = params.flatten();
    const double eps = 1e-5;
    for (Eigen::Index k = 0; k < flat.size(); ++k) {
      auto plus = params;
      Eigen::VectorXd fp = flat;
      fp(k) += eps;
      plus.unflatten(fp);
      auto minus = params;
      Eigen::VectorXd fm = flat;
      fm(k) -= eps;
      minus.unflatten(fm);
      double fd = (ppo_loss(plus, batch, indices, cfg).loss -
                   ppo_loss(minus, batch, indices, cfg).loss) /
                  (2 * eps);
      double analytic = flat_grad(k);
      double rel = std::abs(analytic - fd) /
                   std::max({1.0, std::abs(analytic), std::abs(fd)});
      if (rel > 1e-4) {
        CAPTURE(k);
        CAPTURE(analytic);
        CAPTURE(fd);
      }
      CHECK(rel <= 1e-4);
    }
  }
}

TEST_CASE("the loss matches an independent straight-line recomputation") {
  auto params = small_params(21);
  auto buffer = make_buffer(params, 22, 2, 3);
  TrainConfig cfg;
  cfg.normalize_adv = false;
  auto batch = prepare(buffer, cfg);
  auto indices = all_indices(batch);
  auto comps = ppo_loss(params, batch, indices, cfg);

  // naive recomputation from the prepared inputs, sharing no code with the
  // implementation beyond basic math
  auto relu = [](double x) { return x > 0.0 ? x : 0.0; };
  double surr = 0, vloss = 0, ent = 0;
  const double n = static_cast<double>(indices.size());
  for (int idx : indices) {
    const auto& t = batch.items[idx];
    // trunk
    Eigen::VectorXd p = params.gcn_w.transpose() * t.m;
    Eigen::VectorXd q = p.unaryExpr(relu);
    Eigen::VectorXd r = params.mlp1_w.transpose() * q + params.mlp1_b;
    Eigen::VectorXd s = r.unaryExpr(relu);
    Eigen::VectorXd tt = params.mlp2_w.transpose() * s + params.mlp2_b;
    Eigen::VectorXd u = tt.unaryExpr(relu);
    // heads
    Eigen::VectorXd logits = params.branch_w.transpose() * u + params.branch_b;
    Eigen::VectorXd cont = params.cont_w.transpose() * u + params.cont_b;
    double dep_logit = params.dep_w.dot(u) + params.dep_b;
    double value = params.critic_w.dot(u) + params.critic_b;
    auto scale_of = [](double pre) {
      return policy::kMinScale + (policy::kMaxScale - policy::kMinScale) /
                                     (1.0 + std::exp(-pre));
    };
    double ts = scale_of(cont(1)), ps = scale_of(cont(3));
    // log-prob, component by component
    double denom = 0;
    for (int i = 0; i < logits.size(); ++i) denom += std::exp(logits(i));
    double lp = std::log(std::exp(logits(t.action.branch_count - 1)) / denom);
    auto squashed = [](double x, double mean, double scale, double lo,
                       double hi) {
      double uu = 2.0 * (x - lo) / (hi - lo) - 1.0;
      double z = 0.5 * std::log((1.0 + uu) / (1.0 - uu));
      double gauss = std::exp(-0.5 * std::pow((z - mean) / scale, 2)) /
                     (scale * std::sqrt(2.0 * M_PI));
      return std::log(gauss) - std::log((hi - lo) / 2.0 * (1.0 - uu * uu));
    };
    lp += squashed(t.action.temperature, cont(0), ts, policy::kTempLo,
                   policy::kTempHi);
    lp += squashed(t.action.top_p, cont(2), ps, policy::kTopPLo,
                   policy::kTopPHi);
    double pd = 1.0 / (1.0 + std::exp(-dep_logit));
    lp += std::log(t.action.use_dependency ? pd : 1.0 - pd);
    double ratio = std::exp(lp - t.log_prob_old);
    double adv = batch.advantages[idx];
    double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    surr += std::min(ratio * adv, clipped * adv) / n;
    double verr = value - batch.returns[idx];
    vloss += verr * verr / n;
    double h = 0;
    for (int i = 0; i < logits.size(); ++i) {
      double pi = std::exp(logits(i)) / denom;
      h -= pi * std::log(pi);
    }
    h += 0.5 * std::log(2.0 * M_PI * std::exp(1.0) * ts * ts);
    h += 0.5 * std::log(2.0 * M_PI * std::exp(1.0) * ps * ps);
    h += -pd * std::log(pd) - (1.0 - pd) * std::log(1.0 - pd);
    ent += h / n;
  }
  double loss = -surr + cfg.value_coef * vloss - cfg.entropy_coef * ent;
  CHECK(std::abs(comps.surrogate - surr) <= 1e-10);
  CHECK(std::abs(comps.value_loss - vloss) <= 1e-10);
  CHECK(std::abs(comps.entropy - ent) <= 1e-10);
  CHECK(std::abs(comps.loss - loss) <= 1e-10);
}

TEST_CASE("clip saturation kills the surrogate gradient for that sample") {
  auto params = small_params(33);
  auto buffer = make_buffer(params, 44, 1, 1);
  // force a huge ratio with positive advantage: r > 1 + eps
  buffer.transitions[0].log_prob_old -= 5.0;
  buffer.transitions[0].reward = 10.0;  // positive advantage
  TrainConfig cfg;
  cfg.normalize_adv = false;
  cfg.entropy_coef = 0.0;
  cfg.value_coef = 0.0;
  auto batch = prepare(buffer, cfg);
  REQUIRE(batch.advantages[0] > 0.0);
  auto grads = policy::PolicyGradients::zeros(params);
  auto comps = ppo_loss_backward(params, batch, all_indices(batch), cfg, &grads);
  CHECK(comps.clip_fraction == doctest::Approx(1.0));
  // actor heads receive no gradient: the clipped branch is constant
  CHECK(grads.branch_w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.cont_w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.dep_w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero advantages with clip inactive leave only entropy gradients") {
  auto params = small_params(34);
  auto buffer = make_buffer(params, 45, 1, 1);
  // reward equal to the stored value makes the one-step advantage zero
  buffer.transitions[0].reward = buffer.transitions[0].value_old;
  TrainConfig cfg;
  cfg.normalize_adv = false;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.013;
  auto batch = prepare(buffer, cfg);
  REQUIRE(std::abs(batch.advantages[0]) <= 1e-12);
  auto grads = policy::PolicyGradients::zeros(params);
  ppo_loss_backward(params, batch, all_indices(batch), cfg, &grads);
  // compare against a pure entropy objective: -coef * H
  auto entropy_only = policy::PolicyGradients::zeros(params);
  auto row = policy::row_forward(
      params, batch.items[0].m);
  auto dist = policy::actor_dist(params, row.u);
  auto egrad = policy::entropy_grad(dist);
  policy::DistGrad combined;
  combined.branch_logits = -cfg.entropy_coef * egrad.branch_logits;
  combined.temp_mean = -cfg.entropy_coef * egrad.temp_mean;
  combined.temp_scale_pre = -cfg.entropy_coef * egrad.temp_scale_pre;
  combined.topp_mean = -cfg.entropy_coef * egrad.topp_mean;
  combined.topp_scale_pre = -cfg.entropy_coef * egrad.topp_scale_pre;
  combined.dep_logit = -cfg.entropy_coef * egrad.dep_logit;
  policy::accumulate_row_gradients(params, row, combined, 0.0, entropy_only);
  CHECK((grads.branch_w - entropy_only.branch_w).cwiseAbs().maxCoeff() <=
        1e-15);
  CHECK((grads.cont_w - entropy_only.cont_w).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((grads.gcn_w - entropy_only.gcn_w).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("critic gradients are independent of the actor heads") {
  auto params = small_params(35);
  auto buffer = make_buffer(params, 46, 1, 2);
  TrainConfig cfg;
  cfg.normalize_adv = false;
  auto batch = prepare(buffer, cfg);
  auto grads = policy::PolicyGradients::zeros(params);
  ppo_loss_backward(params, batch, all_indices(batch), cfg, &grads);
  auto perturbed = params;
  perturbed.branch_w.array() += 0.37;  // actor-only change
  perturbed.dep_b += 1.1;
  auto grads2 = policy::PolicyGradients::zeros(perturbed);
  ppo_loss_backward(perturbed, batch, all_indices(batch), cfg, &grads2);
  // value-loss contribution to the critic head depends only on the trunk
  CHECK((grads.critic_w - grads2.critic_w).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(grads.critic_b - grads2.critic_b) <= 1e-12);
}

TEST_CASE("null update leaves parameters untouched without entropy") {
  auto params = small_params(36);
  auto buffer = make_buffer(params, 47, 2, 2);
  // zero advantages and matched value targets
  for (auto& t : buffer.transitions) {
    t.reward = t.done ? t.value_old : 0.0;
  }
  // ensure chained values telescope: r + gamma*V' - V = 0 needs crafting;
  // simplest exact construction uses one-step episodes
  buffer.transitions.clear();
  auto one_step = make_buffer(params, 48, 3, 1);
  for (auto& t : one_step.transitions) t.reward = t.value_old;
  TrainConfig cfg;
  cfg.normalize_adv = false;
  cfg.entropy_coef = 0.0;
  cfg.epochs = 20;
  auto before = params.flatten();
  auto stats = update(params, one_step, cfg);
  CHECK((params.flatten() - before).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(stats.first_pass_ratio == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("update is deterministic and clips the global gradient norm") {
  auto params_a = small_params(60);
  auto params_b = small_params(60);
  auto buffer = make_buffer(params_a, 61, 3, 3);
  for (auto& t : buffer.transitions) t.reward = 100.0;  // big advantages
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.minibatch = 4;
  auto stats_a = update(params_a, buffer, cfg, 3);
  auto stats_b = update(params_b, buffer, cfg, 3);
  CHECK((params_a.flatten() - params_b.flatten()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(stats_a.grad_norm <= cfg.max_grad_norm + 1e-9);
  CHECK(stats_a.grad_norm == doctest::Approx(stats_b.grad_norm));
  CHECK(stats_a.clip_fraction >= 0.0);
  CHECK(stats_a.clip_fraction <= 1.0);
  // the training-log record carries the advertised fields
  auto line = stats_a.to_json_line();
  CHECK(line.find("\"update_idx\":3") != std::string::npos);
  CHECK(line.find("mean_reward") != std::string::npos);
  CHECK(line.find("clip_fraction") != std::string::npos);
  CHECK(line.find("grad_norm") != std::string::npos);
}

TEST_CASE("argmax action is invariant to positive advantage rescaling") {
  for (std::uint64_t seed : {1ull, 2ull}) {
    auto base = small_params(70 + seed);
    auto buffer = make_buffer(base, 71 + seed, 3, 1);
    for (std::size_t i = 0; i < buffer.transitions.size(); ++i) {
      buffer.transitions[i].reward = i == 0 ? 10.0 : 1.0;
    }
    TrainConfig cfg;
    cfg.normalize_adv = true;
    cfg.epochs = 1;
    auto scaled_buffer = buffer;
    for (auto& t : scaled_buffer.transitions) t.reward *= 17.0;
    // rescaling all rewards rescales all advantages positively
    auto params_base = base;
    auto params_scaled = base;
    update(params_base, buffer, cfg);
    update(params_scaled, scaled_buffer, cfg);
    auto input = policy::graph_input(
        graph::ReasoningGraph::from_json(*buffer.transitions[0].graph_snapshot));
    auto m = policy::aggregate_row(input, 0);
    auto d1 = policy::actor_dist(params_base,
                                 policy::row_forward(params_base, m).u);
    auto d2 = policy::actor_dist(params_scaled,
                                 policy::row_forward(params_scaled, m).u);
    Eigen::Index argmax1, argmax2;
    d1.branch_logits.maxCoeff(&argmax1);
    d2.branch_logits.maxCoeff(&argmax2);
    CHECK(argmax1 == argmax2);
  }
}

TEST_CASE("empty buffers are rejected") {
  auto params = small_params(80);
  TrajectoryBuffer empty;
  TrainConfig cfg;
  CHECK_THROWS_AS(update(params, empty, cfg), Error);
  try {
    update(params, empty, cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyBuffer);
  }
}

TEST_CASE("policy improves on a contextual bandit") {
  // hidden target branch per context; reward 10 on match, else 0
  policy::PolicyConfig pcfg;
  pcfg.d = 8;
  pcfg.h = 16;
  pcfg.b_max = 5;
  pcfg.seed = 1;
  auto params = policy::PolicyParams::init(pcfg);
  const int contexts = 6;
  std::vector<graph::ReasoningGraph> graphs;
  std::vector<int> targets;
  Rng setup(hash_combine(1, 77));
  for (int c = 0; c < contexts; ++c) {
    auto g = graph::ReasoningGraph::new_graph("ctx" + std::to_string(c),
                                              params.d);
    std::vector<double> feature(params.d);
    for (auto& x : feature) x = setup.uniform(-1.0, 1.0);
    g.set_feature(0, feature);
    graphs.push_back(g);
    targets.push_back(1 + static_cast<int>(setup.uniform_int(params.b_max)));
  }
  auto collect = [&](const policy::PolicyParams& p, std::uint64_t seed,
                     int episodes) {
    Rng rng(seed);
    TrajectoryBuffer buffer;
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
      int c = e % contexts;
      auto snapshot = std::make_shared<const std::string>(graphs[c].to_json());
      auto input = policy::graph_input(graphs[c]);
      auto row = policy::row_forward(p, policy::aggregate_row(input, 0));
      auto dist = policy::actor_dist(p, row.u);
      auto [mode, logp] = policy::sample_action(dist, rng);
      double reward = mode.branch_count == targets[c] ? 10.0 : 0.0;
      total += reward;
      Transition t;
      t.graph_snapshot = snapshot;
      t.node = 0;
      t.action = mode;
      t.log_prob_old = logp;
      t.value_old = policy::critic_value(p, row.u);
      t.reward = reward;
      t.done = true;
      buffer.transitions.push_back(std::move(t));
    }
    return std::pair{buffer, total / episodes};
  };
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.minibatch = 32;
  double baseline = collect(params, 999, 600).second;
  for (int round = 0; round < 20; ++round) {
    auto [buffer, avg] = collect(params, 1000 + round + 100, 256);
    cfg.seed = round;
    update(params, buffer, cfg, round);
  }
  double trained = collect(params, 999, 600).second;
  CHECK(trained >= baseline * 1.3);  // clear improvement over the frozen policy
}
