#include "l2t/policy.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "l2t/errors.hpp"

namespace l2t::policy {

using nlohmann::ordered_json;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double scale_from_pre(double pre) {
  return kMinScale + (kMaxScale - kMinScale) * sigmoid(pre);
}

double scale_grad(double pre) {
  double s = sigmoid(pre);
  return (kMaxScale - kMinScale) * s * (1.0 - s);
}

double act_grad(double pre, Activation a) {
  return a == Activation::Relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0;
}

Eigen::VectorXd act_vec(const Eigen::VectorXd& x, Activation a) {
  if (a == Activation::Identity) return x;
  return x.cwiseMax(0.0);
}

void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double bound) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rng.uniform(-bound, bound);
    }
  }
}

struct SquashSpec {
  double lo, hi;
};

// x = lo + (hi-lo)(tanh(z)+1)/2; log-density of x carries the Jacobian
// log|dx/dz| = log((hi-lo)/2) + log(1-tanh(z)^2).
double squashed_log_density(double x, double mean, double scale,
                            const SquashSpec& spec) {
  double u = 2.0 * (x - spec.lo) / (spec.hi - spec.lo) - 1.0;
  u = std::clamp(u, -1.0 + 1e-12, 1.0 - 1e-12);
  double z = std::atanh(u);
  double w = (z - mean) / scale;
  double base = -0.5 * w * w - std::log(scale) - 0.5 * kLog2Pi;
  double jac = std::log((spec.hi - spec.lo) / 2.0) + std::log1p(-u * u);
  return base - jac;
}

void squashed_grad(double x, double mean, double scale, double scale_pre,
                   const SquashSpec& spec, double* d_mean, double* d_scale_pre) {
  double u = 2.0 * (x - spec.lo) / (spec.hi - spec.lo) - 1.0;
  u = std::clamp(u, -1.0 + 1e-12, 1.0 - 1e-12);
  double z = std::atanh(u);
  double w = z - mean;
  *d_mean = w / (scale * scale);
  double d_scale = w * w / (scale * scale * scale) - 1.0 / scale;
  *d_scale_pre = d_scale * scale_grad(scale_pre);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  double m = logits.maxCoeff();
  double lse = std::log((logits.array() - m).exp().sum()) + m;
  return logits.array() - lse;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

PolicyParams PolicyParams::init(const PolicyConfig& config) {
  if (config.d < 1 || config.h < 1 || config.b_max < 1)
    throw Error(ErrorCode::ShapeError, "invalid policy dimensions");
  PolicyParams p;
  p.d = config.d;
  p.h = config.h;
  p.b_max = config.b_max;
  p.hidden_act = config.hidden_act;
  p.seed = config.seed;
  Rng rng(hash_combine(config.seed, 0x70a1c1u));
  auto bound = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
  auto fill_vector = [&rng](Eigen::VectorXd& v, double b) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-b, b);
  };
  // biases share the fan-in scaling; exact-zero biases leave rectifier
  // pre-activations sitting on the kink whenever a whole layer is inactive
  p.gcn_w.resize(config.d, config.h);
  fill_uniform(p.gcn_w, rng, bound(config.d));
  p.mlp1_w.resize(config.h, config.h);
  fill_uniform(p.mlp1_w, rng, bound(config.h));
  p.mlp1_b.resize(config.h);
  fill_vector(p.mlp1_b, bound(config.h));
  p.mlp2_w.resize(config.h, config.h);
  fill_uniform(p.mlp2_w, rng, bound(config.h));
  p.mlp2_b.resize(config.h);
  fill_vector(p.mlp2_b, bound(config.h));
  p.branch_w.resize(config.h, config.b_max);
  fill_uniform(p.branch_w, rng, bound(config.h));
  p.branch_b = Eigen::VectorXd::Zero(config.b_max);
  p.cont_w.resize(config.h, 4);
  fill_uniform(p.cont_w, rng, bound(config.h));
  p.cont_b = Eigen::VectorXd::Zero(4);
  Eigen::MatrixXd dep(config.h, 1);
  fill_uniform(dep, rng, bound(config.h));
  p.dep_w = dep.col(0);
  p.dep_b = 0.0;
  Eigen::MatrixXd critic(config.h, 1);
  fill_uniform(critic, rng, bound(config.h));
  p.critic_w = critic.col(0);
  p.critic_b = 0.0;
  return p;
}

void PolicyParams::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ShapeError, what);
  };
  check(d > 0 && h > 0 && b_max > 0, "non-positive dimensions");
  check(gcn_w.rows() == d && gcn_w.cols() == h, "gcn_w shape");
  check(mlp1_w.rows() == h && mlp1_w.cols() == h, "mlp1_w shape");
  check(mlp1_b.size() == h, "mlp1_b shape");
  check(mlp2_w.rows() == h && mlp2_w.cols() == h, "mlp2_w shape");
  check(mlp2_b.size() == h, "mlp2_b shape");
  check(branch_w.rows() == h && branch_w.cols() == b_max, "branch_w shape");
  check(branch_b.size() == b_max, "branch_b shape");
  check(cont_w.rows() == h && cont_w.cols() == 4, "cont_w shape");
  check(cont_b.size() == 4, "cont_b shape");
  check(dep_w.size() == h, "dep_w shape");
  check(critic_w.size() == h, "critic_w shape");
  bool finite = gcn_w.allFinite() && mlp1_w.allFinite() &&
                mlp1_b.allFinite() && mlp2_w.allFinite() &&
                mlp2_b.allFinite() && branch_w.allFinite() &&
                branch_b.allFinite() && cont_w.allFinite() &&
                cont_b.allFinite() && dep_w.allFinite() &&
                critic_w.allFinite() && std::isfinite(dep_b) &&
                std::isfinite(critic_b);
  if (!finite) throw Error(ErrorCode::NumericalError, "non-finite parameters");
}

namespace {

void append_matrix(std::vector<double>& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
}

void append_vector(std::vector<double>& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
}

}  // namespace

Eigen::VectorXd PolicyParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  append_matrix(flat, gcn_w);
  append_matrix(flat, mlp1_w);
  append_vector(flat, mlp1_b);
  append_matrix(flat, mlp2_w);
  append_vector(flat, mlp2_b);
  append_matrix(flat, branch_w);
  append_vector(flat, branch_b);
  append_matrix(flat, cont_w);
  append_vector(flat, cont_b);
  append_vector(flat, dep_w);
  flat.push_back(dep_b);
  append_vector(flat, critic_w);
  flat.push_back(critic_b);
  return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

void PolicyParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count())
    throw Error(ErrorCode::ShapeError, "flat parameter size mismatch");
  Eigen::Index k = 0;
  auto take_matrix = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = flat(k++);
    }
  };
  auto take_vector = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = flat(k++);
  };
  take_matrix(gcn_w);
  take_matrix(mlp1_w);
  take_vector(mlp1_b);
  take_matrix(mlp2_w);
  take_vector(mlp2_b);
  take_matrix(branch_w);
  take_vector(branch_b);
  take_matrix(cont_w);
  take_vector(cont_b);
  take_vector(dep_w);
  dep_b = flat(k++);
  take_vector(critic_w);
  critic_b = flat(k++);
}

long long PolicyParams::parameter_count() const {
  return static_cast<long long>(d) * h + h * h + h + h * h + h +
         h * b_max + b_max + h * 4 + 4 + h + 1 + h + 1;
}

std::string PolicyParams::to_json() const {
  validate();
  ordered_json j;
  j["version"] = 1;
  j["d"] = d;
  j["h"] = h;
  j["b_max"] = b_max;
  j["seed"] = seed;
  j["activation"] = hidden_act == Activation::Relu ? "relu" : "identity";
  ordered_json tensors;
  auto put_matrix = [&tensors](const char* name, const Eigen::MatrixXd& m) {
    std::vector<double> flat;
    append_matrix(flat, m);
    tensors[name] = flat;
  };
  auto put_vector = [&tensors](const char* name, const Eigen::VectorXd& v) {
    std::vector<double> flat;
    append_vector(flat, v);
    tensors[name] = flat;
  };
  put_matrix("gcn_w", gcn_w);
  put_matrix("mlp1_w", mlp1_w);
  put_vector("mlp1_b", mlp1_b);
  put_matrix("mlp2_w", mlp2_w);
  put_vector("mlp2_b", mlp2_b);
  put_matrix("branch_w", branch_w);
  put_vector("branch_b", branch_b);
  put_matrix("cont_w", cont_w);
  put_vector("cont_b", cont_b);
  put_vector("dep_w", dep_w);
  tensors["dep_b"] = std::vector<double>{dep_b};
  put_vector("critic_w", critic_w);
  tensors["critic_b"] = std::vector<double>{critic_b};
  j["tensors"] = std::move(tensors);
  return j.dump();
}

PolicyParams PolicyParams::from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  if (j.at("version").get<int>() != 1)
    throw Error(ErrorCode::InvalidArgument, "unsupported checkpoint version");
  PolicyParams p;
  p.d = j.at("d").get<int>();
  p.h = j.at("h").get<int>();
  p.b_max = j.at("b_max").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.hidden_act = j.at("activation").get<std::string>() == "identity"
                     ? Activation::Identity
                     : Activation::Relu;
  const auto& tensors = j.at("tensors");
  auto get_matrix = [&tensors](const char* name, Eigen::Index rows,
                               Eigen::Index cols) {
    auto flat = tensors.at(name).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
      throw Error(ErrorCode::ShapeError,
                  std::string("tensor size mismatch: ") + name);
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = flat[k++];
    }
    return m;
  };
  auto get_vector = [&tensors](const char* name, Eigen::Index size) {
    auto flat = tensors.at(name).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != size)
      throw Error(ErrorCode::ShapeError,
                  std::string("tensor size mismatch: ") + name);
    return Eigen::Map<Eigen::VectorXd>(flat.data(), size).eval();
  };
  p.gcn_w = get_matrix("gcn_w", p.d, p.h);
  p.mlp1_w = get_matrix("mlp1_w", p.h, p.h);
  p.mlp1_b = get_vector("mlp1_b", p.h);
  p.mlp2_w = get_matrix("mlp2_w", p.h, p.h);
  p.mlp2_b = get_vector("mlp2_b", p.h);
  p.branch_w = get_matrix("branch_w", p.h, p.b_max);
  p.branch_b = get_vector("branch_b", p.b_max);
  p.cont_w = get_matrix("cont_w", p.h, 4);
  p.cont_b = get_vector("cont_b", 4);
  p.dep_w = get_vector("dep_w", p.h);
  p.dep_b = get_vector("dep_b", 1)(0);
  p.critic_w = get_vector("critic_w", p.h);
  p.critic_b = get_vector("critic_b", 1)(0);
  p.validate();
  return p;
}

PolicyGradients PolicyGradients::zeros(const PolicyParams& params) {
  PolicyGradients g;
  g.gcn_w = Eigen::MatrixXd::Zero(params.d, params.h);
  g.mlp1_w = Eigen::MatrixXd::Zero(params.h, params.h);
  g.mlp1_b = Eigen::VectorXd::Zero(params.h);
  g.mlp2_w = Eigen::MatrixXd::Zero(params.h, params.h);
  g.mlp2_b = Eigen::VectorXd::Zero(params.h);
  g.branch_w = Eigen::MatrixXd::Zero(params.h, params.b_max);
  g.branch_b = Eigen::VectorXd::Zero(params.b_max);
  g.cont_w = Eigen::MatrixXd::Zero(params.h, 4);
  g.cont_b = Eigen::VectorXd::Zero(4);
  g.dep_w = Eigen::VectorXd::Zero(params.h);
  g.critic_w = Eigen::VectorXd::Zero(params.h);
  return g;
}

Eigen::VectorXd PolicyGradients::flatten() const {
  std::vector<double> flat;
  append_matrix(flat, gcn_w);
  append_matrix(flat, mlp1_w);
  append_vector(flat, mlp1_b);
  append_matrix(flat, mlp2_w);
  append_vector(flat, mlp2_b);
  append_matrix(flat, branch_w);
  append_vector(flat, branch_b);
  append_matrix(flat, cont_w);
  append_vector(flat, cont_b);
  append_vector(flat, dep_w);
  flat.push_back(dep_b);
  append_vector(flat, critic_w);
  flat.push_back(critic_b);
  return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

double PolicyGradients::global_norm() const { return flatten().norm(); }

void PolicyGradients::scale(double factor) {
  gcn_w *= factor;
  mlp1_w *= factor;
  mlp1_b *= factor;
  mlp2_w *= factor;
  mlp2_b *= factor;
  branch_w *= factor;
  branch_b *= factor;
  cont_w *= factor;
  cont_b *= factor;
  dep_w *= factor;
  dep_b *= factor;
  critic_w *= factor;
  critic_b *= factor;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

GraphInput graph_input(const graph::ReasoningGraph& g) {
  GraphInput input;
  input.features.resize(static_cast<Eigen::Index>(g.size()), g.feature_dim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& feature = g.node(static_cast<graph::NodeId>(i)).feature;
    for (int j = 0; j < g.feature_dim(); ++j) {
      input.features(static_cast<Eigen::Index>(i), j) = feature[j];
    }
  }
  for (const auto& [u, w] : g.edges()) {
    input.edges.emplace_back(static_cast<int>(u), static_cast<int>(w));
  }
  return input;
}

Eigen::VectorXd aggregate_row(const GraphInput& input, int v) {
  const Eigen::Index n = input.features.rows();
  if (v < 0 || v >= n)
    throw Error(ErrorCode::ShapeError, "node index out of range");
  std::vector<int> degree(n, 1);  // self-loop
  for (const auto& [a, b] : input.edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw Error(ErrorCode::ShapeError, "edge endpoint out of range");
    ++degree[a];
    ++degree[b];
  }
  // neighbors in ascending node order, so summation order is reproducible
  std::vector<int> neighbors;
  for (const auto& [a, b] : input.edges) {
    if (a == v) neighbors.push_back(b);
    if (b == v) neighbors.push_back(a);
  }
  std::sort(neighbors.begin(), neighbors.end());
  Eigen::VectorXd m =
      input.features.row(v) / static_cast<double>(degree[v]);
  for (int u : neighbors) {
    double coef = 1.0 / std::sqrt(static_cast<double>(degree[v]) *
                                  static_cast<double>(degree[u]));
    m += coef * input.features.row(u).transpose();
  }
  return m;
}

Eigen::MatrixXd gcn_layer(const PolicyParams& params, const GraphInput& input) {
  if (input.features.cols() != params.d)
    throw Error(ErrorCode::ShapeError, "feature dimension mismatch");
  if (!input.features.allFinite())
    throw Error(ErrorCode::NumericalError, "non-finite features");
  const Eigen::Index n = input.features.rows();
  Eigen::MatrixXd out(n, params.h);
  for (Eigen::Index v = 0; v < n; ++v) {
    Eigen::VectorXd m = aggregate_row(input, static_cast<int>(v));
    out.row(v) =
        act_vec(params.gcn_w.transpose() * m, params.hidden_act).transpose();
  }
  return out;
}

RowForward row_forward(const PolicyParams& params, const Eigen::VectorXd& m) {
  RowForward f;
  f.m = m;
  f.p = params.gcn_w.transpose() * m;
  f.q = act_vec(f.p, params.hidden_act);
  f.r = params.mlp1_w.transpose() * f.q + params.mlp1_b;
  f.s = act_vec(f.r, params.hidden_act);
  f.t = params.mlp2_w.transpose() * f.s + params.mlp2_b;
  f.u = act_vec(f.t, params.hidden_act);
  return f;
}

Eigen::MatrixXd gcn_forward(const PolicyParams& params,
                            const GraphInput& input) {
  if (input.features.cols() != params.d)
    throw Error(ErrorCode::ShapeError, "feature dimension mismatch");
  if (!input.features.allFinite())
    throw Error(ErrorCode::NumericalError, "non-finite features");
  const Eigen::Index n = input.features.rows();
  Eigen::MatrixXd out(n, params.h);
  for (Eigen::Index v = 0; v < n; ++v) {
    out.row(v) =
        row_forward(params, aggregate_row(input, static_cast<int>(v))).u;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Heads and distributions
// ---------------------------------------------------------------------------

ActionDistribution actor_dist(const PolicyParams& params,
                              const Eigen::VectorXd& rep) {
  if (rep.size() != params.h)
    throw Error(ErrorCode::ShapeError, "representation size mismatch");
  if (!rep.allFinite())
    throw Error(ErrorCode::NumericalError, "non-finite representation");
  ActionDistribution dist;
  dist.branch_logits = params.branch_w.transpose() * rep + params.branch_b;
  Eigen::VectorXd cont = params.cont_w.transpose() * rep + params.cont_b;
  dist.temp_mean = cont(0);
  dist.temp_scale_pre = cont(1);
  dist.temp_scale = scale_from_pre(cont(1));
  dist.topp_mean = cont(2);
  dist.topp_scale_pre = cont(3);
  dist.topp_scale = scale_from_pre(cont(3));
  dist.dep_logit = params.dep_w.dot(rep) + params.dep_b;
  if (!dist.branch_logits.allFinite() || !std::isfinite(dist.dep_logit))
    throw Error(ErrorCode::NumericalError, "non-finite action distribution");
  return dist;
}

double critic_value(const PolicyParams& params, const Eigen::VectorXd& rep) {
  if (rep.size() != params.h)
    throw Error(ErrorCode::ShapeError, "representation size mismatch");
  return params.critic_w.dot(rep) + params.critic_b;
}

std::pair<ModeVector, double> sample_action(const ActionDistribution& dist,
                                            Rng& rng) {
  ModeVector mode;
  Eigen::VectorXd probs = softmax(dist.branch_logits);
  double pick = rng.uniform();
  double cdf = 0.0;
  mode.branch_count = static_cast<int>(probs.size());
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cdf += probs(i);
    if (pick < cdf) {
      mode.branch_count = static_cast<int>(i) + 1;
      break;
    }
  }
  auto draw = [&rng](double mean, double scale, const SquashSpec& spec) {
    double z = mean + scale * rng.normal();
    double u = std::tanh(z);
    return spec.lo + (spec.hi - spec.lo) * (u + 1.0) / 2.0;
  };
  mode.temperature = draw(dist.temp_mean, dist.temp_scale, {kTempLo, kTempHi});
  mode.top_p = draw(dist.topp_mean, dist.topp_scale, {kTopPLo, kTopPHi});
  mode.use_dependency = rng.uniform() < sigmoid(dist.dep_logit);
  return {mode, log_prob(dist, mode)};
}

double log_prob(const ActionDistribution& dist, const ModeVector& action) {
  if (action.branch_count < 1 ||
      action.branch_count > static_cast<int>(dist.branch_logits.size()))
    throw Error(ErrorCode::InvalidArgument, "branch count out of range");
  Eigen::VectorXd lsm = log_softmax(dist.branch_logits);
  double lp = lsm(action.branch_count - 1);
  lp += squashed_log_density(action.temperature, dist.temp_mean,
                             dist.temp_scale, {kTempLo, kTempHi});
  lp += squashed_log_density(action.top_p, dist.topp_mean, dist.topp_scale,
                             {kTopPLo, kTopPHi});
  // log sigmoid(l) = -softplus(-l); log(1 - sigmoid(l)) = -softplus(l)
  lp += action.use_dependency ? -softplus(-dist.dep_logit)
                              : -softplus(dist.dep_logit);
  return lp;
}

double entropy(const ActionDistribution& dist) {
  Eigen::VectorXd lsm = log_softmax(dist.branch_logits);
  Eigen::VectorXd probs = lsm.array().exp();
  double h = -(probs.array() * lsm.array()).sum();
  h += 0.5 * (kLog2Pi + 1.0) + std::log(dist.temp_scale);
  h += 0.5 * (kLog2Pi + 1.0) + std::log(dist.topp_scale);
  double p = sigmoid(dist.dep_logit);
  h += p * softplus(-dist.dep_logit) + (1.0 - p) * softplus(dist.dep_logit);
  return h;
}

DistGrad log_prob_grad(const ActionDistribution& dist,
                       const ModeVector& action) {
  DistGrad g;
  Eigen::VectorXd probs = softmax(dist.branch_logits);
  g.branch_logits = -probs;
  g.branch_logits(action.branch_count - 1) += 1.0;
  squashed_grad(action.temperature, dist.temp_mean, dist.temp_scale,
                dist.temp_scale_pre, {kTempLo, kTempHi}, &g.temp_mean,
                &g.temp_scale_pre);
  squashed_grad(action.top_p, dist.topp_mean, dist.topp_scale,
                dist.topp_scale_pre, {kTopPLo, kTopPHi}, &g.topp_mean,
                &g.topp_scale_pre);
  g.dep_logit =
      (action.use_dependency ? 1.0 : 0.0) - sigmoid(dist.dep_logit);
  return g;
}

DistGrad entropy_grad(const ActionDistribution& dist) {
  DistGrad g;
  Eigen::VectorXd lsm = log_softmax(dist.branch_logits);
  Eigen::VectorXd probs = lsm.array().exp();
  double h = -(probs.array() * lsm.array()).sum();
  g.branch_logits = -probs.array() * (lsm.array() + h);
  // dH/dscale = 1/scale, chained through the bounded activation
  g.temp_mean = 0.0;
  g.temp_scale_pre = scale_grad(dist.temp_scale_pre) / dist.temp_scale;
  g.topp_mean = 0.0;
  g.topp_scale_pre = scale_grad(dist.topp_scale_pre) / dist.topp_scale;
  double p = sigmoid(dist.dep_logit);
  g.dep_logit = -dist.dep_logit * p * (1.0 - p);
  return g;
}

void accumulate_row_gradients(const PolicyParams& params, const RowForward& row,
                              const DistGrad& dist_grad, double value_grad,
                              PolicyGradients& grads) {
  Eigen::Vector4d g4(dist_grad.temp_mean, dist_grad.temp_scale_pre,
                     dist_grad.topp_mean, dist_grad.topp_scale_pre);
  // head parameter gradients
  grads.branch_w += row.u * dist_grad.branch_logits.transpose();
  grads.branch_b += dist_grad.branch_logits;
  grads.cont_w += row.u * g4.transpose();
  grads.cont_b += g4;
  grads.dep_w += row.u * dist_grad.dep_logit;
  grads.dep_b += dist_grad.dep_logit;
  grads.critic_w += row.u * value_grad;
  grads.critic_b += value_grad;
  // backprop into the trunk
  Eigen::VectorXd du = params.branch_w * dist_grad.branch_logits +
                       params.cont_w * g4 + params.dep_w * dist_grad.dep_logit +
                       params.critic_w * value_grad;
  Eigen::VectorXd dt(params.h);
  for (int i = 0; i < params.h; ++i)
    dt(i) = du(i) * act_grad(row.t(i), params.hidden_act);
  grads.mlp2_w += row.s * dt.transpose();
  grads.mlp2_b += dt;
  Eigen::VectorXd ds = params.mlp2_w * dt;
  Eigen::VectorXd dr(params.h);
  for (int i = 0; i < params.h; ++i)
    dr(i) = ds(i) * act_grad(row.r(i), params.hidden_act);
  grads.mlp1_w += row.q * dr.transpose();
  grads.mlp1_b += dr;
  Eigen::VectorXd dq = params.mlp1_w * dr;
  Eigen::VectorXd dp(params.h);
  for (int i = 0; i < params.h; ++i)
    dp(i) = dq(i) * act_grad(row.p(i), params.hidden_act);
  grads.gcn_w += row.m * dp.transpose();
}

}  // namespace l2t::policy
