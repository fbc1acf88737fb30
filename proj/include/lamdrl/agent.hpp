#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lamdrl/config.hpp"
#include "lamdrl/env.hpp"
#include "lamdrl/error.hpp"
#include "lamdrl/nn.hpp"
#include "lamdrl/rng.hpp"
#include "lamdrl/strategy.hpp"

namespace lamdrl {

using nn::Matrix;
using nn::Vector;

/// Additive attention scoring users against the strategy embedding.
struct AttentionLayer {
  nn::Param wx;  // d_h x d_f
  nn::Param we;  // d_h x d_str
  nn::Param v;   // d_h x 1

  AttentionLayer() = default;
  AttentionLayer(int d_f, int d_str, int d_h)
      : wx("attention.wx", d_h, d_f), we("attention.we", d_h, d_str), v("attention.v", d_h, 1) {}

  void init(Rng& rng) {
    wx.init_uniform(rng, 1.0 / std::sqrt(static_cast<double>(wx.value.cols())));
    we.init_uniform(rng, 1.0 / std::sqrt(static_cast<double>(we.value.cols())));
    v.init_uniform(rng, 1.0 / std::sqrt(static_cast<double>(v.value.rows())));
  }

  int hidden() const { return static_cast<int>(wx.value.rows()); }
  nn::ParamRefs params() { return {&wx, &we, &v}; }
};

struct AttentionOutput {
  Vector context;  // d_f
  Vector weights;  // N_u, on the simplex
  Vector scores;   // N_u
};

/// Max-subtracted softmax.
inline Vector softmax(const Vector& scores) {
  Vector w = (scores.array() - scores.maxCoeff()).exp().matrix();
  return w / w.sum();
}

/// Scores v^T tanh(W_x x_u + W_e e), softmax over users (max-subtracted),
/// context = weighted sum of the raw feature rows.
inline AttentionOutput attention(const Matrix& features, const Vector& e_sigma,
                                 const AttentionLayer& layer) {
  // Scalar loops: identical users must get bit-identical scores, which blocked
  // products do not guarantee across columns.
  const Vector bias = layer.we.value * e_sigma;
  const auto& wx = layer.wx.value;
  const auto& v = layer.v.value;
  const Eigen::Index n = features.rows(), df = features.cols(), dh = wx.rows();
  AttentionOutput out;
  out.scores.resize(n);
  for (Eigen::Index u = 0; u < n; ++u) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < dh; ++k) {
      double h = bias(k);
      for (Eigen::Index j = 0; j < df; ++j) h += wx(k, j) * features(u, j);
      s += v(k, 0) * std::tanh(h);
    }
    out.scores(u) = s;
  }
  out.weights = softmax(out.scores);
  out.context = features.transpose() * out.weights;
  return out;
}

/// Replay minibatch; sample b owns feature columns [b*N, (b+1)*N).
struct Batch {
  int num_users = 0;
  Matrix x, g, a, x2, g2;  // d_f x NB, 3 x B, 2N x B, ...
  Vector r, not_done;
  std::vector<int> labels;  // -1 for unguided

  Eigen::Index size() const { return g.cols(); }
};

/// Strategy embedding + attention, producing z = [c, g, e_sigma] per sample.
struct Encoder {
  AttentionLayer attn;
  StrategyEmbeddingTable embedding;
  bool use_embedding = true;

  struct Cache {
    Matrix x, e, t, w;  // w: N x B
    std::vector<int> labels;
  };

  Encoder() = default;
  Encoder(int d_f, int d_str, int d_h, bool guided)
      : attn(d_f, d_str, d_h), embedding(d_str), use_embedding(guided) {}

  void init(Rng& rng) {
    attn.init(rng);
    embedding.init(rng);
  }

  int d_f() const { return static_cast<int>(attn.wx.value.cols()); }
  int d_str() const { return embedding.dim(); }
  int output_dim() const { return d_f() + kGlobalDim + d_str(); }

  Matrix embeddings(const std::vector<int>& labels) const {
    Matrix e = Matrix::Zero(d_str(), static_cast<Eigen::Index>(labels.size()));
    if (!use_embedding) return e;
    for (std::size_t b = 0; b < labels.size(); ++b)
      if (labels[b] >= 0) e.col(static_cast<Eigen::Index>(b)) = embedding.table.value.col(labels[b]);
    return e;
  }

  Matrix forward(const Matrix& x, const Matrix& g, const std::vector<int>& labels, int num_users,
                 Cache* cache = nullptr) const {
    const Eigen::Index batch = g.cols();
    const Eigen::Index n = num_users;
    const Matrix e = embeddings(labels);
    const Matrix we_e = attn.we.value * e;  // d_h x B
    Matrix h = attn.wx.value * x;           // d_h x NB
    for (Eigen::Index b = 0; b < batch; ++b) h.middleCols(b * n, n).colwise() += we_e.col(b);
    const Matrix t = h.array().tanh().matrix();
    const Matrix scores = attn.v.value.transpose() * t;  // 1 x NB
    Matrix w(n, batch);
    Matrix z(output_dim(), batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Vector s = softmax(scores.middleCols(b * n, n).transpose());
      w.col(b) = s;
      z.col(b).head(d_f()) = x.middleCols(b * n, n) * s;
    }
    z.middleRows(d_f(), kGlobalDim) = g;
    z.bottomRows(d_str()) = e;
    if (cache) {
      cache->x = x;
      cache->e = e;
      cache->t = t;
      cache->w = std::move(w);
      cache->labels = labels;
    }
    return z;
  }

  /// Accumulates attention and embedding gradients for d loss / d z.
  void backward(const Cache& c, const Matrix& dz) {
    const Eigen::Index batch = dz.cols();
    const Eigen::Index n = c.w.rows();
    const Matrix dctx = dz.topRows(d_f());
    Matrix da(1, n * batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const Vector dw = c.x.middleCols(b * n, n).transpose() * dctx.col(b);
      const Vector w = c.w.col(b);
      da.middleCols(b * n, n) = (w.array() * (dw.array() - w.dot(dw))).matrix().transpose();
    }
    attn.v.grad.noalias() += c.t * da.transpose();
    const Matrix dh = (attn.v.value * da).cwiseProduct((1.0 - c.t.array().square()).matrix());
    attn.wx.grad.noalias() += dh * c.x.transpose();
    Matrix dh_sum(dh.rows(), batch);
    for (Eigen::Index b = 0; b < batch; ++b) dh_sum.col(b) = dh.middleCols(b * n, n).rowwise().sum();
    attn.we.grad.noalias() += dh_sum * c.e.transpose();
    if (!use_embedding) return;
    const Matrix de = attn.we.value.transpose() * dh_sum + dz.bottomRows(d_str());
    for (Eigen::Index b = 0; b < batch; ++b) {
      const int label = c.labels[static_cast<std::size_t>(b)];
      if (label >= 0) embedding.table.grad.col(label) += de.col(b);
    }
  }

  nn::ParamRefs params() {
    nn::ParamRefs ps = attn.params();
    if (use_embedding) ps.push_back(&embedding.table);
    return ps;
  }
};

/// Ring buffer of transitions. The strategy label is stored rather than its
/// embedding so sampled transitions always see the current table.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int num_users)
      : capacity_(capacity), num_users_(num_users) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
  }

  void push(const StateVector& s, std::span<const double> action, double reward,
            const StateVector& next, std::optional<StrategyLabel> label, bool done) {
    Entry e;
    e.x = s.features.transpose();
    e.g = s.global;
    e.a = Eigen::Map<const Vector>(action.data(), static_cast<Eigen::Index>(action.size()));
    e.r = reward;
    e.x2 = next.features.transpose();
    e.g2 = next.global;
    e.label = label ? static_cast<int>(*label) : -1;
    e.done = done;
    if (entries_.size() < capacity_) {
      entries_.push_back(std::move(e));
    } else {
      entries_[cursor_] = std::move(e);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }

  /// Indices drawn uniformly without replacement (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    const std::size_t n = entries_.size();
    if (batch > n) throw DomainError("batch larger than replay contents");
    std::vector<std::size_t> picked;
    picked.reserve(batch);
    for (std::size_t j = n - batch; j < n; ++j) {
      const std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
      if (std::find(picked.begin(), picked.end(), t) == picked.end())
        picked.push_back(t);
      else
        picked.push_back(j);
    }
    return picked;
  }

  Batch gather(const std::vector<std::size_t>& idx) const {
    Batch b;
    const auto B = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index n = num_users_;
    b.num_users = num_users_;
    b.x.resize(kFeatureDim, n * B);
    b.x2.resize(kFeatureDim, n * B);
    b.g.resize(kGlobalDim, B);
    b.g2.resize(kGlobalDim, B);
    b.a.resize(2 * n, B);
    b.r.resize(B);
    b.not_done.resize(B);
    b.labels.resize(idx.size());
    for (Eigen::Index i = 0; i < B; ++i) {
      const Entry& e = entries_[idx[static_cast<std::size_t>(i)]];
      b.x.middleCols(i * n, n) = e.x;
      b.x2.middleCols(i * n, n) = e.x2;
      b.g.col(i) = e.g;
      b.g2.col(i) = e.g2;
      b.a.col(i) = e.a;
      b.r(i) = e.r;
      b.not_done(i) = e.done ? 0.0 : 1.0;
      b.labels[static_cast<std::size_t>(i)] = e.label;
    }
    return b;
  }

  Batch sample(std::size_t batch, Rng& rng) const { return gather(sample_indices(batch, rng)); }

 private:
  struct Entry {
    Matrix x, x2;
    Vector g, g2, a;
    double r = 0.0;
    int label = -1;
    bool done = false;
  };
  std::size_t capacity_;
  int num_users_;
  std::size_t cursor_ = 0;
  std::vector<Entry> entries_;
};

struct TrainStats {
  bool updated = false;
  bool actor_updated = false;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

/// TD3 learner over the strategy-conditioned encoder. With guided = false
/// the embedding is a constant zero vector (the unguided ablation).
class Td3Agent {
 public:
  Td3Agent(int num_users, AgentConfig cfg, bool guided, std::uint64_t seed, double discount = 0.99)
      : cfg_(cfg),
        num_users_(num_users),
        guided_(guided),
        discount_(discount),
        enc_(kFeatureDim, cfg.d_str, cfg.d_h, guided),
        actor_("actor", enc_.output_dim(), cfg.hidden, 2 * num_users),
        q1_("q1", enc_.output_dim() + 2 * num_users, cfg.hidden, 1),
        q2_("q2", enc_.output_dim() + 2 * num_users, cfg.hidden, 1) {
    cfg_.validate();
    Rng rng(derive_seed(seed, "agent-init"));
    enc_.init(rng);
    actor_.init(rng, 3e-3);
    q1_.init(rng, 3e-3);
    q2_.init(rng, 3e-3);
    enc_t_ = enc_;
    actor_t_ = actor_;
    q1_t_ = q1_;
    q2_t_ = q2_;
    opt_critic_.lr = cfg.lr_critic;
    opt_actor_.lr = cfg.lr_actor;
    opt_encoder_.lr = cfg.lr_actor;
  }

  Vector embed(std::optional<StrategyLabel> label) const {
    if (!guided_ || !label) return Vector::Zero(cfg_.d_str);
    return enc_.embedding.embed(*label);
  }

  /// Deterministic policy output in [0,1]^{2N}, plus clamped Gaussian noise.
  std::vector<double> act(const StateVector& s, std::optional<StrategyLabel> label,
                          double noise_std = 0.0, Rng* noise = nullptr) const {
    const Matrix x = s.features.transpose();
    const Matrix g = s.global;
    const Matrix z = enc_.forward(x, g, {label_index(label)}, num_users_);
    const Matrix a = nn::sigmoid(actor_.forward(z));
    std::vector<double> out(static_cast<std::size_t>(a.rows()));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double v = a(i, 0);
      if (noise_std > 0.0 && noise) v += noise->normal(0.0, noise_std);
      out[static_cast<std::size_t>(i)] = std::clamp(v, 0.0, 1.0);
    }
    return out;
  }

  AttentionOutput attend(const StateVector& s, std::optional<StrategyLabel> label) const {
    return attention(s.features, embed(label), enc_.attn);
  }

  /// Share of each feature in the attention scores: attention-weighted
  /// |gradient x input| of every user's score, normalized to sum to one.
  Vector feature_attribution(const StateVector& s, std::optional<StrategyLabel> label) const {
    const auto att = attend(s, label);
    const Matrix x = s.features.transpose();
    Matrix h = enc_.attn.wx.value * x;
    h.colwise() += enc_.attn.we.value * embed(label);
    const Matrix dt = (1.0 - h.array().tanh().square()).matrix();
    Vector share = Vector::Zero(x.rows());
    for (Eigen::Index u = 0; u < x.cols(); ++u) {
      const Vector sens = enc_.attn.wx.value.transpose() * dt.col(u).cwiseProduct(enc_.attn.v.value.col(0));
      share += att.weights(u) * sens.cwiseProduct(x.col(u)).cwiseAbs();
    }
    const double total = share.sum();
    if (total > 0.0) share /= total;
    return share;
  }

  /// TD targets r + discount * (1 - done) * min of the twin target critics,
  /// using target-policy smoothing noise.
  Vector targets(const Batch& b, Rng& rng) const {
    const Matrix z2 = enc_t_.forward(b.x2, b.g2, b.labels, b.num_users);
    Matrix a2 = nn::sigmoid(actor_t_.forward(z2));
    for (Eigen::Index i = 0; i < a2.size(); ++i) {
      const double eps = std::clamp(rng.normal(0.0, cfg_.policy_noise), -cfg_.noise_clip, cfg_.noise_clip);
      a2.data()[i] = std::clamp(a2.data()[i] + eps, 0.0, 1.0);
    }
    Matrix in(z2.rows() + a2.rows(), z2.cols());
    in << z2, a2;
    const Matrix t1 = q1_t_.forward(in), t2 = q2_t_.forward(in);
    Vector y(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i)
      y(i) = b.r(i) + discount_ * b.not_done(i) * std::min(t1(0, i), t2(0, i));
    return y;
  }

  /// Mean over the batch of (Q1 - y)^2 + (Q2 - y)^2. With backprop, gradients
  /// accumulate into both critics and the encoder.
  double critic_loss(const Batch& b, const Vector& y, bool backprop) {
    Encoder::Cache ec;
    const Matrix z = enc_.forward(b.x, b.g, b.labels, b.num_users, backprop ? &ec : nullptr);
    Matrix in(z.rows() + b.a.rows(), z.cols());
    in << z, b.a;
    nn::Mlp::Cache c1, c2;
    const Matrix o1 = q1_.forward(in, &c1), o2 = q2_.forward(in, &c2);
    const double inv_b = 1.0 / static_cast<double>(b.size());
    const Matrix r1 = o1 - y.transpose(), r2 = o2 - y.transpose();
    const double loss = (r1.squaredNorm() + r2.squaredNorm()) * inv_b;
    if (backprop) {
      const Matrix d_in = q1_.backward(c1, 2.0 * inv_b * r1) + q2_.backward(c2, 2.0 * inv_b * r2);
      enc_.backward(ec, d_in.topRows(z.rows()));
    }
    return loss;
  }

  /// -mean Q1(z, pi(z)). The critic's copy of z is `critic_z` when given
  /// (held fixed), so encoder gradients flow only through the policy path;
  /// without it the encoder sees both paths.
  double actor_loss(const Batch& b, const Matrix* critic_z, bool backprop) {
    Encoder::Cache ec;
    const Matrix z = enc_.forward(b.x, b.g, b.labels, b.num_users, backprop ? &ec : nullptr);
    nn::Mlp::Cache ca, c1;
    const Matrix pi = nn::sigmoid(actor_.forward(z, &ca));
    Matrix in(z.rows() + pi.rows(), z.cols());
    in << (critic_z ? *critic_z : z), pi;
    const Matrix q = q1_.forward(in, &c1);
    const double inv_b = 1.0 / static_cast<double>(b.size());
    const double loss = -q.sum() * inv_b;
    if (backprop) {
      const Matrix d_in = q1_.backward(c1, Matrix::Constant(1, z.cols(), -inv_b));
      const Matrix d_pre = d_in.bottomRows(pi.rows()).cwiseProduct(pi.cwiseProduct((1.0 - pi.array()).matrix()));
      Matrix dz = actor_.backward(ca, d_pre);
      if (!critic_z) dz += d_in.topRows(z.rows());
      enc_.backward(ec, dz);
    }
    return loss;
  }

  TrainStats train_step(const ReplayBuffer& buffer, Rng& rng) {
    TrainStats st;
    if (buffer.size() < static_cast<std::size_t>(cfg_.batch_size)) return st;
    const Batch b = buffer.sample(static_cast<std::size_t>(cfg_.batch_size), rng);
    const Vector y = targets(b, rng);

    nn::zero_grad(critic_params());
    nn::zero_grad(enc_.params());
    st.critic_loss = critic_loss(b, y, true);
    opt_critic_.step(critic_params());
    opt_encoder_.step(enc_.params());
    st.updated = true;

    if (++critic_updates_ % cfg_.policy_delay == 0) {
      nn::zero_grad(actor_.params());
      nn::zero_grad(enc_.params());
      const Matrix z_fixed = enc_.forward(b.x, b.g, b.labels, b.num_users);
      st.actor_loss = actor_loss(b, &z_fixed, true);
      nn::zero_grad(critic_params());  // critic grads from the actor pass are discarded
      opt_actor_.step(actor_.params());
      opt_encoder_.step(enc_.params());
      soft_update_targets(cfg_.tau);
      st.actor_updated = true;
    }
    return st;
  }

  void soft_update_targets(double tau) {
    nn::soft_update(target_params(), online_params(), tau);
  }

  nn::ParamRefs critic_params() {
    nn::ParamRefs ps = q1_.params();
    for (auto* p : q2_.params()) ps.push_back(p);
    return ps;
  }

  /// Every online parameter, in checkpoint order.
  nn::ParamRefs online_params() {
    nn::ParamRefs ps;
    for (auto* p : enc_.attn.params()) ps.push_back(p);
    ps.push_back(&enc_.embedding.table);
    for (auto* p : actor_.params()) ps.push_back(p);
    for (auto* p : critic_params()) ps.push_back(p);
    return ps;
  }

  nn::ParamRefs target_params() {
    nn::ParamRefs ps;
    for (auto* p : enc_t_.attn.params()) ps.push_back(p);
    ps.push_back(&enc_t_.embedding.table);
    for (auto* p : actor_t_.params()) ps.push_back(p);
    for (auto* p : q1_t_.params()) ps.push_back(p);
    for (auto* p : q2_t_.params()) ps.push_back(p);
    return ps;
  }

  Encoder& encoder() { return enc_; }
  const Encoder& encoder() const { return enc_; }
  nn::Mlp& actor() { return actor_; }
  nn::Mlp& critic1() { return q1_; }
  nn::Mlp& critic2() { return q2_; }
  const AgentConfig& config() const { return cfg_; }
  bool guided() const { return guided_; }
  int num_users() const { return num_users_; }
  long critic_updates() const { return critic_updates_; }

 private:
  int label_index(std::optional<StrategyLabel> label) const {
    return guided_ && label ? static_cast<int>(*label) : -1;
  }

  AgentConfig cfg_;
  int num_users_;
  bool guided_;
  double discount_;
  Encoder enc_, enc_t_;
  nn::Mlp actor_, actor_t_;
  nn::Mlp q1_, q2_, q1_t_, q2_t_;
  nn::Adam opt_critic_, opt_actor_, opt_encoder_;
  long critic_updates_ = 0;
};

}  // namespace lamdrl
