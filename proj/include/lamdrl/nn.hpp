#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "lamdrl/rng.hpp"

namespace lamdrl::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Trainable tensor with its gradient accumulator and Adam moments.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        m(Matrix::Zero(rows, cols)),
        v(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  void init_uniform(Rng& rng, double bound) {
    for (Eigen::Index i = 0; i < value.size(); ++i) value.data()[i] = rng.uniform(-bound, bound);
  }
};

using ParamRefs = std::vector<Param*>;

inline void zero_grad(const ParamRefs& ps) {
  for (auto* p : ps) p->zero_grad();
}

/// Target <- tau * online + (1 - tau) * target, element-wise over matching lists.
inline void soft_update(const ParamRefs& target, const ParamRefs& online, double tau) {
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i]->value = tau * online[i]->value + (1.0 - tau) * target[i]->value;
}

inline void copy_values(const ParamRefs& target, const ParamRefs& online) {
  for (std::size_t i = 0; i < target.size(); ++i) target[i]->value = online[i]->value;
}

struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;

  void step(const ParamRefs& ps) {
    ++step_count;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (auto* p : ps) {
      p->m = beta1 * p->m + (1.0 - beta1) * p->grad;
      p->v = beta2 * p->v + (1.0 - beta2) * p->grad.cwiseAbs2();
      p->value.array() -= lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + eps);
    }
  }
};

/// y = W x + b on column-batched input.
struct Linear {
  Param weight;
  Param bias;

  Linear() = default;
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out)
      : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {}

  void init(Rng& rng, double bound) {
    weight.init_uniform(rng, bound);
    bias.init_uniform(rng, bound);
  }

  Matrix forward(const Matrix& x) const {
    Matrix y = weight.value * x;
    y.colwise() += bias.value.col(0);
    return y;
  }

  Matrix backward(const Matrix& x, const Matrix& dy) {
    weight.grad.noalias() += dy * x.transpose();
    bias.grad.col(0) += dy.rowwise().sum();
    return weight.value.transpose() * dy;
  }

  ParamRefs params() { return {&weight, &bias}; }
};

/// Two ReLU hidden layers and a linear head.
struct Mlp {
  Linear l1, l2, l3;

  struct Cache {
    Matrix x, h1, h2;
  };

  Mlp() = default;
  Mlp(const std::string& name, Eigen::Index in, Eigen::Index hidden, Eigen::Index out)
      : l1(name + ".l1", in, hidden), l2(name + ".l2", hidden, hidden), l3(name + ".l3", hidden, out) {}

  void init(Rng& rng, double head_bound) {
    l1.init(rng, 1.0 / std::sqrt(static_cast<double>(l1.weight.value.cols())));
    l2.init(rng, 1.0 / std::sqrt(static_cast<double>(l2.weight.value.cols())));
    l3.init(rng, head_bound);
  }

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const {
    Matrix h1 = l1.forward(x).cwiseMax(0.0);
    Matrix h2 = l2.forward(h1).cwiseMax(0.0);
    Matrix y = l3.forward(h2);
    if (cache) {
      cache->x = x;
      cache->h1 = std::move(h1);
      cache->h2 = std::move(h2);
    }
    return y;
  }

  /// Accumulates parameter gradients; returns d loss / d x.
  Matrix backward(const Cache& c, const Matrix& dy) {
    Matrix dh2 = l3.backward(c.h2, dy);
    dh2 = dh2.cwiseProduct((c.h2.array() > 0.0).cast<double>().matrix());
    Matrix dh1 = l2.backward(c.h1, dh2);
    dh1 = dh1.cwiseProduct((c.h1.array() > 0.0).cast<double>().matrix());
    return l1.backward(c.x, dh1);
  }

  ParamRefs params() {
    ParamRefs out;
    for (auto* l : {&l1, &l2, &l3})
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }
};

inline Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace lamdrl::nn
