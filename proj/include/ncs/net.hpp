#pragma once

#include "ncs/core.hpp"

#include <Eigen/Core>

#include <cmath>
#include <iosfwd>
#include <stdexcept>

namespace ncs {

// Two affine layers with a rectifier in between: y = W2 relu(W1 x + b1) + b2.
template <typename Scalar>
struct Mlp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix w1;  // hidden x input
  Vector b1;
  Matrix w2;  // output x hidden
  Vector b2;

  Eigen::Index input_dim() const { return w1.cols(); }
  Eigen::Index hidden_dim() const { return w1.rows(); }
  Eigen::Index output_dim() const { return w2.rows(); }
  Eigen::Index parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  bool all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
  }
};

// Gradients share the parameter layout.
template <typename Scalar>
using MlpGradient = Mlp<Scalar>;

using MlpD = Mlp<double>;

template <typename Scalar>
Mlp<Scalar> zeros_like(const Mlp<Scalar>& net) {
  using M = typename Mlp<Scalar>::Matrix;
  using V = typename Mlp<Scalar>::Vector;
  return {M::Zero(net.w1.rows(), net.w1.cols()), V::Zero(net.b1.size()),
          M::Zero(net.w2.rows(), net.w2.cols()), V::Zero(net.b2.size())};
}

// Glorot-uniform weights, zero biases.
template <typename Scalar>
Mlp<Scalar> make_mlp(int input_dim, int hidden_dim, int output_dim, RngStream& rng) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("make_mlp: dimensions must be positive");
  }
  using M = typename Mlp<Scalar>::Matrix;
  using V = typename Mlp<Scalar>::Vector;
  const auto glorot = [&](int fan_out, int fan_in) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    M w(fan_out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * limit);
      }
    }
    return w;
  };
  Mlp<Scalar> net;
  net.w1 = glorot(hidden_dim, input_dim);
  net.b1 = V::Zero(hidden_dim);
  net.w2 = glorot(output_dim, hidden_dim);
  net.b2 = V::Zero(output_dim);
  return net;
}

namespace detail {
template <typename Scalar, typename Derived>
void check_input(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != net.input_dim()) {
    throw std::invalid_argument("mlp: input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(net.input_dim()));
  }
}
}  // namespace detail

// Columns of x are samples; the result has one column per sample.
template <typename Scalar, typename Derived>
typename Mlp<Scalar>::Matrix forward(const Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  detail::check_input(net, x);
  typename Mlp<Scalar>::Matrix hidden = ((net.w1 * x).colwise() + net.b1).cwiseMax(Scalar(0));
  return (net.w2 * hidden).colwise() + net.b2;
}

// Gradient of a scalar loss given dL/dy for every column of x, summed over
// columns.
template <typename Scalar, typename DerivedX, typename DerivedY>
MlpGradient<Scalar> backward(const Mlp<Scalar>& net, const Eigen::MatrixBase<DerivedX>& x,
                             const Eigen::MatrixBase<DerivedY>& upstream) {
  detail::check_input(net, x);
  if (upstream.rows() != net.output_dim() || upstream.cols() != x.cols()) {
    throw std::invalid_argument("mlp: upstream gradient shape mismatch");
  }
  using M = typename Mlp<Scalar>::Matrix;
  const M pre = (net.w1 * x).colwise() + net.b1;
  const M hidden = pre.cwiseMax(Scalar(0));

  MlpGradient<Scalar> g;
  g.w2 = upstream * hidden.transpose();
  g.b2 = upstream.rowwise().sum();
  const M dpre = (net.w2.transpose() * upstream).cwiseProduct(
      (pre.array() > Scalar(0)).template cast<Scalar>().matrix());
  g.w1 = dpre * x.transpose();
  g.b1 = dpre.rowwise().sum();
  return g;
}

template <typename Scalar>
void add_scaled(Mlp<Scalar>& target, const Mlp<Scalar>& delta, Scalar scale) {
  target.w1 += scale * delta.w1;
  target.b1 += scale * delta.b1;
  target.w2 += scale * delta.w2;
  target.b2 += scale * delta.b2;
}

// Parameters in the order w1, b1, w2, b2, matrices column-major.
template <typename Scalar>
typename Mlp<Scalar>::Vector flatten(const Mlp<Scalar>& net) {
  typename Mlp<Scalar>::Vector out(net.parameter_count());
  Eigen::Index offset = 0;
  const auto put = [&](const auto& m) {
    out.segment(offset, m.size()) = Eigen::Map<const typename Mlp<Scalar>::Vector>(m.data(), m.size());
    offset += m.size();
  };
  put(net.w1);
  put(net.b1);
  put(net.w2);
  put(net.b2);
  return out;
}

template <typename Scalar, typename Derived>
void unflatten(Mlp<Scalar>& net, const Eigen::MatrixBase<Derived>& params) {
  if (params.size() != net.parameter_count()) throw std::invalid_argument("unflatten: size mismatch");
  Eigen::Index offset = 0;
  const auto take = [&](auto& m) {
    Eigen::Map<typename Mlp<Scalar>::Vector>(m.data(), m.size()) = params.segment(offset, m.size());
    offset += m.size();
  };
  take(net.w1);
  take(net.b1);
  take(net.w2);
  take(net.b2);
}

template <typename Scalar>
struct AdamState {
  Mlp<Scalar> first;
  Mlp<Scalar> second;
  long step = 0;
  Scalar learning_rate = Scalar(3e-4);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
};

template <typename Scalar>
AdamState<Scalar> make_adam(const Mlp<Scalar>& net, Scalar learning_rate, Scalar beta1 = Scalar(0.9),
                            Scalar beta2 = Scalar(0.999), Scalar epsilon = Scalar(1e-8)) {
  return {zeros_like(net), zeros_like(net), 0, learning_rate, beta1, beta2, epsilon};
}

class NonFiniteGradient : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Bias-corrected adaptive-moment update. Leaves every parameter untouched
// when any gradient entry is non-finite.
template <typename Scalar>
void adam_step(Mlp<Scalar>& net, const MlpGradient<Scalar>& grad, AdamState<Scalar>& opt) {
  if (!grad.all_finite()) throw NonFiniteGradient("adam_step: non-finite gradient");
  ++opt.step;
  const Scalar c1 = Scalar(1) - std::pow(opt.beta1, static_cast<Scalar>(opt.step));
  const Scalar c2 = Scalar(1) - std::pow(opt.beta2, static_cast<Scalar>(opt.step));
  const auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = opt.beta1 * m + (Scalar(1) - opt.beta1) * g;
    v = opt.beta2 * v + (Scalar(1) - opt.beta2) * g.cwiseProduct(g);
    param.array() -= opt.learning_rate * (m.array() / c1) /
                     ((v.array() / c2).sqrt() + opt.epsilon);
  };
  update(net.w1, grad.w1, opt.first.w1, opt.second.w1);
  update(net.b1, grad.b1, opt.first.b1, opt.second.b1);
  update(net.w2, grad.w2, opt.first.w2, opt.second.w2);
  update(net.b2, grad.b2, opt.first.b2, opt.second.b2);
}

// Checkpoint layout: 8-byte magic "NCSMLP01", u32 input/hidden/output dims,
// then w1, b1, w2, b2 as row-major little-endian float64.
void save_mlp(std::ostream& os, const MlpD& net);
MlpD load_mlp(std::istream& is);

}  // namespace ncs
