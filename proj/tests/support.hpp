#pragma once

// Oracles shared by the unit tests and the acceptance binary.

#include "ncs/net.hpp"
#include "ncs/offline.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace ncs::testing {

// Worst relative gap between backward() and central differences of
// L = sum(upstream .* forward(x)) over every parameter of one random net.
inline double gradient_check_error(RngStream& rng, double h = 1e-5) {
  const int in = 1 + rng.uniform_int(8);
  const int hidden = 1 + rng.uniform_int(16);
  const int out = 1 + rng.uniform_int(5);
  const int batch = 1 + rng.uniform_int(4);
  MlpD net = make_mlp<double>(in, hidden, out, rng);
  for (auto& b : net.b1) b = 0.2 * rng.normal();
  for (auto& b : net.b2) b = 0.2 * rng.normal();
  Eigen::MatrixXd x(in, batch), up(out, batch);
  for (auto& v : x.reshaped()) v = rng.normal();
  for (auto& v : up.reshaped()) v = rng.normal();

  const auto loss = [&](const MlpD& n) { return forward(n, x).cwiseProduct(up).sum(); };
  const Eigen::VectorXd analytic = flatten(backward(net, x, up));
  Eigen::VectorXd params = flatten(net);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    MlpD probe = net;
    const double keep = params(i);
    params(i) = keep + h;
    unflatten(probe, params);
    const double plus = loss(probe);
    params(i) = keep - h;
    unflatten(probe, params);
    const double minus = loss(probe);
    params(i) = keep;
    const double numeric = (plus - minus) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic(i) - numeric) / (std::abs(analytic(i)) + 1e-8));
  }
  return worst;
}

// Two states, two actions.
inline TabularMdp tiny_mdp() {
  TabularMdp mdp;
  mdp.num_states = 2;
  mdp.num_actions = 2;
  Eigen::MatrixXd p0(2, 2), p1(2, 2);
  p0 << 0.9, 0.1,  //
      0.2, 0.8;
  p1 << 0.3, 0.7,  //
      0.6, 0.4;
  mdp.transitions = {p0, p1};
  mdp.rewards.resize(2, 2);
  mdp.rewards << 1.0, 0.0,  //
      0.0, 2.0;
  return mdp;
}

// Every (s, a, s') appears in exact proportion to behavior(s, a) * P(s'|s, a),
// so least-squares TD targets match the Bellman operator of the MDP.
// behavior entries and transition probabilities must be multiples of 0.1.
inline FeatureDataset tiny_dataset(const TabularMdp& mdp, const Eigen::MatrixXd& behavior) {
  std::vector<int> s_of, a_of, next_of;
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      for (int n = 0; n < mdp.num_states; ++n) {
        const auto copies = std::lround(100.0 * behavior(s, a) * mdp.transitions[a](s, n));
        for (long c = 0; c < copies; ++c) {
          s_of.push_back(s);
          a_of.push_back(a);
          next_of.push_back(n);
        }
      }
    }
  }
  const auto size = static_cast<Eigen::Index>(s_of.size());
  FeatureDataset d;
  d.num_actions = mdp.num_actions;
  d.x = Eigen::MatrixXd::Zero(mdp.num_states, size);
  d.x_next = Eigen::MatrixXd::Zero(mdp.num_states, size);
  d.actions.resize(size);
  d.rewards.resize(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    d.x(s_of[i], i) = 1.0;
    d.x_next(next_of[i], i) = 1.0;
    d.actions(i) = a_of[i];
    d.rewards(i) = mdp.rewards(s_of[i], a_of[i]);
    d.keys.push_back(static_cast<std::uint64_t>(s_of[i]));
    d.next_keys.push_back(static_cast<std::uint64_t>(next_of[i]));
  }
  return d;
}

inline Eigen::MatrixXd one_hot_states(int n) { return Eigen::MatrixXd::Identity(n, n); }

struct TabularFit {
  OfflineTrainer trainer;
  Eigen::MatrixXd q;  // states x actions
  SupportTable support;
};

// Full-batch training on the tiny dataset until the Q table settles.
inline TabularFit fit_tiny(const FeatureDataset& data, const BehaviorModel* behavior, Scheme scheme,
                           TrainingConfig tc, double gamma, int updates, std::uint64_t seed) {
  RngStream rng(seed, "tiny.init");
  TabularFit fit{make_trainer(static_cast<int>(data.x.rows()), data.num_actions, gamma, tc, rng), {}, {}};
  fit.support = behavior ? compute_support(data, *behavior) : full_support(data);
  std::vector<Eigen::Index> all(static_cast<std::size_t>(data.size()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
  const Batch batch = gather_batch(data, fit.support, all);
  for (int i = 0; i < updates; ++i) {
    if (scheme == Scheme::proposed) {
      offline_update(fit.trainer, batch);
    } else {
      cql_update(fit.trainer, batch);
    }
  }
  fit.q = forward(fit.trainer.qnet, one_hot_states(static_cast<int>(data.x.rows()))).transpose();
  return fit;
}

inline TrainingConfig tiny_training() {
  TrainingConfig tc;
  tc.hidden_dim = 16;
  tc.learning_rate = 3e-3;
  tc.target_sync = 50;
  tc.penalty_weight = 0.0;
  tc.cql_alpha = 0.0;
  return tc;
}

}  // namespace ncs::testing
