#pragma once

#include "ncs/core.hpp"
#include "ncs/env.hpp"
#include "ncs/net.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ncs {

using ActionMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

Action random_act(int num_actions, RngStream& rng);

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(int num_actions) : num_actions_(num_actions) {}
  Action act(const EnvState&, RngStream& rng) const override { return random_act(num_actions_, rng); }

 private:
  int num_actions_;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
double log_sum_exp(const Eigen::VectorXd& values);
double entropy(const Eigen::VectorXd& probs);

struct A2cAgent {
  MlpD actor;   // logits over actions
  MlpD critic;  // scalar state value
  AdamState<double> actor_opt;
  AdamState<double> critic_opt;
  double gamma = 0.5;
  double entropy_weight = 0.01;
};

A2cAgent make_a2c(int input_dim, int num_actions, double gamma, const TrainingConfig& tc,
                  RngStream& rng);

struct A2cLosses {
  double advantage = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;
};

// One bootstrapped actor-critic step on a continuing task. The critic target
// r + gamma V(s') is held fixed when differentiating.
A2cLosses a2c_update(A2cAgent& agent, const Eigen::VectorXd& x, int action, double reward,
                     const Eigen::VectorXd& x_next);

// Samples from the actor's softmax; greedy = true takes the mode instead.
class A2cPolicy final : public Policy {
 public:
  A2cPolicy(MlpD actor, SystemConfig cfg, bool greedy = false)
      : actor_(std::move(actor)), cfg_(std::move(cfg)), greedy_(greedy) {}
  Action act(const EnvState& state, RngStream& rng) const override;
  const MlpD& actor() const { return actor_; }

 private:
  MlpD actor_;
  SystemConfig cfg_;
  bool greedy_;
};

int sample_categorical(const Eigen::VectorXd& probs, RngStream& rng);

struct A2cTrainResult {
  A2cAgent agent;
  long steps = 0;
  bool converged = false;
  std::vector<double> window_rewards;
};

// Online training in a fresh environment until the mean reward of consecutive
// windows changes by less than 1%, or the step budget runs out.
A2cTrainResult train_a2c(const SystemConfig& cfg, const TrainingConfig& tc, std::uint64_t seed);

// argmax over allowed entries; ties go to the lowest index.
int greedy_action(const Eigen::VectorXd& q, const ActionMask& allowed);

using MaskFunction = std::function<ActionMask(const EnvState&)>;

class GreedyQPolicy final : public Policy {
 public:
  GreedyQPolicy(MlpD qnet, SystemConfig cfg, MaskFunction mask = {})
      : qnet_(std::move(qnet)), cfg_(std::move(cfg)), mask_(std::move(mask)) {}
  Action act(const EnvState& state, RngStream& rng) const override;

 private:
  MlpD qnet_;
  SystemConfig cfg_;
  MaskFunction mask_;
};

GreedyQPolicy greedy_from_q(MlpD qnet, const SystemConfig& cfg, MaskFunction mask = {});

// Agent checkpoint: 8-byte magic "NCSAGT01", u32-length type tag, u32 net
// count, then each net in the plain net checkpoint layout.
void save_agent(std::ostream& os, const std::string& type, const std::vector<MlpD>& nets);
std::pair<std::string, std::vector<MlpD>> load_agent(std::istream& is);

}  // namespace ncs
