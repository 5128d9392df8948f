#pragma once

#include "ncs/agents.hpp"
#include "ncs/core.hpp"
#include "ncs/env.hpp"
#include "ncs/net.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ncs {

using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Transitions in network-input form, one column per transition. Keys are the
// discretized states used for tabular behavior counting.
struct FeatureDataset {
  Eigen::MatrixXd x;
  Eigen::MatrixXd x_next;
  Eigen::VectorXi actions;
  Eigen::VectorXd rewards;
  std::vector<std::uint64_t> keys;
  std::vector<std::uint64_t> next_keys;
  int num_actions = 0;

  Eigen::Index size() const { return actions.size(); }
};

// (aos level out of 10, association, chosen-link quality in {low, mid, high}).
std::uint64_t state_key(const EnvState& s, const SystemConfig& cfg);

FeatureDataset featurize(std::span<const Experience> records, const SystemConfig& cfg);

// support(s) = {a : p(a|s) >= threshold * max p(.|s)}.
ActionMask support_from_probs(const Eigen::VectorXd& probs, double threshold);

class BehaviorModel {
 public:
  BehaviorMode mode() const { return mode_; }
  double threshold() const { return threshold_; }
  int num_actions() const { return num_actions_; }

  // Unseen tabular keys get the uniform distribution.
  Eigen::VectorXd probabilities(const Eigen::VectorXd& x, std::uint64_t key) const;
  ActionMask support(const Eigen::VectorXd& x, std::uint64_t key) const;
  MaskMatrix support(const Eigen::MatrixXd& x, std::span<const std::uint64_t> keys) const;

  const std::map<std::uint64_t, Eigen::VectorXd>& table() const { return table_; }
  const MlpD& classifier() const { return classifier_; }
  const std::vector<double>& validation_history() const { return validation_history_; }

  static BehaviorModel tabular(std::map<std::uint64_t, Eigen::VectorXd> table, int num_actions,
                               double threshold);
  static BehaviorModel neural(MlpD classifier, double threshold);

  friend BehaviorModel fit_behavior(const FeatureDataset&, BehaviorMode, double,
                                    const TrainingConfig&, std::uint64_t);

 private:
  BehaviorMode mode_ = BehaviorMode::tabular;
  double threshold_ = 0.1;
  int num_actions_ = 0;
  std::map<std::uint64_t, Eigen::VectorXd> table_;
  MlpD classifier_;
  std::vector<double> validation_history_;
};

BehaviorModel fit_behavior(const FeatureDataset& data, BehaviorMode mode, double support_threshold,
                           const TrainingConfig& tc, std::uint64_t seed);

void save_behavior(std::ostream& os, const BehaviorModel& model);
BehaviorModel load_behavior(std::istream& is);

enum class Scheme { proposed, cql };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

struct OfflineTrainer {
  MlpD qnet;
  MlpD target;
  AdamState<double> opt;
  double gamma = 0.5;
  double penalty_weight = 1.0;
  double margin = 1.0;
  double cql_alpha = 1.0;
  int target_sync = 200;
  long updates = 0;
};

OfflineTrainer make_trainer(int input_dim, int num_actions, double gamma, const TrainingConfig& tc,
                            RngStream& rng);

struct Batch {
  Eigen::MatrixXd x;
  Eigen::MatrixXd x_next;
  Eigen::VectorXi actions;
  Eigen::VectorXd rewards;
  MaskMatrix support;
  MaskMatrix support_next;
};

struct SupportTable {
  MaskMatrix now;
  MaskMatrix next;
};

SupportTable compute_support(const FeatureDataset& data, const BehaviorModel& behavior);
SupportTable full_support(const FeatureDataset& data);

Batch gather_batch(const FeatureDataset& data, const SupportTable& support,
                   std::span<const Eigen::Index> indices);
Batch sample_batch(const FeatureDataset& data, const SupportTable& support, int batch_size,
                   RngStream& rng);

struct LossComponents {
  double td = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

// Mean squared TD error with the backup max taken over support_next (pass a
// full mask for the unconstrained backup). No parameter change.
double td_loss(const OfflineTrainer& trainer, const Batch& batch);

// TD over the support-constrained backup plus penalty_weight times the mean
// per-state hinge sum_{a_o outside support} max(0, Q(s,a_o) + m - max_{support} Q).
LossComponents offline_update(OfflineTrainer& trainer, const Batch& batch);

// TD with an unconstrained backup plus cql_alpha * mean(logsumexp Q(s,.) - Q(s,a)).
LossComponents cql_update(OfflineTrainer& trainer, const Batch& batch);

struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Eigen::MatrixXd> transitions;  // per action, rows = from, cols = to
  Eigen::MatrixXd rewards;                   // num_states x num_actions
};

struct ValueIterationResult {
  Eigen::MatrixXd q;
  Eigen::VectorXi policy;
  int iterations = 0;
};

ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma, double tolerance);

// Exact state values of a stochastic policy (rows of policy are action
// distributions) by solving (I - gamma P_pi) v = r_pi.
Eigen::VectorXd policy_evaluation(const TabularMdp& mdp, const Eigen::MatrixXd& policy, double gamma);

struct MarginAudit {
  Eigen::Index audited = 0;
  Eigen::Index with_ood = 0;   // columns with a nonempty outside set
  Eigen::Index satisfied = 0;  // of those, max_{support} Q >= max_{outside} Q + slack

  // Fraction over the columns where the margin can bind; 1 when there are none.
  double fraction() const { return with_ood == 0 ? 1.0 : static_cast<double>(satisfied) / with_ood; }
};

MarginAudit margin_audit(const MlpD& qnet, const FeatureDataset& data, const SupportTable& support,
                    double slack, Eigen::Index max_states);

// Greedy policy over the behavior support for NcsEnv states.
GreedyQPolicy constrained_greedy(MlpD qnet, const BehaviorModel& behavior, const SystemConfig& cfg);

struct IterationMetrics {
  int iteration = 0;
  double avg_reward = 0.0;
  double avg_aos_s = 0.0;
  double avg_energy_j = 0.0;
  double td_loss = 0.0;
  double penalty_loss = 0.0;
};

using EvalHook = std::function<EvalResult(const Policy& policy, int iteration)>;

struct OfflineTrainOptions {
  Scheme scheme = Scheme::proposed;
  int iterations = 800;
  int steps_per_iteration = 100;
  // The hook runs after iterations where (iteration + 1) % eval_interval == 0
  // and after the last one; only those iterations are logged.
  int eval_interval = 1;
  std::uint64_t seed = 1;
  std::string checkpoint_dir;
  int checkpoint_interval = 0;
};

struct OfflineTrainResult {
  OfflineTrainer trainer;
  std::vector<IterationMetrics> log;
};

OfflineTrainResult train_offline(const FeatureDataset& data, const BehaviorModel& behavior,
                                 const SystemConfig& cfg, const TrainingConfig& tc,
                                 const OfflineTrainOptions& options, const EvalHook& hook);

void write_metric_header(std::ostream& os);
void write_metric_row(std::ostream& os, const IterationMetrics& m);

}  // namespace ncs
