#include "ncs/offline.hpp"

#include "ncs/binary_io.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ncs {

std::uint64_t state_key(const EnvState& s, const SystemConfig& cfg) {
  const int r = cfg.num_relays;
  const std::uint64_t aos_level =
      std::min<std::uint64_t>(9, static_cast<std::uint64_t>(s.aos_slots - 1) * 10 / cfg.aos_cap_slots);
  const int assoc = s.association == kNoAssociation ? r : s.association;
  std::uint64_t quality = 0;
  if (s.association != kNoAssociation) {
    const double g_ref = reference_gain(cfg);
    const double sr = std::log1p(s.gains_sr(assoc) / g_ref) /
                      std::log1p(threshold_gain(hop1_deadline(cfg), cfg) / g_ref);
    const double rc = std::log1p(s.gains_rc(assoc) / g_ref) /
                      std::log1p(threshold_gain(hop2_deadline(cfg), cfg) / g_ref);
    const double worst = std::min(sr, rc);
    quality = worst < 1.0 ? 0 : (worst < 1.1 ? 1 : 2);
  }
  return (aos_level * static_cast<std::uint64_t>(r + 1) + static_cast<std::uint64_t>(assoc)) * 3 + quality;
}

FeatureDataset featurize(std::span<const Experience> records, const SystemConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(records.size());
  FeatureDataset data;
  data.num_actions = cfg.num_actions();
  data.x.resize(cfg.feature_dim(), n);
  data.x_next.resize(cfg.feature_dim(), n);
  data.actions.resize(n);
  data.rewards.resize(n);
  data.keys.resize(n);
  data.next_keys.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = records[i];
    data.x.col(i) = encode_state(e.state, cfg);
    data.x_next.col(i) = encode_state(e.next_state, cfg);
    data.actions(i) = e.action.index();
    data.rewards(i) = e.reward;
    data.keys[i] = state_key(e.state, cfg);
    data.next_keys[i] = state_key(e.next_state, cfg);
  }
  return data;
}

ActionMask support_from_probs(const Eigen::VectorXd& probs, double threshold) {
  const double cutoff = threshold * probs.maxCoeff();
  return probs.array() >= cutoff;
}

BehaviorModel BehaviorModel::tabular(std::map<std::uint64_t, Eigen::VectorXd> table, int num_actions,
                                     double threshold) {
  BehaviorModel m;
  m.mode_ = BehaviorMode::tabular;
  m.threshold_ = threshold;
  m.num_actions_ = num_actions;
  m.table_ = std::move(table);
  return m;
}

BehaviorModel BehaviorModel::neural(MlpD classifier, double threshold) {
  BehaviorModel m;
  m.mode_ = BehaviorMode::neural;
  m.threshold_ = threshold;
  m.num_actions_ = static_cast<int>(classifier.output_dim());
  m.classifier_ = std::move(classifier);
  return m;
}

Eigen::VectorXd BehaviorModel::probabilities(const Eigen::VectorXd& x, std::uint64_t key) const {
  if (mode_ == BehaviorMode::neural) return softmax(forward(classifier_, x));
  if (const auto it = table_.find(key); it != table_.end()) return it->second;
  return Eigen::VectorXd::Constant(num_actions_, 1.0 / num_actions_);
}

ActionMask BehaviorModel::support(const Eigen::VectorXd& x, std::uint64_t key) const {
  return support_from_probs(probabilities(x, key), threshold_);
}

MaskMatrix BehaviorModel::support(const Eigen::MatrixXd& x, std::span<const std::uint64_t> keys) const {
  MaskMatrix out(num_actions_, x.cols());
  if (mode_ == BehaviorMode::neural) {
    constexpr Eigen::Index kChunk = 4096;
    for (Eigen::Index start = 0; start < x.cols(); start += kChunk) {
      const Eigen::Index len = std::min(kChunk, x.cols() - start);
      const Eigen::MatrixXd logits = forward(classifier_, x.middleCols(start, len));
      for (Eigen::Index j = 0; j < len; ++j) {
        out.col(start + j) = support_from_probs(softmax(logits.col(j)), threshold_);
      }
    }
  } else {
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = support(x.col(j), keys[j]);
  }
  return out;
}

namespace {

double cross_entropy(const MlpD& net, const Eigen::MatrixXd& x, const Eigen::VectorXi& labels,
                     std::span<const Eigen::Index> idx) {
  if (idx.empty()) return 0.0;
  double loss = 0.0;
  constexpr std::size_t kChunk = 4096;
  for (std::size_t start = 0; start < idx.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, idx.size() - start);
    Eigen::MatrixXd xb(x.rows(), static_cast<Eigen::Index>(len));
    for (std::size_t j = 0; j < len; ++j) xb.col(j) = x.col(idx[start + j]);
    const Eigen::MatrixXd logits = forward(net, xb);
    for (std::size_t j = 0; j < len; ++j) {
      loss += log_sum_exp(logits.col(j)) - logits(labels(idx[start + j]), j);
    }
  }
  return loss / static_cast<double>(idx.size());
}

BehaviorModel fit_neural(const FeatureDataset& data, double threshold, const TrainingConfig& tc,
                         std::uint64_t seed, std::vector<double>& history) {
  RngStream rng(seed, "behavior.clone");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  shuffle_in_place(order, rng);
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(tc.cloning_validation_fraction * static_cast<double>(order.size())));
  std::vector<Eigen::Index> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(
                                                                  std::min(n_val, order.size() - 1)));
  const std::vector<Eigen::Index> val(order.begin() + static_cast<std::ptrdiff_t>(train.size()),
                                      order.end());
  if (train.empty()) train = val;

  MlpD net = make_mlp<double>(static_cast<int>(data.x.rows()), tc.hidden_dim, data.num_actions, rng);
  auto opt = make_adam(net, tc.cloning_lr, tc.adam_beta1, tc.adam_beta2, tc.adam_epsilon);
  MlpD best = net;
  double best_loss = cross_entropy(net, data.x, data.actions, val);
  history.push_back(best_loss);
  int stale = 0;

  const auto bs = static_cast<std::size_t>(tc.batch_size);
  for (int epoch = 0; epoch < tc.cloning_max_epochs && stale < tc.cloning_patience; ++epoch) {
    shuffle_in_place(train, rng);
    for (std::size_t start = 0; start < train.size(); start += bs) {
      const auto len = static_cast<Eigen::Index>(std::min(bs, train.size() - start));
      Eigen::MatrixXd xb(data.x.rows(), len);
      for (Eigen::Index j = 0; j < len; ++j) xb.col(j) = data.x.col(train[start + j]);
      const Eigen::MatrixXd logits = forward(net, xb);
      Eigen::MatrixXd dlogits(logits.rows(), len);
      for (Eigen::Index j = 0; j < len; ++j) {
        dlogits.col(j) = softmax(logits.col(j));
        dlogits(data.actions(train[start + j]), j) -= 1.0;
      }
      dlogits /= static_cast<double>(len);
      adam_step(net, backward(net, xb, dlogits), opt);
    }
    const double loss = cross_entropy(net, data.x, data.actions, val);
    history.push_back(loss);
    // Plateau: no relative improvement above 1e-3 for `patience` epochs.
    if (loss < best_loss * (1.0 - 1e-3)) {
      best_loss = loss;
      best = net;
      stale = 0;
    } else {
      ++stale;
      if (loss < best_loss) {
        best_loss = loss;
        best = net;
      }
    }
  }
  return BehaviorModel::neural(std::move(best), threshold);
}

}  // namespace

BehaviorModel fit_behavior(const FeatureDataset& data, BehaviorMode mode, double support_threshold,
                           const TrainingConfig& tc, std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("fit_behavior: empty dataset");
  if (mode == BehaviorMode::neural) {
    std::vector<double> history;
    BehaviorModel m = fit_neural(data, support_threshold, tc, seed, history);
    m.validation_history_ = std::move(history);
    return m;
  }
  std::map<std::uint64_t, Eigen::VectorXd> table;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    auto [it, inserted] = table.try_emplace(data.keys[i], Eigen::VectorXd::Zero(data.num_actions));
    it->second(data.actions(i)) += 1.0;
  }
  for (auto& [key, counts] : table) counts /= counts.sum();
  return BehaviorModel::tabular(std::move(table), data.num_actions, support_threshold);
}

namespace {
constexpr char kBehaviorMagic[9] = "NCSBHV01";
}

void save_behavior(std::ostream& os, const BehaviorModel& model) {
  bin::write_magic(os, kBehaviorMagic);
  bin::write_le<std::uint8_t>(os, model.mode() == BehaviorMode::neural ? 1 : 0);
  bin::write_le<double>(os, model.threshold());
  bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.num_actions()));
  if (model.mode() == BehaviorMode::neural) {
    save_mlp(os, model.classifier());
    return;
  }
  bin::write_le<std::uint64_t>(os, model.table().size());
  for (const auto& [key, probs] : model.table()) {
    bin::write_le<std::uint64_t>(os, key);
    for (const double p : probs) bin::write_le<double>(os, p);
  }
}

BehaviorModel load_behavior(std::istream& is) {
  if (!bin::read_magic(is, kBehaviorMagic)) throw std::runtime_error("load_behavior: bad magic");
  const auto mode = bin::read_le<std::uint8_t>(is);
  const auto threshold = bin::read_le<double>(is);
  const auto num_actions = static_cast<int>(bin::read_le<std::uint32_t>(is));
  if (num_actions < 1 || num_actions > 4096) throw std::runtime_error("load_behavior: bad action count");
  if (mode == 1) return BehaviorModel::neural(load_mlp(is), threshold);
  const auto count = bin::read_le<std::uint64_t>(is);
  std::map<std::uint64_t, Eigen::VectorXd> table;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto key = bin::read_le<std::uint64_t>(is);
    Eigen::VectorXd probs(num_actions);
    for (int a = 0; a < num_actions; ++a) probs(a) = bin::read_le<double>(is);
    table.emplace(key, std::move(probs));
  }
  return BehaviorModel::tabular(std::move(table), num_actions, threshold);
}

Scheme parse_scheme(const std::string& name) {
  if (name == "proposed") return Scheme::proposed;
  if (name == "cql") return Scheme::cql;
  throw std::invalid_argument("unknown offline scheme '" + name + "' (expected proposed|cql)");
}

std::string to_string(Scheme scheme) { return scheme == Scheme::proposed ? "proposed" : "cql"; }

OfflineTrainer make_trainer(int input_dim, int num_actions, double gamma, const TrainingConfig& tc,
                            RngStream& rng) {
  OfflineTrainer t;
  t.qnet = make_mlp<double>(input_dim, tc.hidden_dim, num_actions, rng);
  t.target = t.qnet;
  t.opt = make_adam(t.qnet, tc.learning_rate, tc.adam_beta1, tc.adam_beta2, tc.adam_epsilon);
  t.gamma = gamma;
  t.penalty_weight = tc.penalty_weight;
  t.margin = tc.margin;
  t.cql_alpha = tc.cql_alpha;
  t.target_sync = tc.target_sync;
  return t;
}

SupportTable compute_support(const FeatureDataset& data, const BehaviorModel& behavior) {
  return {behavior.support(data.x, data.keys), behavior.support(data.x_next, data.next_keys)};
}

SupportTable full_support(const FeatureDataset& data) {
  return {MaskMatrix::Constant(data.num_actions, data.size(), true),
          MaskMatrix::Constant(data.num_actions, data.size(), true)};
}

Batch gather_batch(const FeatureDataset& data, const SupportTable& support,
                   std::span<const Eigen::Index> indices) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Batch b;
  b.x.resize(data.x.rows(), n);
  b.x_next.resize(data.x.rows(), n);
  b.actions.resize(n);
  b.rewards.resize(n);
  b.support.resize(data.num_actions, n);
  b.support_next.resize(data.num_actions, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index i = indices[j];
    b.x.col(j) = data.x.col(i);
    b.x_next.col(j) = data.x_next.col(i);
    b.actions(j) = data.actions(i);
    b.rewards(j) = data.rewards(i);
    b.support.col(j) = support.now.col(i);
    b.support_next.col(j) = support.next.col(i);
  }
  return b;
}

Batch sample_batch(const FeatureDataset& data, const SupportTable& support, int batch_size,
                   RngStream& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(batch_size));
  for (auto& i : idx) i = rng.uniform_int(static_cast<int>(data.size()));
  return gather_batch(data, support, idx);
}

namespace {

double masked_max(const Eigen::MatrixXd& q, Eigen::Index col, const MaskMatrix& mask,
                  Eigen::Index* arg = nullptr) {
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Index best_i = -1;
  for (Eigen::Index a = 0; a < q.rows(); ++a) {
    if (mask(a, col) && q(a, col) > best) {
      best = q(a, col);
      best_i = a;
    }
  }
  if (best_i < 0) throw std::invalid_argument("empty support column");
  if (arg) *arg = best_i;
  return best;
}

// TD part shared by both schemes; accumulates dL/dQ into dq.
double td_term(const Eigen::MatrixXd& q, const Eigen::MatrixXd& q_next_target, const Batch& batch,
               const MaskMatrix& next_mask, double gamma, Eigen::MatrixXd* dq) {
  const auto n = static_cast<double>(batch.actions.size());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch.actions.size(); ++j) {
    const double target = batch.rewards(j) + gamma * masked_max(q_next_target, j, next_mask);
    const double err = q(batch.actions(j), j) - target;
    loss += err * err;
    if (dq) (*dq)(batch.actions(j), j) += 2.0 * err / n;
  }
  return loss / n;
}

void apply(OfflineTrainer& trainer, const Batch& batch, const Eigen::MatrixXd& dq,
           const LossComponents& loss) {
  if (!std::isfinite(loss.total)) throw NonFiniteGradient("offline update: non-finite loss");
  adam_step(trainer.qnet, backward(trainer.qnet, batch.x, dq), trainer.opt);
  if (++trainer.updates % trainer.target_sync == 0) trainer.target = trainer.qnet;
}

}  // namespace

double td_loss(const OfflineTrainer& trainer, const Batch& batch) {
  const Eigen::MatrixXd q = forward(trainer.qnet, batch.x);
  const Eigen::MatrixXd qt = forward(trainer.target, batch.x_next);
  return td_term(q, qt, batch, batch.support_next, trainer.gamma, nullptr);
}

LossComponents offline_update(OfflineTrainer& trainer, const Batch& batch) {
  const Eigen::MatrixXd q = forward(trainer.qnet, batch.x);
  const Eigen::MatrixXd qt = forward(trainer.target, batch.x_next);
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  const auto n = static_cast<double>(batch.actions.size());

  LossComponents loss;
  loss.td = td_term(q, qt, batch, batch.support_next, trainer.gamma, &dq);

  double penalty = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    Eigen::Index best = 0;
    const double best_in = masked_max(q, j, batch.support, &best);
    for (Eigen::Index a = 0; a < q.rows(); ++a) {
      if (batch.support(a, j)) continue;
      const double hinge = q(a, j) + trainer.margin - best_in;
      if (hinge > 0.0) {
        penalty += hinge;
        dq(a, j) += trainer.penalty_weight / n;
        dq(best, j) -= trainer.penalty_weight / n;
      }
    }
  }
  loss.penalty = penalty / n;
  loss.total = loss.td + trainer.penalty_weight * loss.penalty;
  apply(trainer, batch, dq, loss);
  return loss;
}

LossComponents cql_update(OfflineTrainer& trainer, const Batch& batch) {
  const Eigen::MatrixXd q = forward(trainer.qnet, batch.x);
  const Eigen::MatrixXd qt = forward(trainer.target, batch.x_next);
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  const auto n = static_cast<double>(batch.actions.size());
  const MaskMatrix all = MaskMatrix::Constant(q.rows(), q.cols(), true);

  LossComponents loss;
  loss.td = td_term(q, qt, batch, all, trainer.gamma, &dq);

  double penalty = 0.0;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Eigen::VectorXd col = q.col(j);
    penalty += log_sum_exp(col) - col(batch.actions(j));
    Eigen::VectorXd g = softmax(col);
    g(batch.actions(j)) -= 1.0;
    dq.col(j) += trainer.cql_alpha / n * g;
  }
  loss.penalty = penalty / n;
  loss.total = loss.td + trainer.cql_alpha * loss.penalty;
  apply(trainer, batch, dq, loss);
  return loss;
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma, double tolerance) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("value_iteration: gamma must be in [0, 1)");
  if (static_cast<int>(mdp.transitions.size()) != mdp.num_actions ||
      mdp.rewards.rows() != mdp.num_states || mdp.rewards.cols() != mdp.num_actions) {
    throw std::invalid_argument("value_iteration: inconsistent MDP tables");
  }
  ValueIterationResult res;
  res.q = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_actions);
  for (;;) {
    const Eigen::VectorXd v = res.q.rowwise().maxCoeff();
    Eigen::MatrixXd next(mdp.num_states, mdp.num_actions);
    for (int a = 0; a < mdp.num_actions; ++a) {
      next.col(a) = mdp.rewards.col(a) + gamma * mdp.transitions[a] * v;
    }
    ++res.iterations;
    const double change = (next - res.q).cwiseAbs().maxCoeff();
    res.q = std::move(next);
    if (change < tolerance) break;
  }
  res.policy.resize(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    res.policy(s) = greedy_action(res.q.row(s).transpose(), ActionMask::Constant(mdp.num_actions, true));
  }
  return res;
}

Eigen::VectorXd policy_evaluation(const TabularMdp& mdp, const Eigen::MatrixXd& policy, double gamma) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_states);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a) {
    p += policy.col(a).asDiagonal() * mdp.transitions[a];
    r += policy.col(a).cwiseProduct(mdp.rewards.col(a));
  }
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(mdp.num_states, mdp.num_states) - gamma * p;
  return lhs.partialPivLu().solve(r);
}

MarginAudit margin_audit(const MlpD& qnet, const FeatureDataset& data, const SupportTable& support,
                         double slack, Eigen::Index max_states) {
  MarginAudit audit;
  audit.audited = std::min(max_states, data.size());
  const Eigen::Index n = audit.audited;
  if (n == 0) return audit;
  const Eigen::MatrixXd q = forward(qnet, data.x.leftCols(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    double in = -std::numeric_limits<double>::infinity();
    double out = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.rows(); ++a) {
      if (support.now(a, j)) {
        in = std::max(in, q(a, j));
      } else {
        out = std::max(out, q(a, j));
      }
    }
    if (out == -std::numeric_limits<double>::infinity()) continue;
    ++audit.with_ood;
    if (in >= out + slack) ++audit.satisfied;
  }
  return audit;
}

GreedyQPolicy constrained_greedy(MlpD qnet, const BehaviorModel& behavior, const SystemConfig& cfg) {
  return greedy_from_q(std::move(qnet), cfg, [behavior, cfg](const EnvState& s) {
    return behavior.support(encode_state(s, cfg), state_key(s, cfg));
  });
}

OfflineTrainResult train_offline(const FeatureDataset& data, const BehaviorModel& behavior,
                                 const SystemConfig& cfg, const TrainingConfig& tc,
                                 const OfflineTrainOptions& options, const EvalHook& hook) {
  if (data.size() == 0) throw std::invalid_argument("train_offline: empty dataset");
  RngStream init_rng(options.seed, "offline.init");
  RngStream batch_rng(options.seed, "offline.batch");
  OfflineTrainResult result{
      make_trainer(static_cast<int>(data.x.rows()), data.num_actions, cfg.gamma, tc, init_rng), {}};
  const SupportTable support =
      options.scheme == Scheme::proposed ? compute_support(data, behavior) : full_support(data);
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  for (int it = 0; it < options.iterations; ++it) {
    double td = 0.0;
    double penalty = 0.0;
    for (int s = 0; s < options.steps_per_iteration; ++s) {
      const Batch batch = sample_batch(data, support, tc.batch_size, batch_rng);
      const auto loss = options.scheme == Scheme::proposed ? offline_update(result.trainer, batch)
                                                           : cql_update(result.trainer, batch);
      td += loss.td;
      penalty += loss.penalty;
    }
    const bool last = it + 1 == options.iterations;
    if (last || (it + 1) % std::max(1, options.eval_interval) == 0) {
      IterationMetrics m;
      m.iteration = it;
      m.td_loss = td / options.steps_per_iteration;
      m.penalty_loss = penalty / options.steps_per_iteration;
      if (hook) {
        const EvalResult r =
            options.scheme == Scheme::proposed
                ? hook(constrained_greedy(result.trainer.qnet, behavior, cfg), it)
                : hook(greedy_from_q(result.trainer.qnet, cfg), it);
        m.avg_reward = r.avg_reward;
        m.avg_aos_s = r.avg_aos_s;
        m.avg_energy_j = r.avg_energy_j;
      } else {
        m.avg_reward = m.avg_aos_s = m.avg_energy_j = std::numeric_limits<double>::quiet_NaN();
      }
      result.log.push_back(m);
    }
    if (!options.checkpoint_dir.empty() && options.checkpoint_interval > 0 &&
        ((it + 1) % options.checkpoint_interval == 0 || last)) {
      std::ostringstream name;
      name << "qnet_iter" << std::setw(5) << std::setfill('0') << it + 1 << ".ckpt";
      std::ofstream os(std::filesystem::path(options.checkpoint_dir) / name.str(), std::ios::binary);
      save_agent(os, to_string(options.scheme), {result.trainer.qnet});
    }
  }
  return result;
}

void write_metric_header(std::ostream& os) {
  os << "iteration,avg_reward,avg_aos_s,avg_energy_j,td_loss,penalty_loss\n";
}

void write_metric_row(std::ostream& os, const IterationMetrics& m) {
  const auto old = os.precision(12);
  os << m.iteration << ',' << m.avg_reward << ',' << m.avg_aos_s << ',' << m.avg_energy_j << ','
     << m.td_loss << ',' << m.penalty_loss << '\n';
  os.precision(old);
}

}  // namespace ncs
