#include "ncs/agents.hpp"

#include "ncs/binary_io.hpp"

#include <cmath>
#include <stdexcept>

namespace ncs {

Action random_act(int num_actions, RngStream& rng) {
  return Action::from_index(rng.uniform_int(num_actions), num_actions - 1);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

double log_sum_exp(const Eigen::VectorXd& values) {
  const double m = values.maxCoeff();
  return m + std::log((values.array() - m).exp().sum());
}

double entropy(const Eigen::VectorXd& probs) {
  double h = 0.0;
  for (const double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

int sample_categorical(const Eigen::VectorXd& probs, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

A2cAgent make_a2c(int input_dim, int num_actions, double gamma, const TrainingConfig& tc,
                  RngStream& rng) {
  A2cAgent agent;
  agent.actor = make_mlp<double>(input_dim, tc.hidden_dim, num_actions, rng);
  agent.critic = make_mlp<double>(input_dim, tc.hidden_dim, 1, rng);
  agent.actor_opt = make_adam(agent.actor, tc.a2c_actor_lr, tc.adam_beta1, tc.adam_beta2, tc.adam_epsilon);
  agent.critic_opt =
      make_adam(agent.critic, tc.a2c_critic_lr, tc.adam_beta1, tc.adam_beta2, tc.adam_epsilon);
  agent.gamma = gamma;
  agent.entropy_weight = tc.entropy_weight;
  return agent;
}

A2cLosses a2c_update(A2cAgent& agent, const Eigen::VectorXd& x, int action, double reward,
                     const Eigen::VectorXd& x_next) {
  const double v = forward(agent.critic, x)(0, 0);
  const double v_next = forward(agent.critic, x_next)(0, 0);
  const Eigen::VectorXd logits = forward(agent.actor, x);
  if (action < 0 || action >= logits.size()) throw std::out_of_range("a2c_update: bad action");
  const Eigen::VectorXd probs = softmax(logits);

  A2cLosses losses;
  losses.advantage = reward + agent.gamma * v_next - v;
  losses.critic_loss = losses.advantage * losses.advantage;
  losses.entropy = entropy(probs);
  losses.actor_loss =
      -std::log(std::max(probs(action), 1e-300)) * losses.advantage - agent.entropy_weight * losses.entropy;
  if (!std::isfinite(losses.critic_loss) || !std::isfinite(losses.actor_loss)) {
    throw NonFiniteGradient("a2c_update: non-finite loss");
  }

  Eigen::MatrixXd dv(1, 1);
  dv(0, 0) = -2.0 * losses.advantage;
  const auto critic_grad = backward(agent.critic, x, dv);

  // d/dz of -log pi(a) A - w H, with H = -sum p log p.
  const Eigen::ArrayXd logp = probs.array().max(1e-300).log();
  Eigen::VectorXd dlogits = losses.advantage * probs;
  dlogits(action) -= losses.advantage;
  dlogits.array() += agent.entropy_weight * probs.array() * (logp + losses.entropy);
  const auto actor_grad = backward(agent.actor, x, dlogits);

  adam_step(agent.critic, critic_grad, agent.critic_opt);
  adam_step(agent.actor, actor_grad, agent.actor_opt);
  return losses;
}

Action A2cPolicy::act(const EnvState& state, RngStream& rng) const {
  const Eigen::VectorXd logits = forward(actor_, encode_state(state, cfg_));
  if (greedy_) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    return Action::from_index(static_cast<int>(best), cfg_.num_relays);
  }
  return Action::from_index(sample_categorical(softmax(logits), rng), cfg_.num_relays);
}

A2cTrainResult train_a2c(const SystemConfig& cfg, const TrainingConfig& tc, std::uint64_t seed) {
  RngStream init_rng(seed, "a2c.init");
  A2cTrainResult result{make_a2c(cfg.feature_dim(), cfg.num_actions(), cfg.gamma, tc, init_rng), 0, false, {}};
  NcsEnv env(cfg, split_seed(seed, "a2c.env", 0));
  RngStream act_rng(seed, "a2c.act");

  Eigen::VectorXd x = encode_state(env.state(), cfg);
  double window_sum = 0.0;
  long in_window = 0;
  for (long t = 0; t < tc.a2c_max_steps; ++t) {
    const Eigen::VectorXd probs = softmax(forward(result.agent.actor, x));
    const int a = sample_categorical(probs, act_rng);
    const auto step = env.step(Action::from_index(a, cfg.num_relays));
    Eigen::VectorXd x_next = encode_state(step.next, cfg);
    a2c_update(result.agent, x, a, step.reward, x_next);
    x = std::move(x_next);
    ++result.steps;

    window_sum += step.reward;
    if (++in_window == tc.a2c_window) {
      result.window_rewards.push_back(window_sum / in_window);
      window_sum = 0.0;
      in_window = 0;
      const auto& w = result.window_rewards;
      if (static_cast<int>(w.size()) >= std::max(2, tc.a2c_min_windows)) {
        const double prev = w[w.size() - 2];
        const double last = w.back();
        if (std::abs(last - prev) < 0.01 * std::abs(prev)) {
          result.converged = true;
          break;
        }
      }
    }
  }
  return result;
}

int greedy_action(const Eigen::VectorXd& q, const ActionMask& allowed) {
  if (allowed.size() != q.size()) throw std::invalid_argument("greedy_action: mask size mismatch");
  int best = -1;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (allowed(i) && (best < 0 || q(i) > q(best))) best = static_cast<int>(i);
  }
  if (best < 0) throw std::invalid_argument("greedy_action: empty action mask");
  return best;
}

Action GreedyQPolicy::act(const EnvState& state, RngStream&) const {
  const Eigen::VectorXd q = forward(qnet_, encode_state(state, cfg_));
  const ActionMask allowed = mask_ ? mask_(state) : ActionMask::Constant(q.size(), true);
  const int a = greedy_action(q, allowed);
  if (!allowed(a)) throw std::logic_error("constrained greedy policy left the support");
  return Action::from_index(a, cfg_.num_relays);
}

GreedyQPolicy greedy_from_q(MlpD qnet, const SystemConfig& cfg, MaskFunction mask) {
  return GreedyQPolicy(std::move(qnet), cfg, std::move(mask));
}

namespace {
constexpr char kAgentMagic[9] = "NCSAGT01";
}

void save_agent(std::ostream& os, const std::string& type, const std::vector<MlpD>& nets) {
  bin::write_magic(os, kAgentMagic);
  bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(type.size()));
  os.write(type.data(), static_cast<std::streamsize>(type.size()));
  bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(nets.size()));
  for (const auto& net : nets) save_mlp(os, net);
}

std::pair<std::string, std::vector<MlpD>> load_agent(std::istream& is) {
  if (!bin::read_magic(is, kAgentMagic)) throw std::runtime_error("load_agent: bad magic");
  const auto len = bin::read_le<std::uint32_t>(is);
  if (len > 256) throw std::runtime_error("load_agent: implausible type tag");
  std::string type(len, '\0');
  if (!is.read(type.data(), len)) throw bin::Truncated();
  const auto count = bin::read_le<std::uint32_t>(is);
  if (count > 16) throw std::runtime_error("load_agent: implausible net count");
  std::vector<MlpD> nets;
  for (std::uint32_t i = 0; i < count; ++i) nets.push_back(load_mlp(is));
  return {type, nets};
}

}  // namespace ncs
