#include "ncs/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace ncs {

NcsEnv::NcsEnv(SystemConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), seed_(seed) {
  if (const auto errors = validate_config(cfg_); !errors.empty()) {
    throw std::invalid_argument("invalid config: " + errors.front());
  }
  reset(seed_);
}

const EnvState& NcsEnv::reset() { return reset(seed_); }

const EnvState& NcsEnv::reset(std::uint64_t seed) {
  seed_ = seed;
  channel_rng_ = RngStream(seed, "env.channel");
  inference_rng_ = RngStream(seed, "env.inference");
  process_rng_ = RngStream(seed, "env.process");

  chain_ = ProcessChain::from_config(cfg_, process_rng_.uniform_int(cfg_.num_process_states));
  last_acknowledged_.reset();

  auto links = draw_links(cfg_, channel_rng_);
  state_.aos_slots = cfg_.aos_cap_slots;
  state_.gains_sr = std::move(links.gains_sr);
  state_.gains_rc = std::move(links.gains_rc);
  state_.association = kNoAssociation;
  return state_;
}

void NcsEnv::override_links(const LinkRealization& links) {
  if (links.gains_sr.size() != cfg_.num_relays || links.gains_rc.size() != cfg_.num_relays) {
    throw std::invalid_argument("override_links: gain vector length mismatch");
  }
  state_.gains_sr = links.gains_sr;
  state_.gains_rc = links.gains_rc;
}

double slot_reward(int aos_slots, double energy_j, const SystemConfig& cfg) {
  return -(cfg.reward_weight_aos * aos_slots * cfg.tau_s + cfg.reward_weight_energy * energy_j);
}

StepResult NcsEnv::step(const Action& action) {
  if (!action_valid(action, cfg_)) {
    throw std::out_of_range("step: invalid action index " + std::to_string(action.index()));
  }
  StepInfo info;
  if (!action.is_idle()) {
    const LinkRealization current{state_.gains_sr, state_.gains_rc};
    const auto outcome = two_hop_outcome(current, action.relay(), cfg_);
    info.energy_j = outcome.sensor_energy_j;
    info.delivered = outcome.delivered;
    if (outcome.delivered) {
      info.perfect_inference = inference_rng_.uniform() < cfg_.beta;
    }
  }

  StepResult result;
  result.next.aos_slots =
      info.perfect_inference ? 1 : std::min(state_.aos_slots + 1, cfg_.aos_cap_slots);
  if (info.perfect_inference) last_acknowledged_ = chain_.current;

  step_chain(chain_, process_rng_);
  auto links = draw_links(cfg_, channel_rng_);
  result.next.gains_sr = std::move(links.gains_sr);
  result.next.gains_rc = std::move(links.gains_rc);
  result.next.association = action.is_idle() ? state_.association : action.relay();

  info.aos_seconds = result.next.aos_slots * cfg_.tau_s;
  result.reward = slot_reward(result.next.aos_slots, info.energy_j, cfg_);
  result.info = info;
  state_ = result.next;
  return result;
}

EvalResult evaluate_policy(const SystemConfig& cfg, const Policy& policy, long num_realizations,
                           std::uint64_t seed, int num_episodes, const TrajectorySink& sink) {
  if (num_realizations < 1) throw std::invalid_argument("evaluate_policy: num_realizations < 1");
  num_episodes = static_cast<int>(std::clamp<long>(num_episodes, 1, num_realizations));

  double reward = 0.0;
  double aos = 0.0;
  double energy = 0.0;
  long t = 0;
  const long base = num_realizations / num_episodes;
  const long extra = num_realizations % num_episodes;
  for (int e = 0; e < num_episodes; ++e) {
    NcsEnv env(cfg, split_seed(seed, "eval.episode", e));
    RngStream policy_rng(seed, "eval.policy", e);
    const long steps = base + (e < extra ? 1 : 0);
    for (long i = 0; i < steps; ++i) {
      const Action a = policy.act(env.state(), policy_rng);
      const auto res = env.step(a);
      reward += res.reward;
      aos += res.info.aos_seconds;
      energy += res.info.energy_j;
      if (sink) {
        sink({t, a, res.info.delivered, res.info.perfect_inference, res.next.aos_slots,
              res.info.energy_j, res.reward});
      }
      ++t;
    }
  }
  const double n = static_cast<double>(num_realizations);
  return {reward / n, aos / n, energy / n};
}

void write_trajectory_header(std::ostream& os) {
  os << "t,action,delivered,perfect_inference,aos_slots,energy_j,reward\n";
}

void write_trajectory_row(std::ostream& os, const TrajectoryRecord& rec) {
  os << rec.t << ',' << rec.action.index() << ',' << int(rec.delivered) << ','
     << int(rec.perfect_inference) << ',' << rec.aos_slots << ',' << rec.energy_j << ','
     << rec.reward << '\n';
}

}  // namespace ncs
