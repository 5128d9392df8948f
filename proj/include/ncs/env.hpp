#pragma once

#include "ncs/core.hpp"
#include "ncs/process.hpp"
#include "ncs/radio.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>

namespace ncs {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action act(const EnvState& state, RngStream& rng) const = 0;
};

struct StepInfo {
  bool delivered = false;
  bool perfect_inference = false;
  double energy_j = 0.0;
  double aos_seconds = 0.0;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  StepInfo info;
};

// Single-agent MDP over one slot at a time. The observed state carries the
// links the next action will transmit over.
class NcsEnv {
 public:
  NcsEnv(SystemConfig cfg, std::uint64_t seed);

  const EnvState& reset();
  const EnvState& reset(std::uint64_t seed);
  StepResult step(const Action& action);

  const EnvState& state() const { return state_; }
  const SystemConfig& config() const { return cfg_; }
  int process_state() const { return chain_.current; }
  std::optional<int> last_acknowledged_state() const { return last_acknowledged_; }

  // Replaces the links in the current state, e.g. to pin a channel scenario.
  void override_links(const LinkRealization& links);

 private:
  SystemConfig cfg_;
  std::uint64_t seed_;
  ProcessChain chain_;
  EnvState state_;
  std::optional<int> last_acknowledged_;
  RngStream channel_rng_{0};
  RngStream inference_rng_{0};
  RngStream process_rng_{0};
};

double slot_reward(int aos_slots, double energy_j, const SystemConfig& cfg);

struct EvalResult {
  double avg_reward = 0.0;
  double avg_aos_s = 0.0;
  double avg_energy_j = 0.0;
};

struct TrajectoryRecord {
  long t = 0;
  Action action = Action::idle();
  bool delivered = false;
  bool perfect_inference = false;
  int aos_slots = 0;
  double energy_j = 0.0;
  double reward = 0.0;
};

using TrajectorySink = std::function<void(const TrajectoryRecord&)>;

// Runs the policy for num_realizations slots split over num_episodes
// independent episodes and returns per-slot averages.
EvalResult evaluate_policy(const SystemConfig& cfg, const Policy& policy, long num_realizations,
                           std::uint64_t seed, int num_episodes = 10,
                           const TrajectorySink& sink = {});

void write_trajectory_header(std::ostream& os);
void write_trajectory_row(std::ostream& os, const TrajectoryRecord& rec);

}  // namespace ncs
