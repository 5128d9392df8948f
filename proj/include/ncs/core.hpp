#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ncs {

// Physical system, radio model and discounting. Field names double as
// config-file keys.
struct SystemConfig {
  int num_process_states = 9;
  double alpha = 0.5;
  double beta = 0.5;
  double tau_s = 0.1;
  int num_relays = 5;
  int num_irs_elements = 25;
  double bandwidth_hz = 1.0e7;
  double tx_power_w = 1.0;
  double sample_bits = 6.2e6;
  double noise_power_w = 4.0e-14;
  double sampling_energy_j = 0.01;
  double extraction_energy_j = 0.05;
  int aos_cap_slots = 50;
  double reward_weight_aos = 1.0;
  double reward_weight_energy = 1.0;
  double gamma = 0.5;
  std::uint64_t rng_seed = 1;

  double rayleigh_scale_direct = 1.0;
  double rayleigh_scale_irs = 1.0;
  double path_loss_sr = 4.0e-13;
  double path_loss_rc = 4.0e-13;
  double hop1_fraction = 0.5;

  int num_actions() const { return num_relays + 1; }
  int feature_dim() const { return 1 + 2 * num_relays + num_relays + 1; }
};

enum class BehaviorMode { tabular, neural };

// Learner hyperparameters. Shares the config file with SystemConfig but is
// excluded from the dataset fingerprint.
struct TrainingConfig {
  int hidden_dim = 64;
  double learning_rate = 3.0e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1.0e-8;

  double a2c_actor_lr = 3.0e-4;
  double a2c_critic_lr = 1.0e-3;
  double entropy_weight = 0.01;
  int a2c_window = 20000;
  int a2c_min_windows = 3;
  int a2c_max_steps = 400000;

  BehaviorMode behavior_mode = BehaviorMode::neural;
  double support_threshold = 0.1;
  double penalty_weight = 1.0;
  double margin = 1.0;
  double cql_alpha = 1.0;
  int target_sync = 200;
  int batch_size = 256;
  int steps_per_iteration = 100;
  int iterations = 800;

  double cloning_lr = 1.0e-3;
  int cloning_max_epochs = 30;
  int cloning_patience = 3;
  double cloning_validation_fraction = 0.1;

  int dataset_size = 100000;
  int eval_realizations = 10000;
  int eval_episodes = 10;
};

struct Config {
  SystemConfig system;
  TrainingConfig training;
};

// Action index 0 is Idle; index k + 1 is Sample(relay k).
class Action {
 public:
  static Action idle() { return Action(0); }
  static Action sample(int relay) { return Action(relay + 1); }
  static Action from_index(int index, int num_relays);

  bool is_idle() const { return index_ == 0; }
  int relay() const { return index_ - 1; }
  int index() const { return index_; }

  friend bool operator==(const Action&, const Action&) = default;

 private:
  explicit Action(int index) : index_(index) {}
  int index_;
};

inline constexpr int kNoAssociation = -1;

struct EnvState {
  int aos_slots = 1;
  Eigen::VectorXd gains_sr;
  Eigen::VectorXd gains_rc;
  int association = kNoAssociation;

  bool operator==(const EnvState& other) const {
    return aos_slots == other.aos_slots && association == other.association &&
           gains_sr == other.gains_sr && gains_rc == other.gains_rc;
  }
};

struct Experience {
  EnvState state;
  Action action = Action::idle();
  double reward = 0.0;
  EnvState next_state;

  bool operator==(const Experience&) const = default;
};

std::vector<std::string> validate_config(const SystemConfig& cfg);
std::vector<std::string> validate_training(const TrainingConfig& cfg);
std::vector<std::string> validate_state(const EnvState& s, const SystemConfig& cfg);
bool action_valid(const Action& a, const SystemConfig& cfg);

// Gain at which single-hop SNR is 0 dB.
double reference_gain(const SystemConfig& cfg);
// Gain at which a hop with the given deadline is exactly feasible.
double threshold_gain(double deadline_s, const SystemConfig& cfg);
double hop1_deadline(const SystemConfig& cfg);
double hop2_deadline(const SystemConfig& cfg);

// Network input: [aos / cap] ++ gain features ++ one-hot(association, R + 1).
// Gain features are log1p(g / g_ref) / log1p(g_thr / g_ref) so that 1.0 sits
// on the hop feasibility threshold.
Eigen::VectorXd encode_state(const EnvState& s, const SystemConfig& cfg);

// Stable hash of the physics-relevant fields.
std::uint64_t config_fingerprint(const SystemConfig& cfg);

Config parse_config(std::string_view text);
// Applies `key = value` lines on top of an existing config.
void apply_config_text(Config& cfg, std::string_view text);
bool is_config_key(std::string_view key);
Config load_config(const std::string& path);
std::string format_config(const Config& cfg);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Seeded stream contract: each stochastic component owns an RngStream derived
// from the master seed, a component name and an instance index.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t master_seed, std::string_view name, std::uint64_t index = 0);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer in [0, n).
  int uniform_int(int n);
  double rayleigh(double scale);
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t split_seed(std::uint64_t master_seed, std::string_view name, std::uint64_t index);

// Fisher-Yates over RngStream::uniform_int, so orderings do not depend on the
// standard library's distribution implementations.
template <typename Container>
void shuffle_in_place(Container& items, RngStream& rng) {
  for (auto i = static_cast<int>(items.size()) - 1; i > 0; --i) {
    using std::swap;
    swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
  }
}

}  // namespace ncs
