#include "ncs/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

namespace ncs {

namespace {

using FieldRef = std::variant<int*, double*, std::uint64_t*, BehaviorMode*>;

struct Field {
  const char* key;
  FieldRef ref;
  bool physics;
};

std::vector<Field> fields_of(Config& c) {
  auto& s = c.system;
  auto& t = c.training;
  return {
      {"num_process_states", &s.num_process_states, true},
      {"alpha", &s.alpha, true},
      {"beta", &s.beta, true},
      {"tau_s", &s.tau_s, true},
      {"num_relays", &s.num_relays, true},
      {"num_irs_elements", &s.num_irs_elements, true},
      {"bandwidth_hz", &s.bandwidth_hz, true},
      {"tx_power_w", &s.tx_power_w, true},
      {"sample_bits", &s.sample_bits, true},
      {"noise_power_w", &s.noise_power_w, true},
      {"sampling_energy_j", &s.sampling_energy_j, true},
      {"extraction_energy_j", &s.extraction_energy_j, true},
      {"aos_cap_slots", &s.aos_cap_slots, true},
      {"reward_weight_aos", &s.reward_weight_aos, true},
      {"reward_weight_energy", &s.reward_weight_energy, true},
      {"gamma", &s.gamma, false},
      {"rng_seed", &s.rng_seed, false},
      {"rayleigh_scale_direct", &s.rayleigh_scale_direct, true},
      {"rayleigh_scale_irs", &s.rayleigh_scale_irs, true},
      {"path_loss_sr", &s.path_loss_sr, true},
      {"path_loss_rc", &s.path_loss_rc, true},
      {"hop1_fraction", &s.hop1_fraction, true},
      {"hidden_dim", &t.hidden_dim, false},
      {"learning_rate", &t.learning_rate, false},
      {"adam_beta1", &t.adam_beta1, false},
      {"adam_beta2", &t.adam_beta2, false},
      {"adam_epsilon", &t.adam_epsilon, false},
      {"a2c_actor_lr", &t.a2c_actor_lr, false},
      {"a2c_critic_lr", &t.a2c_critic_lr, false},
      {"entropy_weight", &t.entropy_weight, false},
      {"a2c_window", &t.a2c_window, false},
      {"a2c_min_windows", &t.a2c_min_windows, false},
      {"a2c_max_steps", &t.a2c_max_steps, false},
      {"behavior_mode", &t.behavior_mode, false},
      {"support_threshold", &t.support_threshold, false},
      {"penalty_weight", &t.penalty_weight, false},
      {"margin", &t.margin, false},
      {"cql_alpha", &t.cql_alpha, false},
      {"target_sync", &t.target_sync, false},
      {"batch_size", &t.batch_size, false},
      {"steps_per_iteration", &t.steps_per_iteration, false},
      {"iterations", &t.iterations, false},
      {"cloning_lr", &t.cloning_lr, false},
      {"cloning_max_epochs", &t.cloning_max_epochs, false},
      {"cloning_patience", &t.cloning_patience, false},
      {"cloning_validation_fraction", &t.cloning_validation_fraction, false},
      {"dataset_size", &t.dataset_size, false},
      {"eval_realizations", &t.eval_realizations, false},
      {"eval_episodes", &t.eval_episodes, false},
  };
}

std::string format_value(const FieldRef& ref) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BehaviorMode>) {
          os << (*p == BehaviorMode::neural ? "neural" : "tabular");
        } else {
          os << *p;
        }
      },
      ref);
  return os.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void assign(const FieldRef& ref, std::string_view key, std::string_view value) {
  const auto fail = [&] {
    throw ConfigError("bad value for '" + std::string(key) + "': '" + std::string(value) + "'");
  };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BehaviorMode>) {
          if (value == "neural") {
            *p = BehaviorMode::neural;
          } else if (value == "tabular") {
            *p = BehaviorMode::tabular;
          } else {
            fail();
          }
        } else if constexpr (std::is_same_v<T, double>) {
          // from_chars for double is incomplete on some toolchains
          std::string tmp(value);
          char* end = nullptr;
          const double v = std::strtod(tmp.c_str(), &end);
          if (end != tmp.c_str() + tmp.size() || tmp.empty()) fail();
          *p = v;
        } else {
          T v{};
          const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
          if (ec != std::errc() || ptr != value.data() + value.size()) fail();
          *p = v;
        }
      },
      ref);
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

Action Action::from_index(int index, int num_relays) {
  if (index < 0 || index > num_relays) {
    throw std::out_of_range("action index " + std::to_string(index) + " outside [0, " +
                            std::to_string(num_relays) + "]");
  }
  return Action(index);
}

std::vector<std::string> validate_config(const SystemConfig& cfg) {
  std::vector<std::string> errors;
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) errors.emplace_back("alpha out of range");
  if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) errors.emplace_back("beta out of range");
  if (!(cfg.gamma >= 0.0)) errors.emplace_back("gamma must be >= 0");
  if (!(cfg.gamma < 1.0)) errors.emplace_back("gamma must be < 1");
  if (!positive_finite(cfg.tau_s)) errors.emplace_back("tau_s must be > 0");
  if (!positive_finite(cfg.bandwidth_hz)) errors.emplace_back("bandwidth_hz must be > 0");
  if (!positive_finite(cfg.tx_power_w)) errors.emplace_back("tx_power_w must be > 0");
  if (!positive_finite(cfg.sample_bits)) errors.emplace_back("sample_bits must be > 0");
  if (!positive_finite(cfg.noise_power_w)) errors.emplace_back("noise_power_w must be > 0");
  if (!positive_finite(cfg.sampling_energy_j)) errors.emplace_back("sampling_energy_j must be > 0");
  if (!positive_finite(cfg.extraction_energy_j)) {
    errors.emplace_back("extraction_energy_j must be > 0");
  }
  if (cfg.num_process_states < 2) errors.emplace_back("num_process_states must be >= 2");
  if (cfg.num_relays < 1) errors.emplace_back("num_relays must be >= 1");
  if (cfg.num_irs_elements < 0) errors.emplace_back("num_irs_elements must be >= 0");
  if (cfg.aos_cap_slots < 1) errors.emplace_back("aos_cap_slots must be >= 1");
  if (!(cfg.reward_weight_aos >= 0.0) || !std::isfinite(cfg.reward_weight_aos)) {
    errors.emplace_back("reward_weight_aos must be >= 0");
  }
  if (!(cfg.reward_weight_energy >= 0.0) || !std::isfinite(cfg.reward_weight_energy)) {
    errors.emplace_back("reward_weight_energy must be >= 0");
  }
  if (!(cfg.rayleigh_scale_direct >= 0.0)) errors.emplace_back("rayleigh_scale_direct must be >= 0");
  if (!(cfg.rayleigh_scale_irs >= 0.0)) errors.emplace_back("rayleigh_scale_irs must be >= 0");
  if (!(cfg.path_loss_sr >= 0.0)) errors.emplace_back("path_loss_sr must be >= 0");
  if (!(cfg.path_loss_rc >= 0.0)) errors.emplace_back("path_loss_rc must be >= 0");
  if (!(cfg.hop1_fraction > 0.0 && cfg.hop1_fraction < 1.0)) {
    errors.emplace_back("hop1_fraction must lie in (0, 1)");
  }
  return errors;
}

std::vector<std::string> validate_training(const TrainingConfig& t) {
  std::vector<std::string> errors;
  if (t.hidden_dim < 1) errors.emplace_back("hidden_dim must be >= 1");
  if (!positive_finite(t.learning_rate)) errors.emplace_back("learning_rate must be > 0");
  if (!(t.support_threshold >= 0.0 && t.support_threshold <= 1.0)) {
    errors.emplace_back("support_threshold must lie in [0, 1]");
  }
  if (!(t.penalty_weight >= 0.0)) errors.emplace_back("penalty_weight must be >= 0");
  if (!(t.margin >= 0.0)) errors.emplace_back("margin must be >= 0");
  if (!(t.cql_alpha >= 0.0)) errors.emplace_back("cql_alpha must be >= 0");
  if (t.target_sync < 1) errors.emplace_back("target_sync must be >= 1");
  if (t.batch_size < 1) errors.emplace_back("batch_size must be >= 1");
  if (t.steps_per_iteration < 1) errors.emplace_back("steps_per_iteration must be >= 1");
  if (t.iterations < 1) errors.emplace_back("iterations must be >= 1");
  if (t.dataset_size < 1) errors.emplace_back("dataset_size must be >= 1");
  if (t.eval_realizations < 1) errors.emplace_back("eval_realizations must be >= 1");
  if (t.eval_episodes < 1) errors.emplace_back("eval_episodes must be >= 1");
  if (t.a2c_window < 1) errors.emplace_back("a2c_window must be >= 1");
  if (!(t.cloning_validation_fraction > 0.0 && t.cloning_validation_fraction < 1.0)) {
    errors.emplace_back("cloning_validation_fraction must lie in (0, 1)");
  }
  return errors;
}

std::vector<std::string> validate_state(const EnvState& s, const SystemConfig& cfg) {
  std::vector<std::string> errors;
  if (s.aos_slots < 1 || s.aos_slots > cfg.aos_cap_slots) errors.emplace_back("aos_slots out of range");
  if (s.gains_sr.size() != cfg.num_relays || s.gains_rc.size() != cfg.num_relays) {
    errors.emplace_back("gain vector length mismatch");
  } else if (!s.gains_sr.allFinite() || !s.gains_rc.allFinite() || (s.gains_sr.array() < 0).any() ||
             (s.gains_rc.array() < 0).any()) {
    errors.emplace_back("gains must be finite and >= 0");
  }
  if (s.association != kNoAssociation && (s.association < 0 || s.association >= cfg.num_relays)) {
    errors.emplace_back("association out of range");
  }
  return errors;
}

bool action_valid(const Action& a, const SystemConfig& cfg) {
  return a.index() >= 0 && a.index() <= cfg.num_relays;
}

double reference_gain(const SystemConfig& cfg) {
  return cfg.noise_power_w / cfg.tx_power_w;
}

double threshold_gain(double deadline_s, const SystemConfig& cfg) {
  const double spectral_efficiency = cfg.sample_bits / (cfg.bandwidth_hz * deadline_s);
  return (std::exp2(spectral_efficiency) - 1.0) * cfg.noise_power_w / cfg.tx_power_w;
}

double hop1_deadline(const SystemConfig& cfg) { return cfg.hop1_fraction * cfg.tau_s; }
double hop2_deadline(const SystemConfig& cfg) { return (1.0 - cfg.hop1_fraction) * cfg.tau_s; }

Eigen::VectorXd encode_state(const EnvState& s, const SystemConfig& cfg) {
  if (const auto errors = validate_state(s, cfg); !errors.empty()) {
    throw std::invalid_argument("encode_state: " + errors.front());
  }
  const int r = cfg.num_relays;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg.feature_dim());
  x(0) = static_cast<double>(s.aos_slots) / cfg.aos_cap_slots;

  const double g_ref = reference_gain(cfg);
  const double scale_sr = std::log1p(threshold_gain(hop1_deadline(cfg), cfg) / g_ref);
  const double scale_rc = std::log1p(threshold_gain(hop2_deadline(cfg), cfg) / g_ref);
  for (int k = 0; k < r; ++k) {
    x(1 + k) = std::log1p(s.gains_sr(k) / g_ref) / scale_sr;
    x(1 + r + k) = std::log1p(s.gains_rc(k) / g_ref) / scale_rc;
  }
  const int slot = s.association == kNoAssociation ? r : s.association;
  x(1 + 2 * r + slot) = 1.0;
  return x;
}

std::uint64_t config_fingerprint(const SystemConfig& cfg) {
  Config c;
  c.system = cfg;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : fields_of(c)) {
    if (!f.physics) continue;
    const std::string line = std::string(f.key) + "=" + format_value(f.ref) + "\n";
    for (const unsigned char ch : line) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

Config parse_config(std::string_view text) {
  Config cfg;
  apply_config_text(cfg, text);
  return cfg;
}

void apply_config_text(Config& cfg, std::string_view text) {
  auto fields = fields_of(cfg);
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return key == f.key; });
    if (it == fields.end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    assign(it->ref, key, value);
  }
}

bool is_config_key(std::string_view key) {
  Config scratch;
  const auto fields = fields_of(scratch);
  return std::any_of(fields.begin(), fields.end(), [&](const Field& f) { return key == f.key; });
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const Config& cfg) {
  Config copy = cfg;
  std::string out;
  for (const auto& f : fields_of(copy)) {
    out += f.key;
    out += " = ";
    out += format_value(f.ref);
    out += '\n';
  }
  return out;
}

std::uint64_t split_seed(std::uint64_t master_seed, std::string_view name, std::uint64_t index) {
  // FNV-1a over the stream name, then splitmix64 finalization of the mix.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = master_seed ^ (h + 0x9e3779b97f4a7c15ULL * (index + 1));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view name, std::uint64_t index)
    : engine_(split_seed(master_seed, name, index)) {}

int RngStream::uniform_int(int n) {
  if (n <= 1) return 0;
  // Lemire's multiply-shift with rejection keeps the draw unbiased.
  const auto range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = (0 - range) % range;
  for (;;) {
    const std::uint64_t x = engine_();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * range;
    if (static_cast<std::uint64_t>(m) >= limit) return static_cast<int>(m >> 64);
  }
}

double RngStream::rayleigh(double scale) {
  return scale * std::sqrt(-2.0 * std::log1p(-uniform()));
}

double RngStream::normal() {
  // Box-Muller; one draw per call keeps streams position-independent.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace ncs
