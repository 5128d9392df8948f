#pragma once

#include "ncs/core.hpp"

#include <Eigen/Core>

namespace ncs {

// Effective power gains of every sensor->relay and relay->controller link for
// one slot.
struct LinkRealization {
  Eigen::VectorXd gains_sr;
  Eigen::VectorXd gains_rc;
};

struct HopBudget {
  double rate_bps = 0.0;
  double tx_time_s = 0.0;
  bool feasible = false;
  double energy_j = 0.0;
};

struct DeliveryOutcome {
  bool delivered = false;
  double sensor_energy_j = 0.0;
};

// One link's gain: path_loss * (a_d + N * a_r)^2 with Rayleigh amplitudes and
// coherent IRS combining.
double draw_link_gain(double path_loss, const SystemConfig& cfg, RngStream& rng);

LinkRealization draw_links(const SystemConfig& cfg, RngStream& rng);

HopBudget hop_budget(double gain, double deadline_s, const SystemConfig& cfg);

DeliveryOutcome two_hop_outcome(const LinkRealization& links, int relay, const SystemConfig& cfg);

// Bits per second per Hertz each hop must sustain.
inline double required_spectral_efficiency(double deadline_s, const SystemConfig& cfg) {
  return cfg.sample_bits / (cfg.bandwidth_hz * deadline_s);
}

}  // namespace ncs
