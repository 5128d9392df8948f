#include "ncs/radio.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ncs {

double draw_link_gain(double path_loss, const SystemConfig& cfg, RngStream& rng) {
  const double direct = rng.rayleigh(cfg.rayleigh_scale_direct);
  const double reflected = rng.rayleigh(cfg.rayleigh_scale_irs);
  const double amplitude = direct + cfg.num_irs_elements * reflected;
  return path_loss * amplitude * amplitude;
}

LinkRealization draw_links(const SystemConfig& cfg, RngStream& rng) {
  LinkRealization links{Eigen::VectorXd(cfg.num_relays), Eigen::VectorXd(cfg.num_relays)};
  for (int k = 0; k < cfg.num_relays; ++k) {
    links.gains_sr(k) = draw_link_gain(cfg.path_loss_sr, cfg, rng);
    links.gains_rc(k) = draw_link_gain(cfg.path_loss_rc, cfg, rng);
  }
  return links;
}

HopBudget hop_budget(double gain, double deadline_s, const SystemConfig& cfg) {
  HopBudget hop;
  hop.rate_bps = cfg.bandwidth_hz * std::log2(1.0 + cfg.tx_power_w * gain / cfg.noise_power_w);
  hop.tx_time_s = hop.rate_bps > 0.0 ? cfg.sample_bits / hop.rate_bps
                                     : std::numeric_limits<double>::infinity();
  hop.feasible = hop.tx_time_s <= deadline_s;
  hop.energy_j = cfg.tx_power_w * std::min(hop.tx_time_s, deadline_s);
  return hop;
}

DeliveryOutcome two_hop_outcome(const LinkRealization& links, int relay, const SystemConfig& cfg) {
  if (relay < 0 || relay >= links.gains_sr.size()) {
    throw std::out_of_range("relay index out of range");
  }
  // Decode-and-forward: the relay only forwards what it fully received.
  const HopBudget first = hop_budget(links.gains_sr(relay), hop1_deadline(cfg), cfg);
  DeliveryOutcome out;
  out.sensor_energy_j = cfg.sampling_energy_j + cfg.extraction_energy_j + first.energy_j;
  if (first.feasible) {
    out.delivered = hop_budget(links.gains_rc(relay), hop2_deadline(cfg), cfg).feasible;
  }
  return out;
}

}  // namespace ncs
