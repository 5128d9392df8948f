#pragma once

#include "ncs/core.hpp"

#include <Eigen/Core>

#include <optional>

namespace ncs {

// Symmetric finite-state chain: stay with probability alpha, otherwise jump
// uniformly to one of the other states.
struct ProcessChain {
  int num_states = 9;
  double alpha = 0.5;
  int current = 0;

  static ProcessChain from_config(const SystemConfig& cfg, int initial = 0) {
    return ProcessChain{cfg.num_process_states, cfg.alpha, initial};
  }
};

Eigen::VectorXd transition_row(const ProcessChain& chain, int from);
Eigen::MatrixXd transition_matrix(const ProcessChain& chain);

int step_chain(ProcessChain& chain, RngStream& rng);

// Uniform for alpha < 1; nullopt for alpha == 1, where every distribution is
// stationary.
std::optional<Eigen::VectorXd> stationary_distribution(int num_states, double alpha);

}  // namespace ncs
