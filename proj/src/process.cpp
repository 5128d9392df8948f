#include "ncs/process.hpp"

#include <stdexcept>

namespace ncs {

Eigen::VectorXd transition_row(const ProcessChain& chain, int from) {
  if (chain.num_states < 2) throw std::invalid_argument("process chain needs >= 2 states");
  const double other = (1.0 - chain.alpha) / (chain.num_states - 1);
  Eigen::VectorXd row = Eigen::VectorXd::Constant(chain.num_states, other);
  row(from) = chain.alpha;
  return row;
}

Eigen::MatrixXd transition_matrix(const ProcessChain& chain) {
  Eigen::MatrixXd p(chain.num_states, chain.num_states);
  for (int i = 0; i < chain.num_states; ++i) p.row(i) = transition_row(chain, i).transpose();
  return p;
}

int step_chain(ProcessChain& chain, RngStream& rng) {
  if (rng.uniform() >= chain.alpha) {
    int next = rng.uniform_int(chain.num_states - 1);
    if (next >= chain.current) ++next;
    chain.current = next;
  }
  return chain.current;
}

std::optional<Eigen::VectorXd> stationary_distribution(int num_states, double alpha) {
  if (alpha >= 1.0) return std::nullopt;
  return Eigen::VectorXd::Constant(num_states, 1.0 / num_states);
}

}  // namespace ncs
