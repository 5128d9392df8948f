#include "ncs/net.hpp"

#include "ncs/binary_io.hpp"

namespace ncs {

namespace {
constexpr char kMlpMagic[9] = "NCSMLP01";

void write_row_major(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) bin::write_le<double>(os, m(i, j));
  }
}

Eigen::MatrixXd read_row_major(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = bin::read_le<double>(is);
  }
  return m;
}
}  // namespace

void save_mlp(std::ostream& os, const MlpD& net) {
  bin::write_magic(os, kMlpMagic);
  bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.input_dim()));
  bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.hidden_dim()));
  bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(net.output_dim()));
  write_row_major(os, net.w1);
  write_row_major(os, net.b1);
  write_row_major(os, net.w2);
  write_row_major(os, net.b2);
}

MlpD load_mlp(std::istream& is) {
  if (!bin::read_magic(is, kMlpMagic)) throw std::runtime_error("load_mlp: bad magic");
  const auto in = bin::read_le<std::uint32_t>(is);
  const auto hidden = bin::read_le<std::uint32_t>(is);
  const auto out = bin::read_le<std::uint32_t>(is);
  if (in == 0 || hidden == 0 || out == 0 || in > (1u << 20) || hidden > (1u << 20) || out > (1u << 20)) {
    throw std::runtime_error("load_mlp: implausible dimensions");
  }
  MlpD net;
  net.w1 = read_row_major(is, hidden, in);
  net.b1 = read_row_major(is, hidden, 1);
  net.w2 = read_row_major(is, out, hidden);
  net.b2 = read_row_major(is, out, 1);
  return net;
}

}  // namespace ncs
