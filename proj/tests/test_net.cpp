#include "doctest.h"

#include "ncs/net.hpp"
#include "support.hpp"

#include <sstream>

using namespace ncs;

TEST_SUITE("net") {
  TEST_CASE("forward on hand-built nets") {
    RngStream rng(1);
    MlpD zero = zeros_like(make_mlp<double>(3, 4, 2, rng));
    CHECK(forward(zero, Eigen::Vector3d(1, -2, 3)).isZero());

    MlpD id;
    id.w1 = Eigen::MatrixXd::Ones(1, 1);
    id.b1 = Eigen::VectorXd::Zero(1);
    id.w2 = Eigen::MatrixXd::Ones(1, 1);
    id.b2 = Eigen::VectorXd::Zero(1);
    CHECK(forward(id, Eigen::VectorXd::Constant(1, 2.0))(0, 0) == 2.0);
    CHECK(forward(id, Eigen::VectorXd::Constant(1, -2.0))(0, 0) == 0.0);
    CHECK_THROWS_AS(forward(id, Eigen::Vector2d(1, 1)), std::invalid_argument);
  }

  TEST_CASE("glorot initialization") {
    RngStream a(4), b(4);
    const MlpD n1 = make_mlp<double>(17, 64, 6, a);
    const MlpD n2 = make_mlp<double>(17, 64, 6, b);
    CHECK(n1 == n2);
    CHECK(n1.w1.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / (17 + 64)));
    CHECK(n1.w2.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / (64 + 6)));
    CHECK(n1.b1.isZero());
  }

  TEST_CASE("gradients match central differences") {
    RngStream rng(2024, "net.gradcheck");
    for (int i = 0; i < 10; ++i) CHECK(testing::gradient_check_error(rng) < 1e-4);
  }

  TEST_CASE("zero upstream, zero gradient; gradient is linear") {
    RngStream rng(3);
    const MlpD net = make_mlp<double>(4, 8, 3, rng);
    Eigen::MatrixXd x1(4, 5), x2(4, 7), u1(3, 5), u2(3, 7);
    for (auto* m : {&x1, &x2, &u1, &u2}) {
      for (auto& v : m->reshaped()) v = rng.normal();
    }
    CHECK(flatten(backward(net, x1, Eigen::MatrixXd::Zero(3, 5))).isZero());
    Eigen::MatrixXd x(4, 12), u(3, 12);
    x << x1, x2;
    u << u1, u2;
    const Eigen::VectorXd joint = flatten(backward(net, x, u));
    const Eigen::VectorXd parts = flatten(backward(net, x1, u1)) + flatten(backward(net, x2, u2));
    CHECK((joint - parts).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("adam first step") {
    MlpD net;
    net.w1 = Eigen::MatrixXd::Constant(1, 1, 0.5);
    net.b1 = Eigen::VectorXd::Zero(1);
    net.w2 = Eigen::MatrixXd::Ones(1, 1);
    net.b2 = Eigen::VectorXd::Zero(1);
    auto opt = make_adam(net, 0.1);
    MlpD grad = zeros_like(net);
    grad.w1(0, 0) = 1.0;
    adam_step(net, grad, opt);
    CHECK(net.w1(0, 0) == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(net.w2(0, 0) == 1.0);

    const MlpD before = net;
    adam_step(net, zeros_like(net), opt);
    CHECK(net.w2 == before.w2);
    CHECK(net.b1 == before.b1);
  }

  TEST_CASE("non-finite gradient leaves parameters untouched") {
    RngStream rng(5);
    MlpD net = make_mlp<double>(2, 3, 1, rng);
    auto opt = make_adam(net, 0.01);
    MlpD grad = zeros_like(net);
    grad.b2(0) = std::numeric_limits<double>::quiet_NaN();
    const MlpD before = net;
    CHECK_THROWS_AS(adam_step(net, grad, opt), NonFiniteGradient);
    CHECK(net == before);
    CHECK(opt.step == 0);
  }

  TEST_CASE("regression loss decreases") {
    RngStream rng(6);
    MlpD net = make_mlp<double>(3, 16, 2, rng);
    auto opt = make_adam(net, 1e-2);
    Eigen::MatrixXd x(3, 32), y(2, 32);
    for (auto& v : x.reshaped()) v = rng.normal();
    for (auto& v : y.reshaped()) v = rng.normal();
    const auto loss = [&] { return (forward(net, x) - y).squaredNorm() / 32; };
    double prev = loss();
    const double start = prev;
    for (int i = 0; i < 100; ++i) {
      adam_step(net, backward(net, x, (2.0 / 32) * (forward(net, x) - y)), opt);
      const double now = loss();
      CHECK(now < prev);
      prev = now;
    }
    CHECK(prev < 0.8 * start);
  }

  TEST_CASE("checkpoint round trip") {
    RngStream rng(7);
    const MlpD net = make_mlp<double>(17, 64, 6, rng);
    std::stringstream buf;
    save_mlp(buf, net);
    CHECK(buf.str().substr(0, 8) == "NCSMLP01");
    CHECK(load_mlp(buf) == net);

    std::string cut = buf.str();
    cut.resize(cut.size() / 2);
    std::stringstream half(cut);
    CHECK_THROWS(load_mlp(half));
  }
}
