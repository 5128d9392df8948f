#include "doctest.h"

#include "ncs/agents.hpp"
#include "ncs/offline.hpp"
#include "support.hpp"

#include <cmath>
#include <sstream>

using namespace ncs;

TEST_SUITE("agents") {
  TEST_CASE("random actions are uniform") {
    RngStream rng(1, "agents.random");
    std::vector<int> hist(6, 0);
    const int n = 600000;
    for (int i = 0; i < n; ++i) ++hist[static_cast<std::size_t>(random_act(6, rng).index())];
    for (const int h : hist) {
      CHECK(h / double(n) >= 0.160);
      CHECK(h / double(n) <= 0.173);
    }
    RngStream one(2);
    for (int i = 0; i < 100; ++i) CHECK(random_act(1, one).is_idle());
  }

  TEST_CASE("random policy is deterministic per seed") {
    const RandomPolicy p(6);
    RngStream a(3), b(3);
    EnvState s;
    for (int i = 0; i < 50; ++i) CHECK(p.act(s, a) == p.act(s, b));
  }

  TEST_CASE("softmax helpers") {
    CHECK(entropy(softmax(Eigen::VectorXd::Zero(6))) == doctest::Approx(std::log(6.0)));
    CHECK(log_sum_exp(Eigen::Vector2d(0, 0)) == doctest::Approx(std::log(2.0)));
    const auto p = softmax(Eigen::Vector3d(1000, 0, -1000));
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.allFinite());
  }

  TEST_CASE("advantage arithmetic") {
    TrainingConfig tc;
    tc.hidden_dim = 1;
    RngStream rng(4);
    A2cAgent agent = make_a2c(1, 2, 0.9, tc, rng);
    // Critic V(x) = x through a single rectifier unit.
    agent.critic.w1 = Eigen::MatrixXd::Ones(1, 1);
    agent.critic.b1 = Eigen::VectorXd::Zero(1);
    agent.critic.w2 = Eigen::MatrixXd::Ones(1, 1);
    agent.critic.b2 = Eigen::VectorXd::Zero(1);
    const auto losses =
        a2c_update(agent, Eigen::VectorXd::Constant(1, 1.0), 0, 1.0, Eigen::VectorXd::Constant(1, 2.0));
    CHECK(losses.advantage == doctest::Approx(1.8));
    CHECK(losses.critic_loss == doctest::Approx(1.8 * 1.8));
  }

  TEST_CASE("actor stays a distribution") {
    SystemConfig cfg;
    TrainingConfig tc;
    RngStream rng(5);
    A2cAgent agent = make_a2c(3, 4, 0.5, tc, rng);
    for (int i = 0; i < 500; ++i) {
      Eigen::VectorXd x(3), xn(3);
      for (auto& v : x) v = rng.normal();
      for (auto& v : xn) v = rng.normal();
      a2c_update(agent, x, rng.uniform_int(4), -rng.uniform(), xn);
      const auto p = softmax(forward(agent.actor, x));
      CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    }
  }

  TEST_CASE("a2c finds the value-iteration optimum on a two-state mdp") {
    const auto mdp = testing::tiny_mdp();
    const double gamma = 0.5;
    const auto oracle = value_iteration(mdp, gamma, 1e-12);
    TrainingConfig tc;
    RngStream rng(6, "a2c.tiny");
    A2cAgent agent = make_a2c(2, 2, gamma, tc, rng);
    const Eigen::MatrixXd eye = testing::one_hot_states(2);
    int s = 0;
    for (int t = 0; t < 50000; ++t) {
      const int a = sample_categorical(softmax(forward(agent.actor, eye.col(s))), rng);
      const int next = rng.uniform() < mdp.transitions[a](s, 0) ? 0 : 1;
      a2c_update(agent, eye.col(s), a, mdp.rewards(s, a), eye.col(next));
      s = next;
    }
    for (int st = 0; st < 2; ++st) {
      Eigen::Index best = 0;
      forward(agent.actor, eye.col(st)).col(0).maxCoeff(&best);
      CHECK(best == oracle.policy(st));
    }
  }

  TEST_CASE("greedy selection") {
    const auto all = ActionMask::Constant(3, true);
    CHECK(greedy_action(Eigen::Vector3d(1, 3, 2), all) == 1);
    CHECK(greedy_action(Eigen::Vector3d(5, 5, 0), all) == 0);
    ActionMask no_first = all;
    no_first(0) = false;
    CHECK(greedy_action(Eigen::Vector3d(9, 1, 1), no_first) == 1);
    CHECK_THROWS_AS(greedy_action(Eigen::Vector3d(1, 2, 3), ActionMask::Constant(3, false)),
                    std::invalid_argument);
    RngStream rng(7);
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd q(6);
      for (auto& v : q) v = rng.normal();
      CHECK(greedy_action(q, ActionMask::Constant(6, true)) ==
            greedy_action(3.7 * q, ActionMask::Constant(6, true)));
    }
  }

  TEST_CASE("agent checkpoint round trip") {
    RngStream rng(8);
    const std::vector<MlpD> nets = {make_mlp<double>(17, 64, 6, rng), make_mlp<double>(17, 64, 1, rng)};
    std::stringstream buf;
    save_agent(buf, "a2c", nets);
    const auto [type, back] = load_agent(buf);
    CHECK(type == "a2c");
    REQUIRE(back.size() == 2);
    CHECK(back[0] == nets[0]);
    CHECK(back[1] == nets[1]);
  }
}
