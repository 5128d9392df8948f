#include "doctest.h"

#include "ncs/agents.hpp"
#include "ncs/env.hpp"

#include <sstream>

using namespace ncs;

namespace {

class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(Action a) : a_(a) {}
  Action act(const EnvState&, RngStream&) const override { return a_; }

 private:
  Action a_;
};

LinkRealization strong_links(const SystemConfig& cfg) {
  return {Eigen::VectorXd::Constant(cfg.num_relays, 10.0 * threshold_gain(hop1_deadline(cfg), cfg)),
          Eigen::VectorXd::Constant(cfg.num_relays, 10.0 * threshold_gain(hop2_deadline(cfg), cfg))};
}

}  // namespace

TEST_SUITE("env") {
  TEST_CASE("reset") {
    SystemConfig cfg;
    NcsEnv env(cfg, 4);
    CHECK(env.state().aos_slots == 50);
    CHECK(env.state().association == kNoAssociation);
    CHECK(env.state().gains_sr.size() == 5);
    const EnvState first = env.state();
    env.step(Action::sample(1));
    env.reset(4);
    CHECK(env.state() == first);
  }

  TEST_CASE("reset draws the process state uniformly") {
    SystemConfig cfg;
    NcsEnv env(cfg, 1);
    std::vector<int> hist(9, 0);
    for (int i = 0; i < 10000; ++i) {
      env.reset(split_seed(77, "reset", static_cast<std::uint64_t>(i)));
      ++hist[static_cast<std::size_t>(env.process_state())];
    }
    for (const int h : hist) CHECK(std::abs(h / 10000.0 - 1.0 / 9) < 0.03);
  }

  TEST_CASE("idle increments aos") {
    SystemConfig cfg;
    cfg.beta = 1.0;
    NcsEnv sure(cfg, 1);
    sure.override_links(strong_links(cfg));
    sure.step(Action::sample(0));
    for (int i = 0; i < 4; ++i) sure.step(Action::idle());
    REQUIRE(sure.state().aos_slots == 5);
    const auto res = sure.step(Action::idle());
    CHECK(res.next.aos_slots == 6);
    CHECK(res.reward == doctest::Approx(-0.6));
    CHECK(res.info.energy_j == 0.0);
    CHECK(res.next.association == 0);
  }

  TEST_CASE("successful sample resets aos") {
    SystemConfig cfg;
    cfg.beta = 1.0;
    NcsEnv env(cfg, 3);
    env.override_links(strong_links(cfg));
    const auto res = env.step(Action::sample(2));
    CHECK(res.info.delivered);
    CHECK(res.info.perfect_inference);
    CHECK(res.next.aos_slots == 1);
    CHECK(res.next.association == 2);
    CHECK(env.last_acknowledged_state().has_value());
  }

  TEST_CASE("aos saturates at the cap and idle costs nothing") {
    SystemConfig cfg;
    const ConstantPolicy idle(Action::idle());
    const auto r = evaluate_policy(cfg, idle, 5000, 2);
    CHECK(r.avg_energy_j == 0.0);
    CHECK(r.avg_aos_s == doctest::Approx(5.0));
    CHECK(r.avg_reward == doctest::Approx(-(r.avg_aos_s + r.avg_energy_j)).epsilon(1e-12));
  }

  TEST_CASE("invalid action leaves state untouched") {
    SystemConfig cfg;
    NcsEnv env(cfg, 1);
    const EnvState before = env.state();
    CHECK_THROWS_AS(env.step(Action::sample(5)), std::out_of_range);
    CHECK(env.state() == before);
  }

  TEST_CASE("always sampling on perfect links keeps aos at one slot") {
    SystemConfig cfg;
    cfg.beta = 1.0;
    NcsEnv env(cfg, 8);
    double total = 0.0;
    const int n = 1000;
    for (int i = 0; i < n; ++i) {
      env.override_links(strong_links(cfg));
      total += env.step(Action::sample(i % 5)).info.aos_seconds;
    }
    CHECK(total / n == doctest::Approx(cfg.tau_s));
  }

  TEST_CASE("step invariants under random play") {
    SystemConfig cfg;
    NcsEnv env(cfg, 21);
    RngStream rng(21, "test.policy");
    for (int i = 0; i < 20000; ++i) {
      const int before = env.state().aos_slots;
      const auto res = env.step(random_act(cfg.num_actions(), rng));
      CHECK(res.reward <= 0.0);
      CHECK(std::isfinite(res.reward));
      if (res.info.perfect_inference) {
        CHECK(res.next.aos_slots == 1);
      } else {
        CHECK(res.next.aos_slots == std::min(before + 1, cfg.aos_cap_slots));
      }
      CHECK(res.info.energy_j <= cfg.sampling_energy_j + cfg.extraction_energy_j + cfg.tx_power_w * cfg.tau_s / 2 + 1e-15);
      CHECK(validate_state(res.next, cfg).empty());
    }
  }

  TEST_CASE("evaluation is deterministic and linear") {
    SystemConfig cfg;
    const RandomPolicy random(cfg.num_actions());
    const auto a = evaluate_policy(cfg, random, 4000, 5);
    const auto b = evaluate_policy(cfg, random, 4000, 5);
    CHECK(a.avg_reward == b.avg_reward);
    CHECK(a.avg_aos_s == b.avg_aos_s);
    CHECK(a.avg_reward == doctest::Approx(-(a.avg_aos_s + a.avg_energy_j)).epsilon(1e-9));
  }

  TEST_CASE("trajectory sink") {
    SystemConfig cfg;
    const RandomPolicy random(cfg.num_actions());
    std::ostringstream os;
    write_trajectory_header(os);
    long rows = 0;
    evaluate_policy(cfg, random, 25, 1, 2, [&](const TrajectoryRecord& rec) {
      write_trajectory_row(os, rec);
      ++rows;
    });
    CHECK(rows == 25);
    CHECK(os.str().rfind("t,action,delivered,perfect_inference,aos_slots,energy_j,reward\n", 0) == 0);
  }
}
