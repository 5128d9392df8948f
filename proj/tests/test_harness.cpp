#include "doctest.h"

#include "ncs/harness.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ncs;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

long data_rows(const std::string& path) {
  std::ifstream in(path);
  long rows = 0;
  bool header = false;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

// Small enough to run a whole experiment in seconds.
ExperimentSpec small_spec(const std::string& name) {
  Config base;
  base.training.a2c_window = 500;
  base.training.a2c_max_steps = 2000;
  base.training.dataset_size = 2000;
  base.training.hidden_dim = 8;
  base.training.batch_size = 32;
  base.training.steps_per_iteration = 5;
  base.training.cloning_max_epochs = 2;
  base.training.eval_episodes = 2;
  std::ostringstream text;
  text << "name = " << name << "\nsweep = beta\nvalues = 0.4, 0.8\nxi = 0.05, 1.0\ncql_xi = 0.25\n"
       << "iterations = 3\neval_realizations = 300\nseeds = 1, 2\n";
  return parse_experiment_spec(text.str(), base);
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("spec parsing") {
    const auto spec = parse_experiment_spec(
        "name = fig\nkind = convergence\nschemes = proposed, cql\nsweep = beta\nvalues = 0.3, 0.5\n"
        "xi = 0.01, 1\niterations = 12\nseeds = 4, 5, 6\nnum_irs_elements = 75\n",
        Config{});
    CHECK(spec.name == "fig");
    CHECK(spec.kind == ExperimentKind::convergence);
    CHECK(spec.schemes == std::vector<std::string>{"proposed", "cql"});
    CHECK(spec.values == std::vector<double>{0.3, 0.5});
    CHECK(spec.iterations == 12);
    CHECK(spec.seeds.size() == 3);
    CHECK(spec.base.system.num_irs_elements == 75);
    CHECK(validate_spec(spec).empty());

    CHECK_THROWS_AS(parse_experiment_spec("sweep = gamma\n", Config{}), ConfigError);
    CHECK_THROWS_AS(parse_experiment_spec("colour = red\n", Config{}), ConfigError);
    auto bad = spec;
    bad.schemes.push_back("ppo");
    bad.values = {0.0};
    CHECK(validate_spec(bad).size() == 2);
  }

  TEST_CASE("student-t intervals") {
    const std::vector<double> xs = {1.0, 2.0, 3.0};
    const auto ci = mean_ci95(xs);
    CHECK(ci.mean == doctest::Approx(2.0));
    CHECK(ci.half_width == doctest::Approx(4.303 / std::sqrt(3.0)));
    CHECK(student_t_975(1) == doctest::Approx(12.706));
    CHECK(intervals_overlap({0.0, 1.0}, {1.5, 0.6}));
    CHECK_FALSE(intervals_overlap({0.0, 1.0}, {2.5, 1.0}));
    const std::vector<double> one = {4.0};
    CHECK(mean_ci95(one).half_width == 0.0);
  }

  TEST_CASE("parallel_for visits every index and rethrows") {
    std::vector<std::atomic<int>> hits(50);
    parallel_for(50, 4, [&](int i) { ++hits[static_cast<std::size_t>(i)]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](int i) {
                                   if (i == 7) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
  }

  TEST_CASE("config header block") {
    const auto header = csv_config_header(Config{}, "title");
    std::istringstream lines(header);
    int n = 0;
    for (std::string line; std::getline(lines, line); ++n) CHECK(line.rfind("# ", 0) == 0);
    CHECK(n > 30);
    CHECK(header.find("# beta = 0.5") != std::string::npos);
  }

  TEST_CASE("calibration") {
    SystemConfig cfg;
    const auto r = calibrate_links(cfg, 20000, 1);
    CHECK(r.spectral_efficiency_hop1 == doctest::Approx(12.4));
    CHECK(r.snr_threshold_hop1 == doctest::Approx(5403.6).epsilon(1e-4));
    REQUIRE(r.irs_sizes == std::vector<int>{25, 75});
    CHECK(r.two_hop[1] >= r.two_hop[0]);
    CHECK(r.in_band);
    CHECK_NOTHROW(check_calibration(r, cfg));
    CHECK(format_calibration(r).find("12.4 bits/s/Hz") != std::string::npos);

    cfg.tx_power_w = 0.0;
    const auto dead = calibrate_links(cfg, 2000, 1);
    CHECK(dead.two_hop[0] == 0.0);
    CHECK(dead.single_hop[1] == 0.0);
    try {
      check_calibration(dead, cfg);
      FAIL("calibration accepted a dead link");
    } catch (const CalibrationError& e) {
      CHECK(std::string(e.what()).find("path_loss_sr") != std::string::npos);
    }
  }

  TEST_CASE("sweep output is complete and reproducible") {
    const auto dir = (std::filesystem::temp_directory_path() / "ncs_harness_test").string();
    std::filesystem::remove_all(dir);
    auto spec = small_spec("tiny");
    spec.jobs = 1;
    const auto first = run_sweep(spec, dir + "/a");
    spec.jobs = 3;
    const auto second = run_sweep(spec, dir + "/b");
    REQUIRE(first.files.size() == 2);
    for (std::size_t i = 0; i < first.files.size(); ++i) {
      CHECK(slurp(first.files[i]) == slurp(second.files[i]));
    }
    // 2 betas x (a2c, random, 2 proposed xi, 1 cql xi)
    CHECK(first.rows.size() == 10);
    CHECK(data_rows(first.files[0]) == 10);
    CHECK(data_rows(first.files[1]) == 20);
    CHECK(slurp(first.files[0]).rfind("# experiment tiny", 0) == 0);
    CHECK(first.find(0.4, 0.05, "proposed") != nullptr);
    CHECK(first.find(0.8, std::nan(""), "a2c") != nullptr);
    CHECK(first.find(0.8, 0.25, "proposed") == nullptr);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("convergence output has one row per iteration") {
    const auto dir = (std::filesystem::temp_directory_path() / "ncs_convergence_test").string();
    auto spec = small_spec("conv");
    spec.iterations = 4;
    spec.seeds = {3};
    const auto res = run_convergence(spec, dir);
    REQUIRE(res.files.size() == 4);
    for (const auto& f : res.files) CHECK(data_rows(f) == 4);
    CHECK(res.expert_curves.front().size() == 4);
    std::filesystem::remove_all(dir);
  }
}
