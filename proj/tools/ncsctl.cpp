#include "ncs/agents.hpp"
#include "ncs/core.hpp"
#include "ncs/dataset.hpp"
#include "ncs/env.hpp"
#include "ncs/harness.hpp"
#include "ncs/offline.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace ncs;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

Config resolve_config(const Globals& g) {
  Config cfg = g.config_path.empty() ? Config{} : load_config(g.config_path);
  if (g.seed) cfg.system.rng_seed = *g.seed;
  auto errors = validate_config(cfg.system);
  for (auto& e : validate_training(cfg.training)) errors.push_back(std::move(e));
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

std::string default_input(const Globals& g, const std::string& given, const std::string& name) {
  return given.empty() ? (fs::path(g.out_dir) / name).string() : given;
}

ExperienceStore load_dataset(const std::string& path, const SystemConfig& cfg, bool force) {
  if (!fs::exists(path)) {
    throw DatasetError(DatasetErrc::io, "dataset '" + path + "' not found; run `ncsctl collect` first");
  }
  return load_store(path, cfg, force);
}

std::string xi_tag(double xi) {
  std::ostringstream os;
  os << xi;
  return os.str();
}

void write_eval_csv(const std::string& path, const Config& cfg, const std::string& label, const EvalResult& r) {
  std::ofstream os(path);
  os << csv_config_header(cfg, "evaluation of " + label);
  os.precision(12);
  os << "policy,avg_reward,avg_aos_s,avg_energy_j\n"
     << label << ',' << r.avg_reward << ',' << r.avg_aos_s << ',' << r.avg_energy_j << '\n';
}

int cmd_calibrate(const Globals& g, long samples) {
  Config cfg = g.config_path.empty() ? Config{} : load_config(g.config_path);
  if (g.seed) cfg.system.rng_seed = *g.seed;
  const auto report = calibrate_links(cfg.system, samples, cfg.system.rng_seed);
  std::cout << format_calibration(report);
  std::ofstream os(out_path(g, "calibration.csv"));
  os << csv_config_header(cfg, "link calibration");
  os.precision(10);
  os << "irs_elements,single_hop,two_hop,any_relay\n";
  for (std::size_t i = 0; i < report.irs_sizes.size(); ++i) {
    os << report.irs_sizes[i] << ',' << report.single_hop[i] << ',' << report.two_hop[i] << ','
       << report.any_relay[i] << '\n';
  }
  check_calibration(report, cfg.system);
  return 0;
}

int cmd_collect(const Globals& g, const std::string& policy, long steps, const std::string& a2c_path) {
  const Config cfg = resolve_config(g);
  const auto seed = cfg.system.rng_seed;
  if (steps <= 0) steps = cfg.training.dataset_size;
  if (policy == "random") {
    const RandomPolicy random_policy(cfg.system.num_actions());
    const auto store = collect(random_policy, cfg.system, steps, split_seed(seed, "harness.collect", 1),
                               {SourceKind::random, 0.0});
    save_store(out_path(g, "random.exp"), store);
    std::cout << "wrote " << store.records.size() << " random transitions to " << out_path(g, "random.exp")
              << '\n';
    return 0;
  }
  MlpD actor;
  if (!a2c_path.empty()) {
    std::ifstream in(a2c_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open a2c checkpoint '" + a2c_path + "'");
    auto [type, nets] = load_agent(in);
    if (type != "a2c" || nets.empty()) throw std::runtime_error("'" + a2c_path + "' is not an a2c checkpoint");
    actor = nets.front();
  } else {
    const auto trained = train_a2c(cfg.system, cfg.training, split_seed(seed, "harness.a2c", 0));
    std::cout << "a2c: " << trained.steps << " steps, "
              << (trained.converged ? "converged" : "step budget exhausted") << '\n';
    std::ofstream os(out_path(g, "a2c.agent"), std::ios::binary);
    save_agent(os, "a2c", {trained.agent.actor, trained.agent.critic});
    actor = trained.agent.actor;
  }
  const A2cPolicy expert_policy(actor, cfg.system);
  const auto store = collect(expert_policy, cfg.system, steps, split_seed(seed, "harness.collect", 0),
                             {SourceKind::expert, 1.0});
  save_store(out_path(g, "expert.exp"), store);
  std::cout << "wrote " << store.records.size() << " expert transitions to " << out_path(g, "expert.exp")
            << '\n';
  return 0;
}

int cmd_mix(const Globals& g, double xi, long size, const std::string& expert_path,
            const std::string& random_path) {
  const Config cfg = resolve_config(g);
  if (!(xi >= 0.0 && xi <= 1.0)) throw ConfigError("--xi must lie in [0, 1]");
  if (size <= 0) size = cfg.training.dataset_size;
  const auto expert = load_dataset(default_input(g, expert_path, "expert.exp"), cfg.system, false);
  const auto random = load_dataset(default_input(g, random_path, "random.exp"), cfg.system, false);
  const auto mixed = mix(expert, random, xi, size,
                         split_seed(cfg.system.rng_seed, "harness.mix", static_cast<std::uint64_t>(xi * 1e6 + 0.5)));
  const auto path = out_path(g, "mixed_xi" + xi_tag(xi) + ".exp");
  save_store(path, mixed);
  std::cout << "wrote " << mixed.records.size() << " transitions to " << path << '\n';
  return 0;
}

int cmd_train(const Globals& g, const std::string& scheme_name, const std::string& data_path, int iterations,
              int eval_interval, long realizations, bool force) {
  Config cfg = resolve_config(g);
  const Scheme scheme = parse_scheme(scheme_name);
  if (iterations <= 0) iterations = cfg.training.iterations;
  if (realizations <= 0) realizations = cfg.training.eval_realizations;
  const auto store = load_dataset(default_input(g, data_path, "expert.exp"), cfg.system, force);
  const auto run = run_scheme(store, cfg, scheme, iterations, eval_interval, realizations, cfg.system.rng_seed);

  const auto name = to_string(scheme);
  {
    std::ofstream os(out_path(g, name + "_metrics.csv"));
    os << csv_config_header(cfg, "offline training, scheme " + name + ", data " + store.header.source.to_string());
    write_metric_header(os);
    for (const auto& m : run.train.log) write_metric_row(os, m);
  }
  {
    std::ofstream os(out_path(g, name + ".agent"), std::ios::binary);
    save_agent(os, name, {run.train.trainer.qnet});
  }
  if (scheme == Scheme::proposed) {
    std::ofstream os(out_path(g, name + ".behavior"), std::ios::binary);
    save_behavior(os, run.behavior);
  }
  std::cout.precision(8);
  std::cout << name << ": avg_reward " << run.final_eval.avg_reward << ", avg_aos_s " << run.final_eval.avg_aos_s
            << ", avg_energy_j " << run.final_eval.avg_energy_j << '\n';
  return 0;
}

int cmd_eval(const Globals& g, const std::string& policy, const std::string& agent_path,
             const std::string& behavior_path, long realizations, const std::string& trajectory_path) {
  const Config cfg = resolve_config(g);
  if (realizations <= 0) realizations = cfg.training.eval_realizations;

  std::unique_ptr<Policy> pol;
  if (policy == "random") {
    pol = std::make_unique<RandomPolicy>(cfg.system.num_actions());
  } else {
    const auto path = default_input(g, agent_path, policy + ".agent");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'; run `ncsctl train` first");
    auto [type, nets] = load_agent(in);
    if (type != policy || nets.empty()) {
      throw std::runtime_error("checkpoint '" + path + "' holds a " + type + " agent, not " + policy);
    }
    if (policy == "a2c") {
      pol = std::make_unique<A2cPolicy>(nets.front(), cfg.system);
    } else if (policy == "proposed") {
      const auto bpath = default_input(g, behavior_path, "proposed.behavior");
      std::ifstream bin(bpath, std::ios::binary);
      if (!bin) throw std::runtime_error("cannot open behavior model '" + bpath + "'");
      pol = std::make_unique<GreedyQPolicy>(constrained_greedy(nets.front(), load_behavior(bin), cfg.system));
    } else {
      pol = std::make_unique<GreedyQPolicy>(greedy_from_q(nets.front(), cfg.system));
    }
  }

  std::ofstream traj;
  TrajectorySink sink;
  if (!trajectory_path.empty()) {
    traj.open(trajectory_path);
    if (!traj) throw std::runtime_error("cannot write trajectory '" + trajectory_path + "'");
    traj << csv_config_header(cfg, "trajectory of " + policy);
    write_trajectory_header(traj);
    sink = [&traj](const TrajectoryRecord& rec) { write_trajectory_row(traj, rec); };
  }
  const auto r = evaluate_policy(cfg.system, *pol, realizations, eval_seed(cfg.system.rng_seed),
                                 cfg.training.eval_episodes, sink);
  write_eval_csv(out_path(g, "eval_" + policy + ".csv"), cfg, policy, r);
  std::cout.precision(8);
  std::cout << policy << ": avg_reward " << r.avg_reward << ", avg_aos_s " << r.avg_aos_s << ", avg_energy_j "
            << r.avg_energy_j << '\n';
  return 0;
}

int cmd_sweep(const Globals& g, const std::string& spec_path, int jobs) {
  const Config base = resolve_config(g);
  auto spec = load_experiment_spec(spec_path, base);
  if (g.seed) spec.seeds = {*g.seed};
  if (jobs >= 0) spec.jobs = jobs;
  std::vector<std::string> files;
  if (spec.kind == ExperimentKind::convergence) {
    files = run_convergence(spec, g.out_dir).files;
  } else {
    files = run_sweep(spec, g.out_dir).files;
  }
  for (const auto& f : files) std::cout << "wrote " << f << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS/relay networked control simulator with offline RL scheduling"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>("--seed", [&g](const std::uint64_t& s) { g.seed = s; },
                                         "master seed");
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();

  long samples = 200000;
  auto* calibrate = app.add_subcommand("calibrate", "Monte-Carlo link delivery probabilities");
  calibrate->add_option("--samples", samples)->capture_default_str();

  std::string policy;
  long steps = 0;
  std::string a2c_path;
  auto* collect_cmd = app.add_subcommand("collect", "roll a policy and store its transitions");
  collect_cmd->add_option("--policy", policy)->required()->check(CLI::IsMember({"expert", "random"}));
  collect_cmd->add_option("--steps", steps, "transitions (default: dataset_size)");
  collect_cmd->add_option("--a2c", a2c_path, "reuse a trained a2c checkpoint");

  double xi = 0.0;
  long size = 0;
  std::string expert_path, random_path;
  auto* mix_cmd = app.add_subcommand("mix", "blend expert and random data");
  mix_cmd->add_option("--xi", xi, "expert fraction")->required();
  mix_cmd->add_option("--size", size, "transitions (default: dataset_size)");
  mix_cmd->add_option("--expert", expert_path);
  mix_cmd->add_option("--random", random_path);

  std::string scheme, data_path;
  int iterations = 0, eval_interval = 1;
  long realizations = 0;
  bool force = false;
  auto* train = app.add_subcommand("train", "offline training from a stored dataset");
  train->add_option("--scheme", scheme)->required()->check(CLI::IsMember({"proposed", "cql"}));
  train->add_option("--data", data_path, "dataset (default: OUT/expert.exp)");
  train->add_option("--iterations", iterations);
  train->add_option("--eval-interval", eval_interval)->capture_default_str();
  train->add_option("--eval-realizations", realizations);
  train->add_flag("--force", force, "skip the config fingerprint check");

  std::string eval_policy = "proposed", agent_path, behavior_path, trajectory_path;
  auto* eval = app.add_subcommand("eval", "evaluate a policy in the simulator");
  eval->add_option("--policy", eval_policy)
      ->check(CLI::IsMember({"proposed", "cql", "a2c", "random"}))
      ->capture_default_str();
  eval->add_option("--agent", agent_path, "checkpoint (default: OUT/<policy>.agent)");
  eval->add_option("--behavior", behavior_path, "behavior model (default: OUT/proposed.behavior)");
  eval->add_option("--realizations", realizations);
  eval->add_option("--trajectory", trajectory_path, "per-slot CSV log");

  std::string spec_path;
  int jobs = -1;
  auto* sweep = app.add_subcommand("sweep", "run an experiment spec");
  sweep->add_option("--spec", spec_path)->required()->check(CLI::ExistingFile);
  sweep->add_option("--jobs", jobs, "worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*calibrate) return cmd_calibrate(g, samples);
    if (*collect_cmd) return cmd_collect(g, policy, steps, a2c_path);
    if (*mix_cmd) return cmd_mix(g, xi, size, expert_path, random_path);
    if (*train) return cmd_train(g, scheme, data_path, iterations, eval_interval, realizations, force);
    if (*eval) return cmd_eval(g, eval_policy, agent_path, behavior_path, realizations, trajectory_path);
    if (*sweep) return cmd_sweep(g, spec_path, jobs);
  } catch (const ConfigError& e) {
    std::cerr << "ConfigError: " << e.what() << '\n';
    return 2;
  } catch (const DatasetError& e) {
    std::cerr << "DatasetError: " << e.what() << '\n';
    return 3;
  } catch (const CalibrationError& e) {
    std::cerr << "CalibrationError: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
