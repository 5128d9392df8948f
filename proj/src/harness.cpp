#include "ncs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace ncs {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    value = value.substr(comma + 1);
  }
  return out;
}

double to_double(const std::string& s, std::string_view key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("bad number '" + s + "' for spec key '" + std::string(key) + "'");
  }
  return v;
}

std::vector<double> to_doubles(std::string_view value, std::string_view key) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(to_double(item, key));
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

Config with_value(Config cfg, SweepVariable var, double value) {
  switch (var) {
    case SweepVariable::beta:
      cfg.system.beta = value;
      break;
    case SweepVariable::alpha:
      cfg.system.alpha = value;
      break;
    case SweepVariable::irs_elements:
      cfg.system.num_irs_elements = static_cast<int>(std::lround(value));
      break;
    case SweepVariable::xi:
    case SweepVariable::none:
      break;
  }
  return cfg;
}

bool has_scheme(const ExperimentSpec& spec, const std::string& name) {
  return std::find(spec.schemes.begin(), spec.schemes.end(), name) != spec.schemes.end();
}

}  // namespace

SweepVariable parse_sweep_variable(std::string_view name) {
  if (name == "none") return SweepVariable::none;
  if (name == "beta") return SweepVariable::beta;
  if (name == "alpha") return SweepVariable::alpha;
  if (name == "xi") return SweepVariable::xi;
  if (name == "irs_elements") return SweepVariable::irs_elements;
  throw ConfigError("unknown sweep variable '" + std::string(name) + "'");
}

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::none:
      return "none";
    case SweepVariable::beta:
      return "beta";
    case SweepVariable::alpha:
      return "alpha";
    case SweepVariable::xi:
      return "xi";
    case SweepVariable::irs_elements:
      return "irs_elements";
  }
  return "none";
}

ExperimentSpec parse_experiment_spec(std::string_view text, const Config& base) {
  ExperimentSpec spec;
  spec.base = base;
  std::string overrides;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("spec line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "name") {
      spec.name = std::string(value);
    } else if (key == "kind") {
      if (value == "sweep") {
        spec.kind = ExperimentKind::sweep;
      } else if (value == "convergence") {
        spec.kind = ExperimentKind::convergence;
      } else {
        throw ConfigError("unknown experiment kind '" + std::string(value) + "' (expected sweep|convergence)");
      }
    } else if (key == "schemes") {
      spec.schemes = split_list(value);
    } else if (key == "sweep") {
      spec.sweep = parse_sweep_variable(value);
    } else if (key == "values") {
      spec.values = to_doubles(value, key);
    } else if (key == "xi") {
      spec.xi_grid = to_doubles(value, key);
    } else if (key == "cql_xi") {
      spec.cql_xi_grid = to_doubles(value, key);
    } else if (key == "iterations") {
      spec.iterations = static_cast<int>(to_double(std::string(value), key));
    } else if (key == "eval_realizations") {
      spec.eval_realizations = static_cast<long>(to_double(std::string(value), key));
    } else if (key == "eval_interval") {
      spec.eval_interval = static_cast<int>(to_double(std::string(value), key));
    } else if (key == "jobs") {
      spec.jobs = static_cast<int>(to_double(std::string(value), key));
    } else if (key == "seeds") {
      spec.seeds.clear();
      for (const auto& s : split_list(value)) spec.seeds.push_back(std::stoull(s));
    } else if (is_config_key(key)) {
      overrides.append(line).push_back('\n');
    } else {
      throw ConfigError("spec line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  apply_config_text(spec.base, overrides);
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path, const Config& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment spec '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_spec(buf.str(), base);
}

std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
  std::vector<std::string> errors = validate_config(spec.base.system);
  for (auto& e : validate_training(spec.base.training)) errors.push_back(std::move(e));
  for (const auto& s : spec.schemes) {
    if (s != "proposed" && s != "cql" && s != "a2c" && s != "random") {
      errors.push_back("unknown scheme '" + s + "'");
    }
  }
  if (spec.schemes.empty()) errors.emplace_back("scheme list is empty");
  if (spec.sweep != SweepVariable::none && spec.values.empty()) errors.emplace_back("sweep grid is empty");
  if (spec.xi_grid.empty()) errors.emplace_back("xi grid is empty");
  for (const double xi : spec.xi_grid) {
    if (!(xi >= 0.0 && xi <= 1.0)) errors.emplace_back("xi values must lie in [0, 1]");
  }
  if (spec.sweep == SweepVariable::beta) {
    for (const double b : spec.values) {
      if (!(b > 0.0 && b <= 1.0)) errors.emplace_back("beta grid must lie in (0, 1]");
    }
  }
  if (spec.iterations < 1) errors.emplace_back("iterations must be >= 1");
  if (spec.eval_realizations < 1) errors.emplace_back("eval_realizations must be >= 1");
  if (spec.seeds.empty()) errors.emplace_back("seed set is empty");
  return errors;
}

double student_t_975(int dof) {
  static constexpr double kTable[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                      2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                      2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                      2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof < 1) return std::numeric_limits<double>::infinity();
  if (dof <= 30) return kTable[dof - 1];
  return 1.96 + 2.4 / dof;  // within 0.2% of the exact quantile past 30
}

MeanCi mean_ci95(std::span<const double> samples) {
  MeanCi out;
  if (samples.empty()) return out;
  double sum = 0.0;
  for (const double s : samples) sum += s;
  out.mean = sum / static_cast<double>(samples.size());
  if (samples.size() < 2) return out;
  double ss = 0.0;
  for (const double s : samples) ss += (s - out.mean) * (s - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  out.half_width =
      student_t_975(static_cast<int>(samples.size()) - 1) * sd / std::sqrt(static_cast<double>(samples.size()));
  return out;
}

bool intervals_overlap(const MeanCi& a, const MeanCi& b) {
  return a.mean - a.half_width <= b.mean + b.half_width && b.mean - b.half_width <= a.mean + a.half_width;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string csv_config_header(const Config& cfg, std::string_view title) {
  std::string out = "# ";
  out.append(title);
  out += '\n';
  std::istringstream lines(format_config(cfg));
  for (std::string line; std::getline(lines, line);) out += "# " + line + '\n';
  return out;
}

std::uint64_t eval_seed(std::uint64_t seed) { return split_seed(seed, "harness.eval", 0); }

SourceArtifacts prepare_sources(const Config& cfg, std::uint64_t seed, long eval_realizations) {
  const auto& sys = cfg.system;
  const auto& tc = cfg.training;
  SourceArtifacts out{train_a2c(sys, tc, split_seed(seed, "harness.a2c", 0)), {}, {}, {}, {}};
  const A2cPolicy expert_policy(out.a2c.agent.actor, sys);
  const RandomPolicy random_policy(sys.num_actions());
  out.expert = collect(expert_policy, sys, tc.dataset_size, split_seed(seed, "harness.collect", 0),
                       {SourceKind::expert, 1.0});
  out.random = collect(random_policy, sys, tc.dataset_size, split_seed(seed, "harness.collect", 1),
                       {SourceKind::random, 0.0});
  out.a2c_eval = evaluate_policy(sys, expert_policy, eval_realizations, eval_seed(seed), tc.eval_episodes);
  out.random_eval = evaluate_policy(sys, random_policy, eval_realizations, eval_seed(seed), tc.eval_episodes);
  return out;
}

SchemeRun run_scheme(const ExperienceStore& store, const Config& cfg, Scheme scheme, int iterations,
                     int eval_interval, long eval_realizations, std::uint64_t seed) {
  const auto& sys = cfg.system;
  const auto& tc = cfg.training;
  const FeatureDataset data = featurize(store.records, sys);
  SchemeRun run{scheme == Scheme::proposed
                    ? fit_behavior(data, tc.behavior_mode, tc.support_threshold, tc,
                                   split_seed(seed, "harness.behavior", 0))
                    : BehaviorModel::tabular({}, sys.num_actions(), 0.0),
                {},
                {}};
  const EvalHook hook = [&](const Policy& policy, int) {
    return evaluate_policy(sys, policy, eval_realizations, eval_seed(seed), tc.eval_episodes);
  };
  OfflineTrainOptions options;
  options.scheme = scheme;
  options.iterations = iterations;
  options.steps_per_iteration = tc.steps_per_iteration;
  options.eval_interval = eval_interval;
  options.seed = split_seed(seed, "harness.offline", 0);
  run.train = train_offline(data, run.behavior, sys, tc, options, hook);
  const auto& last = run.train.log.back();
  run.final_eval = {last.avg_reward, last.avg_aos_s, last.avg_energy_j};
  return run;
}

namespace {

void write_curve(const std::string& path, const std::string& header,
                 const std::vector<std::vector<IterationMetrics>>& curves) {
  std::ofstream os(path);
  os << header << "iteration,avg_reward,ci_reward,avg_aos_s,avg_energy_j,td_loss,penalty_loss\n";
  const std::size_t rows = curves.empty() ? 0 : curves.front().size();
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> reward, aos, energy, td, pen;
    for (const auto& c : curves) {
      reward.push_back(c[i].avg_reward);
      aos.push_back(c[i].avg_aos_s);
      energy.push_back(c[i].avg_energy_j);
      td.push_back(c[i].td_loss);
      pen.push_back(c[i].penalty_loss);
    }
    const auto r = mean_ci95(reward);
    os << curves.front()[i].iteration << ',' << fmt(r.mean) << ',' << fmt(r.half_width) << ','
       << fmt(mean_ci95(aos).mean) << ',' << fmt(mean_ci95(energy).mean) << ',' << fmt(mean_ci95(td).mean)
       << ',' << fmt(mean_ci95(pen).mean) << '\n';
  }
}

void write_reference(const std::string& path, const std::string& header,
                     const std::vector<EvalResult>& refs, const std::vector<IterationMetrics>& iterations) {
  std::vector<double> reward, aos, energy;
  for (const auto& r : refs) {
    reward.push_back(r.avg_reward);
    aos.push_back(r.avg_aos_s);
    energy.push_back(r.avg_energy_j);
  }
  const auto r = mean_ci95(reward);
  std::ofstream os(path);
  os << header << "iteration,avg_reward,ci_reward,avg_aos_s,avg_energy_j\n";
  for (const auto& it : iterations) {
    os << it.iteration << ',' << fmt(r.mean) << ',' << fmt(r.half_width) << ',' << fmt(mean_ci95(aos).mean)
       << ',' << fmt(mean_ci95(energy).mean) << '\n';
  }
}

}  // namespace

ConvergenceResult run_convergence(const ExperimentSpec& spec, const std::string& out_dir) {
  if (const auto errors = validate_spec(spec); !errors.empty()) {
    throw ConfigError("invalid experiment spec: " + errors.front());
  }
  const auto n = static_cast<int>(spec.seeds.size());
  ConvergenceResult result;
  result.expert_curves.resize(n);
  result.random_curves.resize(n);
  result.a2c_reference.resize(n);
  result.random_reference.resize(n);
  parallel_for(n, spec.jobs, [&](int i) {
    const auto seed = spec.seeds[static_cast<std::size_t>(i)];
    const auto sources = prepare_sources(spec.base, seed, spec.eval_realizations);
    result.a2c_reference[i] = sources.a2c_eval;
    result.random_reference[i] = sources.random_eval;
    result.expert_curves[i] = run_scheme(sources.expert, spec.base, Scheme::proposed, spec.iterations,
                                         spec.eval_interval, spec.eval_realizations, seed)
                                  .train.log;
    result.random_curves[i] = run_scheme(sources.random, spec.base, Scheme::proposed, spec.iterations,
                                         spec.eval_interval, spec.eval_realizations, seed)
                                  .train.log;
  });

  std::filesystem::create_directories(out_dir);
  const auto base = (std::filesystem::path(out_dir) / spec.name).string();
  const auto header = [&](std::string_view curve) {
    std::ostringstream seeds;
    for (const auto s : spec.seeds) seeds << s << ' ';
    return csv_config_header(spec.base, "experiment " + spec.name + ", curve " + std::string(curve) +
                                            ", seeds " + seeds.str());
  };
  result.files = {base + "_proposed_expert.csv", base + "_proposed_random.csv", base + "_a2c_reference.csv",
                  base + "_random_reference.csv"};
  write_curve(result.files[0], header("proposed on expert data"), result.expert_curves);
  write_curve(result.files[1], header("proposed on random data"), result.random_curves);
  write_reference(result.files[2], header("a2c reference"), result.a2c_reference, result.expert_curves.front());
  write_reference(result.files[3], header("random reference"), result.random_reference,
                  result.expert_curves.front());
  return result;
}

const SweepRow* SweepResult::find(double value, double xi, const std::string& scheme) const {
  for (const auto& row : rows) {
    const bool xi_match = std::isnan(xi) ? std::isnan(row.xi) : std::abs(row.xi - xi) < 1e-12;
    if (row.scheme == scheme && std::abs(row.value - value) < 1e-12 && xi_match) return &row;
  }
  return nullptr;
}

SweepResult run_sweep(const ExperimentSpec& spec, const std::string& out_dir) {
  if (const auto errors = validate_spec(spec); !errors.empty()) {
    throw ConfigError("invalid experiment spec: " + errors.front());
  }
  const std::vector<double> values =
      spec.sweep == SweepVariable::none ? std::vector<double>{std::nan("")} : spec.values;
  const auto n_seeds = static_cast<int>(spec.seeds.size());
  const int n_jobs = static_cast<int>(values.size()) * n_seeds;

  struct Cell {
    double xi;
    std::string scheme;
    EvalResult eval;
  };
  std::vector<std::vector<Cell>> cells(static_cast<std::size_t>(n_jobs));

  parallel_for(n_jobs, spec.jobs, [&](int job) {
    const double value = values[static_cast<std::size_t>(job / n_seeds)];
    const auto seed = spec.seeds[static_cast<std::size_t>(job % n_seeds)];
    const Config cfg = with_value(spec.base, spec.sweep, value);
    std::vector<double> xi_grid = spec.xi_grid;
    std::vector<double> cql_grid = spec.cql_xi_grid.empty() ? spec.xi_grid : spec.cql_xi_grid;
    if (spec.sweep == SweepVariable::xi) xi_grid = cql_grid = {value};

    const auto sources = prepare_sources(cfg, seed, spec.eval_realizations);
    auto& out = cells[static_cast<std::size_t>(job)];
    const double none = std::nan("");
    if (has_scheme(spec, "a2c")) out.push_back({none, "a2c", sources.a2c_eval});
    if (has_scheme(spec, "random")) out.push_back({none, "random", sources.random_eval});
    const auto train = [&](Scheme scheme, double xi) {
      const auto data = mix(sources.expert, sources.random, xi, cfg.training.dataset_size,
                            split_seed(seed, "harness.mix", static_cast<std::uint64_t>(std::lround(xi * 1e6))));
      const auto run = run_scheme(data, cfg, scheme, spec.iterations, spec.iterations, spec.eval_realizations,
                                  seed);
      out.push_back({xi, to_string(scheme), run.final_eval});
    };
    if (has_scheme(spec, "proposed")) {
      for (const double xi : xi_grid) train(Scheme::proposed, xi);
    }
    if (has_scheme(spec, "cql")) {
      for (const double xi : cql_grid) train(Scheme::cql, xi);
    }
  });

  SweepResult result;
  for (std::size_t v = 0; v < values.size(); ++v) {
    const auto& first = cells[v * static_cast<std::size_t>(n_seeds)];
    for (std::size_t c = 0; c < first.size(); ++c) {
      SweepRow row;
      row.value = values[v];
      row.xi = first[c].xi;
      row.scheme = first[c].scheme;
      std::vector<double> aos, energy, reward;
      for (int s = 0; s < n_seeds; ++s) {
        const auto& cell = cells[v * static_cast<std::size_t>(n_seeds) + static_cast<std::size_t>(s)][c];
        row.per_seed.push_back(cell.eval);
        aos.push_back(cell.eval.avg_aos_s);
        energy.push_back(cell.eval.avg_energy_j);
        reward.push_back(cell.eval.avg_reward);
      }
      row.aos = mean_ci95(aos);
      row.energy = mean_ci95(energy);
      row.reward = mean_ci95(reward);
      result.rows.push_back(std::move(row));
    }
  }

  std::filesystem::create_directories(out_dir);
  const auto base = (std::filesystem::path(out_dir) / spec.name).string();
  std::ostringstream seeds;
  for (const auto s : spec.seeds) seeds << s << ' ';
  const std::string header = csv_config_header(
      spec.base, "experiment " + spec.name + ", sweep " + to_string(spec.sweep) + ", seeds " + seeds.str());
  const std::string var = spec.sweep == SweepVariable::none ? "value" : to_string(spec.sweep);
  result.files = {base + "_sweep.csv", base + "_sweep_seeds.csv"};
  {
    std::ofstream os(result.files[0]);
    os << header << var
       << ",xi,scheme,avg_aos_s,avg_energy_j,avg_reward,ci_aos_s,ci_energy_j,ci_reward,num_seeds\n";
    for (const auto& row : result.rows) {
      os << fmt(row.value) << ',' << fmt(row.xi) << ',' << row.scheme << ',' << fmt(row.aos.mean) << ','
         << fmt(row.energy.mean) << ',' << fmt(row.reward.mean) << ',' << fmt(row.aos.half_width) << ','
         << fmt(row.energy.half_width) << ',' << fmt(row.reward.half_width) << ',' << row.per_seed.size()
         << '\n';
    }
  }
  {
    std::ofstream os(result.files[1]);
    os << header << var << ",xi,scheme,seed,avg_aos_s,avg_energy_j,avg_reward\n";
    for (const auto& row : result.rows) {
      for (std::size_t s = 0; s < row.per_seed.size(); ++s) {
        const auto& e = row.per_seed[s];
        os << fmt(row.value) << ',' << fmt(row.xi) << ',' << row.scheme << ',' << spec.seeds[s] << ','
           << fmt(e.avg_aos_s) << ',' << fmt(e.avg_energy_j) << ',' << fmt(e.avg_reward) << '\n';
      }
    }
  }
  return result;
}

CalibrationReport calibrate_links(const SystemConfig& cfg, long samples, std::uint64_t seed) {
  CalibrationReport report;
  report.spectral_efficiency_hop1 = required_spectral_efficiency(hop1_deadline(cfg), cfg);
  report.spectral_efficiency_hop2 = required_spectral_efficiency(hop2_deadline(cfg), cfg);
  report.snr_threshold_hop1 = std::exp2(report.spectral_efficiency_hop1) - 1.0;
  report.snr_threshold_hop2 = std::exp2(report.spectral_efficiency_hop2) - 1.0;

  std::set<int> sizes = {25, 75, cfg.num_irs_elements};
  for (const int n : sizes) {
    SystemConfig c = cfg;
    c.num_irs_elements = n;
    RngStream rng(seed, "calibrate", static_cast<std::uint64_t>(n));
    long single = 0, two = 0, any = 0;
    for (long i = 0; i < samples; ++i) {
      const auto links = draw_links(c, rng);
      if (hop_budget(links.gains_sr(0), hop1_deadline(c), c).feasible) ++single;
      if (two_hop_outcome(links, 0, c).delivered) ++two;
      for (int k = 0; k < c.num_relays; ++k) {
        if (two_hop_outcome(links, k, c).delivered) {
          ++any;
          break;
        }
      }
    }
    const auto frac = [&](long count) { return static_cast<double>(count) / static_cast<double>(samples); };
    report.irs_sizes.push_back(n);
    report.single_hop.push_back(frac(single));
    report.two_hop.push_back(frac(two));
    report.any_relay.push_back(frac(any));
  }
  const auto at25 = std::find(report.irs_sizes.begin(), report.irs_sizes.end(), 25) - report.irs_sizes.begin();
  const double p = report.two_hop[static_cast<std::size_t>(at25)];
  report.in_band = p >= kCalibrationLow && p <= kCalibrationHigh;
  return report;
}

std::string format_calibration(const CalibrationReport& r) {
  std::ostringstream os;
  os.precision(8);
  os << "required spectral efficiency (hop 1): " << r.spectral_efficiency_hop1 << " bits/s/Hz\n"
     << "required spectral efficiency (hop 2): " << r.spectral_efficiency_hop2 << " bits/s/Hz\n"
     << "feasibility SNR threshold (hop 1): " << r.snr_threshold_hop1 << '\n'
     << "feasibility SNR threshold (hop 2): " << r.snr_threshold_hop2 << '\n'
     << "irs_elements,single_hop,two_hop,any_relay\n";
  os.precision(6);
  for (std::size_t i = 0; i < r.irs_sizes.size(); ++i) {
    os << r.irs_sizes[i] << ',' << r.single_hop[i] << ',' << r.two_hop[i] << ',' << r.any_relay[i] << '\n';
  }
  os << "two-hop success at N = 25 " << (r.in_band ? "inside" : "outside") << " [" << kCalibrationLow << ", "
     << kCalibrationHigh << "]\n";
  return os.str();
}

void check_calibration(const CalibrationReport& report, const SystemConfig& cfg) {
  if (report.in_band) return;
  const auto at25 = std::find(report.irs_sizes.begin(), report.irs_sizes.end(), 25) - report.irs_sizes.begin();
  std::ostringstream os;
  os << "link calibration out of band: two-hop success at N = 25 is "
     << report.two_hop[static_cast<std::size_t>(at25)] << ", expected [" << kCalibrationLow << ", "
     << kCalibrationHigh << "]; adjust path_loss_sr (" << cfg.path_loss_sr << "), path_loss_rc ("
     << cfg.path_loss_rc << "), rayleigh_scale_direct (" << cfg.rayleigh_scale_direct
     << ") or rayleigh_scale_irs (" << cfg.rayleigh_scale_irs << ")";
  throw CalibrationError(os.str());
}

}  // namespace ncs
