#pragma once

#include "ncs/agents.hpp"
#include "ncs/core.hpp"
#include "ncs/dataset.hpp"
#include "ncs/env.hpp"
#include "ncs/offline.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ncs {

enum class SweepVariable { none, beta, alpha, xi, irs_elements };

SweepVariable parse_sweep_variable(std::string_view name);
std::string to_string(SweepVariable v);

enum class ExperimentKind { sweep, convergence };

struct ExperimentSpec {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::sweep;
  Config base;
  std::vector<std::string> schemes = {"proposed", "cql", "a2c", "random"};
  SweepVariable sweep = SweepVariable::none;
  std::vector<double> values;
  std::vector<double> xi_grid = {0.01, 0.05, 0.25, 1.0};
  std::vector<double> cql_xi_grid;  // empty: same as xi_grid
  int iterations = 800;
  long eval_realizations = 10000;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  // Convergence runs evaluate every eval_interval iterations; sweeps only
  // evaluate the final policy.
  int eval_interval = 1;
  int jobs = 0;  // 0: hardware concurrency
};

// Spec keys: name, kind (sweep|convergence), schemes, sweep, values, xi, cql_xi, iterations,
// eval_realizations, seeds, eval_interval, jobs. Any config key overrides the
// base config.
ExperimentSpec parse_experiment_spec(std::string_view text, const Config& base);
ExperimentSpec load_experiment_spec(const std::string& path, const Config& base);
std::vector<std::string> validate_spec(const ExperimentSpec& spec);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
};

// Two-sided 95% Student-t quantile.
double student_t_975(int dof);
MeanCi mean_ci95(std::span<const double> samples);
bool intervals_overlap(const MeanCi& a, const MeanCi& b);

// Everything the offline learners need for one (config, seed) pair: the
// converged A2C expert, both source datasets and the online references.
struct SourceArtifacts {
  A2cTrainResult a2c;
  ExperienceStore expert;
  ExperienceStore random;
  EvalResult a2c_eval;
  EvalResult random_eval;
};

SourceArtifacts prepare_sources(const Config& cfg, std::uint64_t seed, long eval_realizations);

struct SchemeRun {
  BehaviorModel behavior;
  OfflineTrainResult train;
  EvalResult final_eval;
};

// Featurizes the store, fits the behavior model (proposed only) and trains.
SchemeRun run_scheme(const ExperienceStore& store, const Config& cfg, Scheme scheme, int iterations,
                     int eval_interval, long eval_realizations, std::uint64_t seed);

std::uint64_t eval_seed(std::uint64_t seed);

struct ConvergenceResult {
  std::vector<std::vector<IterationMetrics>> expert_curves;  // per seed
  std::vector<std::vector<IterationMetrics>> random_curves;
  std::vector<EvalResult> a2c_reference;
  std::vector<EvalResult> random_reference;
  std::vector<std::string> files;
};

ConvergenceResult run_convergence(const ExperimentSpec& spec, const std::string& out_dir);

struct SweepRow {
  double value = 0.0;
  double xi = 0.0;  // NaN for the online baselines
  std::string scheme;
  std::vector<EvalResult> per_seed;
  MeanCi aos;
  MeanCi energy;
  MeanCi reward;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> files;

  const SweepRow* find(double value, double xi, const std::string& scheme) const;
};

SweepResult run_sweep(const ExperimentSpec& spec, const std::string& out_dir);

struct CalibrationReport {
  double spectral_efficiency_hop1 = 0.0;
  double spectral_efficiency_hop2 = 0.0;
  double snr_threshold_hop1 = 0.0;
  double snr_threshold_hop2 = 0.0;
  std::vector<int> irs_sizes;
  std::vector<double> single_hop;  // sensor->relay success, per IRS size
  std::vector<double> two_hop;     // fixed relay
  std::vector<double> any_relay;   // at least one relay feasible
  bool in_band = false;
};

inline constexpr double kCalibrationLow = 0.3;
inline constexpr double kCalibrationHigh = 0.9;

// Monte-Carlo delivery probabilities at N = 25, 75 and the configured size.
CalibrationReport calibrate_links(const SystemConfig& cfg, long samples, std::uint64_t seed);
std::string format_calibration(const CalibrationReport& report);

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws CalibrationError naming the scale parameters when the N = 25
// two-hop success probability falls outside [0.3, 0.9].
void check_calibration(const CalibrationReport& report, const SystemConfig& cfg);

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first
// failure.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

std::string csv_config_header(const Config& cfg, std::string_view title);

}  // namespace ncs
