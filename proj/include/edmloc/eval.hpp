#pragma once

// Batch evaluation: scenario sweeps, greedy-assigned errors, box statistics,
// runtime benchmarks and the report files they produce.

#include "edmloc/localize.hpp"
#include "edmloc/sim.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace edmloc {

enum class Method { EdmPos, SrpPos, EdmDoa, SrpDoa };

const char* to_string(Method m);
Method method_from_string(const std::string& s);
bool is_position_method(Method m);

inline constexpr int kReportSchemaVersion = 1;

struct Pairing {
  int truth = 0;
  int estimate = 0;
  double error = 0.0;
};

using Metric = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

/// Repeatedly pairs the globally closest unpaired (truth, estimate). Ties go to
/// the lower truth index, then the lower estimate index. Lists must have equal length.
std::vector<Pairing> greedy_assign(const std::vector<Eigen::VectorXd>& truth, const std::vector<Eigen::VectorXd>& estimates,
                                   const Metric& metric);

/// Same rule when there are fewer estimates than truths; unpaired truths are left out.
std::vector<Pairing> greedy_assign_partial(const std::vector<Eigen::VectorXd>& truth,
                                           const std::vector<Eigen::VectorXd>& estimates, const Metric& metric);

double error_pos_cm(const Eigen::VectorXd& p, const Eigen::VectorXd& p_hat);
double error_doa_deg(const Eigen::VectorXd& v, const Eigen::VectorXd& v_hat);

struct ExperimentConfig {
  int schema_version = kReportSchemaVersion;
  ScenarioConfig scenario;          // source_distances is overwritten per run
  std::vector<double> dc1_values{1.0, 2.0, 3.0};
  double dc2 = 2.0;
  int sources = 2;                  // 1: only the d_c1 source; 2: plus one at dc2
  int runs = 100;
  std::uint64_t base_seed = 1;
  std::vector<Method> methods{Method::EdmPos, Method::SrpPos};
  int threads = 0;                  // 0 = hardware concurrency
  EdmPipeline edm_position = default_position_pipeline();
  EdmPipeline edm_doa = default_doa_pipeline();
  SrpPipeline srp_position = default_srp_position_pipeline();
  SrpPipeline srp_doa = default_srp_doa_pipeline();
  double plot_range_cm = 50.0;      // errors above are counted separately, like off-axis points
  double plot_range_deg = 30.0;

  void validate() const;
};

/// Parses the experiment config file (JSON, schema_version required).
ExperimentConfig experiment_from_json(const std::string& text);

struct RunResult {
  std::string scenario_id;
  std::uint64_t seed = 0;
  double dc1 = 0.0;
  Method method = Method::EdmPos;
  std::vector<double> errors;  // per true source: cm or degrees, sentinel when unmatched
  double runtime_ms = 0.0;
  bool shortfall = false;
  bool degenerate = false;
  bool failed = false;
  std::string message;
};

struct BoxStats {
  int count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  int outliers = 0;  // outside the 1.5 IQR whiskers
};

/// Tukey box statistics; quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::vector<double> values);

struct GroupSummary {
  Method method = Method::EdmPos;
  double dc1 = 0.0;
  int runs = 0;
  BoxStats errors;
  int beyond_plot_range = 0;
  int shortfall_runs = 0;
  int failed_runs = 0;
  double mean_runtime_ms = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RunResult> runs;  // ordered by (dc1, run, method), independent of threading
  std::vector<GroupSummary> groups;
};

/// Sentinel errors for a missing estimate.
double position_sentinel_cm(const Eigen::Vector3d& room);
inline constexpr double kDoaSentinelDeg = 180.0;

/// Runs one scenario through one method.
RunResult run_single(const Scenario& scenario, const Channels& channels, Method method, const ExperimentConfig& cfg);

ExperimentReport run_experiment(const ExperimentConfig& cfg);
std::vector<GroupSummary> summarize(const ExperimentConfig& cfg, const std::vector<RunResult>& runs);

/// One row per run; runtimes are left out so the file is reproducible.
std::string runs_csv(const ExperimentReport& report);
std::string timings_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Accuracy and ordering checks on a report: EDM median at most the SRP
/// median for every distance, EDM position median below 5 cm at 2 m, EDM DOA
/// median below 4 degrees.
std::vector<CheckResult> check_report(const ExperimentReport& report);

struct BenchConfig {
  int scenarios = 3;
  int repetitions = 5;
  std::uint64_t base_seed = 1000;
  double dc1 = 2.0;
  std::vector<Method> methods{Method::EdmPos, Method::SrpPos, Method::EdmDoa, Method::SrpDoa};
  ScenarioConfig scenario;  // mode is set per method
  ExperimentConfig pipelines;
};

struct BenchEntry {
  Method method = Method::EdmPos;
  double median_ms = 0.0;  // mean over scenarios of the per-scenario median
  double min_ms = 0.0;
  double max_ms = 0.0;
  int repetitions = 0;
  int scenarios = 0;
};

struct BenchReport {
  std::vector<BenchEntry> entries;
  double ratio(Method slow, Method fast) const;
};

/// Warm-up run discarded, then `repetitions` timed runs per scenario; single threaded.
BenchReport bench(const BenchConfig& cfg);
std::string bench_json(const BenchReport& report, const BenchConfig& cfg);

}  // namespace edmloc
