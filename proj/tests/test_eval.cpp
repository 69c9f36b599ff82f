#include "edmloc/errors.hpp"
#include "edmloc/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace edmloc;

namespace {

std::vector<Eigen::VectorXd> pts(std::initializer_list<double> xs) {
  std::vector<Eigen::VectorXd> out;
  for (double x : xs) out.push_back(Eigen::VectorXd::Constant(1, x));
  return out;
}

double abs_metric(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm(); }

// The greedy rule spelled out on a full cost matrix.
std::vector<Pairing> naive_greedy(const std::vector<Eigen::VectorXd>& t, const std::vector<Eigen::VectorXd>& e) {
  std::vector<bool> ut(t.size()), ue(e.size());
  std::vector<Pairing> out;
  for (std::size_t round = 0; round < std::min(t.size(), e.size()); ++round) {
    Pairing best{-1, -1, INFINITY};
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < e.size(); ++j)
        if (!ut[i] && !ue[j] && abs_metric(t[i], e[j]) < best.error)
          best = {static_cast<int>(i), static_cast<int>(j), abs_metric(t[i], e[j])};
    ut[best.truth] = ue[best.estimate] = true;
    out.push_back(best);
  }
  return out;
}

// Type-7 quantile, written independently of the library.
double q7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  return lo + 1 < v.size() ? v[lo] + (h - lo) * (v[lo + 1] - v[lo]) : v[lo];
}

RunResult run(Method m, double dc1, std::vector<double> errors, bool shortfall = false) {
  RunResult r;
  r.method = m;
  r.dc1 = dc1;
  r.errors = std::move(errors);
  r.shortfall = shortfall;
  r.runtime_ms = 1.0;
  return r;
}

}  // namespace

TEST(Greedy, PicksGloballyClosestFirst) {
  // Optimal total would pair 0-0.9 and 1-2.5; greedy takes 1-0.9 first.
  const auto p = greedy_assign(pts({0.0, 1.0}), pts({0.9, 2.5}), abs_metric);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].truth, 1);
  EXPECT_EQ(p[0].estimate, 0);
  EXPECT_NEAR(p[0].error, 0.1, 1e-15);
  EXPECT_EQ(p[1].truth, 0);
  EXPECT_EQ(p[1].estimate, 1);
  EXPECT_NEAR(p[1].error, 2.5, 1e-15);
}

TEST(Greedy, TiesGoToLowerIndices) {
  const auto p = greedy_assign(pts({0.0, 2.0}), pts({1.0, 1.0}), abs_metric);
  EXPECT_EQ(p[0].truth, 0);
  EXPECT_EQ(p[0].estimate, 0);
  EXPECT_EQ(p[1].truth, 1);
  EXPECT_EQ(p[1].estimate, 1);
  EXPECT_THROW(greedy_assign(pts({0.0}), pts({1.0, 2.0}), abs_metric), InvalidArgument);
}

TEST(Greedy, MatchesNaiveRuleAndBoundsOptimum) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int s = 1 + trial % 4;
    std::vector<Eigen::VectorXd> t, e;
    for (int i = 0; i < s; ++i) {
      t.push_back(Eigen::Vector2d(u(rng), u(rng)));
      e.push_back(Eigen::Vector2d(u(rng), u(rng)));
    }
    const auto g = greedy_assign(t, e, abs_metric);
    const auto n = naive_greedy(t, e);
    ASSERT_EQ(g.size(), n.size());
    double total = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_EQ(g[i].truth, n[i].truth);
      EXPECT_EQ(g[i].estimate, n[i].estimate);
      total += g[i].error;
    }
    std::vector<int> perm(s);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
      double sum = 0.0;
      for (int i = 0; i < s; ++i) sum += abs_metric(t[i], e[perm[i]]);
      best = std::min(best, sum);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_GE(total, best - 1e-12);
    // The first greedy pair is always the global minimum entry.
    EXPECT_LE(g[0].error, best + 1e-12);
  }
}

TEST(Greedy, PartialLeavesFarTruthUnpaired) {
  const auto p = greedy_assign_partial(pts({0.0, 5.0, 9.0}), pts({4.8}), abs_metric);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].truth, 1);
}

TEST(Errors, PositionAndAngle) {
  EXPECT_DOUBLE_EQ(error_pos_cm(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3.5)), 50.0);
  EXPECT_NEAR(error_doa_deg(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 3, 0)), 90.0, 1e-12);
  EXPECT_NEAR(error_doa_deg(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(-2, 0, 0)), 180.0, 1e-12);
  EXPECT_NEAR(error_doa_deg(Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(1, 0, 0)), 45.0, 1e-12);
  EXPECT_THROW(error_doa_deg(Eigen::Vector3d::Zero(), Eigen::Vector3d(1, 0, 0)), InvalidArgument);
  EXPECT_THROW(error_pos_cm(Eigen::Vector3d(NAN, 0, 0), Eigen::Vector3d::Zero()), InvalidArgument);
  EXPECT_NEAR(position_sentinel_cm(Eigen::Vector3d(6, 6, 2.4)), 100 * std::sqrt(36 + 36 + 5.76), 1e-9);
}

TEST(BoxStats, MatchesIndependentComputation) {
  std::mt19937_64 rng(2);
  std::lognormal_distribution<double> d(0.0, 1.0);
  for (int n : {1, 2, 5, 10, 101}) {
    std::vector<double> v(n);
    for (double& x : v) x = d(rng);
    const BoxStats b = box_stats(v);
    EXPECT_EQ(b.count, n);
    EXPECT_NEAR(b.median, q7(v, 0.5), 1e-12);
    EXPECT_NEAR(b.q1, q7(v, 0.25), 1e-12);
    EXPECT_NEAR(b.q3, q7(v, 0.75), 1e-12);
    const double iqr = b.q3 - b.q1;
    int outliers = 0;
    double lo = INFINITY, hi = -INFINITY;
    for (double x : v) {
      if (x < b.q1 - 1.5 * iqr || x > b.q3 + 1.5 * iqr) {
        ++outliers;
      } else {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    EXPECT_EQ(b.outliers, outliers);
    EXPECT_DOUBLE_EQ(b.whisker_low, lo);
    EXPECT_DOUBLE_EQ(b.whisker_high, hi);
  }
}

TEST(BoxStats, KnownExampleAndPermutationInvariance) {
  const std::vector<double> v{1, 2, 3, 4, 100};
  const BoxStats b = box_stats(v);
  EXPECT_DOUBLE_EQ(b.median, 3.0);
  EXPECT_DOUBLE_EQ(b.q1, 2.0);
  EXPECT_DOUBLE_EQ(b.q3, 4.0);
  EXPECT_EQ(b.outliers, 1);
  EXPECT_DOUBLE_EQ(b.whisker_high, 4.0);
  const BoxStats c = box_stats({100, 3, 1, 4, 2});
  EXPECT_EQ(c.median, b.median);
  EXPECT_EQ(c.q1, b.q1);
  EXPECT_EQ(box_stats({}).count, 0);
}

TEST(Summaries, GroupsAndChecks) {
  ExperimentConfig cfg;
  cfg.dc1_values = {1.0, 2.0};
  cfg.methods = {Method::EdmPos, Method::SrpPos};
  ExperimentReport rep;
  rep.config = cfg;
  rep.runs = {run(Method::EdmPos, 1.0, {0.5, 1.0}), run(Method::SrpPos, 1.0, {3.0, 80.0}, true),
              run(Method::EdmPos, 2.0, {6.0, 7.0}), run(Method::SrpPos, 2.0, {5.0, 5.0})};
  rep.groups = summarize(cfg, rep.runs);
  ASSERT_EQ(rep.groups.size(), 4u);
  EXPECT_EQ(rep.groups[1].method, Method::SrpPos);
  EXPECT_DOUBLE_EQ(rep.groups[1].errors.median, 41.5);
  EXPECT_EQ(rep.groups[1].beyond_plot_range, 1);
  EXPECT_EQ(rep.groups[1].shortfall_runs, 1);
  const auto checks = check_report(rep);
  // ordering at 1 m and 2 m, plus the 5 cm bound at 2 m
  ASSERT_EQ(checks.size(), 3u);
  EXPECT_TRUE(checks[0].pass);
  EXPECT_FALSE(checks[1].pass);
  EXPECT_FALSE(checks[2].pass);
}

TEST(Csv, HeaderAndRowsWithoutRuntime) {
  ExperimentConfig cfg;
  cfg.dc1_values = {1.0};
  cfg.methods = {Method::EdmDoa};
  ExperimentReport rep;
  rep.config = cfg;
  RunResult r = run(Method::EdmDoa, 1.0, {0.25, 180.0});
  r.scenario_id = "dc1.00-r0000";
  r.seed = 1;
  r.runtime_ms = 12.5;
  rep.runs = {r};
  rep.groups = summarize(cfg, rep.runs);
  const std::string csv = runs_csv(rep);
  EXPECT_EQ(csv,
            "scenario_id,seed,d_c1,method,unit,error_1,error_2,shortfall,degenerate,failed\n"
            "dc1.00-r0000,1,1,edm-doa,deg,0.25,180,0,0,0\n");
  EXPECT_NE(timings_csv(rep).find("12.5"), std::string::npos);
}

TEST(ExperimentJson, ParsesOverrides) {
  const ExperimentConfig c = experiment_from_json(R"({
    "schema_version": 1,
    "scenario": {"mode": "compact", "snr_db": null, "duration": 1.0},
    "d_c1": [1, 4], "runs": 7, "base_seed": 9, "methods": ["edm-doa", "srp-doa"],
    "edm_doa": {"gamma": 10, "candidates": 3, "min_diff": 2},
    "srp_doa": {"beta": 4, "per_frame": true}
  })");
  EXPECT_EQ(c.scenario.mode, ArrayMode::Compact);
  EXPECT_TRUE(std::isinf(c.scenario.snr_db));
  EXPECT_EQ(c.dc1_values, (std::vector<double>{1, 4}));
  EXPECT_EQ(c.runs, 7);
  EXPECT_EQ(c.base_seed, 9u);
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::EdmDoa, Method::SrpDoa}));
  EXPECT_EQ(c.edm_doa.gcc.gamma, 10.0);
  EXPECT_EQ(c.edm_doa.candidates, 3);
  EXPECT_EQ(c.edm_doa.min_diff, 2);
  EXPECT_EQ(c.srp_doa.grid.beta, 4);
  EXPECT_TRUE(c.srp_doa.options.per_frame);
  EXPECT_THROW(experiment_from_json(R"({"runs": 3})"), InvalidArgument);
  EXPECT_THROW(experiment_from_json(R"({"schema_version": 1, "methods": ["music"]})"), InvalidArgument);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::EdmPos, Method::SrpPos, Method::EdmDoa, Method::SrpDoa})
    EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_TRUE(is_position_method(Method::SrpPos));
  EXPECT_FALSE(is_position_method(Method::EdmDoa));
}

TEST(Experiment, TinyRunIsDeterministic) {
  ExperimentConfig cfg;
  cfg.scenario.mode = ArrayMode::Compact;
  cfg.scenario.duration = 0.5;
  cfg.dc1_values = {2.0};
  cfg.runs = 2;
  cfg.methods = {Method::EdmDoa};
  cfg.threads = 1;
  const ExperimentReport a = run_experiment(cfg);
  cfg.threads = 2;
  const ExperimentReport b = run_experiment(cfg);
  ASSERT_EQ(a.runs.size(), 2u);
  EXPECT_EQ(runs_csv(a), runs_csv(b));
  EXPECT_EQ(a.runs[1].seed, 2u);
  EXPECT_EQ(a.runs[0].errors.size(), 2u);
  EXPECT_NE(report_json(a).find("\"schema_version\": 1"), std::string::npos);
}
