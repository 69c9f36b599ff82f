#include "edmloc/eval.hpp"

#include "edmloc/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

namespace edmloc {

using ojson = nlohmann::ordered_json;

namespace {

struct Estimates {
  std::vector<Eigen::VectorXd> points;  // positions or unit directions
  bool shortfall = false;
  bool degenerate = false;
};

Estimates estimate(Method method, const Scenario& sc, const Channels& ch, const ExperimentConfig& cfg, int sources) {
  Estimates e;
  switch (method) {
    case Method::EdmPos: {
      const PositionEstimates r = edm_localize_position(ch, sc.array, sources, cfg.edm_position);
      for (const auto& s : r.sources) {
        e.points.push_back(s.position);
        e.degenerate = e.degenerate || s.degenerate;
      }
      e.shortfall = r.shortfall;
      break;
    }
    case Method::EdmDoa: {
      const DoaEstimates r = edm_localize_doa(ch, sc.array, sources, cfg.edm_doa);
      for (const auto& s : r.sources) e.points.push_back(s.direction);
      e.shortfall = r.shortfall;
      break;
    }
    case Method::SrpPos: {
      const SrpResult r = srp_localize_position(ch, sc.array, sc.config.room, sources, cfg.srp_position);
      for (const auto& s : r.sources) e.points.push_back(s.location);
      e.shortfall = r.shortfall;
      break;
    }
    case Method::SrpDoa: {
      const SrpResult r = srp_localize_doa(ch, sc.array, sources, cfg.srp_doa);
      for (const auto& s : r.sources) e.points.push_back(s.location);
      e.shortfall = r.shortfall;
      break;
    }
  }
  return e;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string scenario_id(double dc1, int run) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "dc%.2f-r%04d", dc1, run);
  return buf;
}

ScenarioConfig scenario_for(const ExperimentConfig& cfg, double dc1) {
  ScenarioConfig sc = cfg.scenario;
  sc.source_distances = {dc1};
  if (cfg.sources == 2) sc.source_distances.push_back(cfg.dc2);
  return sc;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

const char* unit_of(Method m) { return is_position_method(m) ? "cm" : "deg"; }

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::EdmPos: return "edm-pos";
    case Method::SrpPos: return "srp-pos";
    case Method::EdmDoa: return "edm-doa";
    case Method::SrpDoa: return "srp-doa";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::EdmPos, Method::SrpPos, Method::EdmDoa, Method::SrpDoa})
    if (s == to_string(m)) return m;
  throw InvalidArgument("unknown method: " + s);
}

bool is_position_method(Method m) { return m == Method::EdmPos || m == Method::SrpPos; }

std::vector<Pairing> greedy_assign_partial(const std::vector<Eigen::VectorXd>& truth,
                                           const std::vector<Eigen::VectorXd>& estimates, const Metric& metric) {
  const std::size_t nt = truth.size(), ne = estimates.size();
  std::vector<std::vector<double>> cost(nt, std::vector<double>(ne));
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t e = 0; e < ne; ++e) cost[t][e] = metric(truth[t], estimates[e]);

  std::vector<bool> t_used(nt, false), e_used(ne, false);
  std::vector<Pairing> out;
  for (std::size_t k = 0; k < std::min(nt, ne); ++k) {
    int bt = -1, be = -1;
    for (std::size_t t = 0; t < nt; ++t) {
      if (t_used[t]) continue;
      for (std::size_t e = 0; e < ne; ++e)
        if (!e_used[e] && (bt < 0 || cost[t][e] < cost[bt][be])) bt = static_cast<int>(t), be = static_cast<int>(e);
    }
    t_used[bt] = e_used[be] = true;
    out.push_back({bt, be, cost[bt][be]});
  }
  return out;
}

std::vector<Pairing> greedy_assign(const std::vector<Eigen::VectorXd>& truth, const std::vector<Eigen::VectorXd>& estimates,
                                   const Metric& metric) {
  if (truth.size() != estimates.size()) throw InvalidArgument("greedy_assign: list lengths differ");
  return greedy_assign_partial(truth, estimates, metric);
}

double error_pos_cm(const Eigen::VectorXd& p, const Eigen::VectorXd& p_hat) {
  if (p.size() != p_hat.size() || !p.allFinite() || !p_hat.allFinite()) throw InvalidArgument("error_pos_cm: bad input");
  return 100.0 * (p - p_hat).norm();
}

double error_doa_deg(const Eigen::VectorXd& v, const Eigen::VectorXd& v_hat) {
  if (v.size() != v_hat.size() || !v.allFinite() || !v_hat.allFinite()) throw InvalidArgument("error_doa_deg: bad input");
  const double nv = v.norm(), nh = v_hat.norm();
  if (nv == 0.0 || nh == 0.0) throw InvalidArgument("error_doa_deg: zero-norm direction");
  return std::acos(std::clamp(v.dot(v_hat) / (nv * nh), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

double position_sentinel_cm(const Eigen::Vector3d& room) { return 100.0 * room.norm(); }

void ExperimentConfig::validate() const {
  if (schema_version != kReportSchemaVersion) throw InvalidArgument("experiment: unsupported schema_version");
  if (dc1_values.empty()) throw InvalidArgument("experiment: no d_c1 values");
  if (runs < 1) throw InvalidArgument("experiment: runs must be >= 1");
  if (sources != 1 && sources != 2) throw InvalidArgument("experiment: sources must be 1 or 2");
  if (methods.empty()) throw InvalidArgument("experiment: no methods");
  for (double d : dc1_values) scenario_for(*this, d).validate();
}

RunResult run_single(const Scenario& scenario, const Channels& channels, Method method, const ExperimentConfig& cfg) {
  RunResult r;
  r.method = method;
  r.seed = scenario.seed;
  const int sources = static_cast<int>(scenario.sources.cols());
  const bool pos = is_position_method(method);
  const double sentinel = pos ? position_sentinel_cm(scenario.config.room) : kDoaSentinelDeg;
  r.errors.assign(sources, sentinel);

  std::vector<Eigen::VectorXd> truth;
  const TruthOracle oracle = truth_tdoas(scenario);
  for (int s = 0; s < sources; ++s)
    truth.push_back(pos ? Eigen::VectorXd(scenario.sources.col(s)) : Eigen::VectorXd(oracle.directions[s]));

  try {
    const auto t0 = std::chrono::steady_clock::now();
    const Estimates e = estimate(method, scenario, channels, cfg, sources);
    const auto t1 = std::chrono::steady_clock::now();
    r.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    r.shortfall = e.shortfall;
    r.degenerate = e.degenerate;
    const Metric metric = pos ? Metric(error_pos_cm) : Metric(error_doa_deg);
    for (const Pairing& p : greedy_assign_partial(truth, e.points, metric)) r.errors[p.truth] = p.error;
  } catch (const std::exception& ex) {
    r.failed = true;
    r.message = ex.what();
  }
  return r;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;

  const int n_dc = static_cast<int>(cfg.dc1_values.size());
  const int n_methods = static_cast<int>(cfg.methods.size());
  const int jobs = n_dc * cfg.runs;
  report.runs.resize(static_cast<std::size_t>(jobs) * n_methods);

  auto work = [&](int job) {
    const int d = job / cfg.runs, run = job % cfg.runs;
    const double dc1 = cfg.dc1_values[d];
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run);
    const std::string id = scenario_id(dc1, run);
    RunResult* slot = &report.runs[static_cast<std::size_t>(job) * n_methods];
    try {
      const Scenario sc = sample_scenario(scenario_for(cfg, dc1), seed);
      const Channels ch = synthesize(sc, scenario_sources(sc));
      for (int m = 0; m < n_methods; ++m) slot[m] = run_single(sc, ch, cfg.methods[m], cfg);
    } catch (const std::exception& ex) {
      const int s = cfg.sources;
      for (int m = 0; m < n_methods; ++m) {
        slot[m] = RunResult{};
        slot[m].method = cfg.methods[m];
        slot[m].failed = true;
        slot[m].message = ex.what();
        slot[m].errors.assign(s, is_position_method(cfg.methods[m]) ? position_sentinel_cm(cfg.scenario.room) : kDoaSentinelDeg);
      }
    }
    for (int m = 0; m < n_methods; ++m) {
      slot[m].scenario_id = id;
      slot[m].seed = seed;
      slot[m].dc1 = dc1;
    }
  };

  const int threads = std::max(1, std::min(jobs, cfg.threads > 0 ? cfg.threads
                                                                   : static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int job = next++; job < jobs; job = next++) work(job);
    });
  for (auto& t : pool) t.join();

  report.groups = summarize(cfg, report.runs);
  return report;
}

BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  b.count = static_cast<int>(values.size());
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  b.median = quantile_sorted(values, 0.5);
  b.q1 = quantile_sorted(values, 0.25);
  b.q3 = quantile_sorted(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double v : values) {
    if (v < lo || v > hi) {
      ++b.outliers;
      continue;
    }
    b.whisker_low = std::min(b.whisker_low, v);
    b.whisker_high = std::max(b.whisker_high, v);
  }
  return b;
}

std::vector<GroupSummary> summarize(const ExperimentConfig& cfg, const std::vector<RunResult>& runs) {
  std::vector<GroupSummary> out;
  for (double dc1 : cfg.dc1_values)
    for (Method m : cfg.methods) {
      GroupSummary g;
      g.method = m;
      g.dc1 = dc1;
      std::vector<double> errors;
      double runtime = 0.0;
      int timed = 0;
      const double range = is_position_method(m) ? cfg.plot_range_cm : cfg.plot_range_deg;
      for (const RunResult& r : runs) {
        if (r.method != m || r.dc1 != dc1) continue;
        ++g.runs;
        g.shortfall_runs += r.shortfall;
        g.failed_runs += r.failed;
        if (!r.failed) runtime += r.runtime_ms, ++timed;
        for (double e : r.errors) {
          errors.push_back(e);
          g.beyond_plot_range += e > range;
        }
      }
      g.errors = box_stats(std::move(errors));
      g.mean_runtime_ms = timed ? runtime / timed : 0.0;
      out.push_back(g);
    }
  return out;
}

std::string runs_csv(const ExperimentReport& report) {
  std::ostringstream os;
  const int s = report.config.sources;
  os << "scenario_id,seed,d_c1,method,unit";
  for (int i = 1; i <= s; ++i) os << ",error_" << i;
  os << ",shortfall,degenerate,failed\n";
  for (const RunResult& r : report.runs) {
    os << r.scenario_id << ',' << r.seed << ',' << format_number(r.dc1) << ',' << to_string(r.method) << ','
       << unit_of(r.method);
    for (double e : r.errors) os << ',' << format_number(e);
    os << ',' << r.shortfall << ',' << r.degenerate << ',' << r.failed << '\n';
  }
  return os.str();
}

std::string timings_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "scenario_id,method,runtime_ms\n";
  for (const RunResult& r : report.runs)
    os << r.scenario_id << ',' << to_string(r.method) << ',' << format_number(r.runtime_ms) << '\n';
  return os.str();
}

std::string report_json(const ExperimentReport& report) {
  const ExperimentConfig& c = report.config;
  ojson methods = ojson::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  ojson groups = ojson::array();
  for (const GroupSummary& g : report.groups)
    groups.push_back({{"method", to_string(g.method)},
                      {"d_c1", g.dc1},
                      {"unit", unit_of(g.method)},
                      {"runs", g.runs},
                      {"errors", g.errors.count},
                      {"median", g.errors.median},
                      {"q1", g.errors.q1},
                      {"q3", g.errors.q3},
                      {"whisker_low", g.errors.whisker_low},
                      {"whisker_high", g.errors.whisker_high},
                      {"outliers", g.errors.outliers},
                      {"beyond_plot_range", g.beyond_plot_range},
                      {"shortfall_runs", g.shortfall_runs},
                      {"failed_runs", g.failed_runs},
                      {"mean_runtime_ms", g.mean_runtime_ms}});
  ojson j = {{"schema_version", kReportSchemaVersion},
             {"kind", "experiment"},
             {"mode", to_string(c.scenario.mode)},
             {"runs", c.runs},
             {"base_seed", c.base_seed},
             {"sources", c.sources},
             {"d_c1", c.dc1_values},
             {"d_c2", c.dc2},
             {"snr_db", std::isfinite(c.scenario.snr_db) ? ojson(c.scenario.snr_db) : ojson(nullptr)},
             {"reflection_order", c.scenario.reflection_order},
             {"reflection_coeff", c.scenario.reflection_coeff},
             {"methods", methods},
             {"sentinel", {{"position_cm", position_sentinel_cm(c.scenario.room)}, {"doa_deg", kDoaSentinelDeg}}},
             {"plot_range", {{"cm", c.plot_range_cm}, {"deg", c.plot_range_deg}}},
             {"groups", groups}};
  return j.dump(2) + "\n";
}

std::vector<CheckResult> check_report(const ExperimentReport& report) {
  std::map<std::pair<int, double>, double> median;
  for (const GroupSummary& g : report.groups) median[{static_cast<int>(g.method), g.dc1}] = g.errors.median;
  auto find = [&](Method m, double dc1) -> const double* {
    auto it = median.find({static_cast<int>(m), dc1});
    return it == median.end() ? nullptr : &it->second;
  };

  std::vector<CheckResult> out;
  for (double dc1 : report.config.dc1_values) {
    char name[96];
    for (auto [edm, srp] : {std::pair{Method::EdmPos, Method::SrpPos}, std::pair{Method::EdmDoa, Method::SrpDoa}}) {
      const double* e = find(edm, dc1);
      const double* s = find(srp, dc1);
      if (e && s) {
        std::snprintf(name, sizeof name, "%s median <= %s median at d_c1=%g", to_string(edm), to_string(srp), dc1);
        out.push_back({name, *e <= *s, format_number(*e) + " vs " + format_number(*s)});
      }
    }
    if (const double* e = find(Method::EdmPos, dc1); e && std::abs(dc1 - 2.0) < 1e-9 && report.config.dc2 == 2.0) {
      std::snprintf(name, sizeof name, "edm-pos median < 5 cm at d_c1=%g", dc1);
      out.push_back({name, *e < 5.0, format_number(*e) + " cm"});
    }
    if (const double* e = find(Method::EdmDoa, dc1)) {
      std::snprintf(name, sizeof name, "edm-doa median < 4 deg at d_c1=%g", dc1);
      out.push_back({name, *e < 4.0, format_number(*e) + " deg"});
    }
  }
  return out;
}

double BenchReport::ratio(Method slow, Method fast) const {
  double a = std::numeric_limits<double>::quiet_NaN(), b = a;
  for (const BenchEntry& e : entries) {
    if (e.method == slow) a = e.median_ms;
    if (e.method == fast) b = e.median_ms;
  }
  return a / b;
}

BenchReport bench(const BenchConfig& cfg) {
  if (cfg.scenarios < 1 || cfg.repetitions < 5) throw InvalidArgument("bench: need >= 1 scenario and >= 5 repetitions");
  BenchReport report;
  for (Method m : cfg.methods) {
    ScenarioConfig sc = cfg.scenario;
    sc.mode = is_position_method(m) ? ArrayMode::Distributed : ArrayMode::Compact;
    sc.source_distances = {cfg.dc1, 2.0};
    ExperimentConfig pipelines = cfg.pipelines;
    BenchEntry entry;
    entry.method = m;
    entry.repetitions = cfg.repetitions;
    entry.scenarios = cfg.scenarios;
    entry.min_ms = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (int s = 0; s < cfg.scenarios; ++s) {
      const Scenario scenario = sample_scenario(sc, cfg.base_seed + static_cast<std::uint64_t>(s));
      const Channels ch = synthesize(scenario, scenario_sources(scenario));
      const int sources = static_cast<int>(scenario.sources.cols());
      estimate(m, scenario, ch, pipelines, sources);  // warm-up
      std::vector<double> times;
      for (int r = 0; r < cfg.repetitions; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        estimate(m, scenario, ch, pipelines, sources);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      std::sort(times.begin(), times.end());
      entry.min_ms = std::min(entry.min_ms, times.front());
      entry.max_ms = std::max(entry.max_ms, times.back());
      total += quantile_sorted(times, 0.5);
    }
    entry.median_ms = total / cfg.scenarios;
    report.entries.push_back(entry);
  }
  return report;
}

std::string bench_json(const BenchReport& report, const BenchConfig& cfg) {
  ojson entries = ojson::array();
  for (const BenchEntry& e : report.entries)
    entries.push_back({{"method", to_string(e.method)},
                       {"median_ms", e.median_ms},
                       {"min_ms", e.min_ms},
                       {"max_ms", e.max_ms},
                       {"repetitions", e.repetitions},
                       {"scenarios", e.scenarios}});
  ojson ratios = ojson::object();
  auto add_ratio = [&](const char* key, Method slow, Method fast) {
    const double r = report.ratio(slow, fast);
    if (std::isfinite(r)) ratios[key] = r;
  };
  add_ratio("srp_pos_over_edm_pos", Method::SrpPos, Method::EdmPos);
  add_ratio("srp_doa_over_edm_doa", Method::SrpDoa, Method::EdmDoa);
  ojson j = {{"schema_version", kReportSchemaVersion},
             {"kind", "bench"},
             {"d_c1", cfg.dc1},
             {"srp_per_frame", cfg.pipelines.srp_position.options.per_frame},
             {"entries", entries},
             {"ratios", ratios}};
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_from_json(const std::string& text) {
  using json = nlohmann::json;
  try {
    const json j = json::parse(text);
    ExperimentConfig c;
    c.schema_version = j.value("schema_version", 0);
    if (c.schema_version != kReportSchemaVersion) throw InvalidArgument("experiment: unsupported schema_version");
    if (j.contains("scenario")) {
      json sc = j.at("scenario");
      sc["schema_version"] = kScenarioSchemaVersion;
      c.scenario = config_from_json(sc.dump());
    }
    if (j.contains("d_c1")) c.dc1_values = j.at("d_c1").get<std::vector<double>>();
    c.dc2 = j.value("d_c2", c.dc2);
    c.sources = j.value("sources", c.sources);
    c.runs = j.value("runs", c.runs);
    c.base_seed = j.value("base_seed", c.base_seed);
    c.threads = j.value("threads", c.threads);
    c.plot_range_cm = j.value("plot_range_cm", c.plot_range_cm);
    c.plot_range_deg = j.value("plot_range_deg", c.plot_range_deg);
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(method_from_string(m.get<std::string>()));
    }
    const double nu = c.scenario.speed_of_sound;
    for (EdmPipeline* p : {&c.edm_position, &c.edm_doa}) p->speed_of_sound = nu;
    for (SrpPipeline* p : {&c.srp_position, &c.srp_doa}) p->speed_of_sound = nu;
    auto edm = [&](const char* key, EdmPipeline& p) {
      if (!j.contains(key)) return;
      const json& e = j.at(key);
      p.gcc.gamma = e.value("gamma", p.gcc.gamma);
      p.gcc.interp_factor = e.value("interp_factor", p.gcc.interp_factor);
      p.candidates = e.value("candidates", p.candidates);
      p.alpha.max = e.value("alpha_max", p.alpha.max);
      p.alpha.step = e.value("alpha_step", p.alpha.step);
      if (e.contains("min_diff")) p.min_diff = e.at("min_diff").get<int>();
    };
    auto srp = [&](const char* key, SrpPipeline& p) {
      if (!j.contains(key)) return;
      const json& e = j.at(key);
      p.grid.coarse_step = e.value("coarse_step", p.grid.coarse_step);
      p.grid.fine_step = e.value("fine_step", p.grid.fine_step);
      p.grid.fine_half = e.value("fine_half", p.grid.fine_half);
      p.grid.beta = e.value("beta", p.grid.beta);
      p.grid.exclusion = e.value("exclusion", p.grid.exclusion);
      p.options.per_frame = e.value("per_frame", p.options.per_frame);
    };
    edm("edm_position", c.edm_position);
    edm("edm_doa", c.edm_doa);
    srp("srp_position", c.srp_position);
    srp("srp_doa", c.srp_doa);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("experiment config: ") + e.what());
  }
}

}  // namespace edmloc
