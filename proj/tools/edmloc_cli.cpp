// edmloc command line: simulate, estimate, eval, bench, dump-curves.

#include "edmloc/eval.hpp"
#include "edmloc/errors.hpp"
#include "edmloc/localize.hpp"
#include "edmloc/sim.hpp"
#include "edmloc/wav.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace edmloc;
using ojson = nlohmann::ordered_json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

ojson vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct SimOpts {
  std::string config, mode = "distributed", wav, truth;
  std::vector<double> distances{2.0, 2.0};
  std::uint64_t seed = 1;
  double snr = 20.0, coeff = 0.5, duration = 5.0;
  int order = 1, mics = 6;
  bool pcm16 = false;
};

struct EstOpts {
  std::string wav, scenario, mode = "position", method = "edm", curves_out, out;
  int sources = 2, candidates = 0, interp = 20, min_diff = -1;
  double gamma = -1.0, alpha_max = 6.0, alpha_step = 0.01, nu = kDefaultSpeedOfSound;
  double coarse_step = 0.0, fine_step = 0.0;
  int beta = 0;
};

EdmPipeline edm_pipeline(const EstOpts& o) {
  EdmPipeline p = o.mode == "doa" ? default_doa_pipeline() : default_position_pipeline();
  if (o.candidates > 0) p.candidates = o.candidates;
  if (o.gamma >= 0.0) p.gcc.gamma = o.gamma;
  p.gcc.interp_factor = o.interp;
  p.alpha.max = o.alpha_max;
  p.alpha.step = o.alpha_step;
  p.speed_of_sound = o.nu;
  if (o.min_diff >= 0) p.min_diff = o.min_diff;
  return p;
}

SrpPipeline srp_pipeline(const EstOpts& o) {
  SrpPipeline p = o.mode == "doa" ? default_srp_doa_pipeline() : default_srp_position_pipeline();
  if (o.coarse_step > 0.0) p.grid.coarse_step = o.coarse_step;
  if (o.fine_step > 0.0) p.grid.fine_step = o.fine_step;
  if (o.beta > 0) p.grid.beta = o.beta;
  p.speed_of_sound = o.nu;
  return p;
}

Channels load_channels(const std::string& wav, const Scenario& sc) {
  WavData w = read_wav(wav);
  if (std::abs(w.sample_rate - sc.config.sample_rate) > 1e-9)
    throw InvalidArgument("sample rate of the WAV file does not match the scenario");
  return std::move(w.channels);
}

int cmd_simulate(const SimOpts& o) {
  ScenarioConfig cfg;
  if (!o.config.empty()) {
    cfg = config_from_json(slurp(o.config));
  } else {
    cfg.mode = array_mode_from_string(o.mode);
    cfg.source_distances = o.distances;
    cfg.snr_db = o.snr;
    cfg.reflection_order = o.order;
    cfg.reflection_coeff = o.coeff;
    cfg.duration = o.duration;
    cfg.mic_count = o.mics;
  }
  const Scenario sc = sample_scenario(cfg, o.seed);
  const Channels ch = synthesize(sc, scenario_sources(sc));
  if (!o.wav.empty()) write_wav(o.wav, ch, cfg.sample_rate, o.pcm16 ? WavFormat::Pcm16 : WavFormat::Float32);
  spill(o.truth, scenario_to_json(sc, truth_tdoas(sc)) + "\n");
  return 0;
}

int cmd_estimate(const EstOpts& o) {
  const Scenario sc = scenario_from_json(slurp(o.scenario));
  const Channels ch = load_channels(o.wav, sc);
  ojson out = {{"mode", o.mode}, {"method", o.method}, {"sources", ojson::array()}};
  if (o.method == "edm" && o.mode == "position") {
    const PositionEstimates r = edm_localize_position(ch, sc.array, o.sources, edm_pipeline(o));
    for (const auto& s : r.sources)
      out["sources"].push_back({{"position", vec(s.position)}, {"alpha", s.alpha_hat}, {"cost", s.cost_min},
                                {"combination", s.combination}, {"degenerate", s.degenerate}});
    out["shortfall"] = r.shortfall;
  } else if (o.method == "edm" && o.mode == "doa") {
    const DoaEstimates r = edm_localize_doa(ch, sc.array, o.sources, edm_pipeline(o));
    for (const auto& s : r.sources)
      out["sources"].push_back({{"direction", vec(s.direction)}, {"azimuth_deg", deg(s.azimuth)},
                                {"elevation_deg", deg(s.elevation)}, {"cost", s.cost}, {"combination", s.combination}});
    out["shortfall"] = r.shortfall;
  } else if (o.method == "srp") {
    const SrpPipeline p = srp_pipeline(o);
    const SrpResult r = o.mode == "doa" ? srp_localize_doa(ch, sc.array, o.sources, p)
                                        : srp_localize_position(ch, sc.array, sc.config.room, o.sources, p);
    for (const auto& s : r.sources) {
      ojson e = {{o.mode == "doa" ? "direction" : "position", vec(s.location)}, {"value", s.value}};
      if (o.mode == "doa") e["azimuth_deg"] = deg(s.azimuth), e["elevation_deg"] = deg(s.elevation);
      out["sources"].push_back(e);
    }
    out["shortfall"] = r.shortfall;
    out["points_evaluated"] = r.points_evaluated;
  } else {
    throw InvalidArgument("unknown method/mode combination");
  }
  spill(o.out, out.dump(2) + "\n");
  return 0;
}

int cmd_eval(const std::string& config, int runs, int threads, const std::string& csv, const std::string& timings,
             const std::string& json_out, bool check) {
  ExperimentConfig cfg = experiment_from_json(slurp(config));
  if (runs > 0) cfg.runs = runs;
  if (threads > 0) cfg.threads = threads;
  const ExperimentReport report = run_experiment(cfg);
  if (!csv.empty()) spill(csv, runs_csv(report));
  if (!timings.empty()) spill(timings, timings_csv(report));
  spill(json_out, report_json(report));
  if (!check) return 0;
  bool ok = true;
  for (const CheckResult& c : check_report(report)) {
    std::fprintf(stderr, "%s %s (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.pass;
  }
  return ok ? 0 : 1;
}

int cmd_bench(BenchConfig cfg, bool per_frame, const std::string& out) {
  cfg.pipelines.srp_position.options.per_frame = per_frame;
  cfg.pipelines.srp_doa.options.per_frame = per_frame;
  const BenchReport r = bench(cfg);
  for (const BenchEntry& e : r.entries)
    std::fprintf(stderr, "%-8s median %10.2f ms  (min %.2f, max %.2f)\n", to_string(e.method), e.median_ms, e.min_ms,
                 e.max_ms);
  spill(out, bench_json(r, cfg));
  return 0;
}

int cmd_dump(const EstOpts& o, const std::string& what) {
  const Scenario sc = scenario_from_json(slurp(o.scenario));
  const Channels ch = load_channels(o.wav, sc);
  std::ostringstream os;
  if (what == "cost") {
    const EdmPipeline p = edm_pipeline(o);
    const CandidateExtraction cand = edm_candidates(ch, sc.array, p);
    os << "q,alpha,J\n";
    std::size_t q = 0;
    for (const Combination& c : enumerate_combinations(cand.set)) {
      const std::vector<double> j = cost_curve(sc.array, cand.set.raw_tdoas(c), p.alpha, p.speed_of_sound);
      for (int i = 0; i < p.alpha.size(); ++i)
        if (std::isfinite(j[i])) os << q << ',' << p.alpha.at(i) << ',' << j[i] << '\n';
      ++q;
    }
  } else if (what == "doa-cost") {
    EstOpts d = o;
    d.mode = "doa";
    const EdmPipeline p = edm_pipeline(d);
    const CandidateExtraction cand = edm_candidates(ch, sc.array, p);
    std::vector<DoaScore> scores = score_doa_combinations(sc.array, cand.set, p.speed_of_sound);
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a].cost < scores[b].cost; });
    os << "rank,q,I\n";
    for (std::size_t r = 0; r < order.size(); ++r) os << r << ',' << order[r] << ',' << scores[order[r]].cost << '\n';
  } else if (what == "gcc") {
    const CandidateExtraction cand = edm_candidates(ch, sc.array, edm_pipeline(o));
    os << "mic,reference,lag_s,value\n";
    for (const GccCurve& c : cand.curves)
      for (int i = 0; i < c.size(); ++i) os << c.mic << ',' << c.reference << ',' << c.seconds(c.lag_of(i)) << ',' << c.values(i) << '\n';
  } else if (what == "srp") {
    SrpPipeline p = srp_pipeline(o);
    p.options.keep_coarse = true;
    const SrpResult r = o.mode == "doa" ? srp_localize_doa(ch, sc.array, o.sources, p)
                                        : srp_localize_position(ch, sc.array, sc.config.room, o.sources, p);
    os << "x,y,z,value\n";
    for (Eigen::Index i = 0; i < r.coarse_points.cols(); ++i)
      os << r.coarse_points(0, i) << ',' << r.coarse_points(1, i) << ',' << r.coarse_points(2, i) << ','
         << r.coarse_values(i) << '\n';
  } else {
    throw InvalidArgument("unknown curve kind: " + what);
  }
  spill(o.out, os.str());
  return 0;
}

void add_estimation_flags(CLI::App* cmd, EstOpts& o) {
  cmd->add_option("--wav", o.wav, "Multichannel WAV file")->required();
  cmd->add_option("--scenario", o.scenario, "Scenario JSON with microphone positions and room")->required();
  cmd->add_option("--mode", o.mode, "position or doa")->check(CLI::IsMember({"position", "doa"}));
  cmd->add_option("--sources", o.sources, "Number of sources S");
  cmd->add_option("--candidates", o.candidates, "Candidate TDOAs per microphone pair");
  cmd->add_option("--gamma", o.gamma, "GCC exponential weighting (0 disables)");
  cmd->add_option("--interp", o.interp, "GCC interpolation factor");
  cmd->add_option("--alpha-max", o.alpha_max, "Upper end of the reference distance search, m");
  cmd->add_option("--alpha-step", o.alpha_step, "Reference distance grid step, m");
  cmd->add_option("--min-diff", o.min_diff, "Entries in which selected combinations must differ");
  cmd->add_option("--speed-of-sound", o.nu, "m/s");
  cmd->add_option("--coarse-step", o.coarse_step, "SRP coarse step (m or deg)");
  cmd->add_option("--fine-step", o.fine_step, "SRP fine step (m or deg)");
  cmd->add_option("--beta", o.beta, "SRP coarse candidates refined");
  cmd->add_option("-o,--out", o.out, "Output file (stdout by default)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EDM-based multi-source localization toolkit"};
  app.require_subcommand(1);

  SimOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Sample a scenario and synthesize microphone signals");
  simulate->add_option("--config", sim.config, "Scenario config JSON (overrides the flags below)");
  simulate->add_option("--mode", sim.mode)->check(CLI::IsMember({"distributed", "compact"}));
  simulate->add_option("--distances", sim.distances, "Source distances from the array centroid, m")->delimiter(',');
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--snr", sim.snr, "dB");
  simulate->add_option("--order", sim.order, "Image source order");
  simulate->add_option("--reflection", sim.coeff, "Wall reflection coefficient");
  simulate->add_option("--duration", sim.duration, "s");
  simulate->add_option("--mics", sim.mics);
  simulate->add_option("--wav", sim.wav, "Write the channels to this WAV file");
  simulate->add_flag("--pcm16", sim.pcm16, "16-bit PCM instead of 32-bit float");
  simulate->add_option("--truth", sim.truth, "Scenario/truth JSON (stdout by default)");

  EstOpts est;
  auto* estimate = app.add_subcommand("estimate", "Localize sources in a recording");
  add_estimation_flags(estimate, est);
  estimate->add_option("--method", est.method)->check(CLI::IsMember({"edm", "srp"}));

  std::string eval_config, csv, timings, json_out;
  int runs = 0, threads = 0;
  bool check = false;
  auto* eval = app.add_subcommand("eval", "Run a batch experiment");
  eval->add_option("--config", eval_config, "Experiment config JSON")->required();
  eval->add_option("--runs", runs, "Override the number of scenarios per distance");
  eval->add_option("--threads", threads);
  eval->add_option("--csv", csv, "Per-run CSV");
  eval->add_option("--timings", timings, "Per-run runtime CSV");
  eval->add_option("--json", json_out, "Aggregate JSON (stdout by default)");
  eval->add_flag("--check", check, "Exit nonzero if an accuracy/ordering check fails");

  BenchConfig bcfg;
  bool per_frame = false;
  std::string bench_out;
  std::vector<std::string> bench_methods;
  auto* benchcmd = app.add_subcommand("bench", "Time the estimators on a fixed scenario set");
  benchcmd->add_option("--scenarios", bcfg.scenarios);
  benchcmd->add_option("--reps", bcfg.repetitions, ">= 5");
  benchcmd->add_option("--seed", bcfg.base_seed);
  benchcmd->add_option("--dc1", bcfg.dc1);
  benchcmd->add_option("--methods", bench_methods, "Methods to time (comma separated)")->delimiter(',');
  benchcmd->add_flag("--per-frame", per_frame, "Evaluate SRP frame by frame instead of on averaged spectra");
  benchcmd->add_option("-o,--out", bench_out);

  EstOpts dump;
  std::string what = "cost";
  auto* dumpcmd = app.add_subcommand("dump-curves", "Write cost, GCC or SRP curves as CSV");
  add_estimation_flags(dumpcmd, dump);
  dumpcmd->add_option("--what", what, "cost, doa-cost, gcc or srp")
      ->check(CLI::IsMember({"cost", "doa-cost", "gcc", "srp"}));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return cmd_simulate(sim);
    if (*estimate) return cmd_estimate(est);
    if (*eval) return cmd_eval(eval_config, runs, threads, csv, timings, json_out, check);
    if (*benchcmd) {
      if (!bench_methods.empty()) {
        bcfg.methods.clear();
        for (const auto& m : bench_methods) bcfg.methods.push_back(method_from_string(m));
      }
      return cmd_bench(bcfg, per_frame, bench_out);
    }
    if (*dumpcmd) return cmd_dump(dump, what);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
