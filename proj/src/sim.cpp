#include "edmloc/sim.hpp"

#include "edmloc/errors.hpp"
#include "fft.hpp"
#include "rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace edmloc {

using detail::Rng;
using json = nlohmann::json;

namespace {

constexpr int kMaxAttempts = 10000;
constexpr int kTaps = 64;
constexpr double kKaiserBeta = 8.0;
constexpr double kGainFloor = 0.1;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (salt * 0x9E3779B97F4A7C15ULL);
  return detail::splitmix64(s);
}

bool inside(const Eigen::Vector3d& p, const Eigen::Vector3d& room, double margin) {
  return (p.array() >= margin).all() && (p.array() <= room.array() - margin).all();
}

Eigen::Vector3d random_direction(Rng& rng) {
  Eigen::Vector3d u;
  do u = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  while (u.norm() < 1e-12);
  return u.normalized();
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Spectral shaping of white Gaussian noise: amplitude 1/sqrt(f) above low_hz.
std::vector<double> pink_noise(int n, Rng& rng, double sample_rate, double low_hz) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  std::vector<std::complex<double>> spec(n / 2 + 1);
  const detail::RealForwardFft fwd(n);
  fwd(x.data(), spec.data());
  for (int k = 0; k <= n / 2; ++k) {
    const double f = k * sample_rate / n;
    spec[k] *= (k == 0 || f < low_hz) ? 0.0 : 1.0 / std::sqrt(f);
  }
  const detail::RealInverseFft inv(n);
  inv(spec.data(), x.data());
  return x;
}

double mean_power(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return x.empty() ? 0.0 : p / static_cast<double>(x.size());
}

}  // namespace

const char* to_string(ArrayMode mode) { return mode == ArrayMode::Distributed ? "distributed" : "compact"; }

ArrayMode array_mode_from_string(const std::string& s) {
  if (s == "distributed") return ArrayMode::Distributed;
  if (s == "compact") return ArrayMode::Compact;
  throw InvalidArgument("unknown array mode: " + s);
}

int ScenarioConfig::samples() const { return static_cast<int>(std::lround(duration * sample_rate)); }

void ScenarioConfig::validate() const {
  if (schema_version != kScenarioSchemaVersion) throw InvalidArgument("ScenarioConfig: unsupported schema version");
  if (!(room.minCoeff() > 0.0) || !room.allFinite()) throw InvalidArgument("ScenarioConfig: room dimensions must be positive");
  if (mic_count < 4) throw InvalidArgument("ScenarioConfig: need at least four microphones");
  if (source_distances.empty()) throw InvalidArgument("ScenarioConfig: need at least one source");
  for (double d : source_distances)
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("ScenarioConfig: source distances must be non-negative");
  if (std::isnan(snr_db)) throw InvalidArgument("ScenarioConfig: SNR is NaN");
  if (reflection_order < 0 || reflection_order > 3) throw InvalidArgument("ScenarioConfig: reflection order must be in [0, 3]");
  if (!(reflection_coeff >= 0.0 && reflection_coeff < 1.0)) throw InvalidArgument("ScenarioConfig: reflection coefficient must be in [0, 1)");
  if (!(sample_rate > 0.0) || !(duration > 0.0) || !(speed_of_sound > 0.0))
    throw InvalidArgument("ScenarioConfig: sample rate, duration and speed of sound must be positive");
  if (samples() < kTaps) throw InvalidArgument("ScenarioConfig: signal too short");
  if ((array_cube() + 2.0 * wall_margin > room.array()).any()) throw InvalidArgument("ScenarioConfig: array cube does not fit the room");
}

Scenario sample_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed, 1);
  const Eigen::Vector3d center = cfg.room / 2.0;
  const double half = cfg.array_cube() / 2.0;
  const double min_angle = cfg.min_source_angle_deg * std::numbers::pi / 180.0;

  int attempts = 0;
  while (attempts < kMaxAttempts) {
    Eigen::Matrix3Xd mics(3, cfg.mic_count);
    bool ok = true;
    for (int m = 0; m < cfg.mic_count && ok; ++m) {
      bool placed = false;
      while (!placed && attempts < kMaxAttempts) {
        ++attempts;
        const Eigen::Vector3d p =
            center + Eigen::Vector3d(rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half));
        placed = true;
        for (int j = 0; j < m; ++j)
          if ((mics.col(j) - p).norm() < cfg.min_mic_spacing()) placed = false;
        if (placed) mics.col(m) = p;
      }
      ok = placed;
    }
    if (!ok) break;

    const MicArray array = MicArray::from_absolute(mics);
    const Eigen::Vector3d centroid = array.offset();
    Eigen::Matrix3Xd sources(3, cfg.source_distances.size());
    std::vector<Eigen::Vector3d> dirs;
    for (std::size_t s = 0; s < cfg.source_distances.size() && ok; ++s) {
      const double d = cfg.source_distances[s];
      bool placed = false;
      for (int tries = 0; tries < 200 && !placed && attempts < kMaxAttempts; ++tries) {
        ++attempts;
        const Eigen::Vector3d u = random_direction(rng);
        const Eigen::Vector3d p = centroid + d * u;
        if (!inside(p, cfg.room, cfg.wall_margin)) continue;
        placed = true;
        for (std::size_t j = 0; j < s && placed; ++j) {
          if ((sources.col(j) - p).norm() < cfg.min_source_distance) placed = false;
          const bool has_direction = d > 1e-9 && cfg.source_distances[j] > 1e-9;
          if (has_direction && std::acos(std::clamp(u.dot(dirs[j]), -1.0, 1.0)) < min_angle) placed = false;
        }
        if (placed) {
          sources.col(s) = p;
          dirs.push_back(u);
        }
      }
      ok = placed;
    }
    if (ok) return Scenario{cfg, seed, array, sources};
  }
  throw InfeasibleConfig("sample_scenario: constraints not met within the retry budget");
}

std::vector<double> speech_like_source(std::uint64_t seed, double duration, double sample_rate) {
  if (!(duration > 0.0) || !(sample_rate > 0.0)) throw InvalidArgument("speech_like_source: bad duration or rate");
  const int n = static_cast<int>(std::lround(duration * sample_rate));
  Rng rng(seed, 2);
  std::vector<double> x = pink_noise(n, rng, sample_rate, 50.0);

  constexpr double kSyllableRate = 4.0;
  const double phase = rng.uniform();
  const int syllables = static_cast<int>(std::ceil(duration * kSyllableRate + phase)) + 1;
  std::vector<double> amp(syllables);
  for (double& a : amp) a = rng.uniform(0.4, 1.0);
  for (int i = 0; i < n; ++i) {
    const double u = kSyllableRate * i / sample_rate + phase;
    const double s = std::sin(std::numbers::pi * u);
    x[i] *= 0.05 + amp[static_cast<int>(u)] * s * s;
  }
  const double rms = std::sqrt(mean_power(x));
  for (double& v : x) v /= rms;
  return x;
}

std::vector<double> fractional_delay_kernel(double frac) {
  std::vector<double> h(kTaps);
  const double half = kTaps / 2.0;
  const double norm = std::cyl_bessel_i(0.0, kKaiserBeta);
  for (int t = 0; t < kTaps; ++t) {
    const double x = (t - (kTaps / 2 - 1)) - frac;
    const double r = x / half;
    const double w = std::abs(r) >= 1.0 ? 0.0 : std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / norm;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    h[t] = w * sinc;
  }
  return h;
}

std::vector<double> room_impulse_response(const ScenarioConfig& cfg, const Eigen::Vector3d& source,
                                          const Eigen::Vector3d& mic) {
  if (!inside(source, cfg.room, 0.0)) throw InvalidArgument("room_impulse_response: source outside the room");
  struct Tap {
    double delay, gain;
  };
  std::vector<Tap> taps;
  const int order = cfg.reflection_order;
  for (int nx = -order; nx <= order; ++nx)
    for (int ny = -order; ny <= order; ++ny)
      for (int nz = -order; nz <= order; ++nz)
        for (int q = 0; q < 8; ++q) {
          const int n[3] = {nx, ny, nz};
          const int qq[3] = {q & 1, (q >> 1) & 1, (q >> 2) & 1};
          int reflections = 0;
          Eigen::Vector3d image;
          for (int a = 0; a < 3; ++a) {
            image(a) = (1 - 2 * qq[a]) * source(a) + 2.0 * n[a] * cfg.room(a);
            reflections += std::abs(n[a] - qq[a]) + std::abs(n[a]);
          }
          if (reflections > order) continue;
          const double dist = (image - mic).norm();
          taps.push_back({dist / cfg.speed_of_sound * cfg.sample_rate,
                          std::pow(cfg.reflection_coeff, reflections) / std::max(dist, kGainFloor)});
        }

  double max_delay = 0.0;
  for (const Tap& t : taps) max_delay = std::max(max_delay, t.delay);
  std::vector<double> rir(static_cast<std::size_t>(std::ceil(max_delay)) + kRirLead + kTaps + 1, 0.0);
  for (const Tap& t : taps) {
    const double whole = std::floor(t.delay);
    const std::vector<double> h = fractional_delay_kernel(t.delay - whole);
    const int base = kRirLead + static_cast<int>(whole) - (kTaps / 2 - 1);
    for (int k = 0; k < kTaps; ++k) rir[base + k] += t.gain * h[k];
  }
  return rir;
}

Channels render_clean(const Scenario& scenario, const std::vector<std::vector<double>>& source_signals) {
  const ScenarioConfig& cfg = scenario.config;
  const int n = cfg.samples();
  if (source_signals.size() != static_cast<std::size_t>(scenario.sources.cols()))
    throw InvalidArgument("render_clean: one signal per source required");
  for (const auto& s : source_signals)
    if (static_cast<int>(s.size()) != n) throw InvalidArgument("render_clean: signal length must be duration * f_s");

  const int mics = scenario.array.count();
  std::vector<std::vector<std::vector<double>>> rirs(source_signals.size());
  std::size_t longest = 0;
  for (std::size_t s = 0; s < source_signals.size(); ++s)
    for (int m = 0; m < mics; ++m) {
      rirs[s].push_back(room_impulse_response(cfg, scenario.sources.col(s), scenario.array.absolute(m)));
      longest = std::max(longest, rirs[s].back().size());
    }

  const int nfft = next_pow2(n + static_cast<int>(longest));
  const int bins = nfft / 2 + 1;
  const detail::RealForwardFft fwd(nfft);
  const detail::RealInverseFft inv(nfft);
  std::vector<double> buf(nfft);

  std::vector<std::vector<std::complex<double>>> x_spec(source_signals.size(), std::vector<std::complex<double>>(bins));
  for (std::size_t s = 0; s < source_signals.size(); ++s) {
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(source_signals[s].begin(), source_signals[s].end(), buf.begin());
    fwd(buf.data(), x_spec[s].data());
  }

  Channels out(mics, std::vector<double>(n));
  std::vector<std::complex<double>> acc(bins), h_spec(bins);
  for (int m = 0; m < mics; ++m) {
    std::fill(acc.begin(), acc.end(), std::complex<double>{});
    for (std::size_t s = 0; s < source_signals.size(); ++s) {
      std::fill(buf.begin(), buf.end(), 0.0);
      std::copy(rirs[s][m].begin(), rirs[s][m].end(), buf.begin());
      fwd(buf.data(), h_spec.data());
      for (int k = 0; k < bins; ++k) acc[k] += x_spec[s][k] * h_spec[k];
    }
    inv(acc.data(), buf.data());
    for (int i = 0; i < n; ++i) out[m][i] = buf[i + kRirLead] / nfft;
  }
  return out;
}

void add_noise(Channels& channels, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return;
  if (!std::isfinite(snr_db)) throw InvalidArgument("add_noise: SNR must be finite or +inf");
  if (channels.empty()) return;
  double signal = 0.0;
  for (const auto& ch : channels) signal += mean_power(ch);
  signal /= static_cast<double>(channels.size());
  const double noise_power = signal / std::pow(10.0, snr_db / 10.0);

  for (std::size_t m = 0; m < channels.size(); ++m) {
    auto& ch = channels[m];
    Rng rng(seed, 100 + m);
    std::vector<double> noise = pink_noise(static_cast<int>(ch.size()), rng, 1.0, 0.0);
    const double scale = std::sqrt(noise_power / mean_power(noise));
    for (std::size_t i = 0; i < ch.size(); ++i) ch[i] += scale * noise[i];
  }
}

Channels synthesize(const Scenario& scenario, const std::vector<std::vector<double>>& source_signals) {
  Channels ch = render_clean(scenario, source_signals);
  add_noise(ch, scenario.config.snr_db, derive_seed(scenario.seed, 999));
  return ch;
}

std::vector<std::vector<double>> scenario_sources(const Scenario& scenario) {
  std::vector<std::vector<double>> out;
  for (Eigen::Index s = 0; s < scenario.sources.cols(); ++s)
    out.push_back(speech_like_source(derive_seed(scenario.seed, 10 + s), scenario.config.duration,
                                     scenario.config.sample_rate));
  return out;
}

Eigen::VectorXd near_field_tdoas(const MicArray& array, const Eigen::VectorXd& source, int reference,
                                 double speed_of_sound) {
  if (reference < 0 || reference >= array.count()) throw InvalidArgument("near_field_tdoas: reference out of range");
  const Eigen::VectorXd local = source - array.offset();
  Eigen::VectorXd d = (array.positions().colwise() - local).colwise().norm().transpose();
  return (d.array() - d(reference)).matrix() / speed_of_sound;
}

Eigen::VectorXd far_field_tdoas(const MicArray& array, const Eigen::VectorXd& direction, double speed_of_sound) {
  return -(array.positions().transpose() * direction) / speed_of_sound;
}

TruthOracle truth_tdoas(const Scenario& scenario, int reference) {
  TruthOracle t;
  t.reference = reference;
  const double nu = scenario.config.speed_of_sound;
  for (Eigen::Index s = 0; s < scenario.sources.cols(); ++s) {
    const Eigen::Vector3d p = scenario.sources.col(s);
    const Eigen::Vector3d rel = p - scenario.array.offset();
    const Eigen::Vector3d v = rel.norm() > 1e-12 ? Eigen::Vector3d(rel.normalized()) : Eigen::Vector3d::UnitX();
    t.near_field.push_back(near_field_tdoas(scenario.array, p, reference, nu));
    t.far_field.push_back(far_field_tdoas(scenario.array, v, nu));
    t.directions.push_back(v);
  }
  return t;
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json config_json(const ScenarioConfig& c) {
  return {{"schema_version", c.schema_version},
          {"mode", to_string(c.mode)},
          {"room", vec_json(c.room)},
          {"mic_count", c.mic_count},
          {"source_distances", c.source_distances},
          {"snr_db", std::isfinite(c.snr_db) ? json(c.snr_db) : json(nullptr)},
          {"reflection_order", c.reflection_order},
          {"reflection_coeff", c.reflection_coeff},
          {"sample_rate", c.sample_rate},
          {"duration", c.duration},
          {"speed_of_sound", c.speed_of_sound},
          {"wall_margin", c.wall_margin},
          {"min_source_distance", c.min_source_distance},
          {"min_source_angle_deg", c.min_source_angle_deg}};
}

ScenarioConfig config_of(const json& j) {
  ScenarioConfig c;
  c.schema_version = j.value("schema_version", 0);
  if (c.schema_version != kScenarioSchemaVersion) throw InvalidArgument("scenario config: unsupported schema_version");
  if (j.contains("mode")) c.mode = array_mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("room")) {
    const auto r = j.at("room").get<std::vector<double>>();
    if (r.size() != 3) throw InvalidArgument("scenario config: room needs three dimensions");
    c.room = Eigen::Vector3d(r[0], r[1], r[2]);
  }
  c.mic_count = j.value("mic_count", c.mic_count);
  if (j.contains("source_distances")) c.source_distances = j.at("source_distances").get<std::vector<double>>();
  if (j.contains("snr_db"))
    c.snr_db = j.at("snr_db").is_null() ? std::numeric_limits<double>::infinity() : j.at("snr_db").get<double>();
  c.reflection_order = j.value("reflection_order", c.reflection_order);
  c.reflection_coeff = j.value("reflection_coeff", c.reflection_coeff);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.duration = j.value("duration", c.duration);
  c.speed_of_sound = j.value("speed_of_sound", c.speed_of_sound);
  c.wall_margin = j.value("wall_margin", c.wall_margin);
  c.min_source_distance = j.value("min_source_distance", c.min_source_distance);
  c.min_source_angle_deg = j.value("min_source_angle_deg", c.min_source_angle_deg);
  c.validate();
  return c;
}

Eigen::Matrix3Xd points_of(const json& j) {
  Eigen::Matrix3Xd p(3, j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto v = j[i].get<std::vector<double>>();
    if (v.size() != 3) throw InvalidArgument("scenario: points need three coordinates");
    p.col(i) = Eigen::Vector3d(v[0], v[1], v[2]);
  }
  return p;
}

}  // namespace

std::string config_to_json(const ScenarioConfig& cfg) { return config_json(cfg).dump(2); }

ScenarioConfig config_from_json(const std::string& text) {
  try {
    return config_of(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scenario config: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& scenario, const TruthOracle& truth) {
  json mics = json::array(), sources = json::array();
  for (int m = 0; m < scenario.array.count(); ++m) mics.push_back(vec_json(scenario.array.absolute(m)));
  for (Eigen::Index s = 0; s < scenario.sources.cols(); ++s) sources.push_back(vec_json(scenario.sources.col(s)));
  json t = {{"reference", truth.reference}, {"directions", json::array()}, {"near_field_tdoas", json::array()},
            {"far_field_tdoas", json::array()}};
  for (std::size_t s = 0; s < truth.directions.size(); ++s) {
    t["directions"].push_back(vec_json(truth.directions[s]));
    t["near_field_tdoas"].push_back(vec_json(truth.near_field[s]));
    t["far_field_tdoas"].push_back(vec_json(truth.far_field[s]));
  }
  json j = {{"schema_version", kScenarioSchemaVersion},
            {"seed", scenario.seed},
            {"config", config_json(scenario.config)},
            {"mics", mics},
            {"sources", sources},
            {"truth", t}};
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("schema_version", 0) != kScenarioSchemaVersion) throw InvalidArgument("scenario: unsupported schema_version");
    const ScenarioConfig cfg = config_of(j.at("config"));
    const Eigen::Matrix3Xd mics = points_of(j.at("mics"));
    return Scenario{cfg, j.at("seed").get<std::uint64_t>(), MicArray::from_absolute(mics), points_of(j.at("sources"))};
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("scenario: ") + e.what());
  }
}

}  // namespace edmloc
