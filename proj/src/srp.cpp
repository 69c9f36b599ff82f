#include "edmloc/srp.hpp"

#include "edmloc/edm_doa.hpp"
#include "edmloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <numeric>
#include <thread>

namespace edmloc {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Re sum_k psi[k] z^k with z = exp(j theta).
double steered_sum(const std::complex<double>* psi, int bins, double theta) {
  const double cr = std::cos(theta), ci = std::sin(theta);
  double zr = 1.0, zi = 0.0, acc = 0.0;
  for (int k = 0; k < bins; ++k) {
    acc += psi[k].real() * zr - psi[k].imag() * zi;
    const double nr = zr * cr - zi * ci;
    zi = zr * ci + zi * cr;
    zr = nr;
  }
  return acc;
}

class Steering {
 public:
  Steering(const PhaseSpectra& ps, bool per_frame) : ps_(ps), per_frame_(per_frame) {
    if (per_frame && ps.frames.empty()) throw InvalidArgument("SRP: per-frame evaluation needs kept frames");
    omega1_ = 2.0 * std::numbers::pi * ps.stft.sample_rate / ps.stft.frame_len;
  }

  // `times` holds the propagation time to every microphone.
  double operator()(const Eigen::VectorXd& times) const {
    const int bins = static_cast<int>(ps_.mean.rows());
    double total = 0.0;
    for (int p = 0; p < ps_.pair_count(); ++p) {
      const auto [i, j] = ps_.pairs[p];
      const double theta = omega1_ * (times(i) - times(j));
      if (!per_frame_) {
        total += steered_sum(ps_.mean.col(p).data(), bins, theta);
        continue;
      }
      const Eigen::MatrixXcd& f = ps_.frames[p];
      double acc = 0.0;
      for (Eigen::Index l = 0; l < f.cols(); ++l) acc += steered_sum(f.col(l).data(), bins, theta);
      total += acc / static_cast<double>(f.cols());
    }
    return total;
  }

 private:
  const PhaseSpectra& ps_;
  bool per_frame_;
  double omega1_ = 0.0;
};

Eigen::VectorXd position_times(const Eigen::MatrixXd& mics_abs, const Eigen::Vector3d& p, double nu) {
  return ((mics_abs.colwise() - p).colwise().norm() / nu).transpose();
}

Eigen::VectorXd plane_wave_times(const Eigen::MatrixXd& mics, const Eigen::Vector3d& v, double nu) {
  return -(mics.transpose() * v) / nu;
}

Eigen::VectorXd evaluate_all(const Eigen::Matrix3Xd& points, const std::function<double(const Eigen::Vector3d&)>& fn,
                             int threads) {
  const Eigen::Index n = points.cols();
  Eigen::VectorXd values(n);
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (Eigen::Index i = 0; i < n; ++i) values(i) = fn(points.col(i));
    return values;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (Eigen::Index i = w; i < n; i += workers) values(i) = fn(points.col(i));
    });
  for (auto& t : pool) t.join();
  return values;
}

Eigen::Index argmax_first(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

// Greedy: highest values first, each pick at least `exclusion` from earlier picks.
std::vector<Eigen::Index> separated_best(const Eigen::Matrix3Xd& points, const Eigen::VectorXd& values, int count,
                                         const std::function<double(const Eigen::Vector3d&, const Eigen::Vector3d&)>& dist,
                                         double exclusion) {
  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  std::vector<Eigen::Index> picked;
  for (Eigen::Index idx : order) {
    if (static_cast<int>(picked.size()) == count) break;
    bool ok = true;
    for (Eigen::Index q : picked)
      if (dist(points.col(idx), points.col(q)) < exclusion) {
        ok = false;
        break;
      }
    if (ok) picked.push_back(idx);
  }
  return picked;
}

double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)) / kDeg;
}

void angles_of(const Eigen::Vector3d& v, double& azimuth, double& elevation) {
  DoaEstimate tmp;
  tmp.direction = v;
  set_angles(tmp);
  azimuth = tmp.azimuth;
  elevation = tmp.elevation;
}

void check_3d(const MicArray& array, const PhaseSpectra& ps) {
  if (array.dim() != 3) throw InvalidArgument("SRP: three-dimensional array required");
  if (ps.mic_count != array.count()) throw InvalidArgument("SRP: phase spectra do not match the array");
}

template <class Refine>
SrpResult localize(const Eigen::Matrix3Xd& coarse, const std::function<double(const Eigen::Vector3d&)>& fn, int sources,
                   const SrpGrid& grid, const SrpOptions& options,
                   const std::function<double(const Eigen::Vector3d&, const Eigen::Vector3d&)>& dist, Refine refine) {
  if (sources < 1) throw InvalidArgument("SRP: need at least one source");
  grid.validate();

  SrpResult out;
  const Eigen::VectorXd values = evaluate_all(coarse, fn, options.threads);
  out.points_evaluated = static_cast<int>(coarse.cols());

  const std::vector<Eigen::Index> picked =
      separated_best(coarse, values, std::max(grid.beta, sources), dist, grid.exclusion);
  for (Eigen::Index idx : picked) {
    const Eigen::Matrix3Xd fine = refine(Eigen::Vector3d(coarse.col(idx)));
    const Eigen::VectorXd fv = evaluate_all(fine, fn, options.threads);
    out.points_evaluated += static_cast<int>(fine.cols());
    const Eigen::Index best = argmax_first(fv);
    SrpEstimate est;
    est.location = fine.col(best);
    est.value = fv(best);
    out.sources.push_back(est);
  }
  std::stable_sort(out.sources.begin(), out.sources.end(),
                   [](const SrpEstimate& a, const SrpEstimate& b) { return a.value > b.value; });
  if (static_cast<int>(out.sources.size()) > sources) out.sources.resize(sources);
  out.shortfall = static_cast<int>(out.sources.size()) < sources;
  if (options.keep_coarse) {
    out.coarse_points = coarse;
    out.coarse_values = values;
  }
  return out;
}

}  // namespace

PhaseSpectra phase_spectra(const std::vector<Spectrogram>& spectra, const StftConfig& cfg, const Band& band,
                           bool keep_frames) {
  cfg.validate();
  if (spectra.size() < 2) throw InvalidArgument("phase_spectra: need at least two channels");
  const Eigen::Index frames = spectra.front().cols();
  for (const auto& s : spectra)
    if (s.rows() != cfg.bins() || s.cols() != frames || frames == 0)
      throw InvalidArgument("phase_spectra: spectrogram shape mismatch");

  PhaseSpectra ps;
  ps.stft = cfg;
  ps.mic_count = static_cast<int>(spectra.size());
  for (int i = 1; i < ps.mic_count; ++i)
    for (int j = 0; j < i; ++j) ps.pairs.emplace_back(i, j);

  Eigen::VectorXd weight = band_mask(cfg, band);
  weight.segment(1, cfg.bins() - 2) *= 2.0;

  ps.mean = Eigen::MatrixXcd::Zero(cfg.bins(), ps.pair_count());
  for (int p = 0; p < ps.pair_count(); ++p) {
    const auto [i, j] = ps.pairs[p];
    Eigen::MatrixXcd per(keep_frames ? cfg.bins() : 0, keep_frames ? frames : 0);
    for (Eigen::Index l = 0; l < frames; ++l) {
      const Eigen::VectorXcd psi = phase_spectrum(spectra[i].col(l), spectra[j].col(l)).cwiseProduct(weight);
      ps.mean.col(p) += psi;
      if (keep_frames) per.col(l) = psi;
    }
    ps.mean.col(p) /= static_cast<double>(frames);
    if (keep_frames) ps.frames.push_back(std::move(per));
  }
  return ps;
}

void SrpGrid::validate() const {
  if (!(coarse_step > 0.0) || !(fine_step > 0.0) || !(fine_step < coarse_step))
    throw InvalidArgument("SrpGrid: need 0 < fine_step < coarse_step");
  if (fine_half < 0) throw InvalidArgument("SrpGrid: fine_half must be non-negative");
  if (beta < 1) throw InvalidArgument("SrpGrid: beta must be >= 1");
  if (!(exclusion >= 0.0)) throw InvalidArgument("SrpGrid: exclusion must be non-negative");
}

SrpGrid default_position_grid() { return {SrpKind::Position, 0.10, 0.01, 10, 3, 0.5}; }
SrpGrid default_doa_grid() { return {SrpKind::Doa, 5.0, 0.5, 10, 2, 20.0}; }

Eigen::Matrix3Xd position_coarse_grid(const Eigen::Vector3d& room, double step) {
  if (!(step > 0.0) || !(room.minCoeff() > 0.0)) throw InvalidArgument("position_coarse_grid: bad room or step");
  int n[3];
  for (int a = 0; a < 3; ++a) n[a] = std::max(0, static_cast<int>(std::ceil(room(a) / step - 1e-9)) - 1);
  Eigen::Matrix3Xd g(3, static_cast<Eigen::Index>(n[0]) * n[1] * n[2]);
  Eigen::Index c = 0;
  for (int x = 1; x <= n[0]; ++x)
    for (int y = 1; y <= n[1]; ++y)
      for (int z = 1; z <= n[2]; ++z) g.col(c++) = Eigen::Vector3d(x * step, y * step, z * step);
  return g;
}

Eigen::Matrix3Xd position_fine_grid(const Eigen::Vector3d& center, double step, int half) {
  const int side = 2 * half + 1;
  Eigen::Matrix3Xd g(3, side * side * side);
  Eigen::Index c = 0;
  for (int x = -half; x <= half; ++x)
    for (int y = -half; y <= half; ++y)
      for (int z = -half; z <= half; ++z) g.col(c++) = center + step * Eigen::Vector3d(x, y, z);
  return g;
}

Eigen::Matrix3Xd doa_coarse_grid(double step_deg) {
  if (!(step_deg > 0.0)) throw InvalidArgument("doa_coarse_grid: step must be positive");
  const int n_az = static_cast<int>(std::lround(360.0 / step_deg));
  const int n_el_half = std::max(0, static_cast<int>(std::ceil(90.0 / step_deg - 1e-9)) - 1);
  Eigen::Matrix3Xd g(3, n_az * (2 * n_el_half + 1) + 2);
  Eigen::Index c = 0;
  for (int a = 0; a < n_az; ++a) {
    const double az = -180.0 + (a + 1) * step_deg;
    for (int e = -n_el_half; e <= n_el_half; ++e) g.col(c++) = direction_from_angles(az * kDeg, e * step_deg * kDeg);
  }
  g.col(c++) = Eigen::Vector3d(0, 0, 1);
  g.col(c++) = Eigen::Vector3d(0, 0, -1);
  return g;
}

Eigen::Matrix3Xd doa_fine_grid(double azimuth, double elevation, double step_deg, int half) {
  const int side = 2 * half + 1;
  Eigen::Matrix3Xd g(3, side * side);
  Eigen::Index c = 0;
  for (int a = -half; a <= half; ++a)
    for (int e = -half; e <= half; ++e)
      g.col(c++) = direction_from_angles(azimuth + a * step_deg * kDeg, elevation + e * step_deg * kDeg);
  return g;
}

GridCounts position_grid_counts(const Eigen::Vector3d& room, const SrpGrid& grid) {
  grid.validate();
  const long side = 2L * grid.fine_half + 1;
  return {static_cast<long>(position_coarse_grid(room, grid.coarse_step).cols()), grid.beta * side * side * side};
}

GridCounts doa_grid_counts(const SrpGrid& grid) {
  grid.validate();
  const long side = 2L * grid.fine_half + 1;
  return {static_cast<long>(doa_coarse_grid(grid.coarse_step).cols()), grid.beta * side * side};
}

double srp_value_position(const PhaseSpectra& ps, const Eigen::Vector3d& p, const MicArray& array,
                          double speed_of_sound, bool per_frame) {
  check_3d(array, ps);
  return Steering(ps, per_frame)(position_times(array.absolute_positions(), p, speed_of_sound));
}

double srp_value_doa(const PhaseSpectra& ps, const Eigen::Vector3d& v, const MicArray& array, double speed_of_sound,
                     bool per_frame) {
  check_3d(array, ps);
  if (std::abs(v.norm() - 1.0) > 1e-9) throw InvalidArgument("srp_value_doa: direction must be a unit vector");
  return Steering(ps, per_frame)(plane_wave_times(array.positions(), v, speed_of_sound));
}

SrpResult srp_localize_position(const PhaseSpectra& ps, const MicArray& array, const Eigen::Vector3d& room, int sources,
                                const SrpGrid& grid, double speed_of_sound, const SrpOptions& options) {
  check_3d(array, ps);
  const Steering steer(ps, options.per_frame);
  const Eigen::MatrixXd mics = array.absolute_positions();
  auto fn = [&](const Eigen::Vector3d& p) { return steer(position_times(mics, p, speed_of_sound)); };
  auto dist = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return (a - b).norm(); };
  return localize(position_coarse_grid(room, grid.coarse_step), fn, sources, grid, options, dist,
                  [&](const Eigen::Vector3d& c) { return position_fine_grid(c, grid.fine_step, grid.fine_half); });
}

SrpResult srp_localize_doa(const PhaseSpectra& ps, const MicArray& array, int sources, const SrpGrid& grid,
                           double speed_of_sound, const SrpOptions& options) {
  check_3d(array, ps);
  const Steering steer(ps, options.per_frame);
  const Eigen::MatrixXd mics = array.positions();
  auto fn = [&](const Eigen::Vector3d& v) { return steer(plane_wave_times(mics, v, speed_of_sound)); };
  SrpResult out = localize(doa_coarse_grid(grid.coarse_step), fn, sources, grid, options, angle_deg,
                           [&](const Eigen::Vector3d& c) {
                             double az, el;
                             angles_of(c, az, el);
                             return doa_fine_grid(az, el, grid.fine_step, grid.fine_half);
                           });
  for (SrpEstimate& e : out.sources) {
    e.location.normalize();
    angles_of(e.location, e.azimuth, e.elevation);
  }
  return out;
}

}  // namespace edmloc
