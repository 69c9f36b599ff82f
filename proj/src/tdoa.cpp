#include "edmloc/tdoa.hpp"

#include "edmloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edmloc {

std::vector<Peak> pick_candidates(const GccCurve& curve, int count) {
  if (curve.size() == 0) throw InvalidArgument("pick_candidates: empty curve");
  if (count < 1) throw InvalidArgument("pick_candidates: candidate count must be >= 1");

  struct Raw {
    int index;
    double height;
  };
  std::vector<Raw> maxima;
  const Eigen::VectorXd& v = curve.values;
  for (int i = 1; i + 1 < curve.size(); ++i)
    if (v(i) > v(i - 1) && v(i) > v(i + 1)) maxima.push_back({i, v(i)});

  std::sort(maxima.begin(), maxima.end(), [&](const Raw& a, const Raw& b) {
    if (a.height != b.height) return a.height > b.height;
    const int la = curve.lag_of(a.index), lb = curve.lag_of(b.index);
    if (std::abs(la) != std::abs(lb)) return std::abs(la) < std::abs(lb);
    return la < lb;
  });
  if (static_cast<int>(maxima.size()) > count) maxima.resize(count);

  std::vector<Peak> out;
  out.reserve(maxima.size());
  for (const Raw& m : maxima) {
    const double left = v(m.index - 1), mid = v(m.index), right = v(m.index + 1);
    const double denom = left - 2.0 * mid + right;
    double delta = denom != 0.0 ? 0.5 * (left - right) / denom : 0.0;
    delta = std::clamp(delta, -1.0, 1.0);
    out.push_back({curve.lag_of(m.index) + delta, m.height});
  }
  return out;
}

std::size_t CandidateSet::combination_count() const {
  std::size_t q = 1;
  for (const auto& t : tdoas) q *= t.size();
  return q;
}

void CandidateSet::validate() const {
  if (mic_count < 2) throw InvalidArgument("CandidateSet: need at least two microphones");
  if (reference < 0 || reference >= mic_count) throw InvalidArgument("CandidateSet: reference out of range");
  if (static_cast<int>(mics.size()) != mic_count - 1 || tdoas.size() != mics.size())
    throw InvalidArgument("CandidateSet: expected one candidate list per non-reference microphone");
  for (std::size_t i = 0; i < mics.size(); ++i) {
    if (mics[i] == reference || mics[i] < 0 || mics[i] >= mic_count) throw InvalidArgument("CandidateSet: bad microphone index");
    if (tdoas[i].empty()) throw InvalidArgument("CandidateSet: empty candidate list");
  }
}

Eigen::VectorXd CandidateSet::raw_tdoas(const Combination& c) const {
  if (c.size() != mics.size()) throw InvalidArgument("CandidateSet::raw_tdoas: combination length mismatch");
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(mic_count);
  for (std::size_t i = 0; i < mics.size(); ++i) {
    if (c[i] < 0 || c[i] >= static_cast<int>(tdoas[i].size())) throw InvalidArgument("CandidateSet::raw_tdoas: index out of range");
    tau(mics[i]) = tdoas[i][c[i]];
  }
  return tau;
}

Combinations::iterator::iterator(const CandidateSet* set, bool end) : set_(set), done_(end) {
  if (!end) {
    current_.assign(set->tdoas.size(), 0);
    done_ = set->combination_count() == 0;
  }
}

Combinations::iterator& Combinations::iterator::operator++() {
  for (std::size_t i = current_.size(); i-- > 0;) {
    if (++current_[i] < static_cast<int>(set_->tdoas[i].size())) return *this;
    current_[i] = 0;
  }
  done_ = true;
  return *this;
}

Combination Combinations::at(std::size_t q) const {
  if (q >= size()) throw InvalidArgument("Combinations::at: index out of range");
  Combination c(set_->tdoas.size());
  for (std::size_t i = c.size(); i-- > 0;) {
    const std::size_t radix = set_->tdoas[i].size();
    c[i] = static_cast<int>(q % radix);
    q /= radix;
  }
  return c;
}

Eigen::VectorXd center_tdoas(const CandidateSet& set, const Combination& c) {
  Eigen::VectorXd tau = set.raw_tdoas(c);
  tau.array() -= tau.mean();
  return tau;
}

int select_reference_mic(const MicArray& array, ReferenceMode mode) {
  const int m = array.count();
  int best = 0;
  double best_score = mode == ReferenceMode::Distributed ? std::numeric_limits<double>::infinity()
                                                          : -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    if (mode == ReferenceMode::Distributed) {
      const double r = array.positions().col(i).norm();
      if (r < best_score) best_score = r, best = i;
    } else {
      double mean = 0.0;
      for (int j = 0; j < m; ++j)
        if (j != i) mean += array.distance(i, j);
      mean /= (m - 1);
      if (mean > best_score) best_score = mean, best = i;
    }
  }
  return best;
}

int combination_overlap(const Combination& a, const Combination& b) {
  if (a.size() != b.size()) throw InvalidArgument("combination_overlap: length mismatch");
  int same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return same;
}

CandidateExtraction extract_candidates(const std::vector<Spectrogram>& spectra, const MicArray& array, int reference,
                                       const StftConfig& stft_cfg, const GccConfig& gcc, int candidates,
                                       double speed_of_sound) {
  if (static_cast<int>(spectra.size()) != array.count())
    throw InvalidArgument("extract_candidates: one spectrogram per microphone required");
  if (reference < 0 || reference >= array.count()) throw InvalidArgument("extract_candidates: reference out of range");

  CandidateExtraction out;
  out.set.reference = reference;
  out.set.mic_count = array.count();
  for (int m = 0; m < array.count(); ++m) {
    if (m == reference) continue;
    GccCurve curve = gcc_phat(spectra[m], spectra[reference], stft_cfg, array.distance(m, reference), speed_of_sound, gcc);
    curve.mic = m;
    curve.reference = reference;
    std::vector<double> taus;
    for (const Peak& p : pick_candidates(curve, candidates)) taus.push_back(curve.seconds(p.lag));
    // a curve without any interior maximum still needs one hypothesis
    if (taus.empty()) {
      Eigen::Index best;
      curve.values.maxCoeff(&best);
      taus.push_back(curve.seconds(curve.lag_of(static_cast<int>(best))));
    }
    out.set.mics.push_back(m);
    out.set.tdoas.push_back(std::move(taus));
    out.curves.push_back(std::move(curve));
  }
  return out;
}

}  // namespace edmloc
