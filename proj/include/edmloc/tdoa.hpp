#pragma once

// Candidate TDOA extraction and the combination index space built on top of it.
//
// Convention used throughout the library: a TDOA tau_m is the arrival time at
// microphone m minus the arrival time at the reference microphone, so the
// source distances satisfy d_m = d_ref + nu * tau_m.

#include "edmloc/geometry.hpp"
#include "edmloc/signal.hpp"

#include <cstddef>
#include <iterator>
#include <vector>

namespace edmloc {

struct Peak {
  double lag = 0.0;     // interpolated-rate lag, refined
  double height = 0.0;  // curve value at the integer peak
};

/// C highest strict local maxima, refined by parabolic interpolation.
/// Returns fewer than C peaks when the curve has fewer maxima.
std::vector<Peak> pick_candidates(const GccCurve& curve, int count);

/// Candidate index per non-reference microphone, 0-based.
using Combination = std::vector<int>;

struct CandidateSet {
  int reference = 0;
  int mic_count = 0;
  std::vector<int> mics;                   // non-reference microphones, ascending
  std::vector<std::vector<double>> tdoas;  // seconds, per entry of `mics`, by descending peak height

  std::size_t combination_count() const;
  /// Length-M vector of raw TDOAs with 0 at the reference.
  Eigen::VectorXd raw_tdoas(const Combination& c) const;
  void validate() const;
};

/// Lexicographic sequence of all combinations, last position varying fastest.
class Combinations {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Combination;
    using difference_type = std::ptrdiff_t;
    using pointer = const Combination*;
    using reference = const Combination&;

    iterator() = default;
    iterator(const CandidateSet* set, bool end);
    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }
    iterator& operator++();
    iterator operator++(int) {
      iterator tmp = *this;
      ++*this;
      return tmp;
    }
    bool operator==(const iterator& other) const { return done_ == other.done_ && (done_ || current_ == other.current_); }

   private:
    const CandidateSet* set_ = nullptr;
    Combination current_;
    bool done_ = true;
  };

  explicit Combinations(const CandidateSet& set) : set_(&set) {}
  iterator begin() const { return iterator(set_, false); }
  iterator end() const { return iterator(set_, true); }
  std::size_t size() const { return set_->combination_count(); }
  /// Decodes combination number q (0-based).
  Combination at(std::size_t q) const;

 private:
  const CandidateSet* set_;
};

inline Combinations enumerate_combinations(const CandidateSet& set) { return Combinations(set); }

/// tau_m minus the mean over all microphones (reference included as 0).
Eigen::VectorXd center_tdoas(const CandidateSet& set, const Combination& c);

enum class ReferenceMode { Distributed, Compact };

/// Distributed: microphone closest to the centroid. Compact: microphone with
/// the largest mean distance to the others. Ties go to the lowest index.
int select_reference_mic(const MicArray& array, ReferenceMode mode);

/// Number of positions where both combinations pick the same candidate.
int combination_overlap(const Combination& a, const Combination& b);

/// GCC-PHAT against the reference for every other microphone, then peak picking.
struct CandidateExtraction {
  CandidateSet set;
  std::vector<GccCurve> curves;  // parallel to set.mics
};

CandidateExtraction extract_candidates(const std::vector<Spectrogram>& spectra, const MicArray& array, int reference,
                                       const StftConfig& stft_cfg, const GccConfig& gcc, int candidates,
                                       double speed_of_sound);

}  // namespace edmloc
