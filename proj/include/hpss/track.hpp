#pragma once

#include <string>

#include "hpss/signal.hpp"

namespace hpss {

/// One evaluation item: a mono mixture and its two reference sources.
/// mixture == percussive_ref + harmonic_ref when built by this toolkit.
struct TrackBundle {
  Waveformd mixture;
  Waveformd percussive_ref;
  Waveformd harmonic_ref;
  std::string track_id;
};

inline void validate(const TrackBundle& b) {
  validate(b.mixture);
  validate(b.percussive_ref);
  validate(b.harmonic_ref);
  if (b.mixture.sample_rate != b.percussive_ref.sample_rate ||
      b.mixture.sample_rate != b.harmonic_ref.sample_rate) {
    throw std::invalid_argument("TrackBundle: sample rates differ");
  }
  if (b.mixture.samples.size() != b.percussive_ref.samples.size() ||
      b.mixture.samples.size() != b.harmonic_ref.samples.size()) {
    throw std::invalid_argument("TrackBundle: lengths differ");
  }
}

}  // namespace hpss
