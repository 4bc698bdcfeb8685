#pragma once

#include <filesystem>
#include <vector>

#include "hpss/track.hpp"

namespace hpss {

/// Loads a DSD100-style stem directory: drums.wav, bass.wav, vocals.wav and
/// other.wav (stereo averaged to mono). The percussive reference is the drums
/// stem, the harmonic reference the sum of the rest, and the mixture their
/// sum. An optional manifest.txt with `role=filename` lines overrides the
/// default file names.
TrackBundle load_stems(const std::filesystem::path& dir);

/// Writes a bundle as a loadable stem directory (drums/other carry the two
/// sources; bass and vocals are silent placeholders) plus mixture.wav.
void write_stems(const std::filesystem::path& dir, const TrackBundle& bundle);

/// Every immediate subdirectory that contains stems, ordered by track id.
std::vector<TrackBundle> load_dataset(const std::filesystem::path& dir);

}  // namespace hpss
