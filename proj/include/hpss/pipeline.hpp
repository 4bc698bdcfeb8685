#pragma once

#include <map>
#include <optional>
#include <string>

#include "hpss/bss_eval.hpp"
#include "hpss/median_hpss.hpp"
#include "hpss/phase_recovery.hpp"
#include "hpss/track.hpp"

namespace hpss {

enum class EstimatorKind { MedianFilter, MadTwinNet, Oracle };
enum class PhaseKind { MixturePhase, PuHpss };

/// Full pipeline configuration: STFT setting, magnitude estimator, phase
/// recovery method, and evaluation protocol.
struct RunConfig {
  Setting setting = Setting::Setting1;
  EstimatorKind estimator = EstimatorKind::MedianFilter;
  std::string checkpoint_path;  // required for MadTwinNet
  MedianFilterParams median;
  PhaseKind phase = PhaseKind::MixturePhase;
  PuHpssConfig pu;
  EvalProtocol eval;
  std::uint64_t seed = 0;
};

void validate(const RunConfig& cfg);

/// "KAM", "MaD TwinNet + PU-HPSS", "Oracle + mixture phase", ...
std::string method_label(const RunConfig& cfg);
std::string setting_label(Setting s);

/// Flat key=value diagnostics (config echo, derived STFT values, clamp
/// counts, length reconciliation) plus the PU-HPSS mixing-error trace when
/// phase recovery ran.
struct Diagnostics {
  std::map<std::string, std::string> values;
  std::optional<MixErrorTrace<double>> mix_error;
};

struct SeparationResult {
  Waveformd percussive;
  Waveformd harmonic;
  Diagnostics diagnostics;
};

/// estimator -> complement -> phase recovery -> inverse STFT. Outputs have
/// exactly the mixture's length (trimmed or zero-padded, logged in
/// diagnostics). Deterministic given the config.
SeparationResult run_separation(const TrackBundle& bundle, const RunConfig& cfg);

/// Serializes a mixing-error trace as `frame_index,iteration,c` CSV rows.
std::string mix_error_csv(const MixErrorTrace<double>& trace);

}  // namespace hpss
