#include "hpss/pipeline.hpp"

#include <cstdio>
#include <sstream>

#include "hpss/checkpoint.hpp"
#include "hpss/madtwinnet.hpp"

namespace hpss {

void validate(const RunConfig& cfg) {
  if (cfg.estimator == EstimatorKind::MadTwinNet && cfg.checkpoint_path.empty()) {
    throw ConfigError("run config: MadTwinNet estimator requires a checkpoint path");
  }
  validate(cfg.median);
  validate(cfg.pu);
  validate(cfg.eval);
}

std::string setting_label(Setting s) {
  return s == Setting::Setting1 ? "Setting 1" : "Setting 2";
}

std::string method_label(const RunConfig& cfg) {
  if (cfg.estimator == EstimatorKind::MedianFilter && cfg.phase == PhaseKind::MixturePhase) {
    return "KAM";
  }
  std::string est;
  switch (cfg.estimator) {
    case EstimatorKind::MedianFilter: est = "KAM"; break;
    case EstimatorKind::MadTwinNet: est = "MaD TwinNet"; break;
    case EstimatorKind::Oracle: est = "Oracle"; break;
  }
  const std::string phase = cfg.phase == PhaseKind::MixturePhase ? "mixture phase" : "PU-HPSS";
  return est + " + " + phase;
}

namespace {

std::string fmt_index(Index v) { return std::to_string(static_cast<long long>(v)); }

void echo_config(const RunConfig& cfg, const StftConfig& stft_cfg, Diagnostics& diag) {
  auto& kv = diag.values;
  kv["config.setting"] = cfg.setting == Setting::Setting1 ? "1" : "2";
  switch (cfg.estimator) {
    case EstimatorKind::MedianFilter: kv["config.estimator"] = "median"; break;
    case EstimatorKind::MadTwinNet: kv["config.estimator"] = "madtwinnet"; break;
    case EstimatorKind::Oracle: kv["config.estimator"] = "oracle"; break;
  }
  kv["config.phase"] = cfg.phase == PhaseKind::MixturePhase ? "mixture" : "puhpss";
  kv["config.seed"] = std::to_string(cfg.seed);
  kv["config.median.time_kernel"] = std::to_string(cfg.median.time_kernel);
  kv["config.median.freq_kernel"] = std::to_string(cfg.median.freq_kernel);
  kv["config.median.mask"] = cfg.median.mask_kind == MaskKind::WienerP2 ? "wiener_p2" : "binary";
  kv["config.pu.max_iter"] = std::to_string(cfg.pu.max_iter);
  kv["config.pu.peak_neighborhood"] = std::to_string(cfg.pu.peak_neighborhood);
  kv["config.pu.assign_rule"] =
      cfg.pu.assign_rule == PeakAssign::NearestPeak ? "nearest_peak" : "lobe_split";
  kv["config.eval.window_seconds"] = std::to_string(cfg.eval.window_seconds);
  kv["config.eval.overlap_seconds"] = std::to_string(cfg.eval.overlap_seconds);
  kv["config.eval.proj_filter_len"] = std::to_string(cfg.eval.proj_filter_len);
  kv["config.stft.window"] = std::to_string(stft_cfg.window_length);
  kv["config.stft.hop"] = std::to_string(stft_cfg.hop_length);
  kv["config.stft.fft"] = std::to_string(stft_cfg.fft_length);
}

}  // namespace

SeparationResult run_separation(const TrackBundle& bundle, const RunConfig& cfg) {
  validate(cfg);
  validate(bundle);

  SeparationResult result;
  Diagnostics& diag = result.diagnostics;

  const StftConfig stft_cfg = make_setting(cfg.setting, bundle.mixture.sample_rate);
  echo_config(cfg, stft_cfg, diag);

  const ComplexSpectrogramd mix_spec = stft(bundle.mixture, stft_cfg);
  const MagSpectrogramd vx = magnitude(mix_spec);
  diag.values["stft.frames"] = fmt_index(vx.num_frames());
  diag.values["stft.bins"] = fmt_index(vx.num_bins());

  MagSpectrogramd v1;
  switch (cfg.estimator) {
    case EstimatorKind::MedianFilter:
      v1 = median_filter_hpss(vx, cfg.median).percussive;
      break;
    case EstimatorKind::Oracle:
      v1 = magnitude(stft(bundle.percussive_ref, stft_cfg));
      break;
    case EstimatorKind::MadTwinNet: {
      Checkpoint ck;
      try {
        ck = load_checkpoint(cfg.checkpoint_path);
      } catch (const DataError& e) {
        throw DataError(std::string("estimator stage: ") + e.what());
      }
      if (ck.config.n_bins != vx.num_bins()) {
        std::ostringstream msg;
        msg << "estimator stage: checkpoint expects " << ck.config.n_bins
            << " bins but the spectrogram has " << vx.num_bins()
            << " (setting/sample-rate mismatch)";
        throw ConfigError(msg.str());
      }
      v1 = predict_percussive(vx, ck.params, ck.config);
      break;
    }
  }

  Index clamped = 0;
  const MagSpectrogramd v2 = complement_magnitude(vx, v1, &clamped);
  diag.values["complement.clamped"] = fmt_index(clamped);

  SourcePair<double> sources;
  if (cfg.phase == PhaseKind::MixturePhase) {
    sources = mixture_phase_reconstruct(v1, v2, mix_spec);
  } else {
    MixErrorTrace<double> trace;
    sources = pu_hpss(mix_spec, v1, v2, cfg.pu, &trace);
    diag.values["pu.final_mix_error"] = std::to_string(trace.c.row(trace.c.rows() - 1).sum());
    diag.mix_error = std::move(trace);
  }

  const Index want = bundle.mixture.samples.size();
  result.percussive = istft(sources.percussive, want);
  result.harmonic = istft(sources.harmonic, want);

  const Index covered = (mix_spec.num_frames() - 1) * stft_cfg.hop_length + stft_cfg.window_length;
  const Index available = covered - (stft_cfg.center_pad ? stft_cfg.window_length / 2 : 0);
  diag.values["istft.requested"] = fmt_index(want);
  diag.values["istft.zero_padded"] = fmt_index(std::max<Index>(0, want - available));
  return result;
}

std::string mix_error_csv(const MixErrorTrace<double>& trace) {
  std::string out = "frame_index,iteration,c\n";
  char line[96];
  for (Index t = 0; t < trace.c.cols(); ++t) {
    for (Index it = 0; it < trace.c.rows(); ++it) {
      std::snprintf(line, sizeof(line), "%lld,%lld,%.12e\n", static_cast<long long>(t),
                    static_cast<long long>(it), trace.c(it, t));
      out += line;
    }
  }
  return out;
}

}  // namespace hpss
