#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hpss/bench.hpp"
#include "hpss/checkpoint.hpp"
#include "hpss/pipeline.hpp"
#include "hpss/report.hpp"
#include "hpss/stems.hpp"
#include "hpss/synth.hpp"
#include "hpss/train.hpp"
#include "hpss/wav.hpp"

namespace fs = std::filesystem;
using namespace hpss;

namespace {

Setting parse_setting(int s) {
  if (s == 1) return Setting::Setting1;
  if (s == 2) return Setting::Setting2;
  throw ConfigError("setting must be 1 or 2");
}

EstimatorKind parse_estimator(const std::string& s) {
  if (s == "median") return EstimatorKind::MedianFilter;
  if (s == "madtwinnet") return EstimatorKind::MadTwinNet;
  if (s == "oracle") return EstimatorKind::Oracle;
  throw ConfigError("unknown estimator '" + s + "' (median, madtwinnet, oracle)");
}

PhaseKind parse_phase(const std::string& s) {
  if (s == "mixture") return PhaseKind::MixturePhase;
  if (s == "puhpss") return PhaseKind::PuHpss;
  throw ConfigError("unknown phase method '" + s + "' (mixture, puhpss)");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << text;
}

void add_synth_options(CLI::App* cmd, SynthSpec& spec) {
  cmd->add_option("--duration", spec.duration_s, "Track length in seconds");
  cmd->add_option("--rate", spec.sample_rate, "Sample rate in Hz");
  cmd->add_option("--burst-rate", spec.burst_rate_hz, "Percussive burst rate (Hz)");
  cmd->add_option("--burst-decay", spec.burst_decay_s, "Burst decay constant (s)");
  cmd->add_option("--min-partials", spec.min_partials, "Minimum sinusoid count");
  cmd->add_option("--max-partials", spec.max_partials, "Maximum sinusoid count");
  cmd->add_option("--freq-min", spec.freq_min_hz, "Lowest partial frequency (Hz)");
  cmd->add_option("--freq-max", spec.freq_max_hz, "Highest partial frequency (Hz)");
  cmd->add_option("--vibrato-rate", spec.vibrato_rate_hz, "Vibrato rate (Hz)");
  cmd->add_option("--vibrato-depth", spec.vibrato_depth, "Relative vibrato depth");
  cmd->add_option("--rms-ratio", spec.rms_ratio, "Percussive/harmonic RMS ratio");
}

struct SeparateArgs {
  std::string stems_dir;
  std::string mixture_file;
  std::string out_dir;
  int setting = 1;
  std::string estimator = "median";
  std::string checkpoint;
  std::string phase = "mixture";
  int iterations = 50;
  std::string trace_file;
  std::string diagnostics_file;
  std::uint64_t seed = 0;
};

RunConfig make_run_config(int setting, const std::string& estimator, const std::string& phase,
                          const std::string& checkpoint, int iterations, std::uint64_t seed) {
  RunConfig cfg;
  cfg.setting = parse_setting(setting);
  cfg.estimator = parse_estimator(estimator);
  cfg.phase = parse_phase(phase);
  cfg.checkpoint_path = checkpoint;
  cfg.pu.max_iter = iterations;
  cfg.seed = seed;
  return cfg;
}

int run_synth(const SynthSpec& spec, const std::string& out_dir, int tracks, std::uint64_t seed) {
  for (int i = 0; i < tracks; ++i) {
    const TrackBundle bundle = synth_track(spec, seed + static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "track_%03d", i);
    write_stems(fs::path(out_dir) / name, bundle);
    std::cout << name << ": " << bundle.mixture.samples.size() << " samples at "
              << bundle.mixture.sample_rate << " Hz\n";
  }
  return 0;
}

int run_separate(const SeparateArgs& args) {
  RunConfig cfg = make_run_config(args.setting, args.estimator, args.phase, args.checkpoint,
                                  args.iterations, args.seed);
  TrackBundle bundle;
  if (!args.stems_dir.empty()) {
    bundle = load_stems(args.stems_dir);
  } else {
    if (cfg.estimator == EstimatorKind::Oracle) {
      throw ConfigError("oracle estimator needs --stems (reference sources)");
    }
    bundle.mixture = to_mono(read_wav(args.mixture_file));
    bundle.percussive_ref = {Vec<double>::Zero(bundle.mixture.samples.size()),
                             bundle.mixture.sample_rate};
    bundle.harmonic_ref = bundle.percussive_ref;
    bundle.track_id = fs::path(args.mixture_file).stem().string();
  }

  const SeparationResult result = run_separation(bundle, cfg);
  fs::create_directories(args.out_dir);
  write_wav(fs::path(args.out_dir) / "percussive.wav", result.percussive);
  write_wav(fs::path(args.out_dir) / "harmonic.wav", result.harmonic);

  if (!args.trace_file.empty()) {
    if (!result.diagnostics.mix_error.has_value()) {
      throw ConfigError("--trace requires --phase puhpss");
    }
    write_text(args.trace_file, mix_error_csv(*result.diagnostics.mix_error));
  }
  if (!args.diagnostics_file.empty()) {
    std::string dump;
    for (const auto& [k, v] : result.diagnostics.values) dump += k + "=" + v + "\n";
    write_text(args.diagnostics_file, dump);
  }
  std::cout << "separated '" << bundle.track_id << "' into " << args.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic/percussive separation toolkit: median-filter and toy MaD TwinNet "
               "magnitude estimators, sinusoidal-model phase recovery, BSS-eval scoring"};
  app.require_subcommand(1);

  // --- synth ---
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic stem directories");
  SynthSpec synth_spec;
  std::string synth_out;
  int synth_tracks = 1;
  std::uint64_t synth_seed = 0;
  synth_cmd->set_config("--config");
  synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
  synth_cmd->add_option("--tracks", synth_tracks, "Number of tracks");
  synth_cmd->add_option("--seed", synth_seed, "Random seed")->required();
  add_synth_options(synth_cmd, synth_spec);

  // --- separate ---
  auto* sep_cmd = app.add_subcommand("separate", "Separate a mixture into percussive and harmonic");
  SeparateArgs sep;
  sep_cmd->set_config("--config");
  auto* sep_stems = sep_cmd->add_option("--stems", sep.stems_dir, "Stem directory (drums/bass/vocals/other)");
  auto* sep_mix = sep_cmd->add_option("--mixture", sep.mixture_file, "Mixture WAV file");
  sep_stems->excludes(sep_mix);
  sep_cmd->add_option("--out", sep.out_dir, "Output directory")->required();
  sep_cmd->add_option("--setting", sep.setting, "STFT setting (1 or 2)");
  sep_cmd->add_option("--estimator", sep.estimator, "median | madtwinnet | oracle");
  sep_cmd->add_option("--checkpoint", sep.checkpoint, "MaD TwinNet checkpoint");
  sep_cmd->add_option("--phase", sep.phase, "mixture | puhpss");
  sep_cmd->add_option("--iterations", sep.iterations, "PU-HPSS inner iterations");
  sep_cmd->add_option("--trace", sep.trace_file, "Mixing-error trace CSV output");
  sep_cmd->add_option("--diagnostics", sep.diagnostics_file, "Diagnostics key=value dump");
  sep_cmd->add_option("--seed", sep.seed, "Random seed");

  // --- recover-phase ---
  auto* rec_cmd = app.add_subcommand("recover-phase",
                                     "Re-estimate phases of existing magnitude estimates with PU-HPSS");
  std::string rec_mixture, rec_perc, rec_harm, rec_out, rec_trace;
  int rec_setting = 1, rec_iterations = 50;
  rec_cmd->set_config("--config");
  rec_cmd->add_option("--mixture", rec_mixture, "Mixture WAV")->required();
  rec_cmd->add_option("--percussive", rec_perc, "Percussive estimate WAV")->required();
  rec_cmd->add_option("--harmonic", rec_harm, "Harmonic estimate WAV")->required();
  rec_cmd->add_option("--out", rec_out, "Output directory")->required();
  rec_cmd->add_option("--setting", rec_setting, "STFT setting (1 or 2)");
  rec_cmd->add_option("--iterations", rec_iterations, "PU-HPSS inner iterations");
  rec_cmd->add_option("--trace", rec_trace, "Mixing-error trace CSV output");

  // --- evaluate ---
  auto* eval_cmd = app.add_subcommand("evaluate", "Score estimates against references (BSS-eval)");
  std::string ev_est_perc, ev_est_harm, ev_ref_perc, ev_ref_harm, ev_stems, ev_csv, ev_json;
  EvalProtocol ev_proto;
  eval_cmd->set_config("--config");
  eval_cmd->add_option("--est-percussive", ev_est_perc, "Percussive estimate WAV")->required();
  eval_cmd->add_option("--est-harmonic", ev_est_harm, "Harmonic estimate WAV")->required();
  eval_cmd->add_option("--ref-percussive", ev_ref_perc, "Percussive reference WAV");
  eval_cmd->add_option("--ref-harmonic", ev_ref_harm, "Harmonic reference WAV");
  eval_cmd->add_option("--stems", ev_stems, "Stem directory providing the references");
  eval_cmd->add_option("--window", ev_proto.window_seconds, "Window length (s)");
  eval_cmd->add_option("--overlap", ev_proto.overlap_seconds, "Window overlap (s)");
  eval_cmd->add_option("--filter-taps", ev_proto.proj_filter_len, "Projection filter taps");
  eval_cmd->add_option("--csv", ev_csv, "Per-window CSV output");
  eval_cmd->add_option("--json", ev_json, "JSON report output");

  // --- bench ---
  auto* bench_cmd = app.add_subcommand("bench", "Run a method matrix over a dataset and tabulate");
  std::string bn_dataset, bn_csv, bn_json, bn_table, bn_checkpoint;
  std::vector<int> bn_settings = {1};
  std::vector<std::string> bn_estimators = {"median"};
  std::vector<std::string> bn_phases = {"mixture", "puhpss"};
  int bn_synth_tracks = 0, bn_iterations = 50;
  std::uint64_t bn_seed = 0;
  bool bn_have_seed = false;
  SynthSpec bn_spec;
  EvalProtocol bn_proto;
  bench_cmd->set_config("--config");
  bench_cmd->add_option("--dataset", bn_dataset, "Dataset directory of stem folders");
  bench_cmd->add_option("--synth-tracks", bn_synth_tracks, "Generate this many synthetic tracks");
  bench_cmd->add_option("--seed", bn_seed, "Random seed for synthetic tracks")
      ->each([&bn_have_seed](const std::string&) { bn_have_seed = true; });
  bench_cmd->add_option("--settings", bn_settings, "STFT settings to run (1 2)");
  bench_cmd->add_option("--estimators", bn_estimators, "Estimators to run (median oracle madtwinnet)");
  bench_cmd->add_option("--phases", bn_phases, "Phase methods to run (mixture puhpss)");
  bench_cmd->add_option("--checkpoint", bn_checkpoint, "Checkpoint for the madtwinnet estimator");
  bench_cmd->add_option("--iterations", bn_iterations, "PU-HPSS inner iterations");
  bench_cmd->add_option("--window", bn_proto.window_seconds, "Eval window (s)");
  bench_cmd->add_option("--overlap", bn_proto.overlap_seconds, "Eval overlap (s)");
  bench_cmd->add_option("--filter-taps", bn_proto.proj_filter_len, "Projection filter taps");
  bench_cmd->add_option("--csv", bn_csv, "Long-form per-window CSV output");
  bench_cmd->add_option("--json", bn_json, "JSON summary output");
  bench_cmd->add_option("--table", bn_table, "Rendered median table output");
  add_synth_options(bench_cmd, bn_spec);

  // --- train-toy ---
  auto* train_cmd = app.add_subcommand("train-toy", "Train the toy MaD TwinNet on synthetic segments");
  std::string tr_out, tr_loss_csv;
  std::uint64_t tr_seed = 0;
  int tr_steps = 500, tr_segments = 8, tr_bins = 129, tr_seq = 60, tr_context = 10;
  int tr_hidden = 0, tr_fnn_hidden = 0;
  double tr_lr = 5e-3, tr_twin_weight = 0.5;
  SynthSpec tr_spec;
  train_cmd->set_config("--config");
  train_cmd->add_option("--out", tr_out, "Checkpoint output path")->required();
  train_cmd->add_option("--seed", tr_seed, "Random seed")->required();
  train_cmd->add_option("--steps", tr_steps, "Optimizer steps");
  train_cmd->add_option("--segments", tr_segments, "Synthetic training segments");
  train_cmd->add_option("--bins", tr_bins, "Frequency bins (network input width)");
  train_cmd->add_option("--seq-length", tr_seq, "Segment length in frames");
  train_cmd->add_option("--context", tr_context, "Context frames trimmed per side");
  train_cmd->add_option("--hidden", tr_hidden, "Decoder/twin hidden width (default 2*bins)");
  train_cmd->add_option("--fnn-hidden", tr_fnn_hidden, "Denoiser hidden width (default bins)");
  train_cmd->add_option("--lr", tr_lr, "Adam learning rate");
  train_cmd->add_option("--twin-weight", tr_twin_weight, "Twin regularization weight");
  train_cmd->add_option("--loss-csv", tr_loss_csv, "Loss curve CSV output");
  add_synth_options(train_cmd, tr_spec);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth_spec, synth_out, synth_tracks, synth_seed);

    if (sep_cmd->parsed()) {
      if (sep.stems_dir.empty() && sep.mixture_file.empty()) {
        throw ConfigError("separate: need --stems or --mixture");
      }
      return run_separate(sep);
    }

    if (rec_cmd->parsed()) {
      const Waveformd mixture = to_mono(read_wav(rec_mixture));
      const Waveformd perc = to_mono(read_wav(rec_perc));
      const Waveformd harm = to_mono(read_wav(rec_harm));
      if (perc.sample_rate != mixture.sample_rate || harm.sample_rate != mixture.sample_rate) {
        throw DataError("recover-phase: sample rates differ");
      }
      const StftConfig cfg = make_setting(parse_setting(rec_setting), mixture.sample_rate);
      const ComplexSpectrogramd x = stft(mixture, cfg);
      MagSpectrogramd v1 = magnitude(stft(perc, cfg));
      MagSpectrogramd v2 = magnitude(stft(harm, cfg));
      const Index frames = std::min({x.num_frames(), v1.num_frames(), v2.num_frames()});
      v1.bins.conservativeResize(Eigen::NoChange, frames);
      v2.bins.conservativeResize(Eigen::NoChange, frames);
      ComplexSpectrogramd xt = x;
      xt.bins.conservativeResize(Eigen::NoChange, frames);
      PuHpssConfig pu;
      pu.max_iter = rec_iterations;
      MixErrorTrace<double> trace;
      const SourcePair<double> sources = pu_hpss(xt, v1, v2, pu, &trace);
      fs::create_directories(rec_out);
      write_wav(fs::path(rec_out) / "percussive.wav", istft(sources.percussive, mixture.samples.size()));
      write_wav(fs::path(rec_out) / "harmonic.wav", istft(sources.harmonic, mixture.samples.size()));
      if (!rec_trace.empty()) write_text(rec_trace, mix_error_csv(trace));
      std::cout << "recovered phases into " << rec_out << "\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      Waveformd ref_p, ref_h;
      if (!ev_stems.empty()) {
        const TrackBundle bundle = load_stems(ev_stems);
        ref_p = bundle.percussive_ref;
        ref_h = bundle.harmonic_ref;
      } else {
        if (ev_ref_perc.empty() || ev_ref_harm.empty()) {
          throw ConfigError("evaluate: need --stems or both --ref-percussive and --ref-harmonic");
        }
        ref_p = to_mono(read_wav(ev_ref_perc));
        ref_h = to_mono(read_wav(ev_ref_harm));
      }
      const Waveformd est_p = to_mono(read_wav(ev_est_perc));
      const Waveformd est_h = to_mono(read_wav(ev_est_harm));
      if (est_p.sample_rate != ref_p.sample_rate || est_h.sample_rate != ref_p.sample_rate ||
          ref_h.sample_rate != ref_p.sample_rate) {
        throw DataError("evaluate: sample rates differ");
      }
      const Index n = std::min({est_p.samples.size(), est_h.samples.size(),
                                ref_p.samples.size(), ref_h.samples.size()});
      const std::vector<Vec<double>> estimates = {est_p.samples.head(n), est_h.samples.head(n)};
      const std::vector<Vec<double>> references = {ref_p.samples.head(n), ref_h.samples.head(n)};
      const EvalReport<double> report =
          evaluate_track(estimates, references, ref_p.sample_rate, ev_proto);
      const std::vector<std::string> names = {"percussive", "harmonic"};
      if (!ev_csv.empty()) write_text(ev_csv, eval_report_csv(report, names));
      if (!ev_json.empty()) write_text(ev_json, eval_report_json(report, names));
      std::printf("percussive  SDR %7.2f  SIR %7.2f  SAR %7.2f\n", report.sources[0].median_sdr,
                  report.sources[0].median_sir, report.sources[0].median_sar);
      std::printf("harmonic    SDR %7.2f  SIR %7.2f  SAR %7.2f\n", report.sources[1].median_sdr,
                  report.sources[1].median_sir, report.sources[1].median_sar);
      std::printf("average     SDR %7.2f  SIR %7.2f  SAR %7.2f\n", report.avg_median_sdr,
                  report.avg_median_sir, report.avg_median_sar);
      return 0;
    }

    if (bench_cmd->parsed()) {
      std::vector<TrackBundle> tracks;
      if (!bn_dataset.empty()) {
        tracks = load_dataset(bn_dataset);
      } else if (bn_synth_tracks > 0) {
        if (!bn_have_seed) throw ConfigError("bench: --seed is required with --synth-tracks");
        for (int i = 0; i < bn_synth_tracks; ++i) {
          tracks.push_back(synth_track(bn_spec, bn_seed + static_cast<std::uint64_t>(i)));
        }
      } else {
        throw ConfigError("bench: need --dataset or --synth-tracks");
      }
      std::vector<RunConfig> configs;
      for (const int setting : bn_settings) {
        for (const auto& est : bn_estimators) {
          for (const auto& ph : bn_phases) {
            RunConfig cfg = make_run_config(setting, est, ph, bn_checkpoint, bn_iterations, bn_seed);
            cfg.eval = bn_proto;
            configs.push_back(cfg);
          }
        }
      }
      const BenchResult result = bench(tracks, configs);
      const std::string table = bench_table(result);
      std::cout << table;
      if (!bn_csv.empty()) write_text(bn_csv, bench_csv(result));
      if (!bn_json.empty()) write_text(bn_json, bench_json(result));
      if (!bn_table.empty()) write_text(bn_table, table);
      return 0;
    }

    if (train_cmd->parsed()) {
      MadConfig<double> cfg = MadConfig<double>::toy(tr_bins);
      cfg.seq_length = tr_seq;
      cfg.context = tr_context;
      if (tr_hidden > 0) cfg.rnn_hidden = tr_hidden;
      if (tr_fnn_hidden > 0) cfg.fnn_hidden = tr_fnn_hidden;
      cfg.twin_weight = tr_twin_weight;

      StftConfig stft_cfg = make_toy_config();
      const int nfft = 2 * (tr_bins - 1);
      if (!is_pow2(nfft)) throw ConfigError("train-toy: --bins must be fft/2+1 for a power-of-two fft");
      stft_cfg.fft_length = nfft;
      stft_cfg.window_length = nfft;
      stft_cfg.hop_length = std::max(1, nfft / 4);

      std::vector<TrainSegment<double>> segments;
      Rng offset_rng(tr_seed);
      for (int i = 0; i < tr_segments; ++i) {
        const TrackBundle bundle = synth_track(tr_spec, tr_seed + 1000 + static_cast<std::uint64_t>(i));
        const MagSpectrogramd vx = magnitude(stft(bundle.mixture, stft_cfg));
        const MagSpectrogramd v1 = magnitude(stft(bundle.percussive_ref, stft_cfg));
        if (vx.num_frames() < cfg.seq_length) {
          throw ConfigError("train-toy: tracks too short for the segment length");
        }
        const Index max_start = vx.num_frames() - cfg.seq_length;
        const Index start = static_cast<Index>(offset_rng.uniform_int(0, max_start));
        segments.push_back({vx.bins.middleCols(start, cfg.seq_length),
                            v1.bins.middleCols(start, cfg.seq_length)});
      }

      TrainOptions opts;
      opts.steps = tr_steps;
      opts.adam.learning_rate = tr_lr;
      const TrainResult<double> result = train(segments, cfg, opts, tr_seed);
      save_checkpoint(tr_out, result.params, cfg);
      if (!tr_loss_csv.empty()) {
        std::string csv = "step,masker_kl,denoiser_kl,twin,total\n";
        char line[160];
        for (std::size_t s = 0; s < result.curve.size(); ++s) {
          const auto& l = result.curve[s];
          std::snprintf(line, sizeof(line), "%zu,%.10e,%.10e,%.10e,%.10e\n", s, l.masker_kl,
                        l.denoiser_kl, l.twin, l.total);
          csv += line;
        }
        write_text(tr_loss_csv, csv);
      }
      std::printf("trained %d steps: total loss %.6g -> %.6g; checkpoint at %s\n", tr_steps,
                  result.curve.front().total, result.curve.back().total, tr_out.c_str());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
