// Acceptance suite: runs every desk-scale criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cstdio>
#include <vector>

#include "hpss/bench.hpp"
#include "hpss/checkpoint.hpp"
#include "hpss/median_hpss.hpp"
#include "hpss/phase_recovery.hpp"
#include "hpss/pipeline.hpp"
#include "hpss/synth.hpp"
#include "hpss/train.hpp"
#include "test_util.hpp"

using namespace hpss;
using hpss::testing::flatten;
using hpss::testing::param_at;
using hpss::testing::random_matrix;
using hpss::testing::random_waveform;
using hpss::testing::rel_err;

namespace {

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %s (%s)\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- 1. STFT round-trip -----------------------------------------------------
void criterion_stft_round_trip() {
  Rng rng(0xA001);
  double worst = 0.0;
  const std::vector<std::pair<StftConfig, int>> configs = {
      {make_setting(Setting::Setting1, 44100), 44100},
      {make_setting(Setting::Setting2, 44100), 44100},
      {make_toy_config(), 8000},
  };
  for (const auto& [cfg, rate] : configs) {
    for (int trial = 0; trial < 50; ++trial) {
      const Index n = rate / 5 + static_cast<Index>(rng.uniform_int(0, rate / 5));
      const Waveformd x = random_waveform(rng, n, rate);
      const Waveformd y = istft(stft(x, cfg), n);
      worst = std::max(worst, (y.samples - x.samples).cwiseAbs().maxCoeff());
    }
  }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "max abs reconstruction error %.3e, tolerance 1e-10", worst);
  report("STFT round-trip (Settings 1+2 at 44.1 kHz, toy config at 8 kHz)", worst < 1e-10, detail);
}

// --- 2 + 3. PU-HPSS magnitude constraint and monotone mixing error ----------
void criterion_pu_hpss_fixtures() {
  Rng rng(0xA002);
  StftConfig cfg = make_toy_config();
  PuHpssConfig pcfg;
  pcfg.max_iter = 50;

  double worst_mag = 0.0;
  double worst_increase = 0.0;
  for (int fixture = 0; fixture < 20; ++fixture) {
    const ComplexSpectrogramd x = stft(random_waveform(rng, 2000, 8000), cfg);
    const Index bins = x.num_bins(), frames = x.num_frames();
    MagSpectrogramd v1, v2;
    v1.config = v2.config = cfg;
    v1.sample_rate = v2.sample_rate = 8000;
    v1.bins = random_matrix(rng, bins, frames, 0.0, 1.0);
    v2.bins = random_matrix(rng, bins, frames, 0.0, 1.0);

    MixErrorTrace<double> trace;
    const SourcePair<double> got = pu_hpss(x, v1, v2, pcfg, &trace);
    for (Index t = 0; t < frames; ++t) {
      for (Index f = 0; f < bins; ++f) {
        if (v1.bins(f, t) > 0) {
          worst_mag = std::max(worst_mag, std::abs(std::abs(got.percussive.bins(f, t)) - v1.bins(f, t)) /
                                              v1.bins(f, t));
        }
        if (v2.bins(f, t) > 0) {
          worst_mag = std::max(worst_mag, std::abs(std::abs(got.harmonic.bins(f, t)) - v2.bins(f, t)) /
                                              v2.bins(f, t));
        }
      }
      for (Index it = 1; it < trace.c.rows(); ++it) {
        worst_increase = std::max(worst_increase, trace.c(it, t) - trace.c(it - 1, t));
      }
    }
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail), "max relative magnitude deviation %.3e, tolerance 1e-12",
                worst_mag);
  report("PU-HPSS magnitude constraint (20 fixtures, 50 iterations)", worst_mag < 1e-12, detail);

  // Disjoint-support oracle fixture.
  const ComplexSpectrogramd a = stft(random_waveform(rng, 4000, 8000), cfg);
  const ComplexSpectrogramd b = stft(random_waveform(rng, 4000, 8000), cfg);
  CMat<double> s1 = CMat<double>::Zero(a.num_bins(), a.num_frames());
  CMat<double> s2 = s1;
  for (Index t = 0; t < a.num_frames(); ++t) {
    for (Index f = 0; f < a.num_bins(); ++f) {
      if ((f / 8 + t / 4) % 2 == 0) {
        s1(f, t) = a.bins(f, t);
      } else {
        s2(f, t) = b.bins(f, t);
      }
    }
  }
  ComplexSpectrogramd x;
  x.config = cfg;
  x.sample_rate = 8000;
  x.bins = s1 + s2;
  MagSpectrogramd v1, v2;
  v1.config = v2.config = cfg;
  v1.sample_rate = v2.sample_rate = 8000;
  v1.bins = s1.cwiseAbs();
  v2.bins = s2.cwiseAbs();
  MixErrorTrace<double> trace;
  pu_hpss(x, v1, v2, pcfg, &trace);
  const double final_c = trace.c.row(trace.c.rows() - 1).sum();
  const double budget = 1e-6 * x.bins.squaredNorm();

  char detail2[200];
  std::snprintf(detail2, sizeof(detail2),
                "max per-frame error increase %.3e (slack 1e-9); disjoint fixture C=%.3e vs budget %.3e",
                worst_increase, final_c, budget);
  report("PU-HPSS monotone mixing error + disjoint-support convergence",
         worst_increase < 1e-9 && final_c < budget, detail2);
}

// --- 4. Phase-unwrapping fidelity -------------------------------------------
void criterion_phase_unwrapping() {
  // Setting 2 analog at 8 kHz: window == fft (no zero-padding), 25% hop.
  StftConfig cfg;
  cfg.window_length = 512;
  cfg.hop_length = 128;
  cfg.fft_length = 512;
  cfg.window_kind = WindowKind::Hamming;
  cfg.center_pad = true;

  const Index n = 8000;
  const int k = static_cast<int>(std::llround(440.0 * cfg.fft_length / 8000.0));  // bin 28 = 437.5 Hz
  Vec<double> s(n);
  const double nu_true = static_cast<double>(k) / cfg.fft_length;
  for (Index i = 0; i < n; ++i) s(i) = std::cos(two_pi_v<double> * nu_true * i + 0.3);
  const ComplexSpectrogramd spec = stft(Waveformd{s, 8000}, cfg);
  const Mat<double> measured = phase(spec);
  const FrequencyField<double> field = estimate_frequencies(magnitude(spec));

  auto interior = [&](Index t) {
    const Index start = t * cfg.hop_length - cfg.window_length / 2;
    return start >= 0 && start + cfg.window_length <= n;
  };
  double worst_phase = 0.0;
  double phi = 0.0;
  bool started = false;
  for (Index t = 0; t < spec.num_frames(); ++t) {
    if (!interior(t)) continue;
    if (!started) {
      phi = measured(k, t);
      started = true;
      continue;
    }
    phi = unwrap_phase_step(phi, cfg.hop_length, field.nu(k, t));
    worst_phase = std::max(worst_phase, std::abs(wrap_phase(phi - measured(k, t))));
  }

  // Off-bin tone for the QIFFT bound.
  const double off_bin = k + 0.3;
  for (Index i = 0; i < n; ++i) s(i) = std::cos(two_pi_v<double> * (off_bin / cfg.fft_length) * i + 1.1);
  const MagSpectrogramd v2 = magnitude(stft(Waveformd{s, 8000}, cfg));
  const FrequencyField<double> off = estimate_frequencies(v2);
  double worst_bin = 0.0;
  for (Index t = 0; t < v2.num_frames(); ++t) {
    if (!interior(t)) continue;
    worst_bin = std::max(worst_bin, std::abs(off.nu(k, t) * cfg.fft_length - off_bin));
  }

  char detail[180];
  std::snprintf(detail, sizeof(detail),
                "trajectory error %.3e rad (tol 1e-6); QIFFT error %.4f bins (tol 0.02)", worst_phase,
                worst_bin);
  report("Phase-unwrapping fidelity (440 Hz tone, Setting 2 analog at 8 kHz)",
         worst_phase < 1e-6 && worst_bin < 0.02, detail);
}

// --- 5. Gradient check -------------------------------------------------------
void criterion_gradient_check() {
  const auto start = std::chrono::steady_clock::now();
  MadConfig<double> cfg;
  cfg.n_bins = 9;
  cfg.seq_length = 8;
  cfg.context = 1;
  cfg.rnn_hidden = 5;
  cfg.fnn_hidden = 7;

  double worst = 0.0;
  Index probed = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    MadParameters<double> params = MadParameters<double>::init(cfg, seed);
    Rng rng(seed * 7919);
    const Mat<double> vx = random_matrix(rng, cfg.n_bins, cfg.seq_length, 0.1, 1.0);
    const Mat<double> target = random_matrix(rng, cfg.n_bins, cfg.central_frames(), 0.1, 1.0);

    const ForwardTrace<double> tr = forward_full(vx, params, cfg, true);
    MadParameters<double> grad = backward(tr, target, params, cfg);
    auto flat = flatten(grad);
    for (Index k = 0; k < flat.total; ++k) {
      const double analytic = param_at(flat, k);
      worst = std::max(worst, hpss::testing::fd_rel_err(params, cfg, vx, target, k, analytic));
      ++probed;
    }
  }
  const double elapsed = seconds_since(start);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max relative error %.3e over %lld parameters, 10 seeds, %.1f s (tol 1e-4, 60 s)",
                worst, static_cast<long long>(probed), elapsed);
  report("MaD TwinNet gradient check vs central differences", worst < 1e-4 && elapsed < 60.0, detail);
}

// --- 6. Overfit check ---------------------------------------------------------
void criterion_overfit() {
  const auto start = std::chrono::steady_clock::now();
  const MadConfig<double> cfg = MadConfig<double>::toy(129);

  const TrackBundle bundle = synth_track(SynthSpec{}, 0xBEEF);
  const StftConfig stft_cfg = make_toy_config();
  const MagSpectrogramd vx = magnitude(stft(bundle.mixture, stft_cfg));
  const MagSpectrogramd v1 = magnitude(stft(bundle.percussive_ref, stft_cfg));

  TrainSegment<double> segment;
  segment.vx = vx.bins.middleCols(100, cfg.seq_length);
  segment.v1_target = v1.bins.middleCols(100, cfg.seq_length);

  TrainOptions opts;
  opts.steps = 500;
  opts.adam.learning_rate = 5e-3;
  const TrainResult<double> result = train<double>({segment}, cfg, opts, 1234);

  const double initial_kl = result.curve.front().masker_kl + result.curve.front().denoiser_kl;
  const double final_kl = result.curve.back().masker_kl + result.curve.back().denoiser_kl;
  const double twin_initial = result.curve.front().twin;
  const double twin_final = result.curve.back().twin;
  const double elapsed = seconds_since(start);

  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "combined KL %.4g -> %.4g (%.2f%% of initial, tol 1%%); twin %.4g -> %.4g; %.1f s "
                "(tol 300 s)",
                initial_kl, final_kl, 100.0 * final_kl / initial_kl, twin_initial, twin_final,
                elapsed);
  report("Overfit check (single segment, 500 steps, toy scale)",
         final_kl < 0.01 * initial_kl && twin_final < twin_initial && elapsed < 300.0, detail);
}

// --- 7. End-to-end ordering ---------------------------------------------------
void criterion_end_to_end() {
  SynthSpec spec;  // 10 s at 8 kHz by default
  std::vector<TrackBundle> tracks;
  for (int i = 0; i < 20; ++i) tracks.push_back(synth_track(spec, 0xE2E0 + static_cast<std::uint64_t>(i)));

  RunConfig mixture_cfg;
  mixture_cfg.setting = Setting::Setting1;
  mixture_cfg.estimator = EstimatorKind::Oracle;
  mixture_cfg.phase = PhaseKind::MixturePhase;

  RunConfig pu_cfg = mixture_cfg;
  pu_cfg.phase = PhaseKind::PuHpss;
  pu_cfg.pu.max_iter = 50;

  const BenchResult result = bench(tracks, {mixture_cfg, pu_cfg});
  const BenchSummaryRow& mix = result.summary[0];
  const BenchSummaryRow& pu = result.summary[1];

  const double sir_gain = pu.percussive_sir - mix.percussive_sir;
  const double sdr_drop = std::max(mix.percussive_sdr - pu.percussive_sdr,
                                   mix.harmonic_sdr - pu.harmonic_sdr);
  const double sar_drop = std::max(mix.percussive_sar - pu.percussive_sar,
                                   mix.harmonic_sar - pu.harmonic_sar);

  char detail[240];
  std::snprintf(detail, sizeof(detail),
                "percussive SIR %.3f dB (mixture) vs %.3f dB (PU-HPSS), gain %+.3f dB; worst "
                "SDR drop %.3f dB, worst SAR drop %.3f dB (caps 0.5)",
                mix.percussive_sir, pu.percussive_sir, sir_gain, sdr_drop, sar_drop);
  report("End-to-end ordering (20 synthetic tracks, oracle magnitudes)",
         sir_gain >= 0.0 && sdr_drop < 0.5 && sar_drop < 0.5, detail);
}

// --- 8. BSS-eval oracle equivalence --------------------------------------------
void criterion_bss_oracle() {
  Rng rng(0xA008);
  const Index n = 4000;
  Vec<double> r1 = Vec<double>::Zero(n), r2 = Vec<double>::Zero(n);
  for (Index i = 0; i < n / 2; ++i) r1(i) = rng.uniform(-1.0, 1.0);
  for (Index i = n / 2; i < n; ++i) r2(i) = rng.uniform(-1.0, 1.0);
  r1 *= std::sqrt(static_cast<double>(n)) / r1.norm();
  r2 *= std::sqrt(static_cast<double>(n)) / r2.norm();

  EvalProtocol proto;
  proto.proj_filter_len = 1;

  // Closed-form 1-tap scores for estimate = a*r1 + b*r2 with orthogonal refs.
  auto closed_form = [&](double a, double b) {
    const double e1 = r1.squaredNorm(), e2 = r2.squaredNorm();
    const double et = a * a * e1;
    const double ei = b * b * e2;
    auto db = [&proto](double num, double den) {
      if (num <= 0) return -proto.sdr_cap;
      if (den <= 0) return proto.sdr_cap;
      return std::clamp(10.0 * std::log10(num / den), -proto.sdr_cap, proto.sdr_cap);
    };
    return std::array<double, 3>{db(et, ei), db(et, ei), db(et + ei, 0.0)};  // SDR, SIR, SAR
  };

  double worst = 0.0;
  double sir20 = -1.0;
  const std::array<std::pair<double, double>, 3> cases = {{{1.0, 0.1}, {0.7, 0.25}, {2.0, 0.02}}};
  for (const auto& [a, b] : cases) {
    const Vec<double> estimate = a * r1 + b * r2;
    const auto got = bss_eval_window<double>({estimate, r2}, {r1, r2}, proto)[0];
    const auto want = closed_form(a, b);
    worst = std::max({worst, std::abs(got.sdr - want[0]), std::abs(got.sir - want[1]),
                      std::abs(got.sar - want[2])});
    if (a == 1.0 && b == 0.1) sir20 = got.sir;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max deviation from closed form %.3e dB (tol 1e-8); 20 dB case scored %.10f dB",
                worst, sir20);
  report("BSS-eval closed-form oracle equivalence (1-tap filters)",
         worst < 1e-8 && std::abs(sir20 - 20.0) < 1e-8, detail);
}

// --- 9. Bench determinism -------------------------------------------------------
void criterion_bench_determinism() {
  SynthSpec spec;
  spec.duration_s = 3.0;
  std::vector<TrackBundle> tracks;
  for (int i = 0; i < 3; ++i) tracks.push_back(synth_track(spec, 0xD000 + static_cast<std::uint64_t>(i)));

  RunConfig cfg;
  cfg.setting = Setting::Setting1;
  cfg.estimator = EstimatorKind::MedianFilter;
  cfg.phase = PhaseKind::PuHpss;
  cfg.pu.max_iter = 10;
  cfg.eval.proj_filter_len = 64;
  cfg.seed = 99;

  const std::string a = bench_csv(bench(tracks, {cfg}));
  const std::string b = bench_csv(bench(tracks, {cfg}));
  char detail[96];
  std::snprintf(detail, sizeof(detail), "%zu CSV bytes, byte-identical: %s", a.size(),
                a == b ? "yes" : "no");
  report("Bench determinism (fixed seeds, bitwise-identical CSV)", !a.empty() && a == b, detail);
}

}  // namespace

int main() {
  std::printf("hpsskit acceptance suite\n");
  const auto start = std::chrono::steady_clock::now();

  criterion_stft_round_trip();
  criterion_pu_hpss_fixtures();
  criterion_phase_unwrapping();
  criterion_gradient_check();
  criterion_overfit();
  criterion_end_to_end();
  criterion_bss_oracle();
  criterion_bench_determinism();

  std::printf("%s: %d failure(s) in %.1f s\n", failures == 0 ? "ALL PASS" : "FAILED", failures,
              seconds_since(start));
  return failures == 0 ? 0 : 1;
}
