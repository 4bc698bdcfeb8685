#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hpss/bss_eval.hpp"
#include "test_util.hpp"

using namespace hpss;
using hpss::testing::random_waveform;

namespace {

Vec<double> random_vec(Rng& rng, Index n) {
  Vec<double> v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.uniform(-1.0, 1.0);
  return v;
}

/// Two exactly orthogonal, equal-power references on disjoint halves.
std::pair<Vec<double>, Vec<double>> orthogonal_refs(Rng& rng, Index n) {
  Vec<double> r1 = Vec<double>::Zero(n), r2 = Vec<double>::Zero(n);
  for (Index i = 0; i < n / 2; ++i) r1(i) = rng.uniform(-1.0, 1.0);
  for (Index i = n / 2; i < n; ++i) r2(i) = rng.uniform(-1.0, 1.0);
  r1 *= std::sqrt(static_cast<double>(n)) / r1.norm();
  r2 *= std::sqrt(static_cast<double>(n)) / r2.norm();
  return {r1, r2};
}

struct OracleScores {
  double sdr, sir, sar;
  double e_target, e_interf, e_artif;
};

/// Explicit projection oracle: materializes the delayed-reference matrix,
/// solves dense least squares, and reconstructs the component signals.
OracleScores explicit_projection(const Vec<double>& estimate,
                                 const std::vector<Vec<double>>& refs, int taps, double cap) {
  const Index n = estimate.size();
  const Index rows = n + taps - 1;
  const Index n_src = static_cast<Index>(refs.size());
  Mat<double> basis = Mat<double>::Zero(rows, n_src * taps);
  for (Index k = 0; k < n_src; ++k) {
    for (Index tau = 0; tau < taps; ++tau) {
      for (Index i = 0; i < n; ++i) basis(i + tau, k * taps + tau) = refs[static_cast<size_t>(k)](i);
    }
  }
  Vec<double> padded = Vec<double>::Zero(rows);
  padded.head(n) = estimate;

  const Vec<double> coef_all = basis.colPivHouseholderQr().solve(padded);
  const Vec<double> p_all = basis * coef_all;

  Mat<double> own = basis.middleCols(0, taps);  // estimate j == 0 by convention here
  const Vec<double> coef_own = own.colPivHouseholderQr().solve(padded);
  const Vec<double> s_target = own * coef_own;

  const Vec<double> e_interf = p_all - s_target;
  const Vec<double> e_artif = padded - p_all;

  OracleScores out;
  out.e_target = s_target.squaredNorm();
  out.e_interf = e_interf.squaredNorm();
  out.e_artif = e_artif.squaredNorm();
  auto db = [cap](double num, double den) {
    if (num <= 0) return -cap;
    if (den <= 0) return cap;
    return std::clamp(10.0 * std::log10(num / den), -cap, cap);
  };
  out.sdr = db(out.e_target, (e_interf + e_artif).squaredNorm());
  out.sir = db(out.e_target, out.e_interf);
  out.sar = db((s_target + e_interf).squaredNorm(), out.e_artif);
  return out;
}

}  // namespace

TEST_CASE("a perfect estimate scores at the cap on every metric") {
  Rng rng(1);
  auto [r1, r2] = orthogonal_refs(rng, 2000);
  EvalProtocol proto;
  proto.proj_filter_len = 8;
  const auto scores = bss_eval_window<double>({r1, r2}, {r1, r2}, proto);
  for (const auto& s : scores) {
    CHECK(s.sdr == 100.0);
    CHECK(s.sir == 100.0);
    CHECK(s.sar == 100.0);
  }
}

TEST_CASE("the 20 dB interference construction is scored exactly") {
  Rng rng(2);
  auto [r1, r2] = orthogonal_refs(rng, 4000);
  const Vec<double> estimate = r1 + 0.1 * r2;
  EvalProtocol proto;
  proto.proj_filter_len = 1;
  const auto scores = bss_eval_window<double>({estimate, r2}, {r1, r2}, proto);
  CHECK(std::abs(scores[0].sir - 20.0) < 1e-8);
  CHECK(std::abs(scores[0].sdr - 20.0) < 1e-8);
  CHECK(scores[0].sar == 100.0);  // no artifact component at all
}

TEST_CASE("additive noise at -20 dB scores about 20 dB SDR (Monte Carlo)") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const Index n = 8000;
    const Vec<double> r1 = random_vec(rng, n);
    const Vec<double> r2 = random_vec(rng, n);
    Vec<double> noise(n);
    for (Index i = 0; i < n; ++i) noise(i) = rng.normal();
    noise *= (0.1 * r1.norm()) / noise.norm();
    const Vec<double> estimate = r1 + noise;
    EvalProtocol proto;
    proto.proj_filter_len = 1;
    const auto scores = bss_eval_window<double>({estimate, r2}, {r1, r2}, proto);
    CHECK(scores[0].sdr == doctest::Approx(20.0).epsilon(0.025));  // +/- 0.5 dB
  }
}

TEST_CASE("projection energies match the explicit least-squares oracle") {
  Rng rng(3);
  const Index n = 400;
  for (const int taps : {1, 4, 8}) {
    const Vec<double> r1 = random_vec(rng, n);
    const Vec<double> r2 = random_vec(rng, n);
    Vec<double> estimate = 0.8 * r1 + 0.25 * r2;
    for (Index i = 0; i < n; ++i) estimate(i) += 0.05 * rng.normal();

    EvalProtocol proto;
    proto.proj_filter_len = taps;
    const auto got = bss_eval_window<double>({estimate, estimate}, {r1, r2}, proto)[0];
    const OracleScores want = explicit_projection(estimate, {r1, r2}, taps, proto.sdr_cap);
    CHECK(std::abs(got.sdr - want.sdr) < 1e-8);
    CHECK(std::abs(got.sir - want.sir) < 1e-8);
    CHECK(std::abs(got.sar - want.sar) < 1e-8);

    // Orthogonal decomposition accounts for the whole estimate energy.
    const double recomposed = want.e_target + want.e_interf + want.e_artif;
    CHECK(std::abs(recomposed - estimate.squaredNorm()) < 1e-8 * estimate.squaredNorm());
  }
}

TEST_CASE("scaling an estimate moves no metric (validated against the oracle)") {
  Rng rng(4);
  const Index n = 1200;
  const Vec<double> r1 = random_vec(rng, n);
  const Vec<double> r2 = random_vec(rng, n);
  Vec<double> estimate = r1 + 0.3 * r2;
  for (Index i = 0; i < n; ++i) estimate(i) += 0.02 * rng.normal();

  EvalProtocol proto;
  proto.proj_filter_len = 1;
  const auto base = bss_eval_window<double>({estimate, r2}, {r1, r2}, proto)[0];
  for (const double alpha : {0.1, 3.0}) {
    const Vec<double> scaled = alpha * estimate;
    const auto got = bss_eval_window<double>({scaled, r2}, {r1, r2}, proto)[0];
    const OracleScores want = explicit_projection(scaled, {r1, r2}, 1, proto.sdr_cap);
    CHECK(std::abs(got.sir - base.sir) < 1e-9);
    CHECK(std::abs(got.sdr - want.sdr) < 1e-8);
    CHECK(std::abs(got.sar - want.sar) < 1e-8);
    CHECK(std::abs(got.sdr - base.sdr) < 1e-8);
    CHECK(std::abs(got.sar - base.sar) < 1e-8);
  }
}

TEST_CASE("rank-deficient references fall back to the flagged ridge path") {
  Rng rng(5);
  const Index n = 600;
  const Vec<double> r1 = random_vec(rng, n);
  EvalProtocol proto;
  proto.proj_filter_len = 4;
  const auto scores = bss_eval_window<double>({r1, r1}, {r1, r1}, proto);
  CHECK(scores[0].regularized);
  CHECK(std::isfinite(scores[0].sdr));
  CHECK(std::isfinite(scores[0].sir));
  CHECK(std::isfinite(scores[0].sar));
}

TEST_CASE("property: SIR and SAR never fall below SDR") {
  Rng rng(6);
  const Index n = 900;
  for (int trial = 0; trial < 8; ++trial) {
    const Vec<double> r1 = random_vec(rng, n);
    const Vec<double> r2 = random_vec(rng, n);
    Vec<double> estimate = rng.uniform(0.2, 1.5) * r1 + rng.uniform(-0.8, 0.8) * r2;
    for (Index i = 0; i < n; ++i) estimate(i) += 0.1 * rng.normal();
    EvalProtocol proto;
    proto.proj_filter_len = 6;
    const auto s = bss_eval_window<double>({estimate, r2}, {r1, r2}, proto)[0];
    CHECK(s.sir >= s.sdr - 1e-9);
    CHECK(s.sar >= s.sdr - 1e-9);
  }
}

TEST_CASE("evaluate_track enumerates 30/15 windows over a 60 s track") {
  Rng rng(7);
  const int rate = 8000;
  const Index n = 60 * rate;
  const Vec<double> r1 = random_vec(rng, n);
  const Vec<double> r2 = random_vec(rng, n);
  EvalProtocol proto;
  proto.proj_filter_len = 4;
  const auto report = evaluate_track<double>({r1, r2}, {r1, r2}, rate, proto);
  REQUIRE(report.window_starts_s.size() == 3);
  CHECK(report.window_starts_s[0] == 0.0);
  CHECK(report.window_starts_s[1] == 15.0);
  CHECK(report.window_starts_s[2] == 30.0);
}

TEST_CASE("a short track yields a single whole-track window") {
  Rng rng(8);
  const int rate = 8000;
  const Index n = 4 * rate;
  const Vec<double> r1 = random_vec(rng, n);
  const Vec<double> r2 = random_vec(rng, n);
  EvalProtocol proto;
  proto.proj_filter_len = 2;
  const auto report = evaluate_track<double>({r1, r2}, {r1, r2}, rate, proto);
  REQUIRE(report.sources[0].windows.size() == 1);
  CHECK(report.sources[0].median_sdr == report.sources[0].windows[0].sdr);
  CHECK(report.sources[0].median_sar == report.sources[0].windows[0].sar);
}

TEST_CASE("permuting estimate/reference pairs permutes the report rows") {
  Rng rng(9);
  const int rate = 8000;
  const Index n = 2 * rate;
  const Vec<double> r1 = random_vec(rng, n);
  const Vec<double> r2 = random_vec(rng, n);
  Vec<double> e1 = r1;
  Vec<double> e2 = r2;
  for (Index i = 0; i < n; ++i) {
    e1(i) += 0.1 * rng.normal();
    e2(i) += 0.2 * rng.normal();
  }
  EvalProtocol proto;
  proto.proj_filter_len = 3;
  const auto fwd = evaluate_track<double>({e1, e2}, {r1, r2}, rate, proto);
  const auto rev = evaluate_track<double>({e2, e1}, {r2, r1}, rate, proto);
  CHECK(fwd.sources[0].median_sdr == rev.sources[1].median_sdr);
  CHECK(fwd.sources[1].median_sir == rev.sources[0].median_sir);
}

TEST_CASE("windows with a silent reference are skipped and counted") {
  Rng rng(10);
  const int rate = 1000;
  const Index n = 60 * rate;
  Vec<double> r1 = random_vec(rng, n);
  const Vec<double> r2 = random_vec(rng, n);
  // Silence the percussive reference across the last window [30 s, 60 s).
  r1.segment(30 * rate, 30 * rate).setZero();
  EvalProtocol proto;
  proto.proj_filter_len = 2;
  const auto report = evaluate_track<double>({r1, r2}, {r1, r2}, rate, proto);
  CHECK(report.skipped_silent_windows == 1);
  CHECK(report.window_starts_s.size() == 2);

  Vec<double> silent = Vec<double>::Zero(n);
  CHECK_THROWS_AS(evaluate_track<double>({r1, r2}, {silent, r2}, rate, proto), DataError);
}

TEST_CASE("identical inputs give bitwise identical reports") {
  Rng rng(11);
  const int rate = 8000;
  const Index n = 2 * rate;
  const Vec<double> r1 = random_vec(rng, n);
  const Vec<double> r2 = random_vec(rng, n);
  Vec<double> e1 = r1 + 0.3 * r2;
  EvalProtocol proto;
  proto.proj_filter_len = 16;
  const auto a = evaluate_track<double>({e1, r2}, {r1, r2}, rate, proto);
  const auto b = evaluate_track<double>({e1, r2}, {r1, r2}, rate, proto);
  CHECK(a.sources[0].median_sdr == b.sources[0].median_sdr);
  CHECK(a.sources[0].median_sir == b.sources[0].median_sir);
  CHECK(a.sources[1].median_sar == b.sources[1].median_sar);
}

TEST_CASE("input validation") {
  Rng rng(12);
  const Vec<double> r1 = random_vec(rng, 100);
  const Vec<double> short_ref = random_vec(rng, 50);
  EvalProtocol proto;
  CHECK_THROWS_AS(bss_eval_window<double>({r1}, {short_ref}, proto), std::invalid_argument);
  CHECK_THROWS_AS(bss_eval_window<double>({r1}, {}, proto), std::invalid_argument);
  proto.overlap_seconds = 40.0;
  CHECK_THROWS_AS(validate(proto), std::invalid_argument);
}
