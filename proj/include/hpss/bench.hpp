#pragma once

#include <string>
#include <vector>

#include "hpss/pipeline.hpp"

namespace hpss {

/// One scored (track, config, source, window) row.
struct BenchRow {
  std::string track_id;
  std::string method;
  std::string setting;
  std::string source;
  double window_start_s = 0;
  double sdr = 0, sir = 0, sar = 0;
};

/// Aggregated Table-1-style cell set for one (setting, method) pair:
/// per-source medians over all windows of all tracks, plus their average.
struct BenchSummaryRow {
  std::string setting;
  std::string method;
  double percussive_sdr = 0, percussive_sir = 0, percussive_sar = 0;
  double harmonic_sdr = 0, harmonic_sir = 0, harmonic_sar = 0;
  double average_sdr = 0, average_sir = 0, average_sar = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<BenchSummaryRow> summary;
};

/// Runs every config over every track and scores against the references.
/// Tracks must be non-empty. Deterministic given the configs' seeds.
BenchResult bench(const std::vector<TrackBundle>& tracks, const std::vector<RunConfig>& configs);

/// Long-form CSV: track_id,method,setting,source,window_start_s,SDR,SIR,SAR.
std::string bench_csv(const BenchResult& result);

/// Rendered median table mirroring the paper's layout (rows = setting x
/// method, columns = Percussive/Harmonic/Average x SDR/SIR/SAR).
std::string bench_table(const BenchResult& result);

/// JSON summary with schema_version.
std::string bench_json(const BenchResult& result);

}  // namespace hpss
