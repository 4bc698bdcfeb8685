#include "hpss/bench.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>

namespace hpss {

namespace {

const char* kSourceNames[2] = {"percussive", "harmonic"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

BenchResult bench(const std::vector<TrackBundle>& tracks, const std::vector<RunConfig>& configs) {
  if (tracks.empty()) throw DataError("bench: empty dataset");
  if (configs.empty()) throw ConfigError("bench: no run configurations");
  for (const auto& cfg : configs) validate(cfg);

  BenchResult result;
  for (const auto& cfg : configs) {
    const std::string method = method_label(cfg);
    const std::string setting = setting_label(cfg.setting);
    std::vector<double> pooled[2][3];  // [source][sdr|sir|sar]

    for (const auto& bundle : tracks) {
      const SeparationResult sep = run_separation(bundle, cfg);
      const std::vector<Vec<double>> estimates = {sep.percussive.samples, sep.harmonic.samples};
      const std::vector<Vec<double>> references = {bundle.percussive_ref.samples,
                                                   bundle.harmonic_ref.samples};
      const EvalReport<double> report =
          evaluate_track(estimates, references, bundle.mixture.sample_rate, cfg.eval);
      for (int s = 0; s < 2; ++s) {
        const auto& src = report.sources[static_cast<std::size_t>(s)];
        for (std::size_t w = 0; w < src.windows.size(); ++w) {
          BenchRow row;
          row.track_id = bundle.track_id;
          row.method = method;
          row.setting = setting;
          row.source = kSourceNames[s];
          row.window_start_s = report.window_starts_s[w];
          row.sdr = src.windows[w].sdr;
          row.sir = src.windows[w].sir;
          row.sar = src.windows[w].sar;
          result.rows.push_back(row);
          pooled[s][0].push_back(row.sdr);
          pooled[s][1].push_back(row.sir);
          pooled[s][2].push_back(row.sar);
        }
      }
    }

    BenchSummaryRow sum;
    sum.setting = setting;
    sum.method = method;
    sum.percussive_sdr = median_of(pooled[0][0]);
    sum.percussive_sir = median_of(pooled[0][1]);
    sum.percussive_sar = median_of(pooled[0][2]);
    sum.harmonic_sdr = median_of(pooled[1][0]);
    sum.harmonic_sir = median_of(pooled[1][1]);
    sum.harmonic_sar = median_of(pooled[1][2]);
    sum.average_sdr = (sum.percussive_sdr + sum.harmonic_sdr) / 2.0;
    sum.average_sir = (sum.percussive_sir + sum.harmonic_sir) / 2.0;
    sum.average_sar = (sum.percussive_sar + sum.harmonic_sar) / 2.0;
    result.summary.push_back(sum);
  }
  return result;
}

std::string bench_csv(const BenchResult& result) {
  std::string out = "track_id,method,setting,source,window_start_s,SDR,SIR,SAR\n";
  for (const auto& r : result.rows) {
    out += r.track_id + "," + r.method + "," + r.setting + "," + r.source + "," +
           fmt(r.window_start_s) + "," + fmt(r.sdr) + "," + fmt(r.sir) + "," + fmt(r.sar) + "\n";
  }
  return out;
}

std::string bench_table(const BenchResult& result) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %-28s | %23s | %23s | %23s\n", "", "",
                "Percussive", "Harmonic", "Average");
  out += line;
  std::snprintf(line, sizeof(line), "%-10s %-28s | %7s %7s %7s | %7s %7s %7s | %7s %7s %7s\n",
                "Setting", "Method", "SDR", "SIR", "SAR", "SDR", "SIR", "SAR", "SDR", "SIR", "SAR");
  out += line;
  for (const auto& s : result.summary) {
    std::snprintf(line, sizeof(line),
                  "%-10s %-28s | %7.2f %7.2f %7.2f | %7.2f %7.2f %7.2f | %7.2f %7.2f %7.2f\n",
                  s.setting.c_str(), s.method.c_str(), s.percussive_sdr, s.percussive_sir,
                  s.percussive_sar, s.harmonic_sdr, s.harmonic_sir, s.harmonic_sar, s.average_sdr,
                  s.average_sir, s.average_sar);
    out += line;
  }
  return out;
}

std::string bench_json(const BenchResult& result) {
  nlohmann::json j;
  j["schema_version"] = 1;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : result.summary) {
    rows.push_back({{"setting", s.setting},
                    {"method", s.method},
                    {"percussive", {{"SDR", s.percussive_sdr}, {"SIR", s.percussive_sir}, {"SAR", s.percussive_sar}}},
                    {"harmonic", {{"SDR", s.harmonic_sdr}, {"SIR", s.harmonic_sir}, {"SAR", s.harmonic_sar}}},
                    {"average", {{"SDR", s.average_sdr}, {"SIR", s.average_sir}, {"SAR", s.average_sar}}}});
  }
  j["summary"] = rows;
  return j.dump(2) + "\n";
}

}  // namespace hpss
