#include "hpss/report.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>

namespace hpss {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string eval_report_csv(const EvalReport<double>& report,
                            const std::vector<std::string>& source_names) {
  std::string out = "source,window_start_s,SDR,SIR,SAR\n";
  for (std::size_t k = 0; k < report.sources.size(); ++k) {
    const auto& src = report.sources[k];
    for (std::size_t w = 0; w < src.windows.size(); ++w) {
      out += source_names.at(k) + "," + fmt(report.window_starts_s[w]) + "," +
             fmt(src.windows[w].sdr) + "," + fmt(src.windows[w].sir) + "," +
             fmt(src.windows[w].sar) + "\n";
    }
  }
  return out;
}

std::string eval_report_json(const EvalReport<double>& report,
                             const std::vector<std::string>& source_names) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["skipped_silent_windows"] = report.skipped_silent_windows;
  j["regularized"] = report.any_regularized;
  j["window_starts_s"] = report.window_starts_s;
  for (std::size_t k = 0; k < report.sources.size(); ++k) {
    const auto& src = report.sources[k];
    nlohmann::json s;
    s["median"] = {{"SDR", src.median_sdr}, {"SIR", src.median_sir}, {"SAR", src.median_sar}};
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : src.windows) {
      windows.push_back({{"SDR", w.sdr}, {"SIR", w.sir}, {"SAR", w.sar}});
    }
    s["windows"] = windows;
    j["sources"][source_names.at(k)] = s;
  }
  j["average"] = {{"SDR", report.avg_median_sdr},
                  {"SIR", report.avg_median_sir},
                  {"SAR", report.avg_median_sar}};
  return j.dump(2) + "\n";
}

}  // namespace hpss
