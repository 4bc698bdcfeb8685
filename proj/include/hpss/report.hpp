#pragma once

#include <string>
#include <vector>

#include "hpss/bss_eval.hpp"

namespace hpss {

inline constexpr int kReportSchemaVersion = 1;

/// CSV with one row per source x window:
/// source,window_start_s,SDR,SIR,SAR
std::string eval_report_csv(const EvalReport<double>& report,
                            const std::vector<std::string>& source_names);

/// Nested medians plus per-window scores; carries schema_version.
std::string eval_report_json(const EvalReport<double>& report,
                             const std::vector<std::string>& source_names);

}  // namespace hpss
