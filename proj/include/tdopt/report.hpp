#pragma once

#include <string>

#include "tdopt/harness.hpp"

namespace tdopt {

enum class ReportFormat { Csv, Json };

// "csv" or "json" (case-insensitive); nullopt otherwise.
std::optional<ReportFormat> report_format_from_string(const std::string& s);

// CSV with the exact header
//   dataset,decomposition,optimizer,seed,batch_index,final_loss,iterations,wall_time_s,q,stop_reason
// one row per cell. Losses and rates use 6 significant digits, times 3
// decimals; an undefined rate is an empty field; a failed cell has empty
// loss and rate fields and stop_reason FAILED.
std::string render_csv(const BenchmarkResult& result);

// JSON object {"rows": [...], "aggregates": [...]} mirroring the CSV schema
// with the same rounding; undefined numbers are null, failed rows carry an
// "error" message, and include_histories adds each row's loss_history.
std::string render_json(const BenchmarkResult& result, bool include_histories = false);

// Renders and writes to path. Throws std::runtime_error when the file cannot
// be written.
void emit_report(const BenchmarkResult& result, ReportFormat format, const std::string& path,
                 bool include_histories = false);

}  // namespace tdopt
