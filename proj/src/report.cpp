#include "tdopt/report.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tdopt {

namespace {

// 6 significant digits, the precision losses and rates are reported at.
std::string sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// 3 decimals for wall times.
std::string time3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

double round_sig6(double v) { return std::strtod(sig6(v).c_str(), nullptr); }

double round_time3(double v) { return std::strtod(time3(v).c_str(), nullptr); }

const char* stop_label(const CellRow& row) {
  return row.failed ? "FAILED" : to_string(row.report.stop_reason);
}

}  // namespace

std::optional<ReportFormat> report_format_from_string(const std::string& s) {
  std::string v;
  for (char c : s) v.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (v == "csv") return ReportFormat::Csv;
  if (v == "json") return ReportFormat::Json;
  return std::nullopt;
}

std::string render_csv(const BenchmarkResult& result) {
  std::ostringstream out;
  out << "dataset,decomposition,optimizer,seed,batch_index,final_loss,iterations,"
         "wall_time_s,q,stop_reason\n";
  for (const CellRow& row : result.rows) {
    out << row.dataset << ',' << row.decomposition << ',' << row.optimizer << ',' << row.seed
        << ',' << row.batch_index << ',';
    if (!row.failed) out << sig6(row.report.final_loss);
    out << ',' << row.report.iterations << ',' << time3(row.report.wall_time_seconds) << ',';
    if (!row.failed && row.report.convergence_rate_q)
      out << sig6(*row.report.convergence_rate_q);
    out << ',' << stop_label(row) << '\n';
  }
  return out.str();
}

std::string render_json(const BenchmarkResult& result, bool include_histories) {
  nlohmann::json doc;
  doc["rows"] = nlohmann::json::array();
  for (const CellRow& row : result.rows) {
    nlohmann::json r;
    r["dataset"] = row.dataset;
    r["decomposition"] = row.decomposition;
    r["optimizer"] = row.optimizer;
    r["seed"] = row.seed;
    r["batch_index"] = row.batch_index;
    r["final_loss"] =
        row.failed ? nlohmann::json() : nlohmann::json(round_sig6(row.report.final_loss));
    r["iterations"] = row.report.iterations;
    r["wall_time_s"] = round_time3(row.report.wall_time_seconds);
    r["q"] = !row.failed && row.report.convergence_rate_q
                 ? nlohmann::json(round_sig6(*row.report.convergence_rate_q))
                 : nlohmann::json();
    r["stop_reason"] = stop_label(row);
    if (row.failed) r["error"] = row.error;
    if (include_histories) r["loss_history"] = row.report.loss_history;
    doc["rows"].push_back(std::move(r));
  }
  doc["aggregates"] = nlohmann::json::array();
  for (const AggregateRow& agg : result.aggregates) {
    nlohmann::json a;
    a["dataset"] = agg.dataset;
    a["decomposition"] = agg.decomposition;
    a["optimizer"] = agg.optimizer;
    a["cells"] = agg.cells;
    a["failures"] = agg.failures;
    a["mean_final_loss"] =
        agg.mean_final_loss ? nlohmann::json(round_sig6(*agg.mean_final_loss)) : nlohmann::json();
    a["mean_wall_time_s"] =
        agg.mean_wall_time ? nlohmann::json(round_time3(*agg.mean_wall_time)) : nlohmann::json();
    a["mean_q"] = agg.mean_q ? nlohmann::json(round_sig6(*agg.mean_q)) : nlohmann::json();
    doc["aggregates"].push_back(std::move(a));
  }
  return doc.dump(2) + "\n";
}

void emit_report(const BenchmarkResult& result, ReportFormat format, const std::string& path,
                 bool include_histories) {
  const std::string text = format == ReportFormat::Csv ? render_csv(result)
                                                       : render_json(result, include_histories);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
    throw std::runtime_error("cannot write report to " + path);
}

}  // namespace tdopt
