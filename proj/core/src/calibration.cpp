#include "tokfuse/calibration.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "tokfuse/errors.hpp"

namespace tokfuse {

std::size_t ece_bin(double confidence, std::size_t bins) {
  const double scaled = std::ceil(confidence * static_cast<double>(bins));
  if (scaled <= 1.0) return 0;
  return std::min(bins, static_cast<std::size_t>(scaled)) - 1;
}

CalibrationReport compute_ece(std::span<const PredictionRecord> records, std::size_t bins) {
  if (records.empty()) throw ConfigError("ECE needs at least one prediction record");
  if (bins == 0) throw ConfigError("ECE needs at least one bin");

  std::vector<double> conf_sum(bins, 0.0);
  std::vector<std::size_t> hits(bins, 0);
  std::vector<std::size_t> counts(bins, 0);
  for (const auto& r : records) {
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
      throw ContractViolation("confidence " + std::to_string(r.confidence) + " outside [0, 1]");
    }
    const std::size_t b = ece_bin(r.confidence, bins);
    ++counts[b];
    conf_sum[b] += r.confidence;
    if (r.correct) ++hits[b];
  }

  CalibrationReport report;
  report.total = records.size();
  const double n = static_cast<double>(records.size());
  for (std::size_t b = 0; b < bins; ++b) {
    CalibrationBin bin;
    bin.lower = static_cast<double>(b) / static_cast<double>(bins);
    bin.upper = static_cast<double>(b + 1) / static_cast<double>(bins);
    bin.count = counts[b];
    if (bin.count > 0) {
      const double c = static_cast<double>(bin.count);
      bin.mean_confidence = conf_sum[b] / c;
      bin.accuracy = static_cast<double>(hits[b]) / c;
      report.ece += (c / n) * std::abs(bin.accuracy - bin.mean_confidence);
    }
    report.bins.push_back(bin);
  }
  return report;
}

std::vector<PredictionRecord> load_prediction_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open records file", path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(lineno, "not a JSON object", path.string());
    const auto c = j.find("confidence");
    const auto k = j.find("correct");
    if (c == j.end() || !c->is_number() || k == j.end() || !k->is_boolean()) {
      throw ParseError(lineno, "expected {\"confidence\": number, \"correct\": bool}", path.string());
    }
    const double conf = c->get<double>();
    if (!(conf >= 0.0 && conf <= 1.0)) throw ParseError(lineno, "confidence outside [0, 1]", path.string());
    out.push_back({conf, k->get<bool>()});
  }
  return out;
}

std::string format_report(const CalibrationReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %8s %10s %10s\n", "bin", "count", "mean_conf", "accuracy");
  out += buf;
  for (const auto& b : report.bins) {
    std::snprintf(buf, sizeof buf, "(%.3f,%.3f] %8zu %10.4f %10.4f\n", b.lower, b.upper, b.count, b.mean_confidence,
                  b.accuracy);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "records=%zu ece=%.6f\n", report.total, report.ece);
  out += buf;
  return out;
}

}  // namespace tokfuse
