#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tokfuse {

struct PredictionRecord {
  double confidence = 0.0;  // in [0, 1]
  bool correct = false;
};

struct CalibrationBin {
  double lower = 0.0;  // exclusive, except the first bin which also holds confidence 0
  double upper = 0.0;  // inclusive
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct CalibrationReport {
  std::vector<CalibrationBin> bins;
  std::size_t total = 0;
  double ece = 0.0;
};

inline constexpr std::size_t kDefaultEceBins = 10;

/// Expected calibration error over equal-width, right-closed bins on (0, 1]:
/// a record with confidence c lands in bin ceil(c * bins), with c == 0 in the first bin.
/// ece = sum over bins of (count / N) * |accuracy - mean confidence|.
/// Throws ConfigError for no records or zero bins; ContractViolation for confidences
/// outside [0, 1].
CalibrationReport compute_ece(std::span<const PredictionRecord> records, std::size_t bins = kDefaultEceBins);

/// Zero-based bin index used by compute_ece.
std::size_t ece_bin(double confidence, std::size_t bins);

/// Line-delimited {"confidence": x, "correct": true|false}. ParseError carries the line.
std::vector<PredictionRecord> load_prediction_records(const std::filesystem::path& path);

std::string format_report(const CalibrationReport& report);

}  // namespace tokfuse
