#pragma once

#include <sxtract/metrics/metrics.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace sxtract::metrics {

struct ReportRow {
  std::string model;
  MetricsReport report;
};

struct ReportProvenance {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string note;  // free text, e.g. corpus split or projection
};

/// Rows = model x reference mode, columns = weighting x view, cells "F1 (P, R)".
std::string format_table(const std::vector<ReportRow>& rows, const ReportProvenance& provenance);

/// One line per cell: model, mode, weighting, view, conversations, precision, recall, f1.
/// Values are printed with 17 significant digits so reports diff exactly.
std::string format_tsv(const std::vector<ReportRow>& rows, const ReportProvenance& provenance);

/// Per-conversation scores of one cell: id, precision, recall, f1.
std::string format_per_conversation(const MetricsCell& cell);

std::string format_double(double v);
/// 16 lowercase hex digits, zero-padded.
std::string hex64(std::uint64_t v);

}  // namespace sxtract::metrics
