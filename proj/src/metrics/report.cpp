#include <sxtract/metrics/report.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace sxtract::metrics {
namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

void provenance_header(std::ostringstream& out, const ReportProvenance& p) {
  out << "# config_hash=" << hex64(p.config_hash) << " seed=" << p.seed << '\n';
  if (!p.note.empty()) out << "# " << p.note << '\n';
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_table(const std::vector<ReportRow>& rows, const ReportProvenance& provenance) {
  std::ostringstream out;
  provenance_header(out, provenance);
  bool any_mode = false;
  for (const auto& r : rows) {
    for (const auto& e : r.report.entries) any_mode |= e.mode == RefMode::kAny;
  }
  if (any_mode) {
    out << "# NOTE: 'any' mode credits precision against the union of annotators;"
           " its recall is measured against the voted reference.\n";
  }
  const std::vector<std::pair<Weighting, View>> columns = {{Weighting::kUnweighted, View::kSx},
                                                           {Weighting::kUnweighted, View::kSxStatus},
                                                           {Weighting::kWeighted, View::kSx},
                                                           {Weighting::kWeighted, View::kSxStatus}};
  std::size_t name_w = 5;
  for (const auto& r : rows) name_w = std::max(name_w, r.model.size());
  constexpr std::size_t kCell = 24;
  out << pad("model", name_w) << "  " << pad("mode", 6);
  for (const auto& [w, v] : columns) out << "  " << pad(std::string(to_string(w)) + " " + std::string(to_string(v)), kCell);
  out << '\n';
  out << pad("", name_w) << "  " << pad("", 6);
  for (std::size_t i = 0; i < columns.size(); ++i) out << "  " << pad("F1 (Precision, Recall)", kCell);
  out << '\n';
  for (const auto& r : rows) {
    std::vector<RefMode> modes;
    for (const auto& e : r.report.entries) {
      if (std::find(modes.begin(), modes.end(), e.mode) == modes.end()) modes.push_back(e.mode);
    }
    for (RefMode m : modes) {
      out << pad(r.model, name_w) << "  " << pad(std::string(to_string(m)), 6);
      for (const auto& [w, v] : columns) {
        const MetricsCell& c = r.report.at(m, w, v);
        out << "  " << pad(fixed3(c.f1) + " (" + fixed3(c.precision) + ", " + fixed3(c.recall) + ")", kCell);
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string format_tsv(const std::vector<ReportRow>& rows, const ReportProvenance& provenance) {
  std::ostringstream out;
  provenance_header(out, provenance);
  out << "model\tmode\tweighting\tview\tconversations\tprecision\trecall\tf1\n";
  for (const auto& r : rows) {
    for (const auto& e : r.report.entries) {
      out << r.model << '\t' << to_string(e.mode) << '\t' << to_string(e.weighting) << '\t' << to_string(e.view)
          << '\t' << r.report.conversations << '\t' << format_double(e.cell.precision) << '\t'
          << format_double(e.cell.recall) << '\t' << format_double(e.cell.f1) << '\n';
    }
  }
  return out.str();
}

std::string format_per_conversation(const MetricsCell& cell) {
  std::ostringstream out;
  out << "conversation\tprecision\trecall\tf1\n";
  for (const auto& s : cell.per_conversation) {
    out << s.id << '\t' << format_double(s.precision) << '\t' << format_double(s.recall) << '\t'
        << format_double(s.f1) << '\n';
  }
  return out.str();
}

}  // namespace sxtract::metrics
