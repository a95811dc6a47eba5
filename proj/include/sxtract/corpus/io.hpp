#pragma once

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/corpus/types.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sxtract::corpus {

// One JSON object per line:
//   {"id": str,
//    "turns": [{"speaker": "DR"|"PT"|"OTHER", "tokens": [str, ...]}, ...],
//    "annotations": {annotator: [{"turn", "start", "end", "symptom", "status"}, ...]},
//    "mentions": {annotator: [{"symptom", "status", "count"}, ...]},
//    "truth": [{"turn", "start", "end", "symptom", "status"}, ...]}   (optional)
// "mentions" is derived from "annotations" and re-checked on load.

std::string to_json_line(const AnnotatedConversation& conversation);
/// Throws ParseError("<source>:<line>: <field path>: <problem>").
AnnotatedConversation from_json_line(std::string_view line, const std::string& source, int line_number,
                                     const Ontology* ontology = nullptr);

void write_corpus(const std::filesystem::path& path, const std::vector<AnnotatedConversation>& corpus);
std::vector<AnnotatedConversation> read_corpus(const std::filesystem::path& path, const Ontology* ontology = nullptr);

}  // namespace sxtract::corpus
