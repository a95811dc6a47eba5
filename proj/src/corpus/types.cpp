#include <sxtract/corpus/types.hpp>

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/error.hpp>

namespace sxtract::corpus {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::kExperienced:
      return "experienced";
    case Status::kNotExperienced:
      return "not_experienced";
    case Status::kOther:
      return "other";
  }
  return "?";
}

Status parse_status(std::string_view s) {
  if (s == "experienced") return Status::kExperienced;
  if (s == "not_experienced") return Status::kNotExperienced;
  if (s == "other") return Status::kOther;
  throw ParseError("unknown status '" + std::string(s) + "'");
}

std::string_view to_string(Speaker s) {
  switch (s) {
    case Speaker::kDoctor:
      return "DR";
    case Speaker::kPatient:
      return "PT";
    case Speaker::kOther:
      return "OTHER";
  }
  return "?";
}

Speaker parse_speaker(std::string_view s) {
  if (s == "DR") return Speaker::kDoctor;
  if (s == "PT") return Speaker::kPatient;
  if (s == "OTHER") return Speaker::kOther;
  throw ParseError("unknown speaker '" + std::string(s) + "'");
}

std::size_t Conversation::token_count() const {
  std::size_t n = 0;
  for (const Turn& t : turns) n += t.tokens.size();
  return n;
}

void MentionSet::add(const MentionKey& key, int count) {
  if (count <= 0) throw Error("MentionSet::add: count must be positive");
  counts_[key] += count;
}

int MentionSet::count(const MentionKey& key) const {
  auto it = counts_.find(key);
  return it == counts_.end() ? 0 : it->second;
}

int MentionSet::total() const {
  int n = 0;
  for (const auto& [k, c] : counts_) n += c;
  return n;
}

MentionSet mentions_from_labels(std::span<const SpanLabel> labels) {
  MentionSet m;
  for (const SpanLabel& l : labels) m.add({l.symptom, l.status});
  return m;
}

const std::vector<SpanLabel>& AnnotatedConversation::primary_labels() const {
  if (annotations.empty()) throw Error("conversation '" + conversation.id + "' has no annotations");
  return annotations.begin()->second;
}

std::string validate_label(const SpanLabel& label, const Conversation& conversation, const Ontology* ontology) {
  if (label.turn < 0 || label.turn >= static_cast<int>(conversation.turns.size())) {
    return "turn index " + std::to_string(label.turn) + " out of range";
  }
  const auto len = static_cast<int>(conversation.turns[static_cast<std::size_t>(label.turn)].tokens.size());
  if (label.start < 0) return "negative span index";
  if (label.end <= label.start) return "empty or inverted span";
  if (label.end > len) return "span end " + std::to_string(label.end) + " beyond turn length " + std::to_string(len);
  if (ontology != nullptr && !ontology->contains(label.symptom)) return "unknown symptom '" + label.symptom + "'";
  return {};
}

}  // namespace sxtract::corpus
