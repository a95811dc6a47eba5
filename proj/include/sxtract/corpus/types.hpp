#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sxtract::corpus {

enum class Status : int { kExperienced = 0, kNotExperienced = 1, kOther = 2 };
inline constexpr int kStatusCount = 3;

std::string_view to_string(Status s);
/// Accepts "experienced", "not_experienced", "other"; throws ParseError otherwise.
Status parse_status(std::string_view s);

enum class Speaker : int { kDoctor = 0, kPatient = 1, kOther = 2 };

std::string_view to_string(Speaker s);
Speaker parse_speaker(std::string_view s);

struct Turn {
  Speaker speaker = Speaker::kPatient;
  std::vector<std::string> tokens;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::string id;
  std::vector<Turn> turns;

  std::size_t token_count() const;
  friend bool operator==(const Conversation&, const Conversation&) = default;
};

/// Half-open token interval [start, end) inside one turn, with its attributes.
struct SpanLabel {
  int turn = 0;
  int start = 0;
  int end = 0;
  std::string symptom;
  Status status = Status::kExperienced;

  friend bool operator==(const SpanLabel&, const SpanLabel&) = default;
};

struct MentionKey {
  std::string symptom;
  Status status = Status::kExperienced;

  friend auto operator<=>(const MentionKey&, const MentionKey&) = default;
};

/// Multiset of (symptom, status) keys with positive counts.
class MentionSet {
 public:
  using Map = std::map<MentionKey, int>;

  void add(const MentionKey& key, int count = 1);
  int count(const MentionKey& key) const;
  bool contains(const MentionKey& key) const { return counts_.contains(key); }
  std::size_t unique_size() const { return counts_.size(); }
  int total() const;
  bool empty() const { return counts_.empty(); }
  Map::const_iterator begin() const { return counts_.begin(); }
  Map::const_iterator end() const { return counts_.end(); }

  friend bool operator==(const MentionSet&, const MentionSet&) = default;

 private:
  Map counts_;
};

MentionSet mentions_from_labels(std::span<const SpanLabel> labels);

class Ontology;

/// A conversation with per-annotator span labels. Generated corpora also carry
/// the ground truth the annotators were derived from.
struct AnnotatedConversation {
  Conversation conversation;
  std::map<std::string, std::vector<SpanLabel>> annotations;
  std::optional<std::vector<SpanLabel>> truth;

  /// Labels of the first annotator (the sole one for training data).
  const std::vector<SpanLabel>& primary_labels() const;
  friend bool operator==(const AnnotatedConversation&, const AnnotatedConversation&) = default;
};

/// Empty string when the label is valid against the conversation (and the
/// ontology, if given); otherwise a description of the violation.
std::string validate_label(const SpanLabel& label, const Conversation& conversation,
                           const Ontology* ontology = nullptr);

}  // namespace sxtract::corpus
