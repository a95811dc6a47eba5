#pragma once

#include <sxtract/corpus/types.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace sxtract::corpus {

/// 2-of-3 majority per (symptom, status) key; the count of an included key
/// is the median of the three per-annotator counts (absent = 0), floored at 1.
/// Throws Error unless exactly three annotations are given.
MentionSet voted_reference(std::span<const std::vector<SpanLabel>> annotations);
MentionSet voted_reference(std::span<const MentionSet> annotator_sets);

/// The per-annotator mention sets, order preserved.
std::vector<MentionSet> any_reference(std::span<const std::vector<SpanLabel>> annotations);

/// Every reference view of one conversation that the metrics need.
struct ReferenceSet {
  std::vector<MentionSet> annotators;
  /// Voted over three annotators; the sole annotator's set otherwise.
  MentionSet voted;
  /// One annotator chosen per conversation by a seeded draw.
  MentionSet single;
};

ReferenceSet build_references(const AnnotatedConversation& conversation, std::uint64_t single_seed = 0);

}  // namespace sxtract::corpus
