#include <sxtract/corpus/references.hpp>

#include <sxtract/error.hpp>

#include <algorithm>
#include <array>
#include <set>

namespace sxtract::corpus {

MentionSet voted_reference(std::span<const MentionSet> sets) {
  if (sets.size() != 3) {
    throw Error("voted_reference: expected 3 annotations, got " + std::to_string(sets.size()));
  }
  std::set<MentionKey> keys;
  for (const MentionSet& s : sets) {
    for (const auto& [k, c] : s) keys.insert(k);
  }
  MentionSet out;
  for (const MentionKey& k : keys) {
    std::array<int, 3> counts = {sets[0].count(k), sets[1].count(k), sets[2].count(k)};
    const auto present = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; });
    if (present < 2) continue;
    std::sort(counts.begin(), counts.end());
    out.add(k, std::max(counts[1], 1));
  }
  return out;
}

MentionSet voted_reference(std::span<const std::vector<SpanLabel>> annotations) {
  if (annotations.size() != 3) {
    throw Error("voted_reference: expected 3 annotations, got " + std::to_string(annotations.size()));
  }
  const std::vector<MentionSet> sets = any_reference(annotations);
  return voted_reference(std::span<const MentionSet>(sets));
}

std::vector<MentionSet> any_reference(std::span<const std::vector<SpanLabel>> annotations) {
  std::vector<MentionSet> out;
  out.reserve(annotations.size());
  for (const auto& a : annotations) out.push_back(mentions_from_labels(a));
  return out;
}

ReferenceSet build_references(const AnnotatedConversation& conversation, std::uint64_t single_seed) {
  std::vector<std::vector<SpanLabel>> labels;
  for (const auto& [id, l] : conversation.annotations) labels.push_back(l);
  if (labels.empty()) throw Error("conversation '" + conversation.conversation.id + "' has no annotations");
  ReferenceSet r;
  r.annotators = any_reference(labels);
  r.voted = r.annotators.size() == 3 ? voted_reference(std::span<const MentionSet>(r.annotators)) : r.annotators[0];
  // FNV-1a of the id mixed with the seed; stable across platforms.
  std::uint64_t h = 14695981039346656037ULL ^ single_seed;
  for (unsigned char ch : conversation.conversation.id) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  r.single = r.annotators[static_cast<std::size_t>(h % r.annotators.size())];
  return r;
}

}  // namespace sxtract::corpus
