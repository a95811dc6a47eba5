#pragma once

#include <sxtract/corpus/types.hpp>

#include <span>
#include <string>
#include <vector>

namespace sxtract::corpus {

/// Minimum-edit-distance alignment of two token sequences with unit costs
/// and case-insensitive matching. Entry i is the target index aligned to
/// source token i by a match or substitution, or -1 when i was deleted.
/// Backtrace ties prefer the diagonal, then deletion, then insertion.
std::vector<int> align_tokens(std::span<const std::string> source, std::span<const std::string> target);

struct TransferReport {
  int total = 0;
  int transferred = 0;
  int discarded = 0;

  double discard_rate() const { return total == 0 ? 0.0 : static_cast<double>(discarded) / total; }
  TransferReport& operator+=(const TransferReport& o) {
    total += o.total;
    transferred += o.transferred;
    discarded += o.discarded;
    return *this;
  }
};

/// Maps a label list onto the target transcript. A span survives iff every
/// source token in it aligns to some target token; its new extent is
/// [min, max + 1) of those target indices.
std::vector<SpanLabel> transfer_span_labels(std::span<const SpanLabel> labels, const Conversation& source,
                                            const Conversation& target, TransferReport& report);

/// Moves every annotation (and the ground truth, if present) of source onto
/// target_text. Throws Error when the transcripts are not parallel (turn
/// count or speakers differ). The report counts annotator labels only.
AnnotatedConversation transfer_labels(const AnnotatedConversation& source, const Conversation& target_text,
                                      TransferReport& report);

}  // namespace sxtract::corpus
