#pragma once

#include <sxtract/corpus/types.hpp>

#include <span>
#include <string>
#include <vector>

namespace sxtract::seq2seq {

/// k consecutive turns [first_turn, end_turn) flattened to one token
/// sequence, each turn prefixed by its speaker marker.
struct Window {
  int first_turn = 0;
  int end_turn = 0;
  std::vector<std::string> tokens;
};

/// max(1, ceil((T - k) / stride) + 1) windows starting at i * stride, the last
/// one clamped to end at turn T so every turn is covered. Throws Error unless
/// k >= 1 and stride >= 1.
std::vector<Window> make_windows(const corpus::Conversation& conversation, int k, int stride);

/// (symptom, status) keys of the labels inside the window, in order of first
/// occurrence (turn, then start), without repeats.
std::vector<corpus::MentionKey> window_targets(const Window& window, std::span<const corpus::SpanLabel> labels);

/// A key decoded by a maximal run of consecutive, overlapping windows counts
/// once; its count is the number of such runs. decodes[i] belongs to ranges[i];
/// repeated keys inside one decode count once.
corpus::MentionSet aggregate_windows(std::span<const std::vector<corpus::MentionKey>> decodes,
                                     std::span<const Window> ranges);

}  // namespace sxtract::seq2seq
