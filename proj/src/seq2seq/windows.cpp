#include <sxtract/seq2seq/windows.hpp>

#include <sxtract/error.hpp>

#include <algorithm>
#include <map>
#include <set>

namespace sxtract::seq2seq {

std::vector<Window> make_windows(const corpus::Conversation& conversation, int k, int stride) {
  if (k < 1) throw Error("make_windows: k must be >= 1");
  if (stride < 1) throw Error("make_windows: stride must be >= 1");
  const int t = static_cast<int>(conversation.turns.size());
  const int count = t <= k ? 1 : (t - k + stride - 1) / stride + 1;
  std::vector<Window> out;
  for (int i = 0; i < count; ++i) {
    Window w;
    w.first_turn = std::max(0, std::min(i * stride, t - k));
    w.end_turn = std::min(t, w.first_turn + k);
    for (int turn = w.first_turn; turn < w.end_turn; ++turn) {
      const corpus::Turn& tr = conversation.turns[static_cast<std::size_t>(turn)];
      w.tokens.push_back("<" + std::string(corpus::to_string(tr.speaker)) + ">");
      w.tokens.insert(w.tokens.end(), tr.tokens.begin(), tr.tokens.end());
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<corpus::MentionKey> window_targets(const Window& window, std::span<const corpus::SpanLabel> labels) {
  std::vector<const corpus::SpanLabel*> inside;
  for (const auto& l : labels) {
    if (l.turn >= window.first_turn && l.turn < window.end_turn) inside.push_back(&l);
  }
  std::stable_sort(inside.begin(), inside.end(), [](const corpus::SpanLabel* a, const corpus::SpanLabel* b) {
    return a->turn != b->turn ? a->turn < b->turn : a->start < b->start;
  });
  std::vector<corpus::MentionKey> out;
  std::set<corpus::MentionKey> seen;
  for (const corpus::SpanLabel* l : inside) {
    corpus::MentionKey key{l->symptom, l->status};
    if (seen.insert(key).second) out.push_back(std::move(key));
  }
  return out;
}

corpus::MentionSet aggregate_windows(std::span<const std::vector<corpus::MentionKey>> decodes,
                                     std::span<const Window> ranges) {
  if (decodes.size() != ranges.size()) throw Error("aggregate_windows: decodes and ranges differ in length");
  std::map<corpus::MentionKey, std::vector<std::size_t>> where;
  for (std::size_t i = 0; i < decodes.size(); ++i) {
    std::set<corpus::MentionKey> once(decodes[i].begin(), decodes[i].end());
    for (const auto& key : once) where[key].push_back(i);
  }
  corpus::MentionSet out;
  for (const auto& [key, windows] : where) {
    int runs = 1;
    for (std::size_t j = 1; j < windows.size(); ++j) {
      const std::size_t a = windows[j - 1], b = windows[j];
      const bool overlap = ranges[b].first_turn < ranges[a].end_turn && ranges[a].first_turn < ranges[b].end_turn;
      if (b != a + 1 || !overlap) ++runs;
    }
    out.add(key, runs);
  }
  return out;
}

}  // namespace sxtract::seq2seq
