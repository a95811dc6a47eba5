#include <sxtract/corpus/transfer.hpp>

#include <sxtract/error.hpp>

#include <algorithm>
#include <cctype>

namespace sxtract::corpus {
namespace {

bool same_word(const std::string& a, const std::string& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::vector<int> align_tokens(std::span<const std::string> source, std::span<const std::string> target) {
  const std::size_t n = source.size(), m = target.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) dp[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) dp[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = dp[i - 1][j - 1] + (same_word(source[i - 1], target[j - 1]) ? 0 : 1);
      dp[i][j] = std::min({diag, dp[i - 1][j] + 1, dp[i][j - 1] + 1});
    }
  }
  std::vector<int> out(n, -1);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        dp[i][j] == dp[i - 1][j - 1] + (same_word(source[i - 1], target[j - 1]) ? 0 : 1)) {
      out[i - 1] = static_cast<int>(j - 1);
      --i;
      --j;
    } else if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      --i;
    } else {
      --j;
    }
  }
  return out;
}

std::vector<SpanLabel> transfer_span_labels(std::span<const SpanLabel> labels, const Conversation& source,
                                            const Conversation& target, TransferReport& report) {
  std::vector<std::vector<int>> alignments(source.turns.size());
  std::vector<bool> aligned(source.turns.size(), false);
  std::vector<SpanLabel> out;
  for (const SpanLabel& l : labels) {
    ++report.total;
    const auto t = static_cast<std::size_t>(l.turn);
    if (!aligned[t]) {
      alignments[t] = align_tokens(source.turns[t].tokens, target.turns[t].tokens);
      aligned[t] = true;
    }
    int lo = -1, hi = -1;
    bool ok = true;
    for (int k = l.start; k < l.end; ++k) {
      const int a = alignments[t][static_cast<std::size_t>(k)];
      if (a < 0) {
        ok = false;
        break;
      }
      lo = lo < 0 ? a : std::min(lo, a);
      hi = std::max(hi, a);
    }
    if (!ok) {
      ++report.discarded;
      continue;
    }
    SpanLabel moved = l;
    moved.start = lo;
    moved.end = hi + 1;
    out.push_back(std::move(moved));
    ++report.transferred;
  }
  return out;
}

AnnotatedConversation transfer_labels(const AnnotatedConversation& source, const Conversation& target_text,
                                      TransferReport& report) {
  const Conversation& src = source.conversation;
  if (src.turns.size() != target_text.turns.size()) {
    throw Error("transfer_labels: '" + src.id + "' has " + std::to_string(src.turns.size()) +
                " turns but the target has " + std::to_string(target_text.turns.size()));
  }
  for (std::size_t t = 0; t < src.turns.size(); ++t) {
    if (src.turns[t].speaker != target_text.turns[t].speaker) {
      throw Error("transfer_labels: speaker mismatch at turn " + std::to_string(t) + " of '" + src.id + "'");
    }
  }
  AnnotatedConversation out;
  out.conversation = target_text;
  for (const auto& [annotator, labels] : source.annotations) {
    out.annotations[annotator] = transfer_span_labels(labels, src, target_text, report);
  }
  if (source.truth) {
    TransferReport ignored;
    out.truth = transfer_span_labels(*source.truth, src, target_text, ignored);
  }
  return out;
}

}  // namespace sxtract::corpus
