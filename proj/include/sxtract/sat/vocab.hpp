#pragma once

#include <sxtract/corpus/types.hpp>

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sxtract::sat {

/// Word vocabulary with a single OOV bucket at id 0 and one marker token per
/// speaker role.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();

  /// Every token of the given conversations, in first-seen order.
  static Vocab build(std::span<const corpus::AnnotatedConversation> corpus);

  int add(const std::string& word);
  /// kUnk for unknown words.
  int id(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  int size() const { return static_cast<int>(words_.size()); }
  int speaker_marker(corpus::Speaker s) const;
  static std::string marker_token(corpus::Speaker s);

  /// Newline-separated words; from_text(to_text()) == *this.
  std::string to_text() const;
  static Vocab from_text(std::string_view text);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace sxtract::sat
