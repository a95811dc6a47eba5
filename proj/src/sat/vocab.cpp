#include <sxtract/sat/vocab.hpp>

#include <sxtract/error.hpp>

namespace sxtract::sat {

Vocab::Vocab() {
  add(std::string(kUnkToken));
  for (auto s : {corpus::Speaker::kDoctor, corpus::Speaker::kPatient, corpus::Speaker::kOther}) add(marker_token(s));
}

std::string Vocab::marker_token(corpus::Speaker s) { return "<" + std::string(corpus::to_string(s)) + ">"; }

Vocab Vocab::build(std::span<const corpus::AnnotatedConversation> corpus) {
  Vocab v;
  for (const auto& ac : corpus) {
    for (const auto& t : ac.conversation.turns) {
      for (const auto& w : t.tokens) v.add(w);
    }
  }
  return v;
}

int Vocab::add(const std::string& word) {
  auto [it, inserted] = index_.emplace(word, static_cast<int>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

int Vocab::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

int Vocab::speaker_marker(corpus::Speaker s) const { return 1 + static_cast<int>(s); }

std::string Vocab::to_text() const {
  std::string out;
  for (const auto& w : words_) {
    out += w;
    out += '\n';
  }
  return out;
}

Vocab Vocab::from_text(std::string_view text) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw ParseError("vocabulary: missing trailing newline");
    words.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  Vocab v;
  if (words.size() < static_cast<std::size_t>(v.size())) throw ParseError("vocabulary: missing reserved tokens");
  for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()); ++i) {
    if (words[i] != v.words_[i]) throw ParseError("vocabulary: reserved token mismatch at line " + std::to_string(i + 1));
  }
  for (std::size_t i = static_cast<std::size_t>(v.size()); i < words.size(); ++i) {
    if (v.add(words[i]) != static_cast<int>(i)) {
      throw ParseError("vocabulary: duplicate word '" + words[i] + "' at line " + std::to_string(i + 1));
    }
  }
  return v;
}

}  // namespace sxtract::sat
