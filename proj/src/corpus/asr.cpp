#include <sxtract/corpus/asr.hpp>

#include <sxtract/error.hpp>

#include <random>
#include <string>
#include <vector>

namespace sxtract::corpus {
namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

std::string near_miss(const std::string& word, std::mt19937_64& rng) {
  std::vector<std::string> options;
  options.push_back(word + "s");
  if (word.size() > 1) options.push_back(word.substr(0, word.size() - 1));
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (!is_vowel(word[i])) continue;
    for (char v : {'a', 'e', 'i', 'o', 'u'}) {
      if (v == word[i]) continue;
      std::string w = word;
      w[i] = v;
      options.push_back(std::move(w));
    }
    break;
  }
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

}  // namespace

void AsrNoiseConfig::validate() const {
  for (double r : {substitution, deletion, insertion}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("asr noise rates must be in [0,1]");
  }
  if (substitution + deletion > 1.0) throw ConfigError("asr noise: substitution + deletion must be <= 1");
}

double AsrResult::word_error_rate() const {
  if (reference_tokens == 0) return 0.0;
  return static_cast<double>(substitutions + deletions + insertions) / static_cast<double>(reference_tokens);
}

AsrResult simulate_asr(const Conversation& conversation, const AsrNoiseConfig& noise, std::uint64_t seed) {
  noise.validate();
  static const std::vector<std::string> hesitations = {"uh", "um", "the", "a", "and", "so", "like"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> hes(0, hesitations.size() - 1);
  AsrResult out;
  out.conversation.id = conversation.id;
  for (const Turn& turn : conversation.turns) {
    Turn noisy;
    noisy.speaker = turn.speaker;
    for (std::size_t i = 0; i < turn.tokens.size(); ++i) {
      const std::string& w = turn.tokens[i];
      ++out.reference_tokens;
      const double u = unit(rng);
      const bool last = i + 1 == turn.tokens.size();
      if (u < noise.deletion) {
        if (last && noisy.tokens.empty()) {
          noisy.tokens.push_back(w);
        } else {
          ++out.deletions;
        }
      } else if (u < noise.deletion + noise.substitution) {
        noisy.tokens.push_back(near_miss(w, rng));
        ++out.substitutions;
      } else {
        noisy.tokens.push_back(w);
      }
      if (unit(rng) < noise.insertion) {
        noisy.tokens.push_back(hesitations[hes(rng)]);
        ++out.insertions;
      }
    }
    out.conversation.turns.push_back(std::move(noisy));
  }
  return out;
}

}  // namespace sxtract::corpus
