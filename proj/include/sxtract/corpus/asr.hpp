#pragma once

#include <sxtract/corpus/types.hpp>

#include <cstdint>

namespace sxtract::corpus {

/// Independent per-token corruption rates.
struct AsrNoiseConfig {
  double substitution = 0.12;
  double deletion = 0.04;
  double insertion = 0.04;

  void validate() const;
};

struct AsrResult {
  Conversation conversation;
  std::size_t reference_tokens = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;

  /// (S + D + I) / N over the reference tokens.
  double word_error_rate() const;
};

/// Simulated recogniser output with the same turns and speakers. Substitutes
/// are near-miss spellings of the original word; inserted words come from a
/// small hesitation vocabulary. A turn's last surviving token is never deleted.
AsrResult simulate_asr(const Conversation& conversation, const AsrNoiseConfig& noise, std::uint64_t seed);

}  // namespace sxtract::corpus
