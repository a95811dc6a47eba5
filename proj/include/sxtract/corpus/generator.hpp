#pragma once

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/corpus/types.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace sxtract::corpus {

/// Knobs for the template-based synthetic corpus. Rates are probabilities in
/// [0,1] except mention_rate, the Poisson mean of mentions per conversation.
struct GeneratorConfig {
  int num_symptoms = 20;
  int num_systems = 5;
  /// Surface variants per symptom; each is a one- or two-word phrase.
  int paraphrases = 3;

  int conversations = 100;
  int annotators = 1;
  int train_size = 200;
  int dev_size = 50;
  int test_size = 50;

  double mention_rate = 3.0;
  int min_filler_turns = 3;
  int max_filler_turns = 6;
  /// Fraction of mentions realised as a doctor question plus patient answer,
  /// where only the answer reveals the status.
  double implied_rate = 0.2;
  /// Global status mix; experienced takes the remainder.
  double negation_rate = 0.3;
  double other_rate = 0.15;
  /// Blend between the global status mix (0) and one dominant status per symptom (1).
  double status_skew = 0.6;
  /// Zipf exponent of symptom popularity.
  double symptom_zipf = 1.0;
  /// Probability that a mention repeats an earlier (symptom, status) of the same conversation.
  double repeat_rate = 0.25;
  double other_speaker_rate = 0.05;
  /// Per-label probability that an annotator deviates from the ground truth
  /// (drop the label, swap to a same-system symptom, or shift a boundary).
  double disagreement_rate = 0.1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Surface realisations of every symptom, fixed per world.
struct Lexicon {
  std::vector<std::vector<std::vector<std::string>>> paraphrases;  // [symptom][variant] -> tokens
  std::vector<std::string> topics;                                 // question cue word per symptom
  std::vector<double> popularity;                                  // sampling weight per symptom
  std::vector<std::vector<double>> status_mix;                     // [symptom][status]
};

/// Ontology plus lexicon shared by all splits generated from one seed.
struct SyntheticWorld {
  Ontology ontology;
  Lexicon lexicon;
};

SyntheticWorld make_world(const GeneratorConfig& config, std::uint64_t seed);

/// Deterministic for fixed (world, config, count, annotators, seed, prefix).
std::vector<AnnotatedConversation> generate_conversations(const SyntheticWorld& world, const GeneratorConfig& config,
                                                          int count, int annotators, std::uint64_t seed,
                                                          const std::string& id_prefix);

/// config.conversations conversations with config.annotators annotators each.
std::vector<AnnotatedConversation> generate_corpus(const GeneratorConfig& config, std::uint64_t seed);

struct CorpusSplits {
  Ontology ontology;
  std::vector<AnnotatedConversation> train;  // 1 annotator
  std::vector<AnnotatedConversation> dev;    // 3 annotators
  std::vector<AnnotatedConversation> test;   // 3 annotators
};

CorpusSplits generate_splits(const GeneratorConfig& config, std::uint64_t seed);

/// Derives one annotator's labels from the ground truth by controlled perturbation.
std::vector<SpanLabel> perturb_annotation(const std::vector<SpanLabel>& truth, const Conversation& conversation,
                                          const Ontology& ontology, double rate, std::uint64_t seed);

}  // namespace sxtract::corpus
