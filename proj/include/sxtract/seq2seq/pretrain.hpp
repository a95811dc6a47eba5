#pragma once

#include <sxtract/corpus/types.hpp>
#include <sxtract/nn/checkpoint.hpp>
#include <sxtract/sat/encoder.hpp>
#include <sxtract/sat/training.hpp>
#include <sxtract/sat/vocab.hpp>
#include <sxtract/seq2seq/seq2seq_model.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace sxtract::seq2seq {

/// k-1 consecutive turns (with speaker markers) as input, the following
/// turn's tokens plus EOS as target. Conversations shorter than two turns
/// give no pairs.
std::vector<TrainingPair> make_pretrain_pairs(const corpus::Conversation& conversation, const sat::Vocab& vocab,
                                              int k);

/// Next-turn prediction: the shared encoder with a throwaway word decoder
/// over the input vocabulary plus EOS. Annotations are ignored.
class NextTurnModel : public sat::TrainableModel {
 public:
  NextTurnModel(const Seq2SeqConfig& config, sat::Vocab vocab, std::uint64_t seed);

  std::string model_type() const override { return "next_turn"; }
  nn::ParameterSet& parameters() override { return params_; }
  std::size_t prepare_training(std::span<const corpus::AnnotatedConversation> train) override;
  std::string unit_id(std::size_t unit) const override { return pairs_.at(unit).id; }
  Value unit_loss(nn::Graph& g, std::size_t unit, bool use_gold_spans) override;
  corpus::MentionSet infer(const corpus::Conversation&) override { return {}; }
  nn::Checkpoint to_checkpoint() const override;

  /// Encoder tensors only, with the vocabulary and dimensions as metadata.
  nn::Checkpoint encoder_checkpoint() const;
  const std::vector<TrainingPair>& pairs() const { return pairs_; }

 private:
  Seq2SeqConfig config_;
  sat::Vocab vocab_;
  nn::ParameterSet params_;
  sat::EncoderParams encoder_;
  AttnDecoderParams decoder_;
  std::vector<TrainingPair> pairs_;
};

struct PretrainResult {
  nn::Checkpoint encoder;
  sat::TrainResult log;
};

/// Builds the vocabulary from the corpus, trains config.pretrain_epochs epochs
/// and returns the encoder-only checkpoint.
PretrainResult pretrain_encoder(std::span<const corpus::AnnotatedConversation> unlabeled,
                                const Seq2SeqConfig& config, std::uint64_t seed);

/// Vocabulary stored in an encoder checkpoint.
sat::Vocab encoder_vocab(const nn::Checkpoint& checkpoint);

}  // namespace sxtract::seq2seq
