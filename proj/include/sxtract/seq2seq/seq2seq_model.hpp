#pragma once

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/nn/lstm.hpp>
#include <sxtract/sat/config.hpp>
#include <sxtract/sat/encoder.hpp>
#include <sxtract/sat/training.hpp>
#include <sxtract/sat/vocab.hpp>
#include <sxtract/seq2seq/windows.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sxtract::seq2seq {

using nn::Index;
using nn::Matrix;
using nn::Value;

struct Seq2SeqConfig {
  int word_emb_dim = 256;
  int lstm_hidden = 512;
  int layers = 1;
  int attention_dim = 256;
  double dropout = 0.0;
  double l2 = 1e-4;
  double weight_noise_std = 0.2;
  double learning_rate = 3e-3;
  int window_k = 5;
  int window_stride = 1;
  int beam_width = 4;
  /// Decoder steps, EOS included.
  int max_decode_len = 21;
  int epochs = 30;
  int batch_size = 8;
  /// Epochs of next-turn pre-training.
  int pretrain_epochs = 5;

  void validate() const;
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
  std::string to_text() const;
};

/// Decoder token space: symptoms 0..S-1, statuses S..S+2, EOS = S+3, and the
/// decoder start token GO = S+4 (input side only).
class TargetVocab {
 public:
  explicit TargetVocab(int symptoms = 0) : symptoms_(symptoms) {}

  int symptoms() const { return symptoms_; }
  int status_token(corpus::Status s) const { return symptoms_ + static_cast<int>(s); }
  int eos() const { return symptoms_ + corpus::kStatusCount; }
  int go() const { return eos() + 1; }
  int output_size() const { return eos() + 1; }
  int input_size() const { return go() + 1; }
  bool is_symptom(int t) const { return t >= 0 && t < symptoms_; }
  bool is_status(int t) const { return t >= symptoms_ && t < eos(); }

  /// symptom, status, ..., EOS. Throws Error for symptoms outside the ontology.
  std::vector<int> encode(std::span<const corpus::MentionKey> keys, const corpus::Ontology& ontology) const;
  /// Complete (symptom, status) pairs up to EOS or the end of the sequence.
  /// Throws Error when the sequence breaks the alternation grammar.
  std::vector<corpus::MentionKey> decode(std::span<const int> tokens, const corpus::Ontology& ontology) const;
  /// Tokens allowed at decoder position `pos`: symptoms and EOS at even
  /// positions, statuses at odd ones.
  bool allowed(int pos, int token) const;

 private:
  int symptoms_;
};

/// LSTM decoder with additive attention over encoder states.
struct AttnDecoderParams {
  nn::Parameter* embeddings = nullptr;  // input_vocab x E
  nn::LstmParams cell;                  // (E + C) -> D
  nn::Parameter* bridge_w = nullptr;    // C x D
  nn::Parameter* bridge_b = nullptr;    // 1 x D
  nn::Parameter* att_enc = nullptr;     // C x A
  nn::Parameter* att_dec = nullptr;     // D x A
  nn::Parameter* att_b = nullptr;       // 1 x A
  nn::Parameter* att_v = nullptr;       // A x 1
  nn::Parameter* out_w = nullptr;       // (D + C) x V
  nn::Parameter* out_b = nullptr;       // 1 x V

  static AttnDecoderParams create(nn::ParameterSet& params, const std::string& prefix, Index input_vocab,
                                  Index output_vocab, Index embedding_dim, Index context_dim, Index hidden_dim,
                                  Index attention_dim, std::mt19937_64& rng);
  static AttnDecoderParams bind(nn::ParameterSet& params, const std::string& prefix);
};

struct DecoderContext {
  Value states;     // T x C encoder states
  Value projected;  // T x A, states * att_enc
};

DecoderContext make_context(const Value& encoder_states, const AttnDecoderParams& params);
/// h0 = tanh(mean(states) * bridge_w + bridge_b), c0 = 0.
nn::LstmState initial_decoder_state(const DecoderContext& ctx, const AttnDecoderParams& params);

struct DecoderStep {
  nn::LstmState state;
  Value logits;     // 1 x V
  Value attention;  // 1 x T, sums to 1
};

/// Attends with the previous decoder state, feeds [emb(prev); context] to
/// the cell and scores [h; context].
DecoderStep decoder_step(const DecoderContext& ctx, const AttnDecoderParams& params, const nn::LstmState& state,
                         int prev_token);

/// Sum of per-step cross-entropies with teacher forcing, starting from go_token.
Value teacher_forced_loss(const DecoderContext& ctx, const AttnDecoderParams& params, std::span<const int> targets,
                          int go_token, std::vector<Matrix>* attention = nullptr);

struct Decoded {
  std::vector<int> tokens;  // ends with EOS
  /// Sum of the (unrenormalized) log-probabilities of the emitted tokens.
  double log_prob = 0;
  /// log_prob / number of emitted tokens.
  double score = 0;
  Matrix attention;  // one row per emitted token
  bool truncated = false;
};

struct TrainingPair {
  std::string id;
  std::vector<int> input;
  std::vector<int> target;
};

/// Sliding-window encoder-decoder emitting (symptom, status) token pairs.
class Seq2SeqModel : public sat::TrainableModel {
 public:
  Seq2SeqModel(const Seq2SeqConfig& config, sat::Vocab vocab, corpus::Ontology ontology, std::uint64_t seed);
  static std::unique_ptr<Seq2SeqModel> from_checkpoint(const nn::Checkpoint& checkpoint);

  std::string model_type() const override { return "seq2seq"; }
  nn::ParameterSet& parameters() override { return params_; }
  std::size_t prepare_training(std::span<const corpus::AnnotatedConversation> train) override;
  std::string unit_id(std::size_t unit) const override { return pairs_.at(unit).id; }
  Value unit_loss(nn::Graph& g, std::size_t unit, bool use_gold_spans) override;
  corpus::MentionSet infer(const corpus::Conversation& conversation) override;
  nn::Checkpoint to_checkpoint() const override;

  /// Window input ids and target tokens for every window of a conversation.
  std::vector<TrainingPair> make_training_pairs(const corpus::Conversation& conversation,
                                                std::span<const corpus::SpanLabel> labels) const;
  std::vector<int> window_ids(const Window& window) const;

  /// Throws Error for target tokens outside the output vocabulary.
  Value loss(nn::Graph& g, std::span<const int> input, std::span<const int> target);
  /// Model log-probability of a complete target sequence (inference mode,
  /// unrenormalized like beam search).
  double sequence_log_prob(std::span<const int> input, std::span<const int> target);

  Decoded beam_decode(std::span<const int> input, int beam_width, int max_len);
  Decoded greedy_decode(std::span<const int> input, int max_len);

  struct WindowDecode {
    Window window;
    Decoded decoded;
    std::vector<corpus::MentionKey> keys;
  };
  std::vector<WindowDecode> decode_conversation(const corpus::Conversation& conversation);

  void load_encoder(const nn::Checkpoint& checkpoint);

  const Seq2SeqConfig& config() const { return config_; }
  const sat::Vocab& vocab() const { return vocab_; }
  const corpus::Ontology& ontology() const { return ontology_; }
  const TargetVocab& targets() const { return targets_; }
  const std::vector<TrainingPair>& pairs() const { return pairs_; }

 private:
  DecoderContext encode(nn::Graph& g, std::span<const int> input);

  Seq2SeqConfig config_;
  sat::Vocab vocab_;
  corpus::Ontology ontology_;
  TargetVocab targets_;
  nn::ParameterSet params_;
  sat::EncoderParams encoder_;
  AttnDecoderParams decoder_;
  std::vector<TrainingPair> pairs_;
};

/// Flat attention export, one row per weight: conversation, window, step,
/// position, token, weight. No header line.
std::string format_attention(const std::string& conversation_id,
                             std::span<const Seq2SeqModel::WindowDecode> decodes);

}  // namespace sxtract::seq2seq
