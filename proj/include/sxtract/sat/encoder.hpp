#pragma once

#include <sxtract/corpus/types.hpp>
#include <sxtract/nn/lstm.hpp>
#include <sxtract/sat/vocab.hpp>

#include <random>
#include <span>
#include <string>
#include <vector>

namespace sxtract::sat {

using nn::Index;
using nn::Value;

/// Embedding table plus a stack of bidirectional LSTM layers. Parameters are
/// named "<prefix>.emb" and "<prefix>.lstm<i>.{fw,bw}.{Wx,Wh,b}", so any model
/// built with the same prefix and dimensions can load another's encoder.
struct EncoderParams {
  nn::Parameter* embeddings = nullptr;
  std::vector<nn::BiLstmParams> layers;

  Index vocab_size() const { return embeddings->value.rows(); }
  Index embedding_dim() const { return embeddings->value.cols(); }
  Index hidden_dim() const { return layers.front().hidden_dim(); }
  Index output_dim() const { return 2 * hidden_dim(); }

  static EncoderParams create(nn::ParameterSet& params, const std::string& prefix, Index vocab_size,
                              Index embedding_dim, Index hidden_dim, int layers, std::mt19937_64& rng);
  static EncoderParams bind(nn::ParameterSet& params, const std::string& prefix, int layers);
};

inline constexpr const char* kEncoderPrefix = "enc";

/// T ids -> T x 2H, with dropout after the embeddings and after the last layer.
/// Throws ShapeError on an empty sequence.
Value encode_ids(nn::Graph& g, const EncoderParams& params, std::span<const int> ids, double dropout);

/// Encoder followed by the two-layer tanh feed-forward network.
struct TrunkParams {
  EncoderParams encoder;
  nn::Parameter* w1 = nullptr;
  nn::Parameter* b1 = nullptr;
  nn::Parameter* w2 = nullptr;
  nn::Parameter* b2 = nullptr;

  Index feature_dim() const { return w2->value.cols(); }

  static TrunkParams create(nn::ParameterSet& params, Index vocab_size, Index embedding_dim, Index hidden_dim,
                            int layers, Index ff_dim, std::mt19937_64& rng);
  static TrunkParams bind(nn::ParameterSet& params, int layers);
};

struct TrunkOutput {
  Value hidden;    // T x 2H BiLSTM states
  Value features;  // T x F feed-forward output
};

TrunkOutput run_trunk(nn::Graph& g, const TrunkParams& params, std::span<const int> ids, double dropout);

/// A span of consecutive turns fed to a tagger as one token sequence, each
/// turn prefixed by its speaker marker.
struct InputUnit {
  std::string id;
  int first_turn = 0;
  int end_turn = 0;  // exclusive
  std::vector<int> ids;
  /// Position in ids of token 0 of each turn in [first_turn, end_turn).
  std::vector<int> offsets;

  int position(int turn, int token) const { return offsets[static_cast<std::size_t>(turn - first_turn)] + token; }
};

/// Non-overlapping chunks of turns_per_unit turns; 0 puts the whole conversation in one unit.
std::vector<InputUnit> make_input_units(const corpus::Conversation& conversation, const Vocab& vocab,
                                        int turns_per_unit);

}  // namespace sxtract::sat
