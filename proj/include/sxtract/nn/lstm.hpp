#pragma once

#include <sxtract/nn/graph.hpp>
#include <sxtract/nn/ops.hpp>

#include <random>
#include <string>
#include <vector>

namespace sxtract::nn {

/// One LSTM direction. Gate blocks are laid out [input, forget, candidate, output].
struct LstmParams {
  Parameter* w_input = nullptr;   // E x 4H
  Parameter* w_hidden = nullptr;  // H x 4H
  Parameter* bias = nullptr;      // 1 x 4H

  Index input_dim() const { return w_input->value.rows(); }
  Index hidden_dim() const { return w_hidden->value.rows(); }

  /// Glorot weights, zero bias with the forget-gate block set to +1.
  static LstmParams create(ParameterSet& params, const std::string& prefix, Index input_dim,
                           Index hidden_dim, std::mt19937_64& rng);
  /// Looks up "<prefix>.Wx", "<prefix>.Wh", "<prefix>.b".
  static LstmParams bind(ParameterSet& params, const std::string& prefix);
};

struct BiLstmParams {
  LstmParams forward;
  LstmParams backward;

  Index hidden_dim() const { return forward.hidden_dim(); }
  static BiLstmParams create(ParameterSet& params, const std::string& prefix, Index input_dim,
                             Index hidden_dim, std::mt19937_64& rng);
};

struct LstmState {
  Value h;  // 1 x H
  Value c;  // 1 x H
};

LstmState zero_state(Graph& g, Index hidden_dim);

/// Single step. x_t is 1 x E.
LstmState lstm_cell(const Value& x_t, const LstmState& prev, const LstmParams& params);

/// Runs one direction over the rows of inputs (T x E); returns T x H states in
/// input order. With reverse set, position t summarises inputs t..T-1.
Value lstm_sequence(const Value& inputs, const LstmParams& params, bool reverse,
                    const LstmState* initial = nullptr, LstmState* final_state = nullptr);

/// Bidirectional encoding, T x E -> T x 2H with row t = [forward_t, backward_t].
Value bilstm_encode(const Value& inputs, const BiLstmParams& params);
/// List form: one 1 x E value per position, one 1 x 2H value per position out.
std::vector<Value> bilstm_encode(const std::vector<Value>& sequence, const BiLstmParams& params);

}  // namespace sxtract::nn
