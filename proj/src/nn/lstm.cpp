#include <sxtract/nn/lstm.hpp>

#include <sxtract/error.hpp>

namespace sxtract::nn {

LstmParams LstmParams::create(ParameterSet& params, const std::string& prefix, Index input_dim,
                              Index hidden_dim, std::mt19937_64& rng) {
  LstmParams p;
  p.w_input = &params.add(prefix + ".Wx", glorot_init(input_dim, 4 * hidden_dim, rng));
  p.w_hidden = &params.add(prefix + ".Wh", glorot_init(hidden_dim, 4 * hidden_dim, rng));
  Matrix b = Matrix::Zero(1, 4 * hidden_dim);
  b.block(0, hidden_dim, 1, hidden_dim).setOnes();
  p.bias = &params.add(prefix + ".b", std::move(b));
  return p;
}

LstmParams LstmParams::bind(ParameterSet& params, const std::string& prefix) {
  LstmParams p;
  p.w_input = &params.at(prefix + ".Wx");
  p.w_hidden = &params.at(prefix + ".Wh");
  p.bias = &params.at(prefix + ".b");
  return p;
}

BiLstmParams BiLstmParams::create(ParameterSet& params, const std::string& prefix, Index input_dim,
                                  Index hidden_dim, std::mt19937_64& rng) {
  BiLstmParams p;
  p.forward = LstmParams::create(params, prefix + ".fw", input_dim, hidden_dim, rng);
  p.backward = LstmParams::create(params, prefix + ".bw", input_dim, hidden_dim, rng);
  return p;
}

LstmState zero_state(Graph& g, Index hidden_dim) {
  return {g.constant(Matrix::Zero(1, hidden_dim)), g.constant(Matrix::Zero(1, hidden_dim))};
}

namespace {

LstmState step_from_projection(const Value& projected, const LstmState& prev, const Value& w_hidden) {
  const Index h = prev.c.cols();
  Value pre = add(projected, matmul(prev.h, w_hidden));
  Value hc = lstm_gates(pre, prev.c);
  return {slice_cols(hc, 0, h), slice_cols(hc, h, h)};
}

}  // namespace

LstmState lstm_cell(const Value& x_t, const LstmState& prev, const LstmParams& params) {
  Graph& g = x_t.graph();
  const Index h = params.hidden_dim();
  if (x_t.rows() != 1 || x_t.cols() != params.input_dim()) {
    throw ShapeError("lstm_cell: input " + shape_string(x_t.value()) + " vs expected " +
                     shape_string(1, params.input_dim()));
  }
  if (prev.h.cols() != h || prev.c.cols() != h || prev.h.rows() != 1 || prev.c.rows() != 1) {
    throw ShapeError("lstm_cell: state " + shape_string(prev.h.value()) + "/" + shape_string(prev.c.value()) +
                     " vs hidden " + shape_string(1, h));
  }
  Value projected = add(matmul(x_t, g.param(*params.w_input)), g.param(*params.bias));
  return step_from_projection(projected, prev, g.param(*params.w_hidden));
}

Value lstm_sequence(const Value& inputs, const LstmParams& params, bool reverse, const LstmState* initial,
                    LstmState* final_state) {
  Graph& g = inputs.graph();
  const Index steps = inputs.rows();
  if (steps == 0) throw ShapeError("lstm_sequence: empty sequence");
  if (inputs.cols() != params.input_dim()) {
    throw ShapeError("lstm_sequence: input " + shape_string(inputs.value()) + " vs Wx " +
                     shape_string(params.w_input->value));
  }
  Value projected = add_row(matmul(inputs, g.param(*params.w_input)), g.param(*params.bias));
  Value w_hidden = g.param(*params.w_hidden);
  LstmState state = initial != nullptr ? *initial : zero_state(g, params.hidden_dim());
  std::vector<Value> outputs(static_cast<std::size_t>(steps));
  for (Index k = 0; k < steps; ++k) {
    const Index t = reverse ? steps - 1 - k : k;
    state = step_from_projection(slice_rows(projected, t, 1), state, w_hidden);
    outputs[static_cast<std::size_t>(t)] = state.h;
  }
  if (final_state != nullptr) *final_state = state;
  return concat_rows(outputs);
}

Value bilstm_encode(const Value& inputs, const BiLstmParams& params) {
  if (inputs.rows() == 0) throw ShapeError("bilstm_encode: empty sequence");
  Value fw = lstm_sequence(inputs, params.forward, false);
  Value bw = lstm_sequence(inputs, params.backward, true);
  return concat_cols({fw, bw});
}

std::vector<Value> bilstm_encode(const std::vector<Value>& sequence, const BiLstmParams& params) {
  if (sequence.empty()) throw ShapeError("bilstm_encode: empty sequence");
  Value stacked = concat_rows(sequence);
  Value out = bilstm_encode(stacked, params);
  std::vector<Value> rows;
  rows.reserve(sequence.size());
  for (Index t = 0; t < out.rows(); ++t) rows.push_back(slice_rows(out, t, 1));
  return rows;
}

}  // namespace sxtract::nn
