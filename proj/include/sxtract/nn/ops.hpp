#pragma once

#include <sxtract/nn/graph.hpp>

#include <span>
#include <vector>

namespace sxtract::nn {

// Every op records its result on the graph owning its inputs and throws
// ShapeError naming the op and both shapes when operands do not fit.

Value matmul(const Value& a, const Value& b);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
/// Elementwise product.
Value mul(const Value& a, const Value& b);
Value scale(const Value& a, Scalar s);
Value add_scalar(const Value& a, Scalar s);
/// m (R x C) + row (1 x C), broadcast down the rows.
Value add_row(const Value& m, const Value& row);
/// m (R x C) + col (R x 1), broadcast across the columns.
Value add_col(const Value& m, const Value& col);
Value neg(const Value& a);

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator-(const Value& a) { return neg(a); }
inline Value operator*(const Value& a, Scalar s) { return scale(a, s); }
inline Value operator*(Scalar s, const Value& a) { return scale(a, s); }

Value tanh(const Value& a);
Value sigmoid(const Value& a);
Value relu(const Value& a);

Value concat_cols(std::span<const Value> parts);
Value concat_rows(std::span<const Value> parts);
inline Value concat_cols(std::initializer_list<Value> parts) {
  return concat_cols(std::span<const Value>(parts.begin(), parts.size()));
}
inline Value concat_rows(std::initializer_list<Value> parts) {
  return concat_rows(std::span<const Value>(parts.begin(), parts.size()));
}
Value slice(const Value& a, Index row, Index rows, Index col, Index cols);
inline Value slice_rows(const Value& a, Index row, Index rows) { return slice(a, row, rows, 0, a.cols()); }
inline Value slice_cols(const Value& a, Index col, Index cols) { return slice(a, 0, a.rows(), col, cols); }
Value transpose(const Value& a);

/// Row-wise softmax.
Value softmax(const Value& a);
/// Row-wise log-softmax.
Value log_softmax(const Value& a);
/// Overflow-safe log-sum-exp. axis 0 reduces over rows (result 1 x C),
/// axis 1 reduces over columns (result R x 1).
Value logsumexp(const Value& a, int axis);
/// Log-sum-exp over all elements, result 1 x 1.
Value logsumexp_all(const Value& a);

/// Embedding lookup: row i of the result is table.row(ids[i]).
Value gather_rows(const Value& table, std::span<const int> ids);
/// Train-time inverted dropout; the identity in inference mode or at rate 0.
Value dropout(const Value& a, Scalar rate);

Value sum(const Value& a);
Value mean(const Value& a);
/// Column sums over rows (result 1 x C).
Value sum_rows(const Value& a);
Value mean_rows(const Value& a);
Value pick(const Value& a, Index row, Index col);
/// Elements where mask is true are replaced by fill and receive no gradient.
Value mask_fill(const Value& a, const Mask& mask, Scalar fill);

/// Fused LSTM nonlinearity. pre is 1 x 4H laid out as [input, forget,
/// candidate, output] pre-activations; c_prev is 1 x H. Result is 1 x 2H = [h, c].
Value lstm_gates(const Value& pre, const Value& c_prev);

/// -log softmax(logits)[target] for a single 1 x V row.
Value cross_entropy(const Value& logits, int target);

}  // namespace sxtract::nn
