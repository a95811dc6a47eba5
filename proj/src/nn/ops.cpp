#include <sxtract/nn/ops.hpp>

#include <sxtract/error.hpp>

#include <cmath>
#include <string>

namespace sxtract::nn {
namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

Graph& same_graph(const char* op, const Value& a, const Value& b) {
  if (&a.graph() != &b.graph()) throw Error(std::string(op) + ": operands live on different graphs");
  return a.graph();
}

void require_same_shape(const char* op, const Value& a, const Value& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_fail(op, a.value(), b.value());
}

// Row-wise log-sum-exp of a matrix, shape R x 1.
Eigen::VectorXd row_lse(const Matrix& x) {
  Eigen::VectorXd out(x.rows());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    out(r) = m + std::log((x.row(r).array() - m).exp().sum());
  }
  return out;
}

}  // namespace

Value matmul(const Value& a, const Value& b) {
  Graph& g = same_graph("matmul", a, b);
  if (a.cols() != b.rows()) shape_fail("matmul", a.value(), b.value());
  const int ia = a.id(), ib = b.id();
  return g.record(a.value() * b.value(), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    if (g.requires_grad(ia)) g.grad_ref(ia).noalias() += go * g.value(ib).transpose();
    if (g.requires_grad(ib)) g.grad_ref(ib).noalias() += g.value(ia).transpose() * go;
  });
}

Value add(const Value& a, const Value& b) {
  Graph& g = same_graph("add", a, b);
  require_same_shape("add", a, b);
  const int ia = a.id(), ib = b.id();
  return g.record(a.value() + b.value(), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    if (g.requires_grad(ia)) g.grad_ref(ia) += go;
    if (g.requires_grad(ib)) g.grad_ref(ib) += go;
  });
}

Value sub(const Value& a, const Value& b) {
  Graph& g = same_graph("sub", a, b);
  require_same_shape("sub", a, b);
  const int ia = a.id(), ib = b.id();
  return g.record(a.value() - b.value(), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    if (g.requires_grad(ia)) g.grad_ref(ia) += go;
    if (g.requires_grad(ib)) g.grad_ref(ib) -= go;
  });
}

Value mul(const Value& a, const Value& b) {
  Graph& g = same_graph("mul", a, b);
  require_same_shape("mul", a, b);
  const int ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value());
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    if (g.requires_grad(ia)) g.grad_ref(ia) += go.cwiseProduct(g.value(ib));
    if (g.requires_grad(ib)) g.grad_ref(ib) += go.cwiseProduct(g.value(ia));
  });
}

Value scale(const Value& a, Scalar s) {
  const int ia = a.id();
  return a.graph().record(a.value() * s, {ia}, [ia, s](Graph& g, int self) {
    g.grad_ref(ia) += g.grad(self) * s;
  });
}

Value add_scalar(const Value& a, Scalar s) {
  const int ia = a.id();
  Matrix out = a.value().array() + s;
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, int self) { g.grad_ref(ia) += g.grad(self); });
}

Value neg(const Value& a) { return scale(a, -1.0); }

Value add_row(const Value& m, const Value& row) {
  Graph& g = same_graph("add_row", m, row);
  if (row.rows() != 1 || row.cols() != m.cols()) shape_fail("add_row", m.value(), row.value());
  const int im = m.id(), ir = row.id();
  Matrix out = m.value().rowwise() + row.value().row(0);
  return g.record(std::move(out), {im, ir}, [im, ir](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    if (g.requires_grad(im)) g.grad_ref(im) += go;
    if (g.requires_grad(ir)) g.grad_ref(ir) += go.colwise().sum();
  });
}

Value add_col(const Value& m, const Value& col) {
  Graph& g = same_graph("add_col", m, col);
  if (col.cols() != 1 || col.rows() != m.rows()) shape_fail("add_col", m.value(), col.value());
  const int im = m.id(), ic = col.id();
  Matrix out = m.value().colwise() + col.value().col(0);
  return g.record(std::move(out), {im, ic}, [im, ic](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    if (g.requires_grad(im)) g.grad_ref(im) += go;
    if (g.requires_grad(ic)) g.grad_ref(ic) += go.rowwise().sum();
  });
}

Value tanh(const Value& a) {
  const int ia = a.id();
  Matrix out = a.value().array().tanh();
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.value(self);
    g.grad_ref(ia).array() += g.grad(self).array() * (1.0 - y.array().square());
  });
}

Value sigmoid(const Value& a) {
  const int ia = a.id();
  Matrix out = (1.0 + (-a.value().array()).exp()).inverse();
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.value(self);
    g.grad_ref(ia).array() += g.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Value relu(const Value& a) {
  const int ia = a.id();
  Matrix out = a.value().cwiseMax(0.0);
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& x = g.value(ia);
    g.grad_ref(ia).array() += (x.array() > 0.0).select(g.grad(self).array(), 0.0);
  });
}

Value concat_cols(std::span<const Value> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Graph& g = parts[0].graph();
  const Index rows = parts[0].rows();
  Index cols = 0;
  std::vector<int> ids;
  for (const Value& p : parts) {
    same_graph("concat_cols", parts[0], p);
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Value& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return g.record(std::move(out), ids, [ids](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    Index at = 0;
    for (int id : ids) {
      const Index c = g.value(id).cols();
      if (g.requires_grad(id)) g.grad_ref(id) += go.middleCols(at, c);
      at += c;
    }
  });
}

Value concat_rows(std::span<const Value> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Graph& g = parts[0].graph();
  const Index cols = parts[0].cols();
  Index rows = 0;
  std::vector<int> ids;
  for (const Value& p : parts) {
    same_graph("concat_rows", parts[0], p);
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const Value& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return g.record(std::move(out), ids, [ids](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    Index at = 0;
    for (int id : ids) {
      const Index r = g.value(id).rows();
      if (g.requires_grad(id)) g.grad_ref(id) += go.middleRows(at, r);
      at += r;
    }
  });
}

Value slice(const Value& a, Index row, Index rows, Index col, Index cols) {
  if (row < 0 || col < 0 || rows < 0 || cols < 0 || row + rows > a.rows() || col + cols > a.cols()) {
    throw ShapeError("slice: block " + shape_string(rows, cols) + " at (" + std::to_string(row) + "," +
                     std::to_string(col) + ") outside " + shape_string(a.value()));
  }
  const int ia = a.id();
  Matrix out = a.value().block(row, col, rows, cols);
  return a.graph().record(std::move(out), {ia}, [ia, row, rows, col, cols](Graph& g, int self) {
    g.grad_ref(ia).block(row, col, rows, cols) += g.grad(self);
  });
}

Value transpose(const Value& a) {
  const int ia = a.id();
  Matrix out = a.value().transpose();
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, int self) {
    g.grad_ref(ia) += g.grad(self).transpose();
  });
}

Value softmax(const Value& a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  const int ia = a.id();
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.value(self);
    const Matrix& go = g.grad(self);
    const Eigen::VectorXd dot = go.cwiseProduct(y).rowwise().sum();
    g.grad_ref(ia).array() += y.array() * (go.colwise() - dot).array();
  });
}

Value log_softmax(const Value& a) {
  const Matrix& x = a.value();
  Matrix out = x.colwise() - row_lse(x);
  const int ia = a.id();
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const Matrix& y = g.value(self);
    const Matrix& go = g.grad(self);
    const Eigen::VectorXd total = go.rowwise().sum();
    g.grad_ref(ia).array() += go.array() - y.array().exp().colwise() * total.array();
  });
}

Value logsumexp(const Value& a, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError("logsumexp: axis must be 0 or 1");
  const Matrix& x = a.value();
  Matrix out;
  if (axis == 1) {
    out = row_lse(x);
  } else {
    out = row_lse(x.transpose()).transpose();
  }
  const int ia = a.id();
  return a.graph().record(std::move(out), {ia}, [ia, axis](Graph& g, int self) {
    const Matrix& x = g.value(ia);
    const Matrix& y = g.value(self);
    const Matrix& go = g.grad(self);
    if (axis == 1) {
      g.grad_ref(ia).array() += (x.colwise() - y.col(0)).array().exp().colwise() * go.col(0).array();
    } else {
      g.grad_ref(ia).array() += (x.rowwise() - y.row(0)).array().exp().rowwise() * go.row(0).array();
    }
  });
}

Value logsumexp_all(const Value& a) {
  const Matrix& x = a.value();
  const Scalar m = x.maxCoeff();
  const Scalar lse = m + std::log((x.array() - m).exp().sum());
  const int ia = a.id();
  return a.graph().record(Matrix::Constant(1, 1, lse), {ia}, [ia](Graph& g, int self) {
    const Scalar y = g.value(self)(0, 0);
    const Scalar go = g.grad(self)(0, 0);
    g.grad_ref(ia).array() += (g.value(ia).array() - y).exp() * go;
  });
}

Value gather_rows(const Value& table, std::span<const int> ids) {
  const Matrix& t = table.value();
  Matrix out(static_cast<Index>(ids.size()), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= t.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(ids[i]) + " outside table " + shape_string(t));
    }
    out.row(static_cast<Index>(i)) = t.row(ids[i]);
  }
  const int it = table.id();
  std::vector<int> rows(ids.begin(), ids.end());
  return table.graph().record(std::move(out), {it}, [it, rows = std::move(rows)](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    Matrix& gt = g.grad_ref(it);
    for (std::size_t i = 0; i < rows.size(); ++i) gt.row(rows[i]) += go.row(static_cast<Index>(i));
  });
}

Value dropout(const Value& a, Scalar rate) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(rate));
  Graph& g = a.graph();
  if (!g.training() || rate == 0.0) return a;
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  const Scalar inv = 1.0 / (1.0 - rate);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(g.rng()) ? inv : 0.0;
  Matrix out = a.value().cwiseProduct(mask);
  const int ia = a.id();
  return g.record(std::move(out), {ia}, [ia, mask = std::move(mask)](Graph& g, int self) {
    g.grad_ref(ia) += g.grad(self).cwiseProduct(mask);
  });
}

Value sum(const Value& a) {
  const int ia = a.id();
  return a.graph().record(Matrix::Constant(1, 1, a.value().sum()), {ia}, [ia](Graph& g, int self) {
    g.grad_ref(ia).array() += g.grad(self)(0, 0);
  });
}

Value mean(const Value& a) {
  const auto n = static_cast<Scalar>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Value sum_rows(const Value& a) {
  const int ia = a.id();
  Matrix out = a.value().colwise().sum();
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, int self) {
    g.grad_ref(ia).rowwise() += g.grad(self).row(0);
  });
}

Value mean_rows(const Value& a) { return scale(sum_rows(a), 1.0 / static_cast<Scalar>(a.rows())); }

Value pick(const Value& a, Index row, Index col) {
  if (row < 0 || col < 0 || row >= a.rows() || col >= a.cols()) {
    throw ShapeError("pick: (" + std::to_string(row) + "," + std::to_string(col) + ") outside " +
                     shape_string(a.value()));
  }
  const int ia = a.id();
  return a.graph().record(Matrix::Constant(1, 1, a.value()(row, col)), {ia}, [ia, row, col](Graph& g, int self) {
    g.grad_ref(ia)(row, col) += g.grad(self)(0, 0);
  });
}

Value mask_fill(const Value& a, const Mask& mask, Scalar fill) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols()) {
    throw ShapeError("mask_fill: shape mismatch " + shape_string(a.value()) + " vs " +
                     shape_string(mask.rows(), mask.cols()));
  }
  Matrix out = mask.select(Matrix::Constant(a.rows(), a.cols(), fill), a.value());
  const int ia = a.id();
  return a.graph().record(std::move(out), {ia}, [ia, mask](Graph& g, int self) {
    g.grad_ref(ia).array() += mask.select(0.0, g.grad(self).array());
  });
}

Value lstm_gates(const Value& pre, const Value& c_prev) {
  Graph& g = same_graph("lstm_gates", pre, c_prev);
  const Index h = c_prev.cols();
  if (pre.rows() != 1 || c_prev.rows() != 1 || pre.cols() != 4 * h) {
    shape_fail("lstm_gates", pre.value(), c_prev.value());
  }
  const auto p = pre.value().row(0).array();
  const Eigen::ArrayXd in = (1.0 + (-p.segment(0, h)).exp()).inverse();
  const Eigen::ArrayXd fg = (1.0 + (-p.segment(h, h)).exp()).inverse();
  const Eigen::ArrayXd cand = p.segment(2 * h, h).tanh();
  const Eigen::ArrayXd og = (1.0 + (-p.segment(3 * h, h)).exp()).inverse();
  const Eigen::ArrayXd c = fg * c_prev.value().row(0).transpose().array() + in * cand;
  const Eigen::ArrayXd tc = c.tanh();
  Matrix out(1, 2 * h);
  out.row(0).segment(0, h) = (og * tc).matrix().transpose();
  out.row(0).segment(h, h) = c.matrix().transpose();
  // Activations kept for backward: [in, fg, cand, og, tanh(c)].
  Matrix cache(5, h);
  cache.row(0) = in.matrix().transpose();
  cache.row(1) = fg.matrix().transpose();
  cache.row(2) = cand.matrix().transpose();
  cache.row(3) = og.matrix().transpose();
  cache.row(4) = tc.matrix().transpose();
  const int ip = pre.id(), ic = c_prev.id();
  return g.record(std::move(out), {ip, ic}, [ip, ic, h, cache = std::move(cache)](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    const auto gh = go.row(0).segment(0, h).array();
    const auto in = cache.row(0).array();
    const auto fg = cache.row(1).array();
    const auto cand = cache.row(2).array();
    const auto og = cache.row(3).array();
    const auto tc = cache.row(4).array();
    // Total gradient reaching c: direct path plus through h = o * tanh(c).
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> gc = go.row(0).segment(h, h).array() + gh * og * (1.0 - tc.square());
    if (g.requires_grad(ip)) {
      const auto cp = g.value(ic).row(0).array();
      Matrix& gp = g.grad_ref(ip);
      gp.row(0).segment(0, h).array() += gc * cand * in * (1.0 - in);
      gp.row(0).segment(h, h).array() += gc * cp * fg * (1.0 - fg);
      gp.row(0).segment(2 * h, h).array() += gc * in * (1.0 - cand.square());
      gp.row(0).segment(3 * h, h).array() += gh * tc * og * (1.0 - og);
    }
    if (g.requires_grad(ic)) g.grad_ref(ic).row(0).array() += gc * fg;
  });
}

Value cross_entropy(const Value& logits, int target) {
  if (logits.rows() != 1 || target < 0 || target >= logits.cols()) {
    throw ShapeError("cross_entropy: target " + std::to_string(target) + " invalid for logits " +
                     shape_string(logits.value()));
  }
  return neg(pick(log_softmax(logits), 0, target));
}

}  // namespace sxtract::nn
