#include <sxtract/nn/graph.hpp>

#include <sxtract/error.hpp>

namespace sxtract::nn {

const Matrix& Value::value() const { return graph_->value(id_); }
const Matrix& Value::grad() const { return graph_->grad(id_); }
bool Value::requires_grad() const { return graph_->requires_grad(id_); }

Scalar Value::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw ShapeError("scalar: expected (1x1), got " + shape_string(v));
  return v(0, 0);
}

Graph::Graph(Mode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}

Value Graph::constant(Matrix m) {
  Node n;
  n.value = std::move(m);
  nodes_.push_back(std::move(n));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Value Graph::constant(Scalar s) { return constant(Matrix::Constant(1, 1, s)); }

Value Graph::param(Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Value(this, it->second);
  Node n;
  if (training() && p.noise.size() == p.value.size() && p.noise.size() > 0) {
    n.value = p.value + p.noise;
  } else {
    n.value = p.value;
  }
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  bound_.emplace(&p, id);
  return Value(this, id);
}

Value Graph::record(Matrix value, std::vector<int> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (int in : inputs) {
    if (nodes_[static_cast<std::size_t>(in)].requires_grad) {
      n.requires_grad = true;
      break;
    }
  }
  if (n.requires_grad) {
    n.inputs = std::move(inputs);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Matrix& Graph::grad_ref(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(const Value& root) {
  if (root.id() < 0 || &root.graph() != this) throw Error("backward: value belongs to another graph");
  grad_ref(root.id()).setOnes();
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
        p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
      }
      p.grad += n.grad;
    }
  }
}

}  // namespace sxtract::nn
