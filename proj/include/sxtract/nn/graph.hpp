#pragma once

#include <sxtract/nn/parameter.hpp>
#include <sxtract/nn/tensor.hpp>

#include <cstdint>
#include <functional>
#include <random>
#include <unordered_map>
#include <vector>

namespace sxtract::nn {

class Graph;

/// Handle to a node on a Graph tape. Cheap to copy; valid while the graph lives.
class Value {
 public:
  Value() = default;
  Value(Graph* graph, int id) : graph_(graph), id_(id) {}

  const Matrix& value() const;
  /// Gradient after Graph::backward; zero-sized if no gradient reached the node.
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// The single element of a 1x1 value.
  Scalar scalar() const;
  bool requires_grad() const;

  Graph& graph() const { return *graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

enum class Mode { kInference, kTraining };

/// Reverse-mode tape. Nodes are appended in evaluation order so the tape is
/// topologically sorted by construction; backward walks it in reverse.
/// A graph is built for one loss evaluation and then discarded.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  explicit Graph(Mode mode = Mode::kInference, std::uint64_t seed = 0);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Value constant(Matrix m);
  Value constant(Scalar s);
  /// Binds a parameter as a leaf. In training mode any active weight noise is
  /// added to the bound value; gradients still flow to the parameter.
  Value param(Parameter& p);

  /// Seeds d(root)/d(root) = 1 and accumulates into every bound Parameter::grad.
  void backward(const Value& root);

  bool training() const { return mode_ == Mode::kTraining; }
  Mode mode() const { return mode_; }
  std::mt19937_64& rng() { return rng_; }
  std::size_t size() const { return nodes_.size(); }

  // Op-author interface.
  Value record(Matrix value, std::vector<int> inputs, BackwardFn backward);
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  /// Gradient buffer of a node, zero-initialised on first access.
  Matrix& grad_ref(int id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<int> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  Mode mode_;
  std::mt19937_64 rng_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> bound_;
};

}  // namespace sxtract::nn
