#pragma once

#include <sxtract/nn/graph.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sxtract::nn {

struct GradCheckOptions {
  Scalar step = 1e-5;
  Scalar tolerance = 1e-4;
  /// Coordinates sampled per parameter; parameters smaller than this are checked exhaustively.
  int coords_per_param = 16;
  /// Relative error uses max(|analytic|, |numeric|, magnitude_floor) as denominator.
  Scalar magnitude_floor = 1e-6;
  /// Also floor the denominator at this multiple of |loss|: central
  /// differences carry roundoff of about eps * |loss| / step, which swamps
  /// coordinates whose gradient is near zero.
  Scalar loss_relative_floor = 1e-6;
  std::uint64_t sample_seed = 1;
  /// Mode and seed for every graph built by the loss function, so dropout
  /// masks repeat exactly between the analytic and perturbed evaluations.
  Mode mode = Mode::kInference;
  std::uint64_t graph_seed = 7;
};

struct GradCheckEntry {
  std::string param;
  Index row = 0;
  Index col = 0;
  Scalar analytic = 0;
  Scalar numeric = 0;
  Scalar rel_error = 0;
};

struct GradCheckReport {
  Scalar max_rel_error = 0;
  std::size_t checked = 0;
  std::vector<GradCheckEntry> failures;

  bool passed() const { return failures.empty(); }
};

using LossFn = std::function<Value(Graph&)>;

/// Compares backward-pass gradients against central finite differences for a
/// sample of coordinates of each parameter. Parameter gradients are zeroed
/// before and left holding the analytic gradient afterwards.
GradCheckReport grad_check(const LossFn& loss, std::span<Parameter* const> params,
                           const GradCheckOptions& options = {});

}  // namespace sxtract::nn
