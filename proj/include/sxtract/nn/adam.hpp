#pragma once

#include <sxtract/nn/parameter.hpp>

#include <cstdint>
#include <map>
#include <string>

namespace sxtract::nn {

struct AdamConfig {
  Scalar learning_rate = 1e-3;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;
  /// Penalty coefficient; adds l2 * theta to the gradient before the moments.
  Scalar l2 = 0.0;
};

/// Adam with bias correction. Moments are keyed by parameter name and
/// created lazily with the parameter's shape.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig config = {}) : config_(config) {}

  /// Applies one update from the accumulated Parameter::grad values. Throws
  /// NumericalError naming the first parameter with a non-finite gradient;
  /// in that case nothing is modified.
  void step(ParameterSet& params);

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  AdamConfig& config() { return config_; }

 private:
  struct Moments {
    Matrix first;
    Matrix second;
  };

  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace sxtract::nn
