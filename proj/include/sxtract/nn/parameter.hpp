#pragma once

#include <sxtract/nn/tensor.hpp>

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace sxtract::nn {

/// A trainable tensor that outlives any single computation graph.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  /// Weight noise for the current training batch; empty when inactive.
  Matrix noise;
};

/// Owns parameters with stable addresses, in insertion order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(std::string name, Matrix init);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }
  std::vector<Parameter*> pointers();

  void zero_grad();
  /// Draws fresh Gaussian weight noise for every parameter. std == 0 clears it.
  void resample_noise(Scalar stddev, std::mt19937_64& rng);
  void clear_noise();
  /// Copies values (not gradients) from another set with identical layout.
  void copy_values_from(const ParameterSet& other);
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

Matrix uniform_init(Index rows, Index cols, Scalar limit, std::mt19937_64& rng);
/// Glorot uniform: limit sqrt(6 / (fan_in + fan_out)).
Matrix glorot_init(Index rows, Index cols, std::mt19937_64& rng);

}  // namespace sxtract::nn
