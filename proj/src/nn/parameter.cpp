#include <sxtract/nn/parameter.hpp>

#include <sxtract/error.hpp>

#include <cmath>

namespace sxtract::nn {

Parameter& ParameterSet::add(std::string name, Matrix init) {
  if (find(name) != nullptr) {
    throw Error("duplicate parameter name '" + name + "'");
  }
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->grad = Matrix::Zero(init.rows(), init.cols());
  p->value = std::move(init);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) throw Error("unknown parameter '" + std::string(name) + "'");
  return *p;
}

std::vector<Parameter*> ParameterSet::pointers() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

void ParameterSet::resample_noise(Scalar stddev, std::mt19937_64& rng) {
  if (stddev <= 0) {
    clear_noise();
    return;
  }
  std::normal_distribution<Scalar> dist(0.0, stddev);
  for (auto& p : params_) {
    p->noise.resize(p->value.rows(), p->value.cols());
    for (Index i = 0; i < p->noise.size(); ++i) p->noise.data()[i] = dist(rng);
  }
}

void ParameterSet::clear_noise() {
  for (auto& p : params_) p->noise.resize(0, 0);
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.size() != size()) throw Error("copy_values_from: parameter count mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    if (params_[i]->value.rows() != other[i].value.rows() ||
        params_[i]->value.cols() != other[i].value.cols()) {
      throw ShapeError("copy_values_from: '" + params_[i]->name + "' " +
                       shape_string(params_[i]->value) + " vs " + shape_string(other[i].value));
    }
    params_[i]->value = other[i].value;
  }
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

Matrix uniform_init(Index rows, Index cols, Scalar limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<Scalar> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Matrix glorot_init(Index rows, Index cols, std::mt19937_64& rng) {
  return uniform_init(rows, cols, std::sqrt(6.0 / static_cast<Scalar>(rows + cols)), rng);
}

}  // namespace sxtract::nn
