#include <sxtract/nn/adam.hpp>

#include <sxtract/error.hpp>

#include <cmath>

namespace sxtract::nn {

void AdamOptimizer::step(ParameterSet& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].grad.allFinite()) {
      throw NumericalError("adam_step: non-finite gradient in parameter '" + params[i].name + "'");
    }
  }
  ++step_count_;
  const auto t = static_cast<Scalar>(step_count_);
  const Scalar correction1 = 1.0 - std::pow(config_.beta1, t);
  const Scalar correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Moments& m = moments_[p.name];
    if (m.first.rows() != p.value.rows() || m.first.cols() != p.value.cols()) {
      m.first = Matrix::Zero(p.value.rows(), p.value.cols());
      m.second = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    Matrix g = p.grad;
    if (config_.l2 != 0.0) g += config_.l2 * p.value;
    m.first = config_.beta1 * m.first + (1.0 - config_.beta1) * g;
    m.second = config_.beta2 * m.second + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.value.array() -= config_.learning_rate * (m.first.array() / correction1) /
                       ((m.second.array() / correction2).sqrt() + config_.epsilon);
  }
}

}  // namespace sxtract::nn
