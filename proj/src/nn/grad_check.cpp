#include <sxtract/nn/grad_check.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace sxtract::nn {

GradCheckReport grad_check(const LossFn& loss, std::span<Parameter* const> params,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) p->grad = Matrix::Zero(p->value.rows(), p->value.cols());
  Scalar loss_value = 0;
  {
    Graph g(options.mode, options.graph_seed);
    Value root = loss(g);
    loss_value = root.scalar();
    g.backward(root);
  }
  const Scalar floor = std::max(options.magnitude_floor, options.loss_relative_floor * std::abs(loss_value));
  auto evaluate = [&]() {
    Graph g(options.mode, options.graph_seed);
    return loss(g).scalar();
  };

  GradCheckReport report;
  std::mt19937_64 rng(options.sample_seed);
  for (Parameter* p : params) {
    const Index n = p->value.size();
    std::vector<Index> coords(static_cast<std::size_t>(n));
    std::iota(coords.begin(), coords.end(), Index{0});
    if (n > options.coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(options.coords_per_param));
    }
    for (Index k : coords) {
      Scalar& x = p->value.data()[k];
      const Scalar saved = x;
      x = saved + options.step;
      const Scalar up = evaluate();
      x = saved - options.step;
      const Scalar down = evaluate();
      x = saved;
      const Scalar numeric = (up - down) / (2.0 * options.step);
      const Scalar analytic = p->grad.data()[k];
      const Scalar denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const Scalar rel = std::abs(analytic - numeric) / denom;
      report.max_rel_error = std::max(report.max_rel_error, rel);
      ++report.checked;
      if (!(rel < options.tolerance)) {
        report.failures.push_back({p->name, k / p->value.cols(), k % p->value.cols(), analytic, numeric, rel});
      }
    }
  }
  return report;
}

}  // namespace sxtract::nn
