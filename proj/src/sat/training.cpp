#include <sxtract/sat/training.hpp>

#include <sxtract/corpus/references.hpp>
#include <sxtract/error.hpp>
#include <sxtract/metrics/metrics.hpp>
#include <sxtract/metrics/report.hpp>
#include <sxtract/sat/baseline.hpp>
#include <sxtract/sat/curriculum.hpp>
#include <sxtract/sat/sat_model.hpp>
#include <sxtract/seq2seq/seq2seq_model.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace sxtract::sat {
namespace {

std::vector<nn::Matrix> values_of(nn::ParameterSet& params) {
  std::vector<nn::Matrix> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back(params[i].value);
  return out;
}

void set_values(nn::ParameterSet& params, const std::vector<nn::Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = values[i];
}

}  // namespace

std::map<std::string, corpus::MentionSet> predict_corpus(TrainableModel& model,
                                                         std::span<const corpus::AnnotatedConversation> corpus) {
  std::map<std::string, corpus::MentionSet> out;
  for (const auto& ac : corpus) out[ac.conversation.id] = model.infer(ac.conversation);
  return out;
}

double dev_f1(TrainableModel& model, std::span<const corpus::AnnotatedConversation> dev) {
  metrics::References refs;
  for (const auto& ac : dev) {
    corpus::ReferenceSet r = corpus::build_references(ac);
    if (const corpus::Ontology* o = model.projection_ontology()) r = metrics::project_to_body_system(r, *o);
    refs[ac.conversation.id] = std::move(r);
  }
  return metrics::evaluate_corpus(predict_corpus(model, dev), refs, metrics::RefMode::kVoted,
                                  metrics::Weighting::kUnweighted, metrics::View::kSxStatus)
      .f1;
}

TrainResult train_model(TrainableModel& model, std::span<const corpus::AnnotatedConversation> train,
                        std::span<const corpus::AnnotatedConversation> dev, const TrainOptions& options) {
  if (options.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  const std::size_t n = model.prepare_training(train);
  if (n == 0) throw Error("train: the training split produced no units");
  nn::ParameterSet& params = model.parameters();
  const std::size_t batch = static_cast<std::size_t>(options.batch_size);
  const std::int64_t steps_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  CurriculumSchedule schedule = options.curriculum;
  if (schedule.decay_steps == 0) schedule.decay_steps = 10 * steps_per_epoch;
  schedule.validate();

  nn::AdamOptimizer adam(options.adam);
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<nn::Matrix> best_values;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    double p = 1.0;
    for (std::size_t b = 0; b < n; b += batch) {
      const std::size_t e = std::min(n, b + batch);
      params.zero_grad();
      if (options.weight_noise_std > 0) params.resample_noise(options.weight_noise_std, rng);
      p = options.use_curriculum ? curriculum_p(step, schedule) : 1.0;
      std::bernoulli_distribution coin(p);
      for (std::size_t k = b; k < e; ++k) {
        const bool gold = coin(rng);
        nn::Graph g(nn::Mode::kTraining, rng());
        const nn::Value loss = model.unit_loss(g, order[k], gold);
        const double v = loss.scalar();
        if (!std::isfinite(v)) {
          params.clear_noise();
          throw NumericalError("non-finite loss " + metrics::format_double(v) + " at step " + std::to_string(step) +
                               " (epoch " + std::to_string(epoch) + ", unit '" + model.unit_id(order[k]) + "')");
        }
        loss_sum += v;
        g.backward(nn::scale(loss, 1.0 / static_cast<double>(e - b)));
      }
      params.clear_noise();
      adam.step(params);
      ++step;
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.steps = step;
    entry.mean_loss = loss_sum / static_cast<double>(n);
    entry.p = p;
    if (!dev.empty()) {
      entry.dev_f1 = dev_f1(model, dev);
      entry.best = entry.dev_f1 > result.best_dev_f1;
    } else {
      entry.best = true;
    }
    if (entry.best) {
      result.best_epoch = epoch;
      result.best_dev_f1 = entry.dev_f1;
      best_values = values_of(params);
    }
    result.log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
    if (options.stop_at_dev_f1 >= 0 && entry.dev_f1 >= options.stop_at_dev_f1) break;
  }
  if (!best_values.empty()) set_values(params, best_values);
  return result;
}

std::string format_train_log(const TrainResult& result) {
  std::ostringstream out;
  out << "epoch\tsteps\tmean_loss\tp\tdev_f1\tbest\n";
  for (const EpochLog& e : result.log) {
    out << e.epoch << '\t' << e.steps << '\t' << metrics::format_double(e.mean_loss) << '\t'
        << metrics::format_double(e.p) << '\t' << metrics::format_double(e.dev_f1) << '\t' << (e.best ? 1 : 0)
        << '\n';
  }
  return out.str();
}

std::unique_ptr<TrainableModel> load_model(const nn::Checkpoint& ckpt) {
  const std::string& type = ckpt.meta_at("model_type");
  if (type == "sat") return SatModel::from_checkpoint(ckpt);
  if (type == "baseline_crossproduct") return CrossProductBaseline::from_checkpoint(ckpt);
  if (type == "baseline_bodysystem") return BodySystemBaseline::from_checkpoint(ckpt);
  if (type == "seq2seq") return seq2seq::Seq2SeqModel::from_checkpoint(ckpt);
  throw Error("unknown model type '" + type + "' in checkpoint");
}

}  // namespace sxtract::sat
