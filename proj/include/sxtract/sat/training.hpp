#pragma once

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/corpus/types.hpp>
#include <sxtract/nn/adam.hpp>
#include <sxtract/nn/checkpoint.hpp>
#include <sxtract/nn/graph.hpp>
#include <sxtract/sat/config.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sxtract::sat {

/// What the trainer needs from a model: a parameter set, a per-unit loss over
/// prepared training units, conversation-level inference and serialization.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;

  virtual std::string model_type() const = 0;
  virtual nn::ParameterSet& parameters() = 0;

  /// Converts the training split into model-specific units; returns their count.
  virtual std::size_t prepare_training(std::span<const corpus::AnnotatedConversation> train) = 0;
  virtual std::string unit_id(std::size_t unit) const = 0;
  /// Loss of one prepared unit. use_gold_spans is the curriculum coin and is
  /// ignored by models without a span-source choice.
  virtual nn::Value unit_loss(nn::Graph& g, std::size_t unit, bool use_gold_spans) = 0;

  virtual corpus::MentionSet infer(const corpus::Conversation& conversation) = 0;
  virtual nn::Checkpoint to_checkpoint() const = 0;

  /// Non-null when predictions live in the body-system key space and the
  /// references must be projected before scoring.
  virtual const corpus::Ontology* projection_ontology() const { return nullptr; }
};

struct EpochLog {
  int epoch = 0;
  std::int64_t steps = 0;
  double mean_loss = 0;
  double p = 1;  // curriculum probability at the last step of the epoch
  /// Unweighted Sx+Status F1 against the voted dev reference; -1 without dev data.
  double dev_f1 = -1;
  bool best = false;
};

struct TrainOptions {
  int epochs = 30;
  int batch_size = 8;
  nn::AdamConfig adam;
  double weight_noise_std = 0;
  /// Drives the gold/inferred span coin; p = 1 throughout when disabled.
  bool use_curriculum = false;
  CurriculumSchedule curriculum;
  std::uint64_t seed = 0;
  /// Stop after the first epoch whose dev F1 reaches this value; off when negative.
  double stop_at_dev_f1 = -1;
  /// Optional per-epoch callback, e.g. progress printing.
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_dev_f1 = -1;
};

/// Adam over shuffled units with gradient accumulation per batch and weight
/// noise resampled per batch. After the last epoch the parameters of the
/// epoch with the best dev F1 are restored (the last epoch without dev data).
/// Throws NumericalError naming the step and unit on a non-finite loss.
TrainResult train_model(TrainableModel& model, std::span<const corpus::AnnotatedConversation> train,
                        std::span<const corpus::AnnotatedConversation> dev, const TrainOptions& options);

/// Predictions for every conversation, keyed by id.
std::map<std::string, corpus::MentionSet> predict_corpus(TrainableModel& model,
                                                         std::span<const corpus::AnnotatedConversation> corpus);

/// Unweighted Sx+Status F1 against the voted reference.
double dev_f1(TrainableModel& model, std::span<const corpus::AnnotatedConversation> dev);

/// Tab-separated log: epoch, steps, mean_loss, p, dev_f1, best; 17 significant digits.
std::string format_train_log(const TrainResult& result);

/// Rebuilds any model type from its checkpoint.
std::unique_ptr<TrainableModel> load_model(const nn::Checkpoint& checkpoint);

}  // namespace sxtract::sat
