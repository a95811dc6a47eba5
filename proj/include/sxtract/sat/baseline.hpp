#pragma once

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/crf/crf.hpp>
#include <sxtract/sat/config.hpp>
#include <sxtract/sat/encoder.hpp>
#include <sxtract/sat/training.hpp>
#include <sxtract/sat/vocab.hpp>

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace sxtract::sat {

/// BIO tags over a flat class space: tag 0 is O, class c has B = 1 + 2c and
/// I = 2 + 2c. Label-space size is 2 * classes + 1.
struct ClassTagSpace {
  int classes = 0;

  int size() const { return 2 * classes + 1; }
  static int begin_tag(int cls) { return 1 + 2 * cls; }
  static int inside_tag(int cls) { return 2 + 2 * cls; }
  /// -1 for O.
  static int class_of(int tag) { return tag == 0 ? -1 : (tag - 1) / 2; }
  static bool is_begin(int tag) { return tag > 0 && (tag - 1) % 2 == 0; }
};

struct ClassSpan {
  crf::Span span;
  int cls = 0;
};

/// B_c opens a span of class c, I_c continues an open span of class c and
/// otherwise opens one (orphan I), O closes.
std::vector<ClassSpan> class_tags_to_spans(std::span<const int> tags);

struct TaggedUnit {
  std::string id;
  std::vector<int> ids;
  std::vector<int> tags;
};

/// Common part of the two tagging baselines: the SA-T trunk with a per-token
/// class-tag output layer.
class TaggingBaseline : public TrainableModel {
 public:
  nn::ParameterSet& parameters() override { return params_; }
  std::size_t prepare_training(std::span<const corpus::AnnotatedConversation> train) override;
  std::string unit_id(std::size_t unit) const override { return units_.at(unit).id; }
  corpus::MentionSet infer(const corpus::Conversation& conversation) override;
  nn::Checkpoint to_checkpoint() const override;

  const SatConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  const corpus::Ontology& ontology() const { return ontology_; }
  int tag_space_size() const { return space_.size(); }
  const std::vector<TaggedUnit>& units() const { return units_; }
  void load_encoder(const nn::Checkpoint& checkpoint);

  /// Decoded tag sequence of one unit.
  virtual std::vector<int> decode(std::span<const int> ids) = 0;

 protected:
  TaggingBaseline(const SatConfig& config, Vocab vocab, corpus::Ontology ontology, int classes,
                  std::uint64_t seed);

  virtual int class_of_label(const corpus::SpanLabel& label) const = 0;
  virtual corpus::MentionKey key_of_class(int cls) const = 0;

  SatConfig config_;
  Vocab vocab_;
  corpus::Ontology ontology_;
  ClassTagSpace space_;
  /// Initialisation stream; derived classes draw their output layers from it.
  std::mt19937_64 init_rng_;
  nn::ParameterSet params_;
  TrunkParams trunk_;
  std::vector<TaggedUnit> units_;
};

/// Cross-product baseline: one class per (symptom, status), trained with
/// per-token cross-entropy and decoded greedily.
class CrossProductBaseline : public TaggingBaseline {
 public:
  CrossProductBaseline(const SatConfig& config, Vocab vocab, corpus::Ontology ontology, std::uint64_t seed);
  static std::unique_ptr<CrossProductBaseline> from_checkpoint(const nn::Checkpoint& checkpoint);

  std::string model_type() const override { return "baseline_crossproduct"; }
  nn::Value unit_loss(nn::Graph& g, std::size_t unit, bool use_gold_spans) override;
  std::vector<int> decode(std::span<const int> ids) override;

  /// T x (2 |symptoms| |statuses| + 1) tag scores.
  Value logits(nn::Graph& g, std::span<const int> ids);

 protected:
  int class_of_label(const corpus::SpanLabel& label) const override;
  corpus::MentionKey key_of_class(int cls) const override;

 private:
  nn::Parameter* out_w_ = nullptr;
  nn::Parameter* out_b_ = nullptr;
};

/// Body-system baseline: one class per (body system, status), CRF output
/// layer. Predictions are keys "sym:<body system>".
class BodySystemBaseline : public TaggingBaseline {
 public:
  BodySystemBaseline(const SatConfig& config, Vocab vocab, corpus::Ontology ontology, std::uint64_t seed);
  static std::unique_ptr<BodySystemBaseline> from_checkpoint(const nn::Checkpoint& checkpoint);

  std::string model_type() const override { return "baseline_bodysystem"; }
  nn::Value unit_loss(nn::Graph& g, std::size_t unit, bool use_gold_spans) override;
  std::vector<int> decode(std::span<const int> ids) override;
  const corpus::Ontology* projection_ontology() const override { return &ontology_; }

 protected:
  int class_of_label(const corpus::SpanLabel& label) const override;
  corpus::MentionKey key_of_class(int cls) const override;

 private:
  crf::CrfParams crf_;
};

}  // namespace sxtract::sat
