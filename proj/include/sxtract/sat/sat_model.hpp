#pragma once

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/crf/crf.hpp>
#include <sxtract/sat/config.hpp>
#include <sxtract/sat/encoder.hpp>
#include <sxtract/sat/training.hpp>
#include <sxtract/sat/vocab.hpp>

#include <cstdint>
#include <memory>
#include <vector>

namespace sxtract::sat {

/// Gold span inside an input unit, with dense symptom and status ids.
struct GoldSpan {
  int start = 0;
  int end = 0;
  int symptom = 0;
  int status = 0;
};

struct SatUnit {
  std::string id;
  std::vector<int> ids;
  std::vector<int> tags;  // B/I/O per position
  std::vector<GoldSpan> spans;
};

/// Units of one conversation with its labels mapped to unit positions. Spans
/// overlapping an earlier span of the same unit are dropped. Throws Error for
/// symptoms unknown to the ontology.
std::vector<SatUnit> make_sat_units(const corpus::Conversation& conversation,
                                    std::span<const corpus::SpanLabel> labels, const Vocab& vocab,
                                    const corpus::Ontology& ontology, int turns_per_unit);

/// Greedy matching of predicted to gold spans by token overlap: the pair with
/// the largest overlap is taken first, ties to the earlier predicted and then
/// the earlier gold span. Entry i is the gold index matched to predicted span
/// i, or -1.
std::vector<int> match_spans(std::span<const crf::Span> predicted, std::span<const GoldSpan> gold);

/// Span-Attribute Tagging: encoder and feed-forward trunk, a 3-tag CRF for
/// span extraction, pooled span representations and two independent
/// softmax heads for symptom and status.
class SatModel : public TrainableModel {
 public:
  SatModel(const SatConfig& config, Vocab vocab, corpus::Ontology ontology, std::uint64_t seed);
  static std::unique_ptr<SatModel> from_checkpoint(const nn::Checkpoint& checkpoint);

  std::string model_type() const override { return "sat"; }
  nn::ParameterSet& parameters() override { return params_; }
  std::size_t prepare_training(std::span<const corpus::AnnotatedConversation> train) override;
  std::string unit_id(std::size_t unit) const override { return units_.at(unit).id; }
  nn::Value unit_loss(nn::Graph& g, std::size_t unit, bool use_gold_spans) override;
  corpus::MentionSet infer(const corpus::Conversation& conversation) override;
  nn::Checkpoint to_checkpoint() const override;

  TrunkOutput encode(nn::Graph& g, std::span<const int> ids);
  /// Throws Error unless 0 <= start < end <= length.
  Value pool_span(const TrunkOutput& encoded, int start, int end) const;

  struct AttributeLogits {
    Value symptom;  // 1 x |symptoms|
    Value status;   // 1 x 3
  };
  AttributeLogits classify_span(const Value& span_repr);

  /// alpha * crf_nll(gold tags) + attribute cross-entropies. With
  /// use_gold_spans the heads see the gold intervals, otherwise the Viterbi
  /// intervals matched to gold by match_spans (unmatched spans add nothing).
  Value loss(nn::Graph& g, const SatUnit& unit, bool use_gold_spans);

  struct Extracted {
    crf::Span span;
    int symptom = 0;
    int status = 0;
  };
  std::vector<Extracted> extract(std::span<const int> ids);

  /// Overwrites the encoder with the "enc." tensors of a checkpoint.
  void load_encoder(const nn::Checkpoint& checkpoint);

  const SatConfig& config() const { return config_; }
  SatConfig& mutable_config() { return config_; }
  const Vocab& vocab() const { return vocab_; }
  const corpus::Ontology& ontology() const { return ontology_; }
  const crf::CrfParams& crf_params() const { return crf_; }
  const std::vector<SatUnit>& units() const { return units_; }

 private:
  SatConfig config_;
  Vocab vocab_;
  corpus::Ontology ontology_;
  nn::ParameterSet params_;
  TrunkParams trunk_;
  crf::CrfParams crf_;
  nn::Parameter* sx_w_ = nullptr;
  nn::Parameter* sx_b_ = nullptr;
  nn::Parameter* st_w_ = nullptr;
  nn::Parameter* st_b_ = nullptr;
  std::vector<SatUnit> units_;
};

/// Checkpoint metadata shared by every model type.
nn::Checkpoint base_checkpoint(const std::string& model_type, const std::string& config_text, const Vocab& vocab,
                               const corpus::Ontology& ontology, const nn::ParameterSet& params);

}  // namespace sxtract::sat
