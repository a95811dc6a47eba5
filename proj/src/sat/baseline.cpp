#include <sxtract/sat/baseline.hpp>

#include <sxtract/error.hpp>
#include <sxtract/metrics/metrics.hpp>
#include <sxtract/sat/sat_model.hpp>

#include <algorithm>

namespace sxtract::sat {

std::vector<ClassSpan> class_tags_to_spans(std::span<const int> tags) {
  std::vector<ClassSpan> out;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const int t = tags[i];
    const int cls = ClassTagSpace::class_of(t);
    const int pos = static_cast<int>(i);
    if (cls < 0) {
      open = false;
    } else if (ClassTagSpace::is_begin(t) || !open || out.back().cls != cls) {
      out.push_back({{pos, pos + 1}, cls});
      open = true;
    } else {
      out.back().span.end = pos + 1;
    }
  }
  return out;
}

TaggingBaseline::TaggingBaseline(const SatConfig& config, Vocab vocab, corpus::Ontology ontology, int classes,
                                 std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), ontology_(std::move(ontology)), space_{classes}, init_rng_(seed) {
  config_.validate();
  trunk_ = TrunkParams::create(params_, vocab_.size(), config_.word_emb_dim, config_.lstm_hidden,
                               config_.enc_layers, config_.ff_dim, init_rng_);
}

std::size_t TaggingBaseline::prepare_training(std::span<const corpus::AnnotatedConversation> train) {
  units_.clear();
  for (const auto& ac : train) {
    const auto inputs = make_input_units(ac.conversation, vocab_, config_.input_turns);
    std::vector<TaggedUnit> units;
    for (const auto& in : inputs) units.push_back({in.id, in.ids, std::vector<int>(in.ids.size(), 0)});
    std::vector<std::vector<bool>> taken(units.size());
    for (std::size_t k = 0; k < units.size(); ++k) taken[k].assign(units[k].ids.size(), false);
    for (const corpus::SpanLabel& l : ac.primary_labels()) {
      std::size_t k = 0;
      while (k < inputs.size() && !(l.turn >= inputs[k].first_turn && l.turn < inputs[k].end_turn)) ++k;
      if (k == inputs.size()) throw Error("label turn out of range in " + ac.conversation.id);
      const int s = inputs[k].position(l.turn, l.start), e = inputs[k].position(l.turn, l.end);
      // Overlapping labels: the earlier one wins, as in the SA-T units.
      if (std::any_of(taken[k].begin() + s, taken[k].begin() + e, [](bool b) { return b; })) continue;
      const int cls = class_of_label(l);
      for (int p = s; p < e; ++p) {
        units[k].tags[static_cast<std::size_t>(p)] =
            p == s ? ClassTagSpace::begin_tag(cls) : ClassTagSpace::inside_tag(cls);
        taken[k][static_cast<std::size_t>(p)] = true;
      }
    }
    units_.insert(units_.end(), std::make_move_iterator(units.begin()), std::make_move_iterator(units.end()));
  }
  return units_.size();
}

corpus::MentionSet TaggingBaseline::infer(const corpus::Conversation& conversation) {
  corpus::MentionSet out;
  for (const InputUnit& u : make_input_units(conversation, vocab_, config_.input_turns)) {
    for (const ClassSpan& s : class_tags_to_spans(decode(u.ids))) out.add(key_of_class(s.cls));
  }
  return out;
}

nn::Checkpoint TaggingBaseline::to_checkpoint() const {
  return base_checkpoint(model_type(), config_.to_text(), vocab_, ontology_, params_);
}

void TaggingBaseline::load_encoder(const nn::Checkpoint& ckpt) {
  nn::restore(params_, ckpt, std::string(kEncoderPrefix) + ".");
}

namespace {

SatConfig config_from(const nn::Checkpoint& ckpt, const std::string& expected) {
  if (ckpt.meta_at("model_type") != expected) {
    throw Error("checkpoint holds a '" + ckpt.meta_at("model_type") + "' model, not '" + expected + "'");
  }
  SatConfig cfg;
  cfg.apply(KeyValues::parse(ckpt.meta_at("config"), "<checkpoint config>"));
  return cfg;
}

}  // namespace

CrossProductBaseline::CrossProductBaseline(const SatConfig& config, Vocab vocab, corpus::Ontology ontology,
                                           std::uint64_t seed)
    : TaggingBaseline(config, std::move(vocab), ontology, ontology.size() * corpus::kStatusCount, seed) {
  out_w_ = &params_.add("out.W", nn::glorot_init(config_.ff_dim, space_.size(), init_rng_));
  out_b_ = &params_.add("out.b", nn::Matrix::Zero(1, space_.size()));
}

std::unique_ptr<CrossProductBaseline> CrossProductBaseline::from_checkpoint(const nn::Checkpoint& ckpt) {
  auto m = std::make_unique<CrossProductBaseline>(config_from(ckpt, "baseline_crossproduct"),
                                                  Vocab::from_text(ckpt.meta_at("vocab")),
                                                  corpus::Ontology::from_tsv(ckpt.meta_at("ontology")), 0);
  nn::restore(m->params_, ckpt);
  return m;
}

int CrossProductBaseline::class_of_label(const corpus::SpanLabel& l) const {
  const int id = ontology_.id_of(l.symptom);
  if (id < 0) throw Error("unknown symptom '" + l.symptom + "'");
  return id * corpus::kStatusCount + static_cast<int>(l.status);
}

corpus::MentionKey CrossProductBaseline::key_of_class(int cls) const {
  return {ontology_.symptom(cls / corpus::kStatusCount), static_cast<corpus::Status>(cls % corpus::kStatusCount)};
}

Value CrossProductBaseline::logits(nn::Graph& g, std::span<const int> ids) {
  const TrunkOutput enc = run_trunk(g, trunk_, ids, config_.dropout);
  return nn::add_row(nn::matmul(enc.features, g.param(*out_w_)), g.param(*out_b_));
}

Value CrossProductBaseline::unit_loss(nn::Graph& g, std::size_t unit, bool) {
  const TaggedUnit& u = units_.at(unit);
  Value ls = nn::log_softmax(logits(g, u.ids));
  nn::Matrix onehot = nn::Matrix::Zero(ls.rows(), ls.cols());
  for (std::size_t t = 0; t < u.tags.size(); ++t) onehot(static_cast<Index>(t), u.tags[t]) = 1.0;
  return nn::neg(nn::sum(nn::mul(ls, g.constant(std::move(onehot)))));
}

std::vector<int> CrossProductBaseline::decode(std::span<const int> ids) {
  nn::Graph g(nn::Mode::kInference);
  const nn::Matrix scores = logits(g, ids).value();
  std::vector<int> tags(static_cast<std::size_t>(scores.rows()));
  for (Index t = 0; t < scores.rows(); ++t) {
    Index best = 0;
    scores.row(t).maxCoeff(&best);
    tags[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return tags;
}

BodySystemBaseline::BodySystemBaseline(const SatConfig& config, Vocab vocab, corpus::Ontology ontology,
                                       std::uint64_t seed)
    : TaggingBaseline(config, std::move(vocab), ontology, ontology.system_count() * corpus::kStatusCount, seed) {
  crf_ = crf::CrfParams::create(params_, "crf", space_.size(), config_.ff_dim, init_rng_);
}

std::unique_ptr<BodySystemBaseline> BodySystemBaseline::from_checkpoint(const nn::Checkpoint& ckpt) {
  auto m = std::make_unique<BodySystemBaseline>(config_from(ckpt, "baseline_bodysystem"),
                                                Vocab::from_text(ckpt.meta_at("vocab")),
                                                corpus::Ontology::from_tsv(ckpt.meta_at("ontology")), 0);
  nn::restore(m->params_, ckpt);
  return m;
}

int BodySystemBaseline::class_of_label(const corpus::SpanLabel& l) const {
  const int id = ontology_.id_of(l.symptom);
  if (id < 0) throw Error("unknown symptom '" + l.symptom + "'");
  return ontology_.system_of(id) * corpus::kStatusCount + static_cast<int>(l.status);
}

corpus::MentionKey BodySystemBaseline::key_of_class(int cls) const {
  return {metrics::body_system_key(ontology_.system_name(cls / corpus::kStatusCount)),
          static_cast<corpus::Status>(cls % corpus::kStatusCount)};
}

Value BodySystemBaseline::unit_loss(nn::Graph& g, std::size_t unit, bool) {
  const TaggedUnit& u = units_.at(unit);
  const TrunkOutput enc = run_trunk(g, trunk_, u.ids, config_.dropout);
  return crf::crf_nll(enc.features, u.tags, crf_);
}

std::vector<int> BodySystemBaseline::decode(std::span<const int> ids) {
  nn::Graph g(nn::Mode::kInference);
  const TrunkOutput enc = run_trunk(g, trunk_, ids, config_.dropout);
  return crf::viterbi_decode(enc.features.value(), crf_).tags;
}

}  // namespace sxtract::sat
