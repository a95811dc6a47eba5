#include <sxtract/sat/sat_model.hpp>

#include <sxtract/error.hpp>

#include <algorithm>

namespace sxtract::sat {

std::vector<SatUnit> make_sat_units(const corpus::Conversation& conversation,
                                    std::span<const corpus::SpanLabel> labels, const Vocab& vocab,
                                    const corpus::Ontology& ontology, int turns_per_unit) {
  const std::vector<InputUnit> inputs = make_input_units(conversation, vocab, turns_per_unit);
  std::vector<SatUnit> units;
  for (const InputUnit& in : inputs) {
    SatUnit u;
    u.id = in.id;
    u.ids = in.ids;
    units.push_back(std::move(u));
  }
  for (const corpus::SpanLabel& l : labels) {
    const int symptom = ontology.id_of(l.symptom);
    if (symptom < 0) throw Error("unknown symptom '" + l.symptom + "' in " + conversation.id);
    std::size_t k = 0;
    while (k < inputs.size() && !(l.turn >= inputs[k].first_turn && l.turn < inputs[k].end_turn)) ++k;
    if (k == inputs.size()) throw Error("label turn out of range in " + conversation.id);
    units[k].spans.push_back(
        {inputs[k].position(l.turn, l.start), inputs[k].position(l.turn, l.end), symptom, static_cast<int>(l.status)});
  }
  for (SatUnit& u : units) {
    std::stable_sort(u.spans.begin(), u.spans.end(),
                     [](const GoldSpan& a, const GoldSpan& b) { return a.start < b.start; });
    std::vector<GoldSpan> kept;
    for (const GoldSpan& s : u.spans) {
      if (kept.empty() || s.start >= kept.back().end) kept.push_back(s);
    }
    u.spans = std::move(kept);
    std::vector<crf::Span> spans;
    for (const GoldSpan& s : u.spans) spans.push_back({s.start, s.end});
    u.tags = crf::spans_to_tags(spans, static_cast<int>(u.ids.size()));
  }
  return units;
}

std::vector<int> match_spans(std::span<const crf::Span> predicted, std::span<const GoldSpan> gold) {
  std::vector<int> out(predicted.size(), -1);
  std::vector<bool> used(gold.size(), false);
  for (;;) {
    int best = 0, bp = -1, bg = -1;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      if (out[i] >= 0) continue;
      for (std::size_t j = 0; j < gold.size(); ++j) {
        if (used[j]) continue;
        const int ov = std::min(predicted[i].end, gold[j].end) - std::max(predicted[i].start, gold[j].start);
        if (ov > best) {
          best = ov;
          bp = static_cast<int>(i);
          bg = static_cast<int>(j);
        }
      }
    }
    if (bp < 0) break;
    out[static_cast<std::size_t>(bp)] = bg;
    used[static_cast<std::size_t>(bg)] = true;
  }
  return out;
}

SatModel::SatModel(const SatConfig& config, Vocab vocab, corpus::Ontology ontology, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), ontology_(std::move(ontology)) {
  config_.validate();
  if (ontology_.size() == 0) throw ConfigError("sat model: empty ontology");
  std::mt19937_64 rng(seed);
  trunk_ = TrunkParams::create(params_, vocab_.size(), config_.word_emb_dim, config_.lstm_hidden,
                               config_.enc_layers, config_.ff_dim, rng);
  crf_ = crf::CrfParams::create(params_, "crf", crf::kSpanTagCount, config_.ff_dim, rng);
  const Index in = config_.pooling == Pooling::kFinalState ? 2 * config_.lstm_hidden : config_.ff_dim;
  sx_w_ = &params_.add("head.sx.W", nn::glorot_init(in, ontology_.size(), rng));
  sx_b_ = &params_.add("head.sx.b", nn::Matrix::Zero(1, ontology_.size()));
  st_w_ = &params_.add("head.st.W", nn::glorot_init(in, corpus::kStatusCount, rng));
  st_b_ = &params_.add("head.st.b", nn::Matrix::Zero(1, corpus::kStatusCount));
}

std::unique_ptr<SatModel> SatModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.meta_at("model_type") != "sat") {
    throw Error("checkpoint holds a '" + ckpt.meta_at("model_type") + "' model, not 'sat'");
  }
  SatConfig cfg;
  cfg.apply(KeyValues::parse(ckpt.meta_at("config"), "<checkpoint config>"));
  auto model = std::make_unique<SatModel>(cfg, Vocab::from_text(ckpt.meta_at("vocab")),
                                          corpus::Ontology::from_tsv(ckpt.meta_at("ontology")), 0);
  nn::restore(model->params_, ckpt);
  return model;
}

std::size_t SatModel::prepare_training(std::span<const corpus::AnnotatedConversation> train) {
  units_.clear();
  for (const auto& ac : train) {
    auto u = make_sat_units(ac.conversation, ac.primary_labels(), vocab_, ontology_, config_.input_turns);
    units_.insert(units_.end(), std::make_move_iterator(u.begin()), std::make_move_iterator(u.end()));
  }
  return units_.size();
}

TrunkOutput SatModel::encode(nn::Graph& g, std::span<const int> ids) {
  return run_trunk(g, trunk_, ids, config_.dropout);
}

Value SatModel::pool_span(const TrunkOutput& encoded, int start, int end) const {
  const auto len = static_cast<int>(encoded.features.rows());
  if (!(start >= 0 && start < end && end <= len)) {
    throw Error("pool_span: invalid interval [" + std::to_string(start) + ", " + std::to_string(end) +
                ") for length " + std::to_string(len));
  }
  switch (config_.pooling) {
    case Pooling::kMean:
      return nn::mean_rows(nn::slice_rows(encoded.features, start, end - start));
    case Pooling::kSum:
      return nn::sum_rows(nn::slice_rows(encoded.features, start, end - start));
    case Pooling::kFinalState: {
      const Index h = encoded.hidden.cols() / 2;
      return nn::concat_cols({nn::slice(encoded.hidden, end - 1, 1, 0, h), nn::slice(encoded.hidden, start, 1, h, h)});
    }
  }
  throw Error("pool_span: unknown pooling");
}

SatModel::AttributeLogits SatModel::classify_span(const Value& repr) {
  nn::Graph& g = repr.graph();
  return {nn::add(nn::matmul(repr, g.param(*sx_w_)), g.param(*sx_b_)),
          nn::add(nn::matmul(repr, g.param(*st_w_)), g.param(*st_b_))};
}

Value SatModel::loss(nn::Graph& g, const SatUnit& unit, bool use_gold_spans) {
  const TrunkOutput enc = encode(g, unit.ids);
  std::vector<Value> terms;
  if (config_.alpha != 0) terms.push_back(nn::scale(crf::crf_nll(enc.features, unit.tags, crf_), config_.alpha));
  auto attribute_terms = [&](int start, int end, const GoldSpan& gold) {
    const AttributeLogits logits = classify_span(pool_span(enc, start, end));
    terms.push_back(nn::cross_entropy(logits.symptom, gold.symptom));
    terms.push_back(nn::cross_entropy(logits.status, gold.status));
  };
  if (use_gold_spans) {
    for (const GoldSpan& s : unit.spans) attribute_terms(s.start, s.end, s);
  } else {
    const crf::ViterbiResult v = crf::viterbi_decode(enc.features.value(), crf_);
    const std::vector<crf::Span> predicted = crf::tags_to_spans(v.tags);
    const std::vector<int> match = match_spans(predicted, unit.spans);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      if (match[i] >= 0) attribute_terms(predicted[i].start, predicted[i].end, unit.spans[static_cast<std::size_t>(match[i])]);
    }
  }
  if (terms.empty()) return g.constant(0.0);
  Value total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = nn::add(total, terms[i]);
  return total;
}

Value SatModel::unit_loss(nn::Graph& g, std::size_t unit, bool use_gold_spans) {
  return loss(g, units_.at(unit), use_gold_spans);
}

std::vector<SatModel::Extracted> SatModel::extract(std::span<const int> ids) {
  nn::Graph g(nn::Mode::kInference);
  const TrunkOutput enc = encode(g, ids);
  const crf::ViterbiResult v = crf::viterbi_decode(enc.features.value(), crf_);
  std::vector<Extracted> out;
  for (const crf::Span& s : crf::tags_to_spans(v.tags)) {
    const AttributeLogits logits = classify_span(pool_span(enc, s.start, s.end));
    Index sx = 0, st = 0;
    logits.symptom.value().row(0).maxCoeff(&sx);
    logits.status.value().row(0).maxCoeff(&st);
    out.push_back({s, static_cast<int>(sx), static_cast<int>(st)});
  }
  return out;
}

corpus::MentionSet SatModel::infer(const corpus::Conversation& conversation) {
  corpus::MentionSet out;
  for (const InputUnit& u : make_input_units(conversation, vocab_, config_.input_turns)) {
    for (const Extracted& e : extract(u.ids)) {
      out.add({ontology_.symptom(e.symptom), static_cast<corpus::Status>(e.status)});
    }
  }
  return out;
}

void SatModel::load_encoder(const nn::Checkpoint& ckpt) {
  nn::restore(params_, ckpt, std::string(kEncoderPrefix) + ".");
}

nn::Checkpoint SatModel::to_checkpoint() const {
  return base_checkpoint(model_type(), config_.to_text(), vocab_, ontology_, params_);
}

nn::Checkpoint base_checkpoint(const std::string& model_type, const std::string& config_text, const Vocab& vocab,
                               const corpus::Ontology& ontology, const nn::ParameterSet& params) {
  nn::Checkpoint ckpt;
  ckpt.config_hash = nn::fnv1a64(config_text);
  ckpt.meta["model_type"] = model_type;
  ckpt.meta["config"] = config_text;
  ckpt.meta["vocab"] = vocab.to_text();
  ckpt.meta["ontology"] = ontology.to_tsv();
  ckpt.tensors = nn::snapshot(params);
  return ckpt;
}

}  // namespace sxtract::sat
