#include <sxtract/seq2seq/seq2seq_model.hpp>

#include <sxtract/error.hpp>
#include <sxtract/metrics/report.hpp>
#include <sxtract/sat/sat_model.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sxtract::seq2seq {
namespace {

std::string num(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

// Row-wise log-softmax of a 1 x V row, outside any graph.
Matrix log_softmax_row(const Matrix& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

}  // namespace

// ---- config ----

void Seq2SeqConfig::validate() const {
  if (word_emb_dim < 1 || lstm_hidden < 1 || layers < 1 || attention_dim < 1) {
    throw ConfigError("seq2seq config: all dimensions must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("seq2seq config: dropout must be in [0,1)");
  if (!(learning_rate > 0.0)) throw ConfigError("seq2seq config: learning_rate must be > 0");
  if (l2 < 0 || weight_noise_std < 0) throw ConfigError("seq2seq config: l2 and weight_noise_std must be >= 0");
  if (window_k < 1) throw ConfigError("seq2seq config: window_k must be >= 1");
  if (window_stride < 1) throw ConfigError("seq2seq config: window_stride must be >= 1");
  if (beam_width < 1) throw ConfigError("seq2seq config: beam_width must be >= 1");
  if (max_decode_len < 1) throw ConfigError("seq2seq config: max_decode_len must be >= 1");
  if (epochs < 0 || pretrain_epochs < 0 || batch_size < 1) {
    throw ConfigError("seq2seq config: need epochs, pretrain_epochs >= 0 and batch_size >= 1");
  }
}

void Seq2SeqConfig::set(const std::string& key, const std::string& value) {
  if (key == "word_emb_dim") {
    word_emb_dim = parse_int_value(key, value);
  } else if (key == "lstm_hidden") {
    lstm_hidden = parse_int_value(key, value);
  } else if (key == "layers") {
    layers = parse_int_value(key, value);
  } else if (key == "attention_dim") {
    attention_dim = parse_int_value(key, value);
  } else if (key == "dropout") {
    dropout = parse_double_value(key, value);
  } else if (key == "l2") {
    l2 = parse_double_value(key, value);
  } else if (key == "weight_noise_std") {
    weight_noise_std = parse_double_value(key, value);
  } else if (key == "learning_rate") {
    learning_rate = parse_double_value(key, value);
  } else if (key == "window_k") {
    window_k = parse_int_value(key, value);
  } else if (key == "window_stride") {
    window_stride = parse_int_value(key, value);
  } else if (key == "beam_width") {
    beam_width = parse_int_value(key, value);
  } else if (key == "max_decode_len") {
    max_decode_len = parse_int_value(key, value);
  } else if (key == "epochs") {
    epochs = parse_int_value(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_int_value(key, value);
  } else if (key == "pretrain_epochs") {
    pretrain_epochs = parse_int_value(key, value);
  } else {
    throw ConfigError("unknown seq2seq config key '" + key + "'");
  }
}

void Seq2SeqConfig::apply(const KeyValues& kv) {
  for (const auto& [k, v] : kv.entries) set(k, v);
  validate();
}

std::string Seq2SeqConfig::to_text() const {
  std::ostringstream o;
  o << "word_emb_dim = " << word_emb_dim << '\n'
    << "lstm_hidden = " << lstm_hidden << '\n'
    << "layers = " << layers << '\n'
    << "attention_dim = " << attention_dim << '\n'
    << "dropout = " << num(dropout) << '\n'
    << "l2 = " << num(l2) << '\n'
    << "weight_noise_std = " << num(weight_noise_std) << '\n'
    << "learning_rate = " << num(learning_rate) << '\n'
    << "window_k = " << window_k << '\n'
    << "window_stride = " << window_stride << '\n'
    << "beam_width = " << beam_width << '\n'
    << "max_decode_len = " << max_decode_len << '\n'
    << "epochs = " << epochs << '\n'
    << "batch_size = " << batch_size << '\n'
    << "pretrain_epochs = " << pretrain_epochs << '\n';
  return o.str();
}

// ---- target vocabulary ----

std::vector<int> TargetVocab::encode(std::span<const corpus::MentionKey> keys, const corpus::Ontology& ontology) const {
  std::vector<int> out;
  for (const auto& k : keys) {
    const int id = ontology.id_of(k.symptom);
    if (id < 0 || id >= symptoms_) throw Error("target: unknown symptom '" + k.symptom + "'");
    out.push_back(id);
    out.push_back(status_token(k.status));
  }
  out.push_back(eos());
  return out;
}

std::vector<corpus::MentionKey> TargetVocab::decode(std::span<const int> tokens,
                                                    const corpus::Ontology& ontology) const {
  std::vector<corpus::MentionKey> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int t = tokens[i];
    if (t == eos() && i % 2 == 0) break;
    if (!allowed(static_cast<int>(i), t)) {
      throw Error("decoded sequence breaks the symptom/status alternation at position " + std::to_string(i));
    }
    if (i % 2 == 1) {
      out.push_back({ontology.symptom(tokens[i - 1]), static_cast<corpus::Status>(t - symptoms_)});
    }
  }
  return out;
}

bool TargetVocab::allowed(int pos, int token) const {
  return pos % 2 == 0 ? (is_symptom(token) || token == eos()) : is_status(token);
}

// ---- decoder ----

AttnDecoderParams AttnDecoderParams::create(nn::ParameterSet& params, const std::string& prefix, Index input_vocab,
                                            Index output_vocab, Index embedding_dim, Index context_dim,
                                            Index hidden_dim, Index attention_dim, std::mt19937_64& rng) {
  AttnDecoderParams p;
  p.embeddings = &params.add(prefix + ".emb", nn::uniform_init(input_vocab, embedding_dim, 0.1, rng));
  p.cell = nn::LstmParams::create(params, prefix + ".cell", embedding_dim + context_dim, hidden_dim, rng);
  p.bridge_w = &params.add(prefix + ".bridge.W", nn::glorot_init(context_dim, hidden_dim, rng));
  p.bridge_b = &params.add(prefix + ".bridge.b", Matrix::Zero(1, hidden_dim));
  p.att_enc = &params.add(prefix + ".att.We", nn::glorot_init(context_dim, attention_dim, rng));
  p.att_dec = &params.add(prefix + ".att.Wd", nn::glorot_init(hidden_dim, attention_dim, rng));
  p.att_b = &params.add(prefix + ".att.b", Matrix::Zero(1, attention_dim));
  p.att_v = &params.add(prefix + ".att.v", nn::glorot_init(attention_dim, 1, rng));
  p.out_w = &params.add(prefix + ".out.W", nn::glorot_init(hidden_dim + context_dim, output_vocab, rng));
  p.out_b = &params.add(prefix + ".out.b", Matrix::Zero(1, output_vocab));
  return p;
}

AttnDecoderParams AttnDecoderParams::bind(nn::ParameterSet& params, const std::string& prefix) {
  AttnDecoderParams p;
  p.embeddings = &params.at(prefix + ".emb");
  p.cell = nn::LstmParams::bind(params, prefix + ".cell");
  p.bridge_w = &params.at(prefix + ".bridge.W");
  p.bridge_b = &params.at(prefix + ".bridge.b");
  p.att_enc = &params.at(prefix + ".att.We");
  p.att_dec = &params.at(prefix + ".att.Wd");
  p.att_b = &params.at(prefix + ".att.b");
  p.att_v = &params.at(prefix + ".att.v");
  p.out_w = &params.at(prefix + ".out.W");
  p.out_b = &params.at(prefix + ".out.b");
  return p;
}

DecoderContext make_context(const Value& states, const AttnDecoderParams& p) {
  return {states, nn::matmul(states, states.graph().param(*p.att_enc))};
}

nn::LstmState initial_decoder_state(const DecoderContext& ctx, const AttnDecoderParams& p) {
  nn::Graph& g = ctx.states.graph();
  Value h = nn::tanh(nn::add(nn::matmul(nn::mean_rows(ctx.states), g.param(*p.bridge_w)), g.param(*p.bridge_b)));
  return {h, g.constant(Matrix::Zero(1, h.cols()))};
}

DecoderStep decoder_step(const DecoderContext& ctx, const AttnDecoderParams& p, const nn::LstmState& state,
                         int prev_token) {
  nn::Graph& g = ctx.states.graph();
  Value query = nn::add(nn::matmul(state.h, g.param(*p.att_dec)), g.param(*p.att_b));
  Value energy = nn::matmul(nn::tanh(nn::add_row(ctx.projected, query)), g.param(*p.att_v));  // T x 1
  Value weights = nn::softmax(nn::transpose(energy));                                          // 1 x T
  Value context = nn::matmul(weights, ctx.states);                                             // 1 x C
  const int ids[1] = {prev_token};
  Value emb = nn::gather_rows(g.param(*p.embeddings), ids);
  DecoderStep out;
  out.state = nn::lstm_cell(nn::concat_cols({emb, context}), state, p.cell);
  out.logits = nn::add(nn::matmul(nn::concat_cols({out.state.h, context}), g.param(*p.out_w)), g.param(*p.out_b));
  out.attention = weights;
  return out;
}

Value teacher_forced_loss(const DecoderContext& ctx, const AttnDecoderParams& p, std::span<const int> targets,
                          int go_token, std::vector<Matrix>* attention) {
  if (targets.empty()) throw Error("teacher_forced_loss: empty target");
  const Index v = p.out_w->value.cols();
  nn::LstmState state = initial_decoder_state(ctx, p);
  int prev = go_token;
  Value total;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= v) {
      throw Error("target token " + std::to_string(targets[i]) + " outside the output vocabulary of size " +
                  std::to_string(v));
    }
    DecoderStep step = decoder_step(ctx, p, state, prev);
    if (attention) attention->push_back(step.attention.value());
    Value ce = nn::cross_entropy(step.logits, targets[i]);
    total = i == 0 ? ce : nn::add(total, ce);
    state = step.state;
    prev = targets[i];
  }
  return total;
}

// ---- model ----

Seq2SeqModel::Seq2SeqModel(const Seq2SeqConfig& config, sat::Vocab vocab, corpus::Ontology ontology,
                           std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), ontology_(std::move(ontology)), targets_(ontology_.size()) {
  config_.validate();
  if (ontology_.size() == 0) throw ConfigError("seq2seq model: empty ontology");
  std::mt19937_64 rng(seed);
  encoder_ = sat::EncoderParams::create(params_, sat::kEncoderPrefix, vocab_.size(), config_.word_emb_dim,
                                        config_.lstm_hidden, config_.layers, rng);
  decoder_ = AttnDecoderParams::create(params_, "dec", targets_.input_size(), targets_.output_size(),
                                       config_.word_emb_dim, encoder_.output_dim(), config_.lstm_hidden,
                                       config_.attention_dim, rng);
}

std::unique_ptr<Seq2SeqModel> Seq2SeqModel::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.meta_at("model_type") != "seq2seq") {
    throw Error("checkpoint holds a '" + ckpt.meta_at("model_type") + "' model, not 'seq2seq'");
  }
  Seq2SeqConfig cfg;
  cfg.apply(KeyValues::parse(ckpt.meta_at("config"), "<checkpoint config>"));
  auto m = std::make_unique<Seq2SeqModel>(cfg, sat::Vocab::from_text(ckpt.meta_at("vocab")),
                                          corpus::Ontology::from_tsv(ckpt.meta_at("ontology")), 0);
  nn::restore(m->params_, ckpt);
  return m;
}

std::vector<int> Seq2SeqModel::window_ids(const Window& window) const {
  std::vector<int> ids;
  ids.reserve(window.tokens.size());
  for (const auto& w : window.tokens) ids.push_back(vocab_.id(w));
  return ids;
}

std::vector<TrainingPair> Seq2SeqModel::make_training_pairs(const corpus::Conversation& conversation,
                                                            std::span<const corpus::SpanLabel> labels) const {
  std::vector<TrainingPair> out;
  for (const Window& w : make_windows(conversation, config_.window_k, config_.window_stride)) {
    const auto keys = window_targets(w, labels);
    out.push_back({conversation.id + "@" + std::to_string(w.first_turn), window_ids(w),
                   targets_.encode(keys, ontology_)});
  }
  return out;
}

std::size_t Seq2SeqModel::prepare_training(std::span<const corpus::AnnotatedConversation> train) {
  pairs_.clear();
  for (const auto& ac : train) {
    auto p = make_training_pairs(ac.conversation, ac.primary_labels());
    pairs_.insert(pairs_.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return pairs_.size();
}

DecoderContext Seq2SeqModel::encode(nn::Graph& g, std::span<const int> input) {
  return make_context(sat::encode_ids(g, encoder_, input, config_.dropout), decoder_);
}

Value Seq2SeqModel::loss(nn::Graph& g, std::span<const int> input, std::span<const int> target) {
  return teacher_forced_loss(encode(g, input), decoder_, target, targets_.go());
}

Value Seq2SeqModel::unit_loss(nn::Graph& g, std::size_t unit, bool) {
  const TrainingPair& p = pairs_.at(unit);
  return loss(g, p.input, p.target);
}

double Seq2SeqModel::sequence_log_prob(std::span<const int> input, std::span<const int> target) {
  nn::Graph g(nn::Mode::kInference);
  const DecoderContext ctx = encode(g, input);
  nn::LstmState state = initial_decoder_state(ctx, decoder_);
  int prev = targets_.go();
  double total = 0;
  for (int t : target) {
    DecoderStep step = decoder_step(ctx, decoder_, state, prev);
    total += log_softmax_row(step.logits.value())(0, t);
    state = step.state;
    prev = t;
  }
  return total;
}

namespace {

struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0;
  nn::LstmState state;
  std::vector<Matrix> attention;
};

Matrix stack_rows(const std::vector<Matrix>& rows, Index cols) {
  Matrix m(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Index>(i)) = rows[i];
  return m;
}

// Cuts an unfinished sequence back to its last complete pair and closes it with EOS.
Decoded finish_truncated(const Hypothesis& h, int eos, Index cols) {
  Decoded d;
  const std::size_t keep = h.tokens.size() - h.tokens.size() % 2;
  d.tokens.assign(h.tokens.begin(), h.tokens.begin() + static_cast<std::ptrdiff_t>(keep));
  d.tokens.push_back(eos);
  d.log_prob = h.log_prob;
  d.score = h.tokens.empty() ? 0.0 : h.log_prob / static_cast<double>(h.tokens.size());
  std::vector<Matrix> att(h.attention.begin(), h.attention.begin() + static_cast<std::ptrdiff_t>(keep));
  d.attention = stack_rows(att, cols);
  d.truncated = true;
  return d;
}

}  // namespace

Decoded Seq2SeqModel::beam_decode(std::span<const int> input, int beam_width, int max_len) {
  if (beam_width < 1) throw Error("beam_decode: beam_width must be >= 1");
  if (max_len < 1) throw Error("beam_decode: max_len must be >= 1");
  nn::Graph g(nn::Mode::kInference);
  const DecoderContext ctx = encode(g, input);
  const Index cols = ctx.states.rows();
  std::vector<Hypothesis> alive(1);
  alive[0].state = initial_decoder_state(ctx, decoder_);
  std::vector<Decoded> finished;
  const auto width = static_cast<std::size_t>(beam_width);

  struct Candidate {
    double log_prob;
    std::size_t hyp;
    int token;
  };
  for (int pos = 0; pos < max_len && !alive.empty() && finished.size() < width; ++pos) {
    std::vector<DecoderStep> steps;
    std::vector<Matrix> log_probs;
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const int prev = alive[h].tokens.empty() ? targets_.go() : alive[h].tokens.back();
      steps.push_back(decoder_step(ctx, decoder_, alive[h].state, prev));
      log_probs.push_back(log_softmax_row(steps.back().logits.value()));
      for (int t = 0; t < targets_.output_size(); ++t) {
        if (targets_.allowed(pos, t)) cands.push_back({alive[h].log_prob + log_probs.back()(0, t), h, t});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
    std::vector<Hypothesis> next;
    for (const Candidate& c : cands) {
      if (next.size() + finished.size() >= width) break;
      Hypothesis h;
      h.tokens = alive[c.hyp].tokens;
      h.tokens.push_back(c.token);
      h.log_prob = c.log_prob;
      h.state = steps[c.hyp].state;
      h.attention = alive[c.hyp].attention;
      h.attention.push_back(steps[c.hyp].attention.value());
      if (c.token == targets_.eos()) {
        Decoded d;
        d.tokens = std::move(h.tokens);
        d.log_prob = h.log_prob;
        d.score = h.log_prob / static_cast<double>(d.tokens.size());
        d.attention = stack_rows(h.attention, cols);
        finished.push_back(std::move(d));
      } else {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }
  if (!finished.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < finished.size(); ++i) {
      if (finished[i].score > finished[best].score) best = i;
    }
    return finished[best];
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < alive.size(); ++i) {
    if (alive[i].log_prob / static_cast<double>(alive[i].tokens.size()) >
        alive[best].log_prob / static_cast<double>(alive[best].tokens.size())) {
      best = i;
    }
  }
  return finish_truncated(alive[best], targets_.eos(), cols);
}

Decoded Seq2SeqModel::greedy_decode(std::span<const int> input, int max_len) {
  if (max_len < 1) throw Error("greedy_decode: max_len must be >= 1");
  nn::Graph g(nn::Mode::kInference);
  const DecoderContext ctx = encode(g, input);
  Hypothesis h;
  h.state = initial_decoder_state(ctx, decoder_);
  for (int pos = 0; pos < max_len; ++pos) {
    const int prev = h.tokens.empty() ? targets_.go() : h.tokens.back();
    DecoderStep step = decoder_step(ctx, decoder_, h.state, prev);
    const Matrix lp = log_softmax_row(step.logits.value());
    int best = -1;
    for (int t = 0; t < targets_.output_size(); ++t) {
      if (targets_.allowed(pos, t) && (best < 0 || lp(0, t) > lp(0, best))) best = t;
    }
    h.tokens.push_back(best);
    h.log_prob += lp(0, best);
    h.state = step.state;
    h.attention.push_back(step.attention.value());
    if (best == targets_.eos()) {
      Decoded d;
      d.tokens = h.tokens;
      d.log_prob = h.log_prob;
      d.score = h.log_prob / static_cast<double>(h.tokens.size());
      d.attention = stack_rows(h.attention, ctx.states.rows());
      return d;
    }
  }
  return finish_truncated(h, targets_.eos(), ctx.states.rows());
}

std::vector<Seq2SeqModel::WindowDecode> Seq2SeqModel::decode_conversation(const corpus::Conversation& conversation) {
  std::vector<WindowDecode> out;
  for (Window& w : make_windows(conversation, config_.window_k, config_.window_stride)) {
    WindowDecode d;
    d.decoded = beam_decode(window_ids(w), config_.beam_width, config_.max_decode_len);
    d.keys = targets_.decode(d.decoded.tokens, ontology_);
    d.window = std::move(w);
    out.push_back(std::move(d));
  }
  return out;
}

corpus::MentionSet Seq2SeqModel::infer(const corpus::Conversation& conversation) {
  const auto decodes = decode_conversation(conversation);
  std::vector<std::vector<corpus::MentionKey>> keys;
  std::vector<Window> ranges;
  for (const auto& d : decodes) {
    keys.push_back(d.keys);
    ranges.push_back(d.window);
  }
  return aggregate_windows(keys, ranges);
}

nn::Checkpoint Seq2SeqModel::to_checkpoint() const {
  return sat::base_checkpoint(model_type(), config_.to_text(), vocab_, ontology_, params_);
}

void Seq2SeqModel::load_encoder(const nn::Checkpoint& ckpt) {
  nn::restore(params_, ckpt, std::string(sat::kEncoderPrefix) + ".");
}

std::string format_attention(const std::string& conversation_id,
                             std::span<const Seq2SeqModel::WindowDecode> decodes) {
  std::ostringstream out;
  for (std::size_t w = 0; w < decodes.size(); ++w) {
    const Matrix& a = decodes[w].decoded.attention;
    for (Index s = 0; s < a.rows(); ++s) {
      for (Index p = 0; p < a.cols(); ++p) {
        out << conversation_id << '\t' << w << '\t' << s << '\t' << p << '\t'
            << decodes[w].window.tokens[static_cast<std::size_t>(p)] << '\t' << metrics::format_double(a(s, p))
            << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace sxtract::seq2seq
