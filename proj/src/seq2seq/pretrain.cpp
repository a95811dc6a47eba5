#include <sxtract/seq2seq/pretrain.hpp>

#include <sxtract/error.hpp>

namespace sxtract::seq2seq {

std::vector<TrainingPair> make_pretrain_pairs(const corpus::Conversation& conversation, const sat::Vocab& vocab,
                                              int k) {
  if (k < 2) throw ConfigError("pre-training needs window_k >= 2");
  const int eos = vocab.size();
  const int context = k - 1;
  const int n = static_cast<int>(conversation.turns.size());
  std::vector<TrainingPair> out;
  for (int next = 1; next < n; ++next) {
    TrainingPair p;
    p.id = conversation.id + "^" + std::to_string(next);
    for (int t = std::max(0, next - context); t < next; ++t) {
      const corpus::Turn& turn = conversation.turns[static_cast<std::size_t>(t)];
      p.input.push_back(vocab.speaker_marker(turn.speaker));
      for (const auto& w : turn.tokens) p.input.push_back(vocab.id(w));
    }
    for (const auto& w : conversation.turns[static_cast<std::size_t>(next)].tokens) p.target.push_back(vocab.id(w));
    p.target.push_back(eos);
    out.push_back(std::move(p));
  }
  return out;
}

NextTurnModel::NextTurnModel(const Seq2SeqConfig& config, sat::Vocab vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  encoder_ = sat::EncoderParams::create(params_, sat::kEncoderPrefix, vocab_.size(), config_.word_emb_dim,
                                        config_.lstm_hidden, config_.layers, rng);
  // Output: words + EOS; input adds GO.
  decoder_ = AttnDecoderParams::create(params_, "pre.dec", vocab_.size() + 2, vocab_.size() + 1,
                                       config_.word_emb_dim, encoder_.output_dim(), config_.lstm_hidden,
                                       config_.attention_dim, rng);
}

std::size_t NextTurnModel::prepare_training(std::span<const corpus::AnnotatedConversation> train) {
  pairs_.clear();
  for (const auto& ac : train) {
    auto p = make_pretrain_pairs(ac.conversation, vocab_, config_.window_k);
    pairs_.insert(pairs_.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return pairs_.size();
}

Value NextTurnModel::unit_loss(nn::Graph& g, std::size_t unit, bool) {
  const TrainingPair& p = pairs_.at(unit);
  const DecoderContext ctx = make_context(sat::encode_ids(g, encoder_, p.input, config_.dropout), decoder_);
  return teacher_forced_loss(ctx, decoder_, p.target, vocab_.size() + 1);
}

nn::Checkpoint NextTurnModel::to_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.config_hash = nn::fnv1a64(config_.to_text());
  ckpt.meta["model_type"] = model_type();
  ckpt.meta["config"] = config_.to_text();
  ckpt.meta["vocab"] = vocab_.to_text();
  ckpt.tensors = nn::snapshot(params_);
  return ckpt;
}

nn::Checkpoint NextTurnModel::encoder_checkpoint() const {
  nn::Checkpoint ckpt;
  ckpt.config_hash = nn::fnv1a64(config_.to_text());
  ckpt.meta["model_type"] = "encoder";
  ckpt.meta["config"] = config_.to_text();
  ckpt.meta["vocab"] = vocab_.to_text();
  ckpt.meta["word_emb_dim"] = std::to_string(config_.word_emb_dim);
  ckpt.meta["lstm_hidden"] = std::to_string(config_.lstm_hidden);
  ckpt.meta["layers"] = std::to_string(config_.layers);
  ckpt.tensors = nn::snapshot(params_, std::string(sat::kEncoderPrefix) + ".");
  return ckpt;
}

PretrainResult pretrain_encoder(std::span<const corpus::AnnotatedConversation> unlabeled,
                                const Seq2SeqConfig& config, std::uint64_t seed) {
  NextTurnModel model(config, sat::Vocab::build(unlabeled), seed);
  sat::TrainOptions opt;
  opt.epochs = config.pretrain_epochs;
  opt.batch_size = config.batch_size;
  opt.adam.learning_rate = config.learning_rate;
  opt.adam.l2 = config.l2;
  opt.weight_noise_std = config.weight_noise_std;
  opt.seed = seed;
  PretrainResult out;
  out.log = sat::train_model(model, unlabeled, {}, opt);
  out.encoder = model.encoder_checkpoint();
  return out;
}

sat::Vocab encoder_vocab(const nn::Checkpoint& ckpt) { return sat::Vocab::from_text(ckpt.meta_at("vocab")); }

}  // namespace sxtract::seq2seq
