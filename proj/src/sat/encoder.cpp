#include <sxtract/sat/encoder.hpp>

#include <sxtract/error.hpp>

namespace sxtract::sat {

EncoderParams EncoderParams::create(nn::ParameterSet& params, const std::string& prefix, Index vocab_size,
                                    Index embedding_dim, Index hidden_dim, int layers, std::mt19937_64& rng) {
  EncoderParams p;
  p.embeddings = &params.add(prefix + ".emb", nn::uniform_init(vocab_size, embedding_dim, 0.1, rng));
  Index in = embedding_dim;
  for (int l = 0; l < layers; ++l) {
    p.layers.push_back(
        nn::BiLstmParams::create(params, prefix + ".lstm" + std::to_string(l), in, hidden_dim, rng));
    in = 2 * hidden_dim;
  }
  return p;
}

EncoderParams EncoderParams::bind(nn::ParameterSet& params, const std::string& prefix, int layers) {
  EncoderParams p;
  p.embeddings = &params.at(prefix + ".emb");
  for (int l = 0; l < layers; ++l) {
    const std::string lp = prefix + ".lstm" + std::to_string(l);
    p.layers.push_back({nn::LstmParams::bind(params, lp + ".fw"), nn::LstmParams::bind(params, lp + ".bw")});
  }
  return p;
}

Value encode_ids(nn::Graph& g, const EncoderParams& params, std::span<const int> ids, double dropout) {
  if (ids.empty()) throw ShapeError("encode: empty token sequence");
  Value x = nn::dropout(nn::gather_rows(g.param(*params.embeddings), ids), dropout);
  for (const auto& layer : params.layers) x = nn::bilstm_encode(x, layer);
  return nn::dropout(x, dropout);
}

TrunkParams TrunkParams::create(nn::ParameterSet& params, Index vocab_size, Index embedding_dim, Index hidden_dim,
                                int layers, Index ff_dim, std::mt19937_64& rng) {
  TrunkParams p;
  p.encoder = EncoderParams::create(params, kEncoderPrefix, vocab_size, embedding_dim, hidden_dim, layers, rng);
  p.w1 = &params.add("ff.W1", nn::glorot_init(2 * hidden_dim, ff_dim, rng));
  p.b1 = &params.add("ff.b1", nn::Matrix::Zero(1, ff_dim));
  p.w2 = &params.add("ff.W2", nn::glorot_init(ff_dim, ff_dim, rng));
  p.b2 = &params.add("ff.b2", nn::Matrix::Zero(1, ff_dim));
  return p;
}

TrunkParams TrunkParams::bind(nn::ParameterSet& params, int layers) {
  TrunkParams p;
  p.encoder = EncoderParams::bind(params, kEncoderPrefix, layers);
  p.w1 = &params.at("ff.W1");
  p.b1 = &params.at("ff.b1");
  p.w2 = &params.at("ff.W2");
  p.b2 = &params.at("ff.b2");
  return p;
}

TrunkOutput run_trunk(nn::Graph& g, const TrunkParams& p, std::span<const int> ids, double dropout) {
  TrunkOutput out;
  out.hidden = encode_ids(g, p.encoder, ids, dropout);
  Value z = nn::tanh(nn::add_row(nn::matmul(out.hidden, g.param(*p.w1)), g.param(*p.b1)));
  out.features = nn::tanh(nn::add_row(nn::matmul(z, g.param(*p.w2)), g.param(*p.b2)));
  return out;
}

std::vector<InputUnit> make_input_units(const corpus::Conversation& conversation, const Vocab& vocab,
                                        int turns_per_unit) {
  if (turns_per_unit < 0) throw ConfigError("input unit size must be >= 0");
  const int n = static_cast<int>(conversation.turns.size());
  const int step = turns_per_unit == 0 ? std::max(n, 1) : turns_per_unit;
  std::vector<InputUnit> out;
  for (int first = 0; first < n; first += step) {
    InputUnit u;
    u.first_turn = first;
    u.end_turn = std::min(n, first + step);
    u.id = conversation.id + "#" + std::to_string(first);
    for (int t = u.first_turn; t < u.end_turn; ++t) {
      const corpus::Turn& turn = conversation.turns[static_cast<std::size_t>(t)];
      u.ids.push_back(vocab.speaker_marker(turn.speaker));
      u.offsets.push_back(static_cast<int>(u.ids.size()));
      for (const auto& w : turn.tokens) u.ids.push_back(vocab.id(w));
    }
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace sxtract::sat
