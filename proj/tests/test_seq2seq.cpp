#include <sxtract/corpus/generator.hpp>
#include <sxtract/error.hpp>
#include <sxtract/sat/sat_model.hpp>
#include <sxtract/sat/training.hpp>
#include <sxtract/seq2seq/pretrain.hpp>
#include <sxtract/seq2seq/seq2seq_model.hpp>
#include <sxtract/seq2seq/windows.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sxtract;
using namespace sxtract::seq2seq;
using corpus::MentionKey;
using corpus::Speaker;
using corpus::Status;

namespace {

corpus::Conversation turns(int n) {
  corpus::Conversation c;
  c.id = "c";
  for (int i = 0; i < n; ++i) {
    c.turns.push_back({i % 2 == 0 ? Speaker::kDoctor : Speaker::kPatient, {"w" + std::to_string(i)}});
  }
  return c;
}

corpus::Ontology tiny_ontology() {
  corpus::Ontology o;
  o.add("sym:msk:pain", "msk");
  o.add("sym:gi:nausea", "gi");
  return o;
}

Seq2SeqConfig small_config() {
  Seq2SeqConfig c;
  c.word_emb_dim = 6;
  c.lstm_hidden = 5;
  c.attention_dim = 4;
  c.weight_noise_std = 0;
  c.window_k = 3;
  c.beam_width = 3;
  c.max_decode_len = 9;
  return c;
}

Window window(int first, int end) { return Window{first, end, {}}; }

}  // namespace

TEST_CASE("window layout") {
  for (int t = 1; t <= 9; ++t) {
    for (int k = 1; k <= 5; ++k) {
      for (int stride = 1; stride <= 3; ++stride) {
        const auto ws = make_windows(turns(t), k, stride);
        const int expected = std::max(1, static_cast<int>(std::ceil(static_cast<double>(t - k) / stride)) + 1);
        CHECK(static_cast<int>(ws.size()) == expected);
        CHECK(ws.front().first_turn == 0);
        CHECK(ws.back().end_turn == t);
        for (const auto& w : ws) {
          CHECK(w.end_turn - w.first_turn == std::min(k, t));
          CHECK(w.first_turn >= 0);
        }
      }
    }
  }
  const auto ws = make_windows(turns(3), 2, 1);
  CHECK(ws[1].tokens == std::vector<std::string>{"<PT>", "w1", "<DR>", "w2"});
  CHECK_THROWS_AS(make_windows(turns(3), 0, 1), Error);
  CHECK_THROWS_AS(make_windows(turns(3), 2, 0), Error);
}

TEST_CASE("window targets keep first-occurrence order without repeats") {
  const std::vector<corpus::SpanLabel> labels{
      {2, 0, 1, "sym:b", Status::kExperienced},
      {1, 3, 4, "sym:a", Status::kOther},
      {1, 0, 1, "sym:b", Status::kExperienced},
      {2, 2, 3, "sym:a", Status::kOther},
      {4, 0, 1, "sym:c", Status::kExperienced},
      {2, 4, 5, "sym:b", Status::kNotExperienced},
  };
  const auto keys = window_targets(window(1, 3), labels);
  CHECK(keys == std::vector<MentionKey>{{"sym:b", Status::kExperienced},
                                        {"sym:a", Status::kOther},
                                        {"sym:b", Status::kNotExperienced}});
  CHECK(window_targets(window(3, 4), labels).empty());
}

TEST_CASE("window aggregation counts runs of consecutive overlapping windows") {
  const MentionKey a{"sym:a", Status::kExperienced};
  const MentionKey b{"sym:b", Status::kOther};
  // Windows of 3 turns at stride 1 over 7 turns.
  std::vector<Window> ranges;
  for (int i = 0; i < 5; ++i) ranges.push_back(window(i, i + 3));
  const std::vector<std::vector<MentionKey>> decodes{{a, a}, {a}, {}, {a, b}, {b}};
  const corpus::MentionSet out = aggregate_windows(decodes, ranges);
  CHECK(out.count(a) == 2);
  CHECK(out.count(b) == 1);
  CHECK(out.unique_size() == 2);

  // Consecutive windows that do not overlap start a new run.
  const std::vector<Window> disjoint{window(0, 2), window(2, 4)};
  const std::vector<std::vector<MentionKey>> both{{a}, {a}};
  CHECK(aggregate_windows(both, disjoint).count(a) == 2);
  CHECK_THROWS_AS(aggregate_windows(both, std::span(ranges).first(1)), Error);
}

TEST_CASE("target vocabulary encoding and grammar") {
  const corpus::Ontology o = tiny_ontology();
  const TargetVocab tv(o.size());
  CHECK(tv.eos() == 5);
  CHECK(tv.go() == 6);
  CHECK(tv.output_size() == 6);
  const std::vector<MentionKey> keys{{"sym:gi:nausea", Status::kNotExperienced}, {"sym:msk:pain", Status::kOther}};
  const auto tokens = tv.encode(keys, o);
  CHECK(tokens == std::vector<int>{1, 3, 0, 4, 5});
  CHECK(tv.decode(tokens, o) == keys);
  CHECK(tv.decode(std::vector<int>{0, 2}, o) == std::vector<MentionKey>{{"sym:msk:pain", Status::kExperienced}});
  CHECK(tv.decode(std::vector<int>{5, 0, 2}, o).empty());
  CHECK_THROWS_AS(tv.decode(std::vector<int>{0, 1}, o), Error);
  CHECK_THROWS_AS(tv.decode(std::vector<int>{2, 0}, o), Error);
  const std::vector<MentionKey> unknown{{"sym:none", Status::kOther}};
  CHECK_THROWS_AS(tv.encode(unknown, o), Error);
  for (int t = 0; t < tv.output_size(); ++t) {
    CHECK(tv.allowed(0, t) == (tv.is_symptom(t) || t == tv.eos()));
    CHECK(tv.allowed(1, t) == tv.is_status(t));
    CHECK(tv.allowed(2, t) == tv.allowed(0, t));
  }
}

TEST_CASE("beam search is grammatical, and width 1 matches greedy decoding") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0, 1.5);
  const corpus::Ontology o = tiny_ontology();
  corpus::AnnotatedConversation ac;
  ac.conversation = turns(4);
  const sat::Vocab v = sat::Vocab::build(std::span(&ac, 1));
  const std::vector<int> input{4, 5, 6, 7, 2};
  for (int m = 0; m < 50; ++m) {
    Seq2SeqModel model(small_config(), v, o, static_cast<std::uint64_t>(m));
    for (nn::Parameter* p : model.parameters().pointers()) {
      for (Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += noise(rng);
    }
    const Decoded greedy = model.greedy_decode(input, 9);
    const Decoded beam1 = model.beam_decode(input, 1, 9);
    CHECK(beam1.tokens == greedy.tokens);
    CHECK(beam1.log_prob == doctest::Approx(greedy.log_prob).epsilon(1e-12));
    for (int width = 1; width <= 4; ++width) {
      const Decoded d = model.beam_decode(input, width, 9);
      REQUIRE(!d.tokens.empty());
      CHECK(d.tokens.back() == model.targets().eos());
      for (std::size_t pos = 0; pos < d.tokens.size(); ++pos) {
        CHECK(model.targets().allowed(static_cast<int>(pos), d.tokens[pos]));
      }
      CHECK(d.tokens.size() % 2 == 1);
      if (d.truncated) {
        // Cut back to the last complete pair; the closing EOS was never scored.
        CHECK(d.attention.rows() == static_cast<Index>(d.tokens.size()) - 1);
        continue;
      }
      CHECK(d.attention.rows() == static_cast<Index>(d.tokens.size()));
      CHECK((d.attention.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
      CHECK(model.sequence_log_prob(input, d.tokens) == doctest::Approx(d.log_prob).epsilon(1e-9));
    }
  }
}

TEST_CASE("next-turn pre-training pairs") {
  corpus::AnnotatedConversation ac;
  ac.conversation = turns(5);
  const sat::Vocab v = sat::Vocab::build(std::span(&ac, 1));
  const auto pairs = make_pretrain_pairs(ac.conversation, v, 3);
  // Every turn after the first is a target; context is up to two turns.
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[0].input == std::vector<int>{v.speaker_marker(Speaker::kDoctor), v.id("w0")});
  CHECK(pairs[1].input == std::vector<int>{v.speaker_marker(Speaker::kDoctor), v.id("w0"),
                                           v.speaker_marker(Speaker::kPatient), v.id("w1")});
  CHECK(pairs[1].target == std::vector<int>{v.id("w2"), v.size()});
  CHECK(pairs[3].target.front() == v.id("w4"));
  CHECK_THROWS_AS(make_pretrain_pairs(turns(3), v, 1), ConfigError);
  CHECK(make_pretrain_pairs(turns(1), v, 3).empty());
}

TEST_CASE("pre-trained encoder transfers into both tagging models") {
  corpus::GeneratorConfig gc;
  gc.train_size = 6;
  gc.dev_size = 2;
  gc.test_size = 2;
  const corpus::CorpusSplits s = corpus::generate_splits(gc, 5);
  Seq2SeqConfig c = small_config();
  c.pretrain_epochs = 2;
  const PretrainResult pre = pretrain_encoder(s.train, c, 3);
  CHECK(pre.log.log.size() == 2);
  CHECK(pre.encoder.meta_at("model_type") == "encoder");
  for (const auto& t : pre.encoder.tensors) CHECK(t.name.rfind("enc.", 0) == 0);

  const sat::Vocab v = encoder_vocab(pre.encoder);
  Seq2SeqModel s2s(c, v, s.ontology, 8);
  s2s.load_encoder(pre.encoder);
  sat::SatConfig sc;
  sc.word_emb_dim = c.word_emb_dim;
  sc.lstm_hidden = c.lstm_hidden;
  sc.enc_layers = c.layers;
  sc.ff_dim = 4;
  sat::SatModel sat_model(sc, v, s.ontology, 8);
  sat_model.load_encoder(pre.encoder);
  for (const auto& t : pre.encoder.tensors) {
    CHECK(s2s.parameters().at(t.name).value == sat_model.parameters().at(t.name).value);
  }
}

TEST_CASE("training, checkpoint round trip and decoding a conversation") {
  corpus::GeneratorConfig gc;
  gc.train_size = 6;
  gc.dev_size = 2;
  gc.test_size = 2;
  const corpus::CorpusSplits s = corpus::generate_splits(gc, 6);
  Seq2SeqModel m(small_config(), sat::Vocab::build(s.train), s.ontology, 2);
  sat::TrainOptions opt;
  opt.epochs = 3;
  opt.adam.learning_rate = 0.01;
  const sat::TrainResult r = sat::train_model(m, s.train, {}, opt);
  CHECK(r.log.back().mean_loss < r.log.front().mean_loss);

  const auto loaded = Seq2SeqModel::from_checkpoint(m.to_checkpoint());
  for (const auto& ac : s.test) {
    CHECK(loaded->infer(ac.conversation) == m.infer(ac.conversation));
    const auto decodes = m.decode_conversation(ac.conversation);
    CHECK(decodes.size() == make_windows(ac.conversation, 3, 1).size());
    std::vector<std::vector<MentionKey>> keys;
    std::vector<Window> ranges;
    for (const auto& d : decodes) {
      keys.push_back(d.keys);
      ranges.push_back(d.window);
    }
    CHECK(aggregate_windows(keys, ranges) == m.infer(ac.conversation));
  }

  nn::Graph g;
  const std::vector<int> bad{99};
  CHECK_THROWS_AS(m.loss(g, m.pairs().front().input, bad), Error);
}
