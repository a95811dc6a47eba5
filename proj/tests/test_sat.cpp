#include <sxtract/corpus/generator.hpp>
#include <sxtract/error.hpp>
#include <sxtract/nn/ops.hpp>
#include <sxtract/sat/baseline.hpp>
#include <sxtract/sat/config.hpp>
#include <sxtract/sat/curriculum.hpp>
#include <sxtract/sat/encoder.hpp>
#include <sxtract/sat/sat_model.hpp>
#include <sxtract/sat/training.hpp>
#include <sxtract/sat/vocab.hpp>

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace sxtract;
using namespace sxtract::sat;
using corpus::Speaker;
using corpus::Status;

namespace {

corpus::Ontology tiny_ontology() {
  corpus::Ontology o;
  o.add("sym:msk:pain", "msk");
  o.add("sym:msk:swelling", "msk");
  o.add("sym:gi:nausea", "gi");
  return o;
}

corpus::AnnotatedConversation tiny() {
  corpus::AnnotatedConversation ac;
  ac.conversation.id = "t";
  ac.conversation.turns = {
      {Speaker::kDoctor, {"any", "back", "pain"}},
      {Speaker::kPatient, {"yes", "back", "pain", "and", "nausea"}},
      {Speaker::kDoctor, {"swelling"}},
      {Speaker::kPatient, {"no"}},
  };
  ac.annotations["a0"] = {
      {1, 1, 3, "sym:msk:pain", Status::kExperienced},
      {1, 4, 5, "sym:gi:nausea", Status::kExperienced},
      {2, 0, 1, "sym:msk:swelling", Status::kNotExperienced},
  };
  return ac;
}

SatConfig small_config() {
  SatConfig c;
  c.word_emb_dim = 8;
  c.lstm_hidden = 6;
  c.ff_dim = 8;
  c.dropout = 0;
  c.weight_noise_std = 0;
  c.alpha = 1;
  c.input_turns = 0;
  return c;
}

corpus::GeneratorConfig desk_corpus(int n) {
  corpus::GeneratorConfig g;
  g.train_size = n;
  g.dev_size = 4;
  g.test_size = 4;
  return g;
}

}  // namespace

TEST_CASE("config text round trip and validation") {
  SatConfig c;
  c.set("pooling", "final_state");
  c.set("curriculum.shape", "exponential");
  c.set("curriculum.decay_steps", "500");
  SatConfig d;
  d.apply(KeyValues::parse(c.to_text()));
  CHECK(d.to_text() == c.to_text());
  CHECK_THROWS_AS(c.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("dropout", "lots"), ConfigError);
  CHECK_THROWS_AS(c.set("pooling", "max"), ConfigError);
  SatConfig bad;
  bad.alpha = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = SatConfig{};
  bad.curriculum.p_end = 0.9;
  bad.curriculum.p_start = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(KeyValues::parse("a = 1\nbroken line\n"), ParseError);
  CHECK(KeyValues::parse("# comment\n\n a = b \n").entries.at(0) == std::pair<std::string, std::string>("a", "b"));
}

TEST_CASE("default hyperparameters") {
  const SatConfig c;
  CHECK(c.word_emb_dim == 256);
  CHECK(c.lstm_hidden == 1024);
  CHECK(c.dropout == 0.4);
  CHECK(c.l2 == 1e-4);
  CHECK(c.weight_noise_std == 1e-3);
  CHECK(c.alpha == 0.01);
  CHECK(c.learning_rate == 1e-2);
}

TEST_CASE("vocabulary") {
  const auto ac = tiny();
  const Vocab v = Vocab::build(std::span(&ac, 1));
  CHECK(v.id("definitely-unknown") == Vocab::kUnk);
  CHECK(v.word(v.id("nausea")) == "nausea");
  CHECK(v.speaker_marker(Speaker::kDoctor) != v.speaker_marker(Speaker::kPatient));
  CHECK(v.word(v.speaker_marker(Speaker::kPatient)) == Vocab::marker_token(Speaker::kPatient));
  CHECK(Vocab::from_text(v.to_text()) == v);
  CHECK(v.size() == 4 + 8);
}

TEST_CASE("curriculum schedule") {
  for (auto shape : {CurriculumShape::kLinear, CurriculumShape::kExponential}) {
    CurriculumSchedule s{1.0, 0.1, 200, shape};
    CHECK(curriculum_p(0, s) == 1.0);
    double prev = 1.0;
    for (std::int64_t step = 0; step <= 400; ++step) {
      const double p = curriculum_p(step, s);
      CHECK(p <= prev);
      CHECK(p >= 0.1);
      prev = p;
    }
    CHECK(curriculum_p(200, s) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(curriculum_p(10'000, s) == doctest::Approx(0.1).epsilon(1e-15));
  }
  CurriculumSchedule lin{1.0, 0.0, 100, CurriculumShape::kLinear};
  CHECK(curriculum_p(50, lin) == doctest::Approx(0.5));
  CurriculumSchedule done{0.8, 0.2, 0, CurriculumShape::kLinear};
  CHECK(curriculum_p(0, done) == 0.8);
  CHECK(curriculum_p(1, done) == 0.2);
}

TEST_CASE("input units carry speaker markers and turn offsets") {
  const auto ac = tiny();
  const Vocab v = Vocab::build(std::span(&ac, 1));
  const auto whole = make_input_units(ac.conversation, v, 0);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].ids.size() == 4 + 3 + 5 + 1 + 1);
  CHECK(whole[0].ids[0] == v.speaker_marker(Speaker::kDoctor));
  CHECK(whole[0].position(1, 0) == 5);
  CHECK(whole[0].ids[static_cast<std::size_t>(whole[0].position(1, 4))] == v.id("nausea"));

  const auto pairs = make_input_units(ac.conversation, v, 3);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[1].first_turn == 3);
  CHECK(pairs[1].end_turn == 4);
}

TEST_CASE("SA-T units: BIO tags from labels, overlapping spans dropped") {
  auto ac = tiny();
  ac.annotations["a0"].push_back({1, 2, 4, "sym:gi:nausea", Status::kOther});  // overlaps the first span
  const Vocab v = Vocab::build(std::span(&ac, 1));
  const auto units = make_sat_units(ac.conversation, ac.annotations["a0"], v, tiny_ontology(), 0);
  REQUIRE(units.size() == 1);
  const SatUnit& u = units[0];
  CHECK(u.spans.size() == 3);
  CHECK(u.tags[5 + 1] == crf::kBegin);
  CHECK(u.tags[5 + 2] == crf::kInside);
  CHECK(u.tags[5 + 3] == crf::kOutside);
  CHECK(u.spans[0].symptom == 0);
  CHECK(u.spans[2].status == static_cast<int>(Status::kNotExperienced));

  auto bad = tiny();
  bad.annotations["a0"][0].symptom = "sym:nope";
  CHECK_THROWS_AS(make_sat_units(bad.conversation, bad.annotations["a0"], v, tiny_ontology(), 0), Error);
}

TEST_CASE("span matching prefers the largest overlap") {
  const std::vector<crf::Span> pred{{0, 2}, {3, 6}, {10, 11}};
  const std::vector<GoldSpan> gold{{1, 4, 0, 0}, {4, 7, 1, 1}};
  // (3,6) overlaps gold 1 by 2 tokens and gold 0 by 1; it takes gold 1, then
  // (0,2) takes gold 0.
  CHECK(match_spans(pred, gold) == std::vector<int>{0, 1, -1});
  // Ties go to the earlier predicted span.
  const std::vector<crf::Span> tie{{0, 2}, {2, 4}};
  const std::vector<GoldSpan> one{{1, 3, 0, 0}};
  CHECK(match_spans(tie, one) == std::vector<int>{0, -1});
}

TEST_CASE("span pooling") {
  const auto ac = tiny();
  const Vocab v = Vocab::build(std::span(&ac, 1));
  const std::vector<int> ids{4, 5, 6, 7, 8};
  for (auto pooling : {Pooling::kMean, Pooling::kSum, Pooling::kFinalState}) {
    SatConfig c = small_config();
    c.pooling = pooling;
    SatModel m(c, v, tiny_ontology(), 3);
    nn::Graph g;
    const TrunkOutput enc = m.encode(g, ids);
    const nn::Matrix pooled = m.pool_span(enc, 1, 4).value();
    const nn::Matrix& f = enc.features.value();
    const nn::Matrix& h = enc.hidden.value();
    nn::Matrix want;
    if (pooling == Pooling::kMean) want = f.middleRows(1, 3).colwise().mean();
    if (pooling == Pooling::kSum) want = f.middleRows(1, 3).colwise().sum();
    if (pooling == Pooling::kFinalState) {
      want.resize(1, h.cols());
      want << h.block(3, 0, 1, 6), h.block(1, 6, 1, 6);
    }
    CHECK((pooled - want).norm() < 1e-12);
    CHECK_THROWS_AS(m.pool_span(enc, 3, 3), Error);
    CHECK_THROWS_AS(m.pool_span(enc, 2, 6), Error);
  }
}

TEST_CASE("class tag space and orphan inside tags") {
  CHECK(ClassTagSpace{4}.size() == 9);
  CHECK(ClassTagSpace::class_of(ClassTagSpace::inside_tag(3)) == 3);
  CHECK(ClassTagSpace::is_begin(ClassTagSpace::begin_tag(2)));
  const std::vector<int> tags{0, ClassTagSpace::inside_tag(1), ClassTagSpace::inside_tag(1),
                              ClassTagSpace::inside_tag(2), ClassTagSpace::begin_tag(0), 0};
  const auto spans = class_tags_to_spans(tags);
  REQUIRE(spans.size() == 3);
  CHECK(spans[0].span == crf::Span{1, 3});
  CHECK(spans[0].cls == 1);
  CHECK(spans[1].span == crf::Span{3, 4});
  CHECK(spans[1].cls == 2);
  CHECK(spans[2].span == crf::Span{4, 5});
}

TEST_CASE("training reduces the loss and is reproducible") {
  const corpus::CorpusSplits s = corpus::generate_splits(desk_corpus(8), 4);
  auto run = [&] {
    SatModel m(small_config(), Vocab::build(s.train), s.ontology, 9);
    TrainOptions opt;
    opt.epochs = 6;
    opt.batch_size = 2;
    opt.adam.learning_rate = 0.01;
    opt.weight_noise_std = 1e-3;
    opt.use_curriculum = true;
    opt.curriculum = {1.0, 0.1, 12, CurriculumShape::kLinear};
    opt.seed = 5;
    const TrainResult r = train_model(m, s.train, s.dev, opt);
    return std::make_pair(format_train_log(r), m.to_checkpoint());
  };
  const auto [log1, ck1] = run();
  const auto [log2, ck2] = run();
  CHECK(log1 == log2);
  REQUIRE(ck1.tensors.size() == ck2.tensors.size());
  for (std::size_t i = 0; i < ck1.tensors.size(); ++i) CHECK(ck1.tensors[i].data == ck2.tensors[i].data);

  SatModel m(small_config(), Vocab::build(s.train), s.ontology, 9);
  TrainOptions opt;
  opt.epochs = 8;
  opt.batch_size = 2;
  opt.adam.learning_rate = 0.01;
  const TrainResult r = train_model(m, s.train, {}, opt);
  CHECK(r.log.back().mean_loss < r.log.front().mean_loss);
  CHECK(r.best_epoch == 7);
  CHECK(r.log.back().dev_f1 == -1);
}

TEST_CASE("a non-finite loss aborts training with the step and unit") {
  const corpus::CorpusSplits s = corpus::generate_splits(desk_corpus(4), 4);
  SatModel m(small_config(), Vocab::build(s.train), s.ontology, 1);
  m.parameters().at("head.st.b").value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainOptions opt;
  opt.epochs = 1;
  try {
    train_model(m, s.train, {}, opt);
    FAIL("no exception");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step") != std::string::npos);
    CHECK(msg.find("train-") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip reproduces inference for every tagging model") {
  const corpus::CorpusSplits s = corpus::generate_splits(desk_corpus(6), 2);
  const Vocab v = Vocab::build(s.train);
  std::vector<std::unique_ptr<TrainableModel>> models;
  models.push_back(std::make_unique<SatModel>(small_config(), v, s.ontology, 1));
  models.push_back(std::make_unique<CrossProductBaseline>(small_config(), v, s.ontology, 1));
  models.push_back(std::make_unique<BodySystemBaseline>(small_config(), v, s.ontology, 1));
  for (auto& m : models) {
    TrainOptions opt;
    opt.epochs = 2;
    train_model(*m, s.train, {}, opt);
    const auto loaded = load_model(m->to_checkpoint());
    CHECK(loaded->model_type() == m->model_type());
    CHECK(predict_corpus(*loaded, s.test) == predict_corpus(*m, s.test));
  }
}

TEST_CASE("body-system baseline predicts in the projected key space") {
  const corpus::CorpusSplits s = corpus::generate_splits(desk_corpus(6), 3);
  BodySystemBaseline m(small_config(), Vocab::build(s.train), s.ontology, 1);
  CHECK(m.projection_ontology() != nullptr);
  CHECK(m.tag_space_size() == 2 * s.ontology.system_count() * 3 + 1);
  TrainOptions opt;
  opt.epochs = 3;
  train_model(m, s.train, {}, opt);
  for (const auto& [id, set] : predict_corpus(m, s.test)) {
    for (const auto& [key, count] : set) CHECK(key.symptom.rfind("sym:", 0) == 0);
    for (const auto& [key, count] : set) CHECK(std::count(key.symptom.begin(), key.symptom.end(), ':') == 1);
  }
}

TEST_CASE("load_encoder copies only the encoder tensors") {
  const auto ac = tiny();
  const Vocab v = Vocab::build(std::span(&ac, 1));
  SatModel a(small_config(), v, tiny_ontology(), 1);
  SatModel b(small_config(), v, tiny_ontology(), 2);
  const nn::Checkpoint ck = a.to_checkpoint();
  b.load_encoder(ck);
  CHECK(b.parameters().at("enc.emb").value == a.parameters().at("enc.emb").value);
  CHECK(b.parameters().at("enc.lstm0.fw.Wx").value == a.parameters().at("enc.lstm0.fw.Wx").value);
  CHECK(b.parameters().at("head.sx.W").value != a.parameters().at("head.sx.W").value);

  SatConfig wide = small_config();
  wide.lstm_hidden = 7;
  SatModel c(wide, v, tiny_ontology(), 3);
  CHECK_THROWS_AS(c.load_encoder(ck), ShapeError);
}
