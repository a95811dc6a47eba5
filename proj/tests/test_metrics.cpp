#include <sxtract/corpus/generator.hpp>
#include <sxtract/error.hpp>
#include <sxtract/metrics/agreement.hpp>
#include <sxtract/metrics/metrics.hpp>
#include <sxtract/metrics/report.hpp>

#include <doctest.h>

#include <random>

using namespace sxtract;
using namespace sxtract::metrics;
using corpus::Status;

namespace {

const MentionKey kPainExp{"pain", Status::kExperienced};
const MentionKey kPainNot{"pain", Status::kNotExperienced};
const MentionKey kNauseaOther{"nausea", Status::kOther};
const MentionKey kCoughNot{"cough", Status::kNotExperienced};

MentionSet mset(std::initializer_list<std::pair<MentionKey, int>> items) {
  MentionSet m;
  for (const auto& [k, c] : items) m.add(k, c);
  return m;
}

MentionSet random_set(std::mt19937_64& rng, const corpus::Ontology* o = nullptr, int max_count = 3) {
  std::uniform_int_distribution<int> size(0, 5), sym(0, o ? o->size() - 1 : 6), st(0, 2), cnt(1, max_count);
  MentionSet m;
  const int n = size(rng);
  for (int i = 0; i < n; ++i) {
    const int s = sym(rng);
    m.add({o ? o->symptom(s) : "s" + std::to_string(s), static_cast<Status>(st(rng))}, cnt(rng));
  }
  return m;
}

corpus::Ontology small_ontology() {
  corpus::Ontology o;
  o.add("sym:a:1", "a");
  o.add("sym:a:2", "a");
  o.add("sym:a:3", "a");
  o.add("sym:b:1", "b");
  o.add("sym:b:2", "b");
  o.add("sym:c:1", "c");
  return o;
}

}  // namespace

TEST_CASE("unweighted fixtures") {
  auto p = unweighted_prf(mset({{kPainExp, 1}}), mset({{kPainExp, 1}}), View::kSxStatus);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  p = unweighted_prf(mset({{kPainExp, 1}, {kNauseaOther, 1}}), mset({{kPainExp, 1}, {kCoughNot, 1}}),
                     View::kSxStatus);
  CHECK(p.precision == 0.5);
  CHECK(p.recall == 0.5);
  p = unweighted_prf(mset({{kPainExp, 1}}), mset({{kPainNot, 1}}), View::kSx);
  CHECK(p.precision == 1.0);
  CHECK(p.recall == 1.0);
  p = unweighted_prf(mset({{kPainExp, 1}}), mset({{kPainNot, 1}}), View::kSxStatus);
  CHECK(p.precision == 0.0);
  // Counts are ignored.
  p = unweighted_prf(mset({{kPainExp, 5}, {kNauseaOther, 1}}), mset({{kPainExp, 1}}), View::kSxStatus);
  CHECK(p.precision == 0.5);
}

TEST_CASE("weighted fixtures") {
  auto p = weighted_prf(mset({{kPainExp, 1}, {kNauseaOther, 1}}), mset({{kPainExp, 2}, {kCoughNot, 1}}),
                        View::kSxStatus);
  CHECK(p.precision == 0.5);
  CHECK(p.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  p = weighted_prf(mset({{kPainExp, 3}, {kNauseaOther, 1}}), mset({{kPainExp, 1}}), View::kSxStatus);
  CHECK(p.precision == 0.75);
  CHECK(p.recall == 1.0);
}

TEST_CASE("zero-denominator conventions") {
  for (auto w : {Weighting::kUnweighted, Weighting::kWeighted}) {
    auto p = prf({}, {}, w, View::kSxStatus);
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 1.0);
    p = prf({}, mset({{kPainExp, 1}}), w, View::kSxStatus);
    CHECK(p.precision == 0.0);
    CHECK(p.recall == 0.0);
    p = prf(mset({{kPainExp, 1}}), {}, w, View::kSxStatus);
    CHECK(p.precision == 0.0);
    CHECK(p.recall == 0.0);
  }
  CHECK(f1(0, 0) == 0.0);
  CHECK(f1(1, 1) == 1.0);
}

TEST_CASE("weighted equals unweighted with unit counts; scale invariance") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const MentionSet a = random_set(rng, nullptr, 1), b = random_set(rng, nullptr, 1);
    MentionSet ua, ub;
    for (const auto& [k, c] : a) ua.add(k);
    for (const auto& [k, c] : b) ub.add(k);
    const auto u = unweighted_prf(ua, ub, View::kSxStatus);
    const auto w = weighted_prf(ua, ub, View::kSxStatus);
    CHECK(u.precision == w.precision);
    CHECK(u.recall == w.recall);

    MentionSet a2, b2;
    for (const auto& [k, c] : a) a2.add(k, 2 * c);
    for (const auto& [k, c] : b) b2.add(k, 2 * c);
    const auto x = weighted_prf(a, b, View::kSxStatus), y = weighted_prf(a2, b2, View::kSxStatus);
    CHECK(x.precision == doctest::Approx(y.precision));
    CHECK(x.recall == doctest::Approx(y.recall));
  }
}

TEST_CASE("F1 of a set with itself is 1") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const MentionSet a = random_set(rng);
    for (auto w : {Weighting::kUnweighted, Weighting::kWeighted}) {
      const auto p = prf(a, a, w, View::kSxStatus);
      CHECK(f1(p.precision, p.recall) == 1.0);
    }
  }
}

TEST_CASE("corpus averaging then harmonic mean") {
  Predictions preds{{"a", mset({{kPainExp, 1}})}, {"b", mset({{kPainExp, 1}, {kCoughNot, 1}})}};
  References refs;
  refs["a"].voted = mset({{kPainExp, 1}, {kNauseaOther, 1}});
  refs["b"].voted = mset({{kPainExp, 1}});
  const MetricsCell cell = evaluate_corpus(preds, refs, RefMode::kVoted, Weighting::kUnweighted, View::kSxStatus);
  CHECK(cell.precision == 0.75);
  CHECK(cell.recall == 0.75);
  CHECK(cell.f1 == 0.75);
  REQUIRE(cell.per_conversation.size() == 2);
  CHECK(cell.per_conversation[0].precision == 1.0);
  CHECK(cell.per_conversation[0].recall == 0.5);

  Predictions missing{{"a", {}}};
  CHECK_THROWS_AS(evaluate_corpus(missing, refs, RefMode::kVoted, Weighting::kUnweighted, View::kSxStatus), Error);
}

TEST_CASE("evaluation does not depend on insertion order") {
  std::mt19937_64 rng(3);
  Predictions p1, p2;
  References r1, r2;
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("c" + std::to_string(i));
  std::map<std::string, std::pair<MentionSet, corpus::ReferenceSet>> data;
  for (const auto& id : ids) {
    corpus::ReferenceSet r;
    r.voted = random_set(rng);
    r.single = random_set(rng);
    r.annotators = {r.voted, r.single, random_set(rng)};
    data[id] = {random_set(rng), r};
  }
  for (const auto& id : ids) {
    p1[id] = data[id].first;
    r1[id] = data[id].second;
  }
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    r2[*it] = data[*it].second;
    p2[*it] = data[*it].first;
  }
  const auto a = evaluate_all(p1, r1), b = evaluate_all(p2, r2);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) CHECK(a.entries[i].cell.f1 == b.entries[i].cell.f1);
}

TEST_CASE("any mode credits a superset of voted mode") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const MentionSet pred = random_set(rng);
    std::vector<MentionSet> ann{random_set(rng), random_set(rng), random_set(rng)};
    const MentionSet voted = corpus::voted_reference(ann);
    for (auto w : {Weighting::kUnweighted, Weighting::kWeighted}) {
      for (auto v : {View::kSx, View::kSxStatus}) {
        const auto any = any_prf(pred, ann, voted, w, v);
        const auto vote = prf(pred, voted, w, v);
        CHECK(any.precision >= vote.precision);
        CHECK(any.recall == vote.recall);
      }
    }
  }
}

TEST_CASE("body-system projection") {
  corpus::Ontology o;
  o.add("sym:musculo-skeletal:pain", "musculo-skeletal");
  o.add("sym:musculo-skeletal:swelling", "musculo-skeletal");
  o.add("sym:eyes:blurred", "eyes");
  const MentionSet m = mset({{{"sym:musculo-skeletal:pain", Status::kExperienced}, 1},
                             {{"sym:musculo-skeletal:swelling", Status::kExperienced}, 2},
                             {{"sym:eyes:blurred", Status::kOther}, 1}});
  const MentionSet p = project_to_body_system(m, o);
  CHECK(p == mset({{{"sym:musculo-skeletal", Status::kExperienced}, 3}, {{"sym:eyes", Status::kOther}, 1}}));
  CHECK_THROWS_AS(project_to_body_system(mset({{{"sym:nope", Status::kOther}, 1}}), o), Error);
}

TEST_CASE("projection never loses a match") {
  const corpus::Ontology o = small_ontology();
  std::mt19937_64 rng(5);
  // Prediction mass sitting on matched keys.
  auto matched = [](const MentionSet& a, const MentionSet& b) {
    int n = 0;
    for (const auto& [k, c] : a) n += b.contains(k) ? c : 0;
    return n;
  };
  for (int i = 0; i < 500; ++i) {
    const MentionSet a = random_set(rng, &o), b = random_set(rng, &o);
    const MentionSet pa = project_to_body_system(a, o), pb = project_to_body_system(b, o);
    // Every matched key maps to a matched projected key.
    for (const auto& [k, c] : a) {
      if (b.contains(k)) CHECK(pb.contains({body_system_key(o.body_system(k.symptom)), k.status}));
    }
    CHECK(matched(pa, pb) >= matched(a, b));
    CHECK(pa.total() == a.total());
  }
}

TEST_CASE("report cells stay in [0, 1] and F1 is the harmonic mean of the reported P and R") {
  std::mt19937_64 rng(6);
  Predictions preds;
  References refs;
  for (int i = 0; i < 30; ++i) {
    const std::string id = "c" + std::to_string(i);
    preds[id] = random_set(rng);
    std::vector<MentionSet> ann{random_set(rng), random_set(rng), random_set(rng)};
    refs[id].annotators = ann;
    refs[id].voted = corpus::voted_reference(ann);
    refs[id].single = ann[static_cast<std::size_t>(i % 3)];
  }
  const MetricsReport r = evaluate_all(preds, refs);
  CHECK(r.entries.size() == 12);
  CHECK(r.conversations == 30);
  for (const auto& e : r.entries) {
    CHECK(e.cell.precision >= 0.0);
    CHECK(e.cell.precision <= 1.0);
    CHECK(e.cell.recall >= 0.0);
    CHECK(e.cell.recall <= 1.0);
    CHECK(e.cell.f1 == doctest::Approx(f1(e.cell.precision, e.cell.recall)).epsilon(1e-15));
  }
  const std::string table = format_table({{"m", r}}, {42, 7, "test"});
  CHECK(table.find("F1 (Precision, Recall)") != std::string::npos);
  CHECK(table.find("seed=7") != std::string::npos);
  const std::string tsv = format_tsv({{"m", r}}, {42, 7, "test"});
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') >= 12);
}

TEST_CASE("Cohen's kappa") {
  const std::vector<MentionKey> two{kPainExp, kCoughNot};
  CHECK(cohen_kappa(mset({{kPainExp, 1}}), mset({{kPainExp, 1}}), two) == 1.0);
  CHECK(cohen_kappa(mset({{kPainExp, 1}}), mset({{kCoughNot, 1}}), two) == -1.0);
  CHECK(cohen_kappa({}, {}, two) == 1.0);
  CHECK_THROWS_AS(cohen_kappa({}, {}, std::vector<MentionKey>{}), Error);

  // Matches sklearn's cohen_kappa_score on the same presence vectors (0.4).
  const int x[] = {1, 0, 1, 1, 0, 0, 1, 0, 1, 1};
  const int y[] = {1, 1, 1, 0, 0, 0, 1, 0, 0, 1};
  std::vector<MentionKey> universe;
  MentionSet a, b;
  for (int i = 0; i < 10; ++i) {
    universe.push_back({"k" + std::to_string(i), Status::kExperienced});
    if (x[i]) a.add(universe.back());
    if (y[i]) b.add(universe.back());
  }
  CHECK(cohen_kappa(a, b, universe) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("corpus kappa rises as annotator disagreement falls") {
  corpus::GeneratorConfig c;
  c.conversations = 30;
  c.annotators = 3;
  c.disagreement_rate = 0.0;
  const corpus::SyntheticWorld w = corpus::make_world(c, 1);
  const auto clean = corpus::generate_conversations(w, c, 30, 3, 2, "x");
  c.disagreement_rate = 0.5;
  const auto noisy = corpus::generate_conversations(w, c, 30, 3, 2, "x");
  const auto k0 = corpus_kappa(clean, w.ontology), k1 = corpus_kappa(noisy, w.ontology);
  CHECK(k0.mean_kappa == 1.0);
  CHECK(k1.mean_kappa < k0.mean_kappa);
  CHECK(k0.pairs == 90);
}

TEST_CASE("Mann-Whitney") {
  const std::vector<double> a{1, 2, 3, 4, 5, 5.5, 2}, b{3, 4, 5, 6, 7, 8, 8, 9};
  const auto r = mann_whitney(a, b);
  // scipy.stats.mannwhitneyu(a, b, use_continuity=True, method="asymptotic")
  CHECK(r.u == 7.5);
  CHECK(r.p_two_sided == doctest::Approx(0.020074485544009122).epsilon(1e-9));
  CHECK(mann_whitney(a, b).u + mann_whitney(b, a).u == 56.0);
  CHECK(mann_whitney(b, a).p_two_sided == doctest::Approx(r.p_two_sided).epsilon(1e-12));

  const std::vector<double> zeros(500, 0.0), ones(500, 1.0);
  CHECK(mann_whitney(zeros, ones).p_two_sided < 1e-10);
  CHECK(mann_whitney(zeros, zeros).p_two_sided == 1.0);
  CHECK(mann_whitney(a, a).p_two_sided > 0.9);
  CHECK_THROWS_AS(mann_whitney(std::vector<double>{}, a), Error);
}
