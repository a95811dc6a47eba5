#include <sxtract/cli/verify.hpp>

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/error.hpp>
#include <sxtract/metrics/agreement.hpp>
#include <sxtract/metrics/metrics.hpp>
#include <sxtract/metrics/report.hpp>
#include <sxtract/nn/lstm.hpp>
#include <sxtract/nn/ops.hpp>
#include <sxtract/sat/baseline.hpp>
#include <sxtract/sat/sat_model.hpp>
#include <sxtract/seq2seq/seq2seq_model.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

namespace sxtract::cli {

namespace {

using nn::GradCheckOptions;
using nn::GradCheckReport;
using nn::Graph;
using nn::Index;
using nn::Parameter;
using nn::ParameterSet;
using nn::Value;

constexpr std::size_t kMaxDetailLines = 8;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void note_failure(SuiteResult& r, const std::string& line) {
  r.passed = false;
  if (std::count(r.detail.begin(), r.detail.end(), '\n') < static_cast<long>(kMaxDetailLines)) {
    r.detail += line + "\n";
  }
}

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

CrfImpl library_crf() {
  CrfImpl impl;
  impl.log_partition = [](const Matrix& em, const Matrix& tr) {
    Graph g;
    return crf::log_partition_from_emissions(g.constant(em), g.constant(tr)).scalar();
  };
  impl.viterbi = [](const Matrix& em, const Matrix& tr) { return crf::viterbi_from_emissions(em, tr); };
  return impl;
}

Scalar brute_path_score(const Matrix& em, const Matrix& tr, const std::vector<int>& tags) {
  const auto k = static_cast<int>(em.cols());
  Scalar s = tr(k, tags.front()) + tr(tags.back(), k + 1);
  for (std::size_t i = 0; i < tags.size(); ++i) {
    s += em(static_cast<Index>(i), tags[i]);
    if (i > 0) s += tr(tags[i - 1], tags[i]);
  }
  return s;
}

BruteForceCrf brute_force_crf(const Matrix& em, const Matrix& tr) {
  const auto len = static_cast<std::size_t>(em.rows());
  const auto k = static_cast<int>(em.cols());
  std::vector<int> tags(len, 0);
  std::vector<Scalar> scores;
  BruteForceCrf out;
  out.best_score = -std::numeric_limits<Scalar>::infinity();
  while (true) {
    const Scalar s = brute_path_score(em, tr, tags);
    scores.push_back(s);
    if (s > out.best_score) {
      out.best_score = s;
      out.best_tags = tags;
    }
    std::size_t i = len;
    while (i > 0 && tags[i - 1] == k - 1) tags[--i] = 0;
    if (i == 0) break;
    ++tags[i - 1];
  }
  const Scalar m = out.best_score;
  Scalar z = 0;
  for (Scalar s : scores) z += std::exp(s - m);
  out.log_partition = m + std::log(z);
  return out;
}

namespace {

struct CrfDraw {
  Matrix emissions;
  Matrix transitions;
};

CrfDraw draw_crf(std::mt19937_64& rng, int max_len) {
  std::uniform_int_distribution<int> len(1, max_len);
  CrfDraw d;
  d.emissions = random_matrix(len(rng), crf::kSpanTagCount, rng, 2.0);
  d.transitions = random_matrix(crf::kSpanTagCount + 2, crf::kSpanTagCount + 2, rng, 2.0);
  return d;
}

}  // namespace

SuiteResult verify_crf_partition(const VerifyOptions& options) {
  Timer timer;
  SuiteResult r{"crf_enumeration", true, 0, {}, 0};
  std::mt19937_64 rng(options.seed);
  for (int draw = 0; draw < options.crf_draws; ++draw) {
    const CrfDraw d = draw_crf(rng, options.crf_max_len);
    const BruteForceCrf oracle = brute_force_crf(d.emissions, d.transitions);
    const Scalar got = options.crf.log_partition(d.emissions, d.transitions);
    ++r.checks;
    if (!(std::abs(got - oracle.log_partition) <= 1e-6)) {
      note_failure(r, "draw " + std::to_string(draw) + " (T=" + std::to_string(d.emissions.rows()) +
                          "): log Z " + metrics::format_double(got) + " vs enumeration " +
                          metrics::format_double(oracle.log_partition));
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult verify_crf_viterbi(const VerifyOptions& options) {
  Timer timer;
  SuiteResult r{"viterbi_brute_force", true, 0, {}, 0};
  std::mt19937_64 rng(options.seed + 1);
  for (int draw = 0; draw < options.crf_draws; ++draw) {
    const CrfDraw d = draw_crf(rng, options.crf_max_len);
    const BruteForceCrf oracle = brute_force_crf(d.emissions, d.transitions);
    const crf::ViterbiResult got = options.crf.viterbi(d.emissions, d.transitions);
    ++r.checks;
    const std::string where = "draw " + std::to_string(draw) + ": ";
    if (static_cast<Index>(got.tags.size()) != d.emissions.rows()) {
      note_failure(r, where + "decoded " + std::to_string(got.tags.size()) + " tags for " +
                          std::to_string(d.emissions.rows()) + " positions");
      continue;
    }
    if (!(std::abs(got.score - oracle.best_score) <= 1e-9)) {
      note_failure(r, where + "score " + metrics::format_double(got.score) + " vs max " +
                          metrics::format_double(oracle.best_score));
    }
    const Scalar rescored = brute_path_score(d.emissions, d.transitions, got.tags);
    if (!(std::abs(rescored - got.score) <= 1e-9)) {
      note_failure(r, where + "decoded path rescores to " + metrics::format_double(rescored) + ", reported " +
                          metrics::format_double(got.score));
    }
  }
  r.seconds = timer.seconds();
  return r;
}

namespace {

/// Reduces any value to a scalar through fixed random weights so every
/// output element carries a distinct gradient.
Value readout(const Value& v, std::mt19937_64& rng) {
  Graph& g = v.graph();
  return nn::sum(nn::mul(v, g.constant(random_matrix(v.rows(), v.cols(), rng))));
}

/// Entries in +-[0.2, 1.2] keep relu away from its kink.
Matrix off_zero(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.2, 1.2);
  std::bernoulli_distribution sign(0.5);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = sign(rng) ? mag(rng) : -mag(rng);
  return m;
}

using Builder = std::function<Value(Graph&, std::vector<Value>&, std::mt19937_64&)>;

/// Parameters of the given shapes, a loss built from them, checked in `mode`.
GradCase op_case(std::string name, std::vector<std::pair<Index, Index>> shapes, Builder build,
                 nn::Mode mode = nn::Mode::kInference, bool avoid_zero = false) {
  return {name, [shapes, build, mode, avoid_zero](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            ParameterSet ps;
            for (std::size_t i = 0; i < shapes.size(); ++i) {
              const auto [rows, cols] = shapes[i];
              ps.add("x" + std::to_string(i), avoid_zero ? off_zero(rows, cols, rng) : random_matrix(rows, cols, rng));
            }
            const std::uint64_t readout_seed = rng();
            auto loss = [&](Graph& g) {
              std::vector<Value> xs;
              for (std::size_t i = 0; i < ps.size(); ++i) xs.push_back(g.param(ps[i]));
              std::mt19937_64 r(readout_seed);
              return build(g, xs, r);
            };
            GradCheckOptions opt;
            opt.mode = mode;
            opt.graph_seed = seed ^ 0x5eedULL;
            opt.sample_seed = seed;
            const auto ptrs = ps.pointers();
            return nn::grad_check(loss, ptrs, opt);
          }};
}

Builder unary(Value (*op)(const Value&)) {
  return [op](Graph&, std::vector<Value>& x, std::mt19937_64& r) { return readout(op(x[0]), r); };
}

Builder binary(Value (*op)(const Value&, const Value&)) {
  return [op](Graph&, std::vector<Value>& x, std::mt19937_64& r) { return readout(op(x[0], x[1]), r); };
}

// A tiny annotated conversation for the model-level checks.
corpus::Ontology tiny_ontology() {
  corpus::Ontology o;
  o.add("sym:msk:pain", "msk");
  o.add("sym:msk:swelling", "msk");
  o.add("sym:gi:nausea", "gi");
  o.add("sym:resp:cough", "resp");
  return o;
}

corpus::AnnotatedConversation tiny_conversation() {
  using corpus::Speaker;
  using corpus::Status;
  corpus::AnnotatedConversation ac;
  ac.conversation.id = "fixture";
  ac.conversation.turns = {
      {Speaker::kDoctor, {"any", "back", "pain", "lately"}},
      {Speaker::kPatient, {"yes", "my", "back", "pain", "is", "bad"}},
      {Speaker::kDoctor, {"nausea", "or", "cough"}},
      {Speaker::kPatient, {"no", "nausea", "but", "some", "swelling"}},
      {Speaker::kDoctor, {"ok"}},
  };
  ac.annotations["a0"] = {
      {1, 2, 4, "sym:msk:pain", Status::kExperienced},
      {3, 1, 2, "sym:gi:nausea", Status::kNotExperienced},
      {3, 4, 5, "sym:msk:swelling", Status::kOther},
  };
  return ac;
}

sat::SatConfig tiny_sat_config(sat::Pooling pooling) {
  sat::SatConfig c;
  c.word_emb_dim = 4;
  c.lstm_hidden = 3;
  c.ff_dim = 4;
  c.dropout = 0.3;
  c.alpha = 0.7;
  c.pooling = pooling;
  c.input_turns = 0;
  return c;
}

/// Loss of unit 0 in training mode with a fixed graph seed, so dropout masks
/// repeat across the finite-difference evaluations.
GradCheckReport check_model(sat::TrainableModel& model, bool coin, std::uint64_t seed) {
  const auto ac = tiny_conversation();
  model.prepare_training(std::span(&ac, 1));
  auto loss = [&](Graph& g) { return model.unit_loss(g, 0, coin); };
  GradCheckOptions opt;
  opt.mode = nn::Mode::kTraining;
  opt.graph_seed = seed ^ 0xd20bULL;
  opt.sample_seed = seed;
  opt.coords_per_param = 6;
  const auto ptrs = model.parameters().pointers();
  return nn::grad_check(loss, ptrs, opt);
}

GradCase sat_case(std::string name, sat::Pooling pooling, bool coin) {
  return {name, [pooling, coin](std::uint64_t seed) {
            const auto ac = tiny_conversation();
            sat::SatModel model(tiny_sat_config(pooling), sat::Vocab::build(std::span(&ac, 1)), tiny_ontology(), seed);
            return check_model(model, coin, seed);
          }};
}

}  // namespace

std::vector<GradCase> gradient_cases() {
  using nn::Mode;
  std::vector<GradCase> cases;
  cases.push_back(op_case("matmul", {{3, 4}, {4, 2}}, binary(nn::matmul)));
  cases.push_back(op_case("add", {{3, 4}, {3, 4}}, binary(nn::add)));
  cases.push_back(op_case("sub", {{3, 4}, {3, 4}}, binary(nn::sub)));
  cases.push_back(op_case("mul", {{3, 4}, {3, 4}}, binary(nn::mul)));
  cases.push_back(op_case("scale", {{3, 4}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    return readout(nn::scale(x[0], -1.7), r);
  }));
  cases.push_back(op_case("add_scalar", {{3, 4}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    return readout(nn::add_scalar(x[0], 0.3), r);
  }));
  cases.push_back(op_case("add_row", {{3, 4}, {1, 4}}, binary(nn::add_row)));
  cases.push_back(op_case("add_col", {{3, 4}, {3, 1}}, binary(nn::add_col)));
  cases.push_back(op_case("neg", {{3, 4}}, unary(nn::neg)));
  cases.push_back(op_case("tanh", {{3, 4}}, unary(nn::tanh)));
  cases.push_back(op_case("sigmoid", {{3, 4}}, unary(nn::sigmoid)));
  cases.push_back(op_case("relu", {{3, 4}}, unary(nn::relu), Mode::kInference, true));
  cases.push_back(op_case("concat_cols", {{3, 2}, {3, 3}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    return readout(nn::concat_cols({x[0], x[1], x[0]}), r);
  }));
  cases.push_back(op_case("concat_rows", {{2, 4}, {3, 4}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    return readout(nn::concat_rows({x[1], x[0]}), r);
  }));
  cases.push_back(op_case("slice", {{4, 5}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    return readout(nn::slice(x[0], 1, 2, 1, 3), r);
  }));
  cases.push_back(op_case("transpose", {{3, 4}}, unary(nn::transpose)));
  cases.push_back(op_case("softmax", {{3, 5}}, unary(nn::softmax)));
  cases.push_back(op_case("log_softmax", {{3, 5}}, unary(nn::log_softmax)));
  cases.push_back(op_case("logsumexp_rows", {{3, 5}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    return readout(nn::logsumexp(x[0], 0), r);
  }));
  cases.push_back(op_case("logsumexp_cols", {{3, 5}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    return readout(nn::logsumexp(x[0], 1), r);
  }));
  cases.push_back(op_case("logsumexp_all", {{3, 5}}, unary(nn::logsumexp_all)));
  cases.push_back(op_case("gather_rows", {{6, 3}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    const std::vector<int> ids{0, 2, 2, 5};
    return readout(nn::gather_rows(x[0], ids), r);
  }));
  cases.push_back(op_case(
      "dropout", {{4, 5}},
      [](Graph&, std::vector<Value>& x, std::mt19937_64& r) { return readout(nn::dropout(x[0], 0.3), r); },
      Mode::kTraining));
  cases.push_back(op_case("sum", {{3, 4}}, [](Graph&, std::vector<Value>& x, std::mt19937_64&) {
    return nn::sum(nn::mul(x[0], x[0]));
  }));
  cases.push_back(op_case("mean", {{3, 4}}, [](Graph&, std::vector<Value>& x, std::mt19937_64&) {
    return nn::mean(nn::tanh(x[0]));
  }));
  cases.push_back(op_case("sum_rows", {{3, 4}}, unary(nn::sum_rows)));
  cases.push_back(op_case("mean_rows", {{3, 4}}, unary(nn::mean_rows)));
  cases.push_back(op_case("pick", {{3, 4}}, [](Graph&, std::vector<Value>& x, std::mt19937_64&) {
    return nn::pick(nn::tanh(x[0]), 2, 1);
  }));
  cases.push_back(op_case("mask_fill", {{3, 4}}, [](Graph&, std::vector<Value>& x, std::mt19937_64& r) {
    nn::Mask m = nn::Mask::Constant(3, 4, false);
    m(0, 1) = m(2, 3) = m(1, 0) = true;
    return readout(nn::softmax(nn::mask_fill(x[0], m, -50.0)), r);
  }));
  cases.push_back(op_case("lstm_gates", {{1, 12}, {1, 3}}, binary(nn::lstm_gates)));
  cases.push_back(op_case("cross_entropy", {{1, 6}}, [](Graph&, std::vector<Value>& x, std::mt19937_64&) {
    return nn::cross_entropy(x[0], 3);
  }));

  cases.push_back({"bilstm_encode", [](std::uint64_t seed) {
                     std::mt19937_64 rng(seed);
                     ParameterSet ps;
                     Parameter& in = ps.add("in", random_matrix(5, 3, rng));
                     const nn::BiLstmParams lstm = nn::BiLstmParams::create(ps, "lstm", 3, 4, rng);
                     const std::uint64_t rs = rng();
                     auto loss = [&](Graph& g) {
                       std::mt19937_64 r(rs);
                       return readout(nn::bilstm_encode(g.param(in), lstm), r);
                     };
                     GradCheckOptions opt;
                     opt.sample_seed = seed;
                     const auto ptrs = ps.pointers();
                     return nn::grad_check(loss, ptrs, opt);
                   }});

  for (int k : {3, 5}) {
    cases.push_back({"crf_nll_k" + std::to_string(k), [k](std::uint64_t seed) {
                       std::mt19937_64 rng(seed);
                       ParameterSet ps;
                       Parameter& h = ps.add("h", random_matrix(6, 4, rng));
                       const crf::CrfParams params = crf::CrfParams::create(ps, "crf", k, 4, rng);
                       std::uniform_int_distribution<int> tag(0, k - 1);
                       std::vector<int> gold(6);
                       for (int& t : gold) t = tag(rng);
                       auto loss = [&](Graph& g) { return crf::crf_nll(g.param(h), gold, params); };
                       GradCheckOptions opt;
                       opt.sample_seed = seed;
                       const auto ptrs = ps.pointers();
                       return nn::grad_check(loss, ptrs, opt);
                     }});
  }

  cases.push_back(sat_case("sat_loss_gold_spans", sat::Pooling::kMean, true));
  cases.push_back(sat_case("sat_loss_inferred_spans", sat::Pooling::kMean, false));
  cases.push_back(sat_case("sat_loss_sum_pooling", sat::Pooling::kSum, false));
  cases.push_back(sat_case("sat_loss_final_state", sat::Pooling::kFinalState, true));

  cases.push_back({"baseline_crossproduct_loss", [](std::uint64_t seed) {
                     const auto ac = tiny_conversation();
                     sat::CrossProductBaseline model(tiny_sat_config(sat::Pooling::kMean),
                                                     sat::Vocab::build(std::span(&ac, 1)), tiny_ontology(), seed);
                     return check_model(model, true, seed);
                   }});
  cases.push_back({"baseline_bodysystem_loss", [](std::uint64_t seed) {
                     const auto ac = tiny_conversation();
                     sat::BodySystemBaseline model(tiny_sat_config(sat::Pooling::kMean),
                                                   sat::Vocab::build(std::span(&ac, 1)), tiny_ontology(), seed);
                     return check_model(model, true, seed);
                   }});
  cases.push_back({"seq2seq_loss", [](std::uint64_t seed) {
                     const auto ac = tiny_conversation();
                     seq2seq::Seq2SeqConfig c;
                     c.word_emb_dim = 4;
                     c.lstm_hidden = 3;
                     c.attention_dim = 3;
                     c.dropout = 0.2;
                     c.window_k = 3;
                     seq2seq::Seq2SeqModel model(c, sat::Vocab::build(std::span(&ac, 1)), tiny_ontology(), seed);
                     return check_model(model, true, seed);
                   }});
  return cases;
}

SuiteResult verify_gradients(const VerifyOptions& options, const std::vector<GradCase>& cases) {
  Timer timer;
  SuiteResult r{"gradient_checks", true, 0, {}, 0};
  for (const GradCase& c : cases) {
    for (int s = 0; s < options.grad_seeds; ++s) {
      const std::uint64_t seed = options.seed * 1000003ULL + static_cast<std::uint64_t>(s);
      const GradCheckReport rep = c.run(seed);
      ++r.checks;
      if (!rep.passed() || rep.checked == 0) {
        std::string line = c.name + " seed " + std::to_string(s) + ": max rel error " + fmt(rep.max_rel_error);
        if (!rep.failures.empty()) {
          const auto& f = rep.failures.front();
          line += " at " + f.param + "(" + std::to_string(f.row) + "," + std::to_string(f.col) + ") analytic " +
                  fmt(f.analytic) + " numeric " + fmt(f.numeric);
        }
        note_failure(r, line);
      }
    }
  }
  r.seconds = timer.seconds();
  return r;
}

namespace {

using corpus::MentionKey;
using corpus::MentionSet;
using corpus::Status;

MentionSet mset(std::initializer_list<std::pair<MentionKey, int>> items) {
  MentionSet m;
  for (const auto& [k, c] : items) m.add(k, c);
  return m;
}

const MentionKey kPainExp{"pain", Status::kExperienced};
const MentionKey kPainNot{"pain", Status::kNotExperienced};
const MentionKey kNauseaOther{"nausea", Status::kOther};
const MentionKey kCoughNot{"cough", Status::kNotExperienced};

void expect_near(SuiteResult& r, const std::string& what, double got, double want, double tol = 1e-12) {
  ++r.checks;
  if (!(std::abs(got - want) <= tol)) {
    note_failure(r, what + ": got " + metrics::format_double(got) + ", expected " + metrics::format_double(want));
  }
}

void expect_true(SuiteResult& r, const std::string& what, bool ok) {
  ++r.checks;
  if (!ok) note_failure(r, what);
}

}  // namespace

SuiteResult verify_metric_fixtures(const VerifyOptions& options) {
  using metrics::View;
  using metrics::Weighting;
  Timer timer;
  SuiteResult r{"metric_fixtures", true, 0, {}, 0};

  {
    const auto p = metrics::unweighted_prf(mset({{kPainExp, 1}}), mset({{kPainExp, 1}}), View::kSxStatus);
    expect_near(r, "identical sets P", p.precision, 1);
    expect_near(r, "identical sets R", p.recall, 1);
  }
  {
    const auto p = metrics::unweighted_prf(mset({{kPainExp, 1}, {kNauseaOther, 1}}),
                                           mset({{kPainExp, 1}, {kCoughNot, 1}}), View::kSxStatus);
    expect_near(r, "half overlap P", p.precision, 0.5);
    expect_near(r, "half overlap R", p.recall, 0.5);
  }
  {
    const auto p = metrics::unweighted_prf(mset({{kPainExp, 1}}), mset({{kPainNot, 1}}), View::kSx);
    expect_near(r, "Sx view ignores status P", p.precision, 1);
    expect_near(r, "Sx view ignores status R", p.recall, 1);
  }
  {
    const auto p = metrics::weighted_prf(mset({{kPainExp, 1}, {kNauseaOther, 1}}),
                                         mset({{kPainExp, 2}, {kCoughNot, 1}}), View::kSxStatus);
    expect_near(r, "weighted P", p.precision, 0.5);
    expect_near(r, "weighted R", p.recall, 2.0 / 3.0);
    const auto d = metrics::weighted_prf(mset({{kPainExp, 2}, {kNauseaOther, 2}}),
                                         mset({{kPainExp, 4}, {kCoughNot, 2}}), View::kSxStatus);
    expect_near(r, "weighted P, doubled counts", d.precision, 0.5);
    expect_near(r, "weighted R, doubled counts", d.recall, 2.0 / 3.0);
  }
  for (auto w : {Weighting::kUnweighted, Weighting::kWeighted}) {
    const std::string name(metrics::to_string(w));
    const auto both = metrics::prf({}, {}, w, View::kSxStatus);
    expect_near(r, name + " empty/empty P", both.precision, 1);
    expect_near(r, name + " empty/empty R", both.recall, 1);
    const auto no_pred = metrics::prf({}, mset({{kPainExp, 1}}), w, View::kSxStatus);
    expect_near(r, name + " empty prediction P", no_pred.precision, 0);
    expect_near(r, name + " empty prediction R", no_pred.recall, 0);
    const auto no_ref = metrics::prf(mset({{kPainExp, 1}}), {}, w, View::kSxStatus);
    expect_near(r, name + " empty reference P", no_ref.precision, 0);
    expect_near(r, name + " empty reference R", no_ref.recall, 0);
  }
  {
    // Two conversations scoring (1, 0.5) and (0.5, 1).
    metrics::Predictions preds{{"a", mset({{kPainExp, 1}})}, {"b", mset({{kPainExp, 1}, {kCoughNot, 1}})}};
    metrics::References refs;
    refs["a"].voted = mset({{kPainExp, 1}, {kNauseaOther, 1}});
    refs["b"].voted = mset({{kPainExp, 1}});
    const auto cell =
        metrics::evaluate_corpus(preds, refs, metrics::RefMode::kVoted, Weighting::kUnweighted, View::kSxStatus);
    expect_near(r, "corpus P", cell.precision, 0.75);
    expect_near(r, "corpus R", cell.recall, 0.75);
    expect_near(r, "corpus F1", cell.f1, 0.75);
  }
  {
    corpus::Ontology o;
    o.add("sym:musculo-skeletal:pain", "musculo-skeletal");
    o.add("sym:musculo-skeletal:swelling", "musculo-skeletal");
    const auto projected = metrics::project_to_body_system(
        mset({{{"sym:musculo-skeletal:pain", Status::kExperienced}, 1},
              {{"sym:musculo-skeletal:swelling", Status::kExperienced}, 2}}),
        o);
    expect_true(r, "projection collapses to {(sym:musculo-skeletal, experienced): 3}",
                projected == mset({{{"sym:musculo-skeletal", Status::kExperienced}, 3}}));
  }

  // Weighted equals unweighted when every count is 1.
  std::mt19937_64 rng(options.seed + 7);
  std::uniform_int_distribution<int> size(0, 6), symptom(0, 7), status(0, 2);
  auto random_set = [&] {
    MentionSet m;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      const MentionKey k{"s" + std::to_string(symptom(rng)), static_cast<Status>(status(rng))};
      if (!m.contains(k)) m.add(k);
    }
    return m;
  };
  int mismatches = 0;
  for (int i = 0; i < options.metric_pairs; ++i) {
    const MentionSet a = random_set(), b = random_set();
    // Sx collapses statuses and can raise counts above 1, so the identity is
    // stated for the Sx+Status view.
    const auto u = metrics::unweighted_prf(a, b, View::kSxStatus);
    const auto w = metrics::weighted_prf(a, b, View::kSxStatus);
    if (u.precision != w.precision || u.recall != w.recall) ++mismatches;
  }
  expect_true(r, "weighted == unweighted with unit counts: " + std::to_string(mismatches) + " mismatches",
              mismatches == 0);

  {
    const std::vector<MentionKey> two{kPainExp, kCoughNot};
    expect_near(r, "kappa identical", metrics::cohen_kappa(mset({{kPainExp, 1}}), mset({{kPainExp, 1}}), two), 1);
    expect_near(r, "kappa complete disagreement",
                metrics::cohen_kappa(mset({{kPainExp, 1}}), mset({{kCoughNot, 1}}), two), -1);
    std::vector<MentionKey> universe;
    MentionSet a, b;
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 10000; ++i) {
      universe.push_back({"k" + std::to_string(i), Status::kExperienced});
      if (coin(rng)) a.add(universe.back());
      if (coin(rng)) b.add(universe.back());
    }
    expect_near(r, "kappa independent raters", metrics::cohen_kappa(a, b, universe), 0, 0.05);
  }
  {
    std::vector<double> a(500, 0.0), b(500, 1.0);
    const auto sep = metrics::mann_whitney(a, b);
    expect_true(r, "Mann-Whitney complete separation p = " + fmt(sep.p_two_sided), sep.p_two_sided < 1e-10);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> x(37), y(23);
    for (double& v : x) v = std::round(u(rng) * 10) / 10;
    for (double& v : y) v = std::round(u(rng) * 10) / 10;
    expect_near(r, "U(a,b) + U(b,a)", metrics::mann_whitney(x, y).u + metrics::mann_whitney(y, x).u, 37.0 * 23.0,
                1e-9);
    expect_true(r, "identical samples p > 0.9", metrics::mann_whitney(x, x).p_two_sided > 0.9);
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteResult verify_decode_grammar(const VerifyOptions& options) {
  Timer timer;
  SuiteResult r{"decode_grammar", true, 0, {}, 0};
  const auto ac = tiny_conversation();
  const corpus::Ontology ontology = tiny_ontology();
  const sat::Vocab vocab = sat::Vocab::build(std::span(&ac, 1));
  std::mt19937_64 rng(options.seed + 11);
  std::uniform_int_distribution<int> word(0, vocab.size() - 1), len(1, 12);
  for (int m = 0; m < options.decode_models; ++m) {
    seq2seq::Seq2SeqConfig c;
    c.word_emb_dim = 6;
    c.lstm_hidden = 5;
    c.attention_dim = 4;
    const std::uint64_t seed = rng();
    seq2seq::Seq2SeqModel model(c, vocab, ontology, seed);
    // Sharpen the random output layer so decodes vary between models.
    std::mt19937_64 prng(seed);
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      Parameter& p = model.parameters()[i];
      p.value += random_matrix(p.value.rows(), p.value.cols(), prng, 1.5);
    }
    std::vector<int> input(static_cast<std::size_t>(len(rng)));
    for (int& t : input) t = word(rng);
    const std::string where = "model " + std::to_string(m) + ": ";
    const seq2seq::Decoded greedy = model.greedy_decode(input, c.max_decode_len);
    for (int width = 1; width <= 4; ++width) {
      const seq2seq::Decoded d = model.beam_decode(input, width, c.max_decode_len);
      ++r.checks;
      bool ok = !d.tokens.empty() && d.tokens.back() == model.targets().eos() &&
                static_cast<int>(d.tokens.size()) <= c.max_decode_len;
      for (std::size_t pos = 0; ok && pos < d.tokens.size(); ++pos) {
        ok = model.targets().allowed(static_cast<int>(pos), d.tokens[pos]);
      }
      if (!ok) {
        note_failure(r, where + "beam width " + std::to_string(width) + " emitted an ungrammatical sequence");
        continue;
      }
      try {
        model.targets().decode(d.tokens, ontology);
      } catch (const Error& e) {
        note_failure(r, where + "decode failed: " + e.what());
      }
      if (width == 1 && d.tokens != greedy.tokens) {
        note_failure(r, where + "beam width 1 differs from greedy decoding");
      }
    }
  }
  r.seconds = timer.seconds();
  return r;
}

std::vector<SuiteResult> run_verify(const VerifyOptions& options) {
  return {verify_crf_partition(options), verify_crf_viterbi(options), verify_gradients(options),
          verify_metric_fixtures(options), verify_decode_grammar(options)};
}

std::string format_verify(const std::vector<SuiteResult>& results) {
  std::ostringstream out;
  for (const auto& r : results) {
    char line[160];
    std::snprintf(line, sizeof line, "%s  %-22s %6zu checks  %7.2fs\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                  r.checks, r.seconds);
    out << line;
    std::istringstream detail(r.detail);
    for (std::string l; std::getline(detail, l);) out << "      " << l << "\n";
  }
  return out.str();
}

}  // namespace sxtract::cli
