#include <sxtract/error.hpp>
#include <sxtract/nn/adam.hpp>
#include <sxtract/nn/checkpoint.hpp>
#include <sxtract/nn/grad_check.hpp>
#include <sxtract/nn/lstm.hpp>
#include <sxtract/nn/ops.hpp>

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace sxtract;
using namespace sxtract::nn;

namespace {

Matrix mat(Index r, Index c, std::initializer_list<double> v) {
  Matrix m(r, c);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

Matrix randn(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("forward values of basic ops") {
  Graph g;
  const Value a = g.constant(mat(2, 2, {1, 2, 3, 4}));
  const Value b = g.constant(mat(2, 2, {5, 6, 7, 8}));
  CHECK(matmul(a, b).value() == mat(2, 2, {19, 22, 43, 50}));
  CHECK((a - b).value() == mat(2, 2, {-4, -4, -4, -4}));
  CHECK(transpose(a).value() == mat(2, 2, {1, 3, 2, 4}));
  CHECK(add_row(a, g.constant(mat(1, 2, {10, 20}))).value() == mat(2, 2, {11, 22, 13, 24}));
  CHECK(add_col(a, g.constant(mat(2, 1, {10, 20}))).value() == mat(2, 2, {11, 12, 23, 24}));
  CHECK(sum_rows(a).value() == mat(1, 2, {4, 6}));
  CHECK(mean(a).scalar() == 2.5);
  CHECK(slice(a, 1, 1, 0, 2).value() == mat(1, 2, {3, 4}));
  const std::vector<int> ids{1, 1, 0};
  CHECK(gather_rows(a, ids).value() == mat(3, 2, {3, 4, 3, 4, 1, 2}));
}

TEST_CASE("softmax rows sum to one and log-sum-exp survives large inputs") {
  Graph g;
  const Value x = g.constant(mat(2, 3, {1000, 1000, -5, 0.1, 0.2, 0.3}));
  const Matrix s = softmax(x).value();
  CHECK(s.row(0).sum() == doctest::Approx(1.0));
  CHECK(s.row(1).sum() == doctest::Approx(1.0));
  const Matrix lse = logsumexp(x, 1).value();
  CHECK(std::isfinite(lse(0, 0)));
  CHECK(lse(0, 0) == doctest::Approx(1000 + std::log(2.0 + std::exp(-1005.0))));
  CHECK(logsumexp_all(g.constant(mat(1, 2, {-1e4, -1e4}))).scalar() == doctest::Approx(-1e4 + std::log(2.0)));
  const Matrix ls = log_softmax(x).value();
  CHECK(ls(0, 0) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("backward of x*x summed is 2x") {
  ParameterSet ps;
  Parameter& p = ps.add("x", mat(1, 3, {1, -2, 0.5}));
  ps.zero_grad();
  Graph g;
  const Value x = g.param(p);
  g.backward(sum(mul(x, x)));
  CHECK(p.grad == mat(1, 3, {2, -4, 1}));
}

TEST_CASE("gradients accumulate across graphs until zeroed") {
  ParameterSet ps;
  Parameter& p = ps.add("x", mat(1, 1, {3}));
  ps.zero_grad();
  for (int i = 0; i < 2; ++i) {
    Graph g;
    g.backward(scale(g.param(p), 2.0));
  }
  CHECK(p.grad(0, 0) == 4.0);
  ps.zero_grad();
  CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("shape errors name the op and both shapes") {
  Graph g;
  const Value a = g.constant(Matrix::Zero(2, 3));
  const Value b = g.constant(Matrix::Zero(2, 3));
  try {
    matmul(a, b);
    FAIL("no exception");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("(2x3)") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, g.constant(Matrix::Zero(3, 2))), ShapeError);
  CHECK_THROWS_AS(cross_entropy(a, 0), ShapeError);
  CHECK_THROWS_AS(a.scalar(), ShapeError);
}

TEST_CASE("dropout is the identity at inference and rescales survivors in training") {
  Graph inf(Mode::kInference, 1);
  const Value x = inf.constant(Matrix::Ones(20, 20));
  CHECK(dropout(x, 0.5).value() == x.value());

  Graph tr(Mode::kTraining, 1);
  const Matrix y = dropout(tr.constant(Matrix::Ones(20, 20)), 0.25).value();
  int kept = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const double v = y.data()[i];
    CHECK((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12));
    kept += v != 0.0;
  }
  CHECK(kept > 250);
  CHECK(kept < 350);

  Graph again(Mode::kTraining, 1);
  CHECK(dropout(again.constant(Matrix::Ones(20, 20)), 0.25).value() == y);
}

TEST_CASE("lstm_gates matches the gate equations") {
  std::mt19937_64 rng(3);
  const Matrix pre = randn(1, 8, rng);
  const Matrix c_prev = randn(1, 2, rng);
  Graph g;
  const Matrix out = lstm_gates(g.constant(pre), g.constant(c_prev)).value();
  for (int j = 0; j < 2; ++j) {
    const double i = sigmoid(pre(0, j)), f = sigmoid(pre(0, 2 + j)), c_hat = std::tanh(pre(0, 4 + j)),
                 o = sigmoid(pre(0, 6 + j));
    const double c = f * c_prev(0, j) + i * c_hat;
    CHECK(out(0, 2 + j) == doctest::Approx(c));
    CHECK(out(0, j) == doctest::Approx(o * std::tanh(c)));
  }
}

TEST_CASE("bidirectional encoder: list and matrix forms agree, directions read the right context") {
  std::mt19937_64 rng(5);
  ParameterSet ps;
  const BiLstmParams lstm = BiLstmParams::create(ps, "l", 3, 4, rng);
  const Matrix in = randn(5, 3, rng);
  Graph g;
  const Matrix whole = bilstm_encode(g.constant(in), lstm).value();
  std::vector<Value> rows;
  for (Index t = 0; t < 5; ++t) rows.push_back(g.constant(in.row(t)));
  const auto list = bilstm_encode(rows, lstm);
  for (Index t = 0; t < 5; ++t) CHECK((list[static_cast<std::size_t>(t)].value() - whole.row(t)).norm() < 1e-12);

  // Changing the last input leaves earlier forward states and later backward states alone.
  Matrix in2 = in;
  in2.row(4).setConstant(3.0);
  const Matrix other = bilstm_encode(g.constant(in2), lstm).value();
  CHECK((other.block(0, 0, 4, 4) - whole.block(0, 0, 4, 4)).norm() == 0.0);
  CHECK((other.block(0, 4, 4, 4) - whole.block(0, 4, 4, 4)).norm() > 0.0);
}

TEST_CASE("grad_check catches a wrong backward") {
  ParameterSet ps;
  Parameter& p = ps.add("x", mat(1, 3, {0.3, -0.7, 1.1}));
  // y = x^2 with a backward that forgets the factor 2.
  auto bad_square = [](const Value& x) {
    Graph& g = x.graph();
    const Matrix v = x.value().array().square().matrix();
    return g.record(v, {x.id()}, [xid = x.id()](Graph& gr, int self) {
      gr.grad_ref(xid).array() += gr.grad(self).array() * gr.value(xid).array();
    });
  };
  const Parameter* const ptrs[] = {&p};
  const auto bad = grad_check([&](Graph& g) { return sum(bad_square(g.param(p))); },
                              std::span<Parameter* const>(const_cast<Parameter**>(ptrs), 1));
  CHECK_FALSE(bad.passed());
  const auto good = grad_check([&](Graph& g) { return sum(mul(g.param(p), g.param(p))); },
                               std::span<Parameter* const>(const_cast<Parameter**>(ptrs), 1));
  CHECK(good.passed());
  CHECK(good.checked == 3);
}

TEST_CASE("Adam first step moves each coordinate by the learning rate against the gradient sign") {
  ParameterSet ps;
  Parameter& p = ps.add("w", mat(1, 3, {1.0, -1.0, 0.5}));
  p.grad = mat(1, 3, {0.2, -3.0, 0.0});
  AdamOptimizer adam({.learning_rate = 0.1});
  adam.step(ps);
  CHECK(p.value(0, 0) == doctest::Approx(0.9));
  CHECK(p.value(0, 1) == doctest::Approx(-0.9));
  CHECK(p.value(0, 2) == doctest::Approx(0.5));
  CHECK(adam.step_count() == 1);
}

TEST_CASE("Adam L2 adds l2 * theta to the gradient") {
  ParameterSet ps;
  Parameter& p = ps.add("w", mat(1, 1, {2.0}));
  p.grad = mat(1, 1, {0.0});
  AdamOptimizer adam({.learning_rate = 0.01, .l2 = 0.5});
  adam.step(ps);
  CHECK(p.value(0, 0) == doctest::Approx(1.99));
}

TEST_CASE("Adam rejects non-finite gradients without touching parameters") {
  ParameterSet ps;
  Parameter& a = ps.add("a", mat(1, 1, {1.0}));
  Parameter& b = ps.add("b", mat(1, 1, {1.0}));
  a.grad = mat(1, 1, {1.0});
  b.grad = mat(1, 1, {std::numeric_limits<double>::quiet_NaN()});
  AdamOptimizer adam;
  try {
    adam.step(ps);
    FAIL("no exception");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }
  CHECK(a.value(0, 0) == 1.0);
  CHECK(adam.step_count() == 0);
}

TEST_CASE("weight noise applies only in training graphs and clears at std 0") {
  ParameterSet ps;
  Parameter& p = ps.add("w", Matrix::Zero(3, 3));
  std::mt19937_64 rng(1);
  ps.resample_noise(0.1, rng);
  Graph tr(Mode::kTraining);
  CHECK(tr.param(p).value().norm() > 0.0);
  Graph inf(Mode::kInference);
  CHECK(inf.param(p).value().norm() == 0.0);
  ps.resample_noise(0.0, rng);
  Graph tr2(Mode::kTraining);
  CHECK(tr2.param(p).value().norm() == 0.0);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  std::mt19937_64 rng(9);
  ParameterSet ps;
  ps.add("a", randn(3, 4, rng));
  ps.add("b.c", randn(1, 7, rng));
  Checkpoint ck;
  ck.config_hash = fnv1a64("cfg");
  ck.meta["model_type"] = "test";
  ck.meta["multi"] = "line one\nline two\n";
  ck.tensors = snapshot(ps);
  const auto path = std::filesystem::temp_directory_path() / "sxtract_test_nn.ckpt";
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.config_hash == ck.config_hash);
  CHECK(back.meta == ck.meta);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].data == ck.tensors[0].data);
  CHECK(back.tensors[1].shape == std::vector<std::int64_t>{1, 7});

  ParameterSet other;
  other.add("a", Matrix::Zero(3, 4));
  other.add("b.c", Matrix::Zero(1, 7));
  restore(other, back);
  CHECK(other.at("a").value == ps.at("a").value);

  ParameterSet wrong;
  wrong.add("a", Matrix::Zero(4, 3));
  CHECK_THROWS_AS(restore(wrong, back), ShapeError);

  {
    std::ofstream junk(path, std::ios::binary);
    junk << "not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
