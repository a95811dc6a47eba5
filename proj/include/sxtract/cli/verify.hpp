#pragma once

#include <sxtract/crf/crf.hpp>
#include <sxtract/nn/grad_check.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sxtract::cli {

using nn::Matrix;
using nn::Scalar;

/// CRF inference entry points exercised by the oracle suites. The library
/// implementation is the default; tests swap in deliberately broken ones.
struct CrfImpl {
  std::function<Scalar(const Matrix& emissions, const Matrix& transitions)> log_partition;
  std::function<crf::ViterbiResult(const Matrix& emissions, const Matrix& transitions)> viterbi;
};

CrfImpl library_crf();

struct VerifyOptions {
  int crf_draws = 1000;
  int crf_max_len = 6;
  int grad_seeds = 20;
  int metric_pairs = 1000;
  int decode_models = 50;
  std::uint64_t seed = 1;
  CrfImpl crf = library_crf();
};

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::size_t checks = 0;
  /// First few failures, one per line.
  std::string detail;
  double seconds = 0;
};

/// Score of one tag path computed straight from the matrices, START = K, STOP = K + 1.
Scalar brute_path_score(const Matrix& emissions, const Matrix& transitions, const std::vector<int>& tags);

struct BruteForceCrf {
  Scalar log_partition = 0;
  Scalar best_score = 0;
  std::vector<int> best_tags;
};
/// Enumerates all K^T paths.
BruteForceCrf brute_force_crf(const Matrix& emissions, const Matrix& transitions);

SuiteResult verify_crf_partition(const VerifyOptions& options);
SuiteResult verify_crf_viterbi(const VerifyOptions& options);

/// One finite-difference check; `run` builds fresh parameters from the seed.
struct GradCase {
  std::string name;
  std::function<nn::GradCheckReport(std::uint64_t seed)> run;
};

/// Every nn op, the LSTM layers, crf_nll and the full model losses.
std::vector<GradCase> gradient_cases();
SuiteResult verify_gradients(const VerifyOptions& options, const std::vector<GradCase>& cases = gradient_cases());

SuiteResult verify_metric_fixtures(const VerifyOptions& options);
SuiteResult verify_decode_grammar(const VerifyOptions& options);

std::vector<SuiteResult> run_verify(const VerifyOptions& options);
/// "PASS|FAIL  name  checks  seconds" per suite, failure details indented.
std::string format_verify(const std::vector<SuiteResult>& results);

}  // namespace sxtract::cli
