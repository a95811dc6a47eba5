#pragma once

#include <sxtract/nn/graph.hpp>
#include <sxtract/nn/ops.hpp>

#include <random>
#include <span>
#include <string>
#include <vector>

namespace sxtract::crf {

using nn::Index;
using nn::Matrix;
using nn::Scalar;
using nn::Value;

/// Span tag set. Indices are stable and double as CRF state ids.
enum SpanTag : int { kBegin = 0, kInside = 1, kOutside = 2 };
inline constexpr int kSpanTagCount = 3;

/// Score used for transitions into START and out of STOP.
inline constexpr Scalar kForbidden = -1e4;

/// Linear-chain CRF parameters over K real tags. The transition matrix is
/// (K+2) x (K+2) with START = K and STOP = K+1; label embeddings are K x d and
/// emissions are the dot products h_i . y_tag.
struct CrfParams {
  nn::Parameter* transitions = nullptr;
  nn::Parameter* label_embeddings = nullptr;

  int num_tags() const { return static_cast<int>(label_embeddings->value.rows()); }
  int start_state() const { return num_tags(); }
  int stop_state() const { return num_tags() + 1; }
  Index dim() const { return label_embeddings->value.cols(); }

  static CrfParams create(nn::ParameterSet& params, const std::string& prefix, int num_tags, Index dim,
                          std::mt19937_64& rng);
  static CrfParams bind(nn::ParameterSet& params, const std::string& prefix);
};

/// Transition matrix with the forbidden entries pinned at kForbidden.
Value masked_transitions(nn::Graph& g, const CrfParams& params);
/// T x K emission scores h . Y^T.
Value emissions(const Value& h, const CrfParams& params);

// Emission-level core. `emissions` is T x K, `transitions` (K+2) x (K+2).
Value sequence_score_from_emissions(const Value& emissions, const Value& transitions, std::span<const int> tags);
Value log_partition_from_emissions(const Value& emissions, const Value& transitions);

struct ViterbiResult {
  std::vector<int> tags;
  Scalar score = 0;
};
/// Exact argmax; ties resolve to the lowest tag index at every decision.
ViterbiResult viterbi_from_emissions(const Matrix& emissions, const Matrix& transitions);

/// S(y, h): START/STOP-bracketed transitions plus emissions along y.
Value sequence_score(const Value& h, std::span<const int> tags, const CrfParams& params);
/// log sum_y exp S(y, h) by the forward recursion.
Value log_partition(const Value& h, const CrfParams& params);
/// -S(gold, h) + log Z(h).
Value crf_nll(const Value& h, std::span<const int> gold, const CrfParams& params);
ViterbiResult viterbi_decode(const Matrix& h, const CrfParams& params);

struct Span {
  int start = 0;  // inclusive
  int end = 0;    // exclusive
  friend bool operator==(const Span&, const Span&) = default;
};

/// BIO decoding. An orphan inside tag (not following B or I) opens a span.
std::vector<Span> tags_to_spans(std::span<const int> tags);
/// Inverse for disjoint, ordered, in-range spans.
std::vector<int> spans_to_tags(std::span<const Span> spans, int length);

}  // namespace sxtract::crf
