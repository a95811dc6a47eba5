#include <sxtract/crf/crf.hpp>

#include <sxtract/error.hpp>

namespace sxtract::crf {

CrfParams CrfParams::create(nn::ParameterSet& params, const std::string& prefix, int num_tags, Index dim,
                            std::mt19937_64& rng) {
  const int states = num_tags + 2;
  Matrix a = nn::uniform_init(states, states, 0.1, rng);
  a.col(num_tags).setConstant(kForbidden);
  a.row(num_tags + 1).setConstant(kForbidden);
  CrfParams p;
  p.transitions = &params.add(prefix + ".A", std::move(a));
  p.label_embeddings = &params.add(prefix + ".Y", nn::glorot_init(num_tags, dim, rng));
  return p;
}

CrfParams CrfParams::bind(nn::ParameterSet& params, const std::string& prefix) {
  CrfParams p;
  p.transitions = &params.at(prefix + ".A");
  p.label_embeddings = &params.at(prefix + ".Y");
  return p;
}

namespace {

nn::Mask forbidden_mask(int num_tags) {
  const int states = num_tags + 2;
  nn::Mask m = nn::Mask::Constant(states, states, false);
  m.col(num_tags).setConstant(true);
  m.row(num_tags + 1).setConstant(true);
  return m;
}

void check_transitions(const char* op, Index num_tags, const Matrix& a) {
  if (a.rows() != num_tags + 2 || a.cols() != num_tags + 2) {
    throw ShapeError(std::string(op) + ": transitions " + nn::shape_string(a) + " vs " +
                     std::to_string(num_tags) + " tags (expected " + nn::shape_string(num_tags + 2, num_tags + 2) + ")");
  }
}

}  // namespace

Value masked_transitions(nn::Graph& g, const CrfParams& params) {
  return nn::mask_fill(g.param(*params.transitions), forbidden_mask(params.num_tags()), kForbidden);
}

Value emissions(const Value& h, const CrfParams& params) {
  nn::Graph& g = h.graph();
  if (h.cols() != params.dim()) {
    throw ShapeError("crf emissions: h " + nn::shape_string(h.value()) + " vs label embeddings " +
                     nn::shape_string(params.label_embeddings->value));
  }
  return nn::matmul(h, nn::transpose(g.param(*params.label_embeddings)));
}

Value sequence_score_from_emissions(const Value& em, const Value& transitions, std::span<const int> tags) {
  const Index len = em.rows();
  const Index k = em.cols();
  check_transitions("sequence_score", k, transitions.value());
  if (len == 0) throw ShapeError("sequence_score: empty sequence");
  if (static_cast<Index>(tags.size()) != len) {
    throw ShapeError("sequence_score: " + std::to_string(tags.size()) + " tags for " + std::to_string(len) +
                     " positions");
  }
  for (int t : tags) {
    if (t < 0 || t >= k) throw Error("sequence_score: tag " + std::to_string(t) + " outside tag set");
  }
  nn::Graph& g = em.graph();
  Matrix onehot = Matrix::Zero(len, k);
  Matrix counts = Matrix::Zero(k + 2, k + 2);
  const auto start = static_cast<int>(k), stop = static_cast<int>(k + 1);
  counts(start, tags[0]) += 1;
  for (Index i = 0; i < len; ++i) {
    onehot(i, tags[static_cast<std::size_t>(i)]) = 1;
    if (i + 1 < len) counts(tags[static_cast<std::size_t>(i)], tags[static_cast<std::size_t>(i + 1)]) += 1;
  }
  counts(tags.back(), stop) += 1;
  Value emit = nn::sum(nn::mul(em, g.constant(std::move(onehot))));
  Value trans = nn::sum(nn::mul(transitions, g.constant(std::move(counts))));
  return nn::add(emit, trans);
}

Value log_partition_from_emissions(const Value& em, const Value& transitions) {
  const Index len = em.rows();
  const Index k = em.cols();
  check_transitions("log_partition", k, transitions.value());
  if (len == 0) throw ShapeError("log_partition: empty sequence");
  Value inner = nn::slice(transitions, 0, k, 0, k);
  Value from_start = nn::slice(transitions, k, 1, 0, k);
  Value to_stop = nn::transpose(nn::slice(transitions, 0, k, k + 1, 1));
  Value alpha = nn::add(from_start, nn::slice_rows(em, 0, 1));
  for (Index t = 1; t < len; ++t) {
    // scores(i, j) = alpha_i + A(i, j); reduce over the previous tag i.
    Value scores = nn::add_col(inner, nn::transpose(alpha));
    alpha = nn::add(nn::logsumexp(scores, 0), nn::slice_rows(em, t, 1));
  }
  return nn::logsumexp_all(nn::add(alpha, to_stop));
}

ViterbiResult viterbi_from_emissions(const Matrix& em, const Matrix& transitions) {
  const Index len = em.rows();
  const Index k = em.cols();
  check_transitions("viterbi_decode", k, transitions);
  if (len == 0) throw ShapeError("viterbi_decode: empty sequence");
  const Index start = k, stop = k + 1;
  Eigen::VectorXd score(k), next(k);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> back(len, k);
  for (Index j = 0; j < k; ++j) score(j) = transitions(start, j) + em(0, j);
  for (Index t = 1; t < len; ++t) {
    for (Index j = 0; j < k; ++j) {
      Index best_i = 0;
      Scalar best = score(0) + transitions(0, j);
      for (Index i = 1; i < k; ++i) {
        const Scalar s = score(i) + transitions(i, j);
        if (s > best) {
          best = s;
          best_i = i;
        }
      }
      next(j) = best + em(t, j);
      back(t, j) = static_cast<int>(best_i);
    }
    score.swap(next);
  }
  Index last = 0;
  Scalar best = score(0) + transitions(0, stop);
  for (Index j = 1; j < k; ++j) {
    const Scalar s = score(j) + transitions(j, stop);
    if (s > best) {
      best = s;
      last = j;
    }
  }
  ViterbiResult out;
  out.score = best;
  out.tags.assign(static_cast<std::size_t>(len), 0);
  out.tags.back() = static_cast<int>(last);
  for (Index t = len - 1; t > 0; --t) {
    out.tags[static_cast<std::size_t>(t - 1)] = back(t, out.tags[static_cast<std::size_t>(t)]);
  }
  return out;
}

Value sequence_score(const Value& h, std::span<const int> tags, const CrfParams& params) {
  if (static_cast<Index>(tags.size()) != h.rows()) {
    throw ShapeError("sequence_score: " + std::to_string(tags.size()) + " tags for " + std::to_string(h.rows()) +
                     " positions");
  }
  return sequence_score_from_emissions(emissions(h, params), masked_transitions(h.graph(), params), tags);
}

Value log_partition(const Value& h, const CrfParams& params) {
  if (h.rows() == 0) throw ShapeError("log_partition: empty sequence");
  return log_partition_from_emissions(emissions(h, params), masked_transitions(h.graph(), params));
}

Value crf_nll(const Value& h, std::span<const int> gold, const CrfParams& params) {
  if (static_cast<Index>(gold.size()) != h.rows()) {
    throw ShapeError("crf_nll: " + std::to_string(gold.size()) + " tags for " + std::to_string(h.rows()) +
                     " positions");
  }
  for (int t : gold) {
    if (t < 0 || t >= params.num_tags()) throw Error("crf_nll: gold tag " + std::to_string(t) + " outside tag set");
  }
  Value em = emissions(h, params);
  Value a = masked_transitions(h.graph(), params);
  return nn::sub(log_partition_from_emissions(em, a), sequence_score_from_emissions(em, a, gold));
}

ViterbiResult viterbi_decode(const Matrix& h, const CrfParams& params) {
  if (h.cols() != params.dim()) {
    throw ShapeError("viterbi_decode: h " + nn::shape_string(h) + " vs label embeddings " +
                     nn::shape_string(params.label_embeddings->value));
  }
  Matrix a = params.transitions->value;
  const int k = params.num_tags();
  a.col(k).setConstant(kForbidden);
  a.row(k + 1).setConstant(kForbidden);
  Matrix em = h * params.label_embeddings->value.transpose();
  return viterbi_from_emissions(em, a);
}

std::vector<Span> tags_to_spans(std::span<const int> tags) {
  std::vector<Span> spans;
  bool open = false;
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    const int t = tags[static_cast<std::size_t>(i)];
    if (t == kBegin || (t == kInside && !open)) {
      spans.push_back({i, i + 1});
      open = true;
    } else if (t == kInside) {
      spans.back().end = i + 1;
    } else {
      open = false;
    }
  }
  return spans;
}

std::vector<int> spans_to_tags(std::span<const Span> spans, int length) {
  std::vector<int> tags(static_cast<std::size_t>(length), kOutside);
  int prev_end = 0;
  for (const Span& s : spans) {
    if (s.start < prev_end || s.end <= s.start || s.end > length) {
      throw Error("spans_to_tags: spans must be disjoint, ordered and inside [0, " + std::to_string(length) + ")");
    }
    tags[static_cast<std::size_t>(s.start)] = kBegin;
    for (int i = s.start + 1; i < s.end; ++i) tags[static_cast<std::size_t>(i)] = kInside;
    prev_end = s.end;
  }
  return tags;
}

}  // namespace sxtract::crf
