#pragma once

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/corpus/types.hpp>

#include <span>
#include <vector>

namespace sxtract::metrics {

/// Cohen's kappa over binary presence of each universe key in a and b.
/// Returns 1 when chance agreement is 1 (both raters constant and equal).
/// Throws Error on an empty universe.
double cohen_kappa(const corpus::MentionSet& a, const corpus::MentionSet& b,
                   std::span<const corpus::MentionKey> universe);

/// Every (symptom, status) key of the ontology.
std::vector<corpus::MentionKey> key_universe(const corpus::Ontology& ontology);

struct AgreementSummary {
  double mean_kappa = 0;
  std::size_t pairs = 0;  // (conversation, annotator pair) combinations averaged
};

/// Kappa per conversation and annotator pair, universe = ontology x statuses,
/// averaged over all of them. Conversations with fewer than two annotators are skipped.
AgreementSummary corpus_kappa(std::span<const corpus::AnnotatedConversation> corpus,
                              const corpus::Ontology& ontology);

struct MannWhitneyResult {
  double u = 0;  // U statistic of sample a
  double z = 0;
  double p_two_sided = 1;
};

/// Rank-sum test with midranks for ties, tie-corrected variance and a 0.5
/// continuity correction under the normal approximation. p = 1 when every
/// value is identical. Throws Error on an empty sample.
MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b);

}  // namespace sxtract::metrics
