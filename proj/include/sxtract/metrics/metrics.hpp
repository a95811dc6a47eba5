#pragma once

#include <sxtract/corpus/ontology.hpp>
#include <sxtract/corpus/references.hpp>
#include <sxtract/corpus/types.hpp>

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sxtract::metrics {

using corpus::MentionKey;
using corpus::MentionSet;

/// Match key: symptom only (Sx) or (symptom, status).
enum class View { kSx, kSxStatus };
enum class Weighting { kUnweighted, kWeighted };
enum class RefMode { kSingle, kVoted, kAny };

std::string_view to_string(View v);
std::string_view to_string(Weighting w);
std::string_view to_string(RefMode m);
RefMode parse_ref_mode(std::string_view s);

struct PR {
  double precision = 0;
  double recall = 0;
};

/// Harmonic mean; 0 when both inputs are 0.
double f1(double precision, double recall);

/// Under the Sx view every status collapses onto one canonical key and the
/// counts are summed. The Sx+Status view returns the set unchanged.
MentionSet apply_view(const MentionSet& m, View view);

// Zero denominators: both sides empty gives P = R = 1; otherwise a metric
// whose denominator side is empty is 0.
PR unweighted_prf(const MentionSet& pred, const MentionSet& ref, View view);
PR weighted_prf(const MentionSet& pred, const MentionSet& ref, View view);
PR prf(const MentionSet& pred, const MentionSet& ref, Weighting weighting, View view);

/// Precision credited against the union of several annotator sets (the
/// denominator stays the prediction), recall against `recall_ref`.
PR any_prf(const MentionSet& pred, std::span<const MentionSet> annotators, const MentionSet& recall_ref,
           Weighting weighting, View view);

struct ConversationScore {
  std::string id;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Corpus P and R are means over conversations; F1 is their harmonic mean.
struct MetricsCell {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::vector<ConversationScore> per_conversation;
};

using Predictions = std::map<std::string, MentionSet>;
using References = std::map<std::string, corpus::ReferenceSet>;

/// Throws Error when the two maps are not keyed by the same conversation ids.
MetricsCell evaluate_corpus(const Predictions& preds, const References& refs, RefMode mode, Weighting weighting,
                            View view);

/// Every (mode, weighting, view) cell for one model.
struct MetricsReport {
  struct Entry {
    RefMode mode;
    Weighting weighting;
    View view;
    MetricsCell cell;
  };
  std::vector<Entry> entries;
  std::size_t conversations = 0;

  const MetricsCell& at(RefMode mode, Weighting weighting, View view) const;
};

MetricsReport evaluate_all(const Predictions& preds, const References& refs,
                           std::span<const RefMode> modes = {});

/// Symptom keys replaced by "sym:<body system>"; counts of merged keys are summed.
/// Throws Error for symptoms the ontology does not know.
MentionSet project_to_body_system(const MentionSet& m, const corpus::Ontology& ontology);
corpus::ReferenceSet project_to_body_system(const corpus::ReferenceSet& r, const corpus::Ontology& ontology);
std::string body_system_key(std::string_view system);

}  // namespace sxtract::metrics
