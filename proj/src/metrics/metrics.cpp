#include <sxtract/metrics/metrics.hpp>

#include <sxtract/error.hpp>

#include <array>
#include <set>

namespace sxtract::metrics {
namespace {

// Ratio with the shared zero-denominator rule. `other_empty` is whether the
// opposite side of the comparison is also empty.
double ratio(double num, double den, bool other_empty) {
  if (den == 0) return other_empty ? 1.0 : 0.0;
  return num / den;
}

}  // namespace

std::string_view to_string(View v) { return v == View::kSx ? "Sx" : "Sx+Status"; }

std::string_view to_string(Weighting w) { return w == Weighting::kUnweighted ? "unweighted" : "weighted"; }

std::string_view to_string(RefMode m) {
  switch (m) {
    case RefMode::kSingle:
      return "single";
    case RefMode::kVoted:
      return "voted";
    case RefMode::kAny:
      return "any";
  }
  return "?";
}

RefMode parse_ref_mode(std::string_view s) {
  if (s == "single") return RefMode::kSingle;
  if (s == "voted") return RefMode::kVoted;
  if (s == "any") return RefMode::kAny;
  throw ConfigError("unknown reference mode '" + std::string(s) + "' (expected single, voted or any)");
}

double f1(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

MentionSet apply_view(const MentionSet& m, View view) {
  if (view == View::kSxStatus) return m;
  MentionSet out;
  for (const auto& [k, c] : m) out.add(MentionKey{k.symptom, corpus::Status::kExperienced}, c);
  return out;
}

PR unweighted_prf(const MentionSet& pred_in, const MentionSet& ref_in, View view) {
  const MentionSet pred = apply_view(pred_in, view);
  const MentionSet ref = apply_view(ref_in, view);
  double tp = 0;
  for (const auto& [k, c] : pred) tp += ref.contains(k) ? 1 : 0;
  return {ratio(tp, static_cast<double>(pred.unique_size()), ref.empty()),
          ratio(tp, static_cast<double>(ref.unique_size()), pred.empty())};
}

PR weighted_prf(const MentionSet& pred_in, const MentionSet& ref_in, View view) {
  const MentionSet pred = apply_view(pred_in, view);
  const MentionSet ref = apply_view(ref_in, view);
  double p_num = 0, r_num = 0;
  for (const auto& [k, c] : pred) p_num += ref.contains(k) ? c : 0;
  for (const auto& [k, c] : ref) r_num += pred.contains(k) ? c : 0;
  return {ratio(p_num, pred.total(), ref.empty()), ratio(r_num, ref.total(), pred.empty())};
}

PR prf(const MentionSet& pred, const MentionSet& ref, Weighting weighting, View view) {
  return weighting == Weighting::kUnweighted ? unweighted_prf(pred, ref, view) : weighted_prf(pred, ref, view);
}

PR any_prf(const MentionSet& pred_in, std::span<const MentionSet> annotators, const MentionSet& recall_ref,
           Weighting weighting, View view) {
  const MentionSet pred = apply_view(pred_in, view);
  const MentionSet ref = apply_view(recall_ref, view);
  std::set<MentionKey> credit;
  for (const MentionSet& a : annotators) {
    for (const auto& [k, c] : apply_view(a, view)) credit.insert(k);
  }
  for (const auto& [k, c] : ref) credit.insert(k);
  double num = 0, den = 0;
  for (const auto& [k, c] : pred) {
    const double w = weighting == Weighting::kUnweighted ? 1.0 : c;
    den += w;
    if (credit.contains(k)) num += w;
  }
  PR out;
  out.precision = ratio(num, den, ref.empty());
  out.recall = prf(pred, ref, weighting, View::kSxStatus).recall;
  return out;
}

MetricsCell evaluate_corpus(const Predictions& preds, const References& refs, RefMode mode, Weighting weighting,
                            View view) {
  if (preds.size() != refs.size()) {
    throw Error("evaluate_corpus: " + std::to_string(preds.size()) + " predictions for " +
                std::to_string(refs.size()) + " references");
  }
  MetricsCell cell;
  for (const auto& [id, pred] : preds) {
    auto it = refs.find(id);
    if (it == refs.end()) throw Error("evaluate_corpus: no reference for conversation '" + id + "'");
    const corpus::ReferenceSet& r = it->second;
    PR pr;
    switch (mode) {
      case RefMode::kSingle:
        pr = prf(pred, r.single, weighting, view);
        break;
      case RefMode::kVoted:
        pr = prf(pred, r.voted, weighting, view);
        break;
      case RefMode::kAny:
        pr = any_prf(pred, r.annotators, r.voted, weighting, view);
        break;
    }
    cell.per_conversation.push_back({id, pr.precision, pr.recall, f1(pr.precision, pr.recall)});
    cell.precision += pr.precision;
    cell.recall += pr.recall;
  }
  if (!cell.per_conversation.empty()) {
    cell.precision /= static_cast<double>(cell.per_conversation.size());
    cell.recall /= static_cast<double>(cell.per_conversation.size());
  }
  cell.f1 = f1(cell.precision, cell.recall);
  return cell;
}

const MetricsCell& MetricsReport::at(RefMode mode, Weighting weighting, View view) const {
  for (const Entry& e : entries) {
    if (e.mode == mode && e.weighting == weighting && e.view == view) return e.cell;
  }
  throw Error("metrics report has no cell for " + std::string(to_string(mode)) + "/" +
              std::string(to_string(weighting)) + "/" + std::string(to_string(view)));
}

MetricsReport evaluate_all(const Predictions& preds, const References& refs, std::span<const RefMode> modes) {
  static constexpr std::array<RefMode, 3> kAll = {RefMode::kSingle, RefMode::kVoted, RefMode::kAny};
  if (modes.empty()) modes = kAll;
  MetricsReport report;
  report.conversations = preds.size();
  for (RefMode m : modes) {
    for (Weighting w : {Weighting::kUnweighted, Weighting::kWeighted}) {
      for (View v : {View::kSx, View::kSxStatus}) {
        report.entries.push_back({m, w, v, evaluate_corpus(preds, refs, m, w, v)});
      }
    }
  }
  return report;
}

std::string body_system_key(std::string_view system) { return "sym:" + std::string(system); }

MentionSet project_to_body_system(const MentionSet& m, const corpus::Ontology& ontology) {
  MentionSet out;
  for (const auto& [k, c] : m) {
    out.add(MentionKey{body_system_key(ontology.body_system(k.symptom)), k.status}, c);
  }
  return out;
}

corpus::ReferenceSet project_to_body_system(const corpus::ReferenceSet& r, const corpus::Ontology& ontology) {
  corpus::ReferenceSet out;
  for (const MentionSet& a : r.annotators) out.annotators.push_back(project_to_body_system(a, ontology));
  out.voted = project_to_body_system(r.voted, ontology);
  out.single = project_to_body_system(r.single, ontology);
  return out;
}

}  // namespace sxtract::metrics
