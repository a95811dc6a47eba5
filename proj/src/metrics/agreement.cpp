#include <sxtract/metrics/agreement.hpp>

#include <sxtract/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sxtract::metrics {

double cohen_kappa(const corpus::MentionSet& a, const corpus::MentionSet& b,
                   std::span<const corpus::MentionKey> universe) {
  if (universe.empty()) throw Error("cohen_kappa: empty universe");
  double both = 0, only_a = 0, only_b = 0;
  for (const auto& k : universe) {
    const bool x = a.contains(k), y = b.contains(k);
    both += x && y;
    only_a += x && !y;
    only_b += !x && y;
  }
  const double n = static_cast<double>(universe.size());
  const double neither = n - both - only_a - only_b;
  const double po = (both + neither) / n;
  const double pa = (both + only_a) / n, pb = (both + only_b) / n;
  const double pe = pa * pb + (1 - pa) * (1 - pb);
  if (pe >= 1.0) return 1.0;
  return (po - pe) / (1 - pe);
}

std::vector<corpus::MentionKey> key_universe(const corpus::Ontology& ontology) {
  std::vector<corpus::MentionKey> out;
  for (int i = 0; i < ontology.size(); ++i) {
    for (int s = 0; s < corpus::kStatusCount; ++s) out.push_back({ontology.symptom(i), static_cast<corpus::Status>(s)});
  }
  return out;
}

AgreementSummary corpus_kappa(std::span<const corpus::AnnotatedConversation> corpus,
                              const corpus::Ontology& ontology) {
  const auto universe = key_universe(ontology);
  AgreementSummary out;
  double total = 0;
  for (const auto& ac : corpus) {
    std::vector<corpus::MentionSet> sets;
    for (const auto& [name, labels] : ac.annotations) sets.push_back(corpus::mentions_from_labels(labels));
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (std::size_t j = i + 1; j < sets.size(); ++j) {
        total += cohen_kappa(sets[i], sets[j], universe);
        ++out.pairs;
      }
    }
  }
  if (out.pairs > 0) out.mean_kappa = total / static_cast<double>(out.pairs);
  return out;
}

MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("mann_whitney: both samples must be nonempty");
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (double x : a) all.emplace_back(x, 0);
  for (double x : b) all.emplace_back(x, 1);
  std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });

  double rank_sum_a = 0, tie_term = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second == 0) rank_sum_a += midrank;
    }
    i = j;
  }
  MannWhitneyResult out;
  const double dna = static_cast<double>(na), dnb = static_cast<double>(nb), dn = static_cast<double>(n);
  out.u = rank_sum_a - dna * (dna + 1) / 2;
  const double mu = dna * dnb / 2;
  const double var = dna * dnb / 12 * ((dn + 1) - tie_term / (dn * (dn - 1)));
  if (!(var > 0)) return out;
  const double diff = std::max(std::abs(out.u - mu) - 0.5, 0.0);
  out.z = std::copysign(diff / std::sqrt(var), out.u - mu);
  out.p_two_sided = std::min(1.0, std::erfc(diff / std::sqrt(var) / std::sqrt(2.0)));
  return out;
}

}  // namespace sxtract::metrics
