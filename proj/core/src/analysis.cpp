#include "prada/analysis.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "format.hpp"
#include "prada/error.hpp"

namespace prada {

FunctionSet function_set(std::span<const AdditiveComponent> components) {
  FunctionSet out;
  for (const auto& component : components) {
    out.functions[component.support] += component.complexity();
  }
  return out;
}

FunctionSet function_set(const NetworkParams& params) {
  const std::vector<AdditiveComponent> components = group_nodes(params);
  return function_set(components);
}

double jaccard_distance(const FunctionSet& a, const FunctionSet& b) {
  std::size_t shared = 0;
  for (const auto& entry : a.functions) shared += b.contains(entry.first) ? 1 : 0;
  const std::size_t united = a.size() + b.size() - shared;
  if (united == 0) return 0.0;
  return 1.0 - static_cast<double>(shared) / static_cast<double>(united);
}

std::size_t medoid_model(std::span<const FunctionSet> runs) {
  if (runs.empty()) throw UsageError("medoid of an empty ensemble");
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < runs.size(); ++j) sum += jaccard_distance(runs[i], runs[j]);
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

double mean_similarity_to_medoid(std::span<const FunctionSet> runs) {
  if (runs.size() < 2) throw UsageError("similarity to the medoid needs at least two runs");
  const std::size_t medoid = medoid_model(runs);
  double total = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i != medoid) total += 1.0 - jaccard_distance(runs[medoid], runs[i]);
  }
  return total / static_cast<double>(runs.size() - 1);
}

EnsembleSummary summarize_ensemble(std::span<const FunctionSet> runs) {
  if (runs.empty()) throw UsageError("summary of an empty ensemble");
  std::map<Support, std::pair<std::size_t, double>> tally;
  for (const auto& run : runs) {
    for (const auto& [support, complexity] : run.functions) {
      auto& [count, total] = tally[support];
      ++count;
      total += static_cast<double>(complexity);
    }
  }
  EnsembleSummary out;
  out.run_count = runs.size();
  for (const auto& [support, entry] : tally) {
    const auto& [count, total] = entry;
    out.rows.push_back({support, static_cast<double>(count) / static_cast<double>(runs.size()),
                        total / static_cast<double>(count), count});
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const SupportSummary& a, const SupportSummary& b) {
                     return a.count > b.count;
                   });
  return out;
}

void write_summary_csv(const EnsembleSummary& summary, std::ostream& out,
                       const std::vector<std::string>& column_names) {
  out << "support,presence,mean_complexity\n";
  for (const auto& row : summary.rows) {
    // Labels contain commas, so they are quoted.
    out << '"' << support_label(row.support, column_names) << "\","
        << detail::format_double(row.presence) << ','
        << detail::format_double(row.mean_complexity) << '\n';
  }
}

}  // namespace prada
