#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "prada/extraction.hpp"

namespace prada {

using Support = std::vector<Index>;

/// Functions identified in one run: support -> complexity (node count).
/// Supports are unique by construction.
struct FunctionSet {
  std::map<Support, Index> functions;

  bool contains(const Support& support) const { return functions.count(support) > 0; }
  std::size_t size() const { return functions.size(); }
};

/// Function set of extracted components; linear-only components count as
/// single-node functions.
FunctionSet function_set(std::span<const AdditiveComponent> components);

/// Function set read straight off a network's node supports.
FunctionSet function_set(const NetworkParams& params);

/// 1 - |a n b| / |a u b| over supports; 0 when both are empty.
double jaccard_distance(const FunctionSet& a, const FunctionSet& b);

/// Run minimizing the summed Jaccard distance to all runs; lowest index wins
/// ties.
std::size_t medoid_model(std::span<const FunctionSet> runs);

/// Mean Jaccard similarity between the medoid and every other run. The medoid
/// itself is left out of the average.
double mean_similarity_to_medoid(std::span<const FunctionSet> runs);

struct SupportSummary {
  Support support;
  double presence = 0.0;
  double mean_complexity = 0.0;
  std::size_t count = 0;
};

struct EnsembleSummary {
  // Ordered by presence (descending), then by support.
  std::vector<SupportSummary> rows;
  std::size_t run_count = 0;
};

EnsembleSummary summarize_ensemble(std::span<const FunctionSet> runs);

/// CSV with columns support, presence, mean_complexity. Supports are written
/// as labels such as "f(x1,x3)".
void write_summary_csv(const EnsembleSummary& summary, std::ostream& out,
                       const std::vector<std::string>& column_names = {});

}  // namespace prada
