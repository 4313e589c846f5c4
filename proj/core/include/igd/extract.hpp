#pragma once

#include <span>
#include <string>
#include <vector>

#include "igd/graph.hpp"
#include "igd/types.hpp"

namespace igd {

struct Subgraph {
    std::vector<NodeId> nodes; // sorted ascending
    double score = 0.0;        // average induced edge weight
};

// Target subgraph size k = round(multiplier * epsilon * N). The removal
// protocol takes multiplier 1.5 by default; set it to 1 to extract exactly
// the assumed poisoned count.
struct ExtractionBudget {
    int k = 0;

    static ExtractionBudget from_ratio(double epsilon, std::size_t n, double multiplier = 1.5);
    void validate(std::size_t n) const; // 2 <= k <= n
};

// How a candidate merge is scored during agglomerative search: mean over the
// union's induced edges, or the induced edge sum divided by the union's node
// count.
enum class MergeObjective { edge_mean, node_normalized };

std::string to_string(MergeObjective o);
MergeObjective merge_objective_from_string(const std::string& s);

// Sum of induced edge weights divided by the induced edge count; 0 when
// fewer than two nodes.
double avg_score(const InfluenceGraph& g, std::span<const NodeId> nodes);

// Seeds with the heaviest edge, then repeatedly adds the node with the
// largest total weight to the current set until |S| = k. Ties break toward
// the smallest node id.
Subgraph greedy_extract(const InfluenceGraph& g, const ExtractionBudget& budget);

// Starts from singletons and repeatedly merges the pair of subgraphs whose
// union scores highest under `objective`, until some subgraph reaches size
// >= k; prunes back to exactly k if the final merge overshoots. Ties break
// toward the lexicographically smallest pair of subgraph-minimum ids.
Subgraph agglomerative_extract(const InfluenceGraph& g, const ExtractionBudget& budget,
                               MergeObjective objective = MergeObjective::edge_mean);

// Repeatedly drops the node whose removal reduces the average score least
// until |s| = k; requires |s| > k. Ties break toward the smallest id.
Subgraph prune(const InfluenceGraph& g, const Subgraph& s, int k);

// Exact argmax of avg_score over all size-k subsets; refuses when C(n, k)
// exceeds max_subsets. Lexicographic tie-break.
Subgraph brute_force_extract(const InfluenceGraph& g, const ExtractionBudget& budget,
                             std::uint64_t max_subsets = 2'000'000);

} // namespace igd
