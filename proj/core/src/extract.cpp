#include "igd/extract.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace igd {

namespace {

double pair_count(std::size_t m) {
    return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
}

Subgraph finalize(const InfluenceGraph& g, std::vector<std::size_t> members) {
    Subgraph s;
    s.nodes.reserve(members.size());
    for (std::size_t idx : members) s.nodes.push_back(g.node_ids()[idx]);
    std::sort(s.nodes.begin(), s.nodes.end());
    s.score = avg_score(g, s.nodes);
    return s;
}

// Steepest-ascent single-swap polish. Every accepted swap strictly raises the
// induced edge sum past a noise threshold, so the walk cannot revisit a
// subset and must terminate; ascending scan order keeps ties deterministic.
std::vector<std::size_t> refine_swaps(const InfluenceGraph& g, std::vector<std::size_t> members) {
    const std::size_t n = g.size();
    if (members.size() >= n) return members;
    std::sort(members.begin(), members.end());

    std::vector<char> in_set(n, 0);
    for (std::size_t m : members) in_set[m] = 1;
    std::vector<double> sum_to_set(n, 0.0);
    double edge_sum = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t m : members) {
            if (m == v) continue;
            sum_to_set[v] += g.weight_at(v, m);
        }
        if (in_set[v]) edge_sum += sum_to_set[v];
    }
    edge_sum *= 0.5;

    for (;;) {
        const double tol = 1e-12 * (1.0 + std::abs(edge_sum));
        double best_gain = tol;
        std::size_t best_out = n, best_in = n;
        for (std::size_t s : members) {
            for (std::size_t t = 0; t < n; ++t) {
                if (in_set[t]) continue;
                const double gain = sum_to_set[t] - g.weight_at(t, s) - sum_to_set[s];
                if (gain > best_gain) {
                    best_gain = gain;
                    best_out = s;
                    best_in = t;
                }
            }
        }
        if (best_out == n) return members;

        in_set[best_out] = 0;
        in_set[best_in] = 1;
        edge_sum += best_gain;
        for (std::size_t v = 0; v < n; ++v) {
            if (v != best_out) sum_to_set[v] -= g.weight_at(v, best_out);
            if (v != best_in) sum_to_set[v] += g.weight_at(v, best_in);
        }
        *std::find(members.begin(), members.end(), best_out) = best_in;
        std::sort(members.begin(), members.end());
    }
}

} // namespace

ExtractionBudget ExtractionBudget::from_ratio(double epsilon, std::size_t n, double multiplier) {
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        throw config_error("poison ratio must be in (0, 1)");
    if (!(multiplier > 0.0)) throw config_error("budget multiplier must be positive");
    ExtractionBudget b;
    b.k = static_cast<int>(std::llround(multiplier * epsilon * static_cast<double>(n)));
    return b;
}

void ExtractionBudget::validate(std::size_t n) const {
    if (k < 2) throw config_error("extraction budget k must be >= 2, got " + std::to_string(k));
    if (static_cast<std::size_t>(k) > n)
        throw config_error("extraction budget k = " + std::to_string(k) +
                           " exceeds the graph size " + std::to_string(n));
}

std::string to_string(MergeObjective o) {
    return o == MergeObjective::edge_mean ? "edge_mean" : "node_normalized";
}

MergeObjective merge_objective_from_string(const std::string& s) {
    if (s == "edge_mean") return MergeObjective::edge_mean;
    if (s == "node_normalized") return MergeObjective::node_normalized;
    throw config_error("unknown merge objective: " + s);
}

double avg_score(const InfluenceGraph& g, std::span<const NodeId> nodes) {
    if (nodes.size() < 2) return 0.0;
    std::vector<std::size_t> idx;
    idx.reserve(nodes.size());
    for (NodeId id : nodes) idx.push_back(g.index_of(id));
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw config_error("subgraph contains a duplicate node");
    double sum = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) sum += g.weight_at(idx[a], idx[b]);
    return sum / pair_count(nodes.size());
}

Subgraph greedy_extract(const InfluenceGraph& g, const ExtractionBudget& budget) {
    budget.validate(g.size());
    const std::size_t n = g.size();
    const auto& ids = g.node_ids();

    // Seed with the heaviest edge; tie toward the smallest id pair.
    std::size_t seed_a = 0, seed_b = 1;
    double seed_w = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const double w = g.weight_at(a, b);
            if (w < seed_w) continue;
            if (w > seed_w) {
                seed_w = w;
                seed_a = a;
                seed_b = b;
                continue;
            }
            const std::pair<NodeId, NodeId> cand = std::minmax(ids[a], ids[b]);
            const std::pair<NodeId, NodeId> best = std::minmax(ids[seed_a], ids[seed_b]);
            if (cand < best) {
                seed_a = a;
                seed_b = b;
            }
        }
    }

    std::vector<char> in_set(n, 0);
    std::vector<double> sum_to_set(n, 0.0);
    std::vector<std::size_t> members{seed_a, seed_b};
    in_set[seed_a] = in_set[seed_b] = 1;
    for (std::size_t v = 0; v < n; ++v) {
        if (in_set[v]) continue;
        sum_to_set[v] = g.weight_at(v, seed_a) + g.weight_at(v, seed_b);
    }

    while (members.size() < static_cast<std::size_t>(budget.k)) {
        std::size_t best = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_set[v]) continue;
            if (best == n || sum_to_set[v] > sum_to_set[best] ||
                (sum_to_set[v] == sum_to_set[best] && ids[v] < ids[best]))
                best = v;
        }
        in_set[best] = 1;
        members.push_back(best);
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_set[v]) sum_to_set[v] += g.weight_at(v, best);
        }
    }
    return finalize(g, refine_swaps(g, std::move(members)));
}

Subgraph agglomerative_extract(const InfluenceGraph& g, const ExtractionBudget& budget,
                               MergeObjective objective) {
    budget.validate(g.size());
    const std::size_t n = g.size();
    const auto& ids = g.node_ids();

    struct Cluster {
        std::vector<std::size_t> members;
        double edge_sum = 0.0;
        NodeId min_id = 0;
        bool alive = true;
    };
    std::vector<Cluster> clusters(n);
    for (std::size_t i = 0; i < n; ++i) {
        clusters[i].members = {i};
        clusters[i].min_id = ids[i];
    }
    // cross(a, b): total weight between clusters a and b.
    std::vector<std::vector<double>> cross(n, std::vector<double>(n, 0.0));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) cross[a][b] = cross[b][a] = g.weight_at(a, b);

    const std::size_t target = static_cast<std::size_t>(budget.k);
    for (;;) {
        std::size_t best_a = n, best_b = n;
        double best_score = -std::numeric_limits<double>::infinity();
        std::pair<NodeId, NodeId> best_key{0, 0};
        for (std::size_t a = 0; a < n; ++a) {
            if (!clusters[a].alive) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!clusters[b].alive) continue;
                const std::size_t m = clusters[a].members.size() + clusters[b].members.size();
                const double sum = clusters[a].edge_sum + clusters[b].edge_sum + cross[a][b];
                const double denom = objective == MergeObjective::edge_mean
                                         ? pair_count(m)
                                         : static_cast<double>(m);
                const double score = sum / denom;
                const std::pair<NodeId, NodeId> key =
                    std::minmax(clusters[a].min_id, clusters[b].min_id);
                if (score > best_score || (score == best_score && key < best_key)) {
                    best_score = score;
                    best_key = key;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        // n >= 2 and target <= n guarantee a merge happens before we run out.
        Cluster& dst = clusters[best_a];
        Cluster& src = clusters[best_b];
        dst.edge_sum += src.edge_sum + cross[best_a][best_b];
        dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
        dst.min_id = std::min(dst.min_id, src.min_id);
        src.alive = false;
        src.members.clear();
        for (std::size_t c = 0; c < n; ++c) {
            if (c == best_a || c == best_b) continue;
            cross[best_a][c] += cross[best_b][c];
            cross[c][best_a] = cross[best_a][c];
        }

        if (dst.members.size() >= target) {
            std::vector<std::size_t> members = dst.members;
            if (members.size() > target) {
                const Subgraph trimmed = prune(g, finalize(g, std::move(members)), budget.k);
                members.clear();
                for (NodeId id : trimmed.nodes) members.push_back(g.index_of(id));
            }
            return finalize(g, refine_swaps(g, std::move(members)));
        }
    }
}

Subgraph prune(const InfluenceGraph& g, const Subgraph& s, int k) {
    if (k < 2) throw config_error("prune target must be >= 2");
    if (s.nodes.size() <= static_cast<std::size_t>(k))
        throw config_error("prune needs a subgraph larger than its target size");

    std::vector<std::size_t> members;
    members.reserve(s.nodes.size());
    for (NodeId id : s.nodes) members.push_back(g.index_of(id));

    std::vector<double> sum_to_rest(members.size(), 0.0);
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            const double w = g.weight_at(members[a], members[b]);
            sum_to_rest[a] += w;
            sum_to_rest[b] += w;
        }

    const auto& ids = g.node_ids();
    while (members.size() > static_cast<std::size_t>(k)) {
        std::size_t drop = 0;
        for (std::size_t i = 1; i < members.size(); ++i) {
            if (sum_to_rest[i] < sum_to_rest[drop] ||
                (sum_to_rest[i] == sum_to_rest[drop] && ids[members[i]] < ids[members[drop]]))
                drop = i;
        }
        const std::size_t gone = members[drop];
        members.erase(members.begin() + static_cast<std::ptrdiff_t>(drop));
        sum_to_rest.erase(sum_to_rest.begin() + static_cast<std::ptrdiff_t>(drop));
        for (std::size_t i = 0; i < members.size(); ++i)
            sum_to_rest[i] -= g.weight_at(members[i], gone);
    }
    return finalize(g, std::move(members));
}

Subgraph brute_force_extract(const InfluenceGraph& g, const ExtractionBudget& budget,
                             std::uint64_t max_subsets) {
    budget.validate(g.size());
    const std::size_t n = g.size();
    const std::size_t k = static_cast<std::size_t>(budget.k);

    double subsets = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        subsets = subsets * static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (subsets > static_cast<double>(max_subsets))
        throw config_error("brute force refused: C(" + std::to_string(n) + ", " +
                           std::to_string(k) + ") exceeds " + std::to_string(max_subsets));

    std::vector<std::size_t> combo(k);
    for (std::size_t i = 0; i < k; ++i) combo[i] = i;

    Subgraph best;
    best.score = -std::numeric_limits<double>::infinity();
    std::vector<NodeId> nodes(k);
    for (;;) {
        double sum = 0.0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) sum += g.weight_at(combo[a], combo[b]);
        const double score = sum / pair_count(k);
        if (score >= best.score) {
            for (std::size_t i = 0; i < k; ++i) nodes[i] = g.node_ids()[combo[i]];
            std::sort(nodes.begin(), nodes.end());
            if (score > best.score || nodes < best.nodes) {
                best.nodes = nodes;
                best.score = score;
            }
        }
        // next lexicographic combination
        std::size_t i = k;
        while (i > 0) {
            --i;
            if (combo[i] != i + n - k) break;
            if (i == 0) return best;
        }
        ++combo[i];
        for (std::size_t j = i + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
    }
}

} // namespace igd
