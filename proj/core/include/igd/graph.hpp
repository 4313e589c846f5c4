#pragma once

#include <Eigen/Core>
#include <unordered_map>
#include <vector>

#include "igd/influence.hpp"
#include "igd/types.hpp"

namespace igd {

// Complete undirected weighted graph over training points. Edge (i, j)
// averages the two directed influence scores. Upper-triangular dense
// storage; immutable after construction.
class InfluenceGraph {
public:
    InfluenceGraph(std::vector<NodeId> ids, std::vector<double> upper_weights);

    std::size_t size() const { return ids_.size(); }
    std::size_t edge_count() const { return weights_.size(); }
    const std::vector<NodeId>& node_ids() const { return ids_; }

    // Symmetric lookup by example id; throws on self-edges and unknown ids.
    double edge_weight(NodeId i, NodeId j) const;

    // Index-based fast path, a != b, both < size().
    double weight_at(std::size_t a, std::size_t b) const {
        if (a > b) std::swap(a, b);
        return weights_[offset(a, b)];
    }

    bool contains(NodeId id) const { return index_.count(id) != 0; }
    std::size_t index_of(NodeId id) const;
    const std::vector<double>& upper_weights() const { return weights_; }

private:
    std::size_t offset(std::size_t a, std::size_t b) const {
        // row-major upper triangle, a < b
        return a * (2 * ids_.size() - a - 1) / 2 + (b - a - 1);
    }

    std::vector<NodeId> ids_;
    std::vector<double> weights_; // n(n-1)/2
    std::unordered_map<NodeId, std::size_t> index_;
};

// weight(i, j) = (scores(i, j) + scores(j, i)) / 2 for all i < j.
InfluenceGraph build_graph(const Eigen::MatrixXd& scores, const std::vector<NodeId>& ids);
InfluenceGraph build_graph(const InfluenceMatrix& m);

} // namespace igd
