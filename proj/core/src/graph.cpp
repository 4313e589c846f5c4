#include "igd/graph.hpp"

#include <string>

namespace igd {

InfluenceGraph::InfluenceGraph(std::vector<NodeId> ids, std::vector<double> upper_weights)
    : ids_(std::move(ids)), weights_(std::move(upper_weights)) {
    const std::size_t n = ids_.size();
    if (n < 2) throw config_error("influence graph needs at least 2 nodes");
    if (weights_.size() != n * (n - 1) / 2)
        throw config_error("edge weight count does not match node count");
    index_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!index_.emplace(ids_[i], i).second)
            throw config_error("duplicate node id " + std::to_string(ids_[i]));
    }
}

std::size_t InfluenceGraph::index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw config_error("unknown node id " + std::to_string(id));
    return it->second;
}

double InfluenceGraph::edge_weight(NodeId i, NodeId j) const {
    if (i == j) throw config_error("self-edges do not exist");
    return weight_at(index_of(i), index_of(j));
}

InfluenceGraph build_graph(const Eigen::MatrixXd& scores, const std::vector<NodeId>& ids) {
    if (scores.rows() != scores.cols()) throw config_error("score matrix is not square");
    if (static_cast<std::size_t>(scores.rows()) != ids.size())
        throw config_error("score matrix size does not match node ids");
    const std::size_t n = ids.size();
    std::vector<double> weights;
    weights.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            weights.push_back(0.5 * (scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                                     scores(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))));
        }
    }
    return InfluenceGraph(ids, std::move(weights));
}

InfluenceGraph build_graph(const InfluenceMatrix& m) {
    m.validate();
    return build_graph(m.scores, m.ids);
}

} // namespace igd
