#include "igd/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>

namespace igd {

std::vector<NodeId> spectral_baseline(const TrainedModel& model, const Dataset& dataset,
                                      int suspect_label, int k) {
    if (suspect_label < 0 || suspect_label >= dataset.num_classes)
        throw config_error("suspect label out of range");
    if (k < 1 || static_cast<std::size_t>(k) > dataset.size())
        throw config_error("spectral baseline k must be in [1, N]");

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.examples[i].label == suspect_label) members.push_back(i);
    }
    if (members.empty()) throw config_error("no examples carry the suspect label");

    std::vector<double> score(dataset.size(), 0.0);
    if (members.size() >= 2) {
        const Eigen::Index dim = representation(model, dataset.examples[members[0]]).size();
        Eigen::MatrixXd reps(dim, static_cast<Eigen::Index>(members.size()));
        for (std::size_t m = 0; m < members.size(); ++m)
            reps.col(static_cast<Eigen::Index>(m)) =
                representation(model, dataset.examples[members[m]]);
        const Eigen::VectorXd mean = reps.rowwise().mean();
        reps.colwise() -= mean;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reps * reps.transpose());
        if (eig.info() != Eigen::Success)
            throw solver_error("eigendecomposition of the class covariance failed", 0.0, 0);
        const Eigen::VectorXd top = eig.eigenvectors().col(dim - 1); // largest eigenvalue last
        for (std::size_t m = 0; m < members.size(); ++m) {
            const double proj = top.dot(reps.col(static_cast<Eigen::Index>(m)));
            score[members[m]] = proj * proj;
        }
    }

    // Rank: suspect-class members by descending score, then everyone else;
    // ties and the non-member block order by id.
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const bool ma = dataset.examples[a].label == suspect_label;
        const bool mb = dataset.examples[b].label == suspect_label;
        if (ma != mb) return ma;
        if (ma && score[a] != score[b]) return score[a] > score[b];
        return dataset.examples[a].id < dataset.examples[b].id;
    });

    std::vector<NodeId> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out.push_back(dataset.examples[order[static_cast<std::size_t>(i)]].id);
    std::sort(out.begin(), out.end());
    return out;
}

DetectionMetrics detection_metrics(const std::vector<NodeId>& removed,
                                   const PoisonRecord& record) {
    if (removed.empty()) throw config_error("cannot score an empty removed set");
    if (record.original_labels.empty())
        throw config_error("cannot score detection without poisoned ground truth");
    std::size_t tp = 0;
    for (NodeId id : removed) {
        if (record.is_poisoned(id)) ++tp;
    }
    DetectionMetrics m;
    m.precision = static_cast<double>(tp) / static_cast<double>(removed.size());
    m.recall = static_cast<double>(tp) / static_cast<double>(record.original_labels.size());
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

} // namespace igd
