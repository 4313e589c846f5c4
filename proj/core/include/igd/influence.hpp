#pragma once

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <functional>
#include <memory>
#include <vector>

#include "igd/model.hpp"
#include "igd/types.hpp"

namespace igd {

enum class IhvpMethod { explicit_solve, conjugate_gradient };

std::string to_string(IhvpMethod m);
IhvpMethod ihvp_method_from_string(const std::string& s);

struct IhvpConfig {
    IhvpMethod method = IhvpMethod::conjugate_gradient;
    double damping = 1e-3;       // lambda in (H + lambda I) x = g
    double cg_tolerance = 1e-8;  // relative residual |r| / |g|
    long cg_max_iters = 0;       // 0 -> 10 * p
    int explicit_cap = 2000;     // refuse to assemble beyond this p

    void validate() const;
};

struct InfluenceOptions {
    bool abs_scores = false; // store |score| instead of the signed value
    unsigned threads = 0;    // 0 -> hardware concurrency
};

// Directed pairwise influence scores; entry (i, j) is the influence of
// training point i on the gold-label probability at training point j.
// Diagonal fixed at zero.
struct InfluenceMatrix {
    Eigen::MatrixXd scores;
    std::vector<NodeId> ids;
    double damping = 0.0;
    IhvpMethod method = IhvpMethod::conjugate_gradient;
    bool abs_scores = false;
    std::uint64_t model_hash = 0;

    std::size_t n() const { return static_cast<std::size_t>(scores.rows()); }
    void validate() const;
};

// Conjugate gradient on a matrix-free SPD operator. Exposed for tests.
struct CgResult {
    Eigen::VectorXd x;
    double rel_residual = 0.0;
    long iterations = 0;
};
CgResult cg_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                  const Eigen::VectorXd& b, double tolerance, long max_iters);

// Dense damped Hessian of the training objective, assembled one hvp column
// at a time and symmetrized.
Eigen::MatrixXd assemble_damped_hessian(const TrainedModel& model, const Dataset& dataset,
                                        double damping);

// Reusable (H + lambda I)^-1 applier: the explicit method assembles and
// factors once and serves any number of right-hand sides; the CG method
// solves matrix-free per call. solve() is const and thread-safe.
class IhvpSolver {
public:
    IhvpSolver(const TrainedModel& model, const Dataset& dataset, const IhvpConfig& cfg);
    Eigen::VectorXd solve(const Eigen::VectorXd& g) const;

private:
    const TrainedModel& model_;
    const Dataset& dataset_;
    IhvpConfig cfg_;
    std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>> llt_; // explicit method only
};

// x solving (H + damping I) x = g, where H is the model's training-objective
// Hessian over `dataset`.
Eigen::VectorXd ihvp(const TrainedModel& model, const Dataset& dataset, const Eigen::VectorXd& g,
                     const IhvpConfig& cfg);

// Predicted parameter change direction from upweighting z: -ihvp(grad_loss(z)).
Eigen::VectorXd influence_on_params(const TrainedModel& model, const Dataset& dataset,
                                    const Example& z, const IhvpConfig& cfg);

// -grad_outcome(z_j)^T (H + lambda I)^-1 grad_loss(z_i); i != j.
double pairwise_influence(const TrainedModel& model, const Dataset& dataset, std::size_t i,
                          std::size_t j, const IhvpConfig& cfg);

// L2 norm of the predicted change of the activation-gradient at token_pos of
// z2 when z1 is upweighted. Token models only; nonnegative.
double example_to_word_influence(const TrainedModel& model, const Dataset& dataset,
                                 const Example& z1, const Example& z2, int token_pos,
                                 const IhvpConfig& cfg);

// Max of example_to_word_influence over the token positions of z2.
double text_pairwise_influence(const TrainedModel& model, const Dataset& dataset,
                               const Example& z1, const Example& z2, const IhvpConfig& cfg);

// All-pairs influence matrix. Performs the N right-hand-side solves up front
// (sharing one factorization under the explicit method), then fills entries;
// results are identical to the per-pair calls and independent of thread
// scheduling. Dense datasets score with pairwise_influence semantics, token
// datasets with text_pairwise_influence semantics.
InfluenceMatrix all_pairs_influence(const TrainedModel& model, const Dataset& dataset,
                                    const IhvpConfig& cfg, const InfluenceOptions& opts = {});

} // namespace igd
