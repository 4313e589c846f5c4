#include "igd/influence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace igd {

namespace {

// Runs fn(i) for i in [0, n) on `threads` workers. Each index writes disjoint
// state, so results cannot depend on scheduling; the first exception thrown by
// any worker is rethrown on the calling thread.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

void check_compatible(const TrainedModel& model, const Dataset& dataset) {
    if (dataset.modality != model.spec.modality())
        throw config_error("dataset modality does not match model family");
}

} // namespace

std::string to_string(IhvpMethod m) {
    return m == IhvpMethod::explicit_solve ? "explicit" : "cg";
}

IhvpMethod ihvp_method_from_string(const std::string& s) {
    if (s == "explicit") return IhvpMethod::explicit_solve;
    if (s == "cg") return IhvpMethod::conjugate_gradient;
    throw config_error("unknown ihvp method: " + s);
}

void IhvpConfig::validate() const {
    if (!(damping > 0.0)) throw config_error("ihvp damping must be positive");
    if (!(cg_tolerance > 0.0)) throw config_error("cg_tolerance must be positive");
    if (cg_max_iters < 0) throw config_error("cg_max_iters must be non-negative");
    if (explicit_cap < 1) throw config_error("explicit_cap must be >= 1");
}

void InfluenceMatrix::validate() const {
    if (scores.rows() != scores.cols()) throw config_error("influence matrix is not square");
    if (static_cast<std::size_t>(scores.rows()) != ids.size())
        throw config_error("influence matrix ids do not match its size");
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        if (scores(i, i) != 0.0) throw config_error("influence matrix diagonal must be zero");
    }
    if (!scores.allFinite()) throw config_error("influence matrix has non-finite entries");
    if (abs_scores && scores.minCoeff() < 0.0)
        throw config_error("abs-valued influence matrix has negative entries");
}

CgResult cg_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                  const Eigen::VectorXd& b, double tolerance, long max_iters) {
    CgResult result;
    result.x = Eigen::VectorXd::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) return result;

    Eigen::VectorXd r = b;
    Eigen::VectorXd p = r;
    double rs = r.squaredNorm();
    for (long iter = 1; iter <= max_iters; ++iter) {
        const Eigen::VectorXd ap = apply(p);
        const double curvature = p.dot(ap);
        if (!(curvature > 0.0))
            throw solver_error("conjugate gradient found non-positive curvature; "
                               "operator is not positive definite",
                               std::sqrt(rs) / bnorm, iter);
        const double alpha = rs / curvature;
        result.x += alpha * p;
        r -= alpha * ap;
        const double rs_next = r.squaredNorm();
        result.iterations = iter;
        result.rel_residual = std::sqrt(rs_next) / bnorm;
        if (result.rel_residual <= tolerance) return result;
        p = r + (rs_next / rs) * p;
        rs = rs_next;
    }
    throw solver_error("conjugate gradient did not reach tolerance " + std::to_string(tolerance),
                       result.rel_residual, result.iterations);
}

Eigen::MatrixXd assemble_damped_hessian(const TrainedModel& model, const Dataset& dataset,
                                        double damping) {
    const Eigen::Index p = model.params.size();
    Eigen::MatrixXd h(p, p);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        e[i] = 1.0;
        h.col(i) = hvp(model, dataset, e);
        e[i] = 0.0;
    }
    // hvp is exact, so asymmetry is pure floating-point noise; symmetrize for LLT.
    h = 0.5 * (h + h.transpose()).eval();
    h.diagonal().array() += damping;
    return h;
}

IhvpSolver::IhvpSolver(const TrainedModel& model, const Dataset& dataset, const IhvpConfig& cfg)
    : model_(model), dataset_(dataset), cfg_(cfg) {
    cfg_.validate();
    check_compatible(model, dataset);
    if (cfg_.method == IhvpMethod::explicit_solve) {
        const Eigen::Index p = model.params.size();
        if (p > cfg_.explicit_cap)
            throw config_error("explicit ihvp refused: " + std::to_string(p) +
                               " parameters exceed the cap of " + std::to_string(cfg_.explicit_cap));
        llt_ = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(
            assemble_damped_hessian(model, dataset, cfg_.damping));
        if (llt_->info() != Eigen::Success)
            throw solver_error("damped Hessian is not positive definite", 0.0, 0);
    }
}

Eigen::VectorXd IhvpSolver::solve(const Eigen::VectorXd& g) const {
    if (g.size() != model_.params.size())
        throw config_error("ihvp right-hand side size does not match parameter count");
    if (cfg_.method == IhvpMethod::explicit_solve) return llt_->solve(g);
    const long max_iters =
        cfg_.cg_max_iters > 0 ? cfg_.cg_max_iters : 10 * static_cast<long>(g.size());
    auto apply = [this](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return hvp(model_, dataset_, v) + cfg_.damping * v;
    };
    return cg_solve(apply, g, cfg_.cg_tolerance, max_iters).x;
}

Eigen::VectorXd ihvp(const TrainedModel& model, const Dataset& dataset, const Eigen::VectorXd& g,
                     const IhvpConfig& cfg) {
    return IhvpSolver(model, dataset, cfg).solve(g);
}

Eigen::VectorXd influence_on_params(const TrainedModel& model, const Dataset& dataset,
                                    const Example& z, const IhvpConfig& cfg) {
    return -ihvp(model, dataset, grad_loss(model, z), cfg);
}

double pairwise_influence(const TrainedModel& model, const Dataset& dataset, std::size_t i,
                          std::size_t j, const IhvpConfig& cfg) {
    if (i >= dataset.size() || j >= dataset.size())
        throw config_error("pairwise influence index out of range");
    if (i == j) throw config_error("pairwise influence needs two distinct points");
    const Eigen::VectorXd x = ihvp(model, dataset, grad_loss(model, dataset.examples[i]), cfg);
    return -grad_outcome(model, dataset.examples[j]).dot(x);
}

double example_to_word_influence(const TrainedModel& model, const Dataset& dataset,
                                 const Example& z1, const Example& z2, int token_pos,
                                 const IhvpConfig& cfg) {
    const Eigen::VectorXd v = influence_on_params(model, dataset, z1, cfg);
    return mixed_grad_vec(model, z2, token_pos, v).norm();
}

double text_pairwise_influence(const TrainedModel& model, const Dataset& dataset,
                               const Example& z1, const Example& z2, const IhvpConfig& cfg) {
    if (z2.tokens.empty()) throw config_error("text influence target has no tokens");
    const Eigen::VectorXd v = influence_on_params(model, dataset, z1, cfg);
    double best = -std::numeric_limits<double>::infinity();
    for (int pos = 0; pos < static_cast<int>(z2.tokens.size()); ++pos)
        best = std::max(best, mixed_grad_vec(model, z2, pos, v).norm());
    return best;
}

InfluenceMatrix all_pairs_influence(const TrainedModel& model, const Dataset& dataset,
                                    const IhvpConfig& cfg, const InfluenceOptions& opts) {
    check_compatible(model, dataset);
    const std::size_t n = dataset.size();
    const IhvpSolver solver(model, dataset, cfg);

    InfluenceMatrix out;
    out.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.ids.reserve(n);
    for (const Example& z : dataset.examples) out.ids.push_back(z.id);
    out.damping = cfg.damping;
    out.method = cfg.method;
    out.abs_scores = opts.abs_scores;
    out.model_hash = model_hash(model);

    // Phase 1: one solve per source point.
    std::vector<Eigen::VectorXd> deltas(n); // -(H + lambda I)^-1 grad_loss(z_i)
    parallel_for(n, opts.threads, [&](std::size_t i) {
        deltas[i] = -solver.solve(grad_loss(model, dataset.examples[i]));
    });

    // Phase 2: score every ordered pair against the cached solves.
    if (dataset.modality == Modality::dense) {
        std::vector<Eigen::VectorXd> outcome_grads(n);
        parallel_for(n, opts.threads, [&](std::size_t j) {
            outcome_grads[j] = grad_outcome(model, dataset.examples[j]);
        });
        parallel_for(n, opts.threads, [&](std::size_t i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    deltas[i].dot(outcome_grads[j]);
            }
        });
    } else {
        parallel_for(n, opts.threads, [&](std::size_t i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const Example& z2 = dataset.examples[j];
                double best = -std::numeric_limits<double>::infinity();
                for (int pos = 0; pos < static_cast<int>(z2.tokens.size()); ++pos)
                    best = std::max(best, mixed_grad_vec(model, z2, pos, deltas[i]).norm());
                out.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = best;
            }
        });
    }

    if (opts.abs_scores) out.scores = out.scores.cwiseAbs();
    return out;
}

} // namespace igd
