#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "igd/types.hpp"

namespace igd {

enum class ModelFamily { logistic, mlp, embedbag };

std::string to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& s);

// Flat parameter layouts (row-major matrices):
//   logistic : W ((C-1) x d_in), b (C-1)        -- class 0 is the reference
//   mlp      : W1 (h x d_in), b1 (h), W2 (C x h), b2 (C), tanh hidden
//   embedbag : E (V x d), W (C x d), b (C), mean-pooled token embeddings
struct ModelSpec {
    ModelFamily family = ModelFamily::logistic;
    int num_classes = 0;
    int input_dim = 0;  // logistic, mlp
    int hidden_dim = 0; // mlp
    int vocab_size = 0; // embedbag
    int embed_dim = 0;  // embedbag

    Modality modality() const;
    std::size_t param_count() const;
    void validate() const;
};

struct TrainConfig {
    double learning_rate = 0.1;
    long steps = 1000;
    double l2_weight = 1e-3;
    std::uint64_t seed = 0;
    // Optional early stop once the objective gradient norm falls below this
    // (0 disables). Stopping is a function of the data alone, so training
    // stays deterministic.
    double grad_tolerance = 0.0;

    void validate() const;
};

// Immutable after training; all query operations are const and thread-safe.
struct TrainedModel {
    ModelSpec spec;
    Eigen::VectorXd params;
    TrainConfig train_config;
    double final_grad_norm = 0.0;
};

struct TrainResult {
    TrainedModel model;
    // Objective value (mean cross-entropy + L2 term) at every iterate,
    // including the final one; size steps_taken + 1.
    std::vector<double> objective_history;
    long steps_taken = 0;
};

// Full-batch gradient descent on mean cross-entropy + (l2_weight/2)*|theta|^2.
// Deterministic per cfg.seed. Throws training_diverged if the objective
// stops being finite.
TrainResult train(const Dataset& dataset, const ModelSpec& spec, const TrainConfig& cfg);

// Cross-entropy of the model's class distribution at z's gold label.
// Excludes the L2 term, which belongs to the training objective only.
double loss(const TrainedModel& model, const Example& z);

Eigen::VectorXd grad_loss(const TrainedModel& model, const Example& z);

// Softmax probability assigned to z's gold label.
double outcome_score(const TrainedModel& model, const Example& z);

Eigen::VectorXd grad_outcome(const TrainedModel& model, const Example& z);

// Exact Hessian-vector product of the mean training loss (plus the L2 term
// the model was trained with) at the model's parameters.
Eigen::VectorXd hvp(const TrainedModel& model, const Dataset& dataset, const Eigen::VectorXd& v);

// Directional derivative along v (in parameter space) of the gradient of the
// gold-label probability with respect to the embedding activation used at
// token_pos. Central differences with step 1e-4 * (1 + |v|_inf); the d x p
// mixed-derivative matrix is never materialized. embedbag only.
Eigen::VectorXd mixed_grad_vec(const TrainedModel& model, const Example& z, int token_pos,
                               const Eigen::VectorXd& v);

// Gradient of the gold-label probability with respect to the embedding
// activation at token_pos (the vector whose parameter-derivative
// mixed_grad_vec takes). Exposed for tests and diagnostics.
Eigen::VectorXd activation_grad_outcome(const TrainedModel& model, const Example& z, int token_pos);

// Input of the layer feeding the softmax: raw features (logistic), tanh
// hidden activations (mlp), or the pooled embedding (embedbag).
Eigen::VectorXd representation(const TrainedModel& model, const Example& z);

int predict(const TrainedModel& model, const Example& z);

double mean_loss(const TrainedModel& model, const Dataset& dataset);
double clean_accuracy(const TrainedModel& model, const Dataset& dataset);

// FNV-1a over spec dimensions and parameter bytes; identifies a checkpoint
// in serialized artifact headers.
std::uint64_t model_hash(const TrainedModel& model);

} // namespace igd
