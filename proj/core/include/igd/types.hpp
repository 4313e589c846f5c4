#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace igd {

using NodeId = std::int64_t;
using TokenId = std::int32_t;

enum class Modality { dense, tokens };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

// Invalid user-supplied configuration or arguments. The CLI maps this to
// exit code 2; every other igd exception maps to exit code 3.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class training_diverged : public std::runtime_error {
public:
    training_diverged(const std::string& what, long step)
        : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

class solver_error : public std::runtime_error {
public:
    solver_error(const std::string& what, double residual, long iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    long iterations() const { return iterations_; }

private:
    double residual_;
    long iterations_;
};

// One training point. Exactly one of features/tokens is populated,
// according to the owning dataset's modality.
struct Example {
    NodeId id = 0;
    int label = 0;
    std::vector<double> features;
    std::vector<TokenId> tokens;
};

struct Dataset {
    Modality modality = Modality::dense;
    int num_classes = 0;
    std::vector<Example> examples;

    std::size_t size() const { return examples.size(); }
    int feature_dim() const;
    TokenId max_token() const;

    // Checks the structural invariants: nonempty, uniform modality and
    // dimensionality, labels in [0, num_classes), unique ids.
    void validate() const;
};

} // namespace igd
