#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "igd/model.hpp"
#include "igd/types.hpp"

namespace igd {

enum class AttackKind { feature_trigger, token_insert };

std::string to_string(AttackKind k);
AttackKind attack_kind_from_string(const std::string& s);

struct AttackSpec {
    AttackKind kind = AttackKind::feature_trigger;
    int target_label = 0;
    double epsilon = 0.1; // poisoned fraction of the training set
    std::uint64_t seed = 0;

    // feature_trigger: coordinate overrides applied to the feature vector.
    std::vector<std::pair<int, double>> feature_overrides;
    // token_insert: one of these is inserted at a random position. Empty
    // means "the reserved trigger tail of the vocabulary" and is resolved
    // against the model/dataset at use.
    std::vector<TokenId> trigger_tokens;

    long poison_count(std::size_t n) const; // round(epsilon * N)
    void validate(const Dataset& dataset) const;
};

// Ground truth of an injection: which ids were poisoned and their labels
// before the flip. Combined with the poisoned dataset this reconstructs the
// clean one.
struct PoisonRecord {
    std::vector<NodeId> poisoned_ids; // sorted
    std::map<NodeId, int> original_labels;

    bool is_poisoned(NodeId id) const { return original_labels.count(id) != 0; }
};

struct GaussianBlobsParams {
    long n = 0;
    int num_classes = 0;
    int dim = 0;
    // Each class mean sits at `separation` along its own axis (class c uses
    // axis c mod dim, negated on wraparound); unit-variance isotropic noise.
    double separation = 4.0;
    double noise_sigma = 1.0;
};

struct TokenSyntheticParams {
    long n = 0;
    int num_classes = 0;
    int vocab_size = 0;
    int seq_min = 6;
    int seq_max = 12;
    // Probability a token is drawn uniformly instead of from the label's
    // vocabulary slice.
    double noise = 0.3;
    // Trailing vocabulary ids never emitted by the clean generator; the
    // default trigger pool.
    int reserved_tail = 5;
};

enum class DatasetKind { gaussian_blobs, token_synthetic };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(const std::string& s);

Dataset generate_gaussian_blobs(const GaussianBlobsParams& params, std::uint64_t seed);
Dataset generate_token_synthetic(const TokenSyntheticParams& params, std::uint64_t seed);

// Default trigger pool for a token dataset: the reserved vocabulary tail.
std::vector<TokenId> default_trigger_tokens(int vocab_size, int reserved_tail);

// Poisons round(epsilon * N) uniformly chosen non-target examples: applies
// the trigger, relabels to the target, returns the new dataset plus ground
// truth. Clean examples are copied verbatim.
std::pair<Dataset, PoisonRecord> inject(const Dataset& dataset, const AttackSpec& spec);

// Fraction of triggered non-target test examples the model labels as the
// attack target. Labels are left untouched; only triggers are applied.
double attack_success_rate(const TrainedModel& model, const Dataset& clean_test,
                           const AttackSpec& spec);

} // namespace igd
