#include "igd/poison.hpp"

#include <algorithm>
#include <cmath>

#include "igd/rng.hpp"

namespace igd {

std::string to_string(AttackKind k) {
    return k == AttackKind::feature_trigger ? "feature_trigger" : "token_insert";
}

AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "feature_trigger") return AttackKind::feature_trigger;
    if (s == "token_insert") return AttackKind::token_insert;
    throw config_error("unknown attack kind: " + s);
}

std::string to_string(DatasetKind k) {
    return k == DatasetKind::gaussian_blobs ? "gaussian_blobs" : "token_synthetic";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "gaussian_blobs") return DatasetKind::gaussian_blobs;
    if (s == "token_synthetic") return DatasetKind::token_synthetic;
    throw config_error("unknown dataset kind: " + s);
}

long AttackSpec::poison_count(std::size_t n) const {
    return std::llround(epsilon * static_cast<double>(n));
}

void AttackSpec::validate(const Dataset& dataset) const {
    if (!(epsilon > 0.0) || epsilon >= 1.0) throw config_error("epsilon must be in (0, 1)");
    if (target_label < 0 || target_label >= dataset.num_classes)
        throw config_error("attack target label out of range");
    if (kind == AttackKind::feature_trigger) {
        if (dataset.modality != Modality::dense)
            throw config_error("feature trigger needs a dense dataset");
        if (feature_overrides.empty())
            throw config_error("feature trigger has no coordinate overrides");
        for (const auto& [idx, value] : feature_overrides) {
            (void)value;
            if (idx < 0 || idx >= dataset.feature_dim())
                throw config_error("feature override index " + std::to_string(idx) +
                                   " out of range");
        }
    } else {
        if (dataset.modality != Modality::tokens)
            throw config_error("token trigger needs a token dataset");
        if (trigger_tokens.empty())
            throw config_error("token trigger pool is empty; resolve the default pool first");
        for (TokenId t : trigger_tokens) {
            if (t < 0) throw config_error("negative trigger token id");
        }
    }
    std::size_t non_target = 0;
    for (const Example& z : dataset.examples) {
        if (z.label != target_label) ++non_target;
    }
    const long count = poison_count(dataset.size());
    if (count < 1) throw config_error("poison budget rounds to zero examples");
    if (static_cast<std::size_t>(count) > non_target)
        throw config_error("poison budget exceeds the available non-target examples");
}

Dataset generate_gaussian_blobs(const GaussianBlobsParams& params, std::uint64_t seed) {
    if (params.n < 1) throw config_error("blob generator needs n >= 1");
    if (params.num_classes < 2) throw config_error("blob generator needs >= 2 classes");
    if (params.dim < 1) throw config_error("blob generator needs dim >= 1");
    if (params.num_classes > 2 * params.dim)
        throw config_error("blob generator supports at most 2 * dim classes");
    if (!(params.noise_sigma > 0.0)) throw config_error("noise_sigma must be positive");

    rng::Engine eng(seed);
    Dataset out;
    out.modality = Modality::dense;
    out.num_classes = params.num_classes;
    out.examples.reserve(static_cast<std::size_t>(params.n));
    for (long i = 0; i < params.n; ++i) {
        Example z;
        z.id = i;
        z.label = static_cast<int>(rng::uniform_index(eng, static_cast<std::uint64_t>(params.num_classes)));
        const int axis = z.label % params.dim;
        const double sign = (z.label / params.dim) % 2 == 0 ? 1.0 : -1.0;
        z.features.resize(static_cast<std::size_t>(params.dim));
        for (int d = 0; d < params.dim; ++d) {
            const double mean = d == axis ? sign * params.separation : 0.0;
            z.features[static_cast<std::size_t>(d)] = mean + params.noise_sigma * rng::normal(eng);
        }
        out.examples.push_back(std::move(z));
    }
    return out;
}

Dataset generate_token_synthetic(const TokenSyntheticParams& params, std::uint64_t seed) {
    if (params.n < 1) throw config_error("token generator needs n >= 1");
    if (params.num_classes < 2) throw config_error("token generator needs >= 2 classes");
    if (params.reserved_tail < 0) throw config_error("reserved_tail must be non-negative");
    const int usable = params.vocab_size - params.reserved_tail;
    if (usable < params.num_classes)
        throw config_error("vocabulary too small for the class count after the reserved tail");
    if (params.seq_min < 1 || params.seq_max < params.seq_min)
        throw config_error("invalid sequence length range");
    if (params.noise < 0.0 || params.noise >= 1.0) throw config_error("noise must be in [0, 1)");

    const int slice = usable / params.num_classes;
    rng::Engine eng(seed);
    Dataset out;
    out.modality = Modality::tokens;
    out.num_classes = params.num_classes;
    out.examples.reserve(static_cast<std::size_t>(params.n));
    for (long i = 0; i < params.n; ++i) {
        Example z;
        z.id = i;
        z.label = static_cast<int>(rng::uniform_index(eng, static_cast<std::uint64_t>(params.num_classes)));
        const long len = params.seq_min +
                         static_cast<long>(rng::uniform_index(
                             eng, static_cast<std::uint64_t>(params.seq_max - params.seq_min + 1)));
        z.tokens.reserve(static_cast<std::size_t>(len));
        const int lo = z.label * slice;
        for (long t = 0; t < len; ++t) {
            if (rng::uniform01(eng) < params.noise) {
                z.tokens.push_back(static_cast<TokenId>(
                    rng::uniform_index(eng, static_cast<std::uint64_t>(usable))));
            } else {
                z.tokens.push_back(static_cast<TokenId>(
                    lo + static_cast<int>(rng::uniform_index(eng, static_cast<std::uint64_t>(slice)))));
            }
        }
        out.examples.push_back(std::move(z));
    }
    return out;
}

std::vector<TokenId> default_trigger_tokens(int vocab_size, int reserved_tail) {
    if (reserved_tail < 1 || reserved_tail > vocab_size)
        throw config_error("reserved trigger tail must be in [1, vocab_size]");
    std::vector<TokenId> out;
    out.reserve(static_cast<std::size_t>(reserved_tail));
    for (int t = vocab_size - reserved_tail; t < vocab_size; ++t)
        out.push_back(static_cast<TokenId>(t));
    return out;
}

namespace {

void apply_trigger(Example& z, const AttackSpec& spec, rng::Engine& eng) {
    if (spec.kind == AttackKind::feature_trigger) {
        for (const auto& [idx, value] : spec.feature_overrides)
            z.features[static_cast<std::size_t>(idx)] = value;
    } else {
        const TokenId trigger =
            spec.trigger_tokens[rng::uniform_index(eng, spec.trigger_tokens.size())];
        const std::size_t pos =
            static_cast<std::size_t>(rng::uniform_index(eng, z.tokens.size() + 1));
        z.tokens.insert(z.tokens.begin() + static_cast<std::ptrdiff_t>(pos), trigger);
    }
}

} // namespace

std::pair<Dataset, PoisonRecord> inject(const Dataset& dataset, const AttackSpec& spec) {
    dataset.validate();
    spec.validate(dataset);

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.examples[i].label != spec.target_label) candidates.push_back(i);
    }
    const std::size_t count = static_cast<std::size_t>(spec.poison_count(dataset.size()));

    rng::Engine eng(spec.seed);
    // Partial Fisher-Yates; the first `count` entries are the victims.
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng::uniform_index(eng, candidates.size() - i);
        std::swap(candidates[i], candidates[j]);
    }
    std::vector<char> chosen(dataset.size(), 0);
    for (std::size_t i = 0; i < count; ++i) chosen[candidates[i]] = 1;

    Dataset poisoned = dataset;
    PoisonRecord record;
    // Trigger draws happen in dataset order so the result does not depend on
    // the selection order above.
    for (std::size_t i = 0; i < poisoned.size(); ++i) {
        if (!chosen[i]) continue;
        Example& z = poisoned.examples[i];
        record.original_labels.emplace(z.id, z.label);
        record.poisoned_ids.push_back(z.id);
        apply_trigger(z, spec, eng);
        z.label = spec.target_label;
    }
    std::sort(record.poisoned_ids.begin(), record.poisoned_ids.end());
    return {std::move(poisoned), std::move(record)};
}

double attack_success_rate(const TrainedModel& model, const Dataset& clean_test,
                           const AttackSpec& spec) {
    if (clean_test.modality != model.spec.modality())
        throw config_error("test set modality does not match the model");
    if (spec.kind == AttackKind::token_insert && spec.trigger_tokens.empty())
        throw config_error("token trigger pool is empty; resolve the default pool first");

    rng::Engine eng(spec.seed);
    std::size_t hits = 0, total = 0;
    for (const Example& original : clean_test.examples) {
        if (original.label == spec.target_label) continue;
        Example z = original;
        apply_trigger(z, spec, eng);
        ++total;
        if (predict(model, z) == spec.target_label) ++hits;
    }
    if (total == 0) throw config_error("test set has no non-target examples");
    return static_cast<double>(hits) / static_cast<double>(total);
}

} // namespace igd
