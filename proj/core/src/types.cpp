#include "igd/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace igd {

std::string to_string(Modality m) {
    return m == Modality::dense ? "dense" : "tokens";
}

Modality modality_from_string(const std::string& s) {
    if (s == "dense") return Modality::dense;
    if (s == "tokens") return Modality::tokens;
    throw config_error("unknown modality: " + s);
}

int Dataset::feature_dim() const {
    if (examples.empty() || modality != Modality::dense) return 0;
    return static_cast<int>(examples.front().features.size());
}

TokenId Dataset::max_token() const {
    TokenId m = -1;
    for (const auto& ex : examples) {
        for (TokenId t : ex.tokens) m = std::max(m, t);
    }
    return m;
}

void Dataset::validate() const {
    if (examples.empty()) throw config_error("dataset is empty");
    if (num_classes < 2) throw config_error("dataset needs at least 2 classes");

    std::unordered_set<NodeId> seen;
    seen.reserve(examples.size());
    const std::size_t dim = examples.front().features.size();
    for (const auto& ex : examples) {
        if (!seen.insert(ex.id).second)
            throw config_error("duplicate example id " + std::to_string(ex.id));
        if (ex.label < 0 || ex.label >= num_classes)
            throw config_error("label " + std::to_string(ex.label) + " out of range for example " +
                               std::to_string(ex.id));
        if (modality == Modality::dense) {
            if (!ex.tokens.empty() || ex.features.size() != dim)
                throw config_error("inconsistent dense payload for example " +
                                   std::to_string(ex.id));
            for (double f : ex.features) {
                if (!std::isfinite(f))
                    throw config_error("non-finite feature in example " + std::to_string(ex.id));
            }
        } else {
            if (!ex.features.empty() || ex.tokens.empty())
                throw config_error("inconsistent token payload for example " +
                                   std::to_string(ex.id));
            for (TokenId t : ex.tokens) {
                if (t < 0)
                    throw config_error("negative token id in example " + std::to_string(ex.id));
            }
        }
    }
}

} // namespace igd
