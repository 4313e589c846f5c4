#pragma once

#include <vector>

#include "igd/model.hpp"
#include "igd/poison.hpp"
#include "igd/types.hpp"

namespace igd {

// Spectral-signature detector: centers the representations of the suspect
// class, takes their top principal direction, and flags the k examples with
// the largest squared projection. Examples outside the suspect class rank
// below every member; ties break toward smaller ids, so k = N returns all
// ids. Returned ids are sorted ascending.
std::vector<NodeId> spectral_baseline(const TrainedModel& model, const Dataset& dataset,
                                      int suspect_label, int k);

struct DetectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Standard set-overlap metrics of `removed` against the poisoned ground
// truth; errors on an empty removed set.
DetectionMetrics detection_metrics(const std::vector<NodeId>& removed, const PoisonRecord& record);

} // namespace igd
