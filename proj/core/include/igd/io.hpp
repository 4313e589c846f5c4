#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "igd/extract.hpp"
#include "igd/graph.hpp"
#include "igd/influence.hpp"
#include "igd/model.hpp"
#include "igd/poison.hpp"
#include "igd/types.hpp"

namespace igd {

// Dataset text format, one example per line:
//   dense : id,label,f1,...,fd
//   tokens: id,label,t1 t2 ... tk     (space-separated token ids)
// A line with exactly three comma fields and no space in the third is read
// as dense unless `modality` says otherwise. Floats are written shortest
// round-trip, so write/read is lossless.
Dataset read_dataset(const std::filesystem::path& path,
                     std::optional<Modality> modality = std::nullopt,
                     std::optional<int> num_classes = std::nullopt);
void write_dataset(const std::filesystem::path& path, const Dataset& dataset);

// Model checkpoint: versioned JSON holding the spec, train config, final
// gradient norm and flat parameters. Numeric round-trip is exact.
void write_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel read_model(const std::filesystem::path& path);

// Influence matrix container: little-endian binary, magic "IGDINFL\0",
// version, n, damping, method, abs flag, model hash, ids, row-major scores.
void write_influence_matrix(const std::filesystem::path& path, const InfluenceMatrix& m);
InfluenceMatrix read_influence_matrix(const std::filesystem::path& path);
void write_influence_csv(const std::filesystem::path& path, const InfluenceMatrix& m);

// Graph container: little-endian binary, magic "IGDGRPH\0", version, n,
// ids, upper-triangular weights. Lossless round-trip; deserialization
// rejects unknown versions, truncation and non-finite payloads.
void write_graph(const std::filesystem::path& path, const InfluenceGraph& g);
InfluenceGraph read_graph(const std::filesystem::path& path);
void write_graph_csv(const std::filesystem::path& path, const InfluenceGraph& g);

// Extraction result record (JSON).
void write_subgraph(const std::filesystem::path& path, const Subgraph& s,
                    const std::string& algorithm, int k, const std::string& objective);
Subgraph read_subgraph(const std::filesystem::path& path);

// PoisonRecord as CSV: header, then one "id,original_label" row per example.
void write_poison_record(const std::filesystem::path& path, const PoisonRecord& record);
PoisonRecord read_poison_record(const std::filesystem::path& path);

// Shortest round-trip decimal rendering of a double (std::to_chars).
std::string format_double(double x);

} // namespace igd
