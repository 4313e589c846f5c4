#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "igd/extract.hpp"
#include "igd/influence.hpp"
#include "igd/model.hpp"
#include "igd/poison.hpp"
#include "igd/spectral.hpp"
#include "igd/types.hpp"

namespace igd {

enum class Extractor { greedy, agglomerative, brute_force, spectral_baseline };

std::string to_string(Extractor e);
Extractor extractor_from_string(const std::string& s);

struct DataConfig {
    DatasetKind kind = DatasetKind::gaussian_blobs;
    GaussianBlobsParams blobs;
    TokenSyntheticParams tokens;
    long test_n = 400;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "igd-out";
    DataConfig data;
    ModelSpec model;
    TrainConfig train;
    AttackSpec attack;
    IhvpConfig ihvp;
    bool abs_scores = false;
    Extractor extractor = Extractor::agglomerative;
    MergeObjective objective = MergeObjective::edge_mean;
    double budget_multiplier = 1.5;
    unsigned threads = 0;    // 0 -> hardware concurrency
    bool emit_csv = true;    // influence/graph CSV exports and histograms

    void validate() const;

    // Flat key-value config ("key = value" lines, '#' comments). `overrides`
    // wins over file values; unknown keys are rejected.
    static PipelineConfig from_file(const std::filesystem::path& path,
                                    const std::map<std::string, std::string>& overrides = {});
    static PipelineConfig from_keys(const std::map<std::string, std::string>& keys);
    std::map<std::string, std::string> to_keys() const;
};

struct StageTiming {
    std::string stage;
    double seconds = 0.0;
};

struct DefenseReport {
    double att_suc_before = 0.0;
    double att_suc_after = 0.0;
    double clean_acc_before = 0.0;
    double clean_acc_after = 0.0;
    DetectionMetrics detection;
    std::vector<NodeId> removed_ids; // exactly k, sorted
    double extractor_score = 0.0;    // avg_score of the removed set
    int k = 0;
    // Same extractor re-run at the assumed poisoned count round(eps*N).
    int k_eps = 0;
    DetectionMetrics detection_eps;
    double extractor_score_eps = 0.0;
    double train_final_grad_norm = 0.0;
    double retrain_final_grad_norm = 0.0;
    // Wall-clock per stage; serialized to a sidecar file, never into
    // report.json, which must be byte-identical across reruns.
    std::vector<StageTiming> timings;
};

// Runs the full defense: generate, poison, train, influence, graph, extract,
// filter, retrain, evaluate. Writes every stage artifact plus report.json,
// report_row.csv and timings.csv under cfg.out_dir. Deterministic per seed:
// rerunning a config byte-reproduces every artifact except timings.csv.
DefenseReport run_defense(const PipelineConfig& cfg);

std::string report_to_json(const DefenseReport& report, const PipelineConfig& cfg);
std::string report_csv_header();
std::string report_csv_row(const DefenseReport& report, const PipelineConfig& cfg);

struct SweepSpec {
    PipelineConfig base;
    std::vector<double> epsilons;
    std::vector<Extractor> extractors;
    std::vector<std::uint64_t> seeds;
    unsigned jobs = 1;
};

struct SweepOutcome {
    int failures = 0;
    std::filesystem::path csv_path;
};

// Grid over epsilon x extractor x seed; each combination runs in its own
// subdirectory of base.out_dir, `jobs` at a time. Aggregates report rows
// into sweep.csv; a failed combination is recorded and does not stop the
// rest.
SweepOutcome run_sweep(const SweepSpec& spec);

// Resolves an output path against the IGD_OUTPUT_ROOT environment variable:
// relative paths land under the root when it is set.
std::filesystem::path resolve_output_path(const std::filesystem::path& p);

// Plot-ready equal-width histogram (bin_lo,bin_hi,count rows).
void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& values,
                         int bins = 32);

} // namespace igd
