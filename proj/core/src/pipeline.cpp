#include "igd/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "igd/graph.hpp"
#include "igd/io.hpp"
#include "igd/rng.hpp"

namespace igd {

namespace {

using ordered_json = nlohmann::ordered_json;

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}

    template <typename Fn>
    auto run(const std::string& stage, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record(stage, start);
        } else {
            auto result = fn();
            record(stage, start);
            return result;
        }
    }

private:
    void record(const std::string& stage, std::chrono::steady_clock::time_point start) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
        sink_.push_back({stage, dt.count()});
    }

    std::vector<StageTiming>& sink_;
};

Dataset generate_split(const DataConfig& data, long n, std::uint64_t seed) {
    if (data.kind == DatasetKind::gaussian_blobs) {
        GaussianBlobsParams p = data.blobs;
        p.n = n;
        return generate_gaussian_blobs(p, seed);
    }
    TokenSyntheticParams p = data.tokens;
    p.n = n;
    return generate_token_synthetic(p, seed);
}

Subgraph run_extractor(Extractor extractor, const InfluenceGraph& graph,
                       const TrainedModel& model, const Dataset& dataset,
                       const PipelineConfig& cfg, int k) {
    ExtractionBudget budget;
    budget.k = k;
    switch (extractor) {
    case Extractor::greedy: return greedy_extract(graph, budget);
    case Extractor::agglomerative: return agglomerative_extract(graph, budget, cfg.objective);
    case Extractor::brute_force: return brute_force_extract(graph, budget);
    case Extractor::spectral_baseline: {
        Subgraph s;
        s.nodes = spectral_baseline(model, dataset, cfg.attack.target_label, k);
        s.score = avg_score(graph, s.nodes);
        return s;
    }
    }
    throw config_error("unknown extractor");
}

void write_timings(const std::filesystem::path& path, const std::vector<StageTiming>& timings) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "stage,seconds\n";
    for (const auto& t : timings) out << t.stage << ',' << format_double(t.seconds) << '\n';
    out.flush();
    if (!out) throw io_error("failed writing " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw io_error("failed writing " + path.string());
}

} // namespace

void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& values,
                         int bins) {
    if (bins < 1) throw config_error("histogram needs at least one bin");
    if (values.empty()) throw config_error("histogram needs at least one value");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double span = *hi_it - lo;
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        std::size_t bin = span > 0.0
                              ? static_cast<std::size_t>((v - lo) / span * bins)
                              : 0;
        if (bin >= counts.size()) bin = counts.size() - 1;
        ++counts[bin];
    }
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < counts.size(); ++b) {
        const double width = span > 0.0 ? span / bins : 1.0;
        out << format_double(lo + width * static_cast<double>(b)) << ','
            << format_double(lo + width * static_cast<double>(b + 1)) << ',' << counts[b] << '\n';
    }
    out.flush();
    if (!out) throw io_error("failed writing " + path.string());
}

DefenseReport run_defense(const PipelineConfig& cfg) {
    cfg.validate();
    const std::filesystem::path out = resolve_output_path(cfg.out_dir);
    std::filesystem::create_directories(out);

    DefenseReport report;
    StageClock clock(report.timings);

    // Stage seeds derive from the master seed; the seeds stored inside
    // TrainConfig/AttackSpec by the caller are ignored on purpose.
    const long train_n = cfg.data.kind == DatasetKind::gaussian_blobs ? cfg.data.blobs.n
                                                                      : cfg.data.tokens.n;
    Dataset clean = clock.run("generate", [&] {
        return generate_split(cfg.data, train_n, rng::derive_seed(cfg.seed, "data"));
    });
    Dataset test = generate_split(cfg.data, cfg.data.test_n, rng::derive_seed(cfg.seed, "test"));
    write_dataset(out / "train_clean.csv", clean);
    write_dataset(out / "test_clean.csv", test);

    AttackSpec attack = cfg.attack;
    attack.seed = rng::derive_seed(cfg.seed, "attack");
    if (attack.kind == AttackKind::token_insert && attack.trigger_tokens.empty())
        attack.trigger_tokens =
            default_trigger_tokens(cfg.data.tokens.vocab_size, cfg.data.tokens.reserved_tail);

    auto [poisoned, record] = clock.run("poison", [&] { return inject(clean, attack); });
    write_dataset(out / "train_poisoned.csv", poisoned);
    write_poison_record(out / "poison_record.csv", record);

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = rng::derive_seed(cfg.seed, "train");
    TrainResult trained = clock.run("train", [&] { return train(poisoned, cfg.model, train_cfg); });
    write_model(out / "model.json", trained.model);
    report.train_final_grad_norm = trained.model.final_grad_norm;
    report.clean_acc_before = clean_accuracy(trained.model, test);
    report.att_suc_before = attack_success_rate(trained.model, test, attack);

    InfluenceOptions opts;
    opts.abs_scores = cfg.abs_scores;
    opts.threads = cfg.threads;
    InfluenceMatrix influence = clock.run(
        "influence", [&] { return all_pairs_influence(trained.model, poisoned, cfg.ihvp, opts); });
    write_influence_matrix(out / "influence.bin", influence);
    if (cfg.emit_csv) write_influence_csv(out / "influence.csv", influence);

    InfluenceGraph graph = clock.run("graph", [&] { return build_graph(influence); });
    write_graph(out / "graph.bin", graph);
    if (cfg.emit_csv) {
        write_graph_csv(out / "graph.csv", graph);
        std::vector<double> directed;
        directed.reserve(influence.n() * (influence.n() - 1));
        for (Eigen::Index i = 0; i < influence.scores.rows(); ++i)
            for (Eigen::Index j = 0; j < influence.scores.cols(); ++j)
                if (i != j) directed.push_back(influence.scores(i, j));
        write_histogram_csv(out / "influence_hist.csv", directed);
        write_histogram_csv(out / "edge_weight_hist.csv", graph.upper_weights());
    }

    const std::size_t n = poisoned.size();
    report.k = ExtractionBudget::from_ratio(attack.epsilon, n, cfg.budget_multiplier).k;
    report.k_eps = ExtractionBudget::from_ratio(attack.epsilon, n, 1.0).k;
    Subgraph removed = clock.run("extract", [&] {
        return run_extractor(cfg.extractor, graph, trained.model, poisoned, cfg, report.k);
    });
    Subgraph removed_eps =
        run_extractor(cfg.extractor, graph, trained.model, poisoned, cfg, report.k_eps);
    write_subgraph(out / "removed.json", removed, to_string(cfg.extractor), report.k,
                   to_string(cfg.objective));
    write_subgraph(out / "removed_eps.json", removed_eps, to_string(cfg.extractor), report.k_eps,
                   to_string(cfg.objective));
    report.removed_ids = removed.nodes;
    report.extractor_score = removed.score;
    report.extractor_score_eps = removed_eps.score;
    report.detection = detection_metrics(removed.nodes, record);
    report.detection_eps = detection_metrics(removed_eps.nodes, record);

    if (removed.nodes.size() != static_cast<std::size_t>(report.k))
        throw std::logic_error("extractor returned a set of the wrong size");

    Dataset filtered;
    filtered.modality = poisoned.modality;
    filtered.num_classes = poisoned.num_classes;
    {
        const std::set<NodeId> drop(removed.nodes.begin(), removed.nodes.end());
        for (const Example& z : poisoned.examples) {
            if (drop.count(z.id) == 0) filtered.examples.push_back(z);
        }
        if (filtered.examples.size() + drop.size() != poisoned.size())
            throw std::logic_error("removed set is not disjoint from the retrain set");
    }
    write_dataset(out / "train_filtered.csv", filtered);

    TrainConfig retrain_cfg = cfg.train;
    retrain_cfg.seed = rng::derive_seed(cfg.seed, "retrain");
    TrainResult retrained =
        clock.run("retrain", [&] { return train(filtered, cfg.model, retrain_cfg); });
    write_model(out / "model_retrained.json", retrained.model);
    report.retrain_final_grad_norm = retrained.model.final_grad_norm;
    report.clean_acc_after = clean_accuracy(retrained.model, test);
    report.att_suc_after = attack_success_rate(retrained.model, test, attack);

    write_text(out / "report.json", report_to_json(report, cfg));
    write_text(out / "report_row.csv", report_csv_header() + "\n" + report_csv_row(report, cfg) + "\n");
    write_timings(out / "timings.csv", report.timings);
    return report;
}

std::string report_to_json(const DefenseReport& report, const PipelineConfig& cfg) {
    ordered_json j;
    j["attack_success_before"] = report.att_suc_before;
    j["attack_success_after"] = report.att_suc_after;
    j["clean_accuracy_before"] = report.clean_acc_before;
    j["clean_accuracy_after"] = report.clean_acc_after;
    j["k"] = report.k;
    j["detection"] = {{"precision", report.detection.precision},
                      {"recall", report.detection.recall},
                      {"f1", report.detection.f1}};
    j["extractor_score"] = report.extractor_score;
    j["k_eps"] = report.k_eps;
    j["detection_eps"] = {{"precision", report.detection_eps.precision},
                          {"recall", report.detection_eps.recall},
                          {"f1", report.detection_eps.f1}};
    j["extractor_score_eps"] = report.extractor_score_eps;
    j["train_final_grad_norm"] = report.train_final_grad_norm;
    j["retrain_final_grad_norm"] = report.retrain_final_grad_norm;
    j["removed_ids"] = report.removed_ids;
    ordered_json config_echo;
    for (const auto& [key, value] : cfg.to_keys()) {
        if (key == "out_dir") continue; // keep the report path-free
        config_echo[key] = value;
    }
    j["config"] = config_echo;
    return j.dump(2) + "\n";
}

std::string report_csv_header() {
    return "seed,data_kind,extractor,objective,attack_kind,epsilon,n_train,k,k_eps,"
           "att_suc_before,att_suc_after,clean_acc_before,clean_acc_after,"
           "precision,recall,f1,precision_eps,recall_eps,f1_eps,"
           "extractor_score,extractor_score_eps,train_grad_norm,retrain_grad_norm";
}

std::string report_csv_row(const DefenseReport& report, const PipelineConfig& cfg) {
    const long n_train = cfg.data.kind == DatasetKind::gaussian_blobs ? cfg.data.blobs.n
                                                                      : cfg.data.tokens.n;
    std::ostringstream row;
    row << cfg.seed << ',' << to_string(cfg.data.kind) << ',' << to_string(cfg.extractor) << ','
        << to_string(cfg.objective) << ',' << to_string(cfg.attack.kind) << ','
        << format_double(cfg.attack.epsilon) << ',' << n_train << ',' << report.k << ','
        << report.k_eps << ',' << format_double(report.att_suc_before) << ','
        << format_double(report.att_suc_after) << ',' << format_double(report.clean_acc_before)
        << ',' << format_double(report.clean_acc_after) << ','
        << format_double(report.detection.precision) << ',' << format_double(report.detection.recall)
        << ',' << format_double(report.detection.f1) << ','
        << format_double(report.detection_eps.precision) << ','
        << format_double(report.detection_eps.recall) << ','
        << format_double(report.detection_eps.f1) << ',' << format_double(report.extractor_score)
        << ',' << format_double(report.extractor_score_eps) << ','
        << format_double(report.train_final_grad_norm) << ','
        << format_double(report.retrain_final_grad_norm);
    return row.str();
}

SweepOutcome run_sweep(const SweepSpec& spec) {
    if (spec.epsilons.empty() || spec.extractors.empty() || spec.seeds.empty())
        throw config_error("sweep needs at least one epsilon, extractor and seed");

    struct Combo {
        PipelineConfig cfg;
        std::string row;
        bool failed = false;
        std::string error;
    };
    std::vector<Combo> combos;
    const std::filesystem::path base_out = spec.base.out_dir;
    for (double eps : spec.epsilons) {
        for (Extractor ex : spec.extractors) {
            for (std::uint64_t seed : spec.seeds) {
                Combo c;
                c.cfg = spec.base;
                c.cfg.attack.epsilon = eps;
                c.cfg.extractor = ex;
                c.cfg.seed = seed;
                std::ostringstream dir;
                dir << "eps" << format_double(eps) << "_" << to_string(ex) << "_seed" << seed;
                c.cfg.out_dir = base_out / dir.str();
                combos.push_back(std::move(c));
            }
        }
    }

    const unsigned jobs = std::max(1u, spec.jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= combos.size()) return;
            try {
                const DefenseReport report = run_defense(combos[i].cfg);
                combos[i].row = report_csv_row(report, combos[i].cfg);
            } catch (const std::exception& e) {
                combos[i].failed = true;
                combos[i].error = e.what();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min<std::size_t>(jobs, combos.size()); ++t)
            pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SweepOutcome outcome;
    const std::filesystem::path out = resolve_output_path(base_out);
    std::filesystem::create_directories(out);
    outcome.csv_path = out / "sweep.csv";
    std::ofstream csv(outcome.csv_path);
    if (!csv) throw io_error("cannot open " + outcome.csv_path.string() + " for writing");
    csv << report_csv_header() << "\n";
    std::ofstream failures;
    for (const Combo& c : combos) {
        if (c.failed) {
            ++outcome.failures;
            if (!failures.is_open()) {
                failures.open(out / "sweep_failures.csv");
                failures << "out_dir,error\n";
            }
            failures << c.cfg.out_dir.filename().string() << ",\"" << c.error << "\"\n";
            continue;
        }
        csv << c.row << "\n";
    }
    csv.flush();
    if (!csv) throw io_error("failed writing " + outcome.csv_path.string());
    return outcome;
}

} // namespace igd
