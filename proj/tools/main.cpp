#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>

#include "igd/graph.hpp"
#include "igd/io.hpp"
#include "igd/pipeline.hpp"
#include "igd/rng.hpp"

namespace {

using igd::PipelineConfig;

struct ConfigArgs {
    std::string config_path;
    std::map<std::string, std::string> overrides;
};

// Every flat config key becomes a --key flag; flags override file values.
void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "Flat key = value config file");
    for (const auto& [key, value] : PipelineConfig().to_keys()) {
        (void)value;
        cmd->add_option_function<std::string>(
            "--" + key, [&args, k = key](const std::string& v) { args.overrides[k] = v; },
            "Override config key " + key);
    }
    cmd->add_option_function<std::vector<std::string>>(
        "--set", [&args](const std::vector<std::string>& pairs) {
            for (const auto& p : pairs) {
                const auto eq = p.find('=');
                if (eq == std::string::npos)
                    throw CLI::ValidationError("--set expects key=value, got '" + p + "'");
                args.overrides[p.substr(0, eq)] = p.substr(eq + 1);
            }
        },
        "Override config keys as key=value");
}

PipelineConfig load_config(const ConfigArgs& args) {
    if (!args.config_path.empty())
        return PipelineConfig::from_file(args.config_path, args.overrides);
    return PipelineConfig::from_keys(args.overrides);
}

std::filesystem::path out_dir_of(const PipelineConfig& cfg) {
    const auto out = igd::resolve_output_path(cfg.out_dir);
    std::filesystem::create_directories(out);
    return out;
}

igd::Dataset generate_one(const PipelineConfig& cfg, long n, const char* tag) {
    const std::uint64_t seed = igd::rng::derive_seed(cfg.seed, tag);
    if (cfg.data.kind == igd::DatasetKind::gaussian_blobs) {
        igd::GaussianBlobsParams p = cfg.data.blobs;
        p.n = n;
        return igd::generate_gaussian_blobs(p, seed);
    }
    igd::TokenSyntheticParams p = cfg.data.tokens;
    p.n = n;
    return igd::generate_token_synthetic(p, seed);
}

igd::AttackSpec resolved_attack(const PipelineConfig& cfg) {
    igd::AttackSpec attack = cfg.attack;
    attack.seed = igd::rng::derive_seed(cfg.seed, "attack");
    if (attack.kind == igd::AttackKind::token_insert && attack.trigger_tokens.empty())
        attack.trigger_tokens = igd::default_trigger_tokens(cfg.data.tokens.vocab_size,
                                                            cfg.data.tokens.reserved_tail);
    return attack;
}

int cmd_generate(const PipelineConfig& cfg) {
    const auto out = out_dir_of(cfg);
    const long train_n = cfg.data.kind == igd::DatasetKind::gaussian_blobs ? cfg.data.blobs.n
                                                                           : cfg.data.tokens.n;
    igd::write_dataset(out / "train_clean.csv", generate_one(cfg, train_n, "data"));
    igd::write_dataset(out / "test_clean.csv", generate_one(cfg, cfg.data.test_n, "test"));
    std::cout << "wrote " << (out / "train_clean.csv").string() << " and "
              << (out / "test_clean.csv").string() << "\n";
    return 0;
}

int cmd_poison(const PipelineConfig& cfg) {
    const auto out = out_dir_of(cfg);
    const igd::Dataset clean = igd::read_dataset(out / "train_clean.csv");
    const auto [poisoned, record] = igd::inject(clean, resolved_attack(cfg));
    igd::write_dataset(out / "train_poisoned.csv", poisoned);
    igd::write_poison_record(out / "poison_record.csv", record);
    std::cout << "poisoned " << record.poisoned_ids.size() << " of " << clean.size()
              << " examples\n";
    return 0;
}

int cmd_train(const PipelineConfig& cfg) {
    const auto out = out_dir_of(cfg);
    const igd::Dataset data = igd::read_dataset(out / "train_poisoned.csv");
    igd::TrainConfig train_cfg = cfg.train;
    train_cfg.seed = igd::rng::derive_seed(cfg.seed, "train");
    const igd::TrainResult result = igd::train(data, cfg.model, train_cfg);
    igd::write_model(out / "model.json", result.model);
    std::cout << "trained " << igd::to_string(cfg.model.family) << " for " << result.steps_taken
              << " steps; final objective " << result.objective_history.back()
              << ", grad norm " << result.model.final_grad_norm << "\n";
    return 0;
}

int cmd_influence(const PipelineConfig& cfg) {
    const auto out = out_dir_of(cfg);
    const igd::TrainedModel model = igd::read_model(out / "model.json");
    const igd::Dataset data = igd::read_dataset(out / "train_poisoned.csv");
    igd::InfluenceOptions opts;
    opts.abs_scores = cfg.abs_scores;
    opts.threads = cfg.threads;
    const igd::InfluenceMatrix m = igd::all_pairs_influence(model, data, cfg.ihvp, opts);
    igd::write_influence_matrix(out / "influence.bin", m);
    if (cfg.emit_csv) igd::write_influence_csv(out / "influence.csv", m);
    std::cout << "influence matrix over " << m.n() << " points written to "
              << (out / "influence.bin").string() << "\n";
    return 0;
}

int cmd_graph(const PipelineConfig& cfg) {
    const auto out = out_dir_of(cfg);
    const igd::InfluenceMatrix m = igd::read_influence_matrix(out / "influence.bin");
    const igd::InfluenceGraph g = igd::build_graph(m);
    igd::write_graph(out / "graph.bin", g);
    if (cfg.emit_csv) {
        igd::write_graph_csv(out / "graph.csv", g);
        std::vector<double> directed;
        directed.reserve(m.n() * (m.n() - 1));
        for (Eigen::Index i = 0; i < m.scores.rows(); ++i)
            for (Eigen::Index j = 0; j < m.scores.cols(); ++j)
                if (i != j) directed.push_back(m.scores(i, j));
        igd::write_histogram_csv(out / "influence_hist.csv", directed);
        igd::write_histogram_csv(out / "edge_weight_hist.csv", g.upper_weights());
    }
    std::cout << "graph with " << g.size() << " nodes, " << g.edge_count()
              << " edges written to " << (out / "graph.bin").string() << "\n";
    return 0;
}

int cmd_extract(const PipelineConfig& cfg) {
    const auto out = out_dir_of(cfg);
    const igd::InfluenceGraph g = igd::read_graph(out / "graph.bin");
    const int k =
        igd::ExtractionBudget::from_ratio(cfg.attack.epsilon, g.size(), cfg.budget_multiplier).k;
    const int k_eps = igd::ExtractionBudget::from_ratio(cfg.attack.epsilon, g.size(), 1.0).k;

    auto run_at = [&](int size) {
        igd::ExtractionBudget budget;
        budget.k = size;
        switch (cfg.extractor) {
        case igd::Extractor::greedy: return igd::greedy_extract(g, budget);
        case igd::Extractor::agglomerative:
            return igd::agglomerative_extract(g, budget, cfg.objective);
        case igd::Extractor::brute_force: return igd::brute_force_extract(g, budget);
        case igd::Extractor::spectral_baseline: {
            const igd::TrainedModel model = igd::read_model(out / "model.json");
            const igd::Dataset data = igd::read_dataset(out / "train_poisoned.csv");
            igd::Subgraph s;
            s.nodes = igd::spectral_baseline(model, data, cfg.attack.target_label, size);
            s.score = igd::avg_score(g, s.nodes);
            return s;
        }
        }
        throw igd::config_error("unknown extractor");
    };

    const igd::Subgraph removed = run_at(k);
    igd::write_subgraph(out / "removed.json", removed, igd::to_string(cfg.extractor), k,
                        igd::to_string(cfg.objective));
    igd::write_subgraph(out / "removed_eps.json", run_at(k_eps), igd::to_string(cfg.extractor),
                        k_eps, igd::to_string(cfg.objective));
    std::cout << igd::to_string(cfg.extractor) << " extracted " << removed.nodes.size()
              << " nodes with score " << removed.score << "\n";
    return 0;
}

int cmd_defend(const PipelineConfig& cfg) {
    const igd::DefenseReport report = igd::run_defense(cfg);
    std::cout << igd::report_to_json(report, cfg);
    return 0;
}

int cmd_eval(const PipelineConfig& cfg, const std::string& model_path,
             const std::string& dataset_path) {
    const auto out = out_dir_of(cfg);
    const auto model_file = model_path.empty() ? out / "model.json" : std::filesystem::path(model_path);
    const auto data_file =
        dataset_path.empty() ? out / "test_clean.csv" : std::filesystem::path(dataset_path);
    const igd::TrainedModel model = igd::read_model(model_file);
    const igd::Dataset data = igd::read_dataset(data_file);
    const double acc = igd::clean_accuracy(model, data);
    const double asr = igd::attack_success_rate(model, data, resolved_attack(cfg));
    std::cout << "{\n  \"clean_accuracy\": " << igd::format_double(acc)
              << ",\n  \"attack_success\": " << igd::format_double(asr) << "\n}\n";
    return 0;
}

int cmd_sweep(const PipelineConfig& base, const std::vector<double>& epsilons,
              const std::vector<std::string>& extractors, const std::vector<std::uint64_t>& seeds,
              unsigned jobs) {
    igd::SweepSpec spec;
    spec.base = base;
    spec.epsilons = epsilons.empty() ? std::vector<double>{base.attack.epsilon} : epsilons;
    if (extractors.empty()) {
        spec.extractors = {base.extractor};
    } else {
        for (const auto& name : extractors) spec.extractors.push_back(igd::extractor_from_string(name));
    }
    spec.seeds = seeds.empty() ? std::vector<std::uint64_t>{base.seed} : seeds;
    spec.jobs = jobs;
    const igd::SweepOutcome outcome = igd::run_sweep(spec);
    const std::size_t total = spec.epsilons.size() * spec.extractors.size() * spec.seeds.size();
    std::cout << "sweep finished: " << (total - static_cast<std::size_t>(outcome.failures)) << "/"
              << total << " runs succeeded; rows in " << outcome.csv_path.string() << "\n";
    if (outcome.failures > 0) {
        std::cerr << "sweep: " << outcome.failures << " runs failed (see sweep_failures.csv)\n";
        return 3;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Influence-graph defense against backdoor data poisoning"};
    app.require_subcommand(1);

    ConfigArgs generate_args, poison_args, train_args, influence_args, graph_args, extract_args,
        defend_args, eval_args, sweep_args;
    std::string eval_model, eval_dataset;
    std::vector<double> sweep_epsilons;
    std::vector<std::string> sweep_extractors;
    std::vector<std::uint64_t> sweep_seeds;
    unsigned sweep_jobs = 1;

    add_config_options(app.add_subcommand("generate", "Write clean train/test datasets"),
                       generate_args);
    add_config_options(app.add_subcommand("poison", "Inject the backdoor into train_clean.csv"),
                       poison_args);
    add_config_options(app.add_subcommand("train", "Train on train_poisoned.csv"), train_args);
    add_config_options(
        app.add_subcommand("influence", "Compute the all-pairs influence matrix"), influence_args);
    add_config_options(app.add_subcommand("graph", "Build the influence graph"), graph_args);
    add_config_options(app.add_subcommand("extract", "Extract the suspect subgraph"), extract_args);
    add_config_options(app.add_subcommand("defend", "Run the full defense end-to-end"),
                       defend_args);

    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset");
    add_config_options(eval_cmd, eval_args);
    eval_cmd->add_option("--model", eval_model, "Model checkpoint (default out_dir/model.json)");
    eval_cmd->add_option("--dataset", eval_dataset,
                         "Dataset file (default out_dir/test_clean.csv)");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Grid of defend runs");
    add_config_options(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--epsilons", sweep_epsilons, "Poison ratios to sweep");
    sweep_cmd->add_option("--extractors", sweep_extractors, "Extractors to sweep");
    sweep_cmd->add_option("--seeds", sweep_seeds, "Seeds to sweep");
    sweep_cmd->add_option("--jobs", sweep_jobs, "Concurrent runs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("generate")) return cmd_generate(load_config(generate_args));
        if (app.got_subcommand("poison")) return cmd_poison(load_config(poison_args));
        if (app.got_subcommand("train")) return cmd_train(load_config(train_args));
        if (app.got_subcommand("influence")) return cmd_influence(load_config(influence_args));
        if (app.got_subcommand("graph")) return cmd_graph(load_config(graph_args));
        if (app.got_subcommand("extract")) return cmd_extract(load_config(extract_args));
        if (app.got_subcommand("defend")) return cmd_defend(load_config(defend_args));
        if (app.got_subcommand("eval"))
            return cmd_eval(load_config(eval_args), eval_model, eval_dataset);
        if (app.got_subcommand("sweep"))
            return cmd_sweep(load_config(sweep_args), sweep_epsilons, sweep_extractors,
                             sweep_seeds, sweep_jobs);
    } catch (const igd::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
