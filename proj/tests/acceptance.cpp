// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single "criterion N: PASS/FAIL — detail [runtime]" line.
//
//   igd_acceptance          runs every criterion
//   igd_acceptance 2 5      runs only the listed ones
//
// Exit status is the number of failing criteria. Every tolerance is pinned
// here, next to the check it gates.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "igd/extract.hpp"
#include "igd/graph.hpp"
#include "igd/influence.hpp"
#include "igd/io.hpp"
#include "igd/model.hpp"
#include "igd/pipeline.hpp"
#include "igd/poison.hpp"
#include "igd/rng.hpp"
#include "igd/spectral.hpp"
#include "oracles.hpp"

using namespace igd;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double x, int precision = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Derivative correctness: grad_loss, grad_outcome, hvp and mixed_grad_vec
//    against central finite differences on 50 random small models.
//    Tolerance: 1e-4 relative (1e-3 for the mixed derivative).
// ---------------------------------------------------------------------------
Outcome criterion1() {
    rng::Engine eng(101);
    double worst_grad = 0.0, worst_hvp = 0.0, worst_mixed = 0.0;

    for (int trial = 0; trial < 50; ++trial) {
        const ModelFamily family = static_cast<ModelFamily>(trial % 3);
        ModelSpec spec;
        spec.family = family;
        spec.num_classes = 2 + static_cast<int>(rng::uniform_index(eng, 2));
        Dataset d;
        d.num_classes = spec.num_classes;
        if (family == ModelFamily::embedbag) {
            spec.vocab_size = 6 + static_cast<int>(rng::uniform_index(eng, 5));
            spec.embed_dim = 2 + static_cast<int>(rng::uniform_index(eng, 3));
            d.modality = Modality::tokens;
        } else {
            spec.input_dim = 2 + static_cast<int>(rng::uniform_index(eng, 3));
            spec.hidden_dim = 2 + static_cast<int>(rng::uniform_index(eng, 3));
            d.modality = Modality::dense;
        }
        for (long i = 0; i < 6; ++i) {
            Example z;
            z.id = i;
            z.label = static_cast<int>(rng::uniform_index(
                eng, static_cast<std::uint64_t>(spec.num_classes)));
            if (family == ModelFamily::embedbag) {
                const std::size_t len = 2 + rng::uniform_index(eng, 4);
                for (std::size_t t = 0; t < len; ++t)
                    z.tokens.push_back(static_cast<TokenId>(
                        rng::uniform_index(eng, static_cast<std::uint64_t>(spec.vocab_size))));
            } else {
                for (int f = 0; f < spec.input_dim; ++f)
                    z.features.push_back(rng::normal(eng));
            }
            d.examples.push_back(std::move(z));
        }
        d.validate();

        TrainedModel m;
        m.spec = spec;
        m.params.resize(static_cast<Eigen::Index>(spec.param_count()));
        for (Eigen::Index i = 0; i < m.params.size(); ++i)
            m.params[i] = 0.5 * rng::normal(eng);
        m.train_config.l2_weight = 0.01;

        const Example& z = d.examples[rng::uniform_index(eng, d.examples.size())];
        const auto loss_at = [&](const Eigen::VectorXd& t) {
            TrainedModel probe = m;
            probe.params = t;
            return loss(probe, z);
        };
        const auto outcome_at = [&](const Eigen::VectorXd& t) {
            TrainedModel probe = m;
            probe.params = t;
            return outcome_score(probe, z);
        };
        worst_grad = std::max(
            worst_grad, oracle::rel_error(grad_loss(m, z),
                                          oracle::fd_gradient(loss_at, m.params)));
        worst_grad = std::max(
            worst_grad, oracle::rel_error(grad_outcome(m, z),
                                          oracle::fd_gradient(outcome_at, m.params)));

        const auto obj_grad = [&](const Eigen::VectorXd& t) {
            TrainedModel probe = m;
            probe.params = t;
            Eigen::VectorXd g = Eigen::VectorXd::Zero(t.size());
            for (const auto& ex : d.examples) g += grad_loss(probe, ex);
            g /= static_cast<double>(d.examples.size());
            g += m.train_config.l2_weight * t;
            return g;
        };
        Eigen::VectorXd v(m.params.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng::normal(eng);
        worst_hvp = std::max(
            worst_hvp,
            oracle::rel_error(hvp(m, d, v), oracle::fd_directional(obj_grad, m.params, v)));

        if (family == ModelFamily::embedbag) {
            const int pos =
                static_cast<int>(rng::uniform_index(eng, z.tokens.size()));
            const auto act_grad_at = [&](const Eigen::VectorXd& t) {
                TrainedModel probe = m;
                probe.params = t;
                return activation_grad_outcome(probe, z, pos);
            };
            worst_mixed = std::max(
                worst_mixed,
                oracle::rel_error(mixed_grad_vec(m, z, pos, v),
                                  oracle::fd_directional(act_grad_at, m.params, v)));
        }
    }

    const bool pass = worst_grad <= 1e-4 && worst_hvp <= 1e-4 && worst_mixed <= 1e-3;
    return {pass, "max rel err vs central FD over 50 models: grads " + fmt(worst_grad) +
                      " (tol 1e-4), hvp " + fmt(worst_hvp) + " (tol 1e-4), mixed " +
                      fmt(worst_mixed) + " (tol 1e-3)"};
}

// ---------------------------------------------------------------------------
// 2. IHVP solver equivalence on a p = 200 damped logistic Hessian: CG and
//    explicit solve agree within 1e-5 relative; CG residual <= 1e-8.
// ---------------------------------------------------------------------------
Outcome criterion2() {
    GaussianBlobsParams p;
    p.n = 150;
    p.num_classes = 2;
    p.dim = 199; // p = dim + 1 = 200 parameters
    p.separation = 3.0;
    p.noise_sigma = 1.0;
    const Dataset d = generate_gaussian_blobs(p, 22);

    ModelSpec spec;
    spec.family = ModelFamily::logistic;
    spec.num_classes = 2;
    spec.input_dim = 199;
    TrainConfig tc;
    tc.learning_rate = 0.1;
    tc.steps = 50;
    tc.l2_weight = 1e-2;
    const TrainedModel m = train(d, spec, tc).model;

    const double damping = 1e-3;
    IhvpConfig ex_cfg;
    ex_cfg.method = IhvpMethod::explicit_solve;
    ex_cfg.damping = damping;
    const IhvpSolver explicit_solver(m, d, ex_cfg);
    const auto apply = [&](const Eigen::VectorXd& v) {
        return Eigen::VectorXd(hvp(m, d, v) + damping * v);
    };

    double worst_rel = 0.0, worst_residual = 0.0;
    for (const std::size_t idx : {0u, 31u, 77u, 104u, 149u}) {
        const Eigen::VectorXd b = grad_loss(m, d.examples[idx]);
        const CgResult cg = cg_solve(apply, b, 1e-9, 4000);
        worst_residual = std::max(worst_residual, cg.rel_residual);
        worst_rel = std::max(worst_rel, oracle::rel_error(cg.x, explicit_solver.solve(b)));
    }

    const bool pass = worst_rel <= 1e-5 && worst_residual <= 1e-8;
    return {pass, "p=200, 5 right-hand sides: max |cg - explicit| rel " + fmt(worst_rel) +
                      " (tol 1e-5), max cg residual " + fmt(worst_residual) + " (tol 1e-8)"};
}

// ---------------------------------------------------------------------------
// 3. Influence fidelity against exact leave-one-out retraining on a 25-point
//    convex logistic instance: Spearman rho of pairwise scores vs true
//    outcome-score changes >= 0.9; parameter-change cosine >= 0.95 (mean
//    over removals; minimum reported).
// ---------------------------------------------------------------------------
Outcome criterion3() {
    GaussianBlobsParams p;
    p.n = 25;
    p.num_classes = 2;
    p.dim = 3;
    p.separation = 2.0; // overlapping classes keep residuals informative
    p.noise_sigma = 1.0;
    const Dataset d = generate_gaussian_blobs(p, 33);
    const double l2 = 0.1;
    const auto n = static_cast<double>(d.examples.size());

    ModelSpec spec;
    spec.family = ModelFamily::logistic;
    spec.num_classes = 2;
    spec.input_dim = 3;
    TrainConfig tc;
    tc.learning_rate = 0.5;
    tc.steps = 50000;
    tc.l2_weight = l2;
    tc.grad_tolerance = 1e-12;
    const TrainedModel m = train(d, spec, tc).model;

    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-8; // negligible next to the l2 curvature floor of 0.1

    // Exact optima, full data and each leave-one-out subset. The LOO fits
    // keep the 1/N weighting (a removed point's weight drops to zero, the
    // rest stay fixed), which is the removal the influence step linearizes.
    const oracle::NewtonLogistic full = oracle::NewtonLogistic::fit(d.examples, 3, l2);
    std::vector<oracle::NewtonLogistic> loo;
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
        std::vector<Example> rest;
        for (std::size_t j = 0; j < d.examples.size(); ++j)
            if (j != i) rest.push_back(d.examples[j]);
        loo.push_back(oracle::NewtonLogistic::fit(rest, 3, l2, 1e-12, 200, n));
    }

    // Removing z_i shifts the outcome at z_j by about -score(i, j) / N, so
    // score(i, j) should rank like the drop in gold-label probability.
    std::vector<double> predicted, actual_drop;
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
        for (std::size_t j = 0; j < d.examples.size(); ++j) {
            if (i == j) continue;
            predicted.push_back(pairwise_influence(m, d, i, j, cfg));
            actual_drop.push_back(full.gold_probability(d.examples[j]) -
                                  loo[i].gold_probability(d.examples[j]));
        }
    }
    const double rho = oracle::spearman_rho(predicted, actual_drop);

    // Parameter-change direction: -influence_on_params is the removal step.
    double cos_sum = 0.0, cos_min = 1.0;
    for (std::size_t i = 0; i < d.examples.size(); ++i) {
        const Eigen::VectorXd predicted_step =
            -influence_on_params(m, d, d.examples[i], cfg) / n;
        const Eigen::VectorXd actual_step = loo[i].theta - full.theta;
        const double c = oracle::cosine(predicted_step, actual_step);
        cos_sum += c;
        cos_min = std::min(cos_min, c);
    }
    const double cos_mean = cos_sum / n;

    const bool pass = rho >= 0.9 && cos_mean >= 0.95;
    return {pass, "600 ordered pairs, 25 exact LOO retrains: spearman rho " + fmt(rho, 4) +
                      " (tol 0.9), param-change cosine mean " + fmt(cos_mean, 4) + " / min " +
                      fmt(cos_min, 4) + " (tol 0.95 on the mean)"};
}

// ---------------------------------------------------------------------------
// 4. Extraction vs the exact oracle on small graphs: valid size-k outputs
//    everywhere; exact recovery on 30 planted-clique instances; on 100
//    general random instances each heuristic reaches >= 95% of the oracle
//    average score in at least 90.
// ---------------------------------------------------------------------------
Outcome criterion4() {
    rng::Engine eng(404);
    const auto random_ids = [](std::size_t n) {
        std::vector<NodeId> ids(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<NodeId>(i);
        return ids;
    };
    const auto is_valid = [](const Subgraph& s, int k, const InfluenceGraph& g) {
        if (s.nodes.size() != static_cast<std::size_t>(k)) return false;
        if (!std::is_sorted(s.nodes.begin(), s.nodes.end())) return false;
        if (std::adjacent_find(s.nodes.begin(), s.nodes.end()) != s.nodes.end()) return false;
        for (const NodeId id : s.nodes)
            if (!g.contains(id)) return false;
        return std::abs(s.score - avg_score(g, s.nodes)) <= 1e-9;
    };

    bool all_valid = true;
    int planted_exact = 0;
    const int planted_total = 30;
    for (int inst = 0; inst < planted_total; ++inst) {
        const std::size_t n = 7 + rng::uniform_index(eng, 4);
        const int k = 2 + static_cast<int>(rng::uniform_index(eng, 4));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng::uniform_index(eng, i + 1)]);
        const std::vector<std::size_t> clique(order.begin(), order.begin() + k);
        const auto in_clique = [&](std::size_t v) {
            return std::find(clique.begin(), clique.end(), v) != clique.end();
        };
        std::vector<double> w;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                w.push_back(in_clique(a) && in_clique(b) ? 2.5 + 0.5 * rng::uniform01(eng)
                                                         : rng::uniform01(eng));
        const InfluenceGraph g(random_ids(n), std::move(w));
        ExtractionBudget budget;
        budget.k = k;
        const Subgraph oracle_best = brute_force_extract(g, budget);
        const Subgraph greedy = greedy_extract(g, budget);
        const Subgraph agglom = agglomerative_extract(g, budget);
        all_valid = all_valid && is_valid(greedy, k, g) && is_valid(agglom, k, g);
        if (greedy.nodes == oracle_best.nodes && agglom.nodes == oracle_best.nodes)
            ++planted_exact;
    }

    int greedy_hits = 0, agglom_hits = 0;
    std::vector<double> greedy_ratios, agglom_ratios;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 6 + rng::uniform_index(eng, 5);
        const int k = 2 + static_cast<int>(rng::uniform_index(eng, 4));
        std::vector<double> w(n * (n - 1) / 2);
        for (auto& x : w) x = rng::uniform01(eng);
        const InfluenceGraph g(random_ids(n), std::move(w));
        ExtractionBudget budget;
        budget.k = k;
        const Subgraph oracle_best = brute_force_extract(g, budget);
        // Independent enumeration cross-checks the library's own oracle.
        const auto enumerated = oracle::best_subset(
            n, static_cast<std::size_t>(k),
            [&](std::size_t a, std::size_t b) { return g.weight_at(a, b); });
        if (std::abs(enumerated.score - oracle_best.score) > 1e-9)
            return {false, "brute_force_extract disagrees with independent enumeration"};

        const Subgraph greedy = greedy_extract(g, budget);
        const Subgraph agglom = agglomerative_extract(g, budget);
        all_valid = all_valid && is_valid(greedy, k, g) && is_valid(agglom, k, g);
        greedy_ratios.push_back(greedy.score / oracle_best.score);
        agglom_ratios.push_back(agglom.score / oracle_best.score);
        greedy_hits += greedy_ratios.back() >= 0.95 - 1e-12;
        agglom_hits += agglom_ratios.back() >= 0.95 - 1e-12;
    }

    const auto quartiles = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return fmt(v[v.size() / 4], 3) + "/" + fmt(v[v.size() / 2], 3) + "/" +
               fmt(v[(3 * v.size()) / 4], 3) + " (min " + fmt(v.front(), 3) + ")";
    };
    const bool pass =
        all_valid && planted_exact == planted_total && greedy_hits >= 90 && agglom_hits >= 90;
    return {pass, "all outputs valid: " + std::string(all_valid ? "yes" : "NO") +
                      "; planted cliques exact " + std::to_string(planted_exact) + "/" +
                      std::to_string(planted_total) + "; >=95% of oracle score: greedy " +
                      std::to_string(greedy_hits) + "/100, agglomerative " +
                      std::to_string(agglom_hits) +
                      "/100 (need 90); ratio quartiles greedy " + quartiles(greedy_ratios) +
                      ", agglomerative " + quartiles(agglom_ratios)};
}

// ---------------------------------------------------------------------------
// Frozen end-to-end instances.
// ---------------------------------------------------------------------------
PipelineConfig dense_instance(const std::filesystem::path& out, std::uint64_t seed,
                              Extractor extractor) {
    PipelineConfig cfg;
    cfg.seed = seed;
    cfg.out_dir = out;
    cfg.data.kind = DatasetKind::gaussian_blobs;
    cfg.data.blobs.n = 500;
    cfg.data.blobs.num_classes = 2;
    cfg.data.blobs.dim = 6;
    cfg.data.blobs.separation = 8.0;
    cfg.data.blobs.noise_sigma = 1.0;
    cfg.data.test_n = 400;
    cfg.model.family = ModelFamily::logistic;
    cfg.model.num_classes = 2;
    cfg.model.input_dim = 6;
    cfg.train.learning_rate = 0.5;
    cfg.train.steps = 400;
    cfg.train.l2_weight = 0.05;
    cfg.attack.kind = AttackKind::feature_trigger;
    cfg.attack.target_label = 0;
    cfg.attack.epsilon = 0.1;
    cfg.attack.feature_overrides = {{4, 6.0}, {5, -6.0}};
    cfg.ihvp.method = IhvpMethod::explicit_solve;
    cfg.ihvp.damping = 1e-3;
    cfg.extractor = extractor;
    cfg.objective = MergeObjective::edge_mean;
    cfg.emit_csv = false;
    return cfg;
}

PipelineConfig token_instance(const std::filesystem::path& out, Extractor extractor) {
    PipelineConfig cfg;
    cfg.seed = 1;
    cfg.out_dir = out;
    cfg.data.kind = DatasetKind::token_synthetic;
    cfg.data.tokens.n = 300;
    cfg.data.tokens.num_classes = 2;
    cfg.data.tokens.vocab_size = 40;
    cfg.data.tokens.seq_min = 6;
    cfg.data.tokens.seq_max = 6; // uniform length keeps trigger dilution equal
    cfg.data.tokens.noise = 0.0;
    cfg.data.tokens.reserved_tail = 1;
    cfg.data.test_n = 400;
    cfg.model.family = ModelFamily::embedbag;
    cfg.model.num_classes = 2;
    cfg.model.vocab_size = 40;
    cfg.model.embed_dim = 8;
    cfg.train.learning_rate = 1.0;
    cfg.train.steps = 400;
    cfg.train.l2_weight = 0.005;
    cfg.attack.kind = AttackKind::token_insert;
    cfg.attack.target_label = 0;
    cfg.attack.epsilon = 0.1;
    cfg.attack.trigger_tokens = {39};
    cfg.ihvp.method = IhvpMethod::explicit_solve;
    cfg.ihvp.damping = 3e-3;
    cfg.extractor = extractor;
    cfg.objective = MergeObjective::node_normalized;
    cfg.emit_csv = false;
    return cfg;
}

// ---------------------------------------------------------------------------
// 5. End-to-end defense on gaussian blobs, N=500, eps=0.1, 10 seeds:
//    every seed must reach att_suc_before >= 0.9, att_suc_after <= 0.2 and
//    recall >= 0.8 with the agglomerative extractor; agglomerative recall
//    must be >= greedy recall on at least 6 of the 10 seeds.
// ---------------------------------------------------------------------------
Outcome criterion5() {
    const oracle::ScopedTempDir tmp("acc5");
    double min_before = 1.0, max_after = 0.0, min_recall = 1.0;
    int agg_wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto dir = tmp.path() / ("seed" + std::to_string(seed));
        const DefenseReport agg =
            run_defense(dense_instance(dir / "agglomerative", seed, Extractor::agglomerative));
        const DefenseReport greedy =
            run_defense(dense_instance(dir / "greedy", seed, Extractor::greedy));
        min_before = std::min(min_before, agg.att_suc_before);
        max_after = std::max(max_after, agg.att_suc_after);
        min_recall = std::min(min_recall, agg.detection.recall);
        agg_wins += agg.detection.recall >= greedy.detection.recall;
    }
    const bool pass =
        min_before >= 0.9 && max_after <= 0.2 && min_recall >= 0.8 && agg_wins >= 6;
    return {pass, "worst over 10 seeds: att_suc " + fmt(min_before) + " -> " + fmt(max_after) +
                      " (need >=0.9 -> <=0.2), recall " + fmt(min_recall) +
                      " (need >=0.8); agglomerative >= greedy recall on " +
                      std::to_string(agg_wins) + "/10 seeds (need 6)"};
}

// ---------------------------------------------------------------------------
// 6. Token-modality smoke test, N=300 trigger insert on the pooled-embedding
//    model: the inserted trigger's position attains the per-pair max word
//    influence in >= 80% of sampled poisoned pairs (ties count: pooling makes
//    every position of a sequence score identically, so "attains" means
//    equals the max within 1e-9 relative); att_suc_after <= 0.3.
// ---------------------------------------------------------------------------
Outcome criterion6() {
    const oracle::ScopedTempDir tmp("acc6");
    const PipelineConfig cfg = token_instance(tmp.path() / "run", Extractor::agglomerative);
    const DefenseReport report = run_defense(cfg);

    const Dataset poisoned =
        read_dataset(cfg.out_dir / "train_poisoned.csv", Modality::tokens, 2);
    const PoisonRecord record = read_poison_record(cfg.out_dir / "poison_record.csv");
    const TrainedModel model = read_model(cfg.out_dir / "model.json");
    std::map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < poisoned.examples.size(); ++i)
        index[poisoned.examples[i].id] = i;

    rng::Engine eng(606);
    const auto& ids = record.poisoned_ids;
    int hits = 0;
    const int samples = 100;
    for (int s = 0; s < samples; ++s) {
        std::size_t a = rng::uniform_index(eng, ids.size());
        std::size_t b = rng::uniform_index(eng, ids.size());
        while (b == a) b = rng::uniform_index(eng, ids.size());
        const Example& src = poisoned.examples[index.at(ids[a])];
        const Example& dst = poisoned.examples[index.at(ids[b])];

        double best = 0.0;
        std::vector<double> per_pos(dst.tokens.size());
        for (int pos = 0; pos < static_cast<int>(dst.tokens.size()); ++pos) {
            per_pos[static_cast<std::size_t>(pos)] =
                example_to_word_influence(model, poisoned, src, dst, pos, cfg.ihvp);
            best = std::max(best, per_pos[static_cast<std::size_t>(pos)]);
        }
        for (std::size_t pos = 0; pos < dst.tokens.size(); ++pos) {
            if (dst.tokens[pos] == 39 && per_pos[pos] >= best * (1.0 - 1e-9)) {
                ++hits;
                break;
            }
        }
    }
    const double frac = static_cast<double>(hits) / samples;

    const bool pass = frac >= 0.8 && report.att_suc_after <= 0.3;
    return {pass, "trigger position attains per-pair max in " + fmt(100.0 * frac) +
                      "% of 100 sampled poisoned pairs (need 80%); att_suc " +
                      fmt(report.att_suc_before) + " -> " + fmt(report.att_suc_after) +
                      " (need <=0.3)"};
}

// ---------------------------------------------------------------------------
// 7. Determinism: defending twice with the same config and seed reproduces
//    report.json and every non-timing artifact byte for byte, on both
//    modalities.
// ---------------------------------------------------------------------------
Outcome criterion7() {
    const oracle::ScopedTempDir tmp("acc7");
    const auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };

    PipelineConfig dense = dense_instance(tmp.path() / "dense_a", 5, Extractor::agglomerative);
    dense.data.blobs.n = 120; // determinism needs no scale
    dense.data.test_n = 100;
    PipelineConfig token = token_instance(tmp.path() / "token_a", Extractor::agglomerative);
    token.data.tokens.n = 300;

    int files_compared = 0;
    for (PipelineConfig first : {dense, token}) {
        PipelineConfig second = first;
        const std::string stem = first.data.kind == DatasetKind::gaussian_blobs ? "dense" : "token";
        second.out_dir = tmp.path() / (stem + "_b");
        run_defense(first);
        run_defense(second);
        for (const char* name :
             {"report.json", "report_row.csv", "train_clean.csv", "train_poisoned.csv",
              "poison_record.csv", "model.json", "influence.bin", "graph.bin", "removed.json",
              "removed_eps.json", "train_filtered.csv", "model_retrained.json"}) {
            const std::string a = slurp(first.out_dir / name);
            const std::string b = slurp(second.out_dir / name);
            if (a.empty() || a != b)
                return {false, std::string(name) + " differs between identical " + stem +
                                   " runs"};
            ++files_compared;
        }
    }
    return {true, std::to_string(files_compared) +
                      " artifacts byte-identical across repeated dense and token runs "
                      "(timings.csv excluded by design)"};
}

// ---------------------------------------------------------------------------
// 8. Baseline comparison on the token instance: the spectral baseline is
//    expected to underperform the influence-graph extractors in detection
//    recall (threshold frozen after pilot: strict inequality against the
//    best influence extractor at the removal budget k = 1.5 eps N, with the
//    eps N working point reported alongside).
//
//    Measured result on this instance: the spectral baseline does NOT
//    underperform — the pooled-embedding representation displaces poisoned
//    points along the top principal direction exactly as strongly as their
//    logits, so it ties the influence extractors at k and overtakes them at
//    eps N. The coupling is structural for a mean-pooled linear head: a
//    working backdoor must shift w . rep past the class margin, so every
//    trigger embedding is forced into the same half-space as the head
//    direction, and the top principal component of the (low-variance) clean
//    class picks up that common shift. Splitting the attack across a pool of
//    trigger tokens does not break this (piloted: 3-token pool leaves
//    spectral at recall 1.0 and drags the influence extractors down to 0.9,
//    because cross-trigger influence edges are weaker while all trigger
//    embeddings still align with the head). Reported honestly as a failure;
//    see the analysis notes.
// ---------------------------------------------------------------------------
Outcome criterion8() {
    const oracle::ScopedTempDir tmp("acc8");
    const DefenseReport agg = run_defense(
        token_instance(tmp.path() / "agglomerative", Extractor::agglomerative));
    const DefenseReport greedy =
        run_defense(token_instance(tmp.path() / "greedy", Extractor::greedy));
    const DefenseReport spectral = run_defense(
        token_instance(tmp.path() / "spectral_baseline", Extractor::spectral_baseline));

    const double best_influence =
        std::max(agg.detection.recall, greedy.detection.recall);
    const double best_influence_eps =
        std::max(agg.detection_eps.recall, greedy.detection_eps.recall);
    const bool pass = spectral.detection.recall < best_influence;
    return {pass, "recall at k=1.5epsN: spectral " + fmt(spectral.detection.recall, 4) +
                      " vs best influence " + fmt(best_influence, 4) +
                      " (agglomerative " + fmt(agg.detection.recall, 4) + ", greedy " +
                      fmt(greedy.detection.recall, 4) + "); at k=epsN: spectral " +
                      fmt(spectral.detection_eps.recall, 4) + " vs best influence " +
                      fmt(best_influence_eps, 4) +
                      "; spectral does not underperform on this instance"};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
        {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};
    // Runtime ceilings in seconds; 0 means unbounded.
    const std::map<int, double> limits = {{1, 30.0}, {2, 10.0}, {3, 120.0}, {4, 60.0},
                                          {5, 600.0}, {6, 600.0}, {7, 0.0},  {8, 0.0}};

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));

    int failures = 0;
    for (const auto& [number, check] : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), number) == selected.end())
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double limit = limits.at(number);
        if (limit > 0.0 && seconds > limit) {
            outcome.pass = false;
            outcome.detail += "; exceeded " + fmt(limit) + " s runtime limit";
        }
        std::printf("criterion %d: %s — %s [%.1fs]\n", number,
                    outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str(), seconds);
        std::fflush(stdout);
        failures += !outcome.pass;
    }
    return failures;
}
