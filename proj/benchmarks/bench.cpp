#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "igd/extract.hpp"
#include "igd/graph.hpp"
#include "igd/influence.hpp"
#include "igd/model.hpp"
#include "igd/poison.hpp"
#include "igd/rng.hpp"

using namespace igd;

namespace {

Dataset blobs(long n, int dim) {
    GaussianBlobsParams p;
    p.n = n;
    p.num_classes = 2;
    p.dim = dim;
    p.separation = 4.0;
    p.noise_sigma = 1.0;
    return generate_gaussian_blobs(p, 7);
}

TrainedModel fit(const Dataset& d) {
    ModelSpec spec;
    spec.family = ModelFamily::logistic;
    spec.num_classes = 2;
    spec.input_dim = d.feature_dim();
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.steps = 200;
    cfg.l2_weight = 0.01;
    return train(d, spec, cfg).model;
}

InfluenceGraph random_graph(std::size_t n) {
    rng::Engine eng(13);
    std::vector<NodeId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<NodeId>(i);
    std::vector<double> w(n * (n - 1) / 2);
    for (auto& x : w) x = rng::normal(eng);
    return InfluenceGraph(std::move(ids), std::move(w));
}

void bm_hvp(benchmark::State& state) {
    const Dataset d = blobs(state.range(0), 12);
    const TrainedModel m = fit(d);
    const Eigen::VectorXd v = Eigen::VectorXd::Ones(m.params.size());
    for (auto _ : state) benchmark::DoNotOptimize(hvp(m, d, v));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_hvp)->RangeMultiplier(2)->Range(128, 1024)->Complexity(benchmark::oN);

void bm_ihvp_solve(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const Dataset d = blobs(200, dim);
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = state.range(1) == 0 ? IhvpMethod::explicit_solve
                                     : IhvpMethod::conjugate_gradient;
    cfg.damping = 1e-3;
    const Eigen::VectorXd b = grad_loss(m, d.examples[0]);
    for (auto _ : state) benchmark::DoNotOptimize(ihvp(m, d, b, cfg));
}
BENCHMARK(bm_ihvp_solve)
    ->ArgsProduct({{25, 50, 100, 200}, {0, 1}})
    ->ArgNames({"p", "cg"});

void bm_ihvp_factor_once(benchmark::State& state) {
    // Explicit method amortized over many right-hand sides: the realistic
    // all-pairs workload.
    const Dataset d = blobs(200, static_cast<int>(state.range(0)));
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-3;
    const IhvpSolver solver(m, d, cfg);
    const Eigen::VectorXd b = grad_loss(m, d.examples[0]);
    for (auto _ : state) benchmark::DoNotOptimize(solver.solve(b));
}
BENCHMARK(bm_ihvp_factor_once)->Arg(50)->Arg(100)->Arg(200)->ArgName("p");

void bm_all_pairs(benchmark::State& state) {
    const Dataset d = blobs(state.range(0), 8);
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-3;
    InfluenceOptions opts;
    opts.threads = static_cast<unsigned>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(all_pairs_influence(m, d, cfg, opts));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_all_pairs)
    ->ArgsProduct({{100, 200, 400}, {1, 0}})
    ->ArgNames({"n", "threads"})
    ->Unit(benchmark::kMillisecond);

void bm_greedy_extract(benchmark::State& state) {
    const InfluenceGraph g = random_graph(static_cast<std::size_t>(state.range(0)));
    ExtractionBudget budget;
    budget.k = static_cast<int>(state.range(0) / 10);
    for (auto _ : state) benchmark::DoNotOptimize(greedy_extract(g, budget));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_greedy_extract)
    ->RangeMultiplier(2)
    ->Range(128, 1024)
    ->Complexity()
    ->Unit(benchmark::kMillisecond);

void bm_agglomerative_extract(benchmark::State& state) {
    const InfluenceGraph g = random_graph(static_cast<std::size_t>(state.range(0)));
    ExtractionBudget budget;
    budget.k = static_cast<int>(state.range(0) / 10);
    for (auto _ : state)
        benchmark::DoNotOptimize(agglomerative_extract(g, budget, MergeObjective::edge_mean));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_agglomerative_extract)
    ->RangeMultiplier(2)
    ->Range(128, 512)
    ->Complexity()
    ->Unit(benchmark::kMillisecond);

void bm_train(benchmark::State& state) {
    const Dataset d = blobs(state.range(0), 10);
    ModelSpec spec;
    spec.family = ModelFamily::logistic;
    spec.num_classes = 2;
    spec.input_dim = 10;
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.steps = 100;
    cfg.l2_weight = 0.01;
    for (auto _ : state) benchmark::DoNotOptimize(train(d, spec, cfg));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_train)
    ->RangeMultiplier(2)
    ->Range(128, 1024)
    ->Complexity(benchmark::oN)
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
