#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <limits>

#include "igd/io.hpp"
#include "igd/poison.hpp"
#include "igd/rng.hpp"
#include "oracles.hpp"

using namespace igd;

namespace {

Dataset dense_fixture() {
    Dataset d;
    d.num_classes = 3;
    d.modality = Modality::dense;
    d.examples = {{0, 0, {1.5, -2.25, 0.1}, {}},
                  {1, 2, {0.0, 1e-17, -3.5}, {}},
                  {7, 1, {2.0, 3.0, 0.333333333333333315}, {}}};
    return d;
}

Dataset token_fixture() {
    Dataset d;
    d.num_classes = 2;
    d.modality = Modality::tokens;
    d.examples = {{0, 0, {}, {3, 1, 4}}, {1, 1, {}, {2}}, {5, 0, {}, {0, 0, 7}}};
    return d;
}

} // namespace

TEST_CASE("format_double renders shortest round-trip decimals") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-3.0) == "-3");
    CHECK(std::stod(format_double(1e-17)) == 1e-17);
    const double loose = 0.1 + 0.2;
    CHECK(std::stod(format_double(loose)) == loose);
}

TEST_CASE("dataset round-trips losslessly in both modalities") {
    const oracle::ScopedTempDir tmp;
    for (const Dataset& d : {dense_fixture(), token_fixture()}) {
        const auto path = tmp.path() / "data.csv";
        write_dataset(path, d);
        const Dataset back = read_dataset(path, d.modality, d.num_classes);
        REQUIRE(back.examples.size() == d.examples.size());
        CHECK(back.modality == d.modality);
        CHECK(back.num_classes == d.num_classes);
        for (std::size_t i = 0; i < d.examples.size(); ++i) {
            CHECK(back.examples[i].id == d.examples[i].id);
            CHECK(back.examples[i].label == d.examples[i].label);
            CHECK(back.examples[i].features == d.examples[i].features);
            CHECK(back.examples[i].tokens == d.examples[i].tokens);
        }
    }
}

TEST_CASE("dataset reader infers classes and modality when omitted") {
    const oracle::ScopedTempDir tmp;
    const auto path = tmp.path() / "data.csv";
    write_dataset(path, token_fixture());
    const Dataset back = read_dataset(path);
    CHECK(back.modality == Modality::tokens);
    CHECK(back.num_classes == 2);
}

TEST_CASE("dataset reader rejects malformed rows") {
    const oracle::ScopedTempDir tmp;
    const auto path = tmp.path() / "bad.csv";

    std::ofstream(path) << "0,0,1.0,2.0\n1,1,3.0\n"; // ragged widths
    CHECK_THROWS_AS(read_dataset(path, Modality::dense), config_error);

    std::ofstream(path) << "0,0,1.0,nan\n1,1,2.0,3.0\n";
    CHECK_THROWS_AS(read_dataset(path, Modality::dense), config_error);

    std::ofstream(path) << "0,zero,1.0\n";
    CHECK_THROWS_AS(read_dataset(path, Modality::dense), io_error);

    CHECK_THROWS_AS(read_dataset(tmp.path() / "missing.csv"), io_error);
}

TEST_CASE("model checkpoints restore parameters bit-exactly") {
    const oracle::ScopedTempDir tmp;
    GaussianBlobsParams p;
    p.n = 20;
    p.num_classes = 2;
    p.dim = 3;
    const Dataset d = generate_gaussian_blobs(p, 3);
    ModelSpec spec;
    spec.family = ModelFamily::mlp;
    spec.num_classes = 2;
    spec.input_dim = 3;
    spec.hidden_dim = 4;
    TrainConfig cfg;
    cfg.learning_rate = 0.3;
    cfg.steps = 40;
    cfg.l2_weight = 0.01;
    cfg.seed = 12;
    const TrainedModel m = train(d, spec, cfg).model;

    const auto path = tmp.path() / "model.json";
    write_model(path, m);
    const TrainedModel back = read_model(path);
    CHECK(back.spec.family == m.spec.family);
    CHECK(back.spec.hidden_dim == m.spec.hidden_dim);
    CHECK(back.train_config.l2_weight == m.train_config.l2_weight);
    CHECK(back.final_grad_norm == m.final_grad_norm);
    REQUIRE(back.params.size() == m.params.size());
    for (Eigen::Index i = 0; i < m.params.size(); ++i) CHECK(back.params[i] == m.params[i]);
    CHECK(model_hash(back) == model_hash(m));
}

TEST_CASE("model reader rejects garbage and version skew") {
    const oracle::ScopedTempDir tmp;
    const auto path = tmp.path() / "model.json";
    std::ofstream(path) << "not json at all";
    CHECK_THROWS_AS(read_model(path), io_error);
    std::ofstream(path) << R"({"version": 999})";
    CHECK_THROWS_AS(read_model(path), io_error);
}

TEST_CASE("influence matrix binary round-trip preserves every field") {
    const oracle::ScopedTempDir tmp;
    InfluenceMatrix m;
    rng::Engine eng(2);
    m.scores = Eigen::MatrixXd(3, 3);
    for (long i = 0; i < 3; ++i)
        for (long j = 0; j < 3; ++j) m.scores(i, j) = i == j ? 0.0 : rng::normal(eng);
    m.ids = {4, 9, 11};
    m.scores = m.scores.cwiseAbs();
    m.damping = 1e-3;
    m.method = IhvpMethod::conjugate_gradient;
    m.abs_scores = true;
    m.model_hash = 0xdeadbeefcafef00dULL;

    const auto path = tmp.path() / "infl.bin";
    write_influence_matrix(path, m);
    const InfluenceMatrix back = read_influence_matrix(path);
    CHECK(back.ids == m.ids);
    CHECK(back.damping == m.damping);
    CHECK(back.method == m.method);
    CHECK(back.abs_scores == m.abs_scores);
    CHECK(back.model_hash == m.model_hash);
    CHECK(back.scores == m.scores);
}

TEST_CASE("influence reader rejects corruption") {
    const oracle::ScopedTempDir tmp;
    InfluenceMatrix m;
    m.scores = Eigen::MatrixXd::Zero(2, 2);
    m.ids = {0, 1};
    const auto path = tmp.path() / "infl.bin";
    write_influence_matrix(path, m);

    SUBCASE("bad magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXX", 3);
        f.close();
        CHECK_THROWS_AS(read_influence_matrix(path), io_error);
    }
    SUBCASE("truncated payload") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
        CHECK_THROWS_AS(read_influence_matrix(path), io_error);
    }
    SUBCASE("trailing bytes") {
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f << "tail";
        f.close();
        CHECK_THROWS_AS(read_influence_matrix(path), io_error);
    }
    SUBCASE("non-finite score") {
        InfluenceMatrix bad = m;
        bad.scores(0, 1) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(write_influence_matrix(path, bad), config_error);
    }
}

TEST_CASE("graph binary and csv round-trips") {
    const oracle::ScopedTempDir tmp;
    const InfluenceGraph g({3, 8, 15}, {0.5, -1.25, 2.0});
    const auto bin = tmp.path() / "graph.bin";
    write_graph(bin, g);
    const InfluenceGraph back = read_graph(bin);
    CHECK(back.node_ids() == g.node_ids());
    CHECK(back.upper_weights() == g.upper_weights());

    const auto csv = tmp.path() / "graph.csv";
    write_graph_csv(csv, g);
    std::ifstream in(csv);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "node_a,node_b,weight");
    std::getline(in, row);
    CHECK(row == "3,8,0.5");
}

TEST_CASE("graph reader rejects corruption") {
    const oracle::ScopedTempDir tmp;
    const InfluenceGraph g({1, 2}, {1.0});
    const auto path = tmp.path() / "graph.bin";
    write_graph(path, g);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
    CHECK_THROWS_AS(read_graph(path), io_error);
}

TEST_CASE("subgraph record round-trips through JSON") {
    const oracle::ScopedTempDir tmp;
    Subgraph s;
    s.nodes = {2, 5, 13};
    s.score = -0.75;
    const auto path = tmp.path() / "subgraph.json";
    write_subgraph(path, s, "agglomerative", 3, "edge_mean");
    const Subgraph back = read_subgraph(path);
    CHECK(back.nodes == s.nodes);
    CHECK(back.score == s.score);
}

TEST_CASE("poison record round-trips") {
    const oracle::ScopedTempDir tmp;
    PoisonRecord r;
    r.poisoned_ids = {4, 7, 19};
    r.original_labels = {{4, 1}, {7, 2}, {19, 1}};
    const auto path = tmp.path() / "record.csv";
    write_poison_record(path, r);
    const PoisonRecord back = read_poison_record(path);
    CHECK(back.poisoned_ids == r.poisoned_ids);
    CHECK(back.original_labels == r.original_labels);
}

TEST_CASE("writers create missing parent dirs but refuse blocked paths") {
    const oracle::ScopedTempDir tmp;
    const auto nested = tmp.path() / "made" / "on" / "demand" / "out.csv";
    write_dataset(nested, dense_fixture());
    CHECK(read_dataset(nested).size() == dense_fixture().size());

    std::ofstream(tmp.path() / "blocker") << "plain file";
    const auto blocked = tmp.path() / "blocker" / "out.csv";
    CHECK_THROWS_AS(write_dataset(blocked, dense_fixture()), io_error);
}
