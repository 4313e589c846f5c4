#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "igd/influence.hpp"
#include "igd/model.hpp"
#include "igd/poison.hpp"
#include "igd/rng.hpp"
#include "oracles.hpp"

using namespace igd;

namespace {

Dataset small_blobs(long n = 30, std::uint64_t seed = 11) {
    GaussianBlobsParams p;
    p.n = n;
    p.num_classes = 2;
    p.dim = 3;
    p.separation = 3.0;
    p.noise_sigma = 1.0;
    return generate_gaussian_blobs(p, seed);
}

TrainedModel fit(const Dataset& d, double l2 = 1e-2) {
    ModelSpec spec;
    spec.family = ModelFamily::logistic;
    spec.num_classes = d.num_classes;
    spec.input_dim = d.feature_dim();
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.steps = 300;
    cfg.l2_weight = l2;
    return train(d, spec, cfg).model;
}

} // namespace

TEST_CASE("cg_solve recovers the solution of a hand-built SPD system") {
    Eigen::MatrixXd a(3, 3);
    a << 4, 1, 0, 1, 3, 1, 0, 1, 5;
    const Eigen::VectorXd want = Eigen::Vector3d(1.0, -2.0, 0.5);
    const Eigen::VectorXd b = a * want;
    const CgResult r = cg_solve([&](const Eigen::VectorXd& v) { return a * v; }, b, 1e-12, 100);
    CHECK(oracle::rel_error(r.x, want) < 1e-10);
    CHECK(r.rel_residual <= 1e-12);
    CHECK(r.iterations <= 3);
}

TEST_CASE("cg_solve reports non-positive curvature on an indefinite operator") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 0, 0, -1;
    const Eigen::VectorXd b = Eigen::Vector2d(1.0, 1.0);
    CHECK_THROWS_AS(cg_solve([&](const Eigen::VectorXd& v) { return a * v; }, b, 1e-10, 50),
                    solver_error);
}

TEST_CASE("cg_solve fails honestly when the iteration cap is too small") {
    rng::Engine eng(1);
    Eigen::MatrixXd m(40, 40);
    for (long i = 0; i < 40; ++i)
        for (long j = 0; j < 40; ++j) m(i, j) = rng::normal(eng);
    const Eigen::MatrixXd a = m * m.transpose() + 1e-6 * Eigen::MatrixXd::Identity(40, 40);
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(40);
    try {
        cg_solve([&](const Eigen::VectorXd& v) { return a * v; }, b, 1e-14, 2);
        FAIL("expected solver_error");
    } catch (const solver_error& e) {
        CHECK(e.iterations() == 2);
        CHECK(e.residual() > 1e-14);
    }
}

TEST_CASE("ihvp method names round-trip") {
    for (const auto m : {IhvpMethod::explicit_solve, IhvpMethod::conjugate_gradient})
        CHECK(ihvp_method_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(ihvp_method_from_string("lissa"), config_error);
}

TEST_CASE("ihvp config validation") {
    IhvpConfig cfg;
    cfg.damping = 0.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg = IhvpConfig{};
    cfg.cg_tolerance = -1.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg = IhvpConfig{};
    cfg.explicit_cap = 0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
}

TEST_CASE("assembled Hessian is symmetric and agrees with hvp columns") {
    const Dataset d = small_blobs();
    const TrainedModel m = fit(d);
    const double damping = 1e-3;
    const Eigen::MatrixXd h = assemble_damped_hessian(m, d, damping);
    REQUIRE(h.rows() == m.params.size());
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index c = 0; c < h.cols(); c += 3) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(h.cols());
        e[c] = 1.0;
        const Eigen::VectorXd want = hvp(m, d, e) + damping * e;
        CHECK(oracle::rel_error(Eigen::VectorXd(h.col(c)), want) < 1e-12);
    }
}

TEST_CASE("cg and explicit ihvp agree on a damped logistic Hessian") {
    const Dataset d = small_blobs();
    const TrainedModel m = fit(d);

    IhvpConfig cg_cfg;
    cg_cfg.method = IhvpMethod::conjugate_gradient;
    cg_cfg.damping = 1e-3;
    cg_cfg.cg_tolerance = 1e-12;
    IhvpConfig ex_cfg = cg_cfg;
    ex_cfg.method = IhvpMethod::explicit_solve;

    const IhvpSolver cg_solver(m, d, cg_cfg);
    const IhvpSolver ex_solver(m, d, ex_cfg);
    const Eigen::VectorXd b = grad_loss(m, d.examples[4]);
    CHECK(oracle::rel_error(cg_solver.solve(b), ex_solver.solve(b)) < 1e-9);
}

TEST_CASE("ihvp solves the damped Newton system") {
    const Dataset d = small_blobs();
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-2;
    const Eigen::VectorXd b = grad_loss(m, d.examples[0]);
    const Eigen::VectorXd x = ihvp(m, d, b, cfg);
    const Eigen::VectorXd back = hvp(m, d, x) + cfg.damping * x;
    CHECK(oracle::rel_error(back, b) < 1e-8);
}

TEST_CASE("explicit solver rejects parameter counts above the cap") {
    const Dataset d = small_blobs();
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.explicit_cap = 2;
    CHECK_THROWS_AS(IhvpSolver(m, d, cfg), config_error);
}

TEST_CASE("influence_on_params is the negated damped-Newton step") {
    const Dataset d = small_blobs();
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-3;
    const Example& z = d.examples[2];
    const Eigen::VectorXd delta = influence_on_params(m, d, z, cfg);
    const Eigen::VectorXd want = -ihvp(m, d, grad_loss(m, z), cfg);
    CHECK(oracle::rel_error(delta, want) < 1e-12);
}

TEST_CASE("pairwise influence matches the assembled bilinear form") {
    const Dataset d = small_blobs();
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-3;

    const Eigen::MatrixXd h = assemble_damped_hessian(m, d, cfg.damping);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    for (const auto& [i, j] :
         {std::pair<std::size_t, std::size_t>{0, 1}, {3, 7}, {10, 2}}) {
        const double got = pairwise_influence(m, d, i, j, cfg);
        const double want = -grad_outcome(m, d.examples[j]).dot(
            ldlt.solve(grad_loss(m, d.examples[i])));
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
    CHECK_THROWS_AS(pairwise_influence(m, d, 3, 3, cfg), config_error);
    CHECK_THROWS_AS(pairwise_influence(m, d, 0, 99, cfg), config_error);
}

TEST_CASE("all_pairs_influence equals per-pair calls and zeroes the diagonal") {
    const Dataset d = small_blobs(12);
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-3;

    const InfluenceMatrix mat = all_pairs_influence(m, d, cfg);
    REQUIRE(mat.n() == 12);
    REQUIRE(mat.ids.size() == 12);
    CHECK(mat.damping == cfg.damping);
    CHECK(mat.method == cfg.method);
    CHECK(mat.model_hash == model_hash(m));
    CHECK_NOTHROW(mat.validate());
    for (long i = 0; i < 12; ++i) {
        CHECK(mat.scores(i, i) == 0.0);
        for (long j = 0; j < 12; ++j) {
            if (i == j) continue;
            CHECK(mat.scores(i, j) ==
                  doctest::Approx(pairwise_influence(m, d, static_cast<std::size_t>(i),
                                                     static_cast<std::size_t>(j), cfg))
                      .epsilon(1e-9));
        }
    }
}

TEST_CASE("all_pairs_influence is independent of the thread count") {
    const Dataset d = small_blobs(16);
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-3;
    InfluenceOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const InfluenceMatrix a = all_pairs_influence(m, d, cfg, one);
    const InfluenceMatrix b = all_pairs_influence(m, d, cfg, four);
    CHECK(a.scores == b.scores);
}

TEST_CASE("abs_scores stores magnitudes") {
    const Dataset d = small_blobs(10);
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-3;
    InfluenceOptions opts;
    opts.abs_scores = true;
    const InfluenceMatrix signed_m = all_pairs_influence(m, d, cfg);
    const InfluenceMatrix abs_m = all_pairs_influence(m, d, cfg, opts);
    CHECK(abs_m.abs_scores);
    CHECK(signed_m.scores.minCoeff() < 0.0); // blob data always has detractors
    CHECK(abs_m.scores == signed_m.scores.cwiseAbs());
}

TEST_CASE("token datasets score with position-max word influence") {
    TokenSyntheticParams p;
    p.n = 14;
    p.num_classes = 2;
    p.vocab_size = 10;
    p.seq_min = 3;
    p.seq_max = 4;
    p.noise = 0.0;
    p.reserved_tail = 1;
    const Dataset d = generate_token_synthetic(p, 4);

    ModelSpec spec;
    spec.family = ModelFamily::embedbag;
    spec.num_classes = 2;
    spec.vocab_size = 10;
    spec.embed_dim = 4;
    TrainConfig tc;
    tc.learning_rate = 0.5;
    tc.steps = 200;
    tc.l2_weight = 1e-2;
    const TrainedModel m = train(d, spec, tc).model;

    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    cfg.damping = 1e-2;
    const InfluenceMatrix mat = all_pairs_influence(m, d, cfg);
    CHECK(mat.scores.minCoeff() >= 0.0); // token scoring is norm-based


    const Example& z1 = d.examples[2];
    const Example& z2 = d.examples[5];
    CHECK(mat.scores(2, 5) ==
          doctest::Approx(text_pairwise_influence(m, d, z1, z2, cfg)).epsilon(1e-9));

    // The pair score is the max over target positions.
    double best = 0.0;
    for (int pos = 0; pos < static_cast<int>(z2.tokens.size()); ++pos)
        best = std::max(best, example_to_word_influence(m, d, z1, z2, pos, cfg));
    CHECK(text_pairwise_influence(m, d, z1, z2, cfg) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("word influence rejects dense models") {
    const Dataset d = small_blobs(8);
    const TrainedModel m = fit(d);
    IhvpConfig cfg;
    cfg.method = IhvpMethod::explicit_solve;
    CHECK_THROWS_AS(text_pairwise_influence(m, d, d.examples[0], d.examples[1], cfg),
                    config_error);
}
