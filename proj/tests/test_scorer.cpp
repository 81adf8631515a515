#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "blp/scorer.hpp"
#include "blp/types.hpp"

using namespace blp;

namespace {

// Straight-line re-implementation of the mlp forward pass, written against
// the documented flat layout with independent index arithmetic. Used as the
// oracle for score().
double mlp_by_hand(const std::vector<double>& th, const std::vector<double>& x, int d, int h1,
                   int h2) {
    std::vector<double> a1(h1), a2(h2);
    for (int i = 0; i < h1; ++i) {
        double z = th[h1 * d + i];  // b1[i]
        for (int j = 0; j < d; ++j) z += th[i * d + j] * x[j];
        a1[i] = std::tanh(z);
    }
    const int o_w2 = h1 * d + h1;
    const int o_b2 = o_w2 + h2 * h1;
    for (int k = 0; k < h2; ++k) {
        double z = th[o_b2 + k];
        for (int i = 0; i < h1; ++i) z += th[o_w2 + k * h1 + i] * a1[i];
        a2[k] = std::tanh(z);
    }
    const int o_w3 = o_b2 + h2;
    double f = th[o_w3 + h2];  // b3
    for (int k = 0; k < h2; ++k) f += th[o_w3 + k] * a2[k];
    return f;
}

// Central finite differences of loss(), the oracle for grad().
std::vector<double> fd_grad(const scorer::ScorerParams& p, const LabeledDataset& data, double l2,
                            double h = 1e-6) {
    std::vector<double> g(p.theta.size());
    scorer::ScorerParams q = p;
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
        q.theta[i] = p.theta[i] + h;
        const double up = scorer::loss(q, data, l2);
        q.theta[i] = p.theta[i] - h;
        const double dn = scorer::loss(q, data, l2);
        q.theta[i] = p.theta[i];
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

LabeledDataset random_dataset(const scorer::Arch& arch, int n, Rng& rng) {
    std::uniform_real_distribution<double> ux(-1.5, 1.5);
    std::bernoulli_distribution uy(0.5);
    std::uniform_real_distribution<double> uw(0.5, 2.0);
    LabeledDataset data;
    for (int i = 0; i < n; ++i) {
        FeatureVector x(arch.d);
        for (double& v : x) v = ux(rng);
        data.push_back(LabeledPoint{std::move(x), uy(rng) ? 1 : 0, uw(rng)});
    }
    return data;
}

}  // namespace

TEST_CASE("logistic link: exact values, range, monotonicity") {
    CHECK(scorer::link(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(scorer::link(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
    CHECK(scorer::link(-2.0) == doctest::Approx(std::exp(-2.0) / (1.0 + std::exp(-2.0)))
                                    .epsilon(1e-15));
    // extremes stay finite and saturate cleanly
    CHECK(scorer::link(1000.0) == doctest::Approx(1.0));
    CHECK(scorer::link(-1000.0) == doctest::Approx(0.0));
    CHECK(std::isfinite(scorer::link(708.0)));
    CHECK(std::isfinite(scorer::link(-708.0)));
    double prev = -1.0;
    for (double z = -30.0; z <= 30.0; z += 0.37) {
        const double v = scorer::link(z);
        CHECK(v > prev);
        prev = v;
    }
    // complementary symmetry
    CHECK(scorer::link(1.3) + scorer::link(-1.3) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("linear score is dot product plus bias") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(3);
    p.theta = {0.5, -1.0, 2.0, 0.25};
    CHECK(scorer::score(p, {1.0, 2.0, 3.0}) ==
          doctest::Approx(0.5 - 2.0 + 6.0 + 0.25).epsilon(1e-15));
    CHECK(scorer::score(p, {0.0, 0.0, 0.0}) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("mlp score matches a hand-rolled forward pass") {
    const scorer::Arch arch = scorer::Arch::make_mlp(4, 5, 3);
    Rng rng(7);
    scorer::ScorerParams p = scorer::init_params(arch, rng);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    for (int rep = 0; rep < 20; ++rep) {
        FeatureVector x(4);
        for (double& v : x) v = ux(rng);
        CHECK(scorer::score(p, x) ==
              doctest::Approx(mlp_by_hand(p.theta, x, 4, 5, 3)).epsilon(1e-12));
    }
}

TEST_CASE("parameter count matches the flat layout") {
    CHECK(scorer::Arch::make_linear(7).param_count() == 8);
    CHECK(scorer::Arch::make_mlp(4, 5, 3).param_count() == 4 * 5 + 5 + 5 * 3 + 3 + 3 + 1);
}

TEST_CASE("init_params stays inside the per-layer fan-in bounds and is rng-driven") {
    const scorer::Arch arch = scorer::Arch::make_mlp(9, 6, 4);
    Rng rng(3);
    const scorer::ScorerParams p = scorer::init_params(arch, rng);
    REQUIRE(p.theta.size() == arch.param_count());
    const double lim1 = 1.0 / std::sqrt(9.0);
    const double lim2 = 1.0 / std::sqrt(6.0);
    const double lim3 = 1.0 / std::sqrt(4.0);
    std::size_t i = 0;
    for (; i < std::size_t(6 * 9 + 6); ++i) CHECK(std::abs(p.theta[i]) <= lim1);
    for (; i < std::size_t(6 * 9 + 6 + 4 * 6 + 4); ++i) CHECK(std::abs(p.theta[i]) <= lim2);
    for (; i < p.theta.size(); ++i) CHECK(std::abs(p.theta[i]) <= lim3);

    Rng rng_a(11), rng_b(11);
    CHECK(scorer::init_params(arch, rng_a).theta == scorer::init_params(arch, rng_b).theta);
    Rng rng_c(12);
    CHECK(scorer::init_params(arch, rng_c).theta != p.theta);
}

TEST_CASE("loss equals hand-computed weighted cross entropy plus ridge") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(1);
    p.theta = {2.0, -0.5};
    const LabeledDataset data = {
        {{1.0}, 1, 1.0},   // f = 1.5
        {{-1.0}, 0, 2.0},  // f = -2.5
        {{0.25}, 0, 0.5},  // f = 0
    };
    const double l2 = 0.3;
    const double expected = -std::log(scorer::link(1.5)) - 2.0 * std::log(1.0 - scorer::link(-2.5))
                            - 0.5 * std::log(1.0 - scorer::link(0.0))
                            + 0.5 * l2 * (4.0 + 0.25);
    CHECK(scorer::loss(p, data, l2) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("loss stays finite under extreme scores thanks to the probability clamp") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(1);
    p.theta = {1000.0, 0.0};
    const LabeledDataset data = {{{1.0}, 0, 1.0}, {{-1.0}, 1, 1.0}};
    const double v = scorer::loss(p, data, 0.0);
    CHECK(std::isfinite(v));
    // each point sits at a clamp: -log(1e-12) apiece. The high-side term
    // evaluates 1 - (1 - 1e-12), which rounds at the ulp of 1.0 and is only
    // accurate to about 1e-4 relative, hence the loose tolerance.
    CHECK(v == doctest::Approx(-2.0 * std::log(1e-12)).epsilon(1e-5));
}

TEST_CASE("gradient matches central finite differences") {
    Rng rng(17);
    for (const scorer::Arch arch :
         {scorer::Arch::make_linear(5), scorer::Arch::make_mlp(3, 6, 4)}) {
        scorer::ScorerParams p = scorer::init_params(arch, rng);
        const LabeledDataset data = random_dataset(arch, 12, rng);
        const double l2 = 0.05;
        const std::vector<double> g = scorer::grad(p, data, l2);
        const std::vector<double> fd = fd_grad(p, data, l2);
        REQUIRE(g.size() == fd.size());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            num += (g[i] - fd[i]) * (g[i] - fd[i]);
            den += fd[i] * fd[i];
        }
        CHECK(std::sqrt(num) <= 1e-5 * (1.0 + std::sqrt(den)));
    }
}

TEST_CASE("grad_subset equals the full gradient on all indices and adds per point") {
    Rng rng(23);
    const scorer::Arch arch = scorer::Arch::make_mlp(3, 4, 3);
    scorer::ScorerParams p = scorer::init_params(arch, rng);
    const LabeledDataset data = random_dataset(arch, 6, rng);

    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const std::vector<double> g_full = scorer::grad(p, data, 0.2);
    const std::vector<double> g_all = scorer::grad_subset(p, data, all, 0.2);
    for (std::size_t i = 0; i < g_full.size(); ++i)
        CHECK(g_full[i] == doctest::Approx(g_all[i]).epsilon(1e-12));

    // subset {1,4} = point 1 + point 4 (no ridge: l2 = 0)
    const std::vector<double> g_14 = scorer::grad_subset(p, data, {1, 4}, 0.0);
    const std::vector<double> g_1 = scorer::grad_subset(p, data, {1}, 0.0);
    const std::vector<double> g_4 = scorer::grad_subset(p, data, {4}, 0.0);
    for (std::size_t i = 0; i < g_14.size(); ++i)
        CHECK(g_14[i] == doctest::Approx(g_1[i] + g_4[i]).epsilon(1e-12));
}

TEST_CASE("doubling a weight is the same as duplicating the point") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(2);
    p.theta = {0.7, -0.3, 0.1};
    const LabeledDataset doubled = {{{1.0, 2.0}, 1, 2.0}, {{-1.0, 0.5}, 0, 1.0}};
    const LabeledDataset duplicated = {
        {{1.0, 2.0}, 1, 1.0}, {{1.0, 2.0}, 1, 1.0}, {{-1.0, 0.5}, 0, 1.0}};
    CHECK(scorer::loss(p, doubled, 0.4) ==
          doctest::Approx(scorer::loss(p, duplicated, 0.4)).epsilon(1e-14));
    const std::vector<double> ga = scorer::grad(p, doubled, 0.4);
    const std::vector<double> gb = scorer::grad(p, duplicated, 0.4);
    for (std::size_t i = 0; i < ga.size(); ++i)
        CHECK(ga[i] == doctest::Approx(gb[i]).epsilon(1e-13));
}

TEST_CASE("score gradient matches finite differences of the raw score") {
    Rng rng(29);
    const scorer::Arch arch = scorer::Arch::make_mlp(3, 5, 2);
    scorer::ScorerParams p = scorer::init_params(arch, rng);
    const FeatureVector x = {0.4, -1.1, 0.9};
    const std::vector<double> g = scorer::score_grad(p, x);
    scorer::ScorerParams q = p;
    const double h = 1e-6;
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
        q.theta[i] = p.theta[i] + h;
        const double up = scorer::score(q, x);
        q.theta[i] = p.theta[i] - h;
        const double dn = scorer::score(q, x);
        q.theta[i] = p.theta[i];
        CHECK(g[i] == doctest::Approx((up - dn) / (2.0 * h)).epsilon(1e-5));
    }
}

TEST_CASE("training is deterministic, reduces loss, and honors steps == 0") {
    Rng data_rng(31);
    const scorer::Arch arch = scorer::Arch::make_linear(2);
    // separable-ish: label tracks sign of x1
    LabeledDataset data;
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    for (int i = 0; i < 60; ++i) {
        FeatureVector x = {ux(data_rng), ux(data_rng)};
        const int y = x[0] > 0.0 ? 1 : 0;
        data.push_back(LabeledPoint{std::move(x), y, 1.0});
    }

    scorer::TrainConfig cfg;
    cfg.steps = 400;
    cfg.lr = 0.05;
    cfg.l2 = 1e-4;

    Rng r1(5), r2(5);
    scorer::ScorerParams p0 = scorer::init_params(arch, r1);
    r2 = r1;
    const double before = scorer::loss(p0, data, cfg.l2);
    const scorer::ScorerParams p1 = scorer::train(p0, data, cfg, r1);
    const scorer::ScorerParams p2 = scorer::train(p0, data, cfg, r2);
    CHECK(p1.theta == p2.theta);
    const double after = scorer::loss(p1, data, cfg.l2);
    CHECK(after < 0.9 * before);

    scorer::TrainConfig noop = cfg;
    noop.steps = 0;
    Rng r3(5);
    CHECK(scorer::train(p0, data, noop, r3).theta == p0.theta);
}

TEST_CASE("full-batch training leaves the rng untouched; minibatch consumes it") {
    Rng rng(37);
    const scorer::Arch arch = scorer::Arch::make_linear(2);
    scorer::ScorerParams p = scorer::init_params(arch, rng);
    const LabeledDataset data = random_dataset(arch, 10, rng);

    scorer::TrainConfig cfg;
    cfg.steps = 5;
    Rng full_rng(42), full_ref(42);
    scorer::train(p, data, cfg, full_rng);
    CHECK(full_rng == full_ref);

    cfg.minibatch = 4;
    Rng mb_rng(42);
    scorer::train(p, data, cfg, mb_rng);
    CHECK(mb_rng != full_ref);
}

TEST_CASE("sgd takes the literal descent step") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(1);
    p.theta = {0.0, 0.0};
    const LabeledDataset data = {{{2.0}, 1, 1.0}};
    scorer::TrainConfig cfg;
    cfg.steps = 1;
    cfg.lr = 0.1;
    cfg.l2 = 0.0;
    cfg.optimizer = scorer::Optimizer::sgd;
    Rng rng(1);
    const scorer::ScorerParams q = scorer::train(p, data, cfg, rng);
    // grad at theta=0: (mu(0) - 1) * x = -0.5 * [2, 1]
    CHECK(q.theta[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(q.theta[1] == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("adam first step moves each coordinate by about lr") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(1);
    p.theta = {0.0, 0.0};
    const LabeledDataset data = {{{2.0}, 1, 1.0}};
    scorer::TrainConfig cfg;
    cfg.steps = 1;
    cfg.lr = 0.1;
    cfg.l2 = 0.0;
    cfg.optimizer = scorer::Optimizer::adam;
    Rng rng(1);
    const scorer::ScorerParams q = scorer::train(p, data, cfg, rng);
    // bias-corrected first step is lr * g/|g| up to the epsilon in the root
    CHECK(q.theta[0] == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(q.theta[1] == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("train validates its configuration") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(1);
    p.theta = {0.0, 0.0};
    const LabeledDataset data = {{{1.0}, 1, 1.0}};
    Rng rng(1);
    scorer::TrainConfig cfg;
    cfg.steps = -1;
    CHECK_THROWS_AS(scorer::train(p, data, cfg, rng), std::invalid_argument);
    cfg.steps = 1;
    cfg.lr = 0.0;
    CHECK_THROWS_AS(scorer::train(p, data, cfg, rng), std::invalid_argument);
    cfg.lr = 0.1;
    cfg.l2 = -0.5;
    CHECK_THROWS_AS(scorer::train(p, data, cfg, rng), std::invalid_argument);
    cfg.l2 = 0.0;
    cfg.minibatch = -2;
    CHECK_THROWS_AS(scorer::train(p, data, cfg, rng), std::invalid_argument);
}

TEST_CASE("dimension and label mismatches are rejected") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(2);
    p.theta = {1.0, 1.0, 0.0};
    CHECK_THROWS_AS(scorer::score(p, {1.0}), std::invalid_argument);
    const LabeledDataset bad_label = {{{1.0, 1.0}, 2, 1.0}};
    CHECK_THROWS_AS(scorer::loss(p, bad_label, 0.0), std::invalid_argument);
    scorer::ScorerParams short_theta = p;
    short_theta.theta.pop_back();
    CHECK_THROWS_AS(scorer::score(short_theta, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("parameter serialization round-trips exactly") {
    Rng rng(41);
    const scorer::Arch arch = scorer::Arch::make_mlp(3, 4, 2);
    const scorer::ScorerParams p = scorer::init_params(arch, rng);
    const nlohmann::json j = scorer::params_to_json(p);
    // through text, as it would be stored on disk
    const nlohmann::json j2 = nlohmann::json::parse(j.dump());
    const scorer::ScorerParams q = scorer::params_from_json(j2);
    CHECK(q.arch == p.arch);
    REQUIRE(q.theta.size() == p.theta.size());
    for (std::size_t i = 0; i < p.theta.size(); ++i) CHECK(q.theta[i] == p.theta[i]);

    const scorer::ScorerParams lin = {scorer::Arch::make_linear(2), {0.5, -0.25, 1.0}};
    CHECK(scorer::params_from_json(scorer::params_to_json(lin)).theta == lin.theta);
}
