#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "blp/baselines.hpp"
#include "blp/scorer.hpp"
#include "blp/types.hpp"

using namespace blp;

namespace {

// Buffer with a clean 1-d threshold at 0: positives right, negatives left.
AcceptedBuffer signed_buffer() {
    return {
        {{1.0}, 1, 1.0}, {{2.0}, 1, 1.0}, {{0.5}, 1, 1.0},
        {{-1.0}, 0, 1.0}, {{-2.0}, 0, 1.0}, {{-0.5}, 0, 1.0},
    };
}

scorer::TrainConfig quick_cfg() {
    scorer::TrainConfig tc;
    tc.steps = 60;
    tc.lr = 0.05;
    return tc;
}

}  // namespace

TEST_CASE("exploration schedule hits its endpoints and decays monotonically") {
    CHECK(baselines::eps_schedule(0, 0.1, 0.001, 1000) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(baselines::eps_schedule(1000, 0.1, 0.001, 1000) ==
          doctest::Approx(0.001).epsilon(1e-12));
    CHECK(baselines::eps_schedule(5000, 0.1, 0.001, 1000) ==
          doctest::Approx(0.001).epsilon(1e-12));  // clamped past the horizon
    CHECK(baselines::eps_schedule(500, 0.1, 0.001, 1000) ==
          doctest::Approx(0.1 * std::pow(0.01, 0.5)).epsilon(1e-12));
    double prev = 1.0;
    for (long t = 0; t <= 1200; t += 50) {
        const double e = baselines::eps_schedule(t, 0.1, 0.001, 1000);
        CHECK(e <= prev + 1e-15);
        prev = e;
    }
    CHECK_THROWS_AS(baselines::eps_schedule(0, 0.0, 0.001, 1000), std::invalid_argument);
    CHECK_THROWS_AS(baselines::eps_schedule(0, 0.1, 0.0, 1000), std::invalid_argument);
    CHECK_THROWS_AS(baselines::eps_schedule(0, 0.1, 0.2, 1000), std::invalid_argument);
    CHECK_THROWS_AS(baselines::eps_schedule(0, 0.1, 0.001, 0), std::invalid_argument);
    CHECK_THROWS_AS(baselines::eps_schedule(-1, 0.1, 0.001, 1000), std::invalid_argument);
}

TEST_CASE("all baselines accept the whole first batch") {
    const Batch batch = {{-100.0}, {55.0}, {0.0}};
    const scorer::TrainConfig tc = quick_cfg();
    {
        baselines::BaselineState s = baselines::make_state(scorer::Arch::make_linear(1), 1);
        CHECK(baselines::greedy_step(s, batch, tc) == std::vector<std::uint8_t>{1, 1, 1});
    }
    {
        baselines::BaselineState s = baselines::make_state(scorer::Arch::make_linear(1), 1);
        CHECK(baselines::eps_greedy_step(s, batch, 0.1, 0.001, 100, tc) ==
              std::vector<std::uint8_t>{1, 1, 1});
    }
    {
        baselines::BaselineState s = baselines::make_state(scorer::Arch::make_linear(1), 1);
        CHECK(baselines::neural_ucb_step(s, batch, 1.0, tc) == std::vector<std::uint8_t>{1, 1, 1});
    }
}

TEST_CASE("greedy accepts exactly the points its retrained model scores >= 0") {
    baselines::BaselineState s = baselines::make_state(scorer::Arch::make_linear(1), 9);
    s.buffer = signed_buffer();
    s.t = 2;  // past the accept-all round
    const Batch batch = {{3.0}, {-3.0}, {0.25}, {-0.25}};
    const std::vector<std::uint8_t> accepts = baselines::greedy_step(s, batch, quick_cfg());
    for (std::size_t j = 0; j < batch.size(); ++j)
        CHECK(accepts[j] == (scorer::score(s.params, batch[j]) >= 0.0 ? 1 : 0));
    // with this buffer the learned threshold must separate the extremes
    CHECK(accepts[0] == 1);
    CHECK(accepts[1] == 0);
}

TEST_CASE("confidence bonus is positive, gamma-linear, and shrinks as evidence accumulates") {
    scorer::ScorerParams p;
    p.arch = scorer::Arch::make_linear(2);
    p.theta = {0.4, -0.2, 0.1};
    std::vector<double> z(p.theta.size(), 1.0);
    const FeatureVector x = {0.0, 0.0};  // only the bias coordinate contributes
    CHECK(baselines::ucb_bonus(p, z, x, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(baselines::ucb_bonus(p, z, x, 2.5) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(baselines::ucb_bonus(p, z, x, 0.0) == doctest::Approx(0.0));

    const FeatureVector x2 = {1.0, 2.0};
    const double before = baselines::ucb_bonus(p, z, x2, 1.0);
    CHECK(before > 0.0);
    for (double& v : z) v *= 16.0;
    CHECK(baselines::ucb_bonus(p, z, x2, 1.0) == doctest::Approx(before / 4.0).epsilon(1e-12));

    CHECK_THROWS_AS(baselines::ucb_bonus(p, z, x2, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(baselines::ucb_bonus(p, {1.0}, x2, 1.0), std::invalid_argument);
}

TEST_CASE("zero-gamma confidence policy matches greedy decision for decision") {
    const scorer::TrainConfig tc = quick_cfg();
    baselines::BaselineState g = baselines::make_state(scorer::Arch::make_linear(1), 4);
    baselines::BaselineState u = baselines::make_state(scorer::Arch::make_linear(1), 4);
    Rng env(55);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    for (int round = 0; round < 12; ++round) {
        Batch b;
        for (int i = 0; i < 4; ++i) b.push_back({ux(env)});
        const std::vector<std::uint8_t> ag = baselines::greedy_step(g, b, tc);
        const std::vector<std::uint8_t> au = baselines::neural_ucb_step(u, b, 0.0, tc);
        CHECK(ag == au);
        std::vector<std::optional<int>> labels(b.size());
        for (std::size_t i = 0; i < b.size(); ++i)
            if (ag[i]) labels[i] = b[i][0] > 0.0 ? 1 : 0;
        baselines::record_outcomes(g, b, ag, labels);
        baselines::record_outcomes(u, b, au, labels);
    }
}

TEST_CASE("a positive bonus can only widen the accept set") {
    const scorer::TrainConfig tc = quick_cfg();
    baselines::BaselineState s = baselines::make_state(scorer::Arch::make_linear(1), 6);
    s.buffer = signed_buffer();
    s.t = 2;
    const Batch batch = {{-0.4}, {0.4}, {-1.5}, {2.0}};
    baselines::BaselineState greedy_clone = s;
    baselines::BaselineState ucb_clone = s;
    const std::vector<std::uint8_t> ag = baselines::greedy_step(greedy_clone, batch, tc);
    const std::vector<std::uint8_t> au = baselines::neural_ucb_step(ucb_clone, batch, 5.0, tc);
    for (std::size_t j = 0; j < batch.size(); ++j)
        if (ag[j]) CHECK(au[j] == 1);
    // and with a huge bonus even clear negatives get explored
    baselines::BaselineState wide = s;
    CHECK(baselines::neural_ucb_step(wide, {{-1.5}}, 100.0, tc) ==
          std::vector<std::uint8_t>{1});
}

TEST_CASE("the design diagonal starts at one and accumulates accepted gradients only") {
    const scorer::TrainConfig tc = quick_cfg();
    baselines::BaselineState s = baselines::make_state(scorer::Arch::make_linear(1), 2);
    s.buffer = signed_buffer();
    s.t = 2;
    const Batch batch = {{2.0}, {-2.0}};
    const std::vector<std::uint8_t> accepts = baselines::neural_ucb_step(s, batch, 0.5, tc);
    REQUIRE(accepts[0] == 1);  // clear positive under the signed buffer
    REQUIRE(accepts[1] == 0);  // clear negative, bonus 0.5-scale cannot flip it
    // Z = 1 + sum over accepted points of the squared score gradient
    std::vector<double> expected(s.params.theta.size(), 1.0);
    const std::vector<double> g = scorer::score_grad(s.params, batch[0]);
    for (std::size_t k = 0; k < g.size(); ++k) expected[k] += g[k] * g[k];
    REQUIRE(s.z_diag.size() == expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k)
        CHECK(s.z_diag[k] == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("exploration rescues a poisoned pocket that starves greedy forever") {
    // Planted label-0 points in a genuinely positive region: greedy never
    // samples the region again, an exploring policy eventually does.
    const scorer::Arch arch = scorer::Arch::make_mlp(2, 16, 16);
    scorer::TrainConfig tc;
    tc.steps = 40;
    tc.lr = 0.02;

    auto poisoned_state = [&](std::uint64_t seed) {
        baselines::BaselineState s = baselines::make_state(arch, seed);
        Rng prng(123);
        std::uniform_real_distribution<double> jitter(-0.05, 0.05);
        for (int i = 0; i < 20; ++i)
            s.buffer.push_back(LabeledPoint{{0.5 + jitter(prng), 0.5 + jitter(prng)}, 0, 1.0});
        // surrounding truth: plenty of genuine positives elsewhere
        for (int i = 0; i < 12; ++i) {
            const double a = 2.0 * 3.14159265358979 * i / 12.0;
            s.buffer.push_back(
                LabeledPoint{{0.5 + 0.45 * std::cos(a), 0.5 + 0.45 * std::sin(a)}, 1, 1.0});
        }
        s.t = 2;
        // fit the poisoned buffer up front so the pocket is carved before
        // the first decision; otherwise the raw init might accept region
        // points early and wash the planted labels out
        scorer::TrainConfig warm;
        warm.steps = 1200;
        warm.lr = 0.02;
        s.params = scorer::train(std::move(s.params), s.buffer, warm, s.rng);
        return s;
    };

    Rng region(7);
    std::uniform_real_distribution<double> r(-0.04, 0.04);
    auto region_batch = [&]() {
        Batch b;
        for (int i = 0; i < 2; ++i) b.push_back({0.5 + r(region), 0.5 + r(region)});
        return b;
    };

    baselines::BaselineState greedy = poisoned_state(31);
    long greedy_accepts = 0;
    for (int round = 0; round < 150; ++round) {
        const Batch b = region_batch();
        const std::vector<std::uint8_t> a = baselines::greedy_step(greedy, b, tc);
        std::vector<std::optional<int>> labels(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            greedy_accepts += a[i] ? 1 : 0;
            if (a[i]) labels[i] = 1;  // the region truly is positive
        }
        baselines::record_outcomes(greedy, b, a, labels);
    }
    CHECK(greedy_accepts == 0);

    baselines::BaselineState explorer = poisoned_state(31);
    long explorer_accepts = 0;
    for (int round = 0; round < 150; ++round) {
        const Batch b = region_batch();
        const std::vector<std::uint8_t> a =
            baselines::eps_greedy_step(explorer, b, 0.5, 0.05, 150, tc);
        std::vector<std::optional<int>> labels(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            explorer_accepts += a[i] ? 1 : 0;
            if (a[i]) labels[i] = 1;
        }
        baselines::record_outcomes(explorer, b, a, labels);
    }
    CHECK(explorer_accepts > 0);
}

TEST_CASE("record_outcomes enforces the label contract") {
    baselines::BaselineState s = baselines::make_state(scorer::Arch::make_linear(1), 1);
    const Batch b = {{1.0}, {2.0}};
    CHECK_THROWS_AS(baselines::record_outcomes(s, b, {1, 1}, {std::optional<int>(1)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        baselines::record_outcomes(s, b, {1, 0}, {std::nullopt, std::nullopt}),
        std::invalid_argument);
    CHECK_THROWS_AS(baselines::record_outcomes(
                        s, b, {0, 1}, {std::optional<int>(1), std::optional<int>(1)}),
                    std::invalid_argument);
    baselines::record_outcomes(s, b, {1, 0}, {std::optional<int>(1), std::nullopt});
    CHECK(s.buffer.size() == 1);
    CHECK(s.t == 2);
}
