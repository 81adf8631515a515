#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "blp/theory_check.hpp"

using namespace blp;

TEST_CASE("logistic tangent bounds hold on a dense grid") {
    const theory::CheckResult r = theory::check_logistic_bounds(5000);
    CHECK(r.passed);
    CHECK(r.violations == 0);
    CHECK(r.worst_slack >= 0.0);
    CHECK(r.details.at("c").get<double>() ==
          doctest::Approx(std::exp(1.0) / std::pow(1.0 + std::exp(1.0), 2.0)));
    CHECK_THROWS_AS(theory::check_logistic_bounds(1), std::invalid_argument);
}

TEST_CASE("dominance inequality: positive margin and a monotone inner objective") {
    const theory::CheckResult r = theory::check_dominance_inequality(400, 3000);
    CHECK(r.passed);
    CHECK(r.violations == 0);
    CHECK(r.worst_slack >= 0.0);
    CHECK(r.details.at("z_scan_violations") == 0);
    CHECK_THROWS_AS(theory::check_dominance_inequality(1, 100), std::invalid_argument);
    CHECK_THROWS_AS(theory::check_dominance_inequality(100, 1), std::invalid_argument);
}

TEST_CASE("KL lower bound: random pairs plus a hand-computed anchor") {
    const theory::CheckResult r = theory::check_pinsker(20000, 5);
    CHECK(r.passed);
    CHECK(r.violations == 0);
    CHECK(r.worst_slack >= -1e-12);

    // same seed, same result
    CHECK(theory::check_pinsker(500, 9).worst_slack == theory::check_pinsker(500, 9).worst_slack);

    // anchor at p=0.9, q=0.1: KL = 0.8*log2(9) bits, bound = (1.6)^2/(2 ln 2)
    const double p = 0.9, q = 0.1;
    const double kl_bits =
        (p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q))) / std::log(2.0);
    const double bound = std::pow(2.0 * std::abs(p - q), 2.0) / (2.0 * std::log(2.0));
    CHECK(kl_bits == doctest::Approx(0.8 * std::log2(9.0)));
    CHECK(kl_bits == doctest::Approx(2.5359).epsilon(1e-4));
    CHECK(bound == doctest::Approx(1.8466).epsilon(1e-4));
    CHECK(kl_bits >= bound);
}

TEST_CASE("anytime envelope: empirical crossing rate within the stated budget") {
    const theory::CheckResult r = theory::check_anytime_hoeffding(4000, 500, 0.05, 2);
    CHECK(r.passed);
    CHECK(r.worst_slack >= 0.0);
    // bound at T=2: 2*sqrt(2*ln(6*ln 2/0.05))
    const double expect = 2.0 * std::sqrt(2.0 * std::log(6.0 * std::log(2.0) / 0.05));
    CHECK(r.details.at("bound_at_2").get<double>() == doctest::Approx(expect));
    CHECK_THROWS_AS(theory::check_anytime_hoeffding(0, 500, 0.05, 2), std::invalid_argument);
    CHECK_THROWS_AS(theory::check_anytime_hoeffding(10, 1, 0.05, 2), std::invalid_argument);
    CHECK_THROWS_AS(theory::check_anytime_hoeffding(10, 500, 1.5, 2), std::invalid_argument);
}

TEST_CASE("optimism decomposition: exact scores give zero slack") {
    std::vector<theory::OptimismTraceRow> trace;
    for (double f : {-0.8, -0.3, 0.0, 0.2, 0.9})
        trace.push_back({f >= 0.0, f, f});
    const theory::CheckResult r = theory::check_optimism_decomposition(trace);
    CHECK(r.passed);
    CHECK(r.worst_slack == doctest::Approx(0.0));
    CHECK(r.details.at("rows_optimistic") == 5);
    CHECK(r.details.at("regret").get<double>() == doctest::Approx(0.0));
}

TEST_CASE("optimism decomposition: rejecting a point the model itself rated positive fails") {
    // model score 0.5 >= oracle 0.4, yet rejected: real regret with no
    // optimism credit, so the bound must be reported as violated
    const std::vector<theory::OptimismTraceRow> trace = {{false, 0.5, 0.4}};
    const theory::CheckResult r = theory::check_optimism_decomposition(trace);
    CHECK_FALSE(r.passed);
    CHECK(r.violations == 1);
    const double mu = 1.0 / (1.0 + std::exp(-0.4));
    CHECK(r.worst_slack == doctest::Approx(-(2.0 * mu - 1.0)));
}

TEST_CASE("optimism decomposition only audits optimistic rows") {
    // the same rejection with a pessimistic model score is out of scope
    const std::vector<theory::OptimismTraceRow> trace = {{false, -0.5, 0.4}};
    const theory::CheckResult r = theory::check_optimism_decomposition(trace);
    CHECK(r.passed);
    CHECK(r.details.at("rows_optimistic") == 0);
    CHECK(theory::check_optimism_decomposition({}).passed);
}

TEST_CASE("optimism decomposition: uniformly inflated acceptances stay within budget") {
    std::vector<theory::OptimismTraceRow> trace;
    for (int i = -10; i <= 10; ++i) {
        const double f = 0.1 * i;
        trace.push_back({f + 1.0 >= 0.0, f + 1.0, f});
    }
    const theory::CheckResult r = theory::check_optimism_decomposition(trace);
    CHECK(r.passed);
    CHECK(r.worst_slack >= 0.0);
}

TEST_CASE("full battery passes and serializes") {
    const std::vector<theory::CheckResult> all = theory::run_all_checks();
    REQUIRE(all.size() == 6);
    std::set<std::string> names;
    for (const theory::CheckResult& r : all) {
        CHECK(r.passed);
        names.insert(r.name);
    }
    CHECK(names == std::set<std::string>{
                       "logistic_tangent_bounds", "dominance_inequality", "pinsker_bernoulli",
                       "anytime_hoeffding", "optimism_decomposition_exact_trace",
                       "optimism_decomposition_inflated_trace"});

    const nlohmann::json report = theory::report_to_json(all);
    CHECK(report.at("all_passed") == true);
    REQUIRE(report.at("checks").size() == 6);
    for (const auto& c : report.at("checks")) {
        CHECK(c.contains("name"));
        CHECK(c.contains("passed"));
        CHECK(c.contains("violations"));
        CHECK(c.contains("worst_slack"));
        CHECK(c.contains("details"));
    }
}
