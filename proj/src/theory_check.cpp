#include "blp/theory_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "blp/env.hpp"
#include "blp/scorer.hpp"
#include "blp/types.hpp"

namespace blp::theory {

namespace {

void note_slack(CheckResult& r, double slack, double tol = 0.0) {
    r.worst_slack = std::min(r.worst_slack, slack);
    if (slack < -tol) ++r.violations;
}

}  // namespace

CheckResult check_logistic_bounds(int grid_n) {
    if (grid_n < 2) throw std::invalid_argument("check_logistic_bounds: grid too small");
    CheckResult r;
    r.name = "logistic_tangent_bounds";
    r.worst_slack = 1e300;
    const double c = std::exp(1.0) / std::pow(1.0 + std::exp(1.0), 2.0);
    for (int i = 1; i < grid_n; ++i) {  // open interval (0,1)
        const double x = static_cast<double>(i) / grid_n;
        const double mu = scorer::link(x);
        note_slack(r, mu - (0.5 + c * x));  // lower bound
        note_slack(r, (0.5 + x) - mu);      // upper bound
    }
    r.passed = r.violations == 0;
    r.details = {{"grid_n", grid_n}, {"c", c}};
    return r;
}

CheckResult check_dominance_inequality(int tau_grid_n, int z_scan_n) {
    if (tau_grid_n < 2 || z_scan_n < 2)
        throw std::invalid_argument("check_dominance_inequality: grid too small");
    CheckResult r;
    r.name = "dominance_inequality";
    r.worst_slack = 1e300;
    long scan_violations = 0;
    for (int i = 1; i < tau_grid_n; ++i) {
        const double tau = static_cast<double>(i) / tau_grid_n;
        const double a = 0.5 + 49.0 * tau / 500.0;   // weight of the log terms
        const double b = 0.5 + 487.0 * tau / 6400.0; // numerators
        const double z_end = 0.5 + tau / 128.0;      // claimed minimizer lower bound
        const double tail = tau * tau / 512.0;
        const double value = a * std::log(b / z_end) +
                             (1.0 - a) * std::log((1.0 - b) / (1.0 - z_end + tail));
        note_slack(r, value - (0.009 * tau * tau - 1e-6));

        // objective as a function of z; must be decreasing up to z_end
        const auto g = [&](double z) {
            return a * std::log(b / z) + (1.0 - a) * std::log((1.0 - b) / (1.0 - z + tail));
        };
        double prev = g(z_end / z_scan_n);
        for (int k = 2; k <= z_scan_n; ++k) {
            const double z = z_end * k / z_scan_n;
            const double cur = g(z);
            if (cur > prev + 1e-12) ++scan_violations;
            prev = cur;
        }
    }
    r.violations += scan_violations;
    r.passed = r.violations == 0;
    r.details = {{"tau_grid_n", tau_grid_n},
                 {"z_scan_n", z_scan_n},
                 {"z_scan_violations", scan_violations}};
    return r;
}

CheckResult check_pinsker(int samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("check_pinsker: samples must be >= 1");
    CheckResult r;
    r.name = "pinsker_bernoulli";
    r.worst_slack = 1e300;
    Rng rng(derive_seed(seed, 11));
    std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
    const double ln2 = std::log(2.0);
    for (int i = 0; i < samples; ++i) {
        const double p = u(rng);
        const double q = u(rng);
        const double kl_bits =
            (p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q))) / ln2;
        const double l1 = 2.0 * std::abs(p - q);
        note_slack(r, kl_bits - l1 * l1 / (2.0 * ln2), 1e-12);
    }
    r.passed = r.violations == 0;
    r.details = {{"samples", samples}};
    return r;
}

CheckResult check_anytime_hoeffding(int trials, long horizon, double delta, std::uint64_t seed) {
    if (trials < 1 || horizon < 2)
        throw std::invalid_argument("check_anytime_hoeffding: need trials >= 1, horizon >= 2");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("check_anytime_hoeffding: delta in (0,1)");
    CheckResult r;
    r.name = "anytime_hoeffding";
    Rng rng(derive_seed(seed, 12));
    std::bernoulli_distribution coin(0.5);

    // envelope precomputed once; log argument clamped below at 1
    std::vector<double> bound(horizon + 1, 0.0);
    for (long T = 2; T <= horizon; ++T) {
        const double arg = std::max(1.0, 6.0 * std::log(static_cast<double>(T)) / delta);
        bound[T] = 2.0 * std::sqrt(static_cast<double>(T) * std::log(arg));
    }

    long violated_trials = 0;
    for (int trial = 0; trial < trials; ++trial) {
        double s = coin(rng) ? 1.0 : -1.0;  // T = 1 not tested
        bool violated = false;
        for (long T = 2; T <= horizon; ++T) {
            s += coin(rng) ? 1.0 : -1.0;
            if (s > bound[T]) {
                violated = true;
                break;
            }
        }
        if (violated) ++violated_trials;
    }
    const double rate = static_cast<double>(violated_trials) / trials;
    const double sigma = std::sqrt(delta * (1.0 - delta) / trials);
    const double limit = delta + 3.0 * sigma;
    r.violations = violated_trials;
    r.worst_slack = limit - rate;
    r.passed = rate <= limit;
    r.details = {{"trials", trials},       {"horizon", horizon}, {"delta", delta},
                 {"violation_rate", rate}, {"limit", limit},     {"bound_at_2", bound[2]}};
    return r;
}

CheckResult check_optimism_decomposition(const std::vector<OptimismTraceRow>& trace) {
    CheckResult r;
    r.name = "optimism_decomposition";
    double regret = 0.0, optimism_sum = 0.0;
    long used = 0;
    for (const OptimismTraceRow& row : trace) {
        if (row.model_score < row.oracle_score) continue;  // keep optimistic steps only
        ++used;
        regret += env::pseudo_regret_increment(row.oracle_score, row.accepted);
        if (row.accepted)
            optimism_sum +=
                2.0 * (scorer::link(row.model_score) - scorer::link(row.oracle_score));
    }
    r.worst_slack = optimism_sum - regret;
    r.violations = r.worst_slack < -1e-9 ? 1 : 0;
    r.passed = r.violations == 0;
    r.details = {{"rows_total", trace.size()},
                 {"rows_optimistic", used},
                 {"regret", regret},
                 {"optimism_sum", optimism_sum}};
    return r;
}

std::vector<CheckResult> run_all_checks() {
    std::vector<CheckResult> out;
    out.push_back(check_logistic_bounds());
    out.push_back(check_dominance_inequality());
    out.push_back(check_pinsker());
    out.push_back(check_anytime_hoeffding());

    // constructed traces: exact oracle scores, then uniformly inflated ones
    Rng rng(derive_seed(9, 13));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<OptimismTraceRow> exact, inflated;
    for (int i = 0; i < 2000; ++i) {
        const double f = u(rng);
        exact.push_back({f >= 0.0, f, f});
        const double g = f + 1.0;
        inflated.push_back({g >= 0.0, g, f});
    }
    CheckResult a = check_optimism_decomposition(exact);
    a.name += "_exact_trace";
    CheckResult b = check_optimism_decomposition(inflated);
    b.name += "_inflated_trace";
    out.push_back(std::move(a));
    out.push_back(std::move(b));
    return out;
}

nlohmann::json report_to_json(const std::vector<CheckResult>& results) {
    nlohmann::json checks = nlohmann::json::array();
    bool all = true;
    for (const CheckResult& r : results) {
        checks.push_back({{"name", r.name},
                          {"passed", r.passed},
                          {"violations", r.violations},
                          {"worst_slack", r.worst_slack},
                          {"details", r.details}});
        all = all && r.passed;
    }
    return {{"all_passed", all}, {"checks", checks}};
}

}  // namespace blp::theory
