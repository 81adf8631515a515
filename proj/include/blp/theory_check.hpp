#pragma once

// Numeric spot checks of the analysis ingredients behind the theory-mode
// schedule: logistic tangent bounds, the dominance inequality with its
// interior-minimizer scan, a Pinsker-style KL lower bound, an anytime
// Hoeffding envelope (Monte Carlo), and the optimism regret decomposition
// evaluated on recorded traces.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace blp::theory {

struct CheckResult {
    std::string name;
    bool passed = false;
    long violations = 0;
    double worst_slack = 0.0;  // most adverse margin seen (>= 0 means clean)
    nlohmann::json details;
};

// 1/2 + c x <= mu(x) <= 1/2 + x on (0,1), c = e/(1+e)^2.
CheckResult check_logistic_bounds(int grid_n = 2000);

// For tau on a grid in (0,1):
//   (1/2+49tau/500) ln((1/2+487tau/6400)/(1/2+tau/128))
//   + (1/2-49tau/500) ln((1/2-487tau/6400)/(1/2-tau/128+tau^2/512))
//   >= 0.009 tau^2 - 1e-6,
// plus a dense z-scan confirming the inner objective is still decreasing on
// (0, 1/2+tau/128], i.e. its minimizer sits at or beyond the right endpoint.
CheckResult check_dominance_inequality(int tau_grid_n = 200, int z_scan_n = 2000);

// KL(p||q) in bits >= (1/(2 ln 2)) * (2|p-q|)^2 for random Bernoulli pairs.
CheckResult check_pinsker(int samples = 10000, std::uint64_t seed = 1);

// Fraction of +-1 random walks that ever exceed 2*sqrt(T ln(6 ln T / delta))
// for some T in [2, horizon] must stay within delta plus 3 binomial sigmas.
// The log argument is clamped below at 1.
CheckResult check_anytime_hoeffding(int trials = 10000, long horizon = 1000, double delta = 0.05,
                                    std::uint64_t seed = 1);

// One decision from a recorded run: the model score used for the decision
// and the oracle score of the same point.
struct OptimismTraceRow {
    bool accepted = false;
    double model_score = 0.0;
    double oracle_score = 0.0;  // f*(x)
};

// On the subset of rows where model_score >= oracle_score, cumulative
// pseudo-regret is bounded by sum of 2*a*(mu(model) - mu(oracle)).
CheckResult check_optimism_decomposition(const std::vector<OptimismTraceRow>& trace);

// All checks at default settings (the decomposition runs on constructed
// traces: an exact oracle trace and a uniformly inflated one).
std::vector<CheckResult> run_all_checks();

nlohmann::json report_to_json(const std::vector<CheckResult>& results);

}  // namespace blp::theory
