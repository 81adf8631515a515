#pragma once

// Comparison policies: greedy score thresholding, epsilon-greedy with an
// exponentially decayed exploration rate, and a NeuralUCB-style surrogate
// that adds a confidence bonus from gradient features with a diagonal design
// matrix. All share the accept-all first round and the same per-round
// warm-started training cadence as the pseudo-label policy.

#include <cstdint>
#include <optional>
#include <vector>

#include "blp/scorer.hpp"
#include "blp/types.hpp"

namespace blp::baselines {

struct BaselineState {
    AcceptedBuffer buffer;
    scorer::ScorerParams params;
    long t = 1;
    Rng rng{0};
    std::vector<double> z_diag;  // confidence-bonus accumulator, lazily sized
};

BaselineState make_state(const scorer::Arch& arch, std::uint64_t seed);

// Accept exactly the points the current model scores >= 0.
std::vector<std::uint8_t> greedy_step(BaselineState& state, const Batch& batch,
                                      const scorer::TrainConfig& train_cfg);

// max(eps_floor, eps0 * (eps_floor/eps0)^(t/horizon)): exponential decay from
// eps0 at t=0 to eps_floor at t=horizon, clamped beyond.
double eps_schedule(long t, double eps0, double eps_floor, long horizon);

std::vector<std::uint8_t> eps_greedy_step(BaselineState& state, const Batch& batch, double eps0,
                                          double eps_floor, long horizon,
                                          const scorer::TrainConfig& train_cfg);

// gamma * sqrt(sum_k g_k(x)^2 / Z_k) with g = d f_theta(x) / d theta.
// Strictly positive: the output-bias coordinate of g is always 1.
double ucb_bonus(const scorer::ScorerParams& params, const std::vector<double>& z_diag,
                 const FeatureVector& x, double gamma);

// Accept iff score + bonus >= 0; Z accumulates the squared gradient features
// of accepted points only.
std::vector<std::uint8_t> neural_ucb_step(BaselineState& state, const Batch& batch, double gamma,
                                          const scorer::TrainConfig& train_cfg);

// Buffer/t update shared by all baselines; same contract as the pseudo-label
// policy's record_outcomes.
void record_outcomes(BaselineState& state, const Batch& batch,
                     const std::vector<std::uint8_t>& accepts,
                     const std::vector<std::optional<int>>& labels);

}  // namespace blp::baselines
