#pragma once

// Pseudo-label optimism for one-sided feedback. Each round, after fitting the
// base model to the accepted buffer, a random subset of the points the base
// model would reject is temporarily relabeled positive with weight W; a clone
// of the base model is trained against buffer-plus-pseudo-labels and its
// scores decide the whole batch. Pseudo labels never enter the buffer: only
// environment-revealed labels persist.

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

#include "blp/scorer.hpp"
#include "blp/types.hpp"

namespace blp::plot {

enum class WeightMode {
    constant,  // fixed W each round (experimental setting, W = 1)
    theory,    // anytime schedule W_t; forces batch_size 1 and epsilon 1
};

struct PlotConfig {
    double epsilon = 0.05;  // probability a base-rejected point is pseudo-labeled
    WeightMode weight_mode = WeightMode::constant;
    double weight = 1.0;    // W in constant mode
    double radius = std::numeric_limits<double>::infinity();  // focus radius
    // theory mode inputs
    double tau = 0.2;          // margin of the separable stream
    double delta_prime = 0.1;  // confidence parameter of the schedule
};

struct PlotState {
    AcceptedBuffer buffer;
    scorer::ScorerParams base_params;
    scorer::ScorerParams optimistic_params;
    long t = 1;  // round counter; round 1 accepts everything
    Rng rng{0};
};

struct StepDecision {
    std::vector<std::uint8_t> accept;
    std::vector<std::uint8_t> pseudo;  // point entered the pseudo-labeled batch
    double weight_used = 0.0;          // W applied this round (0 when no pseudo points)
};

PlotState make_state(const scorer::Arch& arch, std::uint64_t seed);

// Mask of batch points that are pseudo-labeled: base score < 0 and the
// epsilon draw came up 1. Boundary scores (exactly 0) are accepts and never
// pseudo-labeled.
std::vector<std::uint8_t> filter_pseudo_batch(const scorer::ScorerParams& base_params,
                                              const Batch& batch,
                                              const std::vector<std::uint8_t>& eps_draws);

// Buffer points within L2 distance `radius` of at least one pseudo point.
// Infinite radius with a non-empty pseudo batch selects the whole buffer; an
// empty pseudo batch selects nothing.
LabeledDataset focus_dataset(const AcceptedBuffer& buffer, const Batch& pseudo_points,
                             double radius);

// Cross-entropy over the focus set (weight 1, true labels) plus W times the
// label-1 cross-entropy of each pseudo point, plus (l2/2)*||theta||^2.
double optimistic_loss(const scorer::ScorerParams& params, const AcceptedBuffer& buffer,
                       const Batch& pseudo_points, double weight, double radius, double l2);

// Local evidence counters for the theory schedule: past buffer points inside
// the ball B(x, radius) and how many of them carried label 1.
struct TheoryCounters {
    long a_count = 0;
    long d_pos = 0;
};

TheoryCounters theory_counters(const AcceptedBuffer& buffer, const FeatureVector& x,
                               double radius);

struct WeightBranches {
    double anytime = 0.0;  // 4*sqrt(t*ln(6 t^2 ln t / delta'))
    double ratio = 0.0;    // ((mu(tau)/2 + 1/4)*A_t - D_t) / (3/4 - mu(tau)/2)
};

WeightBranches weight_schedule_branches(long t, double tau, double delta_prime,
                                        const TheoryCounters& counters);

// max of the two branches; domain error for t < 2 (round 1 accepts all, so
// the schedule is never evaluated there).
double weight_schedule_theory(long t, double tau, double delta_prime,
                              const TheoryCounters& counters);

// Focus radius prescribed by the separable-stream analysis: tau^2 / (128 L).
double radius_theory(double tau, double lipschitz);

// One decision round. Round 1 accepts the whole batch. Later rounds retrain
// the base model on the buffer (warm start), pseudo-label the filtered batch,
// train the optimistic clone, and accept exactly the points the optimistic
// model scores >= 0. Advances state.rng; the buffer and t are updated by
// record_outcomes.
StepDecision plot_step(PlotState& state, const Batch& batch, const PlotConfig& cfg,
                       const scorer::TrainConfig& train_cfg);

// Appends accepted points (with their revealed labels) to the buffer and
// advances t. A label for a rejected index is a consistency error.
void record_outcomes(PlotState& state, const Batch& batch,
                     const std::vector<std::uint8_t>& accepts,
                     const std::vector<std::optional<int>>& labels);

// Full state snapshot (buffer, both parameter vectors, t, rng stream) for
// resumable runs.
nlohmann::json state_to_json(const PlotState& state);
PlotState state_from_json(const nlohmann::json& j);

}  // namespace blp::plot
