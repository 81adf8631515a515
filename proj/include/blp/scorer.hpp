#pragma once

// Parametric scorers f_theta(x) with a logistic read-out mu(f) = P(y=1|x).
// Two fixed architectures share a flat parameter vector: a linear model and a
// two-hidden-layer tanh MLP. Gradients are exact (hand-written backprop) so
// the optimizers below are the only source of training randomness.

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "blp/types.hpp"

namespace blp::scorer {

enum class ArchKind { linear, mlp };

struct Arch {
    ArchKind kind = ArchKind::linear;
    int d = 0;   // input dimension
    int h1 = 0;  // hidden widths, mlp only
    int h2 = 0;

    static Arch make_linear(int d);
    static Arch make_mlp(int d, int h1 = 40, int h2 = 40);
    std::size_t param_count() const;
    bool operator==(const Arch&) const = default;
};

struct ScorerParams {
    Arch arch;
    std::vector<double> theta;  // flat layout, see scorer.cpp
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
    int steps = 100;
    double lr = 1e-3;
    double l2 = 1e-4;          // lambda of the ridge term (lambda/2)*||theta||^2
    Optimizer optimizer = Optimizer::adam;
    int minibatch = 0;         // 0 = full batch, else uniform draws per step
};

// Logistic link, numerically stable across the double range.
double link(double z);

// Fresh parameters, each layer uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
ScorerParams init_params(const Arch& arch, Rng& rng);

double score(const ScorerParams& params, const FeatureVector& x);

// Weighted cross-entropy plus (l2/2)*||theta||^2. Probabilities are clamped
// to [1e-12, 1-1e-12] before the logs.
double loss(const ScorerParams& params, const LabeledDataset& data, double l2);

// Exact gradient of loss() with respect to the flat parameter vector.
std::vector<double> grad(const ScorerParams& params, const LabeledDataset& data, double l2);

// Same, restricted to data[indices]. Lets callers assemble stochastic
// gradients in which some terms are always present.
std::vector<double> grad_subset(const ScorerParams& params, const LabeledDataset& data,
                                const std::vector<std::size_t>& indices, double l2);

// Gradient of the raw score f_theta(x) (not the loss), used as the feature
// map of the confidence-bonus baseline.
std::vector<double> score_grad(const ScorerParams& params, const FeatureVector& x);

// Runs `cfg.steps` optimizer steps and returns the new parameters. `rng` is
// consumed only in minibatch mode. steps == 0 is a no-op. Minibatch steps
// sample cfg.minibatch indices with replacement and scale the ridge term by
// minibatch/n, keeping its weight relative to the covered share of the
// summed cross-entropy consistent with the full objective.
ScorerParams train(ScorerParams params, const LabeledDataset& data, const TrainConfig& cfg,
                   Rng& rng);

nlohmann::json params_to_json(const ScorerParams& params);
ScorerParams params_from_json(const nlohmann::json& j);

}  // namespace blp::scorer
