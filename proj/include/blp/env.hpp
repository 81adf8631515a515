#pragma once

// Sequential accept/reject environment with one-sided feedback: the label of
// a point is revealed only when the point is accepted. Accepting pays 2y-1,
// rejecting pays 0.
//
// Sources: a fixed table with hidden labels (real datasets), a generator with
// deterministic labels (XOR clusters), or a logistic oracle (labels drawn
// Bernoulli(mu(theta*.x)) when the point is generated, revealed on accept).
//
// The eval_* accessors exist for measurement code in the harness (regret
// against a baseline model, acceptance breakdowns, oracle diagnostics).
// Policies never hold an Environment reference; they only see feature
// batches, so the eval surface is structurally out of their reach.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "blp/types.hpp"

namespace blp::env {

enum class StreamMode {
    once,         // serve the seed-shuffled table a single time, then error
    reshuffle,    // reshuffle and continue when the pass ends
    replacement,  // i.i.d. uniform row draws (default for real data)
};

struct EnvConfig {
    StreamMode stream_mode = StreamMode::replacement;
};

struct ActOutcome {
    bool accepted = false;
    double reward = 0.0;       // 2y-1 if accepted, else 0
    std::optional<int> label;  // revealed only when accepted
};

// Generator protocol: produce the next point (x plus its hidden label) using
// the environment's stream rng.
using Generator = std::function<LabeledPoint(Rng&)>;

// x-only generator for the logistic oracle source.
using XGenerator = std::function<FeatureVector(Rng&)>;

class Environment {
  public:
    static Environment from_table(LabeledDataset table, const EnvConfig& cfg, std::uint64_t seed);
    static Environment from_generator(Generator gen, std::uint64_t seed);
    // Logistic oracle: f*(x) = theta_star . x (no bias). Labels are drawn
    // once per generated point from a dedicated label rng and kept fixed.
    static Environment from_logistic_oracle(XGenerator gen_x, std::vector<double> theta_star,
                                            std::uint64_t seed);

    // Emits the next batch of feature vectors. Errors if a once-mode table
    // has fewer points left, or if the previous batch was never acted on.
    Batch next_batch(int batch_size);

    // Applies the accept mask to the pending batch. `batch` must be the
    // batch returned by the preceding next_batch call.
    std::vector<ActOutcome> act(const Batch& batch, const std::vector<std::uint8_t>& accepts);

    bool oracle_mode() const { return !theta_star_.empty(); }

    // --- evaluation-only surface (see file comment) ---
    // Hidden labels of the most recently acted batch.
    const std::vector<int>& eval_last_labels() const;
    // True class per point: sign of f* in oracle mode, hidden label otherwise.
    std::vector<int> eval_last_true_classes() const;
    // f* values of the most recently acted batch (oracle mode only).
    const std::vector<double>& eval_last_fstar() const;
    // Oracle-mode expected-value ledgers, for the bookkeeping identity
    //   optimal expected reward - expected reward earned = pseudo-regret.
    double eval_optimal_expected_reward() const { return opt_expected_; }
    double eval_expected_reward_earned() const { return earned_expected_; }

  private:
    Environment() = default;
    void fill_pending(int batch_size);

    // table source
    LabeledDataset table_;
    EnvConfig cfg_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    bool table_source_ = false;

    // generator source
    Generator gen_;
    XGenerator gen_x_;
    std::vector<double> theta_star_;

    Rng stream_rng_{0};
    Rng label_rng_{0};

    // pending batch between next_batch and act
    Batch pending_x_;
    std::vector<int> pending_y_;
    std::vector<double> pending_fstar_;
    bool pending_ = false;

    // last acted batch, retained for eval accessors
    std::vector<int> last_y_;
    std::vector<double> last_fstar_;

    double opt_expected_ = 0.0;
    double earned_expected_ = 0.0;
};

// Expected-value pseudo-regret of one decision against the logistic oracle:
//   max(0, 2 mu(f*) - 1) - a * (2 mu(f*) - 1).
// Always >= 0; zero when the decision matches the optimal rule.
double pseudo_regret_increment(double fstar, bool accepted);
double pseudo_regret_increment(const std::vector<double>& theta_star, const FeatureVector& x,
                               bool accepted);

// Real-data regret of one decision against a fixed baseline model's decision
// under the realized label, floored at zero per step.
double baseline_regret_increment(bool baseline_accepts, int y, bool accepted);

// Per-round regret ledger; one entry per environment round.
struct RegretLedger {
    std::vector<double> per_round;
    double cumulative = 0.0;
    void add_round(double increment);
};

}  // namespace blp::env
