#include "blp/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "blp/scorer.hpp"

namespace blp::env {

Environment Environment::from_table(LabeledDataset table, const EnvConfig& cfg,
                                    std::uint64_t seed) {
    for (const auto& pt : table)
        if (pt.label != 0 && pt.label != 1)
            throw std::invalid_argument("env: table labels must be 0 or 1");
    Environment e;
    e.table_ = std::move(table);
    e.cfg_ = cfg;
    e.table_source_ = true;
    e.stream_rng_.seed(derive_seed(seed, 0));
    e.label_rng_.seed(derive_seed(seed, 1));
    e.order_.resize(e.table_.size());
    std::iota(e.order_.begin(), e.order_.end(), std::size_t{0});
    std::shuffle(e.order_.begin(), e.order_.end(), e.stream_rng_);
    return e;
}

Environment Environment::from_generator(Generator gen, std::uint64_t seed) {
    Environment e;
    e.gen_ = std::move(gen);
    e.stream_rng_.seed(derive_seed(seed, 0));
    e.label_rng_.seed(derive_seed(seed, 1));
    return e;
}

Environment Environment::from_logistic_oracle(XGenerator gen_x, std::vector<double> theta_star,
                                              std::uint64_t seed) {
    if (theta_star.empty()) throw std::invalid_argument("env: theta_star must be non-empty");
    Environment e;
    e.gen_x_ = std::move(gen_x);
    e.theta_star_ = std::move(theta_star);
    e.stream_rng_.seed(derive_seed(seed, 0));
    e.label_rng_.seed(derive_seed(seed, 1));
    return e;
}

void Environment::fill_pending(int batch_size) {
    pending_x_.clear();
    pending_y_.clear();
    pending_fstar_.clear();
    for (int i = 0; i < batch_size; ++i) {
        if (table_source_) {
            std::size_t row;
            if (cfg_.stream_mode == StreamMode::replacement) {
                std::uniform_int_distribution<std::size_t> pick(0, table_.size() - 1);
                row = pick(stream_rng_);
            } else {
                if (pos_ >= order_.size()) {
                    if (cfg_.stream_mode == StreamMode::once)
                        throw std::runtime_error(
                            "env: stream exhausted and cycling is disabled (once mode)");
                    std::shuffle(order_.begin(), order_.end(), stream_rng_);
                    pos_ = 0;
                }
                row = order_[pos_++];
            }
            pending_x_.push_back(table_[row].x);
            pending_y_.push_back(table_[row].label);
        } else if (!theta_star_.empty()) {
            FeatureVector x = gen_x_(stream_rng_);
            if (x.size() != theta_star_.size())
                throw std::invalid_argument("env: generated x does not match theta_star dimension");
            double f = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) f += theta_star_[j] * x[j];
            std::bernoulli_distribution draw(scorer::link(f));
            pending_y_.push_back(draw(label_rng_) ? 1 : 0);
            pending_fstar_.push_back(f);
            pending_x_.push_back(std::move(x));
        } else {
            LabeledPoint pt = gen_(stream_rng_);
            if (pt.label != 0 && pt.label != 1)
                throw std::invalid_argument("env: generator produced a label outside {0,1}");
            pending_x_.push_back(std::move(pt.x));
            pending_y_.push_back(pt.label);
        }
    }
}

Batch Environment::next_batch(int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("env: batch_size must be >= 1");
    if (pending_) throw std::runtime_error("env: previous batch was never acted on");
    if (table_source_ && table_.empty()) throw std::runtime_error("env: table is empty");
    if (table_source_ && cfg_.stream_mode == StreamMode::once &&
        pos_ + static_cast<std::size_t>(batch_size) > order_.size())
        throw std::runtime_error("env: stream exhausted and cycling is disabled (once mode)");
    fill_pending(batch_size);
    pending_ = true;
    return pending_x_;
}

std::vector<ActOutcome> Environment::act(const Batch& batch,
                                         const std::vector<std::uint8_t>& accepts) {
    if (!pending_) throw std::runtime_error("env: act called with no pending batch");
    if (batch.size() != pending_x_.size() || accepts.size() != pending_x_.size())
        throw std::invalid_argument("env: batch/accept mask size does not match pending batch");
    if (batch != pending_x_)
        throw std::invalid_argument("env: acted batch differs from the batch last emitted");

    std::vector<ActOutcome> out(pending_x_.size());
    for (std::size_t i = 0; i < pending_x_.size(); ++i) {
        ActOutcome& o = out[i];
        o.accepted = accepts[i] != 0;
        if (o.accepted) {
            o.reward = 2.0 * pending_y_[i] - 1.0;
            o.label = pending_y_[i];
        }
        if (oracle_mode()) {
            const double s = 2.0 * scorer::link(pending_fstar_[i]) - 1.0;
            opt_expected_ += std::max(0.0, s);
            if (o.accepted) earned_expected_ += s;
        }
    }
    last_y_ = std::move(pending_y_);
    last_fstar_ = std::move(pending_fstar_);
    pending_y_.clear();
    pending_fstar_.clear();
    pending_ = false;
    return out;
}

const std::vector<int>& Environment::eval_last_labels() const {
    if (pending_) throw std::runtime_error("env: eval access before act");
    return last_y_;
}

std::vector<int> Environment::eval_last_true_classes() const {
    if (pending_) throw std::runtime_error("env: eval access before act");
    if (!oracle_mode()) return last_y_;
    std::vector<int> cls(last_fstar_.size());
    for (std::size_t i = 0; i < cls.size(); ++i) cls[i] = last_fstar_[i] >= 0.0 ? 1 : 0;
    return cls;
}

const std::vector<double>& Environment::eval_last_fstar() const {
    if (!oracle_mode()) throw std::runtime_error("env: f* is only defined in oracle mode");
    if (pending_) throw std::runtime_error("env: eval access before act");
    return last_fstar_;
}

double pseudo_regret_increment(double fstar, bool accepted) {
    const double s = 2.0 * scorer::link(fstar) - 1.0;
    return std::max(0.0, s) - (accepted ? s : 0.0);
}

double pseudo_regret_increment(const std::vector<double>& theta_star, const FeatureVector& x,
                               bool accepted) {
    if (theta_star.size() != x.size())
        throw std::invalid_argument("pseudo_regret_increment: dimension mismatch");
    double f = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) f += theta_star[j] * x[j];
    return pseudo_regret_increment(f, accepted);
}

double baseline_regret_increment(bool baseline_accepts, int y, bool accepted) {
    if (y != 0 && y != 1) throw std::invalid_argument("baseline_regret_increment: label not 0/1");
    const double baseline_reward = baseline_accepts ? 2.0 * y - 1.0 : 0.0;
    const double policy_reward = accepted ? 2.0 * y - 1.0 : 0.0;
    return std::max(0.0, baseline_reward - policy_reward);
}

void RegretLedger::add_round(double increment) {
    per_round.push_back(increment);
    cumulative += increment;
}

}  // namespace blp::env
