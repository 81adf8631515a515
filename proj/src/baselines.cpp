#include "blp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blp::baselines {

BaselineState make_state(const scorer::Arch& arch, std::uint64_t seed) {
    BaselineState s;
    s.rng.seed(derive_seed(seed, 2));
    s.params = scorer::init_params(arch, s.rng);
    s.t = 1;
    return s;
}

namespace {

std::vector<std::uint8_t> accept_all(std::size_t n) {
    return std::vector<std::uint8_t>(n, 1);
}

}  // namespace

std::vector<std::uint8_t> greedy_step(BaselineState& state, const Batch& batch,
                                      const scorer::TrainConfig& train_cfg) {
    if (batch.empty()) throw std::invalid_argument("greedy_step: empty batch");
    if (state.t <= 1) return accept_all(batch.size());
    state.params = scorer::train(std::move(state.params), state.buffer, train_cfg, state.rng);
    std::vector<std::uint8_t> accepts(batch.size(), 0);
    for (std::size_t j = 0; j < batch.size(); ++j)
        accepts[j] = scorer::score(state.params, batch[j]) >= 0.0 ? 1 : 0;
    return accepts;
}

double eps_schedule(long t, double eps0, double eps_floor, long horizon) {
    if (!(eps0 > 0.0 && eps0 <= 1.0)) throw std::invalid_argument("eps_schedule: eps0 in (0,1]");
    if (!(eps_floor > 0.0 && eps_floor <= eps0))
        throw std::invalid_argument("eps_schedule: need 0 < eps_floor <= eps0");
    if (horizon < 1) throw std::invalid_argument("eps_schedule: horizon must be >= 1");
    if (t < 0) throw std::invalid_argument("eps_schedule: t must be >= 0");
    const double decayed =
        eps0 * std::pow(eps_floor / eps0, static_cast<double>(t) / static_cast<double>(horizon));
    return std::max(eps_floor, decayed);
}

std::vector<std::uint8_t> eps_greedy_step(BaselineState& state, const Batch& batch, double eps0,
                                          double eps_floor, long horizon,
                                          const scorer::TrainConfig& train_cfg) {
    if (batch.empty()) throw std::invalid_argument("eps_greedy_step: empty batch");
    if (state.t <= 1) return accept_all(batch.size());
    state.params = scorer::train(std::move(state.params), state.buffer, train_cfg, state.rng);
    const double eps = eps_schedule(state.t, eps0, eps_floor, horizon);
    std::vector<std::uint8_t> accepts(batch.size(), 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const bool explore = u(state.rng) < eps;
        accepts[j] = (explore || scorer::score(state.params, batch[j]) >= 0.0) ? 1 : 0;
    }
    return accepts;
}

double ucb_bonus(const scorer::ScorerParams& params, const std::vector<double>& z_diag,
                 const FeatureVector& x, double gamma) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("ucb_bonus: gamma must be >= 0");
    if (z_diag.size() != params.theta.size())
        throw std::invalid_argument("ucb_bonus: Z does not match parameter count");
    const std::vector<double> g = scorer::score_grad(params, x);
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) s += g[k] * g[k] / z_diag[k];
    return gamma * std::sqrt(s);
}

std::vector<std::uint8_t> neural_ucb_step(BaselineState& state, const Batch& batch, double gamma,
                                          const scorer::TrainConfig& train_cfg) {
    if (batch.empty()) throw std::invalid_argument("neural_ucb_step: empty batch");
    if (state.z_diag.empty()) state.z_diag.assign(state.params.theta.size(), 1.0);

    std::vector<std::uint8_t> accepts;
    if (state.t <= 1) {
        accepts = accept_all(batch.size());
    } else {
        state.params = scorer::train(std::move(state.params), state.buffer, train_cfg, state.rng);
        accepts.assign(batch.size(), 0);
        for (std::size_t j = 0; j < batch.size(); ++j) {
            const double s = scorer::score(state.params, batch[j]);
            accepts[j] = s + ucb_bonus(state.params, state.z_diag, batch[j], gamma) >= 0.0 ? 1 : 0;
        }
    }
    for (std::size_t j = 0; j < batch.size(); ++j) {
        if (!accepts[j]) continue;
        const std::vector<double> g = scorer::score_grad(state.params, batch[j]);
        for (std::size_t k = 0; k < g.size(); ++k) state.z_diag[k] += g[k] * g[k];
    }
    return accepts;
}

void record_outcomes(BaselineState& state, const Batch& batch,
                     const std::vector<std::uint8_t>& accepts,
                     const std::vector<std::optional<int>>& labels) {
    if (accepts.size() != batch.size() || labels.size() != batch.size())
        throw std::invalid_argument("record_outcomes: mask/label size mismatch");
    for (std::size_t j = 0; j < batch.size(); ++j) {
        if (accepts[j]) {
            if (!labels[j])
                throw std::invalid_argument("record_outcomes: accepted point without a label");
            if (*labels[j] != 0 && *labels[j] != 1)
                throw std::invalid_argument("record_outcomes: label must be 0 or 1");
            state.buffer.push_back(LabeledPoint{batch[j], *labels[j], 1.0});
        } else if (labels[j]) {
            throw std::invalid_argument("record_outcomes: label present for a rejected point");
        }
    }
    ++state.t;
}

}  // namespace blp::baselines
