#include "blp/plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace blp::plot {

PlotState make_state(const scorer::Arch& arch, std::uint64_t seed) {
    PlotState s;
    s.rng.seed(derive_seed(seed, 2));
    s.base_params = scorer::init_params(arch, s.rng);
    s.optimistic_params = s.base_params;
    s.t = 1;
    return s;
}

std::vector<std::uint8_t> filter_pseudo_batch(const scorer::ScorerParams& base_params,
                                              const Batch& batch,
                                              const std::vector<std::uint8_t>& eps_draws) {
    if (eps_draws.size() != batch.size())
        throw std::invalid_argument("filter_pseudo_batch: eps draw count != batch size");
    std::vector<std::uint8_t> mask(batch.size(), 0);
    for (std::size_t j = 0; j < batch.size(); ++j)
        if (eps_draws[j] && scorer::score(base_params, batch[j]) < 0.0) mask[j] = 1;
    return mask;
}

namespace {

double sq_dist(const FeatureVector& a, const FeatureVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

LabeledDataset focus_dataset(const AcceptedBuffer& buffer, const Batch& pseudo_points,
                             double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("focus_dataset: radius must be > 0");
    if (pseudo_points.empty()) return {};
    if (std::isinf(radius)) return buffer;
    const double r2 = radius * radius;
    LabeledDataset out;
    for (const LabeledPoint& pt : buffer) {
        for (const FeatureVector& px : pseudo_points) {
            if (px.size() != pt.x.size())
                throw std::invalid_argument("focus_dataset: dimension mismatch");
            if (sq_dist(pt.x, px) <= r2) {
                out.push_back(pt);
                break;
            }
        }
    }
    return out;
}

namespace {

// Focus set followed by the pseudo points as weight-W label-1 entries; the
// exact dataset the optimistic objective is defined on.
LabeledDataset optimistic_dataset(const AcceptedBuffer& buffer, const Batch& pseudo_points,
                                  double weight, double radius) {
    LabeledDataset data = focus_dataset(buffer, pseudo_points, radius);
    data.reserve(data.size() + pseudo_points.size());
    for (const FeatureVector& x : pseudo_points) data.push_back(LabeledPoint{x, 1, weight});
    return data;
}

}  // namespace

double optimistic_loss(const scorer::ScorerParams& params, const AcceptedBuffer& buffer,
                       const Batch& pseudo_points, double weight, double radius, double l2) {
    if (!(weight >= 0.0)) throw std::invalid_argument("optimistic_loss: weight must be >= 0");
    return scorer::loss(params, optimistic_dataset(buffer, pseudo_points, weight, radius), l2);
}

TheoryCounters theory_counters(const AcceptedBuffer& buffer, const FeatureVector& x,
                               double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("theory_counters: radius must be > 0");
    TheoryCounters c;
    const double r2 = radius * radius;
    for (const LabeledPoint& pt : buffer) {
        if (pt.x.size() != x.size())
            throw std::invalid_argument("theory_counters: dimension mismatch");
        if (std::isinf(radius) || sq_dist(pt.x, x) <= r2) {
            ++c.a_count;
            if (pt.label == 1) ++c.d_pos;
        }
    }
    return c;
}

WeightBranches weight_schedule_branches(long t, double tau, double delta_prime,
                                        const TheoryCounters& counters) {
    if (t < 2) throw std::domain_error("weight schedule: defined for t >= 2 only");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("weight schedule: tau in (0,1)");
    if (!(delta_prime > 0.0 && delta_prime < 1.0))
        throw std::invalid_argument("weight schedule: delta' in (0,1)");
    if (counters.a_count < 0 || counters.d_pos < 0 || counters.d_pos > counters.a_count)
        throw std::invalid_argument("weight schedule: bad counters");
    WeightBranches b;
    const double td = static_cast<double>(t);
    b.anytime = 4.0 * std::sqrt(td * std::log(6.0 * td * td * std::log(td) / delta_prime));
    const double mu_tau = scorer::link(tau);
    b.ratio = ((mu_tau / 2.0 + 0.25) * counters.a_count - counters.d_pos) / (0.75 - mu_tau / 2.0);
    return b;
}

double weight_schedule_theory(long t, double tau, double delta_prime,
                              const TheoryCounters& counters) {
    const WeightBranches b = weight_schedule_branches(t, tau, delta_prime, counters);
    return std::max(b.anytime, b.ratio);
}

double radius_theory(double tau, double lipschitz) {
    if (!(tau > 0.0)) throw std::invalid_argument("radius_theory: tau must be > 0");
    if (!(lipschitz > 0.0)) throw std::invalid_argument("radius_theory: lipschitz must be > 0");
    return tau * tau / (128.0 * lipschitz);
}

namespace {

// Optimistic fit: same optimizer settings as base training, but the pseudo
// points contribute their full (weighted) gradient every step even when the
// focus set is subsampled, since they are the whole point of the exercise.
scorer::ScorerParams train_optimistic(scorer::ScorerParams params, const LabeledDataset& focus,
                                      const LabeledDataset& pseudo,
                                      const scorer::TrainConfig& cfg, Rng& rng) {
    const std::size_t n = params.theta.size();
    std::vector<double> m, v;
    if (cfg.optimizer == scorer::Optimizer::adam) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    const bool subsample =
        cfg.minibatch > 0 && focus.size() > static_cast<std::size_t>(cfg.minibatch);
    std::vector<std::size_t> idx;
    for (int step = 1; step <= cfg.steps; ++step) {
        std::vector<double> g;
        if (focus.empty()) {
            g.assign(n, 0.0);
        } else if (subsample) {
            idx.resize(cfg.minibatch);
            std::uniform_int_distribution<std::size_t> pick(0, focus.size() - 1);
            for (auto& i : idx) i = pick(rng);
            g = scorer::grad_subset(params, focus, idx, 0.0);
        } else {
            g = scorer::grad(params, focus, 0.0);
        }
        const std::vector<double> gp = scorer::grad(params, pseudo, cfg.l2);
        for (std::size_t i = 0; i < n; ++i) g[i] += gp[i];
        if (cfg.optimizer == scorer::Optimizer::sgd) {
            for (std::size_t i = 0; i < n; ++i) params.theta[i] -= cfg.lr * g[i];
        } else {
            const double bc1 = 1.0 - std::pow(beta1, step);
            const double bc2 = 1.0 - std::pow(beta2, step);
            for (std::size_t i = 0; i < n; ++i) {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                params.theta[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + adam_eps);
            }
        }
    }
    return params;
}

}  // namespace

StepDecision plot_step(PlotState& state, const Batch& batch, const PlotConfig& cfg,
                       const scorer::TrainConfig& train_cfg) {
    if (batch.empty()) throw std::invalid_argument("plot_step: empty batch");
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0))
        throw std::invalid_argument("plot_step: epsilon must be in [0,1]");
    const bool theory = cfg.weight_mode == WeightMode::theory;
    if (theory && batch.size() != 1)
        throw std::invalid_argument("plot_step: theory mode requires batch_size 1");

    StepDecision d;
    d.accept.assign(batch.size(), 0);
    d.pseudo.assign(batch.size(), 0);

    if (state.t <= 1) {
        std::fill(d.accept.begin(), d.accept.end(), 1);
        return d;
    }

    state.base_params = scorer::train(std::move(state.base_params), state.buffer, train_cfg,
                                      state.rng);

    const double eps = theory ? 1.0 : cfg.epsilon;
    std::vector<std::uint8_t> draws(batch.size());
    std::bernoulli_distribution coin(eps);
    for (auto& q : draws) q = coin(state.rng) ? 1 : 0;
    d.pseudo = filter_pseudo_batch(state.base_params, batch, draws);

    Batch pseudo_points;
    for (std::size_t j = 0; j < batch.size(); ++j)
        if (d.pseudo[j]) pseudo_points.push_back(batch[j]);

    state.optimistic_params = state.base_params;
    if (!pseudo_points.empty()) {
        double w;
        if (theory) {
            const TheoryCounters c = theory_counters(state.buffer, pseudo_points[0], cfg.radius);
            w = weight_schedule_theory(state.t, cfg.tau, cfg.delta_prime, c);
        } else {
            w = cfg.weight;
        }
        d.weight_used = w;
        const LabeledDataset focus = focus_dataset(state.buffer, pseudo_points, cfg.radius);
        LabeledDataset pseudo;
        pseudo.reserve(pseudo_points.size());
        for (const FeatureVector& x : pseudo_points) pseudo.push_back(LabeledPoint{x, 1, w});
        state.optimistic_params = train_optimistic(std::move(state.optimistic_params), focus,
                                                   pseudo, train_cfg, state.rng);
    }

    for (std::size_t j = 0; j < batch.size(); ++j)
        d.accept[j] = scorer::score(state.optimistic_params, batch[j]) >= 0.0 ? 1 : 0;
    return d;
}

void record_outcomes(PlotState& state, const Batch& batch,
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

nlohmann::json state_to_json(const PlotState& state) {
    nlohmann::json j;
    nlohmann::json buf = nlohmann::json::array();
    for (const LabeledPoint& pt : state.buffer)
        buf.push_back({{"x", pt.x}, {"y", pt.label}});
    j["buffer"] = std::move(buf);
    j["base_params"] = scorer::params_to_json(state.base_params);
    j["optimistic_params"] = scorer::params_to_json(state.optimistic_params);
    j["t"] = state.t;
    std::ostringstream os;
    os << state.rng;
    j["rng"] = os.str();
    return j;
}

PlotState state_from_json(const nlohmann::json& j) {
    PlotState s;
    for (const auto& e : j.at("buffer")) {
        LabeledPoint pt;
        pt.x = e.at("x").get<FeatureVector>();
        pt.label = e.at("y").get<int>();
        s.buffer.push_back(std::move(pt));
    }
    s.base_params = scorer::params_from_json(j.at("base_params"));
    s.optimistic_params = scorer::params_from_json(j.at("optimistic_params"));
    s.t = j.at("t").get<long>();
    std::istringstream is(j.at("rng").get<std::string>());
    is >> s.rng;
    if (!is) throw std::invalid_argument("plot state: bad rng stream");
    return s;
}

}  // namespace blp::plot
