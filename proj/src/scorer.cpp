#include "blp/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace blp::scorer {

// Flat parameter layout
//   linear:  [w (d), b]
//   mlp:     [W1 (h1*d, row-major), b1 (h1), W2 (h2*h1), b2 (h2), w3 (h2), b3]
// Hidden activation is tanh, output is affine.

Arch Arch::make_linear(int d) {
    if (d < 1) throw std::invalid_argument("Arch: input dimension must be >= 1");
    Arch a;
    a.kind = ArchKind::linear;
    a.d = d;
    return a;
}

Arch Arch::make_mlp(int d, int h1, int h2) {
    if (d < 1 || h1 < 1 || h2 < 1) throw std::invalid_argument("Arch: mlp dims must be >= 1");
    Arch a;
    a.kind = ArchKind::mlp;
    a.d = d;
    a.h1 = h1;
    a.h2 = h2;
    return a;
}

std::size_t Arch::param_count() const {
    if (kind == ArchKind::linear) return static_cast<std::size_t>(d) + 1;
    return static_cast<std::size_t>(h1) * d + h1 + static_cast<std::size_t>(h2) * h1 + h2 + h2 + 1;
}

double link(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

void check_params(const ScorerParams& p) {
    if (p.theta.size() != p.arch.param_count())
        throw std::invalid_argument("scorer: parameter vector does not match architecture");
}

void check_input(const Arch& a, const FeatureVector& x) {
    if (static_cast<int>(x.size()) != a.d)
        throw std::invalid_argument("scorer: feature vector has wrong dimension");
}

// Forward pass scratch for the mlp, reused across points in a batch.
struct MlpScratch {
    std::vector<double> a1, a2;
    std::vector<double> dz1, dz2;
};

double mlp_forward(const ScorerParams& p, const FeatureVector& x, MlpScratch& s) {
    const Arch& a = p.arch;
    const double* W1 = p.theta.data();
    const double* b1 = W1 + static_cast<std::size_t>(a.h1) * a.d;
    const double* W2 = b1 + a.h1;
    const double* b2 = W2 + static_cast<std::size_t>(a.h2) * a.h1;
    const double* w3 = b2 + a.h2;
    const double b3 = w3[a.h2];

    s.a1.resize(a.h1);
    s.a2.resize(a.h2);
    for (int i = 0; i < a.h1; ++i) {
        double z = b1[i];
        const double* row = W1 + static_cast<std::size_t>(i) * a.d;
        for (int j = 0; j < a.d; ++j) z += row[j] * x[j];
        s.a1[i] = std::tanh(z);
    }
    double f = b3;
    for (int k = 0; k < a.h2; ++k) {
        double z = b2[k];
        const double* row = W2 + static_cast<std::size_t>(k) * a.h1;
        for (int i = 0; i < a.h1; ++i) z += row[i] * s.a1[i];
        s.a2[k] = std::tanh(z);
        f += w3[k] * s.a2[k];
    }
    return f;
}

// Accumulates upstream * df/dtheta into g. Requires a1/a2 from mlp_forward.
void mlp_backward(const ScorerParams& p, const FeatureVector& x, double upstream, MlpScratch& s,
                  std::vector<double>& g) {
    const Arch& a = p.arch;
    const std::size_t o_w1 = 0;
    const std::size_t o_b1 = o_w1 + static_cast<std::size_t>(a.h1) * a.d;
    const std::size_t o_w2 = o_b1 + a.h1;
    const std::size_t o_b2 = o_w2 + static_cast<std::size_t>(a.h2) * a.h1;
    const std::size_t o_w3 = o_b2 + a.h2;
    const std::size_t o_b3 = o_w3 + a.h2;
    const double* W2 = p.theta.data() + o_w2;
    const double* w3 = p.theta.data() + o_w3;

    s.dz2.resize(a.h2);
    s.dz1.assign(a.h1, 0.0);
    for (int k = 0; k < a.h2; ++k) {
        g[o_w3 + k] += upstream * s.a2[k];
        const double dz = upstream * w3[k] * (1.0 - s.a2[k] * s.a2[k]);
        s.dz2[k] = dz;
        g[o_b2 + k] += dz;
        const double* row = W2 + static_cast<std::size_t>(k) * a.h1;
        double* grow = g.data() + o_w2 + static_cast<std::size_t>(k) * a.h1;
        for (int i = 0; i < a.h1; ++i) {
            grow[i] += dz * s.a1[i];
            s.dz1[i] += dz * row[i];
        }
    }
    g[o_b3] += upstream;
    for (int i = 0; i < a.h1; ++i) {
        const double dz = s.dz1[i] * (1.0 - s.a1[i] * s.a1[i]);
        g[o_b1 + i] += dz;
        double* grow = g.data() + o_w1 + static_cast<std::size_t>(i) * a.d;
        for (int j = 0; j < a.d; ++j) grow[j] += dz * x[j];
    }
}

constexpr double kProbClamp = 1e-12;

void check_point(const Arch& a, const LabeledPoint& pt) {
    check_input(a, pt.x);
    if (pt.label != 0 && pt.label != 1)
        throw std::invalid_argument("scorer: labels must be 0 or 1");
    if (!(pt.weight >= 0.0)) throw std::invalid_argument("scorer: weights must be >= 0");
}

// Shared loss-gradient core; `subset` (optional) selects data indices.
std::vector<double> grad_impl(const ScorerParams& p, const LabeledDataset& data, double l2,
                              const std::vector<std::size_t>* subset) {
    check_params(p);
    std::vector<double> g(p.theta.size(), 0.0);
    MlpScratch s;
    const std::size_t n = subset ? subset->size() : data.size();
    for (std::size_t ii = 0; ii < n; ++ii) {
        const LabeledPoint& pt = data[subset ? (*subset)[ii] : ii];
        check_point(p.arch, pt);
        if (p.arch.kind == ArchKind::linear) {
            double f = p.theta[p.arch.d];
            for (int j = 0; j < p.arch.d; ++j) f += p.theta[j] * pt.x[j];
            const double e = pt.weight * (link(f) - pt.label);
            for (int j = 0; j < p.arch.d; ++j) g[j] += e * pt.x[j];
            g[p.arch.d] += e;
        } else {
            const double f = mlp_forward(p, pt.x, s);
            mlp_backward(p, pt.x, pt.weight * (link(f) - pt.label), s, g);
        }
    }
    if (l2 != 0.0)
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += l2 * p.theta[i];
    return g;
}

}  // namespace

ScorerParams init_params(const Arch& arch, Rng& rng) {
    ScorerParams p;
    p.arch = arch;
    p.theta.resize(arch.param_count());
    auto fill = [&rng](double* begin, std::size_t count, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (std::size_t i = 0; i < count; ++i) begin[i] = u(rng);
    };
    if (arch.kind == ArchKind::linear) {
        fill(p.theta.data(), p.theta.size(), arch.d);
    } else {
        double* ptr = p.theta.data();
        fill(ptr, static_cast<std::size_t>(arch.h1) * arch.d + arch.h1, arch.d);
        ptr += static_cast<std::size_t>(arch.h1) * arch.d + arch.h1;
        fill(ptr, static_cast<std::size_t>(arch.h2) * arch.h1 + arch.h2, arch.h1);
        ptr += static_cast<std::size_t>(arch.h2) * arch.h1 + arch.h2;
        fill(ptr, static_cast<std::size_t>(arch.h2) + 1, arch.h2);
    }
    return p;
}

double score(const ScorerParams& p, const FeatureVector& x) {
    check_params(p);
    check_input(p.arch, x);
    if (p.arch.kind == ArchKind::linear) {
        double f = p.theta[p.arch.d];
        for (int j = 0; j < p.arch.d; ++j) f += p.theta[j] * x[j];
        return f;
    }
    MlpScratch s;
    return mlp_forward(p, x, s);
}

double loss(const ScorerParams& p, const LabeledDataset& data, double l2) {
    check_params(p);
    double total = 0.0;
    MlpScratch s;
    for (const LabeledPoint& pt : data) {
        check_point(p.arch, pt);
        double f;
        if (p.arch.kind == ArchKind::linear) {
            f = p.theta[p.arch.d];
            for (int j = 0; j < p.arch.d; ++j) f += p.theta[j] * pt.x[j];
        } else {
            f = mlp_forward(p, pt.x, s);
        }
        const double prob = std::clamp(link(f), kProbClamp, 1.0 - kProbClamp);
        total += pt.weight * (pt.label == 1 ? -std::log(prob) : -std::log(1.0 - prob));
    }
    if (l2 != 0.0) {
        double sq = 0.0;
        for (double t : p.theta) sq += t * t;
        total += 0.5 * l2 * sq;
    }
    return total;
}

std::vector<double> grad(const ScorerParams& p, const LabeledDataset& data, double l2) {
    return grad_impl(p, data, l2, nullptr);
}

std::vector<double> grad_subset(const ScorerParams& p, const LabeledDataset& data,
                                const std::vector<std::size_t>& indices, double l2) {
    for (std::size_t i : indices)
        if (i >= data.size()) throw std::invalid_argument("grad_subset: index out of range");
    return grad_impl(p, data, l2, &indices);
}

std::vector<double> score_grad(const ScorerParams& p, const FeatureVector& x) {
    check_params(p);
    check_input(p.arch, x);
    std::vector<double> g(p.theta.size(), 0.0);
    if (p.arch.kind == ArchKind::linear) {
        for (int j = 0; j < p.arch.d; ++j) g[j] = x[j];
        g[p.arch.d] = 1.0;
        return g;
    }
    MlpScratch s;
    mlp_forward(p, x, s);
    mlp_backward(p, x, 1.0, s, g);
    return g;
}

ScorerParams train(ScorerParams params, const LabeledDataset& data, const TrainConfig& cfg,
                   Rng& rng) {
    check_params(params);
    if (cfg.steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (cfg.l2 < 0.0) throw std::invalid_argument("TrainConfig: l2 must be >= 0");
    if (cfg.minibatch < 0) throw std::invalid_argument("TrainConfig: minibatch must be >= 0");

    const std::size_t n = params.theta.size();
    std::vector<double> m, v;
    if (cfg.optimizer == Optimizer::adam) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    std::vector<std::size_t> idx;
    const bool use_minibatch =
        cfg.minibatch > 0 && data.size() > static_cast<std::size_t>(cfg.minibatch);
    // A minibatch covers minibatch/n of the summed cross-entropy, so the ridge
    // is scaled by the same fraction to keep the step an unbiased estimate of
    // the full objective's gradient direction.
    const double step_l2 =
        use_minibatch ? cfg.l2 * static_cast<double>(cfg.minibatch) / data.size() : cfg.l2;
    for (int step = 1; step <= cfg.steps; ++step) {
        const std::vector<std::size_t>* subset = nullptr;
        if (use_minibatch) {
            idx.resize(cfg.minibatch);
            std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
            for (auto& i : idx) i = pick(rng);
            subset = &idx;
        }
        const std::vector<double> g = grad_impl(params, data, step_l2, subset);
        if (cfg.optimizer == Optimizer::sgd) {
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

nlohmann::json params_to_json(const ScorerParams& p) {
    check_params(p);
    nlohmann::json j;
    j["arch"]["kind"] = p.arch.kind == ArchKind::linear ? "linear" : "mlp";
    j["arch"]["d"] = p.arch.d;
    if (p.arch.kind == ArchKind::mlp) {
        j["arch"]["h1"] = p.arch.h1;
        j["arch"]["h2"] = p.arch.h2;
    }
    j["theta"] = p.theta;
    return j;
}

ScorerParams params_from_json(const nlohmann::json& j) {
    const auto& ja = j.at("arch");
    const std::string kind = ja.at("kind").get<std::string>();
    Arch arch;
    if (kind == "linear") {
        arch = Arch::make_linear(ja.at("d").get<int>());
    } else if (kind == "mlp") {
        arch = Arch::make_mlp(ja.at("d").get<int>(), ja.at("h1").get<int>(),
                              ja.at("h2").get<int>());
    } else {
        throw std::invalid_argument("scorer: unknown architecture kind '" + kind + "'");
    }
    ScorerParams p;
    p.arch = arch;
    p.theta = j.at("theta").get<std::vector<double>>();
    check_params(p);
    return p;
}

}  // namespace blp::scorer
