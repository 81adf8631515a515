#include "blp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "blp/baselines.hpp"
#include "blp/io.hpp"

namespace blp::harness {

namespace fs = std::filesystem;

namespace {

// Trap stream: margin-separated logistic background plus a localized cluster
// of clearly positive points. A handful of planted label-0 points from the
// same region is injected into the policy buffer before round 1, so a purely
// greedy learner starts out rejecting the cluster and, with no feedback from
// rejected points, has no way to recover.
constexpr double kTrapCenterX = 0.45;
constexpr double kTrapCenterY = 0.45;
constexpr double kTrapRadius = 0.12;
constexpr double kTrapRegionProb = 0.2;
constexpr int kTrapPlanted = 20;

// Seed-stream tags owned by the harness (the env takes 0/1, policies take 2).
constexpr std::uint64_t kTagHoldout = 5;
constexpr std::uint64_t kTagPlanted = 6;
constexpr std::uint64_t kTagSpec = 7;

// Baseline pretraining is pinned so every sweep on a dataset compares
// against the same reference decisions regardless of the run's train_cfg.
constexpr std::uint64_t kPretrainSeed = 99;
constexpr std::uint64_t kXorTableSeed = 1234;
constexpr int kXorTableSize = 3000;

scorer::TrainConfig pretrain_cfg() {
    scorer::TrainConfig c;
    c.steps = 1500;
    c.lr = 1e-3;
    c.l2 = 1e-4;
    c.optimizer = scorer::Optimizer::adam;
    c.minibatch = 128;
    return c;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string effective_data_root(const ExperimentConfig& cfg) {
    if (!cfg.data_root.empty()) return cfg.data_root;
    if (const char* e = std::getenv("BLP_DATA_ROOT"); e != nullptr && *e != '\0') return e;
    return "data";
}

std::string resolve_data_file(const std::string& root, std::vector<std::string> names) {
    std::string tried;
    for (const std::string& name : names) {
        for (const char* suffix : {"", ".gz"}) {
            const fs::path cand = fs::path(root) / (name + suffix);
            if (fs::exists(cand)) return cand.string();
            if (!tried.empty()) tried += ", ";
            tried += cand.string();
        }
    }
    throw std::runtime_error("dataset file not found; tried: " + tried);
}

data::LogisticStreamSpec trap_spec(const ExperimentConfig& cfg) {
    // Fixed direction so the trap region (x1 in [0.33, 0.57]) always sits
    // well inside the positive side: f*(x) = L * x1 >= L * 0.33 > tau.
    data::LogisticStreamSpec spec;
    spec.theta_star = {cfg.lipschitz, 0.0};
    spec.tau = cfg.plot_cfg.tau;
    spec.support_radius = 1.0;
    return spec;
}

FeatureVector trap_region_draw(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = kTrapRadius * std::sqrt(u(rng));
    const double a = 2.0 * std::numbers::pi * u(rng);
    return {kTrapCenterX + r * std::cos(a), kTrapCenterY + r * std::sin(a)};
}

bool oracle_dataset(DatasetKind k) {
    return k == DatasetKind::synth || k == DatasetKind::trap;
}

env::Environment make_environment(const ExperimentConfig& cfg, const Prepared& prepared,
                                  const data::LogisticStreamSpec& spec, std::uint64_t seed) {
    switch (cfg.dataset) {
        case DatasetKind::adult:
        case DatasetKind::bank:
        case DatasetKind::mnist5: {
            env::EnvConfig ec;
            ec.stream_mode = cfg.stream_mode;
            return env::Environment::from_table(prepared.table, ec, seed);
        }
        case DatasetKind::xor_clusters: {
            const data::XorConfig xc;
            return env::Environment::from_generator(
                [xc](Rng& r) { return data::xor_draw(xc, r); }, seed);
        }
        case DatasetKind::synth: {
            return env::Environment::from_logistic_oracle(
                [spec](Rng& r) { return data::logistic_draw_x(spec, r); }, spec.theta_star, seed);
        }
        case DatasetKind::trap: {
            auto gen_x = [spec](Rng& r) {
                std::bernoulli_distribution in_region(kTrapRegionProb);
                if (in_region(r)) return trap_region_draw(r);
                return data::logistic_draw_x(spec, r);
            };
            return env::Environment::from_logistic_oracle(gen_x, spec.theta_star, seed);
        }
    }
    throw std::logic_error("make_environment: unknown dataset kind");
}

LabeledDataset make_holdout(const ExperimentConfig& cfg, const Prepared& prepared,
                            const data::LogisticStreamSpec& spec, std::uint64_t seed) {
    LabeledDataset out;
    if (cfg.holdout_n <= 0) return out;
    out.reserve(static_cast<std::size_t>(cfg.holdout_n));
    Rng rng(derive_seed(seed, kTagHoldout));
    switch (cfg.dataset) {
        case DatasetKind::xor_clusters: {
            const data::XorConfig xc;
            for (int i = 0; i < cfg.holdout_n; ++i) out.push_back(data::xor_draw(xc, rng));
            break;
        }
        case DatasetKind::synth:
        case DatasetKind::trap: {
            // Labels here are the Bayes classes (sign of f*), so the series
            // measures agreement with the optimal decision rule.
            std::bernoulli_distribution in_region(kTrapRegionProb);
            for (int i = 0; i < cfg.holdout_n; ++i) {
                FeatureVector x = (cfg.dataset == DatasetKind::trap && in_region(rng))
                                      ? trap_region_draw(rng)
                                      : data::logistic_draw_x(spec, rng);
                const int cls = data::fstar(spec, x) >= 0.0 ? 1 : 0;
                out.push_back(LabeledPoint{std::move(x), cls, 1.0});
            }
            break;
        }
        default: {
            std::uniform_int_distribution<std::size_t> pick(0, prepared.table.size() - 1);
            for (int i = 0; i < cfg.holdout_n; ++i) out.push_back(prepared.table[pick(rng)]);
            break;
        }
    }
    return out;
}

// Fills `res` in place so rounds recorded before a mid-run failure survive.
void run_single_impl(const ExperimentConfig& cfg, const Prepared& prepared, std::uint64_t seed,
                     RunResult& res) {
    if (cfg.T < 1) throw std::invalid_argument("run: T must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("run: batch_size must be >= 1");
    if (cfg.eval_every < 1) throw std::invalid_argument("run: eval_every must be >= 1");

    const bool is_plot = cfg.algo == AlgoKind::plot;
    const bool theory = is_plot && cfg.plot_cfg.weight_mode == plot::WeightMode::theory;
    const int batch_size = theory ? 1 : cfg.batch_size;
    const bool oracle = oracle_dataset(cfg.dataset);

    data::LogisticStreamSpec spec;
    if (cfg.dataset == DatasetKind::synth)
        spec = data::make_logistic_spec(cfg.synth_d, cfg.plot_cfg.tau, cfg.lipschitz,
                                        derive_seed(seed, kTagSpec));
    else if (cfg.dataset == DatasetKind::trap)
        spec = trap_spec(cfg);

    env::Environment environment = make_environment(cfg, prepared, spec, seed);

    std::optional<plot::PlotState> ps;
    std::optional<baselines::BaselineState> bs;
    if (is_plot)
        ps = plot::make_state(prepared.arch, seed);
    else
        bs = baselines::make_state(prepared.arch, seed);

    if (cfg.dataset == DatasetKind::trap) {
        Rng planted_rng(derive_seed(seed, kTagPlanted));
        AcceptedBuffer& buffer = is_plot ? ps->buffer : bs->buffer;
        for (int i = 0; i < kTrapPlanted; ++i)
            buffer.push_back(LabeledPoint{trap_region_draw(planted_rng), 0, 1.0});
    }

    const LabeledDataset holdout = make_holdout(cfg, prepared, spec, seed);

    res.cum_regret.reserve(static_cast<std::size_t>(cfg.T));
    res.cum_reward.reserve(static_cast<std::size_t>(cfg.T));
    res.accepts.reserve(static_cast<std::size_t>(cfg.T));
    res.breakdown.reserve(static_cast<std::size_t>(cfg.T));

    double cum_regret = 0.0;
    double cum_reward = 0.0;
    BreakdownCounts counts;

    for (long t = 1; t <= cfg.T; ++t) {
        const Batch batch = environment.next_batch(batch_size);
        std::vector<std::uint8_t> accepts;
        std::vector<std::uint8_t> pseudo(batch.size(), 0);
        switch (cfg.algo) {
            case AlgoKind::plot: {
                const plot::StepDecision d = plot_step(*ps, batch, cfg.plot_cfg, cfg.train_cfg);
                accepts = d.accept;
                pseudo = d.pseudo;
                break;
            }
            case AlgoKind::greedy:
                accepts = baselines::greedy_step(*bs, batch, cfg.train_cfg);
                break;
            case AlgoKind::eps_greedy:
                accepts = baselines::eps_greedy_step(*bs, batch, cfg.eps0, cfg.eps_floor, cfg.T,
                                                     cfg.train_cfg);
                break;
            case AlgoKind::neural_ucb:
                accepts = baselines::neural_ucb_step(*bs, batch, cfg.gamma, cfg.train_cfg);
                break;
        }

        const std::vector<env::ActOutcome> outcomes = environment.act(batch, accepts);
        std::vector<std::optional<int>> labels(batch.size());
        double round_reward = 0.0;
        long round_accepts = 0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            labels[i] = outcomes[i].label;
            round_reward += outcomes[i].reward;
            round_accepts += accepts[i] ? 1 : 0;
        }
        if (is_plot)
            plot::record_outcomes(*ps, batch, accepts, labels);
        else
            baselines::record_outcomes(*bs, batch, accepts, labels);

        double increment = 0.0;
        if (oracle) {
            const std::vector<double>& fs_vals = environment.eval_last_fstar();
            for (std::size_t i = 0; i < batch.size(); ++i)
                increment += env::pseudo_regret_increment(fs_vals[i], accepts[i] != 0);
        } else {
            const std::vector<int>& ys = environment.eval_last_labels();
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const bool base = scorer::score(prepared.baseline, batch[i]) >= 0.0;
                increment += env::baseline_regret_increment(base, ys[i], accepts[i] != 0);
            }
        }
        cum_regret += increment;
        cum_reward += round_reward;

        const std::vector<int> classes = environment.eval_last_true_classes();
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (!pseudo[i]) continue;
            if (classes[i] == 1) {
                ++counts.pos_seen;
                if (accepts[i]) ++counts.pos_accepted;
            } else {
                ++counts.neg_seen;
                if (accepts[i]) ++counts.neg_accepted;
            }
        }

        res.cum_regret.push_back(cum_regret);
        res.cum_reward.push_back(cum_reward);
        res.accepts.push_back(round_accepts);
        res.breakdown.push_back(counts);

        if (!holdout.empty() && (t == 1 || t == cfg.T || t % cfg.eval_every == 0)) {
            const scorer::ScorerParams& model = is_plot ? ps->base_params : bs->params;
            res.holdout_accuracy.emplace_back(t, accuracy(model, holdout));
        }

        if (cfg.keep_trace) {
            for (std::size_t i = 0; i < batch.size(); ++i) {
                TracePoint tp;
                tp.t = t;
                tp.fstar = oracle ? environment.eval_last_fstar()[i]
                                  : std::numeric_limits<double>::quiet_NaN();
                if (t == 1)
                    tp.decision_score = std::numeric_limits<double>::infinity();
                else if (is_plot)
                    tp.decision_score = scorer::score(ps->optimistic_params, batch[i]);
                else
                    tp.decision_score = scorer::score(bs->params, batch[i]);
                tp.accept = accepts[i];
                tp.pseudo = pseudo[i];
                tp.true_class = classes[i];
                res.trace.push_back(tp);
            }
        }
    }
}

}  // namespace

std::string dataset_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::adult: return "adult";
        case DatasetKind::bank: return "bank";
        case DatasetKind::mnist5: return "mnist5";
        case DatasetKind::xor_clusters: return "xor";
        case DatasetKind::synth: return "synth";
        case DatasetKind::trap: return "trap";
    }
    throw std::logic_error("dataset_name: unknown kind");
}

std::string algo_name(AlgoKind k) {
    switch (k) {
        case AlgoKind::plot: return "plot";
        case AlgoKind::greedy: return "greedy";
        case AlgoKind::eps_greedy: return "eps-greedy";
        case AlgoKind::neural_ucb: return "neural-ucb";
    }
    throw std::logic_error("algo_name: unknown kind");
}

DatasetKind dataset_from_name(const std::string& name) {
    if (name == "adult") return DatasetKind::adult;
    if (name == "bank") return DatasetKind::bank;
    if (name == "mnist5") return DatasetKind::mnist5;
    if (name == "xor") return DatasetKind::xor_clusters;
    if (name == "synth") return DatasetKind::synth;
    if (name == "trap") return DatasetKind::trap;
    throw std::invalid_argument("unknown dataset '" + name +
                                "' (expected adult|bank|mnist5|xor|synth|trap)");
}

AlgoKind algo_from_name(const std::string& name) {
    if (name == "plot") return AlgoKind::plot;
    if (name == "greedy") return AlgoKind::greedy;
    if (name == "eps-greedy") return AlgoKind::eps_greedy;
    if (name == "neural-ucb") return AlgoKind::neural_ucb;
    throw std::invalid_argument("unknown algo '" + name +
                                "' (expected plot|greedy|eps-greedy|neural-ucb)");
}

Breakdown acceptance_breakdown(const BreakdownCounts& counts) {
    Breakdown b;
    if (counts.pos_seen > 0)
        b.p_accept_pos = static_cast<double>(counts.pos_accepted) /
                         static_cast<double>(counts.pos_seen);
    if (counts.neg_seen > 0)
        b.p_accept_neg = static_cast<double>(counts.neg_accepted) /
                         static_cast<double>(counts.neg_seen);
    return b;
}

double accuracy(const scorer::ScorerParams& params, const LabeledDataset& dataset) {
    if (dataset.empty()) throw std::invalid_argument("accuracy: empty dataset");
    long hits = 0;
    for (const LabeledPoint& p : dataset) {
        const bool predicted = scorer::score(params, p.x) >= 0.0;
        if (predicted == (p.label == 1)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.size());
}

PretrainResult pretrain_baseline(const LabeledDataset& dataset, const scorer::Arch& arch,
                                 const scorer::TrainConfig& cfg, std::uint64_t seed,
                                 double holdout_frac) {
    if (dataset.empty()) throw std::invalid_argument("pretrain_baseline: empty dataset");
    if (!(holdout_frac >= 0.0 && holdout_frac < 1.0))
        throw std::invalid_argument("pretrain_baseline: holdout_frac must be in [0,1)");

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(seed, 0));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    const std::size_t n_hold =
        static_cast<std::size_t>(std::floor(holdout_frac * static_cast<double>(dataset.size())));
    LabeledDataset train_set, holdout;
    train_set.reserve(dataset.size() - n_hold);
    holdout.reserve(n_hold);
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_hold ? holdout : train_set).push_back(dataset[order[i]]);
    if (train_set.empty()) throw std::invalid_argument("pretrain_baseline: empty training split");

    Rng init_rng(derive_seed(seed, 1));
    scorer::ScorerParams params = scorer::init_params(arch, init_rng);
    Rng train_rng(derive_seed(seed, 2));
    params = scorer::train(std::move(params), train_set, cfg, train_rng);

    PretrainResult out;
    out.holdout_accuracy = accuracy(params, holdout.empty() ? train_set : holdout);
    out.params = std::move(params);
    return out;
}

Prepared prepare(const ExperimentConfig& cfg) {
    Prepared p;
    const std::string root = effective_data_root(cfg);
    switch (cfg.dataset) {
        case DatasetKind::adult:
            p.table = data::load_adult(resolve_data_file(root, {"adult.csv"})).dataset;
            break;
        case DatasetKind::bank:
            p.table = data::load_bank(resolve_data_file(root, {"bank.csv", "bank-full.csv"}))
                          .dataset;
            break;
        case DatasetKind::mnist5:
            p.table = data::load_mnist5(
                resolve_data_file(root, {"train-images-idx3-ubyte", "train-images.idx3-ubyte"}),
                resolve_data_file(root, {"train-labels-idx1-ubyte", "train-labels.idx1-ubyte"}));
            break;
        case DatasetKind::xor_clusters: {
            const data::XorConfig xc;
            Rng rng(derive_seed(kXorTableSeed, 0));
            p.table.reserve(kXorTableSize);
            for (int i = 0; i < kXorTableSize; ++i) p.table.push_back(data::xor_draw(xc, rng));
            break;
        }
        case DatasetKind::synth:
        case DatasetKind::trap:
            break;
    }

    const int d = p.table.empty() ? cfg.synth_d : static_cast<int>(p.table.front().x.size());
    if (cfg.arch_override.has_value()) {
        if (cfg.arch_override->d != d)
            throw std::invalid_argument("arch override dimension " +
                                        std::to_string(cfg.arch_override->d) +
                                        " does not match data dimension " + std::to_string(d));
        p.arch = *cfg.arch_override;
    } else if (cfg.dataset == DatasetKind::synth) {
        p.arch = scorer::Arch::make_linear(d);
    } else {
        p.arch = scorer::Arch::make_mlp(d, 40, 40);
    }

    if (!oracle_dataset(cfg.dataset)) {
        PretrainResult pre = pretrain_baseline(p.table, p.arch, pretrain_cfg(), kPretrainSeed);
        p.baseline = std::move(pre.params);
        p.baseline_holdout_accuracy = pre.holdout_accuracy;
        p.has_baseline = true;
    }
    return p;
}

RunResult run_single(const ExperimentConfig& cfg, const Prepared& prepared, std::uint64_t seed) {
    RunResult res;
    res.seed = seed;
    try {
        run_single_impl(cfg, prepared, seed, res);
    } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
    }
    return res;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.seeds.empty()) throw std::invalid_argument("run_experiment: no seeds");
    const Prepared prepared = prepare(cfg);
    std::vector<RunResult> results(cfg.seeds.size());

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(hw, cfg.seeds.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
            results[i] = run_single(cfg, prepared, cfg.seeds[i]);
    } else {
        std::atomic<std::size_t> next{0};
        auto work = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cfg.seeds.size()) return;
                results[i] = run_single(cfg, prepared, cfg.seeds[i]);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }

    if (!cfg.out_dir.empty()) emit(cfg, results);
    return results;
}

nlohmann::json config_echo(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = dataset_name(cfg.dataset);
    j["algo"] = algo_name(cfg.algo);
    j["T"] = cfg.T;
    j["batch_size"] = cfg.batch_size;
    j["seeds"] = cfg.seeds;
    j["stream_mode"] = cfg.stream_mode == env::StreamMode::once        ? "once"
                       : cfg.stream_mode == env::StreamMode::reshuffle ? "reshuffle"
                                                                       : "replacement";
    j["plot"] = {
        {"epsilon", cfg.plot_cfg.epsilon},
        {"weight_mode",
         cfg.plot_cfg.weight_mode == plot::WeightMode::theory ? "theory" : "constant"},
        {"weight", cfg.plot_cfg.weight},
        {"radius", std::isfinite(cfg.plot_cfg.radius) ? nlohmann::json(cfg.plot_cfg.radius)
                                                      : nlohmann::json("inf")},
        {"tau", cfg.plot_cfg.tau},
        {"delta_prime", cfg.plot_cfg.delta_prime},
    };
    j["gamma"] = cfg.gamma;
    j["eps0"] = cfg.eps0;
    j["eps_floor"] = cfg.eps_floor;
    j["synth_d"] = cfg.synth_d;
    j["lipschitz"] = cfg.lipschitz;
    j["train"] = {
        {"steps", cfg.train_cfg.steps},
        {"lr", cfg.train_cfg.lr},
        {"l2", cfg.train_cfg.l2},
        {"optimizer", cfg.train_cfg.optimizer == scorer::Optimizer::adam ? "adam" : "sgd"},
        {"minibatch", cfg.train_cfg.minibatch},
    };
    if (cfg.arch_override.has_value()) {
        const scorer::Arch& a = *cfg.arch_override;
        j["arch"] = {{"kind", a.kind == scorer::ArchKind::linear ? "linear" : "mlp"},
                     {"d", a.d},
                     {"h1", a.h1},
                     {"h2", a.h2}};
    } else {
        j["arch"] = "auto";
    }
    j["holdout_n"] = cfg.holdout_n;
    j["eval_every"] = cfg.eval_every;
    j["checkpoints"] = cfg.checkpoints;
    return j;
}

std::string run_csv_path(const ExperimentConfig& cfg, std::uint64_t seed) {
    const std::string base = "run_" + algo_name(cfg.algo) + "_" + dataset_name(cfg.dataset) +
                             "_seed" + std::to_string(seed) + ".csv";
    return (fs::path(cfg.out_dir) / base).string();
}

std::string summary_json_path(const ExperimentConfig& cfg) {
    const std::string base =
        "summary_" + algo_name(cfg.algo) + "_" + dataset_name(cfg.dataset) + ".json";
    return (fs::path(cfg.out_dir) / base).string();
}

std::string run_csv_content(const RunResult& result) {
    std::string out = "t,cum_regret,cum_reward,accepts,p_accept_pos,p_accept_neg\n";
    for (std::size_t i = 0; i < result.cum_regret.size(); ++i) {
        const Breakdown b = acceptance_breakdown(result.breakdown[i]);
        out += std::to_string(i + 1);
        out += ',';
        out += fmt_double(result.cum_regret[i]);
        out += ',';
        out += fmt_double(result.cum_reward[i]);
        out += ',';
        out += std::to_string(result.accepts[i]);
        out += ',';
        if (b.p_accept_pos.has_value()) out += fmt_double(*b.p_accept_pos);
        out += ',';
        if (b.p_accept_neg.has_value()) out += fmt_double(*b.p_accept_neg);
        out += '\n';
    }
    return out;
}

void emit(const ExperimentConfig& cfg, const std::vector<RunResult>& results) {
    if (cfg.out_dir.empty()) throw std::invalid_argument("emit: out_dir not set");
    fs::create_directories(cfg.out_dir);

    nlohmann::json runs = nlohmann::json::array();
    long failures = 0;
    for (const RunResult& r : results) {
        io::atomic_write_file(run_csv_path(cfg, r.seed), run_csv_content(r));
        nlohmann::json e;
        e["seed"] = r.seed;
        e["file"] = fs::path(run_csv_path(cfg, r.seed)).filename().string();
        e["failed"] = r.failed;
        if (r.failed) {
            e["error"] = r.error;
            ++failures;
        }
        e["rounds"] = r.cum_regret.size();
        if (!r.cum_regret.empty()) {
            e["final_regret"] = r.cum_regret.back();
            e["final_reward"] = r.cum_reward.back();
            const Breakdown b = acceptance_breakdown(r.breakdown.back());
            e["p_accept_pos"] =
                b.p_accept_pos.has_value() ? nlohmann::json(*b.p_accept_pos) : nlohmann::json();
            e["p_accept_neg"] =
                b.p_accept_neg.has_value() ? nlohmann::json(*b.p_accept_neg) : nlohmann::json();
        }
        runs.push_back(std::move(e));
    }

    std::vector<long> cps;
    for (long c : cfg.checkpoints)
        if (c >= 1 && c <= cfg.T) cps.push_back(c);
    cps.push_back(cfg.T);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());

    nlohmann::json checkpoints = nlohmann::json::array();
    for (long cp : cps) {
        nlohmann::json e;
        e["t"] = cp;
        std::vector<double> vals;
        nlohmann::json per_seed = nlohmann::json::array();
        for (const RunResult& r : results) {
            if (r.failed || r.cum_regret.size() < static_cast<std::size_t>(cp)) continue;
            const double v = r.cum_regret[static_cast<std::size_t>(cp) - 1];
            vals.push_back(v);
            per_seed.push_back({{"seed", r.seed}, {"regret", v}});
        }
        e["n"] = vals.size();
        if (!vals.empty()) {
            e["regret_mean"] = mean_of(vals);
            e["regret_sd"] = sample_sd(vals);
        }
        e["per_seed"] = std::move(per_seed);
        checkpoints.push_back(std::move(e));
    }

    nlohmann::json summary;
    summary["config"] = config_echo(cfg);
    summary["runs"] = std::move(runs);
    summary["checkpoints"] = std::move(checkpoints);
    summary["failures"] = failures;
    io::atomic_write_file(summary_json_path(cfg), summary.dump(2) + "\n");
}

namespace {

struct CatTable {
    std::vector<const char*> values;
    std::vector<double> weights;
};

int weighted_pick(const CatTable& table, Rng& rng) {
    std::discrete_distribution<int> pick(table.weights.begin(), table.weights.end());
    return pick(rng);
}

}  // namespace

std::string synthetic_adult_csv(int rows, std::uint64_t seed) {
    if (rows < 1) throw std::invalid_argument("synthetic_adult_csv: rows must be >= 1");
    Rng rng(derive_seed(seed, 0));

    const CatTable workclass{{"Private", "Self-emp-not-inc", "Self-emp-inc", "Local-gov",
                              "State-gov", "Federal-gov", "Without-pay"},
                             {0.70, 0.08, 0.035, 0.065, 0.04, 0.03, 0.002}};
    // (education, education-num) kept consistent per row
    const CatTable education{{"HS-grad", "Some-college", "Bachelors", "Masters", "Assoc-voc",
                              "11th", "Assoc-acdm", "10th", "7th-8th", "Prof-school", "9th",
                              "12th", "Doctorate", "5th-6th", "1st-4th", "Preschool"},
                             {0.32, 0.22, 0.165, 0.054, 0.042, 0.036, 0.033, 0.028, 0.02, 0.018,
                              0.016, 0.013, 0.012, 0.01, 0.005, 0.002}};
    const int edu_num[] = {9, 10, 13, 14, 11, 7, 12, 6, 4, 15, 5, 8, 16, 3, 2, 1};
    const CatTable marital{{"Married-civ-spouse", "Never-married", "Divorced", "Separated",
                            "Widowed", "Married-spouse-absent"},
                           {0.46, 0.33, 0.136, 0.031, 0.031, 0.012}};
    const CatTable occupation{{"Prof-specialty", "Craft-repair", "Exec-managerial", "Adm-clerical",
                               "Sales", "Other-service", "Machine-op-inspct", "Transport-moving",
                               "Handlers-cleaners", "Farming-fishing", "Tech-support",
                               "Protective-serv", "Priv-house-serv"},
                              {0.135, 0.134, 0.133, 0.123, 0.119, 0.108, 0.066, 0.052, 0.045,
                               0.033, 0.03, 0.021, 0.005}};
    const CatTable relationship{{"Husband", "Not-in-family", "Own-child", "Unmarried", "Wife",
                                 "Other-relative"},
                                {0.405, 0.255, 0.155, 0.106, 0.048, 0.031}};
    const CatTable race{{"White", "Black", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other"},
                        {0.854, 0.096, 0.031, 0.01, 0.009}};
    const CatTable sex{{"Male", "Female"}, {0.67, 0.33}};
    const CatTable country{{"United-States", "Mexico", "Philippines", "Germany", "Canada",
                            "Puerto-Rico", "India", "England", "Cuba"},
                           {0.913, 0.02, 0.007, 0.005, 0.004, 0.004, 0.004, 0.003, 0.003}};

    std::normal_distribution<double> age_dist(38.5, 13.5);
    std::lognormal_distribution<double> fnlwgt_dist(12.0, 0.55);
    std::normal_distribution<double> hours_dist(40.5, 12.0);
    std::normal_distribution<double> noise(0.0, 1.1);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    std::string out =
        "age,workclass,fnlwgt,education,education-num,marital-status,occupation,relationship,"
        "race,sex,capital-gain,capital-loss,hours-per-week,native-country,income\n";
    for (int r = 0; r < rows; ++r) {
        const int age = std::clamp(static_cast<int>(std::lround(age_dist(rng))), 17, 90);
        const int wc = weighted_pick(workclass, rng);
        const long fnlwgt = std::clamp(static_cast<long>(fnlwgt_dist(rng)), 20000L, 1400000L);
        const int edu = weighted_pick(education, rng);
        const int mar = weighted_pick(marital, rng);
        const int occ = weighted_pick(occupation, rng);
        const int rel = weighted_pick(relationship, rng);
        const int rc = weighted_pick(race, rng);
        const int sx = weighted_pick(sex, rng);
        long gain = 0, loss = 0;
        if (u(rng) < 0.085) gain = 1000 + static_cast<long>(u(rng) * 14000.0);
        else if (u(rng) < 0.05) loss = 1000 + static_cast<long>(u(rng) * 1500.0);
        const int hours = std::clamp(static_cast<int>(std::lround(hours_dist(rng))), 1, 99);
        const int co = weighted_pick(country, rng);

        const bool married = mar == 0;
        const bool exec_prof = occ == 0 || occ == 2;
        double z = 0.055 * (age - 38) - 0.00055 * (age - 38) * (age - 38) +
                   0.36 * (edu_num[edu] - 10) + 0.030 * (hours - 40) + 1.5 * (married ? 1 : 0) +
                   0.55 * (exec_prof ? 1 : 0) + 0.35 * (sx == 0 ? 1 : 0) +
                   (gain > 5000 ? 2.4 : 0.0) + noise(rng);
        const int income = u(rng) < scorer::link(z - 2.45) ? 1 : 0;

        // a sliver of rows carries the census missing-value marker
        const bool missing = u(rng) < 0.02;
        out += std::to_string(age);
        out += ',';
        out += missing ? "?" : workclass.values[wc];
        out += ',';
        out += std::to_string(fnlwgt);
        out += ',';
        out += education.values[edu];
        out += ',';
        out += std::to_string(edu_num[edu]);
        out += ',';
        out += marital.values[mar];
        out += ',';
        out += occupation.values[occ];
        out += ',';
        out += relationship.values[rel];
        out += ',';
        out += race.values[rc];
        out += ',';
        out += sex.values[sx];
        out += ',';
        out += std::to_string(gain);
        out += ',';
        out += std::to_string(loss);
        out += ',';
        out += std::to_string(hours);
        out += ',';
        out += country.values[co];
        out += ',';
        out += income == 1 ? ">50K" : "<=50K";
        out += '\n';
    }
    return out;
}

std::string ensure_adult_fixture(const std::string& dir, int rows, std::uint64_t seed) {
    const fs::path target = fs::path(dir) / "adult.csv";
    if (!fs::exists(target)) {
        fs::create_directories(dir);
        io::atomic_write_file(target.string(), synthetic_adult_csv(rows, seed));
    }
    return dir;
}

std::vector<theory::OptimismTraceRow> optimism_trace(const RunResult& result) {
    std::vector<theory::OptimismTraceRow> rows;
    rows.reserve(result.trace.size());
    for (const TracePoint& tp : result.trace) {
        if (std::isnan(tp.fstar)) continue;
        theory::OptimismTraceRow row;
        row.accepted = tp.accept != 0;
        row.model_score = tp.decision_score;
        row.oracle_score = tp.fstar;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace blp::harness
