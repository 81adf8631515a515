// Command-line front end: `run` executes a seed sweep of one policy on one
// data source and emits CSV/JSON artifacts; `theory-check` runs the numeric
// verifications of the analysis ingredients and emits a JSON report.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blp/harness.hpp"
#include "blp/io.hpp"
#include "blp/plot.hpp"
#include "blp/theory_check.hpp"

namespace {

int do_run(blp::harness::ExperimentConfig cfg) {
    const std::vector<blp::harness::RunResult> results = blp::harness::run_experiment(cfg);
    const bool theory = cfg.algo == blp::harness::AlgoKind::plot &&
                        cfg.plot_cfg.weight_mode == blp::plot::WeightMode::theory;
    const long round_size = theory ? 1 : cfg.batch_size;
    bool any_failed = false;
    for (const blp::harness::RunResult& r : results) {
        if (r.failed) {
            any_failed = true;
            std::printf("seed %llu: FAILED: %s\n", static_cast<unsigned long long>(r.seed),
                        r.error.c_str());
            continue;
        }
        long accepted = 0;
        for (long a : r.accepts) accepted += a;
        std::printf("seed %llu: regret=%.4f reward=%.1f accepted=%ld/%ld rounds=%zu\n",
                    static_cast<unsigned long long>(r.seed), r.cum_regret.back(),
                    r.cum_reward.back(), accepted,
                    static_cast<long>(r.cum_regret.size()) * round_size, r.cum_regret.size());
    }
    if (!cfg.out_dir.empty())
        std::printf("wrote %s\n", blp::harness::summary_json_path(cfg).c_str());
    return any_failed ? 1 : 0;
}

int do_theory_check(const std::string& out_path) {
    const std::vector<blp::theory::CheckResult> results = blp::theory::run_all_checks();
    bool any_failed = false;
    for (const blp::theory::CheckResult& r : results) {
        any_failed = any_failed || !r.passed;
        std::printf("[%s] %s (violations=%ld, worst_slack=%.3g)\n", r.passed ? "ok" : "FAIL",
                    r.name.c_str(), r.violations, r.worst_slack);
    }
    const std::string report = blp::theory::report_to_json(results).dump(2) + "\n";
    if (out_path.empty()) {
        std::fputs(report.c_str(), stdout);
    } else {
        blp::io::atomic_write_file(out_path, report);
        std::printf("wrote %s\n", out_path.c_str());
    }
    return any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential accept/reject experiments with one-sided label feedback"};
    app.require_subcommand(1);

    blp::harness::ExperimentConfig cfg;
    std::string dataset = "synth";
    std::string algo = "plot";
    std::string optimizer = "adam";
    std::string stream_mode = "replacement";
    bool theory_mode = false;

    CLI::App* run = app.add_subcommand("run", "Run a seed sweep of one policy");
    run->add_option("--dataset", dataset, "adult|bank|mnist5|xor|synth|trap")
        ->capture_default_str();
    run->add_option("--algo", algo, "plot|greedy|eps-greedy|neural-ucb")->capture_default_str();
    run->add_option("--data-root", cfg.data_root,
                    "directory with dataset files (default: $BLP_DATA_ROOT, then ./data)");
    run->add_option("-T,--T", cfg.T, "number of decision rounds")->capture_default_str();
    run->add_option("--batch-size", cfg.batch_size, "points per round")->capture_default_str();
    run->add_option("--seeds", cfg.seeds, "run seeds")
        ->delimiter(',')
        ->capture_default_str();
    run->add_option("--epsilon", cfg.plot_cfg.epsilon,
                    "pseudo-labeling probability for base-rejected points")
        ->capture_default_str();
    run->add_option("--weight", cfg.plot_cfg.weight, "pseudo-label weight W (constant mode)")
        ->capture_default_str();
    CLI::Option* radius_opt =
        run->add_option("--radius", cfg.plot_cfg.radius,
                        "focus radius around pseudo points (default: unbounded; theory mode "
                        "defaults to tau^2/(128 L))");
    run->add_flag("--theory-mode", theory_mode,
                  "anytime weight schedule W_t; forces batch size 1 and epsilon 1");
    run->add_option("--tau", cfg.plot_cfg.tau, "margin of the separable stream")
        ->capture_default_str();
    run->add_option("--delta", cfg.plot_cfg.delta_prime, "schedule confidence parameter")
        ->capture_default_str();
    run->add_option("--gamma", cfg.gamma, "confidence-bonus scale (neural-ucb)")
        ->capture_default_str();
    run->add_option("--eps0", cfg.eps0, "initial exploration rate (eps-greedy)")
        ->capture_default_str();
    run->add_option("--eps-floor", cfg.eps_floor, "final exploration rate (eps-greedy)")
        ->capture_default_str();
    run->add_option("--synth-d", cfg.synth_d, "synthetic stream dimension")
        ->capture_default_str();
    run->add_option("--lipschitz", cfg.lipschitz, "norm of the synthetic oracle's parameter")
        ->capture_default_str();
    run->add_option("--steps", cfg.train_cfg.steps, "optimizer steps per round")
        ->capture_default_str();
    run->add_option("--lr", cfg.train_cfg.lr, "learning rate")->capture_default_str();
    run->add_option("--l2", cfg.train_cfg.l2, "ridge strength lambda")->capture_default_str();
    run->add_option("--optimizer", optimizer, "adam|sgd")->capture_default_str();
    run->add_option("--minibatch", cfg.train_cfg.minibatch,
                    "minibatch size per step (0 = full batch)")
        ->capture_default_str();
    run->add_option("--stream-mode", stream_mode, "once|reshuffle|replacement")
        ->capture_default_str();
    run->add_option("--holdout-n", cfg.holdout_n,
                    "holdout size for the accuracy series (0 = off)")
        ->capture_default_str();
    run->add_option("--eval-every", cfg.eval_every, "rounds between holdout evaluations")
        ->capture_default_str();
    run->add_option("--out", cfg.out_dir, "artifact directory (omit to skip writing)");

    CLI::App* check = app.add_subcommand("theory-check",
                                         "Numeric checks of the analysis ingredients");
    std::string check_out;
    check->add_option("--out", check_out, "write the JSON report here (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (check->parsed()) return do_theory_check(check_out);

        cfg.dataset = blp::harness::dataset_from_name(dataset);
        cfg.algo = blp::harness::algo_from_name(algo);
        if (optimizer == "adam") {
            cfg.train_cfg.optimizer = blp::scorer::Optimizer::adam;
        } else if (optimizer == "sgd") {
            cfg.train_cfg.optimizer = blp::scorer::Optimizer::sgd;
        } else {
            throw std::invalid_argument("unknown optimizer '" + optimizer +
                                        "' (expected adam|sgd)");
        }
        if (stream_mode == "once") {
            cfg.stream_mode = blp::env::StreamMode::once;
        } else if (stream_mode == "reshuffle") {
            cfg.stream_mode = blp::env::StreamMode::reshuffle;
        } else if (stream_mode == "replacement") {
            cfg.stream_mode = blp::env::StreamMode::replacement;
        } else {
            throw std::invalid_argument("unknown stream mode '" + stream_mode +
                                        "' (expected once|reshuffle|replacement)");
        }
        if (theory_mode) {
            cfg.plot_cfg.weight_mode = blp::plot::WeightMode::theory;
            if (radius_opt->count() == 0)
                cfg.plot_cfg.radius = blp::plot::radius_theory(cfg.plot_cfg.tau, cfg.lipschitz);
        }
        return do_run(std::move(cfg));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
