#pragma once

// Experiment orchestration: builds environments and policies from a single
// config, runs seed sweeps, tracks regret/reward/acceptance metrics, and
// emits per-run CSVs plus a JSON summary (atomic writes).
//
// Regret mode follows the data source: synthetic logistic sources score
// decisions against the expected-value oracle (pseudo-regret); table and
// XOR sources score against a pretrained baseline model's decisions under
// realized labels, floored at zero per step.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "blp/data.hpp"
#include "blp/env.hpp"
#include "blp/plot.hpp"
#include "blp/scorer.hpp"
#include "blp/theory_check.hpp"
#include "blp/types.hpp"

namespace blp::harness {

enum class DatasetKind { adult, bank, mnist5, xor_clusters, synth, trap };
enum class AlgoKind { plot, greedy, eps_greedy, neural_ucb };

std::string dataset_name(DatasetKind k);
std::string algo_name(AlgoKind k);
DatasetKind dataset_from_name(const std::string& name);
AlgoKind algo_from_name(const std::string& name);

struct ExperimentConfig {
    DatasetKind dataset = DatasetKind::synth;
    AlgoKind algo = AlgoKind::plot;
    std::string data_root;  // directory holding adult.csv / bank.csv / IDX files
    long T = 2000;
    int batch_size = 32;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

    plot::PlotConfig plot_cfg;  // pseudo-label policy settings
    double gamma = 1.0;         // confidence-bonus scale
    double eps0 = 0.1;          // eps-greedy start; decays to eps_floor at T
    double eps_floor = 0.001;

    // synthetic stream shape (synth and trap)
    int synth_d = 2;
    double lipschitz = 1.0;

    scorer::TrainConfig train_cfg;
    env::StreamMode stream_mode = env::StreamMode::replacement;

    // optional architecture override (defaults: linear for synth, mlp(d,40,40) otherwise)
    std::optional<scorer::Arch> arch_override;

    // evaluation hooks
    int holdout_n = 0;     // >0 enables a holdout accuracy series (generated sources)
    long eval_every = 10;  // rounds between holdout evaluations
    bool keep_trace = false;

    std::vector<long> checkpoints = {500, 1000, 2000};
    std::string out_dir;  // empty: nothing written
};

// Pseudo-acted tallies (cumulative): how many true positives / negatives the
// pseudo-label model acted on, and how many of each it accepted.
struct BreakdownCounts {
    long pos_seen = 0, pos_accepted = 0;
    long neg_seen = 0, neg_accepted = 0;
};

struct Breakdown {
    std::optional<double> p_accept_pos;  // absent while no positives were pseudo-acted
    std::optional<double> p_accept_neg;
};

Breakdown acceptance_breakdown(const BreakdownCounts& counts);

// One decision-level trace row, retained when keep_trace is set.
// decision_score is the raw score of the deciding model (the optimistic
// clone for the pseudo-label policy; confidence bonuses are not included);
// the accept-all first round records +infinity.
struct TracePoint {
    long t = 0;
    double fstar = 0.0;  // oracle sources only, else NaN
    double decision_score = 0.0;
    std::uint8_t accept = 0;
    std::uint8_t pseudo = 0;
    int true_class = 0;
};

struct RunResult {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    std::vector<double> cum_regret;          // per round, non-decreasing
    std::vector<double> cum_reward;          // realized
    std::vector<long> accepts;               // per-round accepted count
    std::vector<BreakdownCounts> breakdown;  // per round, cumulative
    std::vector<std::pair<long, double>> holdout_accuracy;  // (t, accuracy)
    std::vector<TracePoint> trace;
};

// Data shared across a sweep: loaded table, pretrained baseline, stream spec.
struct Prepared {
    LabeledDataset table;
    scorer::ScorerParams baseline;
    double baseline_holdout_accuracy = 0.0;
    bool has_baseline = false;
    scorer::Arch arch;
};

struct PretrainResult {
    scorer::ScorerParams params;
    double holdout_accuracy = 0.0;
};

// Offline fit on fully labeled data with a holdout split for the reported
// accuracy. Deterministic in (dataset, cfg, seed).
PretrainResult pretrain_baseline(const LabeledDataset& dataset, const scorer::Arch& arch,
                                 const scorer::TrainConfig& cfg, std::uint64_t seed,
                                 double holdout_frac = 0.2);

double accuracy(const scorer::ScorerParams& params, const LabeledDataset& dataset);

Prepared prepare(const ExperimentConfig& cfg);

RunResult run_single(const ExperimentConfig& cfg, const Prepared& prepared, std::uint64_t seed);

// Seed sweep. A failing run is recorded (failed flag plus error) without
// aborting the other seeds. Emits artifacts when cfg.out_dir is set.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

nlohmann::json config_echo(const ExperimentConfig& cfg);

// Writes run_<algo>_<dataset>_seed<k>.csv per run plus
// summary_<algo>_<dataset>.json (mean +- sd regret at the checkpoints).
void emit(const ExperimentConfig& cfg, const std::vector<RunResult>& results);

std::string run_csv_path(const ExperimentConfig& cfg, std::uint64_t seed);
std::string summary_json_path(const ExperimentConfig& cfg);
std::string run_csv_content(const RunResult& result);

// Optimism-decomposition view of a traced run.
std::vector<theory::OptimismTraceRow> optimism_trace(const RunResult& result);

// Deterministic census-schema CSV for offline runs when no real file is on
// disk: realistic marginals, a learnable-but-noisy income rule (about a
// quarter positive), and a small share of rows with '?' fields.
std::string synthetic_adult_csv(int rows, std::uint64_t seed);

// Creates dir/adult.csv from synthetic_adult_csv if it does not exist yet;
// returns dir for use as a data root.
std::string ensure_adult_fixture(const std::string& dir, int rows = 8000,
                                 std::uint64_t seed = 7);

}  // namespace blp::harness
