#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "motic/bench.hpp"
#include "motic/config.hpp"
#include "motic/gradcheck.hpp"
#include "motic/trainer.hpp"

namespace motic {

// Parallelism cap from MOTIC_THREADS; 1 (the default) is strict
// single-threaded determinism mode.
int motic_threads();

// Mean over base classes and dimensions of the unbiased within-class
// variance of encoded features; the sigma^2 used by the Bayesian estimator.
double mean_within_class_variance(
    const EncoderParams& encoder,
    const std::vector<std::pair<int, std::vector<Vec>>>& class_samples);

// Base bank (session 0) from the base train split, then sessions 1..T with
// the frozen encoder, then per-session metrics over test splits 0..t.
MetricsReport evaluate_pipeline(const EncoderParams& encoder, const TransformSet& transforms,
                                const ExperimentConfig& cfg, const SessionDataset& data,
                                int threads = 1);

struct ExperimentResult {
    TrainResult train;
    MetricsReport metrics;
};

// generate -> train -> evaluate, all in memory.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1);

// Raw config text (if any) with the canonical effective configuration
// appended; later assignments win on re-parse, so the echo is both verbatim
// provenance and a loadable config.
std::string make_echo(const std::string& raw_text, const ExperimentConfig& cfg);

// File-emitting commands behind the CLI. Output names are fixed:
// checkpoint.bin, trainlog.ndjson, config.echo, metrics.csv, metrics.json,
// sweep.csv, ablate.csv.
void cmd_train(const ExperimentConfig& cfg, const std::string& raw_config_text,
               const std::string& out_dir);
MetricsReport cmd_eval(const std::string& checkpoint_path, const std::string& out_dir,
                       const std::optional<InferMode>& infer_override,
                       const std::optional<ProtoMode>& proto_override, std::ostream& out);
int cmd_gradcheck(int instances, std::uint64_t seed, std::ostream& out);

struct BayesDemoCell {
    int shots = 0;          // K
    double tau_sq = 0.0;
    double var_bayes = 0.0;  // closed form, per dimension
    double var_mle = 0.0;    // sigma^2 / K
    double mse_bayes = 0.0;  // Monte-Carlo
    double mse_mle = 0.0;
    double ratio = 0.0;      // mse_bayes / mse_mle
};

std::vector<BayesDemoCell> bayes_demo_grid(int trials, std::uint64_t seed);
void cmd_bayes_demo(int trials, std::uint64_t seed, std::ostream& out);

struct SweepRow {
    double lambda_moti = 0.0;
    double final_a_w = 0.0;
    double a_avg = 0.0;
};

std::vector<SweepRow> sweep_lambda_moti(const ExperimentConfig& base_cfg,
                                        const std::vector<double>& lambdas, int threads = 1);
void cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& lambdas,
               const std::string& out_dir, std::ostream& out);

struct AblationRow {
    std::string name;
    bool use_ssc = false;
    bool use_moti = false;
    bool use_virtual = false;
    double a_base = 0.0;   // final session, mean over seeds
    double a_new = 0.0;
    double a_w = 0.0;
    double a_avg = 0.0;
};

ExperimentConfig ablation_config(const ExperimentConfig& base_cfg, bool use_ssc, bool use_moti,
                                 bool use_virtual, std::uint64_t seed);
std::vector<AblationRow> run_ablation(const ExperimentConfig& base_cfg,
                                      const std::vector<std::uint64_t>& seeds, int threads = 1);
void cmd_ablate(const ExperimentConfig& cfg, int trials, const std::string& out_dir,
                std::ostream& out);

}  // namespace motic
