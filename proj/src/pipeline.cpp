#include "motic/pipeline.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "motic/rng.hpp"

namespace motic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

std::string metrics_csv(const MetricsReport& report, const std::string& echo) {
    std::ostringstream os;
    std::istringstream echo_lines(echo);
    std::string line;
    while (std::getline(echo_lines, line)) os << "# " << line << "\n";
    os << "session,n_base,n_new,A_B,A_N,A_W\n";
    for (const auto& r : report.rows) {
        os << r.session << ',' << r.n_base << ',' << r.n_new << ',' << fmt(r.a_base) << ',';
        if (r.a_new) os << fmt(*r.a_new);
        os << ',' << fmt(r.a_overall) << "\n";
    }
    os << "# A_avg = " << fmt(report.a_avg) << "\n";
    return os.str();
}

std::string metrics_json(const MetricsReport& report, const std::string& echo) {
    json j;
    j["A_avg"] = report.a_avg;
    j["sessions"] = json::array();
    for (const auto& r : report.rows) {
        json row;
        row["session"] = r.session;
        row["n_base"] = r.n_base;
        row["n_new"] = r.n_new;
        row["A_B"] = r.a_base;
        if (r.a_new) row["A_N"] = *r.a_new;
        else row["A_N"] = nullptr;
        row["A_W"] = r.a_overall;
        j["sessions"].push_back(row);
    }
    j["config_echo"] = echo;
    return j.dump(2) + "\n";
}

std::string trainlog_ndjson(const TrainLog& log, const std::string& echo) {
    std::ostringstream os;
    os << json{{"config_echo", echo}}.dump() << "\n";
    for (const auto& e : log.epochs) {
        json row{{"epoch", e.epoch},   {"lr", e.lr},       {"ce", e.ce},
                 {"ssc", e.ssc},       {"moti", e.moti},   {"total", e.total},
                 {"skipped_moti_terms", e.skipped_moti}};
        os << row.dump() << "\n";
    }
    return os.str();
}

}  // namespace

int motic_threads() {
    const char* env = std::getenv("MOTIC_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n > 1 ? n : 1;
}

double mean_within_class_variance(
    const EncoderParams& encoder,
    const std::vector<std::pair<int, std::vector<Vec>>>& class_samples) {
    double var_sum = 0.0;
    long var_count = 0;
    for (const auto& [class_id, samples] : class_samples) {
        if (samples.size() < 2) continue;
        std::vector<Vec> feats;
        feats.reserve(samples.size());
        for (const Vec& x : samples) feats.push_back(encoder_forward(encoder, x));
        const Vec mean = cea_prototype(feats);
        const double inv = 1.0 / static_cast<double>(feats.size() - 1);
        for (std::size_t d = 0; d < mean.size(); ++d) {
            double s = 0.0;
            for (const Vec& f : feats) s += (f[d] - mean[d]) * (f[d] - mean[d]);
            var_sum += s * inv;
            ++var_count;
        }
    }
    if (var_count == 0) throw ConfigError("mean_within_class_variance: no class with >= 2 samples");
    return var_sum / static_cast<double>(var_count);
}

MetricsReport evaluate_pipeline(const EncoderParams& encoder, const TransformSet& transforms,
                                const ExperimentConfig& cfg, const SessionDataset& data,
                                int threads) {
    const auto base_by_class = group_by_class(data.base());

    PrototypeBank bank;
    build_finegrained_bank(encoder, transforms, base_by_class, 0, bank);

    BayesSettings bayes;
    const BayesSettings* bayes_ptr = nullptr;
    if (cfg.proto_mode == ProtoMode::kBayes) {
        bayes.sigma_sq = mean_within_class_variance(encoder, base_by_class);
        bayes.mode = cfg.tau_sq_mode;
        bayes.fixed_tau_sq = cfg.tau_sq;
        bayes_ptr = &bayes;
    }
    run_incremental_sessions(encoder, transforms, bank, data, bayes_ptr);

    MetricsReport report;
    for (int t = 0; t <= data.sessions(); ++t) {
        report.rows.push_back(
            evaluate_session(encoder, transforms, bank, data, t, cfg.infer_mode, threads));
    }
    report.a_avg = aggregate_avg(report.rows);
    return report;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
    ExperimentResult res;
    const SessionDataset data = gen_synthetic_fscil(cfg.bench);
    const TransformSet transforms =
        make_transform_set(cfg.train.hp.m_transforms, cfg.bench.dim, cfg.train.seed);
    res.train = train_base_session(cfg.train, data, transforms);
    res.metrics = evaluate_pipeline(res.train.query, transforms, cfg, data, threads);
    return res;
}

std::string make_echo(const std::string& raw_text, const ExperimentConfig& cfg) {
    std::string echo;
    if (!raw_text.empty()) {
        echo = raw_text;
        if (echo.back() != '\n') echo += '\n';
        echo += "\n# effective configuration (overrides applied)\n";
    }
    echo += cfg.echo_text();
    return echo;
}

void cmd_train(const ExperimentConfig& cfg, const std::string& raw_config_text,
               const std::string& out_dir) {
    fs::create_directories(out_dir);
    const std::string echo = make_echo(raw_config_text, cfg);

    const SessionDataset data = gen_synthetic_fscil(cfg.bench);
    const TransformSet transforms =
        make_transform_set(cfg.train.hp.m_transforms, cfg.bench.dim, cfg.train.seed);
    const TrainResult res = train_base_session(cfg.train, data, transforms);

    Checkpoint ckpt;
    ckpt.query = res.query;
    ckpt.key = res.key;
    ckpt.classifier = res.classifier;
    ckpt.m_transforms = transforms.M;
    ckpt.transform_seed = cfg.train.seed;
    ckpt.config_echo = echo;

    save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), ckpt);
    write_file(fs::path(out_dir) / "trainlog.ndjson", trainlog_ndjson(res.log, echo));
    write_file(fs::path(out_dir) / "config.echo", echo);
}

MetricsReport cmd_eval(const std::string& checkpoint_path, const std::string& out_dir,
                       const std::optional<InferMode>& infer_override,
                       const std::optional<ProtoMode>& proto_override, std::ostream& out) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    ExperimentConfig cfg = ExperimentConfig::from(ConfigFile::parse_text(ckpt.config_echo));
    if (infer_override) cfg.infer_mode = *infer_override;
    if (proto_override) cfg.proto_mode = *proto_override;
    if (cfg.train.hp.m_transforms != ckpt.m_transforms) {
        throw IoError("eval: checkpoint transform count disagrees with its config echo");
    }

    const SessionDataset data = gen_synthetic_fscil(cfg.bench);
    const TransformSet transforms =
        make_transform_set(ckpt.m_transforms, cfg.bench.dim, ckpt.transform_seed);
    const MetricsReport report =
        evaluate_pipeline(ckpt.query, transforms, cfg, data, motic_threads());

    fs::create_directories(out_dir);
    const std::string echo = make_echo(ckpt.config_echo, cfg);
    write_file(fs::path(out_dir) / "metrics.csv", metrics_csv(report, echo));
    write_file(fs::path(out_dir) / "metrics.json", metrics_json(report, echo));
    write_file(fs::path(out_dir) / "config.echo", echo);

    out << "session  n_base  n_new   A_B      A_N      A_W\n";
    for (const auto& r : report.rows) {
        out << std::left << std::setw(8) << r.session << ' ' << std::setw(7) << r.n_base << ' '
            << std::setw(7) << r.n_new << ' ' << std::setw(8) << fmt(r.a_base).substr(0, 7) << ' '
            << std::setw(8) << (r.a_new ? fmt(*r.a_new).substr(0, 7) : "-") << ' '
            << fmt(r.a_overall).substr(0, 7) << "\n";
    }
    out << "A_avg = " << fmt(report.a_avg) << "\n";
    return report;
}

int cmd_gradcheck(int instances, std::uint64_t seed, std::ostream& out) {
    bool all_pass = true;
    for (const auto& r : run_all_gradchecks(instances, seed)) {
        out << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  instances=" << r.instances
            << "  max_rel_err=" << fmt(r.max_rel_err) << "\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}

std::vector<BayesDemoCell> bayes_demo_grid(int trials, std::uint64_t seed) {
    constexpr int kDim = 16;
    constexpr double kSigmaSq = 1.0;
    const int shot_grid[] = {1, 5, 25};
    const double tau_grid[] = {0.1, 0.5, 1.0, 10.0};

    Rng rng = Rng::stream(seed, rng_streams::kDemo);
    std::vector<BayesDemoCell> cells;
    for (int k : shot_grid) {
        for (double tau_sq : tau_grid) {
            BayesDemoCell cell;
            cell.shots = k;
            cell.tau_sq = tau_sq;
            cell.var_bayes = bayes_posterior_variance(k, kSigmaSq, tau_sq);
            cell.var_mle = kSigmaSq / k;

            const double sigma = std::sqrt(kSigmaSq);
            const double tau = std::sqrt(tau_sq);
            BayesianPrior prior;
            prior.prior_mean.assign(kDim, 0.0);  // prior center at the origin, wlog
            prior.tau_sq = tau_sq;
            prior.sigma_sq = kSigmaSq;

            double mse_mle = 0.0, mse_bayes = 0.0;
            for (int t = 0; t < trials; ++t) {
                Vec mu(kDim);
                for (double& v : mu) v = tau * rng.gaussian();
                std::vector<Vec> support(static_cast<std::size_t>(k), Vec(kDim));
                for (auto& s : support) {
                    for (std::size_t d = 0; d < s.size(); ++d) {
                        s[d] = mu[d] + sigma * rng.gaussian();
                    }
                }
                const Vec est_mle = cea_prototype(support);
                const Vec est_bayes = bayes_prototype(support, prior);
                for (int d = 0; d < kDim; ++d) {
                    mse_mle += (est_mle[d] - mu[d]) * (est_mle[d] - mu[d]);
                    mse_bayes += (est_bayes[d] - mu[d]) * (est_bayes[d] - mu[d]);
                }
            }
            const double scale = 1.0 / (static_cast<double>(trials) * kDim);
            cell.mse_mle = mse_mle * scale;
            cell.mse_bayes = mse_bayes * scale;
            cell.ratio = cell.mse_bayes / cell.mse_mle;
            cells.push_back(cell);
        }
    }
    return cells;
}

void cmd_bayes_demo(int trials, std::uint64_t seed, std::ostream& out) {
    out << "Posterior-mean vs plain-mean prototype estimation (sigma^2 = 1, dim = 16, "
        << trials << " trials)\n";
    out << "K   tau^2   var_bayes  var_mle   mse_bayes  mse_mle   ratio\n";
    for (const auto& c : bayes_demo_grid(trials, seed)) {
        out << std::left << std::setw(3) << c.shots << ' ' << std::setw(7) << fmt(c.tau_sq) << ' '
            << std::setw(10) << fmt(c.var_bayes).substr(0, 9) << ' ' << std::setw(9)
            << fmt(c.var_mle).substr(0, 8) << ' ' << std::setw(10)
            << fmt(c.mse_bayes).substr(0, 9) << ' ' << std::setw(9)
            << fmt(c.mse_mle).substr(0, 8) << ' ' << fmt(c.ratio).substr(0, 7) << "\n";
    }
}

std::vector<SweepRow> sweep_lambda_moti(const ExperimentConfig& base_cfg,
                                        const std::vector<double>& lambdas, int threads) {
    std::vector<SweepRow> rows;
    for (double lambda : lambdas) {
        ExperimentConfig cfg = base_cfg;
        cfg.train.hp.lambda_moti = lambda;
        const ExperimentResult res = run_experiment(cfg, threads);
        SweepRow row;
        row.lambda_moti = lambda;
        row.final_a_w = res.metrics.rows.back().a_overall;
        row.a_avg = res.metrics.a_avg;
        rows.push_back(row);
    }
    return rows;
}

void cmd_sweep(const ExperimentConfig& cfg, const std::vector<double>& lambdas,
               const std::string& out_dir, std::ostream& out) {
    const auto rows = sweep_lambda_moti(cfg, lambdas, motic_threads());

    std::ostringstream csv;
    csv << "lambda_moti,final_A_W,A_avg\n";
    out << "lambda_moti  final_A_W  A_avg\n";
    for (const auto& r : rows) {
        csv << fmt(r.lambda_moti) << ',' << fmt(r.final_a_w) << ',' << fmt(r.a_avg) << "\n";
        out << std::left << std::setw(12) << fmt(r.lambda_moti) << ' ' << std::setw(10)
            << fmt(r.final_a_w).substr(0, 7) << ' ' << fmt(r.a_avg).substr(0, 7) << "\n";
    }
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "sweep.csv", csv.str());
}

ExperimentConfig ablation_config(const ExperimentConfig& base_cfg, bool use_ssc, bool use_moti,
                                 bool use_virtual, std::uint64_t seed) {
    ExperimentConfig cfg = base_cfg;
    cfg.train.seed = seed;
    cfg.bench.seed = seed;
    if (!use_ssc) cfg.train.hp.lambda_ssc = 0.0;
    if (!use_moti) cfg.train.hp.lambda_moti = 0.0;
    if (!use_virtual) cfg.train.hp.m_transforms = 1;
    cfg.validate();
    return cfg;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base_cfg,
                                      const std::vector<std::uint64_t>& seeds, int threads) {
    struct Variant {
        const char* name;
        bool ssc, moti, vc;
    };
    const Variant variants[] = {
        {"ce_only", false, false, false},
        {"ce+ssc", true, false, false},
        {"ce+moti", false, true, false},
        {"ce+ssc+moti", true, true, false},
        {"ce+ssc+virtual", true, false, true},
        {"ce+moti+virtual", false, true, true},
        {"full", true, true, true},
    };

    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        AblationRow row;
        row.name = v.name;
        row.use_ssc = v.ssc;
        row.use_moti = v.moti;
        row.use_virtual = v.vc;
        for (std::uint64_t seed : seeds) {
            const ExperimentConfig cfg = ablation_config(base_cfg, v.ssc, v.moti, v.vc, seed);
            const ExperimentResult res = run_experiment(cfg, threads);
            const SessionMetrics& last = res.metrics.rows.back();
            row.a_base += last.a_base;
            row.a_new += last.a_new.value_or(0.0);
            row.a_w += last.a_overall;
            row.a_avg += res.metrics.a_avg;
        }
        const double inv = 1.0 / static_cast<double>(seeds.size());
        row.a_base *= inv;
        row.a_new *= inv;
        row.a_w *= inv;
        row.a_avg *= inv;
        rows.push_back(row);
    }
    return rows;
}

void cmd_ablate(const ExperimentConfig& cfg, int trials, const std::string& out_dir,
                std::ostream& out) {
    if (trials < 1) throw ConfigError("ablate: trials must be >= 1");
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < trials; ++i) seeds.push_back(cfg.train.seed + static_cast<std::uint64_t>(i));
    const auto rows = run_ablation(cfg, seeds, motic_threads());

    std::ostringstream csv;
    csv << "config,ssc,moti,virtual,A_B,A_N,A_W,A_avg\n";
    out << "config           ssc moti virt  A_B     A_N     A_W     A_avg\n";
    for (const auto& r : rows) {
        csv << r.name << ',' << r.use_ssc << ',' << r.use_moti << ',' << r.use_virtual << ','
            << fmt(r.a_base) << ',' << fmt(r.a_new) << ',' << fmt(r.a_w) << ',' << fmt(r.a_avg)
            << "\n";
        out << std::left << std::setw(16) << r.name << ' ' << std::setw(3) << (r.use_ssc ? "x" : "-")
            << ' ' << std::setw(4) << (r.use_moti ? "x" : "-") << ' ' << std::setw(5)
            << (r.use_virtual ? "x" : "-") << ' ' << std::setw(7) << fmt(r.a_base).substr(0, 6)
            << ' ' << std::setw(7) << fmt(r.a_new).substr(0, 6) << ' ' << std::setw(7)
            << fmt(r.a_w).substr(0, 6) << ' ' << fmt(r.a_avg).substr(0, 6) << "\n";
    }
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "ablate.csv", csv.str());
}

}  // namespace motic
