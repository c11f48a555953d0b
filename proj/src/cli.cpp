#include "motic/cli.hpp"

#include <charconv>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "motic/pipeline.hpp"

namespace motic {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Flag overrides are appended to the config text and re-parsed; the
// later-assignment-wins rule makes the override trail part of the echo.
struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> lambda_moti;
    std::optional<double> lambda_ssc;
    std::optional<int> m_transforms;
    std::optional<int> queue_size;
    std::optional<std::string> proto_mode;
    std::optional<std::string> infer_mode;

    void attach(CLI::App* cmd, bool with_out = true) {
        cmd->add_option("--config", config_path, "config file (key = value with [sections])");
        if (with_out) cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "root seed (overrides config)");
        cmd->add_option("--lambda-moti", lambda_moti, "tightness loss weight");
        cmd->add_option("--lambda-ssc", lambda_ssc, "contrastive loss weight");
        cmd->add_option("--m-transforms", m_transforms, "virtual transform count M");
        cmd->add_option("--queue-size", queue_size, "feature queue capacity");
        cmd->add_option("--proto-mode", proto_mode, "cea|bayes")
            ->check(CLI::IsMember({"cea", "bayes"}));
        cmd->add_option("--infer-mode", infer_mode, "ncm|multigrain")
            ->check(CLI::IsMember({"ncm", "multigrain"}));
    }

    std::string raw_text() const {
        std::string text;
        if (!config_path.empty()) text = ConfigFile::parse_file(config_path).raw_text;
        std::string overrides;
        auto add = [&overrides](const std::string& section, const std::string& key,
                                const std::string& value) {
            overrides += "[" + section + "]\n" + key + " = " + value + "\n";
        };
        if (seed) add("run", "seed", std::to_string(*seed));
        if (lambda_moti) add("train", "lambda_moti", fmt_double(*lambda_moti));
        if (lambda_ssc) add("train", "lambda_ssc", fmt_double(*lambda_ssc));
        if (m_transforms) add("train", "m_transforms", std::to_string(*m_transforms));
        if (queue_size) add("train", "queue_capacity", std::to_string(*queue_size));
        if (proto_mode) add("run", "proto_mode", *proto_mode);
        if (infer_mode) add("run", "infer_mode", *infer_mode);
        if (!overrides.empty()) {
            if (!text.empty() && text.back() != '\n') text += '\n';
            text += "# cli overrides\n" + overrides;
        }
        return text;
    }

    ExperimentConfig build() const {
        return ExperimentConfig::from(ConfigFile::parse_text(raw_text()));
    }
};

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"momentum-contrast few-shot class-incremental learning lab"};
    app.require_subcommand(1);

    CommonOpts train_opts;
    auto* train_cmd = app.add_subcommand("train", "train the base session, write a checkpoint");
    train_opts.attach(train_cmd);

    std::string eval_ckpt;
    CommonOpts eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "run the session protocol from a checkpoint");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval_cmd->add_option("--out", eval_opts.out_dir, "output directory");
    eval_cmd->add_option("--proto-mode", eval_opts.proto_mode, "cea|bayes")
        ->check(CLI::IsMember({"cea", "bayes"}));
    eval_cmd->add_option("--infer-mode", eval_opts.infer_mode, "ncm|multigrain")
        ->check(CLI::IsMember({"ncm", "multigrain"}));

    int gc_instances = 20;
    std::uint64_t gc_seed = 12345;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference checks for all gradients");
    gc_cmd->add_option("--instances", gc_instances, "instances per suite");
    gc_cmd->add_option("--seed", gc_seed, "suite seed");

    int bd_trials = 2000;
    std::uint64_t bd_seed = 7;
    auto* bd_cmd = app.add_subcommand("bayes-demo",
                                      "Monte-Carlo posterior-mean vs plain-mean comparison");
    bd_cmd->add_option("--trials", bd_trials, "Monte-Carlo trials per cell");
    bd_cmd->add_option("--seed", bd_seed, "demo seed");

    CommonOpts sweep_opts;
    std::vector<double> sweep_lambdas{0.0, 0.5, 1.5, 2.5, 5.0};
    auto* sweep_cmd = app.add_subcommand("sweep", "grid over lambda_moti, emits a lambda->A_W table");
    sweep_opts.attach(sweep_cmd);
    sweep_cmd->add_option("--lambdas", sweep_lambdas, "lambda_moti grid")->delimiter(',');

    CommonOpts ablate_opts;
    int ablate_trials = 5;
    auto* ablate_cmd = app.add_subcommand("ablate", "loss-combination ablation table");
    ablate_opts.attach(ablate_cmd);
    ablate_cmd->add_option("--trials", ablate_trials, "seeds averaged per row");

    std::vector<std::string> argv_copy = args;
    std::vector<const char*> argv;
    argv.push_back("motic");
    for (const auto& a : argv_copy) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*train_cmd) {
            const std::string raw = train_opts.raw_text();
            cmd_train(ExperimentConfig::from(ConfigFile::parse_text(raw)), raw,
                      train_opts.out_dir);
            std::cout << "wrote " << train_opts.out_dir
                      << "/{checkpoint.bin,trainlog.ndjson,config.echo}\n";
        } else if (*eval_cmd) {
            std::optional<InferMode> infer;
            if (eval_opts.infer_mode) {
                infer = *eval_opts.infer_mode == "ncm" ? InferMode::kNcm : InferMode::kMultigrain;
            }
            std::optional<ProtoMode> proto;
            if (eval_opts.proto_mode) {
                proto = *eval_opts.proto_mode == "cea" ? ProtoMode::kCea : ProtoMode::kBayes;
            }
            cmd_eval(eval_ckpt, eval_opts.out_dir, infer, proto, std::cout);
        } else if (*gc_cmd) {
            return cmd_gradcheck(gc_instances, gc_seed, std::cout);
        } else if (*bd_cmd) {
            cmd_bayes_demo(bd_trials, bd_seed, std::cout);
        } else if (*sweep_cmd) {
            cmd_sweep(sweep_opts.build(), sweep_lambdas, sweep_opts.out_dir, std::cout);
        } else if (*ablate_cmd) {
            cmd_ablate(ablate_opts.build(), ablate_trials, ablate_opts.out_dir, std::cout);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace motic
