#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "motic/dataset.hpp"
#include "motic/encoder.hpp"
#include "motic/losses.hpp"
#include "motic/prototypes.hpp"
#include "motic/queue.hpp"
#include "motic/transforms.hpp"

namespace motic {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    double lr_max = 0.1;
    double sgd_momentum = 0.9;
    std::vector<int> arch{32, 64, 64, 16};
    Hyperparams hp;
    int queue_capacity = 1024;
    double key_momentum = 0.99;
    double aug_noise_std = 0.1;
    double aug_scale_jitter = 0.05;
    std::uint64_t seed = 1;
};

// Velocity buffers exist for the query encoder and the classifier only; the
// key encoder has no optimizer state anywhere, by construction.
struct OptimizerState {
    EncoderGrad encoder_velocity;
    std::vector<Vec> classifier_velocity;
};

// lr_max * (1 + cos(pi * epoch / epochs)) / 2
double cosine_lr(int epoch, int epochs, double lr_max);

// v <- mu*v + g;  p <- p - lr*(g + mu*v)   (lookahead gradient folded in)
void nesterov_step(EncoderParams& params, const EncoderGrad& grad, EncoderGrad& velocity,
                   double lr, double mu);
void nesterov_step(std::vector<Vec>& params, const std::vector<Vec>& grad,
                   std::vector<Vec>& velocity, double lr, double mu);

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double ce = 0.0;
    double ssc = 0.0;
    double moti = 0.0;
    double total = 0.0;
    long skipped_moti = 0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    EncoderParams query;
    EncoderParams key;
    ClassifierWeights classifier;
    TrainLog log;
};

// Called after every optimizer step; used by tests to replay the momentum
// trajectory and audit the stop-gradient structure.
using StepObserver =
    std::function<void(int epoch, int step, const EncoderParams& query, const EncoderParams& key)>;

// Base-session optimization. Per batch, in order: virtual expansion,
// dual-view encoding through query and key encoders, the three losses, a
// Nesterov step on (theta, w), the momentum key update, the queue pushes.
// Epoch order is a seeded shuffle; the last partial batch is dropped so the
// queue divisibility contract holds.
TrainResult train_base_session(const TrainConfig& cfg, const SessionDataset& data,
                               const TransformSet& transforms, const StepObserver& observer = {});

// Sessions t = 1..T in order: encode the K-shot supports with the frozen
// encoder and append fine-grained prototypes. No parameter updates of any
// kind happen here.
void run_incremental_sessions(const EncoderParams& encoder, const TransformSet& transforms,
                              PrototypeBank& bank, const SessionDataset& data,
                              const BayesSettings* bayes = nullptr);

// Groups a labeled split by class id, ascending; the per-class sample order
// follows the split order.
std::vector<std::pair<int, std::vector<Vec>>> group_by_class(const std::vector<LabeledVec>& split);

// Checkpoint: magic + version + arch dims + transform count/seed, query and
// key params as two consecutive blocks of little-endian float64 (weights
// then bias per layer), the classifier block, and the config echo text.
struct Checkpoint {
    EncoderParams query;
    EncoderParams key;
    ClassifierWeights classifier;
    int m_transforms = 1;
    std::uint64_t transform_seed = 0;
    std::string config_echo;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace motic
