#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "motic/dataset.hpp"
#include "motic/encoder.hpp"
#include "motic/prototypes.hpp"
#include "motic/transforms.hpp"

namespace motic {

// Synthetic stand-in for an image FSCIL benchmark. Defaults keep the 60:40
// base:new class ratio and K = 5 at one-fifth scale.
struct BenchConfig {
    int dim = 32;
    int base_classes = 12;
    int sessions = 8;  // T
    int ways = 5;      // N
    int shots = 5;     // K
    int base_train_per_class = 100;
    int test_per_class = 30;
    double max_mean_cos = 0.5;  // between-class spread: max pairwise cosine of class means
    double within_std = 0.5;
    std::uint64_t seed = 1;
};

// Class means drawn uniformly on the radius-sqrt(dim) sphere with the
// pairwise-cosine cap enforced by rejection (bounded attempts); samples are
// mean + Gaussian(0, within_std^2 I). Deterministic given the seed.
SessionDataset gen_synthetic_fscil(const BenchConfig& cfg);

struct SessionMetrics {
    int session = 0;
    double a_base = 0.0;            // A_B
    std::optional<double> a_new;    // A_N, absent at session 0
    double a_overall = 0.0;         // A_W
    int n_base = 0;
    int n_new = 0;
};

struct MetricsReport {
    std::vector<SessionMetrics> rows;
    double a_avg = 0.0;
};

enum class InferMode { kNcm, kMultigrain };

// Classifies the union of test splits 0..t. Throws CoverageGapError when the
// bank is missing any class of sessions <= t. `threads` > 1 fans out across
// test items; per-item results merge by index, so counts are identical for
// any thread count.
SessionMetrics evaluate_session(const EncoderParams& encoder, const TransformSet& transforms,
                                const PrototypeBank& bank, const SessionDataset& data,
                                int session_t, InferMode mode, int threads = 1);

// Arithmetic mean of per-session A_W.
double aggregate_avg(const std::vector<SessionMetrics>& rows);

}  // namespace motic
