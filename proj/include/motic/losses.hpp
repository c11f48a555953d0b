#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "motic/queue.hpp"
#include "motic/vec.hpp"

namespace motic {

// One virtually-expanded training batch: B items times M transforms.
// provenance[j] = (batch index i, transform index m) of item j.
struct BatchFeatures {
    std::vector<Vec> q;       // query features, unit-norm
    std::vector<Vec> k_plus;  // matching key features, unit-norm
    std::vector<int> vlabels;
    std::vector<std::pair<int, int>> provenance;

    std::size_t size() const { return q.size(); }
};

// Learnable virtual-class embeddings. Stored raw; cosine similarity
// normalizes on use.
struct ClassifierWeights {
    int feat_dim = 0;
    std::vector<Vec> w;

    int num_classes() const { return static_cast<int>(w.size()); }
};

ClassifierWeights classifier_init(int num_classes, int feat_dim, std::uint64_t seed);

struct LossReport {
    double value = 0.0;
    std::vector<Vec> grad_q;  // per-query gradients
    std::vector<Vec> grad_w;  // classifier gradients (CE only; empty otherwise)
    long skipped = 0;         // items whose different-class set was empty
};

struct Hyperparams {
    double tau = 0.07;    // CE temperature
    double tau_v = 0.07;  // contrastive temperature
    double lambda_ssc = 0.1;
    double lambda_moti = 2.5;
    int batch_size = 32;
    int m_transforms = 2;
};

// Fine-grained cross entropy: mean over B*M items of
// -log softmax_j( sim(q, w_j) / tau ) at the item's virtual label, with the
// softmax running over all C0*M virtual classes. Log-sum-exp is stabilized
// by subtracting the max logit. Gradients w.r.t. every q and every w row.
LossReport loss_ce(const BatchFeatures& batch, const ClassifierWeights& w, double tau);

// Self-supervised contrast: mean over items of
// -log( exp(q.k+ / tau_v) / sum_{k' in {k+} u Q} exp(q.k' / tau_v) ).
// Keys and queue entries are constants; gradients flow into q only.
LossReport loss_ssc(const BatchFeatures& batch, const FeatureQueue::Snapshot& queue, double tau_v);
LossReport loss_ssc(const BatchFeatures& batch, const FeatureQueue& queue, double tau_v);

// Momentum tightness: mean over items of -(sum_{k' in F} q.k') / |F| where
// F = { k' in {k+} u Q : vlabel(k') != vlabel(q) }. Raw inner products of
// unit vectors, no temperature. Items with empty F contribute 0 and bump the
// skipped counter.
LossReport loss_moti(const BatchFeatures& batch, const FeatureQueue::Snapshot& queue);
LossReport loss_moti(const BatchFeatures& batch, const FeatureQueue& queue);

// ce + lambda_ssc * ssc + lambda_moti * moti, gradients combined with the
// same weights.
LossReport loss_total(const LossReport& ce, const LossReport& ssc, const LossReport& moti,
                      const Hyperparams& hp);

}  // namespace motic
