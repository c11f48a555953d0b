#include "motic/losses.hpp"

#include <algorithm>
#include <cmath>

#include "motic/rng.hpp"

namespace motic {

namespace {

void check_batch(const BatchFeatures& batch) {
    if (batch.q.size() != batch.k_plus.size() || batch.q.size() != batch.vlabels.size()) {
        throw ShapeMismatchError("loss: batch field lengths differ");
    }
}

double stable_lse(const std::vector<double>& logits) {
    double m = logits[0];
    for (double l : logits) m = std::max(m, l);
    double s = 0.0;
    for (double l : logits) s += std::exp(l - m);
    return m + std::log(s);
}

}  // namespace

ClassifierWeights classifier_init(int num_classes, int feat_dim, std::uint64_t seed) {
    if (num_classes < 1 || feat_dim < 1) throw ConfigError("classifier_init: bad shape");
    Rng rng = Rng::stream(seed, rng_streams::kClassifier);
    ClassifierWeights cw;
    cw.feat_dim = feat_dim;
    cw.w.resize(num_classes);
    const double scale = 1.0 / std::sqrt(static_cast<double>(feat_dim));
    for (auto& row : cw.w) {
        row.resize(feat_dim);
        for (double& v : row) v = rng.uniform(-1.0, 1.0) * scale;
    }
    return cw;
}

LossReport loss_ce(const BatchFeatures& batch, const ClassifierWeights& w, double tau) {
    check_batch(batch);
    if (!(tau > 0.0)) throw ConfigError("loss_ce: tau must be positive");
    const std::size_t n = batch.size();
    const int classes = w.num_classes();
    for (int y : batch.vlabels) {
        if (y < 0 || y >= classes) throw LabelOutOfRangeError("loss_ce: virtual label out of range");
    }

    LossReport rep;
    rep.grad_q.assign(n, {});
    rep.grad_w.assign(static_cast<std::size_t>(classes), Vec(w.feat_dim, 0.0));

    // Classifier rows normalized once per call.
    std::vector<double> w_norm(classes);
    std::vector<Vec> w_hat(classes);
    for (int j = 0; j < classes; ++j) {
        const double nj = norm(w.w[j]);
        if (!(nj > kNormEps)) throw ZeroNormError("loss_ce: zero-norm classifier row");
        w_norm[j] = nj;
        w_hat[j].resize(w.feat_dim);
        for (int d = 0; d < w.feat_dim; ++d) w_hat[j][d] = w.w[j][d] / nj;
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> logits(classes);
    std::vector<double> cosines(classes);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& q = batch.q[i];
        if (static_cast<int>(q.size()) != w.feat_dim) throw ShapeMismatchError("loss_ce: q dim mismatch");
        const double qn = norm(q);
        if (!(qn > kNormEps)) throw ZeroNormError("loss_ce: zero-norm query");
        for (int j = 0; j < classes; ++j) {
            cosines[j] = dot(q, w_hat[j]) / qn;
            logits[j] = cosines[j] / tau;
        }
        const int y = batch.vlabels[i];
        const double lse = stable_lse(logits);
        rep.value += (lse - logits[y]) * inv_n;

        Vec& gq = rep.grad_q[i];
        gq.assign(q.size(), 0.0);
        for (int j = 0; j < classes; ++j) {
            const double p = std::exp(logits[j] - lse);
            const double coef = (p - (j == y ? 1.0 : 0.0)) * inv_n / tau;
            if (coef == 0.0) continue;
            // d cos / d q = (w_hat - cos * q_hat) / ||q||
            for (std::size_t d = 0; d < q.size(); ++d) {
                gq[d] += coef * (w_hat[j][d] - cosines[j] * q[d] / qn) / qn;
            }
            // d cos / d w = (q_hat - cos * w_hat) / ||w||
            Vec& gw = rep.grad_w[j];
            for (std::size_t d = 0; d < q.size(); ++d) {
                gw[d] += coef * (q[d] / qn - cosines[j] * w_hat[j][d]) / w_norm[j];
            }
        }
    }
    return rep;
}

LossReport loss_ssc(const BatchFeatures& batch, const FeatureQueue::Snapshot& queue, double tau_v) {
    check_batch(batch);
    if (!(tau_v > 0.0)) throw ConfigError("loss_ssc: tau_v must be positive");
    const std::size_t n = batch.size();
    const std::size_t qn = queue.features.size();

    LossReport rep;
    rep.grad_q.assign(n, {});

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> logits(1 + qn);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& q = batch.q[i];
        const Vec& kp = batch.k_plus[i];
        if (q.size() != kp.size()) throw ShapeMismatchError("loss_ssc: q/k dim mismatch");
        // Pool = own key first, then the queue.
        logits[0] = dot(q, kp) / tau_v;
        for (std::size_t j = 0; j < qn; ++j) {
            if (queue.features[j].size() != q.size()) {
                throw ShapeMismatchError("loss_ssc: queue dim mismatch");
            }
            logits[1 + j] = dot(q, queue.features[j]) / tau_v;
        }
        const double lse = stable_lse(logits);
        rep.value += (lse - logits[0]) * inv_n;

        Vec& gq = rep.grad_q[i];
        gq.assign(q.size(), 0.0);
        // d/dq = (sum_j p_j k'_j - k+) / (tau_v * n), keys held constant
        for (std::size_t j = 0; j < logits.size(); ++j) {
            const double p = std::exp(logits[j] - lse);
            const double coef = (p - (j == 0 ? 1.0 : 0.0)) * inv_n / tau_v;
            const Vec& key = (j == 0) ? kp : queue.features[j - 1];
            for (std::size_t d = 0; d < q.size(); ++d) gq[d] += coef * key[d];
        }
    }
    return rep;
}

LossReport loss_ssc(const BatchFeatures& batch, const FeatureQueue& queue, double tau_v) {
    return loss_ssc(batch, queue.snapshot(), tau_v);
}

LossReport loss_moti(const BatchFeatures& batch, const FeatureQueue::Snapshot& queue) {
    check_batch(batch);
    const std::size_t n = batch.size();

    LossReport rep;
    rep.grad_q.assign(n, {});

    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& q = batch.q[i];
        const int own = batch.vlabels[i];
        Vec& gq = rep.grad_q[i];
        gq.assign(q.size(), 0.0);

        // F = different-virtual-class members of {k+} u Q. The item's own key
        // carries its own label, so it never survives the filter; it is kept
        // in the scan to mirror the set definition.
        Vec key_sum(q.size(), 0.0);
        long f_count = 0;
        auto consider = [&](const Vec& key, int label) {
            if (label == own) return;
            if (key.size() != q.size()) throw ShapeMismatchError("loss_moti: key dim mismatch");
            for (std::size_t d = 0; d < q.size(); ++d) key_sum[d] += key[d];
            ++f_count;
        };
        consider(batch.k_plus[i], own);
        for (std::size_t j = 0; j < queue.features.size(); ++j) {
            consider(queue.features[j], queue.labels[j]);
        }

        if (f_count == 0) {
            ++rep.skipped;
            continue;
        }
        const double scale = inv_n / static_cast<double>(f_count);
        rep.value -= dot(q, key_sum) * scale;
        for (std::size_t d = 0; d < q.size(); ++d) gq[d] = -key_sum[d] * scale;
    }
    return rep;
}

LossReport loss_moti(const BatchFeatures& batch, const FeatureQueue& queue) {
    return loss_moti(batch, queue.snapshot());
}

LossReport loss_total(const LossReport& ce, const LossReport& ssc, const LossReport& moti,
                      const Hyperparams& hp) {
    const std::size_t n = ce.grad_q.size();
    if (ssc.grad_q.size() != n || moti.grad_q.size() != n) {
        throw ShapeMismatchError("loss_total: grad_q counts differ");
    }
    LossReport rep;
    rep.value = ce.value + hp.lambda_ssc * ssc.value + hp.lambda_moti * moti.value;
    rep.grad_w = ce.grad_w;
    rep.skipped = ce.skipped + ssc.skipped + moti.skipped;
    rep.grad_q.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t d = ce.grad_q[i].size();
        if (ssc.grad_q[i].size() != d || moti.grad_q[i].size() != d) {
            throw ShapeMismatchError("loss_total: grad_q dims differ");
        }
        Vec& g = rep.grad_q[i];
        g.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            g[j] = ce.grad_q[i][j] + hp.lambda_ssc * ssc.grad_q[i][j] +
                   hp.lambda_moti * moti.grad_q[i][j];
        }
    }
    return rep;
}

}  // namespace motic
