#include "motic/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "motic/encoder.hpp"
#include "motic/losses.hpp"
#include "motic/queue.hpp"
#include "motic/rng.hpp"
#include "motic/vec.hpp"

namespace motic {

namespace {

constexpr double kH = 1e-5;
constexpr double kTol = 1e-4;

double rel_err(const Vec& analytic, const Vec& fd) {
    if (analytic.size() != fd.size()) throw ShapeMismatchError("rel_err: size mismatch");
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
        na += analytic[i] * analytic[i];
        nf += fd[i] * fd[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nf), 1e-12});
}

Vec random_unit(Rng& rng, int dim) { return l2_normalize(rng.gaussian_vec(dim)); }

// Small random batch plus a populated queue; shared scaffolding for the
// three loss suites.
struct LossInstance {
    BatchFeatures batch;
    FeatureQueue::Snapshot queue;
    ClassifierWeights w;
    int classes = 0;
};

LossInstance make_loss_instance(Rng& rng, int items, int dim, int classes, int queue_n) {
    LossInstance inst;
    inst.classes = classes;
    for (int i = 0; i < items; ++i) {
        inst.batch.q.push_back(random_unit(rng, dim));
        inst.batch.k_plus.push_back(random_unit(rng, dim));
        inst.batch.vlabels.push_back(static_cast<int>(rng.below(classes)));
        inst.batch.provenance.push_back({i, 0});
    }
    for (int j = 0; j < queue_n; ++j) {
        inst.queue.features.push_back(random_unit(rng, dim));
        inst.queue.labels.push_back(static_cast<int>(rng.below(classes)));
    }
    inst.w.feat_dim = dim;
    inst.w.w.resize(classes);
    for (auto& row : inst.w.w) row = rng.gaussian_vec(dim);
    return inst;
}

Vec flatten_rows(const std::vector<Vec>& rows) {
    Vec flat;
    for (const Vec& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return flat;
}

void unflatten_rows(std::vector<Vec>& rows, const Vec& flat) {
    std::size_t off = 0;
    for (Vec& r : rows) {
        for (double& v : r) v = flat[off++];
    }
}

GradCheckResult finish(std::string name, int instances, double worst) {
    return {std::move(name), instances, worst, worst < kTol};
}

}  // namespace

GradCheckResult gradcheck_encoder(int instances, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, rng_streams::kGradcheck);
    double worst = 0.0;
    const std::vector<int> dims{4, 6, 5, 3};
    for (int inst = 0; inst < instances; ++inst) {
        EncoderParams params = encoder_init(dims, rng.next_u64());
        const Vec x = rng.gaussian_vec(dims.front());
        const Vec u = rng.gaussian_vec(dims.back());

        ActivationTape tape;
        encoder_forward(params, x, &tape);
        const Vec analytic = flatten_params(encoder_backward(params, tape, u).param_grad);

        EncoderParams probe = params;
        const Vec fd = finite_diff_grad(
            [&](const Vec& theta) {
                unflatten_params(probe, theta);
                return dot(u, encoder_forward(probe, x));
            },
            flatten_params(params), kH);
        worst = std::max(worst, rel_err(analytic, fd));
    }
    return finish("encoder_backward/params", instances, worst);
}

GradCheckResult gradcheck_encoder_input(int instances, std::uint64_t seed) {
    Rng rng = Rng::stream(seed + 1, rng_streams::kGradcheck);
    double worst = 0.0;
    const std::vector<int> dims{5, 7, 4};
    for (int inst = 0; inst < instances; ++inst) {
        const EncoderParams params = encoder_init(dims, rng.next_u64());
        const Vec x = rng.gaussian_vec(dims.front());
        const Vec u = rng.gaussian_vec(dims.back());

        ActivationTape tape;
        encoder_forward(params, x, &tape);
        const Vec analytic = encoder_backward(params, tape, u).input_grad;

        const Vec fd = finite_diff_grad(
            [&](const Vec& probe) { return dot(u, encoder_forward(params, probe)); }, x, kH);
        worst = std::max(worst, rel_err(analytic, fd));
    }
    return finish("encoder_backward/input", instances, worst);
}

GradCheckResult gradcheck_loss_ce(int instances, std::uint64_t seed) {
    Rng rng = Rng::stream(seed + 2, rng_streams::kGradcheck);
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        LossInstance li = make_loss_instance(rng, /*items=*/4, /*dim=*/4, /*classes=*/6, 0);
        const double tau = 0.2;
        const LossReport rep = loss_ce(li.batch, li.w, tau);

        // grad_q over all query entries at once
        BatchFeatures probe_batch = li.batch;
        const Vec fd_q = finite_diff_grad(
            [&](const Vec& flat) {
                unflatten_rows(probe_batch.q, flat);
                return loss_ce(probe_batch, li.w, tau).value;
            },
            flatten_rows(li.batch.q), kH);
        worst = std::max(worst, rel_err(flatten_rows(rep.grad_q), fd_q));

        // grad_w over all classifier rows
        ClassifierWeights probe_w = li.w;
        const Vec fd_w = finite_diff_grad(
            [&](const Vec& flat) {
                unflatten_rows(probe_w.w, flat);
                return loss_ce(li.batch, probe_w, tau).value;
            },
            flatten_rows(li.w.w), kH);
        worst = std::max(worst, rel_err(flatten_rows(rep.grad_w), fd_w));
    }
    return finish("loss_ce/grad_q+grad_w", instances, worst);
}

GradCheckResult gradcheck_loss_ssc(int instances, std::uint64_t seed) {
    Rng rng = Rng::stream(seed + 3, rng_streams::kGradcheck);
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        LossInstance li = make_loss_instance(rng, 4, 4, 6, /*queue_n=*/8);
        const double tau_v = 0.3;
        const LossReport rep = loss_ssc(li.batch, li.queue, tau_v);

        BatchFeatures probe = li.batch;
        const Vec fd = finite_diff_grad(
            [&](const Vec& flat) {
                unflatten_rows(probe.q, flat);
                return loss_ssc(probe, li.queue, tau_v).value;
            },
            flatten_rows(li.batch.q), kH);
        worst = std::max(worst, rel_err(flatten_rows(rep.grad_q), fd));
    }
    return finish("loss_ssc/grad_q", instances, worst);
}

GradCheckResult gradcheck_loss_moti(int instances, std::uint64_t seed) {
    Rng rng = Rng::stream(seed + 4, rng_streams::kGradcheck);
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        LossInstance li = make_loss_instance(rng, 4, 4, 3, /*queue_n=*/8);
        const LossReport rep = loss_moti(li.batch, li.queue);

        BatchFeatures probe = li.batch;
        const Vec fd = finite_diff_grad(
            [&](const Vec& flat) {
                unflatten_rows(probe.q, flat);
                return loss_moti(probe, li.queue).value;
            },
            flatten_rows(li.batch.q), kH);
        worst = std::max(worst, rel_err(flatten_rows(rep.grad_q), fd));
    }
    return finish("loss_moti/grad_q", instances, worst);
}

std::vector<GradCheckResult> run_all_gradchecks(int instances, std::uint64_t seed) {
    return {
        gradcheck_encoder(instances, seed),
        gradcheck_encoder_input(instances, seed),
        gradcheck_loss_ce(instances, seed),
        gradcheck_loss_ssc(instances, seed),
        gradcheck_loss_moti(instances, seed),
    };
}

}  // namespace motic
