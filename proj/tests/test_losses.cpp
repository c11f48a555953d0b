#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "motic/gradcheck.hpp"
#include "motic/losses.hpp"
#include "motic/rng.hpp"

using namespace motic;

namespace {

Vec unit(Rng& rng, int dim) { return l2_normalize(rng.gaussian_vec(dim)); }

BatchFeatures single_item(const Vec& q, const Vec& k, int vlabel) {
    BatchFeatures b;
    b.q = {q};
    b.k_plus = {k};
    b.vlabels = {vlabel};
    b.provenance = {{0, 0}};
    return b;
}

}  // namespace

TEST_CASE("uniform logits give CE = ln(C0*M)") {
    // identical classifier rows -> identical cosines -> uniform softmax
    const int classes = 6;  // C0 = 3, M = 2
    ClassifierWeights w;
    w.feat_dim = 4;
    w.w.assign(classes, Vec{0.3, -0.1, 0.2, 0.5});
    Rng rng(1);
    BatchFeatures batch;
    for (int i = 0; i < 4; ++i) {
        batch.q.push_back(unit(rng, 4));
        batch.k_plus.push_back(unit(rng, 4));
        batch.vlabels.push_back(i % classes);
        batch.provenance.push_back({i, 0});
    }
    const LossReport rep = loss_ce(batch, w, 0.07);
    CHECK(rep.value == doctest::Approx(std::log(6.0)).epsilon(1e-9));
    CHECK(rep.grad_w.size() == 6);
}

TEST_CASE("CE rejects labels outside the virtual range") {
    ClassifierWeights w;
    w.feat_dim = 2;
    w.w.assign(4, Vec{1.0, 0.0});
    Rng rng(2);
    BatchFeatures batch = single_item(unit(rng, 2), unit(rng, 2), 4);
    CHECK_THROWS_AS(loss_ce(batch, w, 0.07), LabelOutOfRangeError);
}

TEST_CASE("CE is non-negative and honors linear total composition") {
    Rng rng(3);
    ClassifierWeights w;
    w.feat_dim = 4;
    w.w.resize(6);
    for (auto& row : w.w) row = rng.gaussian_vec(4);

    BatchFeatures batch;
    for (int i = 0; i < 4; ++i) {
        batch.q.push_back(unit(rng, 4));
        batch.k_plus.push_back(unit(rng, 4));
        batch.vlabels.push_back(static_cast<int>(rng.below(6)));
        batch.provenance.push_back({i, 0});
    }
    FeatureQueue::Snapshot queue;
    for (int j = 0; j < 5; ++j) {
        queue.features.push_back(unit(rng, 4));
        queue.labels.push_back(static_cast<int>(rng.below(6)));
    }

    const LossReport ce = loss_ce(batch, w, 0.07);
    const LossReport ssc = loss_ssc(batch, queue, 0.07);
    const LossReport moti = loss_moti(batch, queue);
    CHECK(ce.value >= 0.0);
    CHECK(ssc.value >= 0.0);

    Hyperparams hp;
    hp.lambda_ssc = 0.1;
    hp.lambda_moti = 2.5;
    const LossReport total = loss_total(ce, ssc, moti, hp);
    CHECK(total.value ==
          doctest::Approx(ce.value + 0.1 * ssc.value + 2.5 * moti.value).epsilon(1e-12));
    for (std::size_t i = 0; i < total.grad_q.size(); ++i) {
        for (std::size_t d = 0; d < total.grad_q[i].size(); ++d) {
            const double expect = ce.grad_q[i][d] + 0.1 * ssc.grad_q[i][d] +
                                  2.5 * moti.grad_q[i][d];
            CHECK(total.grad_q[i][d] == doctest::Approx(expect).epsilon(1e-12));
        }
    }

    Hyperparams off;
    off.lambda_ssc = 0.0;
    off.lambda_moti = 0.0;
    const LossReport only_ce = loss_total(ce, ssc, moti, off);
    CHECK(only_ce.value == ce.value);
}

TEST_CASE("SSC with an empty queue and a single item is exactly zero") {
    Rng rng(4);
    const Vec q = unit(rng, 3);
    const LossReport rep = loss_ssc(single_item(q, q, 0), FeatureQueue::Snapshot{}, 1.0);
    CHECK(rep.value == 0.0);
    for (double g : rep.grad_q[0]) CHECK(g == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("SSC closed form with one negative at logits (1, 0)") {
    // q = k+ = e0, negative = e1, tau_v = 1 -> loss = ln(1 + exp(-1))
    const Vec q{1.0, 0.0};
    FeatureQueue::Snapshot queue;
    queue.features.push_back(Vec{0.0, 1.0});
    queue.labels.push_back(1);
    const LossReport rep = loss_ssc(single_item(q, q, 0), queue, 1.0);
    CHECK(rep.value == doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-9));
}

TEST_CASE("SSC with uniform logits equals ln(pool size)") {
    // All pool members identical to k+ -> uniform softmax over n entries.
    const Vec q{1.0, 0.0};
    const Vec k{0.0, 1.0};
    FeatureQueue::Snapshot queue;
    for (int j = 0; j < 6; ++j) {
        queue.features.push_back(k);
        queue.labels.push_back(j);
    }
    const LossReport rep = loss_ssc(single_item(q, k, 0), queue, 0.5);
    CHECK(rep.value == doctest::Approx(std::log(7.0)).epsilon(1e-9));
}

TEST_CASE("MoTi single different-class element gives -q.k'") {
    const Vec q{1.0, 0.0};
    const Vec k = q;  // own key, same label, filtered out
    FeatureQueue::Snapshot queue;
    queue.features.push_back(l2_normalize({1.0, std::sqrt(3.0)}));  // q.k' = 0.5
    queue.labels.push_back(9);
    const LossReport rep = loss_moti(single_item(q, k, 0), queue);
    CHECK(rep.value == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(rep.skipped == 0);
}

TEST_CASE("MoTi with no different-class features skips and counts") {
    const Vec q{1.0, 0.0};
    FeatureQueue::Snapshot queue;
    queue.features.push_back(Vec{0.0, 1.0});
    queue.labels.push_back(3);
    const LossReport rep = loss_moti(single_item(q, q, 3), queue);  // everything label 3
    CHECK(rep.value == 0.0);
    CHECK(rep.skipped == 1);
    for (double g : rep.grad_q[0]) CHECK(g == 0.0);
}

TEST_CASE("minimizing MoTi raises mean cross-class similarity") {
    // One small gradient step on q must increase the mean cosine to the
    // different-class set (the tightness direction).
    Rng rng(6);
    FeatureQueue::Snapshot queue;
    for (int j = 0; j < 8; ++j) {
        queue.features.push_back(unit(rng, 5));
        queue.labels.push_back(1 + j % 3);
    }
    BatchFeatures batch = single_item(unit(rng, 5), unit(rng, 5), 0);
    const LossReport rep = loss_moti(batch, queue);

    auto mean_sim = [&](const Vec& q) {
        double s = 0.0;
        for (const auto& f : queue.features) s += dot(q, f);
        return s / static_cast<double>(queue.features.size());
    };
    const double before = mean_sim(batch.q[0]);
    Vec stepped = batch.q[0];
    for (std::size_t d = 0; d < stepped.size(); ++d) stepped[d] -= 1e-3 * rep.grad_q[0][d];
    CHECK(mean_sim(stepped) > before);
}

TEST_CASE("queue-taking overloads match the snapshot path") {
    Rng rng(14);
    FeatureQueue queue(8, 3);
    for (int p = 0; p < 3; ++p) {
        queue.push({unit(rng, 3), unit(rng, 3)}, {2 * p, 2 * p + 1});
    }
    BatchFeatures batch = single_item(unit(rng, 3), unit(rng, 3), 0);
    const auto snap = queue.snapshot();
    CHECK(loss_ssc(batch, queue, 0.07).value == loss_ssc(batch, snap, 0.07).value);
    CHECK(loss_moti(batch, queue).value == loss_moti(batch, snap).value);
}

TEST_CASE("all loss gradients match finite differences") {
    for (const auto& r : {gradcheck_loss_ce(20, 808), gradcheck_loss_ssc(20, 808),
                          gradcheck_loss_moti(20, 808)}) {
        INFO(r.name, " max_rel_err=", r.max_rel_err);
        CHECK(r.pass);
    }
}

TEST_CASE("loss_total validates gradient congruence") {
    LossReport a, b, c;
    a.grad_q = {Vec{0.0, 0.0}};
    b.grad_q = {Vec{0.0, 0.0}};
    c.grad_q = {};  // wrong count
    CHECK_THROWS_AS(loss_total(a, b, c, Hyperparams{}), ShapeMismatchError);
}
