#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "motic/encoder.hpp"
#include "motic/gradcheck.hpp"
#include "motic/rng.hpp"

using namespace motic;

TEST_CASE("encoder_init is deterministic and shaped by the arch") {
    const EncoderParams a = encoder_init({4, 8, 3}, 11);
    const EncoderParams b = encoder_init({4, 8, 3}, 11);
    REQUIRE(a.layers.size() == 2);
    CHECK(a.layers[0].weight.rows == 8);
    CHECK(a.layers[0].weight.cols == 4);
    CHECK(a.layers[1].weight.rows == 3);
    CHECK(a.layers[1].weight.cols == 8);
    CHECK(flatten_params(a) == flatten_params(b));  // bit-identical

    for (const auto& layer : a.layers) {
        for (double v : layer.bias) CHECK(v == 0.0);
    }
}

TEST_CASE("different seeds give different params") {
    const auto a = flatten_params(encoder_init({4, 8, 3}, 1));
    const auto b = flatten_params(encoder_init({4, 8, 3}, 2));
    bool differ = false;
    for (std::size_t i = 0; i < a.size(); ++i) differ = differ || a[i] != b[i];
    CHECK(differ);
}

TEST_CASE("single identity layer reduces forward to normalization") {
    EncoderParams p;
    p.dims = {2, 2};
    LayerParams layer;
    layer.weight = Mat::identity(2);
    layer.bias = {0.0, 0.0};
    p.layers.push_back(layer);

    const Vec f = encoder_forward(p, {3.0, 4.0});
    CHECK(f[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("forward output is unit-norm for random inputs") {
    Rng rng(3);
    const EncoderParams p = encoder_init({6, 10, 4}, 21);
    for (int i = 0; i < 40; ++i) {
        const Vec f = encoder_forward(p, rng.gaussian_vec(6));
        CHECK(static_cast<int>(f.size()) == 4);
        CHECK(std::fabs(norm(f) - 1.0) <= 1e-9);
    }
}

TEST_CASE("forward throws ZeroNorm when the output vanishes") {
    EncoderParams p;
    p.dims = {2, 2};
    LayerParams layer;
    layer.weight = Mat(2, 2);  // all zero
    layer.bias = {0.0, 0.0};
    p.layers.push_back(layer);
    CHECK_THROWS_AS(encoder_forward(p, {1.0, 1.0}), ZeroNormError);
}

TEST_CASE("backward of zero upstream gradient is zero") {
    const EncoderParams p = encoder_init({4, 6, 3}, 9);
    ActivationTape tape;
    encoder_forward(p, {0.5, -0.2, 0.8, 0.1}, &tape);
    const auto res = encoder_backward(p, tape, {0.0, 0.0, 0.0});
    for (double v : flatten_params(res.param_grad)) CHECK(v == 0.0);
    for (double v : res.input_grad) CHECK(v == 0.0);
}

TEST_CASE("gradient parallel to the feature dies in the tangent projection") {
    const EncoderParams p = encoder_init({4, 6, 3}, 13);
    ActivationTape tape;
    const Vec f = encoder_forward(p, {1.0, 0.3, -0.4, 0.2}, &tape);
    const auto res = encoder_backward(p, tape, f);  // upstream grad = feature itself
    for (double v : flatten_params(res.param_grad)) CHECK(std::fabs(v) <= 1e-12);
}

TEST_CASE("backward matches finite differences") {
    const auto params = gradcheck_encoder(20, 555);
    INFO(params.name, " max_rel_err=", params.max_rel_err);
    CHECK(params.pass);
    const auto input = gradcheck_encoder_input(20, 555);
    INFO(input.name, " max_rel_err=", input.max_rel_err);
    CHECK(input.pass);
}

TEST_CASE("backward rejects mismatched shapes") {
    const EncoderParams p = encoder_init({4, 6, 3}, 17);
    ActivationTape tape;
    encoder_forward(p, {0.1, 0.2, 0.3, 0.4}, &tape);
    CHECK_THROWS_AS(encoder_backward(p, tape, {1.0, 0.0}), ShapeMismatchError);
}

TEST_CASE("momentum_update endpoints and arithmetic") {
    const EncoderParams q = encoder_init({3, 4, 2}, 31);
    EncoderParams key = encoder_init({3, 4, 2}, 32);

    EncoderParams frozen = key;
    momentum_update(frozen, q, 1.0);
    CHECK(flatten_params(frozen) == flatten_params(key));  // m = 1: unchanged

    EncoderParams copied = key;
    momentum_update(copied, q, 0.0);
    CHECK(flatten_params(copied) == flatten_params(q));  // m = 0: exact copy

    EncoderParams zeros = zero_grad_like(q);
    EncoderParams ones = zeros;
    for (auto& layer : ones.layers) {
        for (double& v : layer.weight.data) v = 1.0;
        for (double& v : layer.bias) v = 1.0;
    }
    momentum_update(zeros, ones, 0.99);
    for (double v : flatten_params(zeros)) CHECK(v == doctest::Approx(0.01).epsilon(1e-12));

    CHECK_THROWS_AS(momentum_update(key, q, 1.5), BadMomentumError);
    CHECK_THROWS_AS(momentum_update(key, q, -0.1), BadMomentumError);
    EncoderParams other = encoder_init({3, 5, 2}, 33);
    CHECK_THROWS_AS(momentum_update(other, q, 0.5), ShapeMismatchError);
}

TEST_CASE("momentum fixpoint: key == query stays bit-identical") {
    const EncoderParams q = encoder_init({3, 4, 2}, 77);
    EncoderParams key = q;
    for (double m : {0.0, 0.3, 0.99, 1.0}) {
        momentum_update(key, q, m);
        CHECK(flatten_params(key) == flatten_params(q));
    }
}

TEST_CASE("closed-form momentum trajectory under a constant query") {
    const EncoderParams query = encoder_init({3, 4, 2}, 41);
    const EncoderParams key0 = encoder_init({3, 4, 2}, 42);
    EncoderParams key = key0;
    const double m = 0.97;
    const int steps = 25;
    for (int t = 0; t < steps; ++t) momentum_update(key, query, m);

    const double mt = std::pow(m, steps);
    const auto k = flatten_params(key);
    const auto k0 = flatten_params(key0);
    const auto q = flatten_params(query);
    for (std::size_t i = 0; i < k.size(); ++i) {
        CHECK(std::fabs(k[i] - (mt * k0[i] + (1.0 - mt) * q[i])) <= 1e-9);
    }
}
