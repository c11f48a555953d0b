#pragma once

#include <cstdint>
#include <vector>

#include "motic/vec.hpp"

namespace motic {

struct LayerParams {
    Mat weight;  // out x in
    Vec bias;    // out
};

// A small fully connected feature extractor: tanh on hidden layers, linear
// output layer, L2 normalization on top. Used twice per run, as the query
// encoder (trained by gradient) and the key encoder (trained by momentum).
struct EncoderParams {
    std::vector<int> dims;            // [input, hidden..., output]
    std::vector<LayerParams> layers;  // layers[i] maps dims[i] -> dims[i+1]

    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
};

// Same shapes as EncoderParams, reused as the gradient/velocity carrier.
using EncoderGrad = EncoderParams;

// Cached activations from one forward call, consumed by encoder_backward.
struct ActivationTape {
    Vec input;
    std::vector<Vec> pre;   // z_l per layer
    std::vector<Vec> post;  // tanh(z_l) on hidden layers, z_L on the last
    Vec feature;            // normalized output
    double pre_norm = 0.0;  // ||z_L||
};

struct BackwardResult {
    EncoderGrad param_grad;
    Vec input_grad;  // d(grad_feature . feature) / d input, kept for checks
};

// Weights ~ Uniform(-1, 1) / sqrt(fan_in) drawn layer by layer, row-major;
// biases zero. Bit-identical for identical (dims, seed).
EncoderParams encoder_init(const std::vector<int>& dims, std::uint64_t seed);

// Returns l2_normalize(MLP(x)); fills `tape` when non-null.
Vec encoder_forward(const EncoderParams& params, const Vec& x, ActivationTape* tape = nullptr);

// Exact chain rule for d(grad_feature . feature) / d theta. The
// normalization layer contributes the tangent projection (I - f f') / ||z||.
BackwardResult encoder_backward(const EncoderParams& params, const ActivationTape& tape,
                                const Vec& grad_feature);

// key <- m * key + (1 - m) * query, entrywise. The key encoder is never
// touched by backpropagation; this is its only update path.
void momentum_update(EncoderParams& key, const EncoderParams& query, double m);

// Gradient buffer helpers.
EncoderGrad zero_grad_like(const EncoderParams& params);
void grad_accumulate(EncoderGrad& acc, const EncoderGrad& g);
bool grad_all_finite(const EncoderGrad& g);

// Flattened views, used by checkpointing and the finite-difference harness.
std::vector<double> flatten_params(const EncoderParams& params);
void unflatten_params(EncoderParams& params, const std::vector<double>& flat);

}  // namespace motic
