#include "motic/encoder.hpp"

#include <cmath>

#include "motic/rng.hpp"

namespace motic {

namespace {

void check_congruent(const EncoderParams& a, const EncoderParams& b, const char* who) {
    if (a.dims != b.dims || a.layers.size() != b.layers.size()) {
        throw ShapeMismatchError(std::string(who) + ": encoders not shape-congruent");
    }
}

}  // namespace

EncoderParams encoder_init(const std::vector<int>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw ConfigError("encoder_init: need at least one layer");
    for (int d : dims) {
        if (d < 1) throw ConfigError("encoder_init: all dims must be >= 1");
    }
    Rng rng = Rng::stream(seed, rng_streams::kInit);
    EncoderParams p;
    p.dims = dims;
    p.layers.reserve(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        LayerParams layer;
        layer.weight = Mat(fan_out, fan_in);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& w : layer.weight.data) w = rng.uniform(-1.0, 1.0) * scale;
        layer.bias.assign(static_cast<std::size_t>(fan_out), 0.0);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

Vec encoder_forward(const EncoderParams& params, const Vec& x, ActivationTape* tape) {
    if (static_cast<int>(x.size()) != params.input_dim()) {
        throw ShapeMismatchError("encoder_forward: input dim mismatch");
    }
    const std::size_t n_layers = params.layers.size();
    if (tape) {
        tape->input = x;
        tape->pre.assign(n_layers, {});
        tape->post.assign(n_layers, {});
    }
    Vec a = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Vec z = matvec(params.layers[l].weight, a);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += params.layers[l].bias[i];
        if (tape) tape->pre[l] = z;
        if (l + 1 < n_layers) {
            for (double& v : z) v = std::tanh(v);
        }
        if (tape) tape->post[l] = z;
        a = std::move(z);
    }
    const double n = norm(a);
    if (!(n > kNormEps)) throw ZeroNormError("encoder_forward: pre-normalization output vanished");
    Vec f(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) f[i] = a[i] / n;
    if (tape) {
        tape->feature = f;
        tape->pre_norm = n;
    }
    return f;
}

BackwardResult encoder_backward(const EncoderParams& params, const ActivationTape& tape,
                                const Vec& grad_feature) {
    const std::size_t n_layers = params.layers.size();
    if (tape.pre.size() != n_layers || tape.post.size() != n_layers) {
        throw ShapeMismatchError("encoder_backward: tape does not match params");
    }
    if (static_cast<int>(grad_feature.size()) != params.output_dim()) {
        throw ShapeMismatchError("encoder_backward: grad_feature dim mismatch");
    }

    BackwardResult out;
    out.param_grad = zero_grad_like(params);

    // Through f = z / ||z||:  gz = (u - f (f.u)) / ||z||
    const Vec& f = tape.feature;
    const double fu = dot(f, grad_feature);
    Vec gz(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        gz[i] = (grad_feature[i] - f[i] * fu) / tape.pre_norm;
    }

    for (std::size_t li = n_layers; li-- > 0;) {
        const Vec& a_prev = (li == 0) ? tape.input : tape.post[li - 1];
        LayerParams& g = out.param_grad.layers[li];
        g.bias = gz;
        Mat& gw = g.weight;
        for (int r = 0; r < gw.rows; ++r) {
            double* row = gw.data.data() + static_cast<std::size_t>(r) * gw.cols;
            const double gr = gz[r];
            for (int c = 0; c < gw.cols; ++c) row[c] = gr * a_prev[c];
        }
        Vec ga = matvec_t(params.layers[li].weight, gz);
        if (li > 0) {
            // tanh'(z) = 1 - tanh(z)^2, with tanh(z) already on the tape
            const Vec& act = tape.post[li - 1];
            gz.resize(ga.size());
            for (std::size_t i = 0; i < ga.size(); ++i) {
                gz[i] = ga[i] * (1.0 - act[i] * act[i]);
            }
        } else {
            out.input_grad = std::move(ga);
        }
    }
    return out;
}

void momentum_update(EncoderParams& key, const EncoderParams& query, double m) {
    check_congruent(key, query, "momentum_update");
    if (!(m >= 0.0 && m <= 1.0)) throw BadMomentumError("momentum_update: m outside [0, 1]");
    if (m == 1.0) return;
    // Incremental form k += (1-m)(q - k): equivalent to m*k + (1-m)*q and
    // keeps key == query a bit-exact fixpoint.
    const double alpha = 1.0 - m;
    for (std::size_t l = 0; l < key.layers.size(); ++l) {
        auto& kw = key.layers[l].weight.data;
        const auto& qw = query.layers[l].weight.data;
        if (kw.size() != qw.size()) throw ShapeMismatchError("momentum_update: layer shape mismatch");
        auto& kb = key.layers[l].bias;
        const auto& qb = query.layers[l].bias;
        if (kb.size() != qb.size()) throw ShapeMismatchError("momentum_update: bias shape mismatch");
        if (m == 0.0) {
            kw = qw;  // exact copy
            kb = qb;
            continue;
        }
        for (std::size_t i = 0; i < kw.size(); ++i) kw[i] += alpha * (qw[i] - kw[i]);
        for (std::size_t i = 0; i < kb.size(); ++i) kb[i] += alpha * (qb[i] - kb[i]);
    }
}

EncoderGrad zero_grad_like(const EncoderParams& params) {
    EncoderGrad g;
    g.dims = params.dims;
    g.layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        g.layers[l].weight = Mat(params.layers[l].weight.rows, params.layers[l].weight.cols);
        g.layers[l].bias.assign(params.layers[l].bias.size(), 0.0);
    }
    return g;
}

void grad_accumulate(EncoderGrad& acc, const EncoderGrad& g) {
    check_congruent(acc, g, "grad_accumulate");
    for (std::size_t l = 0; l < acc.layers.size(); ++l) {
        auto& aw = acc.layers[l].weight.data;
        const auto& gw = g.layers[l].weight.data;
        for (std::size_t i = 0; i < aw.size(); ++i) aw[i] += gw[i];
        auto& ab = acc.layers[l].bias;
        const auto& gb = g.layers[l].bias;
        for (std::size_t i = 0; i < ab.size(); ++i) ab[i] += gb[i];
    }
}

bool grad_all_finite(const EncoderGrad& g) {
    for (const auto& layer : g.layers) {
        if (!all_finite(layer.weight) || !all_finite(layer.bias)) return false;
    }
    return true;
}

std::vector<double> flatten_params(const EncoderParams& params) {
    std::vector<double> flat;
    for (const auto& layer : params.layers) {
        flat.insert(flat.end(), layer.weight.data.begin(), layer.weight.data.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    }
    return flat;
}

void unflatten_params(EncoderParams& params, const std::vector<double>& flat) {
    std::size_t off = 0;
    for (auto& layer : params.layers) {
        for (double& w : layer.weight.data) w = flat.at(off++);
        for (double& b : layer.bias) b = flat.at(off++);
    }
    if (off != flat.size()) throw ShapeMismatchError("unflatten_params: size mismatch");
}

}  // namespace motic
