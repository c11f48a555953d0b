#include "motic/transforms.hpp"

namespace motic {

TransformSet make_transform_set(int M, int dim, std::uint64_t seed) {
    if (M < 1) throw ConfigError("make_transform_set: M must be >= 1");
    if (dim < 2) throw ConfigError("make_transform_set: dim must be >= 2");
    TransformSet ts;
    ts.M = M;
    ts.dim = dim;
    ts.mats.reserve(M);
    ts.mats.push_back(Mat::identity(dim));

    Rng rng = Rng::stream(seed, rng_streams::kTransforms);
    for (int m = 1; m < M; ++m) {
        // Columns of a Gaussian matrix, orthonormalized in order. Residual
        // norms are positive with probability one; redraw the column on the
        // measure-zero degenerate case.
        std::vector<Vec> cols(dim);
        for (int j = 0; j < dim; ++j) {
            while (true) {
                Vec c = rng.gaussian_vec(dim);
                for (int k = 0; k < j; ++k) {
                    const double proj = dot(c, cols[k]);
                    for (int i = 0; i < dim; ++i) c[i] -= proj * cols[k][i];
                }
                const double n = norm(c);
                if (n > 1e-8) {
                    for (double& v : c) v /= n;
                    cols[j] = std::move(c);
                    break;
                }
            }
        }
        Mat q(dim, dim);
        for (int r = 0; r < dim; ++r) {
            for (int c = 0; c < dim; ++c) q.at(r, c) = cols[c][r];
        }
        ts.mats.push_back(std::move(q));
    }
    return ts;
}

int expand_label(int y, int m, int M) {
    if (y < 0) throw LabelOutOfRangeError("expand_label: negative class id");
    if (m < 0 || m >= M) throw IndexOutOfRangeError("expand_label: transform index out of range");
    return y * M + m;
}

Vec apply_transform(const TransformSet& ts, int m, const Vec& x) {
    if (m < 0 || m >= ts.M) throw IndexOutOfRangeError("apply_transform: transform index out of range");
    if (static_cast<int>(x.size()) != ts.dim) throw ShapeMismatchError("apply_transform: dim mismatch");
    if (m == 0) return x;  // identity slot
    return matvec(ts.mats[m], x);
}

std::pair<Vec, Vec> make_views(AugmentConfig& cfg, const Vec& x) {
    auto draw = [&cfg, &x]() {
        const double s = cfg.scale_jitter > 0.0
                             ? cfg.rng.uniform(-cfg.scale_jitter, cfg.scale_jitter)
                             : 0.0;
        Vec v(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double n = cfg.noise_std > 0.0 ? cfg.noise_std * cfg.rng.gaussian() : 0.0;
            v[i] = x[i] * (1.0 + s) + n;
        }
        return v;
    };
    Vec q = draw();
    Vec k = draw();
    return {std::move(q), std::move(k)};
}

}  // namespace motic
