#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "motic/rng.hpp"
#include "motic/vec.hpp"

namespace motic {

// The virtual-class machinery. Image rotations become random orthogonal
// matrices on raw vectors: norm-preserving, deterministic, and guaranteed to
// relocate class clusters, which is the property the label expansion needs.
struct TransformSet {
    int M = 1;
    int dim = 0;
    std::vector<Mat> mats;  // mats[0] is exactly the identity
};

// mats[0] = I; mats[1..] come from modified Gram-Schmidt on a seeded Gaussian
// matrix. MGS leaves the R diagonal positive, so the factor is unique and the
// set is bit-identical for identical (M, dim, seed).
TransformSet make_transform_set(int M, int dim, std::uint64_t seed);

// Virtual label y*M + m, 0-indexed so [0, C*M) indexes arrays directly.
int expand_label(int y, int m, int M);

// mats[m] * x. Norm-preserving by orthogonality.
Vec apply_transform(const TransformSet& ts, int m, const Vec& x);

// Stochastic view generation for the query/key pair. Each view is
// x * (1 + s) + n with s ~ Uniform(-scale_jitter, +scale_jitter) and
// n ~ Gaussian(0, noise_std^2 I), drawn from the owned stream.
struct AugmentConfig {
    double noise_std = 0.0;
    double scale_jitter = 0.0;
    Rng rng{0};
};

std::pair<Vec, Vec> make_views(AugmentConfig& cfg, const Vec& x);

}  // namespace motic
