#pragma once

#include <vector>

#include "motic/encoder.hpp"
#include "motic/prototypes.hpp"
#include "motic/transforms.hpp"
#include "motic/vec.hpp"

namespace motic {

struct Prediction {
    int class_id = -1;
    int session_id = -1;
    double score = 0.0;
    std::vector<double> per_m_scores;  // winning class, one entry per transform
};

// Nearest class mean over the transform-0 prototypes: argmax over (c, t) of
// cosine similarity, ties broken toward the lowest (t, c) lexicographically.
Prediction ncm_classify(const Vec& feature, const PrototypeBank& bank);

// Multigrained fusion: score(c, t) = sum_m sim(f(T_m x), w_cm^t), same
// tie-break. Requires all M entries per class.
Prediction multigrain_classify(const Vec& x, const EncoderParams& encoder,
                               const TransformSet& transforms, const PrototypeBank& bank);

}  // namespace motic
