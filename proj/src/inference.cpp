#include "motic/inference.hpp"

namespace motic {

Prediction ncm_classify(const Vec& feature, const PrototypeBank& bank) {
    if (bank.empty()) throw EmptyBankError("ncm_classify: empty bank");
    Prediction best;
    bool have = false;
    // Bank iteration is (session, class) ascending, so keeping the first
    // strict maximum realizes the lexicographic tie-break.
    for (const auto& [key, proto] : bank.entries()) {
        if (key.transform != 0) continue;
        const double s = cosine_sim(feature, proto);
        if (!have || s > best.score) {
            have = true;
            best.score = s;
            best.class_id = key.class_id;
            best.session_id = key.session;
        }
    }
    if (!have) throw EmptyBankError("ncm_classify: no transform-0 prototypes");
    best.per_m_scores = {best.score};
    return best;
}

Prediction multigrain_classify(const Vec& x, const EncoderParams& encoder,
                               const TransformSet& transforms, const PrototypeBank& bank) {
    if (bank.empty()) throw EmptyBankError("multigrain_classify: empty bank");

    std::vector<Vec> feats(transforms.M);
    for (int m = 0; m < transforms.M; ++m) {
        feats[m] = encoder_forward(encoder, apply_transform(transforms, m, x));
    }

    Prediction best;
    bool have = false;
    for (const auto& [t, c] : bank.classes()) {
        double score = 0.0;
        std::vector<double> per_m(transforms.M);
        for (int m = 0; m < transforms.M; ++m) {
            const Vec& proto = bank.get(t, c, m);  // throws MissingFineGrained
            per_m[m] = cosine_sim(feats[m], proto);
            score += per_m[m];
        }
        if (!have || score > best.score) {
            have = true;
            best.score = score;
            best.class_id = c;
            best.session_id = t;
            best.per_m_scores = std::move(per_m);
        }
    }
    return best;
}

}  // namespace motic
