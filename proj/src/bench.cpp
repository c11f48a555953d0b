#include "motic/bench.hpp"

#include <cmath>
#include <thread>

#include "motic/inference.hpp"
#include "motic/rng.hpp"

namespace motic {

SessionDataset gen_synthetic_fscil(const BenchConfig& cfg) {
    if (cfg.dim < 2 || cfg.base_classes < 1 || cfg.sessions < 0 || cfg.ways < 1 ||
        cfg.shots < 1 || cfg.base_train_per_class < 1 || cfg.test_per_class < 1) {
        throw ConfigError("gen_synthetic_fscil: all counts must be >= 1");
    }
    if (cfg.within_std < 0.0) throw ConfigError("gen_synthetic_fscil: within_std must be >= 0");

    Rng rng = Rng::stream(cfg.seed, rng_streams::kData);
    const int total = cfg.base_classes + cfg.sessions * cfg.ways;
    const double radius = std::sqrt(static_cast<double>(cfg.dim));

    // Means uniform on the radius-sqrt(dim) sphere; rejection keeps every
    // pairwise cosine at or below the configured cap.
    std::vector<Vec> means;
    means.reserve(total);
    constexpr int kMaxAttempts = 20000;
    for (int c = 0; c < total; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            Vec cand = l2_normalize(rng.gaussian_vec(cfg.dim));
            for (double& v : cand) v *= radius;
            bool ok = true;
            for (const Vec& prev : means) {
                if (cosine_sim(cand, prev) > cfg.max_mean_cos) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                means.push_back(std::move(cand));
                placed = true;
                break;
            }
        }
        if (!placed) {
            throw SeparationError("gen_synthetic_fscil: could not separate class means; "
                                  "lower max_mean_cos demands or the class count");
        }
    }

    auto sample = [&](int class_id) {
        Vec x = means[static_cast<std::size_t>(class_id)];
        if (cfg.within_std > 0.0) {
            for (double& v : x) v += cfg.within_std * rng.gaussian();
        }
        return x;
    };

    std::vector<LabeledVec> base_train;
    std::vector<std::vector<LabeledVec>> supports(static_cast<std::size_t>(cfg.sessions));
    std::vector<std::vector<LabeledVec>> tests(static_cast<std::size_t>(cfg.sessions) + 1);
    std::vector<std::vector<int>> session_classes(static_cast<std::size_t>(cfg.sessions) + 1);

    // Draw order is fixed: per class, train samples then test samples.
    for (int c = 0; c < total; ++c) {
        const bool is_base = c < cfg.base_classes;
        const int session = is_base ? 0 : 1 + (c - cfg.base_classes) / cfg.ways;
        session_classes[static_cast<std::size_t>(session)].push_back(c);
        const int train_count = is_base ? cfg.base_train_per_class : cfg.shots;
        for (int i = 0; i < train_count; ++i) {
            LabeledVec item{sample(c), c};
            if (is_base) {
                base_train.push_back(std::move(item));
            } else {
                supports[static_cast<std::size_t>(session) - 1].push_back(std::move(item));
            }
        }
        for (int i = 0; i < cfg.test_per_class; ++i) {
            tests[static_cast<std::size_t>(session)].push_back({sample(c), c});
        }
    }

    return SessionDataset(cfg.dim, std::move(base_train), std::move(supports), std::move(tests),
                          std::move(session_classes));
}

SessionMetrics evaluate_session(const EncoderParams& encoder, const TransformSet& transforms,
                                const PrototypeBank& bank, const SessionDataset& data,
                                int session_t, InferMode mode, int threads) {
    for (int s = 0; s <= session_t; ++s) {
        for (int c : data.classes_of_session(s)) {
            if (!bank.has_class(c)) {
                throw CoverageGapError("evaluate_session: bank missing class " + std::to_string(c));
            }
        }
    }

    std::vector<LabeledVec> items;
    for (int s = 0; s <= session_t; ++s) {
        const auto& split = data.test_split(s);
        items.insert(items.end(), split.begin(), split.end());
    }

    std::vector<std::uint8_t> correct(items.size(), 0);
    auto classify_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Prediction pred;
            if (mode == InferMode::kMultigrain) {
                pred = multigrain_classify(items[i].x, encoder, transforms, bank);
            } else {
                pred = ncm_classify(encoder_forward(encoder, items[i].x), bank);
            }
            correct[i] = pred.class_id == items[i].label ? 1 : 0;
        }
    };

    if (threads > 1 && items.size() > 1) {
        const std::size_t n_threads = std::min<std::size_t>(threads, items.size());
        std::vector<std::thread> pool;
        const std::size_t chunk = (items.size() + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(items.size(), lo + chunk);
            if (lo < hi) pool.emplace_back(classify_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    } else {
        classify_range(0, items.size());
    }

    SessionMetrics row;
    row.session = session_t;
    int base_hits = 0, new_hits = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (data.is_base_class(items[i].label)) {
            ++row.n_base;
            base_hits += correct[i];
        } else {
            ++row.n_new;
            new_hits += correct[i];
        }
    }
    row.a_base = row.n_base > 0 ? static_cast<double>(base_hits) / row.n_base : 0.0;
    if (session_t > 0 && row.n_new > 0) {
        row.a_new = static_cast<double>(new_hits) / row.n_new;
    }
    row.a_overall = static_cast<double>(base_hits + new_hits) /
                    static_cast<double>(row.n_base + row.n_new);
    return row;
}

double aggregate_avg(const std::vector<SessionMetrics>& rows) {
    if (rows.empty()) throw EmptyInputError("aggregate_avg: no rows");
    double sum = 0.0;
    for (const auto& r : rows) sum += r.a_overall;
    return sum / static_cast<double>(rows.size());
}

}  // namespace motic
