#pragma once

#include <map>
#include <string>
#include <vector>

#include "motic/encoder.hpp"
#include "motic/transforms.hpp"
#include "motic/vec.hpp"

namespace motic {

struct ProtoKey {
    int session = 0;
    int class_id = 0;
    int transform = 0;

    auto operator<=>(const ProtoKey&) const = default;
};

// The expanding classifier: per-session, per-class, per-transform prototypes.
// Sessions append in order with disjoint class ids; entries of finished
// sessions are never touched again (the frozen-backbone contract).
// Prototypes are stored un-normalized; cosine similarity at inference
// normalizes implicitly.
class PrototypeBank {
public:
    void add(int session, int class_id, int transform, Vec proto);

    bool has(int session, int class_id, int transform) const;
    const Vec& get(int session, int class_id, int transform) const;

    bool empty() const { return entries_.empty(); }
    int max_session() const { return max_session_; }
    int session_of(int class_id) const;  // -1 when unknown
    bool has_class(int class_id) const;

    // Sorted lexicographically by (session, class, transform); iteration
    // order doubles as the classification tie-break order.
    const std::map<ProtoKey, Vec>& entries() const { return entries_; }

    // Distinct (session, class) pairs, ascending.
    std::vector<std::pair<int, int>> classes() const;

    // Versioned little-endian binary: header, then (t, c, m, dim, float64
    // payload) per entry. Round-trips bit-exactly.
    void save(const std::string& path) const;
    static PrototypeBank load(const std::string& path);

private:
    std::map<ProtoKey, Vec> entries_;
    std::map<int, int> class_session_;
    int max_session_ = -1;
};

// Coordinatewise mean of the features; not re-normalized.
Vec cea_prototype(const std::vector<Vec>& features);

struct BayesianPrior {
    Vec prior_mean;        // mu_{c'}
    double tau_sq = 1.0;   // prior variance
    double sigma_sq = 1.0; // feature noise variance
};

// Posterior mean under f(x_i) ~ N(mu_c, sigma^2 I), mu_c ~ N(mu_{c'}, tau^2 I):
//   ( (1/sigma^2) sum_i f(x_i) + (1/tau^2) mu_{c'} ) / ( K/sigma^2 + 1/tau^2 )
// K = 0 returns the prior mean exactly.
Vec bayes_prototype(const std::vector<Vec>& support, const BayesianPrior& prior);

// (K/sigma^2 + 1/tau^2)^-1; strictly below the plain-mean variance
// sigma^2/K for any finite tau^2.
double bayes_posterior_variance(int k, double sigma_sq, double tau_sq);

enum class TauSqMode { kFixed, kAdaptive };

// Picks the base-session prototype (transform 0) with the highest cosine
// similarity to the support mean; ties go to the lowest class id. In
// adaptive mode tau^2 = sigma^2 (1 - s) / s from the winning similarity s,
// with s clamped away from {0, 1} so tau^2 stays positive and finite.
// `selected_class` receives the winning base class id when non-null.
BayesianPrior select_prior(const std::vector<Vec>& support, const PrototypeBank& base_bank,
                           double sigma_sq, TauSqMode mode, double fixed_tau_sq,
                           int* selected_class = nullptr);

struct BayesSettings {
    double sigma_sq = 1.0;
    TauSqMode mode = TauSqMode::kFixed;
    double fixed_tau_sq = 1.0;
};

// For each (class, transform): encode apply_transform(m, x) for every class
// sample (no stochastic augmentation) and store the mean under session t.
// With `bayes` set and t > 0, each per-transform mean is shrunk toward the
// matching transform view of the prior class selected at m = 0.
void build_finegrained_bank(const EncoderParams& encoder, const TransformSet& transforms,
                            const std::vector<std::pair<int, std::vector<Vec>>>& class_samples,
                            int session_t, PrototypeBank& bank,
                            const BayesSettings* bayes = nullptr);

}  // namespace motic
