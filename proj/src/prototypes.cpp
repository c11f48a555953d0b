#include "motic/prototypes.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace motic {

void PrototypeBank::add(int session, int class_id, int transform, Vec proto) {
    if (session < 0 || class_id < 0 || transform < 0) {
        throw ConfigError("PrototypeBank::add: negative key component");
    }
    if (!all_finite(proto)) throw NonFiniteError("PrototypeBank::add: non-finite prototype");
    if (session < max_session_) {
        throw SessionOrderError("PrototypeBank::add: session appended out of order");
    }
    auto it = class_session_.find(class_id);
    if (it != class_session_.end() && it->second != session) {
        throw SessionOrderError("PrototypeBank::add: class id reused across sessions");
    }
    const ProtoKey key{session, class_id, transform};
    if (entries_.count(key)) throw ConfigError("PrototypeBank::add: duplicate entry");
    entries_.emplace(key, std::move(proto));
    class_session_[class_id] = session;
    max_session_ = std::max(max_session_, session);
}

bool PrototypeBank::has(int session, int class_id, int transform) const {
    return entries_.count(ProtoKey{session, class_id, transform}) > 0;
}

const Vec& PrototypeBank::get(int session, int class_id, int transform) const {
    auto it = entries_.find(ProtoKey{session, class_id, transform});
    if (it == entries_.end()) {
        throw MissingFineGrainedError("PrototypeBank::get: missing (session, class, transform) entry");
    }
    return it->second;
}

int PrototypeBank::session_of(int class_id) const {
    auto it = class_session_.find(class_id);
    return it == class_session_.end() ? -1 : it->second;
}

bool PrototypeBank::has_class(int class_id) const { return class_session_.count(class_id) > 0; }

std::vector<std::pair<int, int>> PrototypeBank::classes() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [key, _] : entries_) {
        if (out.empty() || out.back() != std::make_pair(key.session, key.class_id)) {
            out.emplace_back(key.session, key.class_id);
        }
    }
    return out;
}

namespace {

constexpr char kBankMagic[8] = {'M', 'O', 'T', 'I', 'C', 'B', 'N', 'K'};
constexpr std::uint32_t kBankVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("bank: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("bank: truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void PrototypeBank::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("bank save: cannot open " + path);
    os.write(kBankMagic, 8);
    write_u32(os, kBankVersion);
    write_u32(os, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [key, proto] : entries_) {
        write_u32(os, static_cast<std::uint32_t>(key.session));
        write_u32(os, static_cast<std::uint32_t>(key.class_id));
        write_u32(os, static_cast<std::uint32_t>(key.transform));
        write_u32(os, static_cast<std::uint32_t>(proto.size()));
        for (double v : proto) write_f64(os, v);
    }
    if (!os) throw IoError("bank save: write failed");
}

PrototypeBank PrototypeBank::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("bank load: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kBankMagic, 8) != 0) throw IoError("bank load: bad magic");
    if (read_u32(is) != kBankVersion) throw IoError("bank load: unsupported version");
    const std::uint32_t n = read_u32(is);
    PrototypeBank bank;
    for (std::uint32_t e = 0; e < n; ++e) {
        const int t = static_cast<int>(read_u32(is));
        const int c = static_cast<int>(read_u32(is));
        const int m = static_cast<int>(read_u32(is));
        const std::uint32_t dim = read_u32(is);
        Vec proto(dim);
        for (auto& v : proto) v = read_f64(is);
        bank.add(t, c, m, std::move(proto));
    }
    return bank;
}

Vec cea_prototype(const std::vector<Vec>& features) {
    if (features.empty()) throw EmptyClassError("cea_prototype: empty sample set");
    Vec mean(features[0].size(), 0.0);
    for (const Vec& f : features) {
        if (f.size() != mean.size()) throw ShapeMismatchError("cea_prototype: dim mismatch");
        for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += f[d];
    }
    const double inv = 1.0 / static_cast<double>(features.size());
    for (double& v : mean) v *= inv;
    return mean;
}

Vec bayes_prototype(const std::vector<Vec>& support, const BayesianPrior& prior) {
    if (!(prior.tau_sq > 0.0) || !(prior.sigma_sq > 0.0)) {
        throw ConfigError("bayes_prototype: variances must be positive");
    }
    if (support.empty()) return prior.prior_mean;
    const std::size_t dim = prior.prior_mean.size();
    Vec sum(dim, 0.0);
    for (const Vec& f : support) {
        if (f.size() != dim) throw ShapeMismatchError("bayes_prototype: dim mismatch");
        for (std::size_t d = 0; d < dim; ++d) sum[d] += f[d];
    }
    const double k = static_cast<double>(support.size());
    const double denom = k / prior.sigma_sq + 1.0 / prior.tau_sq;
    Vec out(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        out[d] = (sum[d] / prior.sigma_sq + prior.prior_mean[d] / prior.tau_sq) / denom;
    }
    return out;
}

double bayes_posterior_variance(int k, double sigma_sq, double tau_sq) {
    if (k < 0) throw ConfigError("bayes_posterior_variance: K must be >= 0");
    if (!(sigma_sq > 0.0) || !(tau_sq > 0.0)) {
        throw ConfigError("bayes_posterior_variance: variances must be positive");
    }
    return 1.0 / (static_cast<double>(k) / sigma_sq + 1.0 / tau_sq);
}

BayesianPrior select_prior(const std::vector<Vec>& support, const PrototypeBank& base_bank,
                           double sigma_sq, TauSqMode mode, double fixed_tau_sq,
                           int* selected_class) {
    const Vec support_mean = cea_prototype(support);
    double best_sim = 0.0;
    const Vec* best = nullptr;
    int best_class = -1;
    for (const auto& [key, proto] : base_bank.entries()) {
        if (key.session != 0 || key.transform != 0) continue;
        const double s = cosine_sim(support_mean, proto);
        if (!best || s > best_sim) {
            best_sim = s;
            best = &proto;
            best_class = key.class_id;
        }
    }
    if (!best) throw EmptyBankError("select_prior: no base-session prototypes");
    if (selected_class) *selected_class = best_class;

    BayesianPrior prior;
    prior.prior_mean = *best;
    prior.sigma_sq = sigma_sq;
    if (mode == TauSqMode::kFixed) {
        prior.tau_sq = fixed_tau_sq;
    } else {
        const double s = std::clamp(best_sim, 1e-6, 1.0 - 1e-9);
        prior.tau_sq = sigma_sq * (1.0 - s) / s;
    }
    if (!(prior.tau_sq > 0.0)) throw ConfigError("select_prior: non-positive tau_sq");
    return prior;
}

void build_finegrained_bank(const EncoderParams& encoder, const TransformSet& transforms,
                            const std::vector<std::pair<int, std::vector<Vec>>>& class_samples,
                            int session_t, PrototypeBank& bank, const BayesSettings* bayes) {
    for (const auto& [class_id, samples] : class_samples) {
        if (samples.empty()) throw EmptyClassError("build_finegrained_bank: class without samples");

        std::vector<std::vector<Vec>> feats(transforms.M);
        for (int m = 0; m < transforms.M; ++m) {
            feats[m].reserve(samples.size());
            for (const Vec& x : samples) {
                feats[m].push_back(encoder_forward(encoder, apply_transform(transforms, m, x)));
            }
        }

        if (bayes && session_t > 0) {
            // Prior class picked once from the untransformed view, then each
            // per-transform mean is shrunk toward that class's matching view.
            int prior_class = -1;
            const BayesianPrior base_prior = select_prior(
                feats[0], bank, bayes->sigma_sq, bayes->mode, bayes->fixed_tau_sq, &prior_class);
            for (int m = 0; m < transforms.M; ++m) {
                BayesianPrior prior = base_prior;
                prior.prior_mean = bank.get(0, prior_class, m);
                bank.add(session_t, class_id, m, bayes_prototype(feats[m], prior));
            }
        } else {
            for (int m = 0; m < transforms.M; ++m) {
                bank.add(session_t, class_id, m, cea_prototype(feats[m]));
            }
        }
    }
}

}  // namespace motic
