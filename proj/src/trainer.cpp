#include "motic/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "motic/rng.hpp"

namespace motic {

double cosine_lr(int epoch, int epochs, double lr_max) {
    if (epoch < 0 || epoch >= epochs) throw ConfigError("cosine_lr: epoch out of range");
    const double t = static_cast<double>(epoch) / static_cast<double>(epochs);
    return lr_max * (1.0 + std::cos(3.14159265358979323846 * t)) / 2.0;
}

namespace {

inline void nesterov_scalar(double& p, double g, double& v, double lr, double mu) {
    v = mu * v + g;
    p -= lr * (g + mu * v);
}

}  // namespace

void nesterov_step(EncoderParams& params, const EncoderGrad& grad, EncoderGrad& velocity,
                   double lr, double mu) {
    if (params.layers.size() != grad.layers.size() || params.layers.size() != velocity.layers.size()) {
        throw ShapeMismatchError("nesterov_step: layer count mismatch");
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& pw = params.layers[l].weight.data;
        const auto& gw = grad.layers[l].weight.data;
        auto& vw = velocity.layers[l].weight.data;
        if (pw.size() != gw.size() || pw.size() != vw.size()) {
            throw ShapeMismatchError("nesterov_step: weight shape mismatch");
        }
        for (std::size_t i = 0; i < pw.size(); ++i) nesterov_scalar(pw[i], gw[i], vw[i], lr, mu);
        auto& pb = params.layers[l].bias;
        const auto& gb = grad.layers[l].bias;
        auto& vb = velocity.layers[l].bias;
        if (pb.size() != gb.size() || pb.size() != vb.size()) {
            throw ShapeMismatchError("nesterov_step: bias shape mismatch");
        }
        for (std::size_t i = 0; i < pb.size(); ++i) nesterov_scalar(pb[i], gb[i], vb[i], lr, mu);
    }
}

void nesterov_step(std::vector<Vec>& params, const std::vector<Vec>& grad,
                   std::vector<Vec>& velocity, double lr, double mu) {
    if (params.size() != grad.size() || params.size() != velocity.size()) {
        throw ShapeMismatchError("nesterov_step: row count mismatch");
    }
    for (std::size_t r = 0; r < params.size(); ++r) {
        if (params[r].size() != grad[r].size() || params[r].size() != velocity[r].size()) {
            throw ShapeMismatchError("nesterov_step: row dim mismatch");
        }
        for (std::size_t i = 0; i < params[r].size(); ++i) {
            nesterov_scalar(params[r][i], grad[r][i], velocity[r][i], lr, mu);
        }
    }
}

TrainResult train_base_session(const TrainConfig& cfg, const SessionDataset& data,
                               const TransformSet& transforms, const StepObserver& observer) {
    const int b = cfg.batch_size;
    const int m_count = transforms.M;
    if (cfg.epochs < 1 || b < 1) throw ConfigError("train: epochs and batch size must be >= 1");
    if (!(cfg.lr_max > 0.0)) throw ConfigError("train: lr_max must be positive");
    if (!(cfg.sgd_momentum >= 0.0 && cfg.sgd_momentum < 1.0)) {
        throw ConfigError("train: sgd_momentum must lie in [0, 1)");
    }
    if (cfg.hp.m_transforms != m_count) {
        throw ConfigError("train: hyperparams transform count differs from transform set");
    }
    if (cfg.queue_capacity % (b * m_count) != 0) {
        throw ConfigError("train: queue capacity must be a multiple of batch*M");
    }
    const std::vector<LabeledVec>& base = data.base();
    if (base.empty()) throw ConfigError("train: base session is empty");
    if (cfg.arch.front() != data.dim()) throw ConfigError("train: arch input dim != data dim");

    const int num_base_classes = data.base_class_count();
    const int virtual_classes = num_base_classes * m_count;
    const int feat_dim = cfg.arch.back();

    TrainResult res;
    res.query = encoder_init(cfg.arch, cfg.seed);
    res.key = res.query;  // exact copy; momentum is its only update path
    res.classifier = classifier_init(virtual_classes, feat_dim, cfg.seed);

    OptimizerState opt;
    opt.encoder_velocity = zero_grad_like(res.query);
    opt.classifier_velocity.assign(res.classifier.w.size(), Vec(feat_dim, 0.0));

    FeatureQueue queue(cfg.queue_capacity, feat_dim);
    AugmentConfig aug{cfg.aug_noise_std, cfg.aug_scale_jitter,
                      Rng::stream(cfg.seed, rng_streams::kAugment)};
    Rng shuffle_rng = Rng::stream(cfg.seed, rng_streams::kShuffle);

    std::vector<std::size_t> order(base.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    const std::size_t items_per_batch = static_cast<std::size_t>(b) * m_count;
    std::vector<ActivationTape> tapes(items_per_batch);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_max);
        shuffle_rng.shuffle(order);
        const int num_batches = static_cast<int>(base.size()) / b;  // partial batch dropped

        double ce_sum = 0.0, ssc_sum = 0.0, moti_sum = 0.0, total_sum = 0.0;
        long skipped = 0;

        for (int step = 0; step < num_batches; ++step) {
            BatchFeatures bf;
            bf.q.resize(items_per_batch);
            bf.k_plus.resize(items_per_batch);
            bf.vlabels.resize(items_per_batch);
            bf.provenance.resize(items_per_batch);

            std::size_t j = 0;
            for (int i = 0; i < b; ++i) {
                const LabeledVec& sample = base[order[static_cast<std::size_t>(step) * b + i]];
                for (int m = 0; m < m_count; ++m, ++j) {
                    const Vec xt = apply_transform(transforms, m, sample.x);
                    auto [xq, xk] = make_views(aug, xt);
                    bf.q[j] = encoder_forward(res.query, xq, &tapes[j]);
                    bf.k_plus[j] = encoder_forward(res.key, xk);
                    bf.vlabels[j] = expand_label(sample.label, m, m_count);
                    bf.provenance[j] = {i, m};
                }
            }

            // Zero-weight components are skipped and logged as zero; the rng
            // streams are unaffected either way.
            auto zero_report = [&] {
                LossReport r;
                r.grad_q.assign(items_per_batch, Vec(static_cast<std::size_t>(feat_dim), 0.0));
                return r;
            };
            const FeatureQueue::Snapshot snap = queue.snapshot();
            const LossReport ce = loss_ce(bf, res.classifier, cfg.hp.tau);
            const LossReport ssc =
                cfg.hp.lambda_ssc != 0.0 ? loss_ssc(bf, snap, cfg.hp.tau_v) : zero_report();
            const LossReport moti =
                cfg.hp.lambda_moti != 0.0 ? loss_moti(bf, snap) : zero_report();
            const LossReport total = loss_total(ce, ssc, moti, cfg.hp);

            if (!std::isfinite(total.value)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << " step " << step
                    << " (ce=" << ce.value << " ssc=" << ssc.value << " moti=" << moti.value << ")";
                throw NonFiniteLossError(msg.str());
            }

            EncoderGrad enc_grad = zero_grad_like(res.query);
            for (std::size_t t = 0; t < items_per_batch; ++t) {
                grad_accumulate(enc_grad,
                                encoder_backward(res.query, tapes[t], total.grad_q[t]).param_grad);
            }
            if (!grad_all_finite(enc_grad)) {
                throw NonFiniteLossError("train: non-finite encoder gradient");
            }

            nesterov_step(res.query, enc_grad, opt.encoder_velocity, lr, cfg.sgd_momentum);
            nesterov_step(res.classifier.w, total.grad_w, opt.classifier_velocity, lr,
                          cfg.sgd_momentum);
            momentum_update(res.key, res.query, cfg.key_momentum);
            queue.push(bf.k_plus, bf.vlabels);

            ce_sum += ce.value;
            ssc_sum += ssc.value;
            moti_sum += moti.value;
            total_sum += total.value;
            skipped += moti.skipped;

            if (observer) observer(epoch, step, res.query, res.key);
        }

        if (num_batches == 0) throw ConfigError("train: batch size exceeds base session size");
        const double inv = 1.0 / num_batches;
        res.log.epochs.push_back({epoch, lr, ce_sum * inv, ssc_sum * inv, moti_sum * inv,
                                  total_sum * inv, skipped});
    }
    return res;
}

std::vector<std::pair<int, std::vector<Vec>>> group_by_class(const std::vector<LabeledVec>& split) {
    std::map<int, std::vector<Vec>> grouped;
    for (const LabeledVec& item : split) grouped[item.label].push_back(item.x);
    return {grouped.begin(), grouped.end()};
}

void run_incremental_sessions(const EncoderParams& encoder, const TransformSet& transforms,
                              PrototypeBank& bank, const SessionDataset& data,
                              const BayesSettings* bayes) {
    for (int t = 1; t <= data.sessions(); ++t) {
        if (bank.max_session() != t - 1) {
            throw SessionOrderError("run_incremental_sessions: bank is missing session " +
                                    std::to_string(t - 1));
        }
        build_finegrained_bank(encoder, transforms, group_by_class(data.support(t)), t, bank,
                               bayes);
    }
}

// ---------------------------------------------------------------------------
// Checkpoint format. All integers and floats little-endian.

namespace {

constexpr char kCkptMagic[8] = {'M', 'O', 'T', 'I', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError("checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
};

void put_params(std::string& out, const EncoderParams& p) {
    for (const auto& layer : p.layers) {
        for (double v : layer.weight.data) put_f64(out, v);
        for (double v : layer.bias) put_f64(out, v);
    }
}

EncoderParams read_params(Reader& r, const std::vector<int>& dims) {
    EncoderParams p;
    p.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LayerParams layer;
        layer.weight = Mat(dims[l + 1], dims[l]);
        for (double& v : layer.weight.data) v = r.f64();
        layer.bias.resize(static_cast<std::size_t>(dims[l + 1]));
        for (double& v : layer.bias) v = r.f64();
        p.layers.push_back(std::move(layer));
    }
    return p;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string out;
    out.append(kCkptMagic, 8);
    put_u32(out, kCkptVersion);
    put_u32(out, static_cast<std::uint32_t>(ckpt.query.dims.size()));
    for (int d : ckpt.query.dims) put_u32(out, static_cast<std::uint32_t>(d));
    put_u32(out, static_cast<std::uint32_t>(ckpt.m_transforms));
    put_u64(out, ckpt.transform_seed);
    put_params(out, ckpt.query);
    put_params(out, ckpt.key);
    put_u32(out, static_cast<std::uint32_t>(ckpt.classifier.w.size()));
    put_u32(out, static_cast<std::uint32_t>(ckpt.classifier.feat_dim));
    for (const Vec& row : ckpt.classifier.w) {
        for (double v : row) put_f64(out, v);
    }
    put_u64(out, ckpt.config_echo.size());
    out += ckpt.config_echo;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("checkpoint save: cannot open " + path);
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw IoError("checkpoint save: write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint load: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), kCkptMagic, 8) != 0) {
        throw IoError("checkpoint load: bad magic");
    }
    Reader r{buf, 8};
    if (r.u32() != kCkptVersion) throw IoError("checkpoint load: unsupported version");
    const std::uint32_t n_dims = r.u32();
    if (n_dims < 2 || n_dims > 64) throw IoError("checkpoint load: implausible arch");
    std::vector<int> dims(n_dims);
    for (auto& d : dims) d = static_cast<int>(r.u32());
    Checkpoint ckpt;
    ckpt.m_transforms = static_cast<int>(r.u32());
    ckpt.transform_seed = r.u64();
    ckpt.query = read_params(r, dims);
    ckpt.key = read_params(r, dims);
    const std::uint32_t n_classes = r.u32();
    ckpt.classifier.feat_dim = static_cast<int>(r.u32());
    ckpt.classifier.w.assign(n_classes, Vec(ckpt.classifier.feat_dim));
    for (auto& row : ckpt.classifier.w) {
        for (double& v : row) v = r.f64();
    }
    const std::uint64_t echo_len = r.u64();
    r.need(echo_len);
    ckpt.config_echo = buf.substr(r.pos, echo_len);
    return ckpt;
}

}  // namespace motic
