#include "motic/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace motic {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// std::to_chars gives the shortest round-trip representation, which keeps
// echoes both exact and readable.
std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class KeyReader {
public:
    explicit KeyReader(const ConfigFile& file) : file_(file) {}

    template <typename T>
    void read(const std::string& key, T& out) {
        auto it = file_.values.find(key);
        if (it == file_.values.end()) return;
        consumed_.insert(key);
        parse(key, it->second, out);
    }

    void finish() const {
        for (const auto& [key, _] : file_.values) {
            if (!consumed_.count(key)) throw ConfigError("config: unknown key '" + key + "'");
        }
    }

private:
    static void parse(const std::string& key, const std::string& raw, int& out) {
        try {
            std::size_t pos = 0;
            out = std::stoi(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' expects an integer, got '" + raw + "'");
        }
    }
    static void parse(const std::string& key, const std::string& raw, std::uint64_t& out) {
        try {
            std::size_t pos = 0;
            out = std::stoull(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' expects a u64, got '" + raw + "'");
        }
    }
    static void parse(const std::string& key, const std::string& raw, double& out) {
        try {
            std::size_t pos = 0;
            out = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' expects a real, got '" + raw + "'");
        }
    }
    static void parse(const std::string& key, const std::string& raw, std::vector<int>& out) {
        std::vector<int> dims;
        std::stringstream ss(raw);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            int d = 0;
            parse(key, trim(tok), d);
            dims.push_back(d);
        }
        if (dims.size() < 2) throw ConfigError("config: key '" + key + "' needs >= 2 dims");
        out = std::move(dims);
    }
    static void parse(const std::string& key, const std::string& raw, InferMode& out) {
        if (raw == "ncm") out = InferMode::kNcm;
        else if (raw == "multigrain") out = InferMode::kMultigrain;
        else throw ConfigError("config: key '" + key + "' expects ncm|multigrain");
    }
    static void parse(const std::string& key, const std::string& raw, ProtoMode& out) {
        if (raw == "cea") out = ProtoMode::kCea;
        else if (raw == "bayes") out = ProtoMode::kBayes;
        else throw ConfigError("config: key '" + key + "' expects cea|bayes");
    }
    static void parse(const std::string& key, const std::string& raw, TauSqMode& out) {
        if (raw == "fixed") out = TauSqMode::kFixed;
        else if (raw == "adaptive") out = TauSqMode::kAdaptive;
        else throw ConfigError("config: key '" + key + "' expects fixed|adaptive");
    }

    const ConfigFile& file_;
    std::set<std::string> consumed_;
};

}  // namespace

ConfigFile ConfigFile::parse_text(const std::string& text) {
    ConfigFile file;
    file.raw_text = text;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        file.values[section.empty() ? key : section + "." + key] = value;
    }
    return file;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_text(text);
}

ExperimentConfig ExperimentConfig::from(const ConfigFile& file) {
    ExperimentConfig cfg;
    KeyReader r(file);

    r.read("bench.dim", cfg.bench.dim);
    r.read("bench.base_classes", cfg.bench.base_classes);
    r.read("bench.sessions", cfg.bench.sessions);
    r.read("bench.ways", cfg.bench.ways);
    r.read("bench.shots", cfg.bench.shots);
    r.read("bench.base_train_per_class", cfg.bench.base_train_per_class);
    r.read("bench.test_per_class", cfg.bench.test_per_class);
    r.read("bench.max_mean_cos", cfg.bench.max_mean_cos);
    r.read("bench.within_std", cfg.bench.within_std);

    r.read("train.epochs", cfg.train.epochs);
    r.read("train.batch_size", cfg.train.batch_size);
    r.read("train.lr_max", cfg.train.lr_max);
    r.read("train.sgd_momentum", cfg.train.sgd_momentum);
    r.read("train.arch", cfg.train.arch);
    r.read("train.tau", cfg.train.hp.tau);
    r.read("train.tau_v", cfg.train.hp.tau_v);
    r.read("train.lambda_ssc", cfg.train.hp.lambda_ssc);
    r.read("train.lambda_moti", cfg.train.hp.lambda_moti);
    r.read("train.m_transforms", cfg.train.hp.m_transforms);
    r.read("train.queue_capacity", cfg.train.queue_capacity);
    r.read("train.key_momentum", cfg.train.key_momentum);
    r.read("train.aug_noise_std", cfg.train.aug_noise_std);
    r.read("train.aug_scale_jitter", cfg.train.aug_scale_jitter);

    r.read("run.seed", cfg.train.seed);
    r.read("run.infer_mode", cfg.infer_mode);
    r.read("run.proto_mode", cfg.proto_mode);
    r.read("run.tau_sq_mode", cfg.tau_sq_mode);
    r.read("run.tau_sq", cfg.tau_sq);
    r.finish();

    cfg.bench.seed = cfg.train.seed;
    cfg.train.hp.batch_size = cfg.train.batch_size;
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (train.arch.front() != bench.dim) {
        throw ConfigError("config: train.arch input dim must equal bench.dim");
    }
    if (train.hp.m_transforms < 1) throw ConfigError("config: m_transforms must be >= 1");
    if (train.queue_capacity % (train.batch_size * train.hp.m_transforms) != 0) {
        throw ConfigError("config: queue_capacity must be a multiple of batch_size * m_transforms");
    }
    if (!(train.hp.tau > 0.0) || !(train.hp.tau_v > 0.0)) {
        throw ConfigError("config: temperatures must be positive");
    }
    if (train.hp.lambda_ssc < 0.0 || train.hp.lambda_moti < 0.0) {
        throw ConfigError("config: loss weights must be nonnegative");
    }
    if (!(train.key_momentum >= 0.0 && train.key_momentum <= 1.0)) {
        throw ConfigError("config: key_momentum must lie in [0, 1]");
    }
    if (!(tau_sq > 0.0)) throw ConfigError("config: tau_sq must be positive");
}

std::string ExperimentConfig::echo_text() const {
    std::ostringstream os;
    os << "[bench]\n";
    os << "dim = " << bench.dim << "\n";
    os << "base_classes = " << bench.base_classes << "\n";
    os << "sessions = " << bench.sessions << "\n";
    os << "ways = " << bench.ways << "\n";
    os << "shots = " << bench.shots << "\n";
    os << "base_train_per_class = " << bench.base_train_per_class << "\n";
    os << "test_per_class = " << bench.test_per_class << "\n";
    os << "max_mean_cos = " << fmt_double(bench.max_mean_cos) << "\n";
    os << "within_std = " << fmt_double(bench.within_std) << "\n";
    os << "\n[train]\n";
    os << "epochs = " << train.epochs << "\n";
    os << "batch_size = " << train.batch_size << "\n";
    os << "lr_max = " << fmt_double(train.lr_max) << "\n";
    os << "sgd_momentum = " << fmt_double(train.sgd_momentum) << "\n";
    os << "arch = ";
    for (std::size_t i = 0; i < train.arch.size(); ++i) {
        os << (i ? "," : "") << train.arch[i];
    }
    os << "\n";
    os << "tau = " << fmt_double(train.hp.tau) << "\n";
    os << "tau_v = " << fmt_double(train.hp.tau_v) << "\n";
    os << "lambda_ssc = " << fmt_double(train.hp.lambda_ssc) << "\n";
    os << "lambda_moti = " << fmt_double(train.hp.lambda_moti) << "\n";
    os << "m_transforms = " << train.hp.m_transforms << "\n";
    os << "queue_capacity = " << train.queue_capacity << "\n";
    os << "key_momentum = " << fmt_double(train.key_momentum) << "\n";
    os << "aug_noise_std = " << fmt_double(train.aug_noise_std) << "\n";
    os << "aug_scale_jitter = " << fmt_double(train.aug_scale_jitter) << "\n";
    os << "\n[run]\n";
    os << "seed = " << train.seed << "\n";
    os << "infer_mode = " << (infer_mode == InferMode::kNcm ? "ncm" : "multigrain") << "\n";
    os << "proto_mode = " << (proto_mode == ProtoMode::kCea ? "cea" : "bayes") << "\n";
    os << "tau_sq_mode = " << (tau_sq_mode == TauSqMode::kFixed ? "fixed" : "adaptive") << "\n";
    os << "tau_sq = " << fmt_double(tau_sq) << "\n";
    return os.str();
}

}  // namespace motic
