#pragma once

#include <map>
#include <string>

#include "motic/bench.hpp"
#include "motic/prototypes.hpp"
#include "motic/trainer.hpp"

namespace motic {

// Flat `key = value` text with [section] headers and # comments. Later
// assignments win, so an echo with overrides appended re-parses to the
// effective values.
struct ConfigFile {
    std::map<std::string, std::string> values;  // "section.key" -> raw value
    std::string raw_text;

    static ConfigFile parse_text(const std::string& text);
    static ConfigFile parse_file(const std::string& path);
};

enum class ProtoMode { kCea, kBayes };

struct ExperimentConfig {
    BenchConfig bench;
    TrainConfig train;
    InferMode infer_mode = InferMode::kMultigrain;
    ProtoMode proto_mode = ProtoMode::kCea;
    TauSqMode tau_sq_mode = TauSqMode::kFixed;
    double tau_sq = 1.0;

    // Rejects unknown keys. Validates cross-field consistency (arch input
    // dim vs bench dim, queue divisibility).
    static ExperimentConfig from(const ConfigFile& file);

    // Every key in deterministic order; re-parses to the same config.
    std::string echo_text() const;

    void validate() const;
};

}  // namespace motic
