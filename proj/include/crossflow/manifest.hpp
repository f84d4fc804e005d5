#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crossflow/csv.hpp"
#include "crossflow/experiments.hpp"
#include "crossflow/format.hpp"
#include "crossflow/version.hpp"

namespace crossflow {

inline std::string content_hash(std::string_view content) {
    char buf[17];
    const std::uint64_t h = fnv1a64(content);
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[i] = hex[(h >> (60 - 4 * i)) & 0xf];
    buf[16] = '\0';
    return std::string(buf, 16);
}

/// Reproducibility record written next to every command's outputs. Holds the
/// fully resolved configuration and content hashes; deliberately no
/// timestamps, so reruns produce byte-identical manifests.
struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, std::string>> inputs;   // (path, content hash)
    std::vector<std::pair<std::string, std::string>> outputs;

    void add_input(const std::string& path, std::string_view content) {
        inputs.emplace_back(path, content_hash(content));
    }
    void add_output(const std::string& path, std::string_view content) {
        outputs.emplace_back(path, content_hash(content));
    }
};

inline std::string manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json obj;
    obj["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    obj["command"] = m.command;
    obj["argv"] = m.argv;
    obj["config"] = m.config;
    obj["seeds"] = m.seeds;
    auto files = [](const std::vector<std::pair<std::string, std::string>>& list) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& [path, hash] : list) arr.push_back({{"path", path}, {"fnv1a64", hash}});
        return arr;
    };
    obj["inputs"] = files(m.inputs);
    obj["outputs"] = files(m.outputs);
    return obj.dump(2) + "\n";
}

inline void write_manifest(const std::string& path, const Manifest& m) {
    write_file(path, manifest_to_json(m));
}

/// Sweep provenance sidecar: the report's ordered key/value trail as JSON.
inline std::string provenance_to_json(const SweepReport& report) {
    nlohmann::ordered_json obj;
    for (const auto& [key, value] : report.provenance) obj[key] = value;
    return obj.dump(2) + "\n";
}

}  // namespace crossflow
