#pragma once

// Run manifest: the sidecar JSON written next to every batch of outputs,
// recording which tool produced them, the hash of the exact configuration
// used, every seed that entered, the files written, and when.  The
// manifest is the only artifact that carries wall-clock time; data files
// stay byte-identical across repeated runs.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nept/config.hpp"
#include "nept/errors.hpp"
#include "nept/version.hpp"

namespace nept::io {

/// FNV-1a 64-bit hash, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string now_utc_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct ManifestFile {
    std::string path;  ///< relative to the manifest's directory
    std::string kind;  ///< "trace", "report", "config", ...
};

struct NamedSeed {
    std::string name;  ///< what the seed fed, e.g. "sweep.up"
    std::uint64_t value = 0;
};

struct RunManifest {
    std::string tool = kToolName;
    std::string version = kToolVersion;
    int schema_version = kReportSchemaVersion;
    std::string command;      ///< subcommand that produced the outputs
    std::string config_hash;  ///< FNV-1a of the canonical serialized config
    std::uint64_t master_seed = 0;
    std::vector<NamedSeed> seeds;
    std::vector<ManifestFile> files;
    std::string created_utc;
};

/// Builds the invariant part of a manifest from a configuration; the
/// caller appends files and seeds and stamps created_utc before writing.
inline RunManifest make_manifest(const RunConfig& cfg, const std::string& command) {
    RunManifest m;
    m.command = command;
    m.config_hash = fnv1a_hex(serialize_config(cfg));
    m.master_seed = cfg.seed;
    return m;
}

inline std::string serialize_manifest(const RunManifest& m) {
    nlohmann::ordered_json doc;
    doc["tool"] = m.tool;
    doc["version"] = m.version;
    doc["schema_version"] = m.schema_version;
    doc["command"] = m.command;
    doc["config_hash"] = m.config_hash;
    doc["master_seed"] = m.master_seed;
    auto& seeds = doc["seeds"];
    seeds = nlohmann::ordered_json::array();
    for (const auto& s : m.seeds)
        seeds.push_back({{"name", s.name}, {"value", s.value}});
    auto& files = doc["files"];
    files = nlohmann::ordered_json::array();
    for (const auto& f : m.files)
        files.push_back({{"path", f.path}, {"kind", f.kind}});
    doc["created_utc"] = m.created_utc;
    return doc.dump(2) + "\n";
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << serialize_manifest(m);
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace nept::io
