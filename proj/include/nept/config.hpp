#pragma once

// JSON run configuration: one document describing the physics snapshot,
// the optics chain, the sweep specification, the optics mode to run, the
// master seed, and the output directory.  Parsing is strict — unknown or
// mistyped keys raise SchemaError carrying the dotted key path and, when
// it can be located, the 1-based line in the source text.  Every field is
// optional and defaults to the library's canonical operating point, and
// serialize(parse(x)) is idempotent.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nept/enum_names.hpp"
#include "nept/errors.hpp"
#include "nept/field.hpp"
#include "nept/sweep.hpp"
#include "nept/version.hpp"

namespace nept::io {

/// Which optics chains a run executes.
enum class RunMode { kFreeSpace, kCavity, kBoth };

inline std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::kFreeSpace: return "free_space";
        case RunMode::kCavity: return "cavity";
        default: return "both";
    }
}

inline RunMode run_mode_from_string(const std::string& s) {
    if (s == "free_space") return RunMode::kFreeSpace;
    if (s == "cavity") return RunMode::kCavity;
    if (s == "both") return RunMode::kBoth;
    throw InvalidParams("unknown run mode: " + s);
}

/// Complete description of one simulator run.
struct RunConfig {
    core::LadderParams physics{};
    sweep::OpticsChain optics{};   ///< mode member is set per run leg
    sweep::SweepSpec sweep{};
    RunMode mode = RunMode::kFreeSpace;
    double mu0_ea0 = kDefaultDipoleEa0;  ///< MW transition dipole (e*a0)
    std::uint64_t seed = 1;              ///< master seed for the run
    std::string outdir = "out";

    void validate() const {
        physics.validate();
        optics.validate();
        sweep.validate();
        if (!(mu0_ea0 > 0.0)) throw InvalidParams("mu0_ea0 must be > 0");
        if (outdir.empty()) throw InvalidParams("outdir must not be empty");
    }
};

namespace detail {

using json = nlohmann::ordered_json;

/// Best-effort 1-based line of the first occurrence of "key" in text.
inline int key_line(const std::string& text, const std::string& key) {
    const auto pos = text.find('"' + key + '"');
    if (pos == std::string::npos) return 0;
    int line = 1;
    for (std::size_t i = 0; i < pos; ++i)
        if (text[i] == '\n') ++line;
    return line;
}

struct Cursor {
    const json& node;
    const std::string& text;
    std::string path;

    std::string child_path(const std::string& key) const {
        return path.empty() ? key : path + "." + key;
    }

    void reject_unknown(std::initializer_list<const char*> known) const {
        for (const auto& [key, value] : node.items()) {
            bool ok = false;
            for (const char* k : known)
                if (key == k) ok = true;
            if (!ok)
                throw SchemaError("unknown config key: " + child_path(key),
                                  child_path(key), key_line(text, key));
        }
    }

    bool has(const char* key) const { return node.contains(key); }

    Cursor object(const char* key) const {
        const json& child = node.at(key);
        if (!child.is_object())
            throw SchemaError("expected an object at " + child_path(key),
                              child_path(key), key_line(text, key));
        return Cursor{child, text, child_path(key)};
    }

    double number(const char* key, double fallback) const {
        if (!node.contains(key)) return fallback;
        const json& v = node.at(key);
        if (!v.is_number())
            throw SchemaError("expected a number at " + child_path(key),
                              child_path(key), key_line(text, key));
        return v.get<double>();
    }

    std::uint64_t integer(const char* key, std::uint64_t fallback) const {
        if (!node.contains(key)) return fallback;
        const json& v = node.at(key);
        if (!v.is_number_unsigned())
            throw SchemaError("expected a non-negative integer at " + child_path(key),
                              child_path(key), key_line(text, key));
        return v.get<std::uint64_t>();
    }

    bool boolean(const char* key, bool fallback) const {
        if (!node.contains(key)) return fallback;
        const json& v = node.at(key);
        if (!v.is_boolean())
            throw SchemaError("expected a boolean at " + child_path(key),
                              child_path(key), key_line(text, key));
        return v.get<bool>();
    }

    std::string str(const char* key, const std::string& fallback) const {
        if (!node.contains(key)) return fallback;
        const json& v = node.at(key);
        if (!v.is_string())
            throw SchemaError("expected a string at " + child_path(key),
                              child_path(key), key_line(text, key));
        return v.get<std::string>();
    }

    /// String key mapped through a parser that throws InvalidParams on
    /// unknown values; rethrown as SchemaError with the key's location.
    template <typename Parse, typename T>
    T parsed(const char* key, Parse&& parse, T fallback) const {
        if (!node.contains(key)) return fallback;
        try {
            return parse(str(key, ""));
        } catch (const InvalidParams& e) {
            throw SchemaError(std::string(e.what()) + " at " + child_path(key),
                              child_path(key), key_line(text, key));
        }
    }
};

}  // namespace detail

/// Parses a JSON run configuration.  Structural problems (bad JSON,
/// unknown keys, wrong types, unknown enum values) raise SchemaError;
/// semantic range checks live in RunConfig::validate().
inline RunConfig parse_config(const std::string& text) {
    detail::json doc;
    try {
        doc = detail::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line for a useful pointer into the source
        int line = 1;
        for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i)
            if (text[i] == '\n') ++line;
        throw SchemaError(std::string("invalid JSON: ") + e.what(), "", line);
    }
    if (!doc.is_object()) throw SchemaError("config root must be an object", "", 1);

    detail::Cursor root{doc, text, ""};
    root.reject_unknown({"schema_version", "seed", "mode", "outdir", "mu0_ea0",
                         "physics", "optics", "sweep"});

    RunConfig cfg;
    const std::uint64_t ver =
        root.integer("schema_version", static_cast<std::uint64_t>(kConfigSchemaVersion));
    if (ver != static_cast<std::uint64_t>(kConfigSchemaVersion))
        throw SchemaError("unsupported config schema_version", "schema_version",
                          detail::key_line(text, "schema_version"));
    cfg.seed = root.integer("seed", cfg.seed);
    cfg.mode = root.parsed("mode", run_mode_from_string, cfg.mode);
    cfg.outdir = root.str("outdir", cfg.outdir);
    cfg.mu0_ea0 = root.number("mu0_ea0", cfg.mu0_ea0);

    if (root.has("physics")) {
        const auto ph = root.object("physics");
        ph.reject_unknown({"omega_p", "omega_c", "omega_mw", "delta_p", "delta_c",
                           "delta_mw", "gamma_e", "gamma_r1", "gamma_r2",
                           "gamma_d", "V"});
        auto& p = cfg.physics;
        p.omega_p = ph.number("omega_p", p.omega_p);
        p.omega_c = ph.number("omega_c", p.omega_c);
        p.omega_mw = ph.number("omega_mw", p.omega_mw);
        p.delta_p = ph.number("delta_p", p.delta_p);
        p.delta_c = ph.number("delta_c", p.delta_c);
        p.delta_mw = ph.number("delta_mw", p.delta_mw);
        p.gamma_e = ph.number("gamma_e", p.gamma_e);
        p.gamma_r1 = ph.number("gamma_r1", p.gamma_r1);
        p.gamma_r2 = ph.number("gamma_r2", p.gamma_r2);
        p.gamma_d = ph.number("gamma_d", p.gamma_d);
        p.V = ph.number("V", p.V);
    }

    if (root.has("optics")) {
        const auto op = root.object("optics");
        op.reject_unknown({"medium", "cavity", "detector"});
        if (op.has("medium")) {
            const auto m = op.object("medium");
            m.reject_unknown({"od0", "length_mm"});
            cfg.optics.medium.od0 = m.number("od0", cfg.optics.medium.od0);
            cfg.optics.medium.length_mm = m.number("length_mm", cfg.optics.medium.length_mm);
        }
        if (op.has("cavity")) {
            const auto c = op.object("cavity");
            c.reject_unknown({"t_in", "loss_empty", "loss_cell", "on_resonance"});
            cfg.optics.cavity.t_in = c.number("t_in", cfg.optics.cavity.t_in);
            cfg.optics.cavity.loss_empty = c.number("loss_empty", cfg.optics.cavity.loss_empty);
            cfg.optics.cavity.loss_cell = c.number("loss_cell", cfg.optics.cavity.loss_cell);
            cfg.optics.cavity.on_resonance =
                c.boolean("on_resonance", cfg.optics.cavity.on_resonance);
        }
        if (op.has("detector")) {
            const auto d = op.object("detector");
            d.reject_unknown({"sigma0", "tau0", "seed", "cavity_noise_factor"});
            cfg.optics.detector.sigma0 = d.number("sigma0", cfg.optics.detector.sigma0);
            cfg.optics.detector.tau0 = d.number("tau0", cfg.optics.detector.tau0);
            cfg.optics.detector.seed = d.integer("seed", cfg.optics.detector.seed);
            cfg.optics.detector.cavity_noise_factor =
                d.number("cavity_noise_factor", cfg.optics.detector.cavity_noise_factor);
        }
    }

    if (root.has("sweep")) {
        const auto sw = root.object("sweep");
        sw.reject_unknown({"axis", "start", "stop", "rate", "t_int", "direction",
                           "ramp", "seed"});
        auto& s = cfg.sweep;
        s.axis = sw.parsed("axis", axis_from_string, s.axis);
        s.start = sw.number("start", s.start);
        s.stop = sw.number("stop", s.stop);
        s.rate = sw.number("rate", s.rate);
        s.t_int = sw.number("t_int", s.t_int);
        s.direction = sw.parsed("direction", direction_from_string, s.direction);
        s.ramp = sw.parsed("ramp", ramp_from_string, s.ramp);
        s.seed = sw.integer("seed", s.seed);
    }
    return cfg;
}

/// Serializes a configuration with every field explicit, in a stable key
/// order, so parse -> serialize is a canonical form.
inline std::string serialize_config(const RunConfig& cfg) {
    detail::json doc;
    doc["schema_version"] = kConfigSchemaVersion;
    doc["seed"] = cfg.seed;
    doc["mode"] = to_string(cfg.mode);
    doc["outdir"] = cfg.outdir;
    doc["mu0_ea0"] = cfg.mu0_ea0;
    auto& ph = doc["physics"];
    ph["omega_p"] = cfg.physics.omega_p;
    ph["omega_c"] = cfg.physics.omega_c;
    ph["omega_mw"] = cfg.physics.omega_mw;
    ph["delta_p"] = cfg.physics.delta_p;
    ph["delta_c"] = cfg.physics.delta_c;
    ph["delta_mw"] = cfg.physics.delta_mw;
    ph["gamma_e"] = cfg.physics.gamma_e;
    ph["gamma_r1"] = cfg.physics.gamma_r1;
    ph["gamma_r2"] = cfg.physics.gamma_r2;
    ph["gamma_d"] = cfg.physics.gamma_d;
    ph["V"] = cfg.physics.V;
    auto& op = doc["optics"];
    op["medium"]["od0"] = cfg.optics.medium.od0;
    op["medium"]["length_mm"] = cfg.optics.medium.length_mm;
    op["cavity"]["t_in"] = cfg.optics.cavity.t_in;
    op["cavity"]["loss_empty"] = cfg.optics.cavity.loss_empty;
    op["cavity"]["loss_cell"] = cfg.optics.cavity.loss_cell;
    op["cavity"]["on_resonance"] = cfg.optics.cavity.on_resonance;
    auto& det = op["detector"];
    det["sigma0"] = cfg.optics.detector.sigma0;
    det["tau0"] = cfg.optics.detector.tau0;
    det["seed"] = cfg.optics.detector.seed;
    det["cavity_noise_factor"] = cfg.optics.detector.cavity_noise_factor;
    auto& sw = doc["sweep"];
    sw["axis"] = to_string(cfg.sweep.axis);
    sw["start"] = cfg.sweep.start;
    sw["stop"] = cfg.sweep.stop;
    sw["rate"] = cfg.sweep.rate;
    sw["t_int"] = cfg.sweep.t_int;
    sw["direction"] = to_string(cfg.sweep.direction);
    sw["ramp"] = to_string(cfg.sweep.ramp);
    sw["seed"] = cfg.sweep.seed;
    return doc.dump(2) + "\n";
}

inline RunConfig read_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

inline void write_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << serialize_config(cfg);
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace nept::io
