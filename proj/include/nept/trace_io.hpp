#pragma once

// CSV persistence for sweep traces.  The format is a plain two-column CSV
// with `# key=value` header lines carrying everything needed to reproduce
// the run: axis metadata, the sweep specification, the optics mode, and
// the full physics parameter snapshot.  Doubles are written with 17
// significant digits, so write -> read is lossless.  The wall-clock line
// is written only when the trace carries one; freshly generated traces do
// not, keeping repeated runs byte-identical.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "nept/enum_names.hpp"
#include "nept/errors.hpp"
#include "nept/sweep.hpp"
#include "nept/version.hpp"

namespace nept::io {

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, int line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw FormatError("malformed number '" + s + "'", line);
    return v;
}

inline std::uint64_t parse_u64(const std::string& s, int line) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw FormatError("malformed integer '" + s + "'", line);
    return v;
}

}  // namespace detail

/// Serializes a trace to the two-column CSV format described above.
inline void write_trace(const sweep::Trace& trace, std::ostream& out) {
    using detail::fmt17;
    if (trace.x.size() != trace.y.size())
        throw InvalidParams("trace x and y lengths differ");
    out << "# nept-trace schema=" << kTraceSchemaVersion << "\n";
    out << "# axis_name=" << trace.axis_name << "\n";
    out << "# axis_unit=" << trace.axis_unit << "\n";
    out << "# mode=" << to_string(trace.mode) << "\n";
    out << "# sweep.axis=" << to_string(trace.spec.axis) << "\n";
    out << "# sweep.start=" << fmt17(trace.spec.start) << "\n";
    out << "# sweep.stop=" << fmt17(trace.spec.stop) << "\n";
    out << "# sweep.rate=" << fmt17(trace.spec.rate) << "\n";
    out << "# sweep.t_int=" << fmt17(trace.spec.t_int) << "\n";
    out << "# sweep.direction=" << to_string(trace.spec.direction) << "\n";
    out << "# sweep.ramp=" << to_string(trace.spec.ramp) << "\n";
    out << "# sweep.seed=" << trace.spec.seed << "\n";
    out << "# physics.omega_p=" << fmt17(trace.params.omega_p) << "\n";
    out << "# physics.omega_c=" << fmt17(trace.params.omega_c) << "\n";
    out << "# physics.omega_mw=" << fmt17(trace.params.omega_mw) << "\n";
    out << "# physics.delta_p=" << fmt17(trace.params.delta_p) << "\n";
    out << "# physics.delta_c=" << fmt17(trace.params.delta_c) << "\n";
    out << "# physics.delta_mw=" << fmt17(trace.params.delta_mw) << "\n";
    out << "# physics.gamma_e=" << fmt17(trace.params.gamma_e) << "\n";
    out << "# physics.gamma_r1=" << fmt17(trace.params.gamma_r1) << "\n";
    out << "# physics.gamma_r2=" << fmt17(trace.params.gamma_r2) << "\n";
    out << "# physics.gamma_d=" << fmt17(trace.params.gamma_d) << "\n";
    out << "# physics.V=" << fmt17(trace.params.V) << "\n";
    if (!trace.wall_clock_utc.empty())
        out << "# wall_clock_utc=" << trace.wall_clock_utc << "\n";
    out << "x,y\n";
    for (std::size_t i = 0; i < trace.x.size(); ++i)
        out << fmt17(trace.x[i]) << ',' << fmt17(trace.y[i]) << "\n";
}

inline void write_trace(const sweep::Trace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    write_trace(trace, f);
    if (!f) throw IoError("write failed: " + path);
}

/// Parses a trace written by write_trace.  Throws FormatError with the
/// 1-based line number on any malformed or unknown content.
inline sweep::Trace read_trace(std::istream& in) {
    using detail::parse_double;
    using detail::parse_u64;
    sweep::Trace trace;
    std::string line;
    int lineno = 0;
    bool saw_schema = false, saw_columns = false;

    const auto apply = [&](const std::string& key, const std::string& value) {
        try {
            if (key == "axis_name") trace.axis_name = value;
            else if (key == "axis_unit") trace.axis_unit = value;
            else if (key == "mode") trace.mode = optics_mode_from_string(value);
            else if (key == "sweep.axis") trace.spec.axis = axis_from_string(value);
            else if (key == "sweep.start") trace.spec.start = parse_double(value, lineno);
            else if (key == "sweep.stop") trace.spec.stop = parse_double(value, lineno);
            else if (key == "sweep.rate") trace.spec.rate = parse_double(value, lineno);
            else if (key == "sweep.t_int") trace.spec.t_int = parse_double(value, lineno);
            else if (key == "sweep.direction")
                trace.spec.direction = direction_from_string(value);
            else if (key == "sweep.ramp") trace.spec.ramp = ramp_from_string(value);
            else if (key == "sweep.seed") trace.spec.seed = parse_u64(value, lineno);
            else if (key == "physics.omega_p") trace.params.omega_p = parse_double(value, lineno);
            else if (key == "physics.omega_c") trace.params.omega_c = parse_double(value, lineno);
            else if (key == "physics.omega_mw") trace.params.omega_mw = parse_double(value, lineno);
            else if (key == "physics.delta_p") trace.params.delta_p = parse_double(value, lineno);
            else if (key == "physics.delta_c") trace.params.delta_c = parse_double(value, lineno);
            else if (key == "physics.delta_mw") trace.params.delta_mw = parse_double(value, lineno);
            else if (key == "physics.gamma_e") trace.params.gamma_e = parse_double(value, lineno);
            else if (key == "physics.gamma_r1") trace.params.gamma_r1 = parse_double(value, lineno);
            else if (key == "physics.gamma_r2") trace.params.gamma_r2 = parse_double(value, lineno);
            else if (key == "physics.gamma_d") trace.params.gamma_d = parse_double(value, lineno);
            else if (key == "physics.V") trace.params.V = parse_double(value, lineno);
            else if (key == "wall_clock_utc") trace.wall_clock_utc = value;
            else throw FormatError("unknown trace header key '" + key + "'", lineno);
        } catch (const InvalidParams& e) {
            throw FormatError(std::string(e.what()), lineno);
        }
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body = body.substr(1);
            if (lineno == 1) {
                if (body.rfind("nept-trace schema=", 0) != 0)
                    throw FormatError("missing nept-trace schema header", lineno);
                const std::string ver = body.substr(body.find('=') + 1);
                if (parse_u64(ver, lineno) != static_cast<std::uint64_t>(kTraceSchemaVersion))
                    throw FormatError("unsupported trace schema " + ver, lineno);
                saw_schema = true;
                continue;
            }
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw FormatError("header line without '='", lineno);
            apply(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (!saw_schema)
            throw FormatError("missing nept-trace schema header", lineno);
        if (!saw_columns) {
            if (line != "x,y")
                throw FormatError("expected column header 'x,y'", lineno);
            saw_columns = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw FormatError("expected exactly two comma-separated values", lineno);
        trace.x.push_back(parse_double(line.substr(0, comma), lineno));
        trace.y.push_back(parse_double(line.substr(comma + 1), lineno));
    }
    if (!saw_schema) throw FormatError("empty trace file", 0);
    if (!saw_columns) throw FormatError("trace file has no data section", lineno);
    return trace;
}

inline sweep::Trace read_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open for reading: " + path);
    return read_trace(f);
}

}  // namespace nept::io
