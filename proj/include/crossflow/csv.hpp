#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "crossflow/errors.hpp"
#include "crossflow/experiments.hpp"
#include "crossflow/format.hpp"
#include "crossflow/heatmap.hpp"
#include "crossflow/metrics.hpp"
#include "crossflow/simulation.hpp"

namespace crossflow {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return buf.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + path);
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

inline std::string location(const std::string& name, std::size_t line_no) {
    return name + ":" + format_int(static_cast<long long>(line_no));
}

inline std::string feature_column_name(std::size_t index, std::size_t width) {
    std::string digits = format_int(static_cast<long long>(index));
    while (digits.size() < width) digits.insert(digits.begin(), '0');
    return "f" + digits;
}

inline std::size_t feature_name_width(std::size_t n_features) {
    const std::size_t digits = format_int(static_cast<long long>(n_features - 1)).size();
    return digits < 3 ? 3 : digits;
}

}  // namespace detail

// -- Trajectory CSV -----------------------------------------------------------

inline constexpr const char* kTrajectoryHeader = "t,id,x,y,dest";

/// One row per pedestrian per frame. Frames with no pedestrians produce no
/// rows, so a reconstructed log only contains the non-empty frame times.
inline std::string trajectory_to_csv(const TrajectoryLog& log) {
    std::string out = kTrajectoryHeader;
    out += "\n";
    for (const Frame& frame : log.frames) {
        const std::string t = format_double(frame.t);
        for (const AgentState& a : frame.agents) {
            out += t;
            out += ',';
            out += format_int(a.id);
            out += ',';
            out += format_double(a.position.x);
            out += ',';
            out += format_double(a.position.y);
            out += ',';
            out += kDestinationLabels[static_cast<std::size_t>(a.destination_id)];
            out += '\n';
        }
    }
    return out;
}

inline TrajectoryLog trajectory_from_csv(const std::string& content, const std::string& name) {
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ConfigError(name + ": empty trajectory file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTrajectoryHeader)
        throw ConfigError(detail::location(name, line_no) + ": expected header '" +
                          kTrajectoryHeader + "'");

    TrajectoryLog log;
    std::map<int, int> dest_of;  // destination constancy check
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 5)
            throw ConfigError(detail::location(name, line_no) + ": expected 5 fields, got " +
                              format_int(static_cast<long long>(fields.size())));
        const std::string where = detail::location(name, line_no);
        const double t = parse_double(fields[0], where + " t");
        const int id = static_cast<int>(parse_int(fields[1], where + " id"));
        const double x = parse_double(fields[2], where + " x");
        const double y = parse_double(fields[3], where + " y");
        int dest = -1;
        for (int d = 0; d < kNumDestinations; ++d)
            if (fields[4] == kDestinationLabels[d]) dest = d;
        if (dest < 0)
            throw ConfigError(where + ": unknown destination '" + std::string(fields[4]) + "'");

        if (log.frames.empty() || t > log.frames.back().t + 1e-12) {
            if (!log.frames.empty() && t <= log.frames.back().t)
                throw ConfigError(where + ": frame times must be strictly increasing");
            log.frames.push_back(Frame{t, {}});
        } else if (t < log.frames.back().t - 1e-12) {
            throw ConfigError(where + ": frame times must be strictly increasing");
        }
        auto [it, inserted] = dest_of.try_emplace(id, dest);
        if (!inserted && it->second != dest)
            throw ConfigError(where + ": pedestrian " + format_int(id) +
                              " changed destination mid-run");
        log.frames.back().agents.push_back(AgentState{id, Vec2{x, y}, dest});
    }
    return log;
}

// -- Dataset CSV ---------------------------------------------------------------

/// Header `f000,...,resp_L,resp_S,resp_R,run,t,n_in_cutout`; one row per
/// sample, ordered by (run, t). All floats are round-trip exact.
inline std::string dataset_to_csv(const Dataset& ds) {
    std::string out;
    // An empty dataset still gets its full header: the cutout fixes the
    // feature count even when no samples were extracted.
    std::size_t f = ds.feature_dim();
    if (ds.samples.empty() && ds.cutout.resolution > 0.0 && ds.cutout.rect.width() > 0.0)
        f = detail::pixel_count(ds.cutout.rect.width(), ds.cutout.resolution, "width") *
            detail::pixel_count(ds.cutout.rect.height(), ds.cutout.resolution, "height");
    const std::size_t width = f == 0 ? 3 : detail::feature_name_width(f);
    for (std::size_t i = 0; i < f; ++i) {
        out += detail::feature_column_name(i, width);
        out += ',';
    }
    out += "resp_L,resp_S,resp_R,run,t,n_in_cutout\n";
    for (const HeatmapSample& s : ds.samples) {
        for (const double v : s.features) {
            out += format_double(v);
            out += ',';
        }
        for (const double r : s.response) {
            out += format_double(r);
            out += ',';
        }
        out += format_int(s.run_id);
        out += ',';
        out += format_double(s.t);
        out += ',';
        out += format_int(s.n_in_cutout);
        out += '\n';
    }
    return out;
}

inline Dataset dataset_from_csv(const std::string& content, const std::string& name) {
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw ConfigError(name + ": empty dataset file");
    const auto header = detail::split_csv_line(line);
    std::size_t f = 0;
    while (f < header.size() && !header[f].empty() && header[f][0] == 'f') ++f;
    const std::vector<std::string_view> tail(header.begin() + static_cast<std::ptrdiff_t>(f),
                                             header.end());
    const std::vector<std::string_view> expected_tail = {"resp_L", "resp_S", "resp_R",
                                                         "run",    "t",      "n_in_cutout"};
    if (f == 0 || tail.size() != expected_tail.size())
        throw ConfigError(name + ":1: not a dataset header");
    for (std::size_t i = 0; i < expected_tail.size(); ++i)
        if (tail[i] != expected_tail[i])
            throw ConfigError(name + ":1: expected column '" + std::string(expected_tail[i]) +
                              "', got '" + std::string(tail[i]) + "'");
    const std::size_t width = detail::feature_name_width(f);
    for (std::size_t i = 0; i < f; ++i)
        if (header[i] != detail::feature_column_name(i, width))
            throw ConfigError(name + ":1: expected feature column '" +
                              detail::feature_column_name(i, width) + "', got '" +
                              std::string(header[i]) + "'");

    Dataset ds;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != f + 6)
            throw ConfigError(detail::location(name, line_no) + ": expected " +
                              format_int(static_cast<long long>(f + 6)) + " fields, got " +
                              format_int(static_cast<long long>(fields.size())));
        const std::string where = detail::location(name, line_no);
        HeatmapSample s;
        s.features.reserve(f);
        for (std::size_t i = 0; i < f; ++i)
            s.features.push_back(parse_double(fields[i], where + " feature"));
        for (std::size_t i = 0; i < 3; ++i)
            s.response[i] = parse_double(fields[f + i], where + " response");
        s.run_id = static_cast<int>(parse_int(fields[f + 3], where + " run"));
        s.t = parse_double(fields[f + 4], where + " t");
        s.n_in_cutout = static_cast<int>(parse_int(fields[f + 5], where + " n_in_cutout"));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

// -- Error summary CSV ---------------------------------------------------------

struct SummaryRow {
    std::string label;
    std::size_t n_test = 0;
    double mean_err = 0.0;
    double std_err = 0.0;
};

inline constexpr const char* kSummaryHeader = "label,n_test,mean_err,std_err";

inline std::string summaries_to_csv(const std::vector<SummaryRow>& rows) {
    std::string out = kSummaryHeader;
    out += '\n';
    for (const SummaryRow& r : rows) {
        out += r.label;
        out += ',';
        out += format_int(static_cast<long long>(r.n_test));
        out += ',';
        out += format_double(r.mean_err);
        out += ',';
        out += format_double(r.std_err);
        out += '\n';
    }
    return out;
}

// -- Sweep report CSV ------------------------------------------------------------

inline constexpr const char* kSweepHeader =
    "sweep,value,mean_err,std_err,train_time_s,n_samples,seed,baseline_err";

inline std::string sweep_to_csv(const SweepReport& report) {
    std::string out = kSweepHeader;
    out += '\n';
    for (const SweepRow& r : report.rows) {
        out += r.sweep;
        out += ',';
        out += format_double(r.value);
        out += ',';
        out += format_double(r.mean_err);
        out += ',';
        out += format_double(r.std_err);
        out += ',';
        out += format_double(r.train_time_s);
        out += ',';
        out += format_int(static_cast<long long>(r.n_samples));
        out += ',';
        out += format_uint(r.seed);
        out += ',';
        out += format_double(r.baseline_err);
        out += '\n';
    }
    return out;
}

}  // namespace crossflow
