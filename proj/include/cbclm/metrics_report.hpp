// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cbclm/errors.hpp"
#include "cbclm/textio.hpp"
#include "cbclm/trainer.hpp"

namespace cbclm {

// Cross-run comparison row distilled from one metrics log.
struct RunSummary {
    std::string run_name;
    std::string method = "unknown";
    double lambda0 = std::numeric_limits<double>::quiet_NaN();
    double increment = std::numeric_limits<double>::quiet_NaN();
    double final_valid_ppl = std::numeric_limits<double>::quiet_NaN();
    double best_valid_ppl = std::numeric_limits<double>::quiet_NaN();
    // Smallest step with lambda == 1; absent when the schedule never gets
    // there (increment 0 with lambda0 < 1).
    std::optional<std::int64_t> steps_to_full;
};

namespace detail {

// First t with lambda0 + t * increment >= 1, evaluated in the same double
// arithmetic the schedule uses so the answer matches the logged lambdas.
inline std::optional<std::int64_t> steps_to_full_competence(double lambda0, double increment) {
    if (lambda0 >= 1.0) return 0;
    if (!(increment > 0.0)) return std::nullopt;
    auto reaches = [&](std::int64_t t) {
        return lambda0 + static_cast<double>(t) * increment >= 1.0;
    };
    auto t = static_cast<std::int64_t>(std::ceil((1.0 - lambda0) / increment));
    while (t > 0 && reaches(t - 1)) --t;
    while (!reaches(t)) ++t;
    return t;
}

} // namespace detail

inline RunSummary summarize_run(const std::string& run_name, const MetricsFile& file) {
    RunSummary s;
    s.run_name = run_name;
    if (file.method) s.method = to_string(*file.method);

    // Prefer the metadata line; fall back to reading the schedule off the
    // lambda column of older logs.
    if (file.lambda0) {
        s.lambda0 = *file.lambda0;
    } else if (!file.records.empty()) {
        s.lambda0 = file.records.front().lambda;
    }
    if (file.increment) {
        s.increment = *file.increment;
    } else if (file.records.size() >= 2 && file.records.front().lambda < 1.0) {
        s.increment = file.records[1].lambda - file.records[0].lambda;
    } else if (!file.records.empty()) {
        s.increment = 0.0;
    }

    for (const MetricsRecord& r : file.records) {
        if (!r.valid_ppl) continue;
        s.final_valid_ppl = *r.valid_ppl;
        if (std::isnan(s.best_valid_ppl) || *r.valid_ppl < s.best_valid_ppl)
            s.best_valid_ppl = *r.valid_ppl;
    }
    if (!std::isnan(s.lambda0) && !std::isnan(s.increment))
        s.steps_to_full = detail::steps_to_full_competence(s.lambda0, s.increment);
    return s;
}

struct RunInput {
    std::string run_name;
    std::string metrics_path;
};

// Reads each metrics log and orders the rows best first; runs that never
// evaluated sort last. Ties fall back to the run name so output is stable.
inline std::vector<RunSummary> summarize(const std::vector<RunInput>& runs) {
    std::vector<RunSummary> out;
    out.reserve(runs.size());
    for (const RunInput& run : runs)
        out.push_back(summarize_run(run.run_name, read_metrics_csv(run.metrics_path)));
    std::sort(out.begin(), out.end(), [](const RunSummary& a, const RunSummary& b) {
        const bool an = std::isnan(a.best_valid_ppl);
        const bool bn = std::isnan(b.best_valid_ppl);
        if (an != bn) return bn;
        if (!an && a.best_valid_ppl != b.best_valid_ppl)
            return a.best_valid_ppl < b.best_valid_ppl;
        return a.run_name < b.run_name;
    });
    return out;
}

namespace detail {

inline std::string steps_to_full_text(const std::optional<std::int64_t>& steps) {
    return steps ? std::to_string(*steps) : std::string("inf");
}

} // namespace detail

inline void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& summaries) {
    out << "run,method,lambda0,increment,final_valid_ppl,best_valid_ppl,steps_to_full\n";
    for (const RunSummary& s : summaries) {
        out << s.run_name << ',' << s.method << ',' << g17(s.lambda0) << ','
            << g17(s.increment) << ',' << g17(s.final_valid_ppl) << ','
            << g17(s.best_valid_ppl) << ',' << detail::steps_to_full_text(s.steps_to_full)
            << '\n';
    }
}

inline void write_summary_csv(const std::string& path,
                              const std::vector<RunSummary>& summaries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write summary file: " + path);
    write_summary_csv(out, summaries);
    if (!out) throw data_error("write failure on summary file: " + path);
}

// Human-facing fixed-width table; shorter float formatting than the CSV.
inline std::string format_summary_table(const std::vector<RunSummary>& summaries) {
    const std::vector<std::string> header = {"run", "method", "lambda0", "increment",
                                             "final_valid_ppl", "best_valid_ppl",
                                             "steps_to_full"};
    const auto g6 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    std::vector<std::vector<std::string>> rows;
    rows.push_back(header);
    for (const RunSummary& s : summaries)
        rows.push_back({s.run_name, s.method, g6(s.lambda0), g6(s.increment),
                        g6(s.final_valid_ppl), g6(s.best_valid_ppl),
                        detail::steps_to_full_text(s.steps_to_full)});

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());

    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out.append(widths[c] - row[c].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

// Writes <dir>/<run_name>.csv holding the evaluation curve of one run.
inline std::string write_curves(const std::string& dir, const std::string& run_name,
                                const std::vector<MetricsRecord>& records) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw data_error("cannot create curves directory " + dir + ": " + ec.message());
    const std::string path = (fs::path(dir) / (run_name + ".csv")).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write curve file: " + path);
    out << "step,valid_ppl\n";
    for (const MetricsRecord& r : records)
        if (r.valid_ppl) out << r.step << ',' << g17(*r.valid_ppl) << '\n';
    if (!out) throw data_error("write failure on curve file: " + path);
    return path;
}

} // namespace cbclm
