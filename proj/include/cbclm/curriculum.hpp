// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "cbclm/difficulty.hpp"
#include "cbclm/errors.hpp"
#include "cbclm/textio.hpp"

namespace cbclm {

// epsilon(s) = |{ r in raw : r <= raw(s) }| / N. Tied raw values share the
// epsilon of their upper rank, so a whole tie class becomes eligible at
// once; the maximum epsilon is always 1.
inline std::vector<double> cdf_normalize(const RawScores& raw) {
    if (raw.values.empty())
        throw data_error("cdf_normalize: no raw scores");
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        if (!std::isfinite(raw.values[i]))
            throw data_error("cdf_normalize: non-finite raw score for sample " +
                             std::to_string(i));
    }
    std::vector<double> sorted = raw.values;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<double> eps;
    eps.reserve(sorted.size());
    for (double v : raw.values) {
        auto at_or_below = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        eps.push_back(static_cast<double>(at_or_below) / n);
    }
    return eps;
}

// Difficulty-sorted corpus view plus the linear competence schedule.
// Immutable after construction except `step`, which the trainer advances.
struct CurriculumState {
    std::vector<double> eps;        // indexed by sample id
    std::vector<SampleId> order;    // sample ids, ascending by eps
    double lambda0 = 1.0;
    double lambda_increment = 0.0;
    std::int64_t step = 0;

    // eps in `order` order, kept for binary searches.
    std::vector<double> sorted_eps;

    double min_eps() const { return sorted_eps.front(); }
};

inline CurriculumState make_curriculum(const std::vector<double>& eps,
                                       double lambda0, double lambda_increment) {
    if (!(lambda0 > 0.0) || lambda0 > 1.0)
        throw config_error("lambda0 must lie in (0, 1], got " + g17(lambda0));
    if (lambda_increment < 0.0)
        throw config_error("lambda_increment must be >= 0, got " + g17(lambda_increment));
    if (eps.empty()) throw data_error("cannot build a curriculum over zero samples");

    CurriculumState state;
    state.eps = eps;
    state.lambda0 = lambda0;
    state.lambda_increment = lambda_increment;
    state.order.resize(eps.size());
    std::iota(state.order.begin(), state.order.end(), SampleId{0});
    std::stable_sort(state.order.begin(), state.order.end(),
                     [&](SampleId a, SampleId b) {
                         return eps[static_cast<std::size_t>(a)] <
                                eps[static_cast<std::size_t>(b)];
                     });
    state.sorted_eps.reserve(eps.size());
    for (SampleId id : state.order)
        state.sorted_eps.push_back(eps[static_cast<std::size_t>(id)]);
    return state;
}

inline CurriculumState make_curriculum(const RawScores& raw, double lambda0,
                                       double lambda_increment) {
    return make_curriculum(cdf_normalize(raw), lambda0, lambda_increment);
}

// lambda_t = min(1, lambda0 + t * increment), computed fresh each step so
// the logged schedule matches this closed form bit for bit.
inline double competence(double lambda0, double lambda_increment, std::int64_t t) {
    if (!(lambda0 > 0.0) || lambda0 > 1.0)
        throw config_error("lambda0 must lie in (0, 1], got " + g17(lambda0));
    return std::min(1.0, lambda0 + static_cast<double>(t) * lambda_increment);
}

inline double competence(const CurriculumState& state, std::int64_t t) {
    return competence(state.lambda0, state.lambda_increment, t);
}

// Number of samples with eps <= lambda.
inline std::int64_t eligible_count(const CurriculumState& state, double lambda) {
    return std::upper_bound(state.sorted_eps.begin(), state.sorted_eps.end(), lambda) -
           state.sorted_eps.begin();
}

struct Eligibility {
    std::int64_t count = 0;
    bool guard_applied = false;  // lambda below the smallest eps
};

// When lambda0 sits below the smallest eps the plain rule would leave the
// sampler with nothing to draw; fall back to the easiest tie class so the
// loop in the training regime cannot deadlock.
inline Eligibility effective_eligibility(const CurriculumState& state, double lambda) {
    std::int64_t count = eligible_count(state, lambda);
    if (count > 0) return {count, false};
    return {eligible_count(state, state.min_eps()), true};
}

// ---------------------------------------------------------------------------
// Curriculum file: `#method=<name> lambda0=<v> increment=<v>` followed by
// one `id<TAB>raw<TAB>eps` line per sample, sorted by id.

struct CurriculumFile {
    std::string method;
    double lambda0 = 1.0;
    double increment = 0.0;
    std::vector<double> raw;
    std::vector<double> eps;
};

inline void write_curriculum(std::ostream& out, const std::string& method,
                             double lambda0, double increment,
                             const std::vector<double>& raw,
                             const std::vector<double>& eps) {
    out << "#method=" << method << " lambda0=" << g17(lambda0)
        << " increment=" << g17(increment) << '\n';
    for (std::size_t id = 0; id < raw.size(); ++id)
        out << id << '\t' << g17(raw[id]) << '\t' << g17(eps[id]) << '\n';
}

inline void write_curriculum_file(const std::string& path, const std::string& method,
                                  double lambda0, double increment,
                                  const std::vector<double>& raw,
                                  const std::vector<double>& eps) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write curriculum file: " + path);
    write_curriculum(out, method, lambda0, increment, raw, eps);
    if (!out) throw data_error("write failure on curriculum file: " + path);
}

inline CurriculumFile read_curriculum_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open curriculum file: " + path);
    CurriculumFile file;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        if (line[0] == '#') {
            for (auto field : split(std::string_view(line).substr(1), ' ')) {
                auto eq = field.find('=');
                if (eq == std::string_view::npos) continue;
                auto key = field.substr(0, eq);
                auto value = field.substr(eq + 1);
                if (key == "method") file.method = std::string(value);
                else if (key == "lambda0") file.lambda0 = parse_double(value, where);
                else if (key == "increment") file.increment = parse_double(value, where);
            }
            continue;
        }
        auto cols = split(line, '\t');
        if (cols.size() != 3)
            throw data_error(where + ": expected 3 tab-separated columns, got " +
                             std::to_string(cols.size()));
        auto id = parse_int(cols[0], where);
        if (id != static_cast<long long>(file.raw.size()))
            throw data_error(where + ": ids must be dense and sorted, expected " +
                             std::to_string(file.raw.size()));
        file.raw.push_back(parse_double(cols[1], where));
        file.eps.push_back(parse_double(cols[2], where));
    }
    if (file.raw.empty()) throw data_error(path + ": no curriculum rows");
    return file;
}

} // namespace cbclm
