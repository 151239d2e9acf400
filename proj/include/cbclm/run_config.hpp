// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>

#include "cbclm/annotations.hpp"
#include "cbclm/corpus.hpp"
#include "cbclm/errors.hpp"
#include "cbclm/textio.hpp"
#include "cbclm/trainer.hpp"

namespace cbclm {

// Flat key=value description of one training run. Every knob has a default
// except the method, the schedule, and the file locations.
struct RunConfig {
    DifficultyMethod method = DifficultyMethod::none;
    double lambda0 = 0.0;
    double lambda_increment = 0.0;
    int batch_size = 128;
    int window = 20;
    std::int64_t total_steps = 0;  // 0 resolves to ceil(10 * samples / batch_size)
    std::int64_t eval_every = 100;
    std::uint64_t seed = 42;
    int context_size = 3;
    int embed_dim = 16;
    int hidden_dim = 32;
    double learning_rate = 0.1;
    SampleUnit unit = SampleUnit::sentence;
    std::string train_path;
    std::string valid_path;
    std::string annotations_path;  // optional; required by pos and dep
    std::string out_dir;
};

namespace detail {

inline double config_double(std::string_view text, const std::string& context) {
    try {
        return parse_double(text, context);
    } catch (const data_error& e) {
        throw config_error(e.what());
    }
}

inline long long config_int(std::string_view text, const std::string& context) {
    try {
        return parse_int(text, context);
    } catch (const data_error& e) {
        throw config_error(e.what());
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

} // namespace detail

// Parses a run config file. Lines are `key=value`; blank lines and lines
// starting with # are skipped. Unknown or duplicate keys are rejected.
inline RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file: " + path);

    RunConfig cfg;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    const auto where = [&path, &lineno] { return path + ":" + std::to_string(lineno); };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string_view stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;

        const auto eq = stripped.find('=');
        if (eq == std::string_view::npos)
            throw config_error(where() + ": expected key=value, got '" + std::string(stripped) +
                               "'");
        const std::string key(detail::trim(stripped.substr(0, eq)));
        const std::string value(detail::trim(stripped.substr(eq + 1)));
        if (key.empty()) throw config_error(where() + ": empty key");
        if (value.empty()) throw config_error(where() + ": empty value for key '" + key + "'");
        if (!seen.insert(key).second)
            throw config_error(where() + ": duplicate key '" + key + "'");

        if (key == "method") {
            try {
                cfg.method = parse_method(value);
            } catch (const config_error& e) {
                throw config_error(where() + ": " + e.what());
            }
        } else if (key == "lambda0") {
            cfg.lambda0 = detail::config_double(value, where());
        } else if (key == "lambda_increment") {
            cfg.lambda_increment = detail::config_double(value, where());
        } else if (key == "batch_size") {
            cfg.batch_size = static_cast<int>(detail::config_int(value, where()));
        } else if (key == "window") {
            cfg.window = static_cast<int>(detail::config_int(value, where()));
        } else if (key == "total_steps") {
            cfg.total_steps = detail::config_int(value, where());
            if (cfg.total_steps < 0)
                throw config_error(where() + ": total_steps must be >= 0");
        } else if (key == "eval_every") {
            cfg.eval_every = detail::config_int(value, where());
        } else if (key == "seed") {
            const long long s = detail::config_int(value, where());
            if (s < 0) throw config_error(where() + ": seed must be >= 0");
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (key == "context_size") {
            cfg.context_size = static_cast<int>(detail::config_int(value, where()));
        } else if (key == "embed_dim") {
            cfg.embed_dim = static_cast<int>(detail::config_int(value, where()));
        } else if (key == "hidden_dim") {
            cfg.hidden_dim = static_cast<int>(detail::config_int(value, where()));
        } else if (key == "learning_rate") {
            cfg.learning_rate = detail::config_double(value, where());
        } else if (key == "unit") {
            try {
                cfg.unit = parse_unit(value);
            } catch (const config_error& e) {
                throw config_error(where() + ": " + e.what());
            }
        } else if (key == "train") {
            cfg.train_path = value;
        } else if (key == "valid") {
            cfg.valid_path = value;
        } else if (key == "annotations") {
            cfg.annotations_path = value;
        } else if (key == "out") {
            cfg.out_dir = value;
        } else {
            throw config_error(where() + ": unknown key '" + key + "'");
        }
    }

    const auto require = [&](const char* key, bool present) {
        if (!present) throw config_error(path + ": missing required key '" + std::string(key) +
                                         "'");
    };
    require("method", seen.count("method") > 0);
    require("lambda0", seen.count("lambda0") > 0);
    require("lambda_increment", seen.count("lambda_increment") > 0);
    require("train", !cfg.train_path.empty());
    require("valid", !cfg.valid_path.empty());
    require("out", !cfg.out_dir.empty());
    return cfg;
}

inline std::int64_t resolve_total_steps(const RunConfig& cfg, std::size_t sample_count) {
    if (cfg.total_steps > 0) return cfg.total_steps;
    const auto n = static_cast<std::int64_t>(sample_count);
    return (10 * n + cfg.batch_size - 1) / cfg.batch_size;
}

inline TrainConfig to_train_config(const RunConfig& cfg, std::int64_t total_steps) {
    TrainConfig tc;
    tc.method = cfg.method;
    tc.lambda0 = cfg.lambda0;
    tc.lambda_increment = cfg.lambda_increment;
    tc.batch_size = cfg.batch_size;
    tc.window = cfg.window;
    tc.total_steps = total_steps;
    tc.eval_every = cfg.eval_every;
    tc.seed = cfg.seed;
    tc.model.context_size = cfg.context_size;
    tc.model.embed_dim = cfg.embed_dim;
    tc.model.hidden_dim = cfg.hidden_dim;
    tc.model.vocab_size = 0;  // derived from the training corpus
    tc.model.learning_rate = cfg.learning_rate;
    return tc;
}

// Output names inside the run's out directory.
inline constexpr const char* curriculum_filename = "curriculum.tsv";
inline constexpr const char* metrics_filename = "metrics.csv";
inline constexpr const char* checkpoint_filename = "checkpoint.bin";

// Loads the corpora, trains under the configured schedule, and writes
// curriculum.tsv, metrics.csv, and checkpoint.bin under the out directory.
inline TrainResult run_train(const RunConfig& cfg, const TrainHooks& extra_hooks = {}) {
    namespace fs = std::filesystem;
    // Validate every knob that does not depend on the corpus before touching
    // any input file; the placeholder step count is re-derived below.
    to_train_config(cfg, std::max<std::int64_t>(cfg.total_steps, 1)).validate();
    if (!fs::exists(cfg.train_path))
        throw config_error("train file does not exist: " + cfg.train_path);
    if (!fs::exists(cfg.valid_path))
        throw config_error("valid file does not exist: " + cfg.valid_path);

    const Corpus train_corpus = load_corpus(cfg.train_path, cfg.unit);
    const Corpus valid_corpus = load_corpus(cfg.valid_path, cfg.unit);

    AnnotationMap annotations;
    const AnnotationMap* annotations_ptr = nullptr;
    if (needs_annotations(cfg.method)) {
        if (cfg.annotations_path.empty())
            throw config_error("method " + std::string(to_string(cfg.method)) +
                               " requires the annotations key");
        if (!fs::exists(cfg.annotations_path))
            throw config_error("annotations file does not exist: " + cfg.annotations_path);
        annotations = load_annotations(cfg.annotations_path, train_corpus);
        annotations_ptr = &annotations;
    }

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw config_error("cannot create out directory " + cfg.out_dir + ": " +
                               ec.message());

    TrainConfig tc = to_train_config(cfg, resolve_total_steps(cfg, train_corpus.samples.size()));
    TrainHooks hooks = extra_hooks;
    if (hooks.checkpoint_path.empty())
        hooks.checkpoint_path = (fs::path(cfg.out_dir) / checkpoint_filename).string();

    TrainResult result = train(train_corpus, valid_corpus, annotations_ptr, tc, hooks);

    write_curriculum_file((fs::path(cfg.out_dir) / curriculum_filename).string(),
                          to_string(cfg.method), cfg.lambda0, cfg.lambda_increment,
                          result.raw.values, result.eps);
    write_metrics_csv((fs::path(cfg.out_dir) / metrics_filename).string(), cfg.method,
                      cfg.lambda0, cfg.lambda_increment, result.metrics);
    return result;
}

} // namespace cbclm
