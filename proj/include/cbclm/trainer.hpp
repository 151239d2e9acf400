// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cbclm/annotations.hpp"
#include "cbclm/corpus.hpp"
#include "cbclm/curriculum.hpp"
#include "cbclm/difficulty.hpp"
#include "cbclm/errors.hpp"
#include "cbclm/ngram.hpp"
#include "cbclm/sampler.hpp"
#include "cbclm/textio.hpp"
#include "cbclm/toylm.hpp"

namespace cbclm {

struct TrainConfig {
    DifficultyMethod method = DifficultyMethod::none;
    double lambda0 = 1e-3;
    double lambda_increment = 1e-5;
    int batch_size = 128;
    int window = 20;
    std::int64_t total_steps = 1;
    std::int64_t eval_every = 100;
    std::uint64_t seed = 42;
    ModelConfig model;

    void validate() const {
        if (!(lambda0 > 0.0 && lambda0 <= 1.0))
            throw config_error("lambda0 must lie in (0, 1], got " + g17(lambda0));
        if (lambda_increment < 0.0)
            throw config_error("lambda_increment must be >= 0, got " + g17(lambda_increment));
        if (batch_size < 1) throw config_error("batch_size must be >= 1");
        if (total_steps < 1) throw config_error("total_steps must be >= 1");
        if (eval_every < 1) throw config_error("eval_every must be >= 1");
        if (model.context_size < 1) throw config_error("context_size must be >= 1");
        if (window < model.context_size + 1)
            throw config_error("window must be >= context_size + 1 so every batch row can "
                               "contribute a prediction");
        if (model.embed_dim < 1) throw config_error("embed_dim must be >= 1");
        if (model.hidden_dim < 1) throw config_error("hidden_dim must be >= 1");
        if (model.vocab_size < 0) throw config_error("vocab_size must be >= 0");
        if (!(model.learning_rate > 0)) throw config_error("learning_rate must be > 0");
    }
};

// One row of the training log. valid_ppl is present only on evaluation steps.
struct MetricsRecord {
    std::int64_t step = 0;
    double lambda = 0.0;
    std::int64_t eligible = 0;
    double train_loss = 0.0;
    std::optional<double> valid_ppl;
};

struct TrainHooks {
    // Called after every optimizer step with the competence value and the
    // batch that was just consumed.
    std::function<void(std::int64_t step, double lambda, const Batch& batch)> on_batch;
    // When non-empty, a checkpoint is written every eval_every * 10 steps and
    // once more after the final step.
    std::string checkpoint_path;
};

struct TrainResult {
    ModelConfig model;
    ModelParams params;
    Vocabulary vocab;
    RawScores raw;
    std::vector<double> eps;
    std::vector<MetricsRecord> metrics;
    std::int64_t guard_steps = 0;
};

inline std::vector<double> score_training_corpus(const Corpus& corpus, DifficultyMethod method,
                                                 const AnnotationMap* annotations,
                                                 std::uint64_t seed, RawScores& raw_out) {
    ScoreResources res;
    res.seed = seed;
    NGramTable table;
    if (needs_ngrams(method)) {
        table = count_ngrams_parallel(corpus, ngram_order(method));
        switch (ngram_order(method)) {
            case 1: res.unigrams = &table; break;
            case 2: res.bigrams = &table; break;
            default: res.trigrams = &table; break;
        }
    }
    if (needs_annotations(method)) {
        if (annotations == nullptr)
            throw config_error("method " + std::string(to_string(method)) +
                               " requires annotations");
        res.annotations = annotations;
    }
    raw_out = score_corpus(corpus, method, res);
    return cdf_normalize(raw_out);
}

inline double evaluate(const ModelConfig& cfg, const ModelParams& params,
                       const Corpus& valid, const Vocabulary& vocab) {
    return perplexity(cfg, params, encode_corpus(valid, vocab).token_ids);
}

// Competence-based training loop. A single generator seeded once drives
// parameter init and then batch sampling, so a fixed seed reproduces the
// whole run bit for bit.
inline TrainResult train(const Corpus& train_corpus, const Corpus& valid_corpus,
                         const AnnotationMap* annotations, const TrainConfig& config,
                         const TrainHooks& hooks = {}) {
    config.validate();
    if (train_corpus.samples.empty()) throw data_error("training corpus is empty");

    TrainResult result;
    result.vocab = build_vocabulary(train_corpus);
    result.model = config.model;
    if (result.model.vocab_size == 0) {
        result.model.vocab_size = static_cast<int>(result.vocab.size());
    } else if (result.model.vocab_size != static_cast<int>(result.vocab.size())) {
        throw config_error("model vocab_size " + std::to_string(result.model.vocab_size) +
                           " does not match corpus vocabulary " +
                           std::to_string(result.vocab.size()));
    }

    result.eps = score_training_corpus(train_corpus, config.method, annotations, config.seed,
                                       result.raw);
    CurriculumState state =
        make_curriculum(result.eps, config.lambda0, config.lambda_increment);

    const EncodedCorpus encoded_train = encode_corpus(train_corpus, result.vocab);
    const EncodedCorpus encoded_valid = encode_corpus(valid_corpus, result.vocab);

    std::mt19937_64 rng(config.seed);
    result.params = init_params(result.model, rng);

    const double eps_floor = state.min_eps();
    const std::int64_t checkpoint_every = config.eval_every * 10;
    result.metrics.reserve(static_cast<std::size_t>(config.total_steps));

    for (std::int64_t t = 0; t < config.total_steps; ++t) {
        state.step = t;
        const double lambda = competence(state, t);
        const Eligibility elig = effective_eligibility(state, lambda);
        if (elig.guard_applied) ++result.guard_steps;

        const Batch batch =
            sample_batch(state, encoded_train, config.batch_size, config.window, rng);
        const double bound = std::max(lambda, eps_floor);
        for (const SampleId id : batch.sample_ids) {
            if (state.eps[static_cast<std::size_t>(id)] > bound)
                throw std::logic_error("sampler drew sample above the competence bound");
        }

        BatchGradients bg = batch_gradients(result.model, result.params, batch);
        sgd_step(result.params, bg.grads, result.model.learning_rate);

        if (hooks.on_batch) hooks.on_batch(t, lambda, batch);

        MetricsRecord rec;
        rec.step = t;
        rec.lambda = lambda;
        rec.eligible = elig.count;
        rec.train_loss = bg.loss;
        if ((t + 1) % config.eval_every == 0)
            rec.valid_ppl = perplexity(result.model, result.params, encoded_valid.token_ids);
        result.metrics.push_back(rec);

        if (!hooks.checkpoint_path.empty() && (t + 1) % checkpoint_every == 0)
            save_checkpoint(hooks.checkpoint_path, result.model, result.params);
    }
    if (!hooks.checkpoint_path.empty())
        save_checkpoint(hooks.checkpoint_path, result.model, result.params);
    return result;
}

// ---------------------------------------------------------------------------
// Metrics log persistence. The file is a CSV with one leading # metadata
// line carrying the schedule, mirroring the curriculum file header.

inline void write_metrics_csv(std::ostream& out, DifficultyMethod method, double lambda0,
                              double increment, const std::vector<MetricsRecord>& records) {
    out << "#method=" << to_string(method) << " lambda0=" << g17(lambda0)
        << " increment=" << g17(increment) << "\n";
    out << "step,lambda,eligible,train_loss,valid_ppl\n";
    for (const MetricsRecord& r : records) {
        out << r.step << ',' << g17(r.lambda) << ',' << r.eligible << ',' << g17(r.train_loss)
            << ',';
        if (r.valid_ppl) out << g17(*r.valid_ppl);
        out << '\n';
    }
}

inline void write_metrics_csv(const std::string& path, DifficultyMethod method, double lambda0,
                              double increment, const std::vector<MetricsRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write metrics file: " + path);
    write_metrics_csv(out, method, lambda0, increment, records);
    if (!out) throw data_error("write failure on metrics file: " + path);
}

struct MetricsFile {
    std::optional<DifficultyMethod> method;
    std::optional<double> lambda0;
    std::optional<double> increment;
    std::vector<MetricsRecord> records;
};

inline MetricsFile read_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open metrics file: " + path);

    MetricsFile file;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    const auto where = [&path, &lineno] { return path + ":" + std::to_string(lineno); };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (header_seen)
                throw data_error(where() + ": metadata line after the column header");
            const std::string meta = line.substr(1);
            for (const auto part : split(meta, ' ')) {
                if (part.empty()) continue;
                const auto eq = part.find('=');
                if (eq == std::string_view::npos)
                    throw data_error(where() + ": malformed metadata field '" +
                                     std::string(part) + "'");
                const std::string_view key = part.substr(0, eq);
                const std::string value(part.substr(eq + 1));
                if (key == "method") file.method = parse_method(value);
                else if (key == "lambda0") file.lambda0 = parse_double(value, where());
                else if (key == "increment") file.increment = parse_double(value, where());
                else throw data_error(where() + ": unknown metadata key '" + std::string(key) +
                                      "'");
            }
            continue;
        }
        if (!header_seen) {
            if (line != "step,lambda,eligible,train_loss,valid_ppl")
                throw data_error(where() + ": expected metrics header, got '" + line + "'");
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != 5)
            throw data_error(where() + ": expected 5 comma-separated fields, got " +
                             std::to_string(fields.size()));
        MetricsRecord rec;
        rec.step = parse_int(fields[0], where());
        rec.lambda = parse_double(fields[1], where());
        rec.eligible = parse_int(fields[2], where());
        rec.train_loss = parse_double(fields[3], where());
        if (!fields[4].empty()) rec.valid_ppl = parse_double(fields[4], where());
        file.records.push_back(rec);
    }
    if (!header_seen) throw data_error(path + ": missing metrics header");
    return file;
}

} // namespace cbclm
