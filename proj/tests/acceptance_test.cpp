// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate. Each criterion prints exactly one line:
//
//   C3  PASS  n-gram oracle equivalence: ...
//   C9  SKIP  corpus stats: wikitext-2 not present
//
// and the process exits nonzero if any criterion fails. Oracles here are
// deliberately independent re-implementations (linear-scan counts, quadratic
// gram counting, central finite differences), not calls back into the code
// under test.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cbclm/cbclm.hpp"

#ifndef CBCLM_DATA_DIR
#error "CBCLM_DATA_DIR must point at the bundled fixtures"
#endif
#ifndef CBCLM_BIN
#error "CBCLM_BIN must point at the cli binary"
#endif

namespace {

namespace fs = std::filesystem;
using namespace cbclm;

struct Skip {
    std::string why;
};

struct Harness {
    int failures = 0;

    void run(const char* id, const char* name, const std::function<std::string()>& fn) {
        try {
            const std::string detail = fn();
            std::printf("%-3s PASS  %s: %s\n", id, name, detail.c_str());
        } catch (const Skip& s) {
            std::printf("%-3s SKIP  %s: %s\n", id, name, s.why.c_str());
        } catch (const std::exception& e) {
            ++failures;
            std::printf("%-3s FAIL  %s: %s\n", id, name, e.what());
        }
        std::fflush(stdout);
    }
};

std::string data_path(const std::string& name) {
    return (fs::path(CBCLM_DATA_DIR) / name).string();
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

std::string temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "cbclm_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Brute-force CDF: eps_i = |{j : raw_j <= raw_i}| / N.
std::vector<double> brute_force_cdf(const std::vector<double>& raw) {
    const double n = static_cast<double>(raw.size());
    std::vector<double> eps(raw.size(), 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::int64_t count = 0;
        for (double v : raw)
            if (v <= raw[i]) ++count;
        eps[i] = static_cast<double>(count) / n;
    }
    return eps;
}

const Corpus& fixture_1k() {
    static const Corpus c = load_corpus(data_path("fixture_1k.txt"), SampleUnit::line);
    return c;
}

const Corpus& fixture_valid() {
    static const Corpus c = load_corpus(data_path("fixture_valid.txt"), SampleUnit::line);
    return c;
}

// --------------------------------------------------------------------------
// C1: zero draws above the competence bound across all eight methods.

std::string check_eligibility_safety() {
    const Corpus& corpus = fixture_1k();
    const AnnotationMap annotations =
        load_annotations(data_path("fixture_1k.annotations.jsonl"), corpus);
    const std::int64_t steps = 10000;

    std::int64_t violations = 0;
    std::int64_t draws = 0;
    for (const char* name :
         {"none", "random", "length", "unigram", "bigram", "trigram", "pos", "dep"}) {
        const DifficultyMethod method = parse_method(name);

        TrainConfig cfg;
        cfg.method = method;
        cfg.batch_size = 4;
        cfg.window = 8;
        cfg.total_steps = steps;
        cfg.eval_every = 2500;
        cfg.seed = 404;
        cfg.model.context_size = 2;
        cfg.model.embed_dim = 4;
        cfg.model.hidden_dim = 8;
        cfg.model.learning_rate = 0.1;

        // Independent difficulty reference: the library scores raw values, but
        // the eps used for the check come from the brute-force CDF.
        RawScores raw;
        score_training_corpus(corpus, method, &annotations, cfg.seed, raw);
        const std::vector<double> eps = brute_force_cdf(raw.values);
        const double min_eps = *std::min_element(eps.begin(), eps.end());

        // Start at (or above) the easiest tie class so the guard never has to
        // relax the bound, then reach full competence by step 9,900.
        cfg.lambda0 = std::max(0.01, min_eps);
        cfg.lambda_increment = (1.0 - cfg.lambda0) / 9900.0;

        TrainHooks hooks;
        hooks.on_batch = [&](std::int64_t t, double lambda, const Batch& batch) {
            const double expected = std::min(1.0, cfg.lambda0 +
                                                      static_cast<double>(t) *
                                                          cfg.lambda_increment);
            if (lambda != expected) ++violations;
            for (const SampleId id : batch.sample_ids) {
                ++draws;
                if (eps[static_cast<std::size_t>(id)] > lambda) ++violations;
            }
        };

        const TrainResult result = train(corpus, fixture_valid(), &annotations, cfg, hooks);
        require(result.metrics.size() == static_cast<std::size_t>(steps),
                std::string(name) + ": expected 10000 metric rows");
        require(result.guard_steps == 0, std::string(name) + ": guard engaged unexpectedly");
    }
    require(violations == 0, std::to_string(violations) + " draws above the bound");
    return "0 violations in " + std::to_string(draws) + " draws (8 methods x " +
           std::to_string(steps) + " steps)";
}

// --------------------------------------------------------------------------
// C2: cdf_normalize equals the brute-force oracle on random vectors.

std::string check_cdf_oracle() {
    std::mt19937_64 rng(20260816);
    std::int64_t values_checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 200;
        const std::size_t pool = std::max<std::size_t>(1, n / 3);  // force duplicates
        RawScores raw;
        raw.values.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            raw.values.push_back(static_cast<double>(rng() % pool));

        const std::vector<double> got = cdf_normalize(raw);
        const std::vector<double> want = brute_force_cdf(raw.values);
        require(got.size() == want.size(), "size mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            require(got[i] == want[i],
                    "trial " + std::to_string(trial) + " index " + std::to_string(i) +
                        ": " + g17(got[i]) + " != " + g17(want[i]));
            ++values_checked;
        }
    }
    return "1000 vectors, " + std::to_string(values_checked) + " values equal exactly";
}

// --------------------------------------------------------------------------
// C3: n-gram counting equals a quadratic brute-force counter; parallel equals
// single-threaded bit for bit.

std::string check_ngram_oracle() {
    const Corpus corpus = load_corpus(data_path("fixture_100.txt"), SampleUnit::line);
    require(corpus.size() == 100, "fixture_100 must hold 100 samples");

    for (int order = 1; order <= 3; ++order) {
        // quadratic oracle: join every window by hand
        std::map<std::string, std::uint64_t> counts;
        std::uint64_t total = 0;
        for (const Sample& s : corpus.samples) {
            if (s.tokens.size() < static_cast<std::size_t>(order)) continue;
            for (std::size_t i = 0; i + order <= s.tokens.size(); ++i) {
                std::string key;
                for (int k = 0; k < order; ++k) {
                    if (k) key += ' ';
                    key += s.tokens[i + k];
                }
                ++counts[key];
                ++total;
            }
        }

        const NGramTable table = count_ngrams(corpus, order);
        require(table.total == total, "order " + std::to_string(order) + ": total mismatch");
        require(table.counts.size() == counts.size(),
                "order " + std::to_string(order) + ": unique gram count mismatch");
        for (const auto& [gram, count] : counts)
            require(ngram_prob(table, gram) ==
                        static_cast<double>(count) / static_cast<double>(total),
                    "order " + std::to_string(order) + ": wrong count for '" + gram + "'");

        for (unsigned shards : {1u, 2u, 5u, 8u}) {
            const NGramTable parallel = count_ngrams_parallel(corpus, order, shards);
            require(parallel == table,
                    "order " + std::to_string(order) + ", " + std::to_string(shards) +
                        " shards: parallel result differs");
            std::ostringstream a, b;
            dump_table(table, a);
            dump_table(parallel, b);
            require(a.str() == b.str(), "parallel dump differs");
        }
    }
    return "orders 1-3 match the quadratic oracle; 1/2/5/8-shard counts identical";
}

// --------------------------------------------------------------------------
// C4: eps is invariant under monotone transforms of the raw scores.

std::string check_monotone_invariance() {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 119;
        RawScores base;
        for (std::size_t i = 0; i < n; ++i)
            base.values.push_back(static_cast<double>(rng() % 5001) / 1000.0);

        RawScores expd = base, affine = base;
        for (double& v : expd.values) v = std::exp(v);
        for (double& v : affine.values) v = 3.0 * v + 7.0;

        const std::vector<double> eps = cdf_normalize(base);
        require(cdf_normalize(expd) == eps,
                "trial " + std::to_string(trial) + ": exp changed eps");
        require(cdf_normalize(affine) == eps,
                "trial " + std::to_string(trial) + ": 3x+7 changed eps");
    }
    return "exp and 3x+7 leave eps unchanged on 100 random corpora";
}

// --------------------------------------------------------------------------
// C5: analytic gradients against central finite differences, under 10 s.

std::string check_gradients() {
    const auto started = std::chrono::steady_clock::now();

    ModelConfig cfg;
    cfg.context_size = 2;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 5;
    cfg.vocab_size = 10;
    cfg.learning_rate = 0.1;

    std::mt19937_64 rng(99);
    ModelParams params = init_params(cfg, rng);
    std::vector<std::vector<std::int32_t>> rows(3);
    for (auto& row : rows)
        for (int i = 0; i < 7; ++i)
            row.push_back(static_cast<std::int32_t>(rng() % 10));
    const Batch batch = pad_and_mask(rows, 7, 0);

    const Gradients grads = backward(cfg, params, batch);
    const double h = 1e-4;
    double max_rel = 0.0;
    int coords = 0;
    const auto probe = [&](std::vector<double>& theta, const std::vector<double>& g) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double saved = theta[i];
            theta[i] = saved + h;
            const double up = batch_loss(cfg, params, batch);
            theta[i] = saved - h;
            const double down = batch_loss(cfg, params, batch);
            theta[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double rel = std::fabs(numeric - g[i]) /
                               (std::fabs(numeric) + std::fabs(g[i]) + 1e-8);
            max_rel = std::max(max_rel, rel);
            ++coords;
        }
    };
    probe(params.embedding.data, grads.embedding.data);
    probe(params.w1.data, grads.w1.data);
    probe(params.b1, grads.b1);
    probe(params.w2.data, grads.w2.data);
    probe(params.b2, grads.b2);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    require(coords >= 100, "only " + std::to_string(coords) + " coordinates probed");
    require(max_rel < 1e-4, "max relative error " + g17(max_rel));
    require(seconds < 10.0, "took " + g17(seconds) + " s");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d coordinates, max relative error %.2e, %.2f s",
                  coords, max_rel, seconds);
    return buf;
}

// --------------------------------------------------------------------------
// C6: training halves the uniform-init perplexity on the fixture, under 60 s.

std::string check_training_descent() {
    const auto started = std::chrono::steady_clock::now();
    const Corpus& corpus = fixture_1k();

    TrainConfig cfg;
    cfg.method = DifficultyMethod::none;
    cfg.lambda0 = 1.0;
    cfg.lambda_increment = 0.0;
    cfg.batch_size = 32;
    cfg.window = 20;
    cfg.total_steps = 2000;
    cfg.eval_every = 500;
    cfg.seed = 42;
    cfg.model.context_size = 3;
    cfg.model.embed_dim = 16;
    cfg.model.hidden_dim = 32;
    cfg.model.learning_rate = 0.1;

    const Vocabulary vocab = build_vocabulary(corpus);
    const EncodedCorpus encoded = encode_corpus(corpus, vocab);
    ModelConfig init_cfg = cfg.model;
    init_cfg.vocab_size = static_cast<int>(vocab.size());
    std::mt19937_64 rng(cfg.seed);
    const ModelParams at_init = init_params(init_cfg, rng);
    const double ppl_init = perplexity(init_cfg, at_init, encoded.token_ids);

    const TrainResult result = train(corpus, fixture_valid(), nullptr, cfg);
    const double ppl_final = perplexity(result.model, result.params, encoded.token_ids);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    require(ppl_final <= 0.5 * ppl_init,
            "final " + g17(ppl_final) + " vs uniform-init " + g17(ppl_init) +
                " (needs <= half)");
    require(seconds < 60.0, "took " + g17(seconds) + " s");
    char buf[128];
    std::snprintf(buf, sizeof buf, "perplexity %.2f -> %.2f on the train split, %.1f s",
                  ppl_init, ppl_final, seconds);
    return buf;
}

// --------------------------------------------------------------------------
// C7: logged lambda equals min(1, lambda0 + t*inc) exactly; the eligible
// column is reproducible from the curriculum file by binary search.

std::string check_schedule_exactness() {
    const std::string dir = temp_dir("schedule");
    const Corpus corpus = load_corpus(data_path("fixture_100.txt"), SampleUnit::line);

    TrainConfig cfg;
    cfg.method = DifficultyMethod::length;
    cfg.lambda0 = 0.001;  // below the easiest tie class: exercises the guard
    cfg.lambda_increment = 0.002;
    cfg.batch_size = 8;
    cfg.window = 8;
    cfg.total_steps = 600;
    cfg.eval_every = 100;
    cfg.seed = 7;
    cfg.model.context_size = 2;
    cfg.model.embed_dim = 4;
    cfg.model.hidden_dim = 6;
    cfg.model.learning_rate = 0.1;

    const TrainResult result = train(corpus, fixture_valid(), nullptr, cfg);
    write_curriculum_file(dir + "/curriculum.tsv", to_string(cfg.method), cfg.lambda0,
                          cfg.lambda_increment, result.raw.values, result.eps);
    write_metrics_csv(dir + "/metrics.csv", cfg.method, cfg.lambda0, cfg.lambda_increment,
                      result.metrics);

    const CurriculumFile curriculum = read_curriculum_file(dir + "/curriculum.tsv");
    const MetricsFile metrics = read_metrics_csv(dir + "/metrics.csv");
    require(metrics.lambda0.has_value() && metrics.increment.has_value(),
            "metrics metadata missing");

    std::vector<double> sorted_eps = curriculum.eps;
    std::sort(sorted_eps.begin(), sorted_eps.end());
    const double file_lambda0 = *metrics.lambda0;
    const double file_inc = *metrics.increment;
    require(file_lambda0 == cfg.lambda0 && file_inc == cfg.lambda_increment,
            "schedule did not round-trip through the file");

    std::int64_t guard_rows = 0;
    for (const MetricsRecord& rec : metrics.records) {
        const double lambda =
            std::min(1.0, file_lambda0 + static_cast<double>(rec.step) * file_inc);
        require(rec.lambda == lambda,
                "step " + std::to_string(rec.step) + ": lambda " + g17(rec.lambda) +
                    " != " + g17(lambda));

        auto eligible = std::upper_bound(sorted_eps.begin(), sorted_eps.end(), lambda) -
                        sorted_eps.begin();
        if (eligible == 0) {  // guard: fall back to the easiest tie class
            eligible = std::upper_bound(sorted_eps.begin(), sorted_eps.end(),
                                        sorted_eps.front()) -
                       sorted_eps.begin();
            ++guard_rows;
        }
        require(rec.eligible == eligible,
                "step " + std::to_string(rec.step) + ": eligible " +
                    std::to_string(rec.eligible) + " != " + std::to_string(eligible));
    }
    require(guard_rows > 0, "schedule never exercised the guard branch");
    require(metrics.records.back().lambda == 1.0, "schedule never reached full competence");
    return std::to_string(metrics.records.size()) + " rows exact (" +
           std::to_string(guard_rows) + " under the guard)";
}

// --------------------------------------------------------------------------
// C8: padding accounting on the fixture; optionally on wikitext-103.

std::string wikitext_path(const char* env_var, const char* subdir) {
    if (const char* env = std::getenv(env_var); env != nullptr && *env != '\0') {
        if (fs::exists(env)) return env;
    }
    for (const char* name : {"wiki.train.tokens", "train.txt", "wiki.all.tokens"}) {
        const fs::path p = fs::path(CBCLM_DATA_DIR) / subdir / name;
        if (fs::exists(p)) return p.string();
    }
    return {};
}

std::string check_padding_accounting() {
    const Corpus& corpus = fixture_1k();
    const std::size_t window = 20;

    std::uint64_t direct = 0;
    for (const Sample& s : corpus.samples)
        direct += window - std::min(s.tokens.size(), window);

    const PaddingStats stats = padding_stats(corpus, window);
    require(stats.pad_tokens == direct, "pad_tokens differ from the direct sum");
    require(stats.pad_tokens == 10442u,
            "fixture pad_tokens " + std::to_string(stats.pad_tokens) + " != 10442");
    const double fraction =
        static_cast<double>(direct) / (static_cast<double>(corpus.size()) * window);
    require(stats.pad_fraction == fraction, "pad_fraction differs from the direct ratio");

    const std::string wt103 = wikitext_path("CBCLM_WIKITEXT103", "wikitext-103");
    if (wt103.empty())
        return "fixture: 10442 pad tokens, direct sum matches "
               "(wikitext-103 part skipped: data not present)";

    const std::uint64_t expected = 12204311;
    const double tol = 0.005 * static_cast<double>(expected);
    std::string detail;
    for (SampleUnit unit : {SampleUnit::line, SampleUnit::sentence}) {
        const Corpus big = load_corpus(wt103, unit);
        const PaddingStats s = padding_stats(big, window);
        const double diff = std::fabs(static_cast<double>(s.pad_tokens) -
                                      static_cast<double>(expected));
        detail += std::string(to_string(unit)) + "=" + std::to_string(s.pad_tokens) + " ";
        if (diff <= tol)
            return "fixture exact; wikitext-103 " + std::string(to_string(unit)) +
                   " unit: " + std::to_string(s.pad_tokens) + " within 0.5% of 12204311";
    }
    throw std::runtime_error("wikitext-103 pad tokens outside 0.5% of 12204311: " + detail);
}

// --------------------------------------------------------------------------
// C9: wikitext-2 stats match the published table exactly (gated on data).

std::string check_corpus_stats() {
    const std::string wt2 = wikitext_path("CBCLM_WIKITEXT2", "wikitext-2");
    if (wt2.empty()) throw Skip{"wikitext-2 not present (set CBCLM_WIKITEXT2 or fetch data)"};

    const Corpus corpus = load_corpus(wt2, SampleUnit::line);
    const CorpusStats stats = corpus_stats(corpus);
    require(stats.token_count == 2507007,
            "token_count " + std::to_string(stats.token_count) + " != 2507007");
    require(stats.vocab_size == 33278,
            "vocab_size " + std::to_string(stats.vocab_size) + " != 33278");
    return "2507007 tokens, 33278 vocabulary, " + std::to_string(stats.sample_count) +
           " samples";
}

// --------------------------------------------------------------------------
// C10: repeated `train` runs produce byte-identical metrics files.

std::string check_determinism() {
    const std::string dir = temp_dir("determinism");
    const auto config_for = [&](const std::string& out) {
        std::ostringstream cfg;
        cfg << "method = bigram\n"
            << "lambda0 = 0.25\n"
            << "lambda_increment = 0.01\n"
            << "batch_size = 4\n"
            << "window = 8\n"
            << "total_steps = 40\n"
            << "eval_every = 10\n"
            << "seed = 5\n"
            << "context_size = 2\n"
            << "embed_dim = 4\n"
            << "hidden_dim = 6\n"
            << "learning_rate = 0.1\n"
            << "unit = line\n"
            << "train = " << data_path("fixture_100.txt") << "\n"
            << "valid = " << data_path("fixture_valid.txt") << "\n"
            << "out = " << out << "\n";
        return cfg.str();
    };
    for (const char* run : {"a", "b"}) {
        const std::string cfg_path = dir + "/" + run + ".cfg";
        std::ofstream(cfg_path) << config_for(dir + "/" + run);
        const std::string cmd = std::string(CBCLM_BIN) + " train " + cfg_path + " > " + dir +
                                "/" + run + ".log 2>&1";
        const int status = std::system(cmd.c_str());
        require(WIFEXITED(status) && WEXITSTATUS(status) == 0,
                std::string("train run ") + run + " failed: " + read_file(dir + "/" + run +
                                                                          ".log"));
    }
    require(read_file(dir + "/a/metrics.csv") == read_file(dir + "/b/metrics.csv"),
            "metrics.csv differs between identical runs");
    require(read_file(dir + "/a/curriculum.tsv") == read_file(dir + "/b/curriculum.tsv"),
            "curriculum.tsv differs between identical runs");
    require(read_file(dir + "/a/checkpoint.bin") == read_file(dir + "/b/checkpoint.bin"),
            "checkpoint.bin differs between identical runs");
    return "metrics, curriculum, and checkpoint byte-identical across reruns";
}

} // namespace

int main() {
    Harness h;
    h.run("C1", "eligibility safety", check_eligibility_safety);
    h.run("C2", "CDF oracle equivalence", check_cdf_oracle);
    h.run("C3", "n-gram oracle equivalence", check_ngram_oracle);
    h.run("C4", "monotone invariance of eps", check_monotone_invariance);
    h.run("C5", "gradient check", check_gradients);
    h.run("C6", "training descent", check_training_descent);
    h.run("C7", "schedule exactness", check_schedule_exactness);
    h.run("C8", "padding accounting", check_padding_accounting);
    h.run("C9", "corpus stats", check_corpus_stats);
    h.run("C10", "determinism", check_determinism);

    if (h.failures > 0) {
        std::printf("%d criterion(s) failed\n", h.failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
