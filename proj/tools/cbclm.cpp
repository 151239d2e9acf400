// SPDX-License-Identifier: Apache-2.0
//
// Command line front end. Exit codes: 0 success, 1 usage or config errors,
// 2 data validation errors, 3 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbclm/cbclm.hpp"

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> method_names = {"none",    "random", "length", "unigram",
                                               "bigram",  "trigram", "pos",    "dep"};

void cmd_stats(const std::string& corpus_path, const std::string& unit_str) {
    const cbclm::Corpus corpus = cbclm::load_corpus(corpus_path, cbclm::parse_unit(unit_str));
    const cbclm::CorpusStats stats = cbclm::corpus_stats(corpus);
    std::cout << "vocab_size " << stats.vocab_size << '\n'
              << "token_count " << stats.token_count << '\n'
              << "sample_count " << stats.sample_count << '\n';
}

void cmd_score(const std::string& corpus_path, const std::string& unit_str,
               const std::string& method_str, std::uint64_t seed,
               const std::string& annotations_path, const std::string& out_dir) {
    const cbclm::DifficultyMethod method = cbclm::parse_method(method_str);
    const cbclm::Corpus corpus = cbclm::load_corpus(corpus_path, cbclm::parse_unit(unit_str));

    cbclm::AnnotationMap annotations;
    const cbclm::AnnotationMap* annotations_ptr = nullptr;
    if (cbclm::needs_annotations(method)) {
        if (annotations_path.empty())
            throw cbclm::config_error("method " + method_str + " requires --annotations");
        annotations = cbclm::load_annotations(annotations_path, corpus);
        annotations_ptr = &annotations;
    }

    cbclm::RawScores raw;
    const std::vector<double> eps =
        cbclm::score_training_corpus(corpus, method, annotations_ptr, seed, raw);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw cbclm::config_error("cannot create out directory " + out_dir + ": " +
                                  ec.message());
    const std::string path =
        (fs::path(out_dir) / ("curriculum_" + method_str + ".tsv")).string();
    // A standalone scoring pass has no schedule; record the degenerate one.
    cbclm::write_curriculum_file(path, method_str, 1.0, 0.0, raw.values, eps);
    std::cout << "wrote " << path << '\n';
}

void cmd_train(const std::string& config_path) {
    const cbclm::RunConfig cfg = cbclm::parse_run_config(config_path);
    const cbclm::TrainResult result = cbclm::run_train(cfg);
    std::cout << "wrote " << (fs::path(cfg.out_dir) / cbclm::curriculum_filename).string()
              << '\n'
              << "wrote " << (fs::path(cfg.out_dir) / cbclm::metrics_filename).string() << '\n'
              << "wrote " << (fs::path(cfg.out_dir) / cbclm::checkpoint_filename).string()
              << '\n';
    for (auto it = result.metrics.rbegin(); it != result.metrics.rend(); ++it) {
        if (it->valid_ppl) {
            std::printf("final_valid_ppl %.4f\n", *it->valid_ppl);
            break;
        }
    }
    if (result.guard_steps > 0)
        std::cerr << "warning: eligibility guard engaged on " << result.guard_steps
                  << " steps (lambda below the smallest difficulty)\n";
}

void cmd_eval(const std::string& checkpoint_path, const std::string& corpus_path,
              const std::string& unit_str, const std::string& vocab_from) {
    const cbclm::Checkpoint ck = cbclm::load_checkpoint(checkpoint_path);
    const cbclm::SampleUnit unit = cbclm::parse_unit(unit_str);
    const cbclm::Corpus corpus = cbclm::load_corpus(corpus_path, unit);
    const cbclm::Vocabulary vocab = cbclm::build_vocabulary(
        vocab_from.empty() ? corpus : cbclm::load_corpus(vocab_from, unit));
    if (static_cast<int>(vocab.size()) != ck.config.vocab_size)
        throw cbclm::data_error("checkpoint vocab_size " +
                                std::to_string(ck.config.vocab_size) +
                                " does not match corpus vocabulary " +
                                std::to_string(vocab.size()));
    const double ppl = cbclm::evaluate(ck.config, ck.params, corpus, vocab);
    std::printf("%.4f\n", ppl);
}

void cmd_grid(const std::vector<std::string>& config_paths, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw cbclm::config_error("cannot create out directory " + out_dir + ": " +
                                  ec.message());

    std::set<std::string> names;
    std::vector<cbclm::RunInput> inputs;
    for (const std::string& config_path : config_paths) {
        const std::string name = fs::path(config_path).stem().string();
        if (!names.insert(name).second)
            throw cbclm::config_error("duplicate run name '" + name +
                                      "' (config file stems must be unique)");

        cbclm::RunConfig cfg = cbclm::parse_run_config(config_path);
        cfg.out_dir = (fs::path(out_dir) / name).string();
        const cbclm::TrainResult result = cbclm::run_train(cfg);
        cbclm::write_curves((fs::path(out_dir) / "curves").string(), name, result.metrics);
        inputs.push_back({name, (fs::path(cfg.out_dir) / cbclm::metrics_filename).string()});
        std::cout << "finished " << name << '\n';
    }

    const std::vector<cbclm::RunSummary> summaries = cbclm::summarize(inputs);
    const std::string summary_path = (fs::path(out_dir) / "summary.csv").string();
    cbclm::write_summary_csv(summary_path, summaries);
    std::cout << "wrote " << summary_path << '\n' << cbclm::format_summary_table(summaries);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curriculum-scored corpora and a toy neural LM trained under a "
                 "competence schedule"};
    app.require_subcommand(1);

    std::string stats_corpus, stats_unit = "sentence";
    auto* stats = app.add_subcommand("stats", "Print corpus statistics");
    stats->add_option("corpus", stats_corpus, "Plain text corpus file")->required();
    stats->add_option("--unit", stats_unit, "Sample unit (line|sentence)")
        ->check(CLI::IsMember({"line", "sentence"}));

    std::string score_corpus, score_unit = "sentence", score_method, score_annotations,
                score_out;
    std::uint64_t score_seed = 42;
    auto* score = app.add_subcommand("score", "Score a corpus and write a curriculum file");
    score->alias("curriculum");
    score->add_option("corpus", score_corpus, "Plain text corpus file")->required();
    score->add_option("--method", score_method, "Difficulty method")
        ->required()
        ->check(CLI::IsMember(method_names));
    score->add_option("--unit", score_unit, "Sample unit (line|sentence)")
        ->check(CLI::IsMember({"line", "sentence"}));
    score->add_option("--seed", score_seed, "Seed for the random method");
    score->add_option("--annotations", score_annotations,
                      "JSONL annotations (required for pos and dep)");
    score->add_option("--out", score_out, "Output directory")->required();

    std::string train_config;
    auto* train = app.add_subcommand("train", "Train one run from a config file");
    train->add_option("config", train_config, "key=value run config file")->required();

    std::string eval_checkpoint, eval_corpus, eval_unit = "sentence", eval_vocab_from;
    auto* eval = app.add_subcommand("eval", "Report perplexity of a checkpoint on a corpus");
    eval->add_option("checkpoint", eval_checkpoint, "Checkpoint file")->required();
    eval->add_option("corpus", eval_corpus, "Plain text corpus file")->required();
    eval->add_option("--unit", eval_unit, "Sample unit (line|sentence)")
        ->check(CLI::IsMember({"line", "sentence"}));
    eval->add_option("--vocab-from", eval_vocab_from,
                     "Rebuild the token mapping from this corpus instead of the "
                     "evaluation corpus");

    std::vector<std::string> grid_configs;
    std::string grid_out;
    auto* grid = app.add_subcommand("grid", "Run several configs and summarize them");
    grid->add_option("configs", grid_configs, "key=value run config files")->required();
    grid->add_option("--out", grid_out, "Output directory")->required();

    stats->callback([&] { cmd_stats(stats_corpus, stats_unit); });
    score->callback([&] {
        cmd_score(score_corpus, score_unit, score_method, score_seed, score_annotations,
                  score_out);
    });
    train->callback([&] { cmd_train(train_config); });
    eval->callback([&] { cmd_eval(eval_checkpoint, eval_corpus, eval_unit, eval_vocab_from); });
    grid->callback([&] { cmd_grid(grid_configs, grid_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const cbclm::config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const cbclm::data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
