// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cbclm/annotations.hpp"
#include "cbclm/corpus.hpp"
#include "cbclm/errors.hpp"
#include "cbclm/ngram.hpp"
#include "cbclm/rng.hpp"

namespace cbclm {

// The eight difficulty proxies. `none` scores every sample 0 so that with
// lambda0 = 1 the whole corpus is eligible from the first step.
enum class DifficultyMethod : std::uint8_t {
    none,
    random,
    length,
    unigram,
    bigram,
    trigram,
    pos,
    dep,
};

inline const char* to_string(DifficultyMethod m) {
    switch (m) {
        case DifficultyMethod::none: return "none";
        case DifficultyMethod::random: return "random";
        case DifficultyMethod::length: return "length";
        case DifficultyMethod::unigram: return "unigram";
        case DifficultyMethod::bigram: return "bigram";
        case DifficultyMethod::trigram: return "trigram";
        case DifficultyMethod::pos: return "pos";
        case DifficultyMethod::dep: return "dep";
    }
    return "?";
}

inline DifficultyMethod parse_method(std::string_view name) {
    for (auto m : {DifficultyMethod::none, DifficultyMethod::random,
                   DifficultyMethod::length, DifficultyMethod::unigram,
                   DifficultyMethod::bigram, DifficultyMethod::trigram,
                   DifficultyMethod::pos, DifficultyMethod::dep}) {
        if (name == to_string(m)) return m;
    }
    throw config_error("unknown difficulty method '" + std::string(name) + "'");
}

inline bool needs_ngrams(DifficultyMethod m) {
    return m == DifficultyMethod::unigram || m == DifficultyMethod::bigram ||
           m == DifficultyMethod::trigram;
}

inline int ngram_order(DifficultyMethod m) {
    switch (m) {
        case DifficultyMethod::unigram: return 1;
        case DifficultyMethod::bigram: return 2;
        case DifficultyMethod::trigram: return 3;
        default: return 0;
    }
}

inline bool needs_annotations(DifficultyMethod m) {
    return m == DifficultyMethod::pos || m == DifficultyMethod::dep;
}

struct RawScores {
    DifficultyMethod method = DifficultyMethod::none;
    std::vector<double> values;  // indexed by sample id
};

// External inputs a scoring pass may need. Only the members the chosen
// method uses have to be set.
struct ScoreResources {
    const NGramTable* unigrams = nullptr;
    const NGramTable* bigrams = nullptr;
    const NGramTable* trigrams = nullptr;
    const AnnotationMap* annotations = nullptr;
    std::uint64_t seed = 0;
};

namespace detail {

// Negative log-likelihood of the sample's order-n grams under the table's
// MLE distribution. Unseen grams fall back to 1/(total+1) so scores stay
// finite; a sample too short to contain any gram scores 0.
inline double ngram_nll(const Sample& s, const NGramTable& table) {
    const auto order = static_cast<std::size_t>(table.order);
    if (s.tokens.size() < order) return 0.0;
    const double floor_prob = 1.0 / (static_cast<double>(table.total) + 1.0);
    double nll = 0.0;
    for (std::size_t i = 0; i + order <= s.tokens.size(); ++i) {
        std::string key = join_gram({s.tokens.data() + i, order});
        auto it = table.counts.find(key);
        double p = (it == table.counts.end() || table.total == 0)
                       ? floor_prob
                       : static_cast<double>(it->second) / static_cast<double>(table.total);
        nll -= std::log(p);
    }
    return nll;
}

inline const NGramTable* table_for(DifficultyMethod m, const ScoreResources& res) {
    switch (m) {
        case DifficultyMethod::unigram: return res.unigrams;
        case DifficultyMethod::bigram: return res.bigrams;
        case DifficultyMethod::trigram: return res.trigrams;
        default: return nullptr;
    }
}

} // namespace detail

// One raw difficulty value per sample. Scoring is a pure per-sample map;
// the random method derives its value from (seed, id) so the result does
// not depend on evaluation order.
inline RawScores score_corpus(const Corpus& corpus, DifficultyMethod method,
                              const ScoreResources& resources = {}) {
    RawScores out;
    out.method = method;
    out.values.reserve(corpus.size());

    const NGramTable* table = nullptr;
    if (needs_ngrams(method)) {
        table = detail::table_for(method, resources);
        if (table == nullptr)
            throw config_error(std::string("method '") + to_string(method) +
                               "' requires an order-" + std::to_string(ngram_order(method)) +
                               " n-gram table");
        if (table->order != ngram_order(method))
            throw config_error(std::string("method '") + to_string(method) +
                               "' got a table of order " + std::to_string(table->order));
    }
    if (needs_annotations(method) && resources.annotations == nullptr)
        throw config_error(std::string("method '") + to_string(method) +
                           "' requires a sample annotation map");

    for (const auto& s : corpus.samples) {
        double value = 0.0;
        switch (method) {
            case DifficultyMethod::none:
                value = 0.0;
                break;
            case DifficultyMethod::random:
                value = unit_value_at(resources.seed, static_cast<std::uint64_t>(s.id));
                break;
            case DifficultyMethod::length:
                value = static_cast<double>(s.tokens.size());
                break;
            case DifficultyMethod::unigram:
            case DifficultyMethod::bigram:
            case DifficultyMethod::trigram:
                value = detail::ngram_nll(s, *table);
                break;
            case DifficultyMethod::pos:
            case DifficultyMethod::dep: {
                auto it = resources.annotations->find(s.id);
                if (it == resources.annotations->end())
                    throw data_error("no annotation for sample " + std::to_string(s.id));
                value = method == DifficultyMethod::pos
                            ? static_cast<double>(pos_diversity(it->second.pos))
                            : static_cast<double>(tree_depth(it->second.heads));
                break;
            }
        }
        out.values.push_back(value);
    }
    return out;
}

} // namespace cbclm
