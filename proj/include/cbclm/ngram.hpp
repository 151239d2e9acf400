// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cbclm/corpus.hpp"
#include "cbclm/errors.hpp"

namespace cbclm {

// Maximum-likelihood n-gram counts over a corpus. Grams never cross sample
// boundaries and no BOS/EOS padding grams are added. Keys are the gram's
// tokens joined by single spaces (tokens cannot contain whitespace).
struct NGramTable {
    int order = 1;
    std::unordered_map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;

    std::size_t unique_grams() const { return counts.size(); }

    bool operator==(const NGramTable& other) const {
        return order == other.order && total == other.total && counts == other.counts;
    }
};

inline std::string join_gram(std::span<const std::string> tokens) {
    std::string key;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) key += ' ';
        key += tokens[i];
    }
    return key;
}

namespace detail {

inline void count_sample(const Sample& s, int order, NGramTable& table) {
    if (s.tokens.size() < static_cast<std::size_t>(order)) return;
    for (std::size_t i = 0; i + order <= s.tokens.size(); ++i) {
        ++table.counts[join_gram({s.tokens.data() + i, static_cast<std::size_t>(order)})];
        ++table.total;
    }
}

} // namespace detail

inline NGramTable count_ngrams(const Corpus& corpus, int order) {
    if (order < 1 || order > 3)
        throw config_error("n-gram order must be 1, 2 or 3, got " + std::to_string(order));
    NGramTable table;
    table.order = order;
    for (const auto& s : corpus.samples) detail::count_sample(s, order, table);
    return table;
}

// Shards the corpus, counts each shard on its own thread, then merges.
// Merging is additive, so the result is identical to a single-threaded count.
inline NGramTable count_ngrams_parallel(const Corpus& corpus, int order,
                                        unsigned num_shards = 0) {
    if (order < 1 || order > 3)
        throw config_error("n-gram order must be 1, 2 or 3, got " + std::to_string(order));
    if (num_shards == 0) {
        num_shards = std::max(1u, std::thread::hardware_concurrency());
        num_shards = std::min<unsigned>(num_shards, 8);
    }
    std::vector<NGramTable> parts(num_shards);
    std::vector<std::thread> workers;
    workers.reserve(num_shards);
    const std::size_t n = corpus.size();
    for (unsigned shard = 0; shard < num_shards; ++shard) {
        workers.emplace_back([&, shard] {
            parts[shard].order = order;
            const std::size_t lo = n * shard / num_shards;
            const std::size_t hi = n * (shard + 1) / num_shards;
            for (std::size_t i = lo; i < hi; ++i)
                detail::count_sample(corpus.samples[i], order, parts[shard]);
        });
    }
    for (auto& w : workers) w.join();

    NGramTable merged;
    merged.order = order;
    for (auto& part : parts) {
        for (auto& [gram, count] : part.counts) merged.counts[gram] += count;
        merged.total += part.total;
    }
    return merged;
}

// c(gram) / total; 0 for unseen grams. The denominator is the total
// occurrence count rather than the number of distinct grams, which keeps
// the seen-gram probabilities a proper distribution.
inline double ngram_prob(const NGramTable& table, const std::string& gram_key) {
    if (table.total == 0)
        throw data_error("n-gram probability undefined: table total is 0");
    auto it = table.counts.find(gram_key);
    if (it == table.counts.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(table.total);
}

inline double ngram_prob(const NGramTable& table, std::span<const std::string> gram) {
    return ngram_prob(table, join_gram(gram));
}

// Tab-separated `gram<TAB>count`, sorted lexicographically by gram.
inline void dump_table(const NGramTable& table, std::ostream& out) {
    std::map<std::string, std::uint64_t> sorted(table.counts.begin(), table.counts.end());
    for (const auto& [gram, count] : sorted)
        out << gram << '\t' << count << '\n';
}

} // namespace cbclm
