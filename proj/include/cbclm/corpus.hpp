// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cbclm/errors.hpp"

namespace cbclm {

using SampleId = std::int64_t;

// One training unit: a tokenized line or sentence. `id` is the position of
// the sample in file order and is stable for a given (file, unit) pair.
struct Sample {
    SampleId id = 0;
    std::vector<std::string> tokens;
};

enum class SampleUnit { line, sentence };

inline const char* to_string(SampleUnit u) {
    return u == SampleUnit::line ? "line" : "sentence";
}

inline SampleUnit parse_unit(std::string_view s) {
    if (s == "line") return SampleUnit::line;
    if (s == "sentence") return SampleUnit::sentence;
    throw config_error("unknown sample unit '" + std::string(s) +
                       "' (expected line or sentence)");
}

struct Corpus {
    std::vector<Sample> samples;
    SampleUnit unit = SampleUnit::sentence;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

struct CorpusStats {
    std::size_t vocab_size = 0;  // distinct tokens, specials excluded
    std::size_t token_count = 0;
    std::size_t sample_count = 0;
};

// Maximal runs of non-whitespace bytes. Multi-byte UTF-8 sequences pass
// through untouched; only ASCII whitespace separates tokens.
inline std::vector<std::string> tokenize(std::string_view line) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
               c == '\f' || c == '\v';
    };
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        std::size_t start = i;
        while (i < line.size() && !is_space(line[i])) ++i;
        if (i > start) tokens.emplace_back(line.substr(start, i - start));
    }
    return tokens;
}

namespace detail {

// Returns the byte offset of the first invalid UTF-8 sequence, or npos.
inline std::size_t find_invalid_utf8(std::string_view data) {
    std::size_t i = 0;
    const auto cont = [&](std::size_t k) {
        return k < data.size() &&
               (static_cast<unsigned char>(data[k]) & 0xc0u) == 0x80u;
    };
    while (i < data.size()) {
        unsigned char c = static_cast<unsigned char>(data[i]);
        if (c < 0x80u) {
            ++i;
        } else if ((c & 0xe0u) == 0xc0u) {
            if (c < 0xc2u || !cont(i + 1)) return i;  // overlong or truncated
            i += 2;
        } else if ((c & 0xf0u) == 0xe0u) {
            if (!cont(i + 1) || !cont(i + 2)) return i;
            unsigned char c1 = static_cast<unsigned char>(data[i + 1]);
            if (c == 0xe0u && c1 < 0xa0u) return i;             // overlong
            if (c == 0xedu && c1 > 0x9fu) return i;             // surrogate
            i += 3;
        } else if ((c & 0xf8u) == 0xf0u) {
            if (c > 0xf4u || !cont(i + 1) || !cont(i + 2) || !cont(i + 3))
                return i;
            unsigned char c1 = static_cast<unsigned char>(data[i + 1]);
            if (c == 0xf0u && c1 < 0x90u) return i;             // overlong
            if (c == 0xf4u && c1 > 0x8fu) return i;             // > U+10FFFF
            i += 4;
        } else {
            return i;
        }
    }
    return std::string_view::npos;
}

inline bool ends_sentence(const std::string& token) {
    return token == "." || token == "!" || token == "?";
}

} // namespace detail

// Loads one Sample per non-empty line, or per sentence when `unit` is
// sentence (a sentence ends after a bare ".", "!" or "?" token).
inline Corpus load_corpus(const std::string& path, SampleUnit unit) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open corpus file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw data_error("read failure on corpus file: " + path);
    std::string data = std::move(buf).str();

    if (std::size_t off = detail::find_invalid_utf8(data);
        off != std::string::npos) {
        throw data_error("invalid UTF-8 in " + path + " at byte offset " +
                         std::to_string(off));
    }

    Corpus corpus;
    corpus.unit = unit;
    std::size_t pos = 0;
    while (pos <= data.size()) {
        std::size_t eol = data.find('\n', pos);
        std::string_view line(data.data() + pos,
                              (eol == std::string::npos ? data.size() : eol) - pos);
        pos = (eol == std::string::npos) ? data.size() + 1 : eol + 1;
        if (line.empty() && pos > data.size()) break;  // no trailing record

        std::vector<std::string> tokens = tokenize(line);
        if (tokens.empty()) continue;
        if (unit == SampleUnit::line) {
            Sample s;
            s.id = static_cast<SampleId>(corpus.samples.size());
            s.tokens = std::move(tokens);
            corpus.samples.push_back(std::move(s));
        } else {
            std::vector<std::string> current;
            for (auto& tok : tokens) {
                bool end = detail::ends_sentence(tok);
                current.push_back(std::move(tok));
                if (end) {
                    Sample s;
                    s.id = static_cast<SampleId>(corpus.samples.size());
                    s.tokens = std::move(current);
                    corpus.samples.push_back(std::move(s));
                    current.clear();
                }
            }
            if (!current.empty()) {
                Sample s;
                s.id = static_cast<SampleId>(corpus.samples.size());
                s.tokens = std::move(current);
                corpus.samples.push_back(std::move(s));
            }
        }
    }
    return corpus;
}

// Token-id mapping with four reserved specials. A corpus token that spells
// a special form maps to the special's id rather than getting a fresh one.
class Vocabulary {
public:
    static constexpr std::int32_t pad_id = 0;
    static constexpr std::int32_t unk_id = 1;
    static constexpr std::int32_t bos_id = 2;
    static constexpr std::int32_t eos_id = 3;

    Vocabulary() {
        id_to_token_ = {"<pad>", "<unk>", "<bos>", "<eos>"};
        for (std::size_t i = 0; i < id_to_token_.size(); ++i)
            token_to_id_.emplace(id_to_token_[i], static_cast<std::int32_t>(i));
    }

    std::int32_t add(const std::string& token) {
        auto [it, inserted] =
            token_to_id_.emplace(token, static_cast<std::int32_t>(id_to_token_.size()));
        if (inserted) id_to_token_.push_back(token);
        return it->second;
    }

    // OOV maps to UNK.
    std::int32_t id_for(const std::string& token) const {
        auto it = token_to_id_.find(token);
        return it == token_to_id_.end() ? unk_id : it->second;
    }

    bool contains(const std::string& token) const {
        return token_to_id_.count(token) != 0;
    }

    const std::string& token_for(std::int32_t id) const {
        return id_to_token_.at(static_cast<std::size_t>(id));
    }

    std::size_t size() const { return id_to_token_.size(); }

    const std::unordered_map<std::string, std::int32_t>& mapping() const {
        return token_to_id_;
    }

private:
    std::unordered_map<std::string, std::int32_t> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// Ids are assigned in descending corpus frequency, ties broken
// lexicographically, so two loads of the same file agree exactly.
inline Vocabulary build_vocabulary(const Corpus& corpus) {
    if (corpus.empty()) throw data_error("cannot build vocabulary of an empty corpus");
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const auto& s : corpus.samples)
        for (const auto& t : s.tokens) ++freq[t];

    std::vector<std::pair<std::string, std::uint64_t>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    for (auto& [token, count] : items) vocab.add(token);
    return vocab;
}

inline CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats stats;
    stats.sample_count = corpus.size();
    std::unordered_set<std::string_view> distinct;
    for (const auto& s : corpus.samples) {
        stats.token_count += s.tokens.size();
        for (const auto& t : s.tokens) distinct.insert(t);
    }
    stats.vocab_size = distinct.size();
    return stats;
}

} // namespace cbclm
