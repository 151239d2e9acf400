// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cbclm/corpus.hpp"
#include "cbclm/curriculum.hpp"
#include "cbclm/errors.hpp"
#include "cbclm/rng.hpp"

namespace cbclm {

// Samples mapped to vocabulary ids once, so repeated draws do not re-walk
// token strings. Out-of-vocabulary tokens become UNK here.
struct EncodedCorpus {
    std::vector<std::vector<std::int32_t>> token_ids;

    std::size_t size() const { return token_ids.size(); }
};

inline EncodedCorpus encode_corpus(const Corpus& corpus, const Vocabulary& vocab) {
    EncodedCorpus encoded;
    encoded.token_ids.reserve(corpus.size());
    for (const auto& s : corpus.samples) {
        std::vector<std::int32_t> ids;
        ids.reserve(s.tokens.size());
        for (const auto& t : s.tokens) ids.push_back(vocab.id_for(t));
        encoded.token_ids.push_back(std::move(ids));
    }
    return encoded;
}

// batch_size x window id matrix with a 0/1 loss mask that is 0 exactly on
// padding positions.
struct Batch {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int32_t> token_ids;
    std::vector<std::uint8_t> loss_mask;
    std::vector<SampleId> sample_ids;

    std::int32_t id(std::size_t r, std::size_t c) const { return token_ids[r * cols + c]; }
    std::uint8_t mask(std::size_t r, std::size_t c) const { return loss_mask[r * cols + c]; }
};

// Rows longer than the window keep their first `window` tokens; shorter
// rows are right-padded with pad_id and masked out there.
inline Batch pad_and_mask(const std::vector<std::vector<std::int32_t>>& samples,
                          std::size_t window, std::int32_t pad_id) {
    if (window < 1) throw config_error("window must be >= 1");
    Batch batch;
    batch.rows = samples.size();
    batch.cols = window;
    batch.token_ids.assign(batch.rows * window, pad_id);
    batch.loss_mask.assign(batch.rows * window, 0);
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const auto& ids = samples[r];
        const std::size_t keep = std::min(ids.size(), window);
        for (std::size_t c = 0; c < keep; ++c) {
            batch.token_ids[r * window + c] = ids[c];
            batch.loss_mask[r * window + c] = 1;
        }
    }
    return batch;
}

// Draws batch_size samples independently and uniformly WITH replacement
// from the eligible prefix at the state's current step, then pads to the
// window.
inline Batch sample_batch(const CurriculumState& state, const EncodedCorpus& corpus,
                          std::size_t batch_size, std::size_t window,
                          std::mt19937_64& rng) {
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (window < 1) throw config_error("window must be >= 1");
    const double lambda = competence(state, state.step);
    const Eligibility eligible = effective_eligibility(state, lambda);

    std::vector<SampleId> drawn;
    drawn.reserve(batch_size);
    std::vector<std::vector<std::int32_t>> rows;
    rows.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t pick =
            uniform_index(rng, static_cast<std::size_t>(eligible.count));
        const SampleId sid = state.order[pick];
        drawn.push_back(sid);
        rows.push_back(corpus.token_ids[static_cast<std::size_t>(sid)]);
    }
    Batch batch = pad_and_mask(rows, window, Vocabulary::pad_id);
    batch.sample_ids = std::move(drawn);
    return batch;
}

// Same draw sequence without a precomputed encoding; only the drawn rows
// are mapped through the vocabulary.
inline Batch sample_batch(const CurriculumState& state, const Corpus& corpus,
                          const Vocabulary& vocab, std::size_t batch_size, std::size_t window,
                          std::mt19937_64& rng) {
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (window < 1) throw config_error("window must be >= 1");
    const double lambda = competence(state, state.step);
    const Eligibility eligible = effective_eligibility(state, lambda);

    std::vector<SampleId> drawn;
    drawn.reserve(batch_size);
    std::vector<std::vector<std::int32_t>> rows;
    rows.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t pick =
            uniform_index(rng, static_cast<std::size_t>(eligible.count));
        const SampleId sid = state.order[pick];
        drawn.push_back(sid);
        const auto& tokens = corpus.samples[static_cast<std::size_t>(sid)].tokens;
        std::vector<std::int32_t> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) ids.push_back(vocab.id_for(t));
        rows.push_back(std::move(ids));
    }
    Batch batch = pad_and_mask(rows, window, Vocabulary::pad_id);
    batch.sample_ids = std::move(drawn);
    return batch;
}

struct PaddingStats {
    std::uint64_t pad_tokens = 0;
    double pad_fraction = 0.0;
};

// Padding the sampler would add at this window over one pass of the corpus.
inline PaddingStats padding_stats(const Corpus& corpus, std::size_t window) {
    PaddingStats stats;
    for (const auto& s : corpus.samples) {
        if (s.tokens.size() < window)
            stats.pad_tokens += static_cast<std::uint64_t>(window - s.tokens.size());
    }
    const double denom = static_cast<double>(corpus.size()) * static_cast<double>(window);
    stats.pad_fraction = denom > 0 ? static_cast<double>(stats.pad_tokens) / denom : 0.0;
    return stats;
}

} // namespace cbclm
