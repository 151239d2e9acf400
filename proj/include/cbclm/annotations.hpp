// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "cbclm/corpus.hpp"
#include "cbclm/errors.hpp"

namespace cbclm {

// Per-sample POS tags and dependency heads ingested from a sidecar file.
// heads[i] is the index of token i's head, -1 for the single root.
struct SampleAnnotation {
    SampleId id = 0;
    std::vector<std::string> pos;
    std::vector<int> heads;
};

using AnnotationMap = std::unordered_map<SampleId, SampleAnnotation>;

// Throws data_error unless `heads` encodes a single-rooted acyclic tree.
inline void validate_heads(const std::vector<int>& heads, SampleId id = -1) {
    const int n = static_cast<int>(heads.size());
    const std::string where =
        id >= 0 ? "sample " + std::to_string(id) : std::string("head list");
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        if (heads[i] == -1) {
            ++roots;
        } else if (heads[i] < 0 || heads[i] >= n) {
            throw data_error(where + ": head index " + std::to_string(heads[i]) +
                             " out of range for " + std::to_string(n) + " tokens");
        }
    }
    if (roots != 1)
        throw data_error(where + ": expected exactly one root, found " +
                         std::to_string(roots));
    for (int i = 0; i < n; ++i) {
        int node = i;
        int steps = 0;
        while (heads[node] != -1) {
            node = heads[node];
            if (++steps > n)
                throw data_error(where + ": cycle in head links reachable from token " +
                                 std::to_string(i));
        }
    }
}

// Number of nodes on the longest root-to-leaf path; a single token has
// depth 1.
inline int tree_depth(const std::vector<int>& heads) {
    if (heads.empty()) throw data_error("tree_depth: empty head list");
    validate_heads(heads);
    const int n = static_cast<int>(heads.size());
    std::vector<int> depth(heads.size(), 0);
    int deepest = 0;
    for (int i = 0; i < n; ++i) {
        if (depth[i] != 0) continue;
        // walk to the root or to a node whose depth is already known
        std::vector<int> path;
        int node = i;
        while (depth[node] == 0 && heads[node] != -1) {
            path.push_back(node);
            node = heads[node];
        }
        int base = (depth[node] != 0) ? depth[node] : 1;  // root depth is 1
        if (depth[node] == 0) depth[node] = base;
        for (auto it = path.rbegin(); it != path.rend(); ++it)
            depth[*it] = ++base;
        deepest = std::max(deepest, base);
    }
    return deepest;
}

inline int pos_diversity(const std::vector<std::string>& pos) {
    if (pos.empty()) throw data_error("pos_diversity: empty tag list");
    std::unordered_set<std::string_view> distinct(pos.begin(), pos.end());
    return static_cast<int>(distinct.size());
}

// Reads a JSONL sidecar of {"id": int, "pos": [...], "heads": [...]}
// records and validates each against the corpus. Samples missing from the
// file are simply absent from the returned map.
inline AnnotationMap load_annotations(const std::string& path, const Corpus& corpus) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open annotation file: " + path);

    AnnotationMap map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw data_error(path + ":" + std::to_string(lineno) +
                             ": malformed record: " + e.what());
        }
        SampleAnnotation anno;
        try {
            anno.id = record.at("id").get<SampleId>();
            anno.pos = record.at("pos").get<std::vector<std::string>>();
            anno.heads = record.at("heads").get<std::vector<int>>();
        } catch (const nlohmann::json::exception& e) {
            throw data_error(path + ":" + std::to_string(lineno) +
                             ": bad record fields: " + e.what());
        }
        if (anno.id < 0 || static_cast<std::size_t>(anno.id) >= corpus.size())
            throw data_error("sample " + std::to_string(anno.id) +
                             ": id not present in corpus of " +
                             std::to_string(corpus.size()) + " samples");
        const std::size_t expected = corpus.samples[static_cast<std::size_t>(anno.id)].tokens.size();
        if (anno.pos.size() != expected || anno.heads.size() != expected)
            throw data_error("sample " + std::to_string(anno.id) +
                             ": annotation length mismatch (tokens " +
                             std::to_string(expected) + ", pos " +
                             std::to_string(anno.pos.size()) + ", heads " +
                             std::to_string(anno.heads.size()) + ")");
        validate_heads(anno.heads, anno.id);
        map[anno.id] = std::move(anno);
    }
    return map;
}

} // namespace cbclm
