#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the bundled fixture corpora under data/.

Emits a synthetic English-like corpus (one sentence per line, whitespace
pretokenized, sentence-final period) together with a JSONL annotation
sidecar carrying POS tags and dependency heads for every sample. The
output is deterministic for a given seed; the files it writes are
committed, so rerunning this script must be a no-op unless the generator
itself changed.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "data"

DET = ["the", "a", "this", "that", "every", "some"]
NOUN = [
    "model", "corpus", "sample", "token", "sentence", "word", "batch",
    "tree", "curve", "loss", "step", "seed", "table", "line", "count",
    "vector", "window", "value", "method", "result", "paper", "graph",
    "node", "layer", "system", "signal", "metric", "score", "run",
    "parser", "tag", "rank", "draw", "split", "cache", "queue",
]
VERB = [
    "trains", "samples", "counts", "draws", "updates", "reads", "writes",
    "splits", "sorts", "scores", "holds", "moves", "grows", "drops",
    "keeps", "finds", "builds", "tracks", "emits", "loads",
]
ADJ = [
    "small", "large", "rare", "common", "deep", "flat", "long", "short",
    "dense", "sparse", "stable", "random", "easy", "hard", "new", "old",
    "clean", "noisy",
]
ADV = ["slowly", "quickly", "often", "rarely", "again", "first", "later"]
PREP = ["in", "on", "over", "under", "with", "from", "near", "through"]
PRON = ["it", "they", "we"]
CONJ = ["and", "but", "or"]
NUM = ["one", "two", "three", "ten", "twenty"]

LEXICON = {
    "DET": DET, "NOUN": NOUN, "VERB": VERB, "ADJ": ADJ, "ADV": ADV,
    "PREP": PREP, "PRON": PRON, "CONJ": CONJ, "NUM": NUM,
}


def zipf_pick(rng, words):
    # rank-weighted choice: weight 1/(rank+1)
    weights = [1.0 / (i + 1) for i in range(len(words))]
    return rng.choices(words, weights=weights, k=1)[0]


def noun_phrase(rng, tokens, tags, heads):
    """Appends a noun phrase; returns the index of its head noun."""
    det_idx = None
    if rng.random() < 0.8:
        tokens.append(zipf_pick(rng, DET))
        tags.append("DET")
        heads.append(None)
        det_idx = len(tokens) - 1
    adj_idxs = []
    while rng.random() < 0.35 and len(adj_idxs) < 3:
        tokens.append(zipf_pick(rng, ADJ))
        tags.append("ADJ")
        heads.append(None)
        adj_idxs.append(len(tokens) - 1)
    if rng.random() < 0.1:
        tokens.append(zipf_pick(rng, NUM))
        tags.append("NUM")
        heads.append(None)
        adj_idxs.append(len(tokens) - 1)
    tokens.append(zipf_pick(rng, NOUN))
    tags.append("NOUN")
    heads.append(None)
    noun_idx = len(tokens) - 1
    if det_idx is not None:
        heads[det_idx] = noun_idx
    for i in adj_idxs:
        heads[i] = noun_idx
    return noun_idx


def clause(rng, tokens, tags, heads):
    """Appends subject-verb-object; returns the verb index (clause head)."""
    if rng.random() < 0.15:
        tokens.append(rng.choice(PRON))
        tags.append("PRON")
        heads.append(None)
        subj = len(tokens) - 1
    else:
        subj = noun_phrase(rng, tokens, tags, heads)
    if rng.random() < 0.25:
        tokens.append(rng.choice(ADV))
        tags.append("ADV")
        heads.append(None)
        adv = len(tokens) - 1
    else:
        adv = None
    tokens.append(zipf_pick(rng, VERB))
    tags.append("VERB")
    heads.append(None)
    verb = len(tokens) - 1
    heads[subj] = verb
    if adv is not None:
        heads[adv] = verb
    if rng.random() < 0.75:
        obj = noun_phrase(rng, tokens, tags, heads)
        heads[obj] = verb
    while rng.random() < 0.3:
        tokens.append(rng.choice(PREP))
        tags.append("PREP")
        heads.append(None)
        prep = len(tokens) - 1
        pobj = noun_phrase(rng, tokens, tags, heads)
        heads[prep] = verb
        heads[pobj] = prep
    return verb


def sentence(rng):
    tokens, tags, heads = [], [], []
    root = clause(rng, tokens, tags, heads)
    while rng.random() < 0.22 and len(tokens) < 22:
        tokens.append(rng.choice(CONJ))
        tags.append("CONJ")
        heads.append(None)
        conj = len(tokens) - 1
        heads[conj] = root
        v2 = clause(rng, tokens, tags, heads)
        heads[v2] = conj
    tokens.append(".")
    tags.append("PUNCT")
    heads.append(root)
    heads[root] = -1
    assert all(h is not None for h in heads)
    assert heads.count(-1) == 1
    return tokens, tags, heads


def make_corpus(rng, n):
    lines, annos = [], []
    for i in range(n):
        toks, tags, heads = sentence(rng)
        lines.append(" ".join(toks))
        annos.append({"id": i, "pos": tags, "heads": heads})
    return lines, annos


def main():
    OUT.mkdir(exist_ok=True)
    rng = random.Random(20240811)
    train_lines, train_annos = make_corpus(rng, 1000)

    (OUT / "fixture_1k.txt").write_text("\n".join(train_lines) + "\n")
    with open(OUT / "fixture_1k.annotations.jsonl", "w") as f:
        for a in train_annos:
            f.write(json.dumps(a, separators=(",", ":")) + "\n")
    (OUT / "fixture_100.txt").write_text("\n".join(train_lines[:100]) + "\n")

    rng_valid = random.Random(20240812)
    valid_lines, _ = make_corpus(rng_valid, 120)
    # two out-of-vocabulary words so UNK mapping gets exercised
    valid_lines[7] = valid_lines[7].replace(" .", " zyxomat .")
    valid_lines[43] = valid_lines[43].replace(" .", " quopli .")
    (OUT / "fixture_valid.txt").write_text("\n".join(valid_lines) + "\n")

    vocab = set(t for l in train_lines for t in l.split())
    toks = sum(len(l.split()) for l in train_lines)
    lens = [len(l.split()) for l in train_lines]
    print(f"train: samples={len(train_lines)} tokens={toks} vocab={len(vocab)}")
    print(f"lengths: min={min(lens)} max={max(lens)} mean={toks/len(lens):.2f}")
    print(f"pad tokens @20: {sum(max(0, 20 - n) for n in lens)}")


if __name__ == "__main__":
    main()
