"""Shared fixtures-in-code for building tiny encoded corpora in tests."""

from __future__ import annotations

import numpy as np

from miscover.pathctx import build_vocab, encode_corpus, extract_paths
from miscover.turtlelang import parse

# four structurally loop-bearing and four loop-free programs; the label
# "has a Repeat node" is linearly recoverable from their contexts
SEPARABLE_SOURCES = [
    ("r0", "to f :n pendown repeat :n [ move 1 turn 90 ] end", 1),
    ("r1", "to g :k pendown repeat :k [ move 2 turn 45 ] end", 1),
    ("r2", "repeat 3 [ move 5 turn 120 ]", 1),
    ("r3", "set x 4 repeat x [ move x turn 72 ]", 1),
    ("n0", "pendown move 1 turn 90 move 1 turn 90", 0),
    ("n1", "to h :n pendown move :n turn 45 end", 0),
    ("n2", "set x 4 move x turn 120 move x", 0),
    ("n3", "pendown move 2 move 2 turn 72", 0),
]


def separable_corpus(max_contexts: int = 40):
    ids = [sid for sid, _, _ in SEPARABLE_SOURCES]
    asts = [parse(src) for _, src, _ in SEPARABLE_SOURCES]
    labels = np.array([lab for _, _, lab in SEPARABLE_SOURCES], dtype=np.int64)
    context_sets = [extract_paths(ast) for ast in asts]
    vocab = build_vocab(context_sets)
    enc = encode_corpus(ids, context_sets, vocab, max_contexts=max_contexts)
    return enc, labels, asts, vocab
