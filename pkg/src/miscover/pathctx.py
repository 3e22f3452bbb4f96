"""AST path contexts, vocabularies, fixed-length encodings and TF-IDF.

A path context is a (start terminal, internal path, end terminal) triple for
a pair of distinct leaves: the start is the earlier leaf in left-to-right
order, and the internal path walks from the start up to the lowest common
ancestor and down to the end.  Path elements are (label, direction) pairs
with the LCA appearing once per direction, so the up/down shape is explicit.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .turtlelang import Ast, iter_nodes

PAD = 0
UNK = 1

DEFAULT_MAX_PATH_LENGTH = 8
DEFAULT_MAX_PATH_WIDTH = 2
DEFAULT_MAX_CONTEXTS = 100


class EmptyCorpus(Exception):
    """Corpus-level operation received no submissions."""


@dataclass(frozen=True)
class PathContext:
    start: str
    path: tuple[tuple[str, str], ...]
    end: str

    def path_key(self) -> str:
        """Canonical string naming the internal path for vocabulary lookups."""
        return "|".join(f"{label}/{direction}" for label, direction in self.path)


def extract_paths(
    root: Ast,
    max_length: int = DEFAULT_MAX_PATH_LENGTH,
    max_width: int = DEFAULT_MAX_PATH_WIDTH,
) -> list[PathContext]:
    """Enumerate the tree's path contexts in leaf-order lexicographic order.

    Keeps leaf pairs whose connecting path has at most ``max_length``
    internal nodes and whose leaf-order index difference is at most
    ``max_width``.  Duplicate (start, path, end) values are emitted once, at
    their first occurrence.  Trees with fewer than two leaves yield nothing.
    """
    if max_length < 1 or max_width < 1:
        raise ValueError("max_length and max_width must be >= 1")

    parent: list[int] = []
    labels: list[str] = []
    depth: list[int] = []
    leaf_ids: list[int] = []

    stack: list[tuple[Ast, int]] = [(root, -1)]
    while stack:
        node, par = stack.pop()
        idx = len(labels)
        labels.append(node.label)
        parent.append(par)
        depth.append(depth[par] + 1 if par >= 0 else 0)
        if not node.children:
            leaf_ids.append(idx)
        for child in reversed(node.children):
            stack.append((child, idx))
    # stack-based preorder pushes children reversed, so leaf_ids is already
    # in left-to-right order
    contexts: dict[PathContext, None] = {}
    for i, a in enumerate(leaf_ids):
        for j in range(i + 1, min(i + max_width, len(leaf_ids) - 1) + 1):
            b = leaf_ids[j]
            ua, ub = a, b
            up: list[str] = []
            down: list[str] = []
            da, db = depth[a], depth[b]
            while da > db:
                ua = parent[ua]
                up.append(labels[ua])
                da -= 1
            while db > da:
                ub = parent[ub]
                down.append(labels[ub])
                db -= 1
            while ua != ub:
                ua = parent[ua]
                up.append(labels[ua])
                ub = parent[ub]
                down.append(labels[ub])
            n_internal = len(up) + len(down) - 1  # LCA is shared
            if n_internal > max_length:
                continue
            path = tuple((lab, "up") for lab in up) + tuple(
                (lab, "down") for lab in reversed(down)
            )
            ctx = PathContext(labels[a], path, labels[b])
            contexts.setdefault(ctx, None)
    return list(contexts)


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Vocab:
    """Dense terminal and path indices; 0 is PAD, 1 is UNK in both tables."""

    terminals: dict[str, int]
    paths: dict[str, int]
    min_count: int = 1

    @property
    def n_terminals(self) -> int:
        return len(self.terminals) + 2

    @property
    def n_paths(self) -> int:
        return len(self.paths) + 2

    def terminal_index(self, token: str) -> int:
        return self.terminals.get(token, UNK)

    def path_index(self, key: str) -> int:
        return self.paths.get(key, UNK)

    def to_json(self) -> str:
        return json.dumps(
            {
                "min_count": self.min_count,
                "terminals": self.terminals,
                "paths": self.paths,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Vocab":
        doc = json.loads(text)
        return cls(
            terminals=dict(doc["terminals"]),
            paths=dict(doc["paths"]),
            min_count=int(doc["min_count"]),
        )

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def build_vocab(
    context_sets: Sequence[Sequence[PathContext]], min_count: int = 1
) -> Vocab:
    """Index terminals and paths with corpus frequency >= min_count.

    Indices are dense from 2 upward, assigned by descending frequency with
    alphabetical tie-break, so a fixed corpus always produces the same table.
    """
    if len(context_sets) == 0:
        raise EmptyCorpus("cannot build a vocabulary from zero submissions")
    term_counts: dict[str, int] = {}
    path_counts: dict[str, int] = {}
    for contexts in context_sets:
        for ctx in contexts:
            term_counts[ctx.start] = term_counts.get(ctx.start, 0) + 1
            term_counts[ctx.end] = term_counts.get(ctx.end, 0) + 1
            key = ctx.path_key()
            path_counts[key] = path_counts.get(key, 0) + 1

    def index(counts: dict[str, int]) -> dict[str, int]:
        kept = sorted(
            (tok for tok, c in counts.items() if c >= min_count),
            key=lambda tok: (-counts[tok], tok),
        )
        return {tok: i + 2 for i, tok in enumerate(kept)}

    return Vocab(index(term_counts), index(path_counts), min_count=min_count)


# ---------------------------------------------------------------------------
# Fixed-length encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EncodedSubmission:
    """Exactly ``max_contexts`` (start, path, end) index triples, PAD-filled."""

    contexts: np.ndarray  # (C, 3) int32
    mask: np.ndarray  # (C,) bool
    truncated: bool


def encode(
    paths: Sequence[PathContext], vocab: Vocab, max_contexts: int = DEFAULT_MAX_CONTEXTS
) -> EncodedSubmission:
    if max_contexts < 1:
        raise ValueError("max_contexts must be >= 1")
    triples = np.zeros((max_contexts, 3), dtype=np.int32)
    mask = np.zeros(max_contexts, dtype=bool)
    kept = list(paths)[:max_contexts]
    for i, ctx in enumerate(kept):
        triples[i, 0] = vocab.terminal_index(ctx.start)
        triples[i, 1] = vocab.path_index(ctx.path_key())
        triples[i, 2] = vocab.terminal_index(ctx.end)
        mask[i] = True
    return EncodedSubmission(
        contexts=triples, mask=mask, truncated=len(paths) > max_contexts
    )


@dataclass
class EncodedCorpus:
    """Stacked encodings for a whole corpus, tied to one vocabulary."""

    ids: list[str]
    contexts: np.ndarray  # (N, C, 3) int32
    mask: np.ndarray  # (N, C) bool
    truncated: np.ndarray  # (N,) bool
    vocab_hash: str
    n_terminals: int
    n_paths: int

    def __len__(self) -> int:
        return len(self.ids)


def encode_corpus(
    ids: Sequence[str],
    context_sets: Sequence[Sequence[PathContext]],
    vocab: Vocab,
    max_contexts: int = DEFAULT_MAX_CONTEXTS,
) -> EncodedCorpus:
    if len(ids) != len(context_sets):
        raise ValueError("ids and context sets must align")
    if len(ids) == 0:
        raise EmptyCorpus("cannot encode zero submissions")
    encoded = [encode(cs, vocab, max_contexts) for cs in context_sets]
    return EncodedCorpus(
        ids=list(ids),
        contexts=np.stack([e.contexts for e in encoded]),
        mask=np.stack([e.mask for e in encoded]),
        truncated=np.array([e.truncated for e in encoded], dtype=bool),
        vocab_hash=vocab.content_hash(),
        n_terminals=vocab.n_terminals,
        n_paths=vocab.n_paths,
    )


# ---------------------------------------------------------------------------
# TF-IDF over AST node labels (baseline featurizer)
# ---------------------------------------------------------------------------


@dataclass
class TfidfFeaturizer:
    """Bag of AST node labels with smoothed idf and L2-normalized rows.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, tf = raw label count.  The
    vocabulary and document frequencies come from :meth:`fit`; labels unseen
    at fit time are ignored at transform time.
    """

    vocabulary: dict[str, int] = field(default_factory=dict)
    idf: np.ndarray | None = None

    def fit(self, asts: Sequence[Ast]) -> "TfidfFeaturizer":
        if len(asts) == 0:
            raise EmptyCorpus("cannot fit TF-IDF on zero documents")
        df: dict[str, int] = {}
        for ast in asts:
            seen = {node.label for node in iter_nodes(ast)}
            for label in seen:
                df[label] = df.get(label, 0) + 1
        self.vocabulary = {lab: i for i, lab in enumerate(sorted(df))}
        n_docs = len(asts)
        self.idf = np.array(
            [
                math.log((1 + n_docs) / (1 + df[lab])) + 1.0
                for lab in sorted(df)
            ],
            dtype=np.float64,
        )
        return self

    def transform(self, asts: Sequence[Ast]) -> np.ndarray:
        if self.idf is None:
            raise RuntimeError("featurizer is not fitted")
        out = np.zeros((len(asts), len(self.vocabulary)), dtype=np.float64)
        for row, ast in enumerate(asts):
            for node in iter_nodes(ast):
                col = self.vocabulary.get(node.label)
                if col is not None:
                    out[row, col] += 1.0
        out *= self.idf
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out


def tfidf_features(asts: Sequence[Ast]) -> np.ndarray:
    """Fit-and-transform convenience for single-corpus featurization."""
    return TfidfFeaturizer().fit(asts).transform(asts)

