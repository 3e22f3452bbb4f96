"""Versioned model checkpoints: all parameter matrices plus the vocabulary.

Stored as an uncompressed ``.npz`` (numpy zeroes the zip timestamps, so
identical checkpoints are byte-identical).  The vocabulary rides along as a
JSON string and its content hash guards against encoding a corpus with a
different vocabulary at discovery time.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nnet import Code2VecParams
from .pathctx import Vocab

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    params: Code2VecParams
    vocab: Vocab
    vocab_hash: str
    max_contexts: int
    max_path_length: int
    max_path_width: int
    min_count: int

    @property
    def d_hidden(self) -> int:
        return self.params.combine.shape[0]


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    buf = io.BytesIO()
    np.savez(
        buf,
        version=np.int64(FORMAT_VERSION),
        term_emb=ckpt.params.term_emb,
        path_emb=ckpt.params.path_emb,
        combine=ckpt.params.combine,
        attention=ckpt.params.attention,
        output=ckpt.params.output,
        vocab_json=np.asarray(ckpt.vocab.to_json()),
        vocab_hash=np.asarray(ckpt.vocab_hash),
        max_contexts=np.int64(ckpt.max_contexts),
        max_path_length=np.int64(ckpt.max_path_length),
        max_path_width=np.int64(ckpt.max_path_width),
        min_count=np.int64(ckpt.min_count),
    )
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> Checkpoint:
    with np.load(Path(path), allow_pickle=False) as doc:
        version = int(doc["version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        params = Code2VecParams(
            term_emb=doc["term_emb"],
            path_emb=doc["path_emb"],
            combine=doc["combine"],
            attention=doc["attention"],
            output=doc["output"],
        )
        return Checkpoint(
            params=params,
            vocab=Vocab.from_json(str(doc["vocab_json"])),
            vocab_hash=str(doc["vocab_hash"]),
            max_contexts=int(doc["max_contexts"]),
            max_path_length=int(doc["max_path_length"]),
            max_path_width=int(doc["max_path_width"]),
            min_count=int(doc["min_count"]),
        )
