"""Corpus of graded submissions: in-memory model and the JSON file schema.

File schema::

    {"submissions": [{"id": str,
                      "source": str            # exactly one of source/ast
                      "ast": {...portable node},
                      "rubric": [bool x 6],
                      "overall": bool}, ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .turtlelang import (
    Ast,
    N_RUBRIC_ITEMS,
    SchemaError,
    ast_from_dict,
    ast_to_dict,
    parse,
)


@dataclass(frozen=True)
class Submission:
    id: str
    ast: Ast
    rubric: tuple[bool, ...]
    source: str | None = None

    def __post_init__(self):
        if len(self.rubric) != N_RUBRIC_ITEMS:
            raise ValueError(f"rubric must have {N_RUBRIC_ITEMS} items")

    @property
    def overall(self) -> bool:
        return all(self.rubric)


@dataclass
class Corpus:
    submissions: list[Submission] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.submissions)

    def __iter__(self):
        return iter(self.submissions)

    def ids(self) -> list[str]:
        return [s.id for s in self.submissions]

    def labels(self) -> list[bool]:
        """Overall-correct label per submission (the training target)."""
        return [s.overall for s in self.submissions]

    def failing(self, item: int) -> list[Submission]:
        return [s for s in self.submissions if not s.rubric[item]]

    def incorrect(self) -> list[Submission]:
        return [s for s in self.submissions if not s.overall]


def _submission_from_doc(doc) -> Submission:
    if not isinstance(doc, dict):
        raise SchemaError("submission must be an object")
    sid = doc.get("id")
    if not isinstance(sid, str) or not sid:
        raise SchemaError("submission 'id' must be a non-empty string")
    has_source = "source" in doc
    has_ast = "ast" in doc
    if has_source == has_ast:
        raise SchemaError(
            f"submission {sid!r}: exactly one of 'source'/'ast' is required"
        )
    if has_source:
        source = doc["source"]
        if not isinstance(source, str):
            raise SchemaError(f"submission {sid!r}: 'source' must be a string")
        ast = parse(source)
    else:
        source = None
        ast = ast_from_dict(doc["ast"])
    rubric = doc.get("rubric")
    if (
        not isinstance(rubric, list)
        or len(rubric) != N_RUBRIC_ITEMS
        or not all(isinstance(b, bool) for b in rubric)
    ):
        raise SchemaError(
            f"submission {sid!r}: 'rubric' must be a list of {N_RUBRIC_ITEMS} booleans"
        )
    overall = doc.get("overall")
    if not isinstance(overall, bool):
        raise SchemaError(f"submission {sid!r}: 'overall' must be a boolean")
    if overall != all(rubric):
        raise SchemaError(
            f"submission {sid!r}: 'overall' must equal the AND of 'rubric'"
        )
    return Submission(id=sid, ast=ast, rubric=tuple(rubric), source=source)


def corpus_from_json(text: str) -> Corpus:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "submissions" not in doc:
        raise SchemaError("corpus document must have a 'submissions' array")
    subs = doc["submissions"]
    if not isinstance(subs, list):
        raise SchemaError("'submissions' must be an array")
    corpus = Corpus([_submission_from_doc(d) for d in subs])
    seen = set()
    for s in corpus:
        if s.id in seen:
            raise SchemaError(f"duplicate submission id {s.id!r}")
        seen.add(s.id)
    return corpus


def corpus_to_json(corpus: Corpus) -> str:
    docs = []
    for s in corpus:
        doc: dict = {"id": s.id}
        if s.source is not None:
            doc["source"] = s.source
        else:
            doc["ast"] = ast_to_dict(s.ast)
        doc["rubric"] = list(s.rubric)
        doc["overall"] = s.overall
        docs.append(doc)
    return json.dumps({"submissions": docs}, indent=2, sort_keys=True) + "\n"


def load_corpus(path: str | Path) -> Corpus:
    return corpus_from_json(Path(path).read_text(encoding="utf-8"))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(corpus_to_json(corpus), encoding="utf-8")
