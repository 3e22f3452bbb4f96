"""Synthetic spiral-assignment corpus with planted misconception groups.

Four templates:

* ``correct``: one-parameter procedure whose parameter drives the loop count,
  pen down, an initialized length variable moved and incremented inside the
  loop.  Passes every rubric item.
* group ``A`` (duplicated move/turn, no loop): the body repeats literal
  move/turn pairs instead of looping.  Fails items 0 and 3 (and consequently
  4 and 5, which require a loop).
* group ``B`` (fixed repeat count): loops a literal number of times; the
  procedure parameter, when present, never reaches the count.  Fails exactly
  item 0.
* group ``C`` (local variable instead of parameter): rotation count comes
  from an ``ask`` or a locally ``set`` variable.  Fails exactly item 0.

Identifier pools, literal perturbation and bounded statement jitter (at most
three harmless extra statements) give within-group variety without changing
any template's rubric outcome; every generated program is re-graded and
checked against its template's designed outcome.  Jitter is appended after
the template body rather than interleaved: the flattened context-matrix
embedding is position-sensitive, so planted groups stay alignment-coherent
in their leading contexts while still varying in size and content.  The
planted group of each submission is returned separately and must never be
written into the corpus file itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Submission
from .turtlelang import grade_rubric, parse

GROUPS = ("correct", "A", "B", "C")


class GenerationError(Exception):
    """A generated program violated its template's designed rubric outcome."""


@dataclass(frozen=True)
class GeneratorSpec:
    n_correct: int = 80
    n_dup_moves: int = 10  # group A
    n_fixed_repeat: int = 8  # group B
    n_local_var: int = 3  # group C
    seed: int = 0
    max_jitter: int = 1  # extra tail statements per program, capped at 3

    def __post_init__(self):
        counts = (self.n_correct, self.n_dup_moves, self.n_fixed_repeat, self.n_local_var)
        if any(c < 0 for c in counts):
            raise ValueError("template counts must be non-negative")
        if not 0 <= self.max_jitter <= 3:
            raise ValueError("jitter is bounded to at most 3 extra statements")


_PROC_NAMES = ("spiral", "draw", "shape", "spin", "myspiral")
_PARAM_NAMES = ("n", "size", "num", "count", "times")
_VAR_NAMES = ("len", "side", "length", "dist", "width")
_AUX_NAMES = ("tmp", "extra", "aux", "pad")
_PROMPTS = ('"rotations?"', '"howmany?"', '"turns?"')

# designed rubric outcome per template (None = unconstrained)
_EXPECTED = {
    "correct": (True, True, True, True, True, True),
    "A": (False, True, True, False, False, False),
    "B": (False, True, True, True, True, True),
    "C": (False, True, True, True, True, True),
}


def _pick(rng: np.random.Generator, pool):
    return pool[int(rng.integers(0, len(pool)))]


def _jitter_statements(rng: np.random.Generator, max_jitter: int, var: str) -> list[str]:
    """Harmless filler statements; never a loop, never touching ``var``."""
    count = int(rng.integers(0, max_jitter + 1))
    out = []
    for _ in range(count):
        kind = int(rng.integers(0, 3))
        if kind == 0:
            out.append(f"turn {int(rng.integers(5, 46))}")
        elif kind == 1:
            out.append(f"move {int(rng.integers(1, 6))}")
        else:
            aux = _pick(rng, _AUX_NAMES)
            out.append(f"set {aux} {int(rng.integers(1, 9))}")
    return out


def _render(rng: np.random.Generator, group: str, max_jitter: int) -> str:
    proc = _pick(rng, _PROC_NAMES)
    param = _pick(rng, _PARAM_NAMES)
    var = _pick(rng, _VAR_NAMES)
    init = int(rng.integers(5, 16))
    angle = int(rng.integers(80, 101))
    step = int(rng.integers(1, 8))
    arg = int(rng.integers(4, 13))
    tail = _jitter_statements(rng, max_jitter, var)

    body: list[str]
    header = f"to {proc} :{param}"
    call = f"call {proc} {arg}"
    if group == "correct":
        body = [
            "pendown",
            f"set {var} {init}",
            f"repeat :{param} [",
            f"  move {var}",
            f"  turn {angle}",
            f"  change {var} {step}",
            "]",
        ]
    elif group == "A":
        pairs = int(rng.integers(3, 7))
        body = ["pendown", f"set {var} {init}"]
        for _ in range(pairs):
            body.append(f"move {var}")
            body.append(f"turn {angle}")
    elif group == "B":
        # one-parameter procedure whose count is a literal; the parameter
        # never reaches the repeat, the canonical fixed-count form
        fixed = int(rng.integers(4, 13))
        body = [
            "pendown",
            f"set {var} {init}",
            f"repeat {fixed} [",
            f"  move {var}",
            f"  turn {angle}",
            f"  change {var} {step}",
            "]",
        ]
    elif group == "C":
        rot = "rot"
        header = f"to {proc}"
        call = f"call {proc}"
        body = [
            "pendown",
            f"ask {_pick(rng, _PROMPTS)} {rot}",
            f"set {var} {init}",
            f"repeat {rot} [",
            f"  move {var}",
            f"  turn {angle}",
            f"  change {var} {step}",
            "]",
        ]
    else:
        raise ValueError(f"unknown template {group!r}")

    lines = [header]
    lines += ["  " + s for s in body]
    lines += ["  " + s for s in tail]
    lines.append("end")
    lines.append(call)
    return "\n".join(lines) + "\n"


def generate(spec: GeneratorSpec) -> tuple[Corpus, dict[str, str]]:
    """Deterministically generate a corpus plus its quarantined group map."""
    rng = np.random.default_rng(spec.seed)
    planned = (
        ["correct"] * spec.n_correct
        + ["A"] * spec.n_dup_moves
        + ["B"] * spec.n_fixed_repeat
        + ["C"] * spec.n_local_var
    )
    sources = []
    for group in planned:
        src = _render(rng, group, spec.max_jitter)
        sources.append((group, src))
    order = rng.permutation(len(sources))

    submissions = []
    groups: dict[str, str] = {}
    for new_idx, old_idx in enumerate(order):
        group, src = sources[int(old_idx)]
        ast = parse(src)
        score = grade_rubric(ast)
        expected = _EXPECTED[group]
        if score.items != expected:
            raise GenerationError(
                f"template {group} produced rubric {score.items}, designed {expected}:\n{src}"
            )
        sid = f"s{new_idx:04d}"
        submissions.append(
            Submission(id=sid, ast=ast, rubric=score.items, source=src)
        )
        groups[sid] = group
    return Corpus(submissions), groups


def groups_to_json(groups: dict[str, str]) -> str:
    return json.dumps({"groups": groups}, indent=2, sort_keys=True) + "\n"


def load_groups(path: str | Path) -> dict[str, str]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return dict(doc["groups"])
