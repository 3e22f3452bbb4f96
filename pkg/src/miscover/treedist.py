"""Zhang-Shasha ordered tree edit distance with unit costs.

Insert, delete and relabel all cost 1; relabeling a node to an equal label
costs 0.  The forest-distance dynamic program is the package's hottest
integer kernel: it runs over every keyroot pair of both trees and is invoked
O(n^2) times when building pairwise distance matrices for cluster metrics.
The kernel is therefore numba-compiled under the default backend, with the
identical loop nest running as the pure fallback (see :mod:`miscover.accel`).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import accel
from .turtlelang import Ast


def _ted_kernel(la, lla, kra, lb, llb, krb):
    n = la.shape[0]
    m = lb.shape[0]
    td = np.zeros((n, m), dtype=np.int64)
    for ki in range(kra.shape[0]):
        i = kra[ki]
        ioff = lla[i] - 1
        rows = i - lla[i] + 2
        for kj in range(krb.shape[0]):
            j = krb[kj]
            joff = llb[j] - 1
            cols = j - llb[j] + 2
            fd = np.zeros((rows, cols), dtype=np.int64)
            for x in range(1, rows):
                fd[x, 0] = fd[x - 1, 0] + 1
            for y in range(1, cols):
                fd[0, y] = fd[0, y - 1] + 1
            for x in range(1, rows):
                for y in range(1, cols):
                    if lla[x + ioff] == lla[i] and llb[y + joff] == llb[j]:
                        cost = 0 if la[x + ioff] == lb[y + joff] else 1
                        fd[x, y] = min(
                            fd[x - 1, y] + 1,
                            fd[x, y - 1] + 1,
                            fd[x - 1, y - 1] + cost,
                        )
                        td[x + ioff, y + joff] = fd[x, y]
                    else:
                        p = lla[x + ioff] - 1 - ioff
                        q = llb[y + joff] - 1 - joff
                        fd[x, y] = min(
                            fd[x - 1, y] + 1,
                            fd[x, y - 1] + 1,
                            fd[p, q] + td[x + ioff, y + joff],
                        )
    return td[n - 1, m - 1]


if accel.NUMBA_ENABLED:
    from numba import njit

    _ted_kernel_nb = njit(cache=True)(_ted_kernel)
    _ted_pair = _ted_kernel_nb
else:
    _ted_pair = _ted_kernel


def _postorder(root: Ast):
    """Postorder label list, leftmost-leaf-descendant array and keyroots."""
    result_labels: list[str] = []
    result_lml: list[int] = []
    frames: list[tuple[Ast, int, list[int]]] = [(root, 0, [])]
    while frames:
        node, idx, child_lmls = frames[-1]
        if idx < len(node.children):
            frames[-1] = (node, idx + 1, child_lmls)
            frames.append((node.children[idx], 0, []))
        else:
            frames.pop()
            own = len(result_labels)
            lml = child_lmls[0] if child_lmls else own
            result_labels.append(node.label)
            result_lml.append(lml)
            if frames:
                frames[-1][2].append(lml)

    last_for_lml: dict[int, int] = {}
    for i, lm in enumerate(result_lml):
        last_for_lml[lm] = i
    keyroots = sorted(last_for_lml.values())
    return result_labels, result_lml, keyroots


def _encode(labels: list[str], index: dict[str, int]) -> np.ndarray:
    out = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        code = index.get(lab)
        if code is None:
            code = len(index)
            index[lab] = code
        out[i] = code
    return out


def tree_edit_distance(a: Ast, b: Ast) -> int:
    """Exact ordered tree edit distance between two ASTs (unit costs)."""
    index: dict[str, int] = {}
    la, lla, kra = _postorder(a)
    lb, llb, krb = _postorder(b)
    dist = _ted_pair(
        _encode(la, index),
        np.asarray(lla, dtype=np.int64),
        np.asarray(kra, dtype=np.int64),
        _encode(lb, index),
        np.asarray(llb, dtype=np.int64),
        np.asarray(krb, dtype=np.int64),
    )
    return int(dist)


def ted_matrix(trees: Sequence[Ast]) -> np.ndarray:
    """Symmetric pairwise tree edit distance matrix over a tree list."""
    index: dict[str, int] = {}
    encoded = []
    for t in trees:
        labels, lml, kr = _postorder(t)
        encoded.append(
            (
                _encode(labels, index),
                np.asarray(lml, dtype=np.int64),
                np.asarray(kr, dtype=np.int64),
            )
        )
    n = len(trees)
    out = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            d = _ted_pair(*encoded[i], *encoded[j])
            out[i, j] = d
            out[j, i] = d
    return out
