"""Misconception discovery: embeddings, per-rubric clustering, metrics.

The discovery pipeline filters the corpus to overall-incorrect submissions,
embeds each as the row-major flattening of its pre-attention context matrix
(shape C x d_hidden, so 10,000-dimensional at the defaults; the pooled code
vector is available as an alternative), projects those embeddings to 2-D
with exact t-SNE, and then clusters the failing submissions of each rubric
item separately with DBSCAN on their projected coordinates.

Each cluster carries two normalized dispersion numbers:

* ED: mean pairwise Euclidean distance between members in embedding space,
  divided by the mean distance of all of the item's failing submissions to
  their embedding centroid;
* TED: mean pairwise tree edit distance between members, divided by the mean
  tree edit distance of all failing submissions to the failing set's medoid
  tree (the tree minimizing total distance to the others; tree space has no
  centroid, so the medoid stands in - flagged in reports).

Clusters are ranked by mean intra-cluster 2-D distance (densest first) and
up to four per item are marked selected.  A cluster whose member set overlaps
an earlier-discovered cluster with Jaccard above 0.8 is annotated as a
duplicate, never dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .clustering import NOISE, ClusterConfig, dbscan, select_epsilon
from .corpus import Corpus
from .nnet import Code2VecParams, _forward_batch
from .pathctx import EncodedCorpus
from .treedist import ted_matrix
from .tsne import Projection2D, tsne
from .turtlelang import N_RUBRIC_ITEMS, RUBRIC_ITEMS


class VocabMismatch(Exception):
    """Encoded corpus and model checkpoint disagree on the vocabulary."""


@dataclass(frozen=True)
class ClusterInfo:
    members: tuple[str, ...]
    ed: float
    ted: float
    density_rank: int
    mean_intra_2d: float
    selected: bool
    normalizer_degenerate: bool = False
    duplicate_of: str | None = None


@dataclass
class ClusterReport:
    item: int
    item_name: str
    clusters: list[ClusterInfo] = field(default_factory=list)
    noise: tuple[str, ...] = ()
    epsilon: float | None = None
    note: str | None = None

    def covered_ids(self) -> list[str]:
        out = list(self.noise)
        for c in self.clusters:
            out.extend(c.members)
        return out


def extract_embeddings(
    params: Code2VecParams,
    enc: EncodedCorpus,
    vocab_hash: str | None = None,
    kind: str = "context",
) -> np.ndarray:
    """One embedding row per encoded submission.

    ``kind="context"`` flattens the pre-attention context matrix row-major
    (PAD slots contribute exact zeros); ``kind="pooled"`` returns the
    attention-pooled code vector instead.
    """
    if vocab_hash is not None and vocab_hash != enc.vocab_hash:
        raise VocabMismatch(
            f"model was trained on vocab {vocab_hash[:12]}..., "
            f"corpus encoded with {enc.vocab_hash[:12]}..."
        )
    cache = _forward_batch(params, enc.contexts, enc.mask)
    if kind == "context":
        ctx = cache["ctx"]
        return ctx.reshape(len(enc), -1).copy()
    if kind == "pooled":
        return cache["code"].copy()
    raise ValueError(f"unknown embedding kind {kind!r}")


def _mean_pairwise(matrix: np.ndarray) -> float:
    n = matrix.shape[0]
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, k=1)
    return float(matrix[iu].mean())


def cluster_metrics(
    member_rows: np.ndarray,
    embeddings: np.ndarray,
    failing_ted: np.ndarray,
    failing_rows: np.ndarray,
) -> tuple[float, float, bool]:
    """Normalized (ED, TED) for one cluster, plus a degenerate-normalizer flag.

    ``member_rows`` and ``failing_rows`` index rows of ``embeddings``;
    ``failing_ted`` is the pairwise tree edit distance matrix over the
    failing set, ordered like ``failing_rows``.
    """
    members = embeddings[member_rows]
    diffs = members[:, None, :] - members[None, :, :]
    emb_pair = np.sqrt((diffs * diffs).sum(-1))
    ed_num = _mean_pairwise(emb_pair)

    failing = embeddings[failing_rows]
    centroid = failing.mean(axis=0)
    ed_den = float(np.sqrt(((failing - centroid) ** 2).sum(axis=1)).mean())

    row_of = {int(r): k for k, r in enumerate(failing_rows)}
    local = [row_of[int(r)] for r in member_rows]
    ted_num = _mean_pairwise(failing_ted[np.ix_(local, local)])
    medoid = int(np.argmin(failing_ted.sum(axis=1)))
    ted_den = float(failing_ted[medoid].mean())

    degenerate = ed_den == 0.0 or ted_den == 0.0
    ed = ed_num / ed_den if ed_den > 0 else 0.0
    ted = ted_num / ted_den if ted_den > 0 else 0.0
    return ed, ted, degenerate


def discover_per_rubric(
    corpus_incorrect: list,
    embeddings: np.ndarray,
    projection: np.ndarray,
    item: int,
    config: ClusterConfig,
    failing_ted_cache: dict | None = None,
) -> ClusterReport:
    """Cluster the submissions failing one rubric item.

    ``corpus_incorrect`` lists the overall-incorrect submissions, aligned
    row-wise with ``embeddings`` and the 2-D ``projection``.  Returns an
    empty report with a note when fewer than ``minpts`` submissions fail the
    item.
    """
    report = ClusterReport(item=item, item_name=RUBRIC_ITEMS[item])
    rows = np.array(
        [k for k, sub in enumerate(corpus_incorrect) if not sub.rubric[item]],
        dtype=np.int64,
    )
    if len(rows) < config.minpts:
        report.note = (
            f"only {len(rows)} submissions fail this item "
            f"(minpts={config.minpts}); nothing to cluster"
        )
        return report

    points = projection[rows]
    if config.epsilon is not None:
        epsilon = config.epsilon
    elif len(rows) > config.minpts:
        epsilon = select_epsilon(points, config.minpts)
    else:
        # exactly minpts points: no k-dist curve; use the max pairwise gap
        diff = points[:, None, :] - points[None, :, :]
        epsilon = float(np.sqrt((diff * diff).sum(-1)).max())
    if epsilon <= 0.0:
        # all projected points coincide; any positive radius joins them
        epsilon = 1.0
    report.epsilon = float(epsilon)

    labels = dbscan(points, epsilon, config.minpts)

    key = tuple(int(r) for r in rows)
    if failing_ted_cache is not None and key in failing_ted_cache:
        failing_ted = failing_ted_cache[key]
    else:
        failing_ted = ted_matrix([corpus_incorrect[int(r)].ast for r in rows])
        if failing_ted_cache is not None:
            failing_ted_cache[key] = failing_ted

    ids = [corpus_incorrect[int(r)].id for r in rows]
    cluster_ids = sorted(set(labels[labels != NOISE]))
    raw = []
    for cid in cluster_ids:
        local = np.nonzero(labels == cid)[0]
        member_rows = rows[local]
        pts = points[local]
        diff = pts[:, None, :] - pts[None, :, :]
        intra = _mean_pairwise(np.sqrt((diff * diff).sum(-1)))
        ed, ted, degenerate = cluster_metrics(
            member_rows, embeddings, failing_ted, rows
        )
        raw.append((intra, tuple(ids[int(i)] for i in local), ed, ted, degenerate))
    raw.sort(key=lambda item_: (item_[0], item_[1]))

    for rank, (intra, members, ed, ted, degenerate) in enumerate(raw, start=1):
        report.clusters.append(
            ClusterInfo(
                members=members,
                ed=ed,
                ted=ted,
                density_rank=rank,
                mean_intra_2d=float(intra),
                selected=rank <= config.top_clusters,
                normalizer_degenerate=degenerate,
            )
        )
    report.noise = tuple(ids[int(i)] for i in np.nonzero(labels == NOISE)[0])
    return report


def annotate_duplicates(reports: list[ClusterReport], threshold: float) -> None:
    """Mark clusters overlapping an earlier cluster with Jaccard > threshold."""
    seen: list[tuple[str, frozenset]] = []
    for report in reports:
        renamed = []
        for idx, cluster in enumerate(report.clusters):
            members = frozenset(cluster.members)
            duplicate_of = None
            for tag, earlier in seen:
                inter = len(members & earlier)
                union = len(members | earlier)
                if union and inter / union > threshold:
                    duplicate_of = tag
                    break
            tag = f"R{report.item}/c{idx}"
            seen.append((tag, members))
            renamed.append(
                ClusterInfo(
                    members=cluster.members,
                    ed=cluster.ed,
                    ted=cluster.ted,
                    density_rank=cluster.density_rank,
                    mean_intra_2d=cluster.mean_intra_2d,
                    selected=cluster.selected,
                    normalizer_degenerate=cluster.normalizer_degenerate,
                    duplicate_of=duplicate_of,
                )
            )
        report.clusters = renamed


@dataclass
class DiscoveryResult:
    reports: list[ClusterReport]
    projection: Projection2D
    incorrect_ids: list[str]
    failed_bitmasks: list[int]


def run_discovery(
    corpus: Corpus,
    params: Code2VecParams,
    enc: EncodedCorpus,
    config: ClusterConfig,
    vocab_hash: str | None = None,
    tsne_seed: int = 0,
    embedding_kind: str = "context",
) -> DiscoveryResult:
    """Full pipeline over the incorrect half of the corpus."""
    embeddings_all = extract_embeddings(params, enc, vocab_hash, embedding_kind)
    row_by_id = {sid: k for k, sid in enumerate(enc.ids)}
    incorrect = corpus.incorrect()
    rows = np.array([row_by_id[s.id] for s in incorrect], dtype=np.int64)
    embeddings = embeddings_all[rows]

    projection = tsne(
        embeddings,
        perplexity=config.tsne_perplexity,
        seed=tsne_seed,
        iters=config.tsne_iters,
    )

    ted_cache: dict = {}
    reports = [
        discover_per_rubric(
            incorrect, embeddings, projection.coords, item, config, ted_cache
        )
        for item in range(N_RUBRIC_ITEMS)
    ]
    annotate_duplicates(reports, config.duplicate_jaccard)

    bitmasks = [
        sum(1 << item for item in range(N_RUBRIC_ITEMS) if not s.rubric[item])
        for s in incorrect
    ]
    return DiscoveryResult(
        reports=reports,
        projection=projection,
        incorrect_ids=[s.id for s in incorrect],
        failed_bitmasks=bitmasks,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def clusters_to_json(reports: list[ClusterReport]) -> str:
    doc = {}
    for report in reports:
        doc[f"R{report.item}"] = [
            {
                "members": list(c.members),
                "ed": c.ed,
                "ted": c.ted,
                "density_rank": c.density_rank,
                "duplicate_of": c.duplicate_of,
            }
            for c in report.clusters
        ]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def projection_csv(result: DiscoveryResult) -> str:
    lines = ["id,x,y,failed_items"]
    for sid, (x, y), bits in zip(
        result.incorrect_ids, result.projection.coords, result.failed_bitmasks
    ):
        lines.append(f"{sid},{float(x)!r},{float(y)!r},{bits}")
    return "\n".join(lines) + "\n"
