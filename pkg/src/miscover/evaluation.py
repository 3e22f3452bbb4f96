"""Resampled train/test evaluation of the four graders.

Each run draws a fresh unstratified 80/20 split, trains the majority, SVM,
fully connected and attention models on the same training ids, scores the
held-out ids, and records accuracy / precision / recall / AUC / F1 with the
all-rubric-items-correct class as positive.  Results are averaged over runs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus
from .nnet import (
    TrainConfig,
    fc_forward_logits,
    majority_baseline,
    predict_proba,
    softmax,
    svm_scores,
    train_code2vec,
    train_fc_nn,
    train_linear_svm,
)
from .pathctx import TfidfFeaturizer, build_vocab, encode_corpus, extract_paths

MODEL_NAMES = ("majority", "svm", "nn", "code2vec")


class CorpusTooSmall(Exception):
    """Too few submissions to resample a meaningful split."""


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    n_runs: int = 50
    base_seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")


def resample_split(
    n: int, spec: SplitSpec, run_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint, exhaustive train/test index split seeded by (base_seed, run)."""
    if n < 10:
        raise CorpusTooSmall(f"need at least 10 submissions, got {n}")
    rng = np.random.default_rng([spec.base_seed, run_index])
    perm = rng.permutation(n)
    n_train = int(np.floor(n * spec.train_fraction))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


@dataclass(frozen=True)
class MetricRow:
    accuracy: float
    precision: float
    recall: float
    auc: float
    f1: float
    auc_defined: bool = True

    def as_tuple(self):
        return (self.accuracy, self.precision, self.recall, self.auc, self.f1)


def _auc_rank_statistic(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC with half credit for ties, via average ranks."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def binary_metrics(scores, labels, threshold: float = 0.5) -> MetricRow:
    """Threshold metrics plus rank-statistic AUC for one scored test set.

    Positive class is "all rubric items correct".  Precision and recall are
    0 when their denominators are 0 (the majority-baseline row).  With only
    one class present the AUC is undefined and reported as 0.5 with
    ``auc_defined=False``.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(scores) == 0:
        raise ValueError("metrics need at least one example")
    preds = (scores >= threshold).astype(np.int64)
    tp = int(((preds == 1) & (labels == 1)).sum())
    fp = int(((preds == 1) & (labels == 0)).sum())
    fn = int(((preds == 0) & (labels == 1)).sum())
    accuracy = float((preds == labels).mean())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    if labels.min() == labels.max():
        return MetricRow(accuracy, precision, recall, 0.5, f1, auc_defined=False)
    return MetricRow(
        accuracy, precision, recall, _auc_rank_statistic(scores, labels), f1
    )


# ---------------------------------------------------------------------------
# The 50-run comparison harness
# ---------------------------------------------------------------------------


@dataclass
class ComparisonResult:
    rows: list[tuple[str, int, MetricRow]] = field(default_factory=list)
    splits: list[tuple[int, np.ndarray, np.ndarray]] = field(default_factory=list)

    def summary(self) -> dict[str, MetricRow]:
        out: dict[str, MetricRow] = {}
        for name in MODEL_NAMES:
            rows = [m for model, _, m in self.rows if model == name]
            means = np.mean([r.as_tuple() for r in rows], axis=0)
            out[name] = MetricRow(*map(float, means))
        return out

    def per_run(self, name: str) -> list[MetricRow]:
        return [m for model, _, m in self.rows if model == name]


def run_comparison(
    corpus: Corpus,
    spec: SplitSpec,
    train_config: TrainConfig,
    max_length: int = 8,
    max_width: int = 2,
    max_contexts: int = 100,
    min_count: int = 1,
    threshold: float = 0.5,
) -> ComparisonResult:
    """Train and score all four models on each resampled split.

    Path contexts are extracted once; vocabularies and TF-IDF statistics are
    fitted on each run's training split only.  Per-run seeds derive from the
    split spec's base seed so the whole table is reproducible.
    """
    labels = np.array(corpus.labels(), dtype=np.int64)
    if labels.min() == labels.max():
        from .nnet import DegenerateLabels

        raise DegenerateLabels("comparison needs both classes in the corpus")
    asts = [s.ast for s in corpus.submissions]
    ids = corpus.ids()
    context_sets = [extract_paths(a, max_length, max_width) for a in asts]

    result = ComparisonResult()
    for run in range(spec.n_runs):
        train_idx, test_idx = resample_split(len(corpus), spec, run)
        result.splits.append((run, train_idx, test_idx))
        y_train, y_test = labels[train_idx], labels[test_idx]

        run_config = TrainConfig(
            **{
                **train_config.__dict__,
                "seed": int(
                    np.random.default_rng([spec.base_seed, run, 1]).integers(2**31)
                ),
            }
        )

        # majority
        scores = majority_baseline(y_train).scores(len(test_idx))
        result.rows.append(
            ("majority", run, binary_metrics(scores, y_test, threshold))
        )

        # TF-IDF features for both baselines, fitted on the training split
        feat = TfidfFeaturizer().fit([asts[i] for i in train_idx])
        x_train = feat.transform([asts[i] for i in train_idx])
        x_test = feat.transform([asts[i] for i in test_idx])

        svm = train_linear_svm(x_train, y_train, run_config)
        result.rows.append(
            (
                "svm",
                run,
                binary_metrics(svm_scores(svm.params, x_test), y_test, 0.0),
            )
        )

        nn = train_fc_nn(x_train, y_train, run_config)
        nn_probs = softmax(fc_forward_logits(nn.params, x_test))[:, 1]
        result.rows.append(("nn", run, binary_metrics(nn_probs, y_test, threshold)))

        # attention classifier on path contexts; vocabulary from train only
        vocab = build_vocab([context_sets[i] for i in train_idx], min_count)
        enc = encode_corpus(ids, context_sets, vocab, max_contexts)
        train_enc = _subset(enc, train_idx)
        c2v = train_code2vec(train_enc, y_train, run_config)
        probs = predict_proba(
            c2v.params, enc.contexts[test_idx], enc.mask[test_idx]
        )[:, 1]
        result.rows.append(
            ("code2vec", run, binary_metrics(probs, y_test, threshold))
        )
    return result


def _subset(enc, idx):
    from .pathctx import EncodedCorpus

    return EncodedCorpus(
        ids=[enc.ids[i] for i in idx],
        contexts=enc.contexts[idx],
        mask=enc.mask[idx],
        truncated=enc.truncated[idx],
        vocab_hash=enc.vocab_hash,
        n_terminals=enc.n_terminals,
        n_paths=enc.n_paths,
    )


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

_METRIC_FIELDS = ("accuracy", "precision", "recall", "auc", "f1")


def metrics_csv(result: ComparisonResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("model", "run") + _METRIC_FIELDS)
    for model, run, row in result.rows:
        writer.writerow((model, run) + tuple(repr(v) for v in row.as_tuple()))
    return buf.getvalue()


def summary_csv(result: ComparisonResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("model",) + _METRIC_FIELDS)
    for model, row in result.summary().items():
        writer.writerow((model,) + tuple(repr(v) for v in row.as_tuple()))
    return buf.getvalue()


def splits_csv(result: ComparisonResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("run", "role", "indices"))
    for run, train_idx, test_idx in result.splits:
        writer.writerow((run, "train", " ".join(map(str, train_idx))))
        writer.writerow((run, "test", " ".join(map(str, test_idx))))
    return buf.getvalue()
