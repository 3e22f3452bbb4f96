"""Trainable models: attention path-context classifier and the baselines.

Everything runs on float64 numpy with hand-written backprop and Adam; the
heavy operations are dense matmuls, so the numeric work stays on BLAS.
Training is bitwise deterministic for a fixed seed: initialization, the
validation carve-out and any minibatch shuffling all come from one seeded
generator, and no threading touches the parameter state.

The classifier mirrors the attention architecture it reproduces: per-context
vectors ``tanh(W [s; p; e])`` (no bias, so PAD slots stay exactly zero),
softmax attention pooling into a code vector, and a 2-way softmax readout
over {fail, all-correct}.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Callable

import numpy as np

from .pathctx import PAD, EncodedCorpus, EncodedSubmission


class DegenerateLabels(Exception):
    """Training labels contain only one class."""


@dataclass
class TrainConfig:
    learning_rate: float = 2e-4
    max_epochs: int = 10_000
    patience: int = 400
    batch_size: int | None = None  # None = full set
    seed: int = 0
    d_emb: int = 100
    d_hidden: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    val_fraction: float = 0.125
    svm_lambda: float = 1e-3

    def __post_init__(self):
        if min(self.learning_rate, self.max_epochs, self.patience) <= 0:
            raise ValueError("learning_rate, max_epochs and patience must be positive")
        if min(self.d_emb, self.d_hidden) <= 0:
            raise ValueError("embedding dimensions must be positive")
        if self.patience >= self.max_epochs:
            raise ValueError("patience must be smaller than max_epochs")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must be in (0, 1)")


@dataclass
class Code2VecParams:
    term_emb: np.ndarray  # (n_terminals, d_emb); row 0 (PAD) frozen at zero
    path_emb: np.ndarray  # (n_paths, d_emb); row 0 frozen at zero
    combine: np.ndarray  # (d_hidden, 3*d_emb)
    attention: np.ndarray  # (d_hidden,)
    output: np.ndarray  # (2, d_hidden)


@dataclass
class FcNetParams:
    w1: np.ndarray  # (d_hidden, n_features)
    b1: np.ndarray  # (d_hidden,)
    w2: np.ndarray  # (2, d_hidden)
    b2: np.ndarray  # (2,)


@dataclass
class SvmParams:
    w: np.ndarray  # (n_features,)
    b: np.ndarray  # (1,)


def _clone(params):
    return type(params)(
        **{f.name: getattr(params, f.name).copy() for f in fields(params)}
    )


# ---------------------------------------------------------------------------
# Stable primitives
# ---------------------------------------------------------------------------


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis; strictly positive for finite z."""
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def masked_softmax(z: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax over unmasked entries; all-masked rows come back all-zero."""
    neg = np.where(mask, z, -np.inf)
    zmax = neg.max(axis=-1, keepdims=True)
    zmax = np.where(np.isfinite(zmax), zmax, 0.0)
    e = np.exp(neg - zmax)
    total = e.sum(axis=-1, keepdims=True)
    return np.divide(e, total, out=np.zeros_like(e), where=total > 0)


def cross_entropy(probs_logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy from raw logits (log-sum-exp form)."""
    z = probs_logits
    lse = np.log(np.exp(z - z.max(axis=1, keepdims=True)).sum(axis=1)) + z.max(axis=1)
    return float(np.mean(lse - z[np.arange(len(labels)), labels]))


# ---------------------------------------------------------------------------
# Attention classifier
# ---------------------------------------------------------------------------


def init_code2vec(
    n_terminals: int, n_paths: int, config: TrainConfig, rng: np.random.Generator
) -> Code2VecParams:
    """Uniform(-0.05, 0.05) initialization with PAD rows zeroed."""

    def u(*shape):
        return rng.uniform(-0.05, 0.05, size=shape)

    params = Code2VecParams(
        term_emb=u(n_terminals, config.d_emb),
        path_emb=u(n_paths, config.d_emb),
        combine=u(config.d_hidden, 3 * config.d_emb),
        attention=u(config.d_hidden),
        output=u(2, config.d_hidden),
    )
    params.term_emb[PAD] = 0.0
    params.path_emb[PAD] = 0.0
    return params


def _forward_batch(p: Code2VecParams, contexts: np.ndarray, mask: np.ndarray):
    starts = contexts[..., 0]
    paths = contexts[..., 1]
    ends = contexts[..., 2]
    x = np.concatenate(
        [p.term_emb[starts], p.path_emb[paths], p.term_emb[ends]], axis=-1
    )  # (N, C, 3d)
    ctx = np.tanh(x @ p.combine.T)  # (N, C, h); PAD slots are exactly zero
    att_logits = ctx @ p.attention  # (N, C)
    alpha = masked_softmax(att_logits, mask)
    code = np.einsum("nc,nch->nh", alpha, ctx)  # (N, h)
    logits = code @ p.output.T  # (N, 2)
    return {
        "x": x,
        "ctx": ctx,
        "alpha": alpha,
        "code": code,
        "logits": logits,
        "starts": starts,
        "paths": paths,
        "ends": ends,
        "mask": mask,
    }


def forward(p: Code2VecParams, enc: EncodedSubmission):
    """Single-submission forward pass.

    Returns (context matrix (C, d_hidden), code vector (d_hidden,), grade
    distribution (2,)).  An all-PAD encoding is not an error: attention
    weights are zero, the code vector is zero, and the distribution is the
    uniform [0.5, 0.5].
    """
    cache = _forward_batch(p, enc.contexts[None], enc.mask[None])
    probs = softmax(cache["logits"])[0]
    return cache["ctx"][0], cache["code"][0], probs


def predict_proba(
    p: Code2VecParams, contexts: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    return softmax(_forward_batch(p, contexts, mask)["logits"])


def loss_and_gradients(
    p: Code2VecParams,
    contexts: np.ndarray,
    mask: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, Code2VecParams]:
    """Mean cross-entropy and analytic gradients for every parameter group.

    PAD embedding rows always receive exactly zero gradient, keeping them
    frozen under any optimizer built on the gradients alone.
    """
    n = len(labels)
    if n == 0:
        raise ValueError("batch must be non-empty")
    cache = _forward_batch(p, contexts, mask)
    logits = cache["logits"]
    loss = cross_entropy(logits, labels)

    probs = softmax(logits)
    d_logits = probs
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n  # (N, 2)

    code = cache["code"]
    ctx = cache["ctx"]
    alpha = cache["alpha"]
    x = cache["x"]

    d_output = d_logits.T @ code  # (2, h)
    d_code = d_logits @ p.output  # (N, h)

    d_alpha = np.einsum("nh,nch->nc", d_code, ctx)  # (N, C)
    d_ctx = alpha[..., None] * d_code[:, None, :]  # (N, C, h)

    # softmax backward over the context axis; masked slots have alpha == 0
    inner = (alpha * d_alpha).sum(axis=1, keepdims=True)
    d_att_logits = alpha * (d_alpha - inner)  # (N, C)

    d_attention = np.einsum("nc,nch->h", d_att_logits, ctx)
    d_ctx += d_att_logits[..., None] * p.attention

    d_u = d_ctx * (1.0 - ctx * ctx)  # tanh'
    d_combine = np.einsum("nch,ncd->hd", d_u, x)
    d_x = d_u @ p.combine  # (N, C, 3d)

    d_emb = np.split(d_x, 3, axis=-1)
    d_term = np.zeros_like(p.term_emb)
    d_path = np.zeros_like(p.path_emb)
    np.add.at(d_term, cache["starts"].ravel(), d_emb[0].reshape(-1, p.term_emb.shape[1]))
    np.add.at(d_path, cache["paths"].ravel(), d_emb[1].reshape(-1, p.path_emb.shape[1]))
    np.add.at(d_term, cache["ends"].ravel(), d_emb[2].reshape(-1, p.term_emb.shape[1]))
    d_term[PAD] = 0.0
    d_path[PAD] = 0.0

    grads = Code2VecParams(
        term_emb=d_term,
        path_emb=d_path,
        combine=d_combine,
        attention=d_attention,
        output=d_output,
    )
    return loss, grads


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(
            m={f.name: np.zeros_like(getattr(params, f.name)) for f in fields(params)},
            v={f.name: np.zeros_like(getattr(params, f.name)) for f in fields(params)},
        )


def adam_step(params, grads, state: AdamState, t: int, config: TrainConfig):
    """One bias-corrected Adam update, in place.

    PAD rows stay untouched because their gradients (and hence both moment
    accumulators) are identically zero.
    """
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    b1, b2 = config.beta1, config.beta2
    for f in fields(params):
        g = getattr(grads, f.name)
        m = state.m[f.name]
        v = state.v[f.name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        getattr(params, f.name)[...] -= config.learning_rate * m_hat / (
            np.sqrt(v_hat) + config.eps
        )
    return params, state


# ---------------------------------------------------------------------------
# Shared training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_acc: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)


@dataclass
class TrainedModel:
    params: object
    history: TrainHistory
    best_epoch: int


def _check_two_classes(labels: np.ndarray) -> None:
    if len(np.unique(labels)) < 2:
        raise DegenerateLabels("training labels contain a single class")


def _split_validation(n: int, config: TrainConfig, rng: np.random.Generator):
    perm = rng.permutation(n)
    n_val = max(1, int(round(n * config.val_fraction)))
    if n_val >= n:
        n_val = n - 1
    return perm[n_val:], perm[:n_val]


def _run_training(
    params,
    train_idx: np.ndarray,
    grad_fn: Callable,
    val_fn: Callable,
    config: TrainConfig,
    rng: np.random.Generator,
) -> TrainedModel:
    """Adam + early stopping on validation loss; returns best-epoch params."""
    state = AdamState.for_params(params)
    history = TrainHistory()
    best_loss = np.inf
    best_epoch = -1
    best_params = _clone(params)
    stale = 0
    t = 0
    n = len(train_idx)
    batch = config.batch_size
    for epoch in range(config.max_epochs):
        if batch is None or batch >= n:
            order = [train_idx]
        else:
            perm = rng.permutation(n)
            order = [
                train_idx[perm[i : i + batch]] for i in range(0, n, batch)
            ]
        losses = []
        for chunk in order:
            loss, grads = grad_fn(params, chunk)
            t += 1
            adam_step(params, grads, state, t, config)
            losses.append(loss)
        val_loss, val_acc = val_fn(params)
        history.train_loss.append(float(np.mean(losses)))
        history.val_loss.append(val_loss)
        history.val_acc.append(val_acc)
        if val_loss < best_loss:
            best_loss = val_loss
            best_epoch = epoch
            best_params = _clone(params)
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return TrainedModel(params=best_params, history=history, best_epoch=best_epoch)


# ---------------------------------------------------------------------------
# Model-specific trainers
# ---------------------------------------------------------------------------


def train_code2vec(
    enc: EncodedCorpus, labels, config: TrainConfig
) -> TrainedModel:
    labels = np.asarray(labels, dtype=np.int64)
    _check_two_classes(labels)
    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = _split_validation(len(labels), config, rng)
    params = init_code2vec(enc.n_terminals, enc.n_paths, config, rng)

    contexts, mask = enc.contexts, enc.mask

    def grad_fn(p, idx):
        return loss_and_gradients(p, contexts[idx], mask[idx], labels[idx])

    def val_fn(p):
        probs = predict_proba(p, contexts[val_idx], mask[val_idx])
        loss = float(
            -np.mean(np.log(np.maximum(probs[np.arange(len(val_idx)), labels[val_idx]], 1e-300)))
        )
        acc = float(np.mean(probs.argmax(axis=1) == labels[val_idx]))
        return loss, acc

    return _run_training(params, train_idx, grad_fn, val_fn, config, rng)


def fc_forward_logits(p: FcNetParams, x: np.ndarray) -> np.ndarray:
    hidden = np.tanh(x @ p.w1.T + p.b1)
    return hidden @ p.w2.T + p.b2


def fc_loss_and_gradients(p: FcNetParams, x: np.ndarray, labels: np.ndarray):
    n = len(labels)
    hidden = np.tanh(x @ p.w1.T + p.b1)
    logits = hidden @ p.w2.T + p.b2
    loss = cross_entropy(logits, labels)
    d_logits = softmax(logits)
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n
    d_w2 = d_logits.T @ hidden
    d_b2 = d_logits.sum(axis=0)
    d_hidden = (d_logits @ p.w2) * (1.0 - hidden * hidden)
    d_w1 = d_hidden.T @ x
    d_b1 = d_hidden.sum(axis=0)
    return loss, FcNetParams(w1=d_w1, b1=d_b1, w2=d_w2, b2=d_b2)


def train_fc_nn(features: np.ndarray, labels, config: TrainConfig) -> TrainedModel:
    labels = np.asarray(labels, dtype=np.int64)
    _check_two_classes(labels)
    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = _split_validation(len(labels), config, rng)
    d_in = features.shape[1]
    params = FcNetParams(
        w1=rng.uniform(-0.05, 0.05, size=(config.d_hidden, d_in)),
        b1=np.zeros(config.d_hidden),
        w2=rng.uniform(-0.05, 0.05, size=(2, config.d_hidden)),
        b2=np.zeros(2),
    )

    def grad_fn(p, idx):
        return fc_loss_and_gradients(p, features[idx], labels[idx])

    def val_fn(p):
        logits = fc_forward_logits(p, features[val_idx])
        loss = cross_entropy(logits, labels[val_idx])
        acc = float(np.mean(logits.argmax(axis=1) == labels[val_idx]))
        return loss, acc

    return _run_training(params, train_idx, grad_fn, val_fn, config, rng)


def svm_scores(p: SvmParams, x: np.ndarray) -> np.ndarray:
    return x @ p.w + p.b[0]


def svm_loss_and_gradients(
    p: SvmParams, x: np.ndarray, labels: np.ndarray, lam: float
):
    """L2-regularized mean hinge loss on +-1 targets."""
    n = len(labels)
    y = labels.astype(np.float64) * 2.0 - 1.0
    scores = svm_scores(p, x)
    margins = 1.0 - y * scores
    active = margins > 0
    loss = float(np.mean(np.maximum(margins, 0.0)) + lam * float(p.w @ p.w))
    d_scores = np.where(active, -y, 0.0) / n
    d_w = x.T @ d_scores + 2.0 * lam * p.w
    d_b = np.array([d_scores.sum()])
    return loss, SvmParams(w=d_w, b=d_b)


def train_linear_svm(features: np.ndarray, labels, config: TrainConfig) -> TrainedModel:
    """Linear scorer trained with Adam on the regularized hinge objective.

    The validation quantity driving early stopping is the unregularized
    hinge loss; the decision score is w.x + b (sign gives the class).
    """
    labels = np.asarray(labels, dtype=np.int64)
    _check_two_classes(labels)
    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = _split_validation(len(labels), config, rng)
    params = SvmParams(w=np.zeros(features.shape[1]), b=np.zeros(1))
    lam = config.svm_lambda

    def grad_fn(p, idx):
        return svm_loss_and_gradients(p, features[idx], labels[idx], lam)

    def val_fn(p):
        y = labels[val_idx].astype(np.float64) * 2.0 - 1.0
        margins = 1.0 - y * svm_scores(p, features[val_idx])
        loss = float(np.mean(np.maximum(margins, 0.0)))
        acc = float(np.mean((svm_scores(p, features[val_idx]) > 0) == labels[val_idx]))
        return loss, acc

    return _run_training(params, train_idx, grad_fn, val_fn, config, rng)


# ---------------------------------------------------------------------------
# Majority baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MajorityModel:
    """Constant predictor of the most frequent training label (ties: fail)."""

    label: int

    def predict(self, n: int) -> np.ndarray:
        return np.full(n, self.label, dtype=np.int64)

    def scores(self, n: int) -> np.ndarray:
        return np.full(n, float(self.label))


def majority_baseline(labels) -> MajorityModel:
    labels = np.asarray(labels, dtype=np.int64)
    ones = int(labels.sum())
    zeros = len(labels) - ones
    return MajorityModel(label=1 if ones > zeros else 0)
