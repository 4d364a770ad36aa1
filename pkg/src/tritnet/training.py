"""Losses, analytic gradients and the minibatch training loop.

The total objective for a ternary network is

    L = L_task + lambda(t) * R_commit + beta * R_sparse,

where L_task is measured on GroupSum scores (mean squared error against
a one-hot target by default, or softmax cross-entropy), R_commit is the
mean squared distance of every neuron's truth-table values from the
trit lattice, and R_sparse is the mean L1 norm of every neuron's
orthogonal-basis spectrum. The commitment weight follows the ramp
lambda(t) = lambda_max * (t / T)^gamma, evaluated at every step, so
early training explores freely and late training is pushed onto the
lattice.

Gradients are computed in closed form (reverse mode through the layers)
rather than by an autodiff framework. The conventions at the kinks:
clip'(x) is 1 on the closed interval [-1, 1] and 0 outside, the squared
lattice distance uses its left derivative at the breakpoints +-0.5, and
sign(0) = 0 in the L1 term.

The binary baseline trains through the same loop with softmax
cross-entropy only; it has no lattice to commit to.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra, fourier
from .network import (
    BinaryNetwork,
    TernaryNetwork,
    binary_gate_relaxation,
    group_sum,
    softmax,
)


class NumericalFailure(RuntimeError):
    """A loss or gradient stopped being finite; training aborts hard.

    Carries the step index at which the failure was detected.
    """

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    steps: int
    batch_size: int = 100
    lr: float = 0.01
    lambda_max: float = 0.1
    gamma: float = 2.0
    beta: float = 0.0
    loss: str = "mse"
    seed: int = 0
    eval_every: int = 500

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lambda_max < 0:
            raise ValueError(f"lambda_max must be >= 0, got {self.lambda_max}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.loss not in ("mse", "ce"):
            raise ValueError(f"loss must be 'mse' or 'ce', got {self.loss!r}")


def lambda_schedule(t: float, cfg: TrainConfig) -> float:
    """Commitment weight at step t of cfg.steps, the power ramp."""
    if cfg.steps == 0:
        return 0.0
    frac = min(max(t / cfg.steps, 0.0), 1.0)
    return cfg.lambda_max * frac**cfg.gamma


def task_loss(scores: np.ndarray, targets: np.ndarray, kind: str = "mse") -> float:
    """Classification loss on GroupSum scores.

    mse: mean over the batch of the mean over classes of the squared
    difference between the raw score vector and the one-hot target.
    ce: mean softmax cross-entropy.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    targets = np.atleast_1d(np.asarray(targets))
    n, k = scores.shape
    if targets.shape != (n,):
        raise ValueError(f"expected {n} targets, got shape {targets.shape}")
    if targets.min() < 0 or targets.max() >= k:
        raise ValueError(f"target out of range [0, {k - 1}]")
    if kind == "mse":
        onehot = np.zeros_like(scores)
        onehot[np.arange(n), targets] = 1.0
        return float(((scores - onehot) ** 2).mean())
    if kind == "ce":
        shifted = scores - scores.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        return float((logz - shifted[np.arange(n), targets]).mean())
    raise ValueError(f"unknown loss kind {kind!r}")


def task_loss_grad(scores: np.ndarray, targets: np.ndarray, kind: str) -> np.ndarray:
    """dL_task/dscores for a batch, matching `task_loss` exactly."""
    n, k = scores.shape
    onehot = np.zeros_like(scores)
    onehot[np.arange(n), targets] = 1.0
    if kind == "mse":
        return 2.0 * (scores - onehot) / (n * k)
    if kind == "ce":
        return (softmax(scores) - onehot) / n
    raise ValueError(f"unknown loss kind {kind!r}")


def _lattice_nearest_left(t: np.ndarray) -> np.ndarray:
    """Nearest trit as used by the distance gradient.

    Continuous from the left: exactly at +-0.5 the lower lattice cell
    wins, which realizes the left derivative of the squared distance.
    """
    return np.clip(np.ceil(t - 0.5), -1.0, 1.0)


def _layer_tables(net: TernaryNetwork) -> list[np.ndarray]:
    return [w @ algebra.VANDERMONDE.T for w in net.coeffs]


def commitment_loss(net: TernaryNetwork) -> float:
    """Mean squared lattice distance of all truth-table values.

    Per neuron this is (1/9) * sum_g dist(t_g, {-1,0,+1})^2 with t the
    polynomial's values on the input grid; the result is averaged over
    all neurons of the network.
    """
    total = 0.0
    for tbl in _layer_tables(net):
        d = np.minimum(np.abs(tbl + 1.0), np.minimum(np.abs(tbl), np.abs(tbl - 1.0)))
        total += float((d * d).sum())
    return total / (9.0 * net.n_neurons)


def commitment_grads(net: TernaryNetwork) -> list[np.ndarray]:
    """Gradient of `commitment_loss` with respect to the coefficients."""
    scale = 1.0 / (9.0 * net.n_neurons)
    grads = []
    for w in net.coeffs:
        tbl = w @ algebra.VANDERMONDE.T
        g = 2.0 * (tbl - _lattice_nearest_left(tbl))
        grads.append(scale * (g @ algebra.VANDERMONDE))
    return grads


def fourier_l1_loss(net: TernaryNetwork) -> float:
    """Mean L1 spectrum mass per neuron, the sparsity regularizer."""
    total = 0.0
    for w in net.coeffs:
        total += float(np.abs(w @ fourier.MONOMIAL_TO_FOURIER.T).sum())
    return total / net.n_neurons


def fourier_l1_grads(net: TernaryNetwork) -> list[np.ndarray]:
    """Subgradient of `fourier_l1_loss`, with sign(0) = 0."""
    scale = 1.0 / net.n_neurons
    grads = []
    for w in net.coeffs:
        s = np.sign(w @ fourier.MONOMIAL_TO_FOURIER.T)
        grads.append(scale * (s @ fourier.MONOMIAL_TO_FOURIER))
    return grads


def _forward_cached(net: TernaryNetwork, x: np.ndarray):
    """Forward pass keeping parents and pre-clip values for backprop."""
    h = np.asarray(x, dtype=float)
    cache = []
    for (s, t), w in zip(net.conn.layers, net.coeffs):
        a, b = h[:, s], h[:, t]
        u = algebra.eval_poly_many(w, a, b)
        h = np.clip(u, -1.0, 1.0)
        cache.append((a, b, u))
    scores = group_sum(h, net.groupsum)
    return cache, scores


def total_loss(net: TernaryNetwork, x, y, lam: float, cfg: TrainConfig) -> float:
    """Task loss plus weighted commitment and sparsity terms."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    _, scores = _forward_cached(net, x)
    loss = task_loss(scores, y, cfg.loss)
    if lam != 0.0:
        loss += lam * commitment_loss(net)
    if cfg.beta != 0.0:
        loss += cfg.beta * fourier_l1_loss(net)
    return loss


def _scatter_to_parents(gh_shape, s, t, ga, gb):
    """Accumulate parent-value gradients back onto the previous layer."""
    n, prev = gh_shape
    base = np.arange(n)[:, None] * prev
    flat = np.concatenate([(base + s).ravel(), (base + t).ravel()])
    vals = np.concatenate([ga.ravel(), gb.ravel()])
    return np.bincount(flat, weights=vals, minlength=n * prev).reshape(n, prev)


def backward(net: TernaryNetwork, x, y, lam: float, cfg: TrainConfig):
    """Analytic gradient of the total loss. Returns (loss, grads).

    grads is a list of per-layer arrays shaped like net.coeffs.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y))
    cache, scores = _forward_cached(net, x)
    loss = task_loss(scores, y, cfg.loss)

    k, tau = net.groupsum.k, net.groupsum.tau
    gscores = task_loss_grad(scores, y, cfg.loss)
    group = net.widths[-1] // k
    gh = np.repeat(gscores, group, axis=1) / tau

    grads = [np.zeros_like(w) for w in net.coeffs]
    for l in range(len(net.widths) - 1, -1, -1):
        a, b, u = cache[l]
        gu = gh * ((u >= -1.0) & (u <= 1.0))
        m = np.stack(
            [np.ones_like(a), a, b, a * b, a * a, b * b,
             a * a * b, a * b * b, a * a * b * b],
            axis=2,
        )
        grads[l] = np.einsum("nw,nwk->wk", gu, m)
        if l > 0:
            da, db = algebra.poly_input_grads(net.coeffs[l], a, b)
            s, t = net.conn.layers[l]
            prev = net.widths[l - 1]
            gh = _scatter_to_parents((x.shape[0], prev), s, t, gu * da, gu * db)

    if lam != 0.0:
        loss += lam * commitment_loss(net)
        for g, cg in zip(grads, commitment_grads(net)):
            g += lam * cg
    if cfg.beta != 0.0:
        loss += cfg.beta * fourier_l1_loss(net)
        for g, fg in zip(grads, fourier_l1_grads(net)):
            g += cfg.beta * fg
    return loss, grads


def _forward_binary_cached(net: BinaryNetwork, x: np.ndarray):
    h = np.asarray(x, dtype=float)
    cache = []
    for (s, t), logit in zip(net.conn.layers, net.logits):
        p = softmax(logit)
        a, b = h[:, s], h[:, t]
        out = np.zeros_like(a)
        for k in range(16):
            out += p[:, k] * binary_gate_relaxation(k, a, b)
        cache.append((a, b, p))
        h = out
    scores = group_sum(h, net.groupsum)
    return cache, scores


#: Bilinear coefficients (c0, c1, c2, c3) of each relaxed Boolean gate,
#: g_k(a, b) = c0 + c1 a + c2 b + c3 ab. Used for input derivatives.
GATE_BILINEAR = np.array(
    [
        [0, 0, 0, 0], [0, 0, 0, 1], [0, 1, 0, -1], [0, 1, 0, 0],
        [0, 0, 1, -1], [0, 0, 1, 0], [0, 1, 1, -2], [0, 1, 1, -1],
        [1, -1, -1, 1], [1, -1, -1, 2], [1, 0, -1, 0], [1, 0, -1, 1],
        [1, -1, 0, 0], [1, -1, 0, 1], [1, 0, 0, -1], [1, 0, 0, 0],
    ],
    dtype=float,
)


def backward_binary(net: BinaryNetwork, x, y, cfg: TrainConfig):
    """Analytic cross-entropy gradient for the baseline logits."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y))
    cache, scores = _forward_binary_cached(net, x)
    loss = task_loss(scores, y, cfg.loss)

    k, tau = net.groupsum.k, net.groupsum.tau
    gscores = task_loss_grad(scores, y, cfg.loss)
    group = net.widths[-1] // k
    gh = np.repeat(gscores, group, axis=1) / tau

    grads = [np.zeros_like(w) for w in net.logits]
    for l in range(len(net.widths) - 1, -1, -1):
        a, b, p = cache[l]
        # dL/dp_k per neuron, then through the softmax Jacobian
        gp = np.stack(
            [(gh * binary_gate_relaxation(k_, a, b)).sum(axis=0) for k_ in range(16)],
            axis=1,
        )
        inner = (gp * p).sum(axis=1, keepdims=True)
        grads[l] = p * (gp - inner)
        if l > 0:
            q = p @ GATE_BILINEAR  # blended bilinear coefficients
            da = q[:, 1] + q[:, 3] * b
            db = q[:, 2] + q[:, 3] * a
            s, t = net.conn.layers[l]
            prev = net.widths[l - 1]
            gh = _scatter_to_parents((x.shape[0], prev), s, t, gh * da, gh * db)
    return loss, grads


@dataclass
class AdamState:
    """First and second moment accumulators plus the step counter."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def init(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            t=0,
        )


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def adam_step(params, grads, state: AdamState, lr: float):
    """One bias-corrected Adam update, applied to params in place."""
    state.t += 1
    b1t = 1.0 - ADAM_BETA1**state.t
    b2t = 1.0 - ADAM_BETA2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        p -= lr * (m / b1t) / (np.sqrt(v / b2t) + ADAM_EPS)
    return params, state


def _soft_accuracy(net, x, y) -> float:
    if isinstance(net, TernaryNetwork):
        _, scores = _forward_cached(net, x)
    else:
        _, scores = _forward_binary_cached(net, x)
    return float((scores.argmax(axis=1) == y).mean())


def train(net, data, cfg: TrainConfig, eval_data=None):
    """Minibatch training loop. Returns (net, history).

    `data` is an (x, y) pair of encoded inputs and integer labels;
    `eval_data`, if given, is a held-out pair scored every
    cfg.eval_every steps. `net` is updated in place and also returned.
    History is a list of per-step dicts; rows that carry evaluation
    metrics gain train_acc/eval_acc keys. With cfg.steps == 0 the
    network is returned untouched with an empty history.

    Any non-finite loss or parameter aborts with NumericalFailure.
    """
    x, y = data
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y))
    if eval_data is not None:
        eval_data = (np.atleast_2d(np.asarray(eval_data[0], dtype=float)),
                     np.atleast_1d(np.asarray(eval_data[1])))
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"{x.shape[0]} inputs but {y.shape[0]} labels")
    ternary = isinstance(net, TernaryNetwork)
    params = net.coeffs if ternary else net.logits
    state = AdamState.init(params)
    rng = np.random.default_rng(cfg.seed)
    history: list[dict] = []
    n = x.shape[0]
    for step in range(cfg.steps):
        idx = rng.integers(0, n, size=min(cfg.batch_size, n))
        xb, yb = x[idx], y[idx]
        if ternary:
            lam = lambda_schedule(step, cfg)
            loss, grads = backward(net, xb, yb, lam, cfg)
        else:
            lam = 0.0
            loss, grads = backward_binary(net, xb, yb, cfg)
        if not np.isfinite(loss):
            raise NumericalFailure(step, f"loss became {loss!r}")
        adam_step(params, grads, state, cfg.lr)
        if not all(np.isfinite(p).all() for p in params):
            raise NumericalFailure(step, "parameters became non-finite")
        row = {"step": step, "loss": loss}
        if ternary:
            row["lambda"] = lam
            row["commit_loss"] = commitment_loss(net)
        due = (step + 1) % cfg.eval_every == 0 or step == cfg.steps - 1
        if due:
            row["train_acc"] = _soft_accuracy(net, x[:2000], y[:2000])
            if eval_data is not None:
                row["eval_acc"] = _soft_accuracy(net, eval_data[0], eval_data[1])
        history.append(row)
    return net, history
