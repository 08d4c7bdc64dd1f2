"""Regularised hinge-loss training of agent weights.

``penalty="l2"`` is the support-vector-machine method (squared norm, lambda > 0)
and ``penalty="l1"`` is professional search (absolute norm, sparse weights).
Both are solved by full-batch proximal subgradient descent with best-iterate
tracking; the bias is fitted but never penalised.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import AnswerKey, ObservationMatrix, ShapeError, TrustWeights, encode_binary

PENALTIES = ("l2", "l1")


class NumericError(ArithmeticError):
    """Non-finite values in the training data or iterates."""


@dataclass(frozen=True, eq=False)
class HingeProblem:
    """One binary hinge problem: each row of ``samples`` is a training query
    seen through the signed agent reports, ``targets`` holds +/-1.

    The hinge term is averaged over samples.
    """

    samples: np.ndarray
    targets: np.ndarray
    lam: float
    penalty: str = "l1"
    fit_bias: bool = True

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=float)
        t = np.asarray(self.targets, dtype=float)
        if X.ndim != 2 or t.shape != (X.shape[0],):
            raise ShapeError(f"samples {X.shape} and targets {t.shape} disagree")
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.penalty == "l2" and self.lam == 0:
            raise ValueError("the L2 (support vector machine) penalty needs lambda > 0")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(t))):
            raise NumericError("non-finite entries in the hinge problem")
        if not np.all(np.abs(t) == 1):
            raise ValueError("targets must be +1 or -1")
        X.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "samples", X)
        object.__setattr__(self, "targets", t)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def num_agents(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class SolverConfig:
    max_epochs: int = 2000
    tol: float = 1e-6
    window: int = 50
    # multiplier on the L1 step c / sqrt(t)
    l1_step: float = 1.0


@dataclass(frozen=True)
class SolverReport:
    iterations: int
    final_objective: float
    objective_trace: list[float] = field(repr=False)
    converged: bool


def build_problem(
    matrix: ObservationMatrix,
    key: AnswerKey,
    train: Sequence[int],
    positive: str,
    lam: float,
    penalty: str = "l1",
    **kwargs,
) -> HingeProblem:
    """Samples are the signed columns of the training queries; target +1 iff the truth is ``positive``."""
    train = list(train)
    if not train:
        raise ValueError("the training set is empty")
    X = encode_binary(matrix, positive)[:, train].T
    t = np.array([1.0 if key.entries[q] == positive else -1.0 for q in train])
    return HingeProblem(X, t, lam, penalty, **kwargs)


def lambda_max(problem: HingeProblem) -> float:
    """Largest |hinge gradient| over agents at w = 0, bias = 0 (every sample active)."""
    g = problem.targets @ problem.samples / problem.num_samples
    return float(np.max(np.abs(g))) if problem.num_agents else 0.0


def _reg(W: np.ndarray, penalty: str) -> np.ndarray:
    return (W**2).sum(axis=-1) if penalty == "l2" else np.abs(W).sum(axis=-1)


def _batch_objective(X, t, mask, scale, W, b, lam, penalty):
    margins = t[None, :] * (W @ X.T + b[:, None])
    hinge = (np.maximum(0.0, 1.0 - margins) * mask).sum(axis=1) * scale
    return hinge + lam * _reg(W, penalty)


def objective(problem: HingeProblem, w: TrustWeights) -> float:
    if len(w) != problem.num_agents:
        raise ShapeError(f"{len(w)} weights for a problem with {problem.num_agents} agents")
    W = np.asarray(w.weights, dtype=float)[None, :]
    b = np.array([w.bias])
    mask = np.ones((1, problem.num_samples))
    scale = np.array([1.0 / problem.num_samples])
    return float(
        _batch_objective(problem.samples, problem.targets, mask, scale, W, b, problem.lam, problem.penalty)[0]
    )


def _best_bias(X, t, mask, scale, W):
    """Exact bias minimiser for each row of ``W``: the hinge term is piecewise
    linear in the bias with kinks at ``t_j - s_j``, so one kink attains the minimum.
    On a flat stretch the kink closest to zero wins, which keeps the choice
    independent of rounding in ``s``."""
    s = W @ X.T  # (B, T)
    cand = t[None, :] - s
    h = np.empty_like(cand)
    for c in range(X.shape[0]):
        h[:, c] = (np.maximum(0.0, 1.0 - t[None, :] * (cand[:, c : c + 1] + s)) * mask).sum(axis=1)
    h = np.where(mask > 0, h * scale[:, None], np.inf)
    flat = h <= h.min(axis=1, keepdims=True) + 1e-9
    pick = np.argmin(np.where(flat, np.abs(cand), np.inf), axis=1)
    return cand[np.arange(len(W)), pick]


def train_batch(
    X: np.ndarray,
    t: np.ndarray,
    masks: np.ndarray,
    lam: float | np.ndarray,
    penalty: str,
    config: SolverConfig = SolverConfig(),
    fit_bias: bool = True,
) -> tuple[np.ndarray, np.ndarray, list[SolverReport]]:
    """Train one model per row of ``masks`` (which samples each model sees).

    ``lam`` is a scalar or one value per model. Models share the data but not
    their iterates, so a batch of leave-one-out folds costs one matrix product
    per epoch; each model follows the same iterates as if trained alone and
    drops out of the batch once it stalls.
    """
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    masks = np.atleast_2d(np.asarray(masks, dtype=float))
    B, m_full = masks.shape[0], X.shape[1]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (B,)).copy()
    if penalty == "l2" and np.any(lam <= 0):
        raise ValueError("the L2 penalty needs lambda > 0")
    if np.any(lam < 0):
        raise ValueError("lambda must be non-negative")
    counts = masks.sum(axis=1)
    if np.any(counts < 1):
        raise ValueError("every model needs at least one training sample")
    scale = 1.0 / counts

    # agents absent from every training sample get no gradient and stay at zero
    used = np.flatnonzero(np.any(X != 0, axis=0))
    X = X[:, used]
    m = len(used)

    best_W = np.zeros((B, m))
    best_b = np.zeros(B)
    best_obj = np.full(B, np.inf)
    history = np.empty((config.max_epochs, B))
    converged = np.zeros(B, dtype=bool)
    stopped_at = np.full(B, config.max_epochs)

    # working set: rows still iterating, compacted as models stop
    rows = np.arange(B)
    W, b = np.zeros((B, m)), np.zeros(B)
    wmask, wscale, wlam = masks, scale, lam
    for k in range(1, config.max_epochs + 1):
        margins = t * (W @ X.T + b[:, None])
        viol = (margins < 1.0) * wmask
        obj = (np.maximum(0.0, 1.0 - margins) * wmask).sum(axis=1) * wscale + wlam * _reg(W, penalty)
        if not np.all(np.isfinite(obj)):
            raise NumericError("objective diverged")
        improved = obj < best_obj[rows]
        idx = rows[improved]
        best_obj[idx] = obj[improved]
        best_W[idx] = W[improved]
        best_b[idx] = b[improved]
        history[k - 1] = best_obj

        if k > config.window:
            prev = history[k - 1 - config.window, rows]
            cur = best_obj[rows]
            done = (prev - cur) <= config.tol * np.maximum(np.abs(cur), 1e-12)
            if done.any():
                converged[rows[done]] = True
                stopped_at[rows[done]] = k
                keep = ~done
                rows = rows[keep]
                W, b, viol = W[keep], b[keep], viol[keep]
                wmask, wscale, wlam = wmask[keep], wscale[keep], wlam[keep]
                if not len(rows):
                    break

        coef = viol * t * wscale[:, None]  # minus the hinge subgradient
        slow = config.l1_step / np.sqrt(k)
        if penalty == "l2":
            step = 1.0 / (wlam * k)
            W = (W + step[:, None] * (coef @ X)) / (1.0 + 2.0 * step * wlam)[:, None]
        else:
            W = W + slow * (coef @ X)
            W = np.sign(W) * np.maximum(np.abs(W) - (slow * wlam)[:, None], 0.0)
        if fit_bias:
            # the bias is never penalised, so it keeps the 1/sqrt(t) schedule
            b = b + slow * coef.sum(axis=1)

    # refit the bias exactly at the best weights, then compare with the all-zero weights
    # (the refit is exact for fixed weights, so it is taken unconditionally)
    if fit_bias:
        best_b = _best_bias(X, t, masks, scale, best_W)
        best_obj = _batch_objective(X, t, masks, scale, best_W, best_b, lam, penalty)
    zeros = np.zeros_like(best_W)
    zero_b = _best_bias(X, t, masks, scale, zeros) if fit_bias else np.zeros(B)
    obj_zero = _batch_objective(X, t, masks, scale, zeros, zero_b, lam, penalty)
    # rounding can leave ~1e-16 weights that "beat" zero by as much; prefer exact zeros
    take = obj_zero <= best_obj + 1e-12
    best_W[take] = 0.0
    best_b = np.where(take, zero_b, best_b)
    best_obj = np.where(take, obj_zero, best_obj)

    W_out = np.zeros((B, m_full))
    W_out[:, used] = best_W

    reports = []
    for r in range(B):
        n = int(stopped_at[r])
        trace = history[:n, r].tolist()
        trace.append(float(best_obj[r]))
        reports.append(SolverReport(n, float(best_obj[r]), trace, bool(converged[r])))
    return W_out, best_b, reports


def train_hinge(
    problem: HingeProblem, config: SolverConfig = SolverConfig()
) -> tuple[TrustWeights, SolverReport]:
    W, b, reports = train_batch(
        problem.samples,
        problem.targets,
        np.ones((1, problem.num_samples)),
        problem.lam,
        problem.penalty,
        config,
        fit_bias=problem.fit_bias,
    )
    return TrustWeights(W[0], float(b[0]), problem.penalty), reports[0]


def support(w: TrustWeights, eps: float = 1e-8) -> set[int]:
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return {int(i) for i in np.flatnonzero(np.abs(w.weights) > eps)}
