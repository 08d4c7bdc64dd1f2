"""Trust assignment without an optimiser: majority votes, two-coin EM,
accuracy-weighted averaging and exponential weights."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    MISSING,
    AnswerKey,
    FusionResult,
    ObservationMatrix,
    TrustWeights,
    binary_scores,
    encode_binary,
    weighted_vote,
)

EM_CLAMP = (0.01, 0.99)


@dataclass(frozen=True, eq=False)
class AgentAccuracy:
    q: np.ndarray
    answered: np.ndarray


@dataclass(frozen=True, eq=False)
class TwoCoinModel:
    """Fitted two-coin model.

    alpha: per-agent P(report positive | truth positive).
    beta: per-agent P(report negative | truth negative).
    posteriors: per-query P(truth positive | reports).
    log_likelihood: marginal log-likelihood after each EM iteration.
    """

    alpha: np.ndarray
    beta: np.ndarray
    prevalence: float
    posteriors: np.ndarray
    log_likelihood: tuple[float, ...]
    positive: str
    negative: str
    iterations: int
    flipped: bool = False


def _check_train(matrix: ObservationMatrix, key: AnswerKey, train: Sequence[int]) -> list[int]:
    train = sorted(int(q) for q in train)
    if not train:
        raise ValueError("the training set is empty")
    missing = [q for q in train if q not in key.entries]
    if missing:
        raise ValueError(f"training queries {missing[:5]} have no known answer")
    if train[0] < 0 or train[-1] >= matrix.num_queries:
        raise ValueError("training query index out of range")
    return train


def agent_accuracy(matrix: ObservationMatrix, key: AnswerKey, train: Sequence[int]) -> AgentAccuracy:
    """Fraction of answered training queries each agent got right (0 if none answered)."""
    train = _check_train(matrix, key, train)
    codes = matrix.codes[:, train]
    truth = key.codes(train, matrix.alphabet)
    answered = (codes != MISSING).sum(axis=1)
    correct = (codes == truth[None, :]).sum(axis=1)
    q = np.divide(correct, answered, out=np.zeros(matrix.num_agents), where=answered > 0)
    return AgentAccuracy(q, answered)


def majority_votes(matrix: ObservationMatrix) -> tuple[TrustWeights, FusionResult]:
    if matrix.num_agents == 0:
        raise ValueError("majority votes needs at least one agent")
    w = TrustWeights.uniform(matrix.num_agents, "majority")
    return w, weighted_vote(matrix, w)


def weighted_averaging(
    matrix: ObservationMatrix, key: AnswerKey, train: Sequence[int]
) -> TrustWeights:
    q = agent_accuracy(matrix, key, train).q
    total = q.sum()
    if total == 0:
        return TrustWeights.uniform(matrix.num_agents, "weighted_avg")
    return TrustWeights(q / total, 0.0, "weighted_avg")


def default_eta(num_agents: int, num_train: int) -> float:
    """Regret-optimal Hedge rate for losses in [0, 1]."""
    return math.sqrt(8.0 * math.log(num_agents) / num_train)


def exponential_weighted(
    matrix: ObservationMatrix,
    key: AnswerKey,
    train: Sequence[int],
    eta: float | None = None,
) -> TrustWeights:
    """Hedge over agents with 0/1 loss, one round per training query in index order.

    Agents that skip a query are left untouched in that round.
    """
    train = _check_train(matrix, key, train)
    if eta is None:
        eta = default_eta(matrix.num_agents, len(train))
    if eta < 0 or not math.isfinite(eta):
        raise ValueError(f"eta must be a finite non-negative number, got {eta}")
    # work in log space so long training runs cannot underflow
    log_v = np.zeros(matrix.num_agents)
    truth = key.codes(train, matrix.alphabet)
    for j, t in zip(train, truth):
        col = matrix.codes[:, j]
        wrong = (col != MISSING) & (col != t)
        log_v = log_v - eta * wrong
    v = np.exp(log_v - log_v.max())
    return TrustWeights(v / v.sum(), 0.0, "exp_weights")


def _binary_view(matrix: ObservationMatrix, positive: str | None) -> tuple[str, str]:
    labels = matrix.alphabet.labels
    if positive is None:
        if len(labels) != 2:
            raise ValueError("EM on a non-binary alphabet needs a positive label")
        positive = labels[1]
    matrix.alphabet.index(positive)
    rest = [lab for lab in labels if lab != positive]
    # on a multiclass alphabet the "negative" is the first remaining label; it is
    # only used to name the complement class in score vectors
    return positive, rest[0]


def _e_step(pos, neg, alpha, beta, prevalence):
    """Log joint of (reports, truth) for both truth values, per query."""
    la, l1a = np.log(alpha), np.log1p(-alpha)
    lb, l1b = np.log(beta), np.log1p(-beta)
    log_a = math.log(prevalence) + la @ pos + l1a @ neg
    log_b = math.log1p(-prevalence) + lb @ neg + l1b @ pos
    ll = np.logaddexp(log_a, log_b)
    return np.exp(log_a - ll), float(ll.sum())


def _m_step(pos, neg, mu):
    lo, hi = EM_CLAMP
    responded = pos + neg
    # unanswered agents keep the uninformative value 0.5
    num_a, den_a = pos @ mu, responded @ mu
    num_b, den_b = neg @ (1 - mu), responded @ (1 - mu)
    alpha = np.divide(num_a, den_a, out=np.full(len(num_a), 0.5), where=den_a > 0)
    beta = np.divide(num_b, den_b, out=np.full(len(num_b), 0.5), where=den_b > 0)
    prevalence = float(np.clip(mu.mean(), lo, hi)) if len(mu) else 0.5
    return np.clip(alpha, lo, hi), np.clip(beta, lo, hi), prevalence


def em_infer(
    matrix: ObservationMatrix,
    positive: str | None = None,
    max_iters: int = 500,
    tol: float = 1e-6,
) -> tuple[TwoCoinModel, FusionResult]:
    """Two-coin EM over the binary view ``positive`` vs. everything else.

    Only observed (agent, query) pairs enter the likelihood. Posteriors start
    from the smoothed per-query vote fraction; the run stops once the
    log-likelihood gains less than ``tol`` or after ``max_iters`` iterations.
    If the fit lands in the mirrored solution (mean ``alpha + beta`` below 1)
    the labelling is flipped, which leaves the likelihood unchanged.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    positive, negative = _binary_view(matrix, positive)
    signed = encode_binary(matrix, positive)
    pos = (signed > 0).astype(float)
    neg = (signed < 0).astype(float)

    n_resp = pos.sum(axis=0) + neg.sum(axis=0)
    frac = np.divide(pos.sum(axis=0), n_resp, out=np.full(matrix.num_queries, 0.5), where=n_resp > 0)
    mu = np.clip(frac, *EM_CLAMP)

    trace: list[float] = []
    iters = 0
    for iters in range(1, max_iters + 1):
        alpha, beta, prevalence = _m_step(pos, neg, mu)
        mu, ll = _e_step(pos, neg, alpha, beta, prevalence)
        trace.append(ll)
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            break

    flipped = bool(np.mean(alpha + beta) < 1)
    if flipped:
        alpha, beta = 1 - beta, 1 - alpha
        prevalence = 1 - prevalence
        mu = 1 - mu

    model = TwoCoinModel(
        alpha, beta, prevalence, mu, tuple(trace), positive, negative, iters, flipped
    )
    return model, em_fusion(model, matrix)


def em_fusion(model: TwoCoinModel, matrix: ObservationMatrix) -> FusionResult:
    """Predict ``positive`` where the posterior exceeds 1/2.

    The signed score ``2 * posterior - 1`` is lifted exactly like a binary
    fused score, so an exact 1/2 falls to the alphabet-smaller label.
    """
    queries = list(range(matrix.num_queries))
    score = 2.0 * model.posteriors - 1.0
    return FusionResult.from_scores(
        queries, binary_scores(score, model.positive, matrix.alphabet), matrix.alphabet
    )
