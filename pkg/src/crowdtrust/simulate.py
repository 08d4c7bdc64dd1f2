"""Synthetic crowds and brute-force oracles.

Random streams come from numpy's ``SeedSequence`` / PCG64. Child ``0`` of the
scenario seed draws the true labels and child ``i + 1`` drives agent ``i``, so
appending agents never changes the data of existing ones. Every agent draws
the same number of variates regardless of outcomes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import MISSING, AnswerKey, LabelAlphabet, ObservationMatrix, TrustWeights

BINARY_LABELS = ("irrelevant", "relevant")
EXAM_LABELS = ("A", "B", "C", "D")
TREC_PARTICIPATION = 26 / 394


@dataclass(frozen=True, eq=False)
class CrowdScenario:
    """Generative description of a crowd.

    ``reliability[i]`` is the probability agent ``i`` reports the true label
    when it responds; wrong reports are uniform over the other labels.
    ``participation[i]`` is the probability it responds to a given query.
    """

    num_agents: int
    num_queries: int
    alphabet: LabelAlphabet
    reliability: np.ndarray
    participation: np.ndarray
    seed: int = 0
    truth: tuple[str, ...] | None = None

    def __post_init__(self):
        m = self.num_agents
        rel = np.broadcast_to(np.asarray(self.reliability, dtype=float), (m,)).copy()
        part = np.broadcast_to(np.asarray(self.participation, dtype=float), (m,)).copy()
        if m < 1 or self.num_queries < 1:
            raise ValueError("a scenario needs at least one agent and one query")
        if not np.all((rel >= 0) & (rel <= 1)):
            raise ValueError("reliabilities must lie in [0, 1]")
        if not np.all((part > 0) & (part <= 1)):
            raise ValueError("participation rates must lie in (0, 1]")
        if self.truth is not None:
            if len(self.truth) != self.num_queries:
                raise ValueError("truth must give one label per query")
            for lab in self.truth:
                self.alphabet.index(lab)
        object.__setattr__(self, "reliability", rel)
        object.__setattr__(self, "participation", part)


def _streams(seed: int, m: int) -> tuple[np.random.Generator, list[np.random.Generator]]:
    children = np.random.SeedSequence(seed).spawn(m + 1)
    return np.random.default_rng(children[0]), [np.random.default_rng(c) for c in children[1:]]


def generate(scenario: CrowdScenario) -> tuple[ObservationMatrix, AnswerKey]:
    m, n, k = scenario.num_agents, scenario.num_queries, scenario.alphabet.size
    truth_rng, agent_rngs = _streams(scenario.seed, m)
    if scenario.truth is None:
        truth = truth_rng.integers(0, k, size=n)
    else:
        truth = np.array([scenario.alphabet.index(t) for t in scenario.truth])

    codes = np.full((m, n), MISSING, dtype=np.int64)
    for i, rng in enumerate(agent_rngs):
        responds = rng.random(n) < scenario.participation[i]
        correct = rng.random(n) < scenario.reliability[i]
        # shift past the true label so wrong answers are uniform over the rest
        wrong = rng.integers(0, k - 1, size=n)
        wrong = wrong + (wrong >= truth)
        row = np.where(correct, truth, wrong)
        codes[i] = np.where(responds, row, MISSING)

    labels = scenario.alphabet.labels
    key = AnswerKey({j: labels[t] for j, t in enumerate(truth)})
    return ObservationMatrix(codes, scenario.alphabet), key


def generate_two_coin(
    alpha: Sequence[float],
    beta: Sequence[float],
    num_queries: int,
    prevalence: float = 0.5,
    participation: float = 1.0,
    seed: int = 0,
    positive: str = "relevant",
    negative: str = "irrelevant",
) -> tuple[ObservationMatrix, AnswerKey]:
    """Binary crowd with per-agent sensitivity ``alpha`` and specificity ``beta``."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if alpha.shape != beta.shape or alpha.ndim != 1:
        raise ValueError("alpha and beta must be vectors of equal length")
    if not (np.all((alpha >= 0) & (alpha <= 1)) and np.all((beta >= 0) & (beta <= 1))):
        raise ValueError("alpha and beta must lie in [0, 1]")
    alphabet = LabelAlphabet([positive, negative])
    pos, neg = alphabet.index(positive), alphabet.index(negative)
    m = len(alpha)
    truth_rng, agent_rngs = _streams(seed, m)
    truth_pos = truth_rng.random(num_queries) < prevalence

    codes = np.full((m, num_queries), MISSING, dtype=np.int64)
    for i, rng in enumerate(agent_rngs):
        responds = rng.random(num_queries) < participation
        u = rng.random(num_queries)
        says_pos = np.where(truth_pos, u < alpha[i], u >= beta[i])
        codes[i] = np.where(responds, np.where(says_pos, pos, neg), MISSING)

    key = AnswerKey({j: positive if t else negative for j, t in enumerate(truth_pos)})
    return ObservationMatrix(codes, alphabet), key


def trec_like(
    seed: int = 0,
    expert_fraction: float = 0.17,
    workload_sigma: float = 1.5,
) -> tuple[ObservationMatrix, AnswerKey]:
    """Sparse binary crowd shaped like the TREC 2011 relevance-judgment data.

    689 agents, 394 queries, and on average each agent answers about 26
    queries; workloads are log-normal with shape ``workload_sigma``, so a few
    agents answer most queries and most answer a handful. Experts (reliability
    ~ Beta(9, 1.5)) make up ``expert_fraction`` of the crowd, the rest are
    near chance (Beta(12, 12)); with the defaults plain majority voting lands
    near 80% with roughly 45 votes per query.

    A participant of a collected dataset has at least one judgment, so an
    agent the draw leaves silent answers one query picked by the preset's own
    stream.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7EC]))
    m, n = 689, 394
    expert = rng.random(m) < expert_fraction
    rel = np.where(expert, rng.beta(9.0, 1.5, size=m), rng.beta(12.0, 12.0, size=m))
    load = rng.lognormal(0.0, workload_sigma, size=m)
    part = np.clip(TREC_PARTICIPATION * load / load.mean(), 1e-3, 1.0)
    matrix, key = generate(CrowdScenario(m, n, LabelAlphabet(BINARY_LABELS), rel, part, seed=seed))

    codes = matrix.codes.copy()
    truth = key.codes(range(n), matrix.alphabet)
    for i in np.flatnonzero((codes == MISSING).all(axis=1)):
        j = rng.integers(n)
        codes[i, j] = truth[j] if rng.random() < rel[i] else 1 - truth[j]
    return ObservationMatrix(codes, matrix.alphabet), key


def exam_like(seed: int = 0) -> tuple[ObservationMatrix, AnswerKey]:
    """Dense four-choice exam: 183 students, 40 questions, best student capped at 70%."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE8A]))
    m = 183
    rel = np.clip(rng.normal(0.47, 0.08, size=m), 0.25, 0.70)
    return generate(
        CrowdScenario(m, 40, LabelAlphabet(EXAM_LABELS), rel, 0.98, seed=seed)
    )


def _profiled_objective(samples, targets, lam, penalty, grid_w):
    """Objective at each row of ``grid_w`` with the bias minimised exactly.

    For fixed weights the hinge term is convex piecewise-linear in the bias
    with kinks at ``t_j - s_j``; its minimum is attained at one of them.
    """
    s = grid_w @ samples.T  # (G, T)
    kinks = targets[None, :] - s  # (G, T)
    best = np.full(len(grid_w), np.inf)
    best_b = np.zeros(len(grid_w))
    scale = 1.0 / len(targets)
    for c in range(kinks.shape[1]):
        b = kinks[:, c : c + 1]
        h = np.maximum(0.0, 1.0 - targets[None, :] * (b + s)).sum(axis=1) * scale
        better = h < best
        best = np.where(better, h, best)
        best_b = np.where(better, b[:, 0], best_b)
    if penalty == "l2":
        reg = (grid_w**2).sum(axis=1)
    else:
        reg = np.abs(grid_w).sum(axis=1)
    return best + lam * reg, best_b


def minimizer_box(problem) -> float:
    """Half-width of a box guaranteed to contain a minimiser of ``problem``.

    The objective at ``w = 0`` with the best bias is at most 1, which bounds
    the penalty of any minimiser.
    Without a penalty the hinge problem is a linear program whose optimal
    vertices solve ``b + x_j.w = t_j`` for at most four {-1, 0, 1} rows; by
    Cramer's rule their coordinates are at most 16 in magnitude.
    """
    if problem.lam == 0:
        return 16.0
    bound = 1.0 / problem.lam if problem.penalty == "l1" else np.sqrt(1.0 / problem.lam)
    return float(max(3.0, bound))


def brute_force_weights(
    problem, box: float = 3.0, step: float = 0.01, max_points: int = 250_000, keep: int = 6
) -> tuple[TrustWeights, float]:
    """Grid-search minimiser of a small hinge problem.

    Weights range over ``[-box, box]^m`` at resolution ``step``; the bias is
    minimised exactly for each grid point. Grids larger than ``max_points``
    nodes are searched coarse-to-fine: the whole box at a coarse step, then
    windows of +/- two coarse steps around the ``keep`` best nodes at a step
    four times finer, down to ``step``. The objective is convex, so the
    windows bracket the minimiser.
    """
    samples = np.asarray(problem.samples, dtype=float)
    targets = np.asarray(problem.targets, dtype=float)
    m = samples.shape[1]
    if m > 3:
        raise ValueError(f"brute force is limited to m <= 3 agents, got {m}")

    def search(lo: np.ndarray, hi: np.ndarray, h: float, keep: int):
        axes = [np.arange(np.ceil(lo[d] / h - 1e-9), np.floor(hi[d] / h + 1e-9) + 1) * h for d in range(m)]
        grid = np.array(list(itertools.product(*axes))) if m else np.zeros((1, 0))
        vals, biases = _profiled_objective(
            samples, targets, problem.lam, problem.penalty, grid
        )
        order = np.argsort(vals, kind="stable")[:keep]
        return grid[order], vals[order], biases[order]

    lo, hi = np.full(m, -box), np.full(m, box)
    h = step
    while (int(2 * box / h) + 1) ** m > max_points:
        h *= 4
    cand, vals, biases = search(lo, hi, h, keep)
    while h > step:
        h_next = max(step, h / 4)
        found = [search(np.maximum(lo, c - 2 * h), np.minimum(hi, c + 2 * h), h_next, keep) for c in cand]
        cand = np.concatenate([f[0] for f in found])
        vals = np.concatenate([f[1] for f in found])
        biases = np.concatenate([f[2] for f in found])
        order = np.argsort(vals, kind="stable")[:keep]
        cand, vals, biases = cand[order], vals[order], biases[order]
        h = h_next
    return TrustWeights(cand[0], float(biases[0]), "brute_force"), float(vals[0])
