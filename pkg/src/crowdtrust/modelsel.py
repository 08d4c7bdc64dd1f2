"""Leave-one-out selection of the regularisation strength and the one-vs-all
reduction for alphabets with more than two labels.

Lambda values at this level (grids, ``--lambda``) weigh the penalty against
the hinge loss *summed* over the training queries. The averaged problem of
:mod:`crowdtrust.optim` has the same minimisers at ``lambda / n`` for ``n``
training queries, which is what gets solved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import aggregators
from .core import (
    AnswerKey,
    FusionResult,
    LabelAlphabet,
    ObservationMatrix,
    ShapeError,
    TrustWeights,
    encode_binary,
    fuse,
)
from .optim import SolverConfig, train_batch, train_hinge, build_problem

GRID_MAX = 200.0
BATCH_BUDGET = 400_000


@dataclass(frozen=True)
class LambdaGrid:
    values: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("the lambda grid is empty")
        if any(v < 0 or v > GRID_MAX for v in values):
            raise ValueError(f"grid values must lie in [0, {GRID_MAX:g}]")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("grid values must be strictly increasing")
        object.__setattr__(self, "values", values)

    @classmethod
    def default(cls, penalty: str) -> "LambdaGrid":
        """40 evenly spaced values from 5 to 200, plus 0 for the L1 penalty."""
        sweep = tuple(np.linspace(5.0, GRID_MAX, 40).tolist())
        return cls(((0.0,) + sweep) if penalty == "l1" else sweep)

    @classmethod
    def parse(cls, text: str) -> "LambdaGrid":
        """``"0,5,10"`` lists values; ``"lo:hi:count"`` spaces ``count`` values evenly."""
        text = text.strip()
        if ":" in text:
            lo, hi, count = text.split(":")
            return cls(tuple(np.linspace(float(lo), float(hi), int(count)).tolist()))
        return cls(tuple(float(v) for v in text.split(",") if v.strip()))

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class CvReport:
    per_lambda_error: Mapping[float, float]
    chosen: float
    penalty: str
    positive: str


@dataclass(frozen=True)
class OneVsAllModel:
    per_class: Mapping[str, tuple[TrustWeights, float]]
    alphabet: LabelAlphabet
    penalty: str
    cv: Mapping[str, CvReport] = field(default_factory=dict)


def _binary_targets(key: AnswerKey, train: Sequence[int], positive: str) -> np.ndarray:
    return np.array([1.0 if key.entries[q] == positive else -1.0 for q in train])


def _positive_label(matrix: ObservationMatrix, positive: str | None) -> str:
    if positive is not None:
        matrix.alphabet.index(positive)
        return positive
    if matrix.alphabet.size != 2:
        raise ValueError("pick a positive label or use the one-vs-all path for multiclass data")
    return matrix.alphabet.labels[1]


def loocv_errors(
    matrix: ObservationMatrix,
    key: AnswerKey,
    train: Sequence[int],
    penalty: str,
    grid: LambdaGrid,
    positive: str,
    config: SolverConfig = SolverConfig(),
) -> dict[float, float]:
    """Held-out 0/1 error of the positive-vs-rest decision for every grid value.

    A zero held-out score is decided like ``decide_binary``: toward the
    positive label only if it is the alphabet-smaller one of the pair. On a
    multiclass alphabet the pair is the positive label and "not positive",
    and a zero score counts as "not positive".
    """
    train = sorted(int(q) for q in train)
    X = encode_binary(matrix, positive)[:, train].T
    t = _binary_targets(key, train, positive)
    folds = ~np.eye(len(train), dtype=bool)
    if matrix.alphabet.size == 2:
        negative = next(lab for lab in matrix.alphabet.labels if lab != positive)
        zero_is_positive = positive < negative
    else:
        zero_is_positive = False

    lams = list(grid)
    if penalty == "l2" and 0 in lams:
        raise ValueError("the L2 penalty cannot be cross-validated at lambda = 0")
    n = len(train)
    # several grid values share a batch; the chunk size bounds the batch footprint
    per_batch = max(1, BATCH_BUDGET // (n * max(1, matrix.num_agents)))
    errors = {}
    for start in range(0, len(lams), per_batch):
        chunk = lams[start : start + per_batch]
        masks = np.tile(folds, (len(chunk), 1))
        lam_rows = np.repeat(np.array(chunk) / (n - 1), n)
        W, b, _ = train_batch(X, t, masks, lam_rows, penalty, config)
        held = np.einsum("rm,rm->r", W, np.tile(X, (len(chunk), 1))) + b
        says_pos = np.where(held == 0, zero_is_positive, held > 0)
        wrong = (says_pos != np.tile(t > 0, len(chunk))).reshape(len(chunk), n)
        for lam, err in zip(chunk, wrong.mean(axis=1)):
            errors[lam] = float(err)
    return errors


def loocv_select(
    matrix: ObservationMatrix,
    key: AnswerKey,
    train: Sequence[int],
    penalty: str,
    grid: LambdaGrid | None = None,
    positive: str | None = None,
    config: SolverConfig = SolverConfig(),
) -> CvReport:
    """Pick the grid value with the lowest leave-one-out error; ties go to the larger value."""
    if len(train) < 2:
        raise ValueError("leave-one-out needs at least two training queries")
    grid = grid or LambdaGrid.default(penalty)
    positive = _positive_label(matrix, positive)
    errors = loocv_errors(matrix, key, train, penalty, grid, positive, config)
    best = min(errors.values())
    chosen = max(lam for lam, e in errors.items() if e == best)
    return CvReport(errors, chosen, penalty, positive)


def fit_binary(
    matrix: ObservationMatrix,
    key: AnswerKey,
    train: Sequence[int],
    penalty: str,
    grid: LambdaGrid | None = None,
    positive: str | None = None,
    lam: float | None = None,
    config: SolverConfig = SolverConfig(),
) -> tuple[TrustWeights, float, CvReport | None]:
    """Train on the whole training set at ``lam``, or at the LOOCV choice when ``lam`` is None."""
    positive = _positive_label(matrix, positive)
    report = None
    if lam is None:
        report = loocv_select(matrix, key, train, penalty, grid, positive, config)
        lam = report.chosen
    problem = build_problem(matrix, key, sorted(train), positive, lam / len(train), penalty)
    w, _ = train_hinge(problem, config)
    return w, lam, report


def one_vs_all_train(
    matrix: ObservationMatrix,
    key: AnswerKey,
    train: Sequence[int],
    penalty: str,
    grid: LambdaGrid | None = None,
    lam: float | None = None,
    config: SolverConfig = SolverConfig(),
) -> OneVsAllModel:
    """One binary model per label, each with its own LOOCV-selected lambda."""
    if matrix.alphabet.size < 3:
        raise ValueError("one-vs-all needs at least three labels; use the binary path")
    return _one_vs_all(matrix, key, train, penalty, grid, lam, config)


def _one_vs_all(matrix, key, train, penalty, grid, lam, config) -> OneVsAllModel:
    per_class, reports = {}, {}
    for label in matrix.alphabet.labels:
        w, chosen, report = fit_binary(matrix, key, train, penalty, grid, label, lam, config)
        per_class[label] = (w, chosen)
        if report is not None:
            reports[label] = report
    return OneVsAllModel(per_class, matrix.alphabet, penalty, reports)


def one_vs_all_predict(
    model: OneVsAllModel, matrix: ObservationMatrix, queries: Sequence[int] | None = None
) -> FusionResult:
    if model.alphabet != matrix.alphabet:
        raise ShapeError("model and matrix alphabets differ")
    queries = list(range(matrix.num_queries)) if queries is None else list(queries)
    scores = np.empty((len(queries), matrix.alphabet.size))
    for k, label in enumerate(matrix.alphabet.labels):
        w, _ = model.per_class[label]
        scores[:, k] = fuse(encode_binary(matrix, label)[:, queries], w)
    return FusionResult.from_scores(queries, scores, matrix.alphabet)


def one_vs_all_em(
    matrix: ObservationMatrix, max_iters: int = 500, tol: float = 1e-6
) -> tuple[dict[str, aggregators.TwoCoinModel], FusionResult]:
    """Two-coin EM per label (label vs. rest); predict the label with the highest posterior."""
    models = {}
    scores = np.empty((matrix.num_queries, matrix.alphabet.size))
    for k, label in enumerate(matrix.alphabet.labels):
        model, _ = aggregators.em_infer(matrix, label, max_iters, tol)
        models[label] = model
        scores[:, k] = model.posteriors
    return models, FusionResult.from_scores(range(matrix.num_queries), scores, matrix.alphabet)
