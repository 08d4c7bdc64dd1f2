"""Run any of the six aggregation methods end to end on a dataset and split."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from . import aggregators, modelsel
from .core import (
    AnswerKey,
    FusionResult,
    ObservationMatrix,
    TrustWeights,
    binary_scores,
    encode_binary,
    fuse,
    weighted_vote,
)
from .modelsel import LambdaGrid
from .optim import SolverConfig

METHODS = ("majority", "em", "weighted-avg", "exp-weights", "svm", "professional")
SUPERVISED = ("weighted-avg", "exp-weights", "svm", "professional")
TITLES = {
    "majority": "majority votes",
    "em": "expectation maximization",
    "weighted-avg": "weighted averaging",
    "exp-weights": "exponential weighted algorithm",
    "svm": "support vector machine",
    "professional": "professional search",
}
PENALTY = {"svm": "l2", "professional": "l1"}


@dataclass
class Outcome:
    """What a method produced.

    ``weights`` maps a class label to its trust weights for one-vs-all models
    and holds the single weight vector under the key ``None`` otherwise.
    ``lam`` follows the same layout; ``cv`` holds per-lambda LOOCV errors.
    """

    method: str
    result: FusionResult
    weights: dict[str | None, TrustWeights] = field(default_factory=dict)
    lam: dict[str | None, float] = field(default_factory=dict)
    cv: dict[str | None, dict[float, float]] = field(default_factory=dict)
    eta: float | None = None
    em: dict[str, aggregators.TwoCoinModel] = field(default_factory=dict)


def run_method(
    method: str,
    matrix: ObservationMatrix,
    key: AnswerKey | None = None,
    train: Sequence[int] = (),
    *,
    lam: float | None = None,
    eta: float | None = None,
    grid: LambdaGrid | None = None,
    config: SolverConfig = SolverConfig(),
) -> Outcome:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    train = sorted(train)
    if method in SUPERVISED and (key is None or not train):
        raise ValueError(f"{method} needs an answer key and training queries")
    binary = matrix.alphabet.size == 2

    if method == "majority":
        w, result = aggregators.majority_votes(matrix)
        return Outcome(method, result, {None: w})

    if method == "em":
        if binary:
            model, result = aggregators.em_infer(matrix)
            return Outcome(method, result, em={model.positive: model})
        models, result = modelsel.one_vs_all_em(matrix)
        return Outcome(method, result, em=models)

    if method == "weighted-avg":
        w = aggregators.weighted_averaging(matrix, key, train)
        return Outcome(method, weighted_vote(matrix, w), {None: w})

    if method == "exp-weights":
        if eta is None:
            eta = aggregators.default_eta(matrix.num_agents, len(train))
        w = aggregators.exponential_weighted(matrix, key, train, eta)
        return Outcome(method, weighted_vote(matrix, w), {None: w}, eta=eta)

    penalty = PENALTY[method]
    grid = grid or LambdaGrid.default(penalty)
    if binary:
        positive = matrix.alphabet.labels[1]
        w, chosen, report = modelsel.fit_binary(
            matrix, key, train, penalty, grid, positive, lam, config
        )
        scores = binary_scores(fuse(encode_binary(matrix, positive), w), positive, matrix.alphabet)
        result = FusionResult.from_scores(range(matrix.num_queries), scores, matrix.alphabet)
        cv = {None: dict(report.per_lambda_error)} if report else {}
        return Outcome(method, result, {None: w}, {None: chosen}, cv)

    model = modelsel.one_vs_all_train(matrix, key, train, penalty, grid, lam, config)
    return Outcome(
        method,
        modelsel.one_vs_all_predict(model, matrix),
        {c: w for c, (w, _) in model.per_class.items()},
        {c: chosen for c, (_, chosen) in model.per_class.items()},
        {c: dict(r.per_lambda_error) for c, r in model.cv.items()},
    )
