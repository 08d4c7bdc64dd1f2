"""Shared data model: label alphabets, sparse observation matrices, answer keys,
train/test splits, trust weights and the weighted-fusion primitive.

Observations are stored as a dense ``(num_agents, num_queries)`` array of label
codes where ``-1`` marks a missing response. Every type is immutable after
construction; arrays handed out are read-only views.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

MISSING = -1


class AlphabetError(ValueError):
    """A label is not part of the alphabet."""


class ShapeError(ValueError):
    """Array or weight dimensions disagree."""


class EvaluationError(ValueError):
    """Predictions do not cover the queries being evaluated."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabelAlphabet:
    """Ordered set of label identifiers.

    Labels are kept sorted lexicographically; that order defines every tie-break
    in the package (the smallest label wins).
    """

    labels: tuple[str, ...]

    def __init__(self, labels: Iterable[str]):
        labels = list(labels)
        if any(not isinstance(lab, str) or lab == "" for lab in labels):
            raise AlphabetError("labels must be non-empty strings")
        if len(set(labels)) != len(labels):
            raise AlphabetError(f"duplicate labels in {labels!r}")
        if len(labels) < 2:
            raise AlphabetError("an alphabet needs at least two labels")
        object.__setattr__(self, "labels", tuple(sorted(labels)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise AlphabetError(f"label {label!r} not in alphabet {self.labels}") from None

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def __iter__(self):
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """Sparse agents x queries matrix of categorical reports.

    ``codes[i, j]`` is the alphabet index of agent ``i``'s label for query ``j``,
    or ``MISSING`` if the agent did not respond. ``agent_ids``/``query_ids`` map
    dense indices back to external identifiers.
    """

    codes: np.ndarray
    alphabet: LabelAlphabet
    agent_ids: tuple[str, ...] = ()
    query_ids: tuple[str, ...] = ()

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim != 2:
            raise ShapeError(f"codes must be 2-D, got shape {codes.shape}")
        if codes.size and not np.issubdtype(codes.dtype, np.integer):
            raise ShapeError("codes must be integer label indices")
        codes = codes.astype(np.int64, copy=False)
        if codes.size and (codes.min() < MISSING or codes.max() >= self.alphabet.size):
            raise AlphabetError("label code outside the alphabet")
        object.__setattr__(self, "codes", _frozen(codes))
        m, n = codes.shape
        agent_ids = tuple(self.agent_ids) or tuple(str(i) for i in range(m))
        query_ids = tuple(self.query_ids) or tuple(str(j) for j in range(n))
        if len(agent_ids) != m or len(query_ids) != n:
            raise ShapeError("identifier tables do not match the matrix shape")
        object.__setattr__(self, "agent_ids", agent_ids)
        object.__setattr__(self, "query_ids", query_ids)

    @classmethod
    def from_entries(
        cls,
        num_agents: int,
        num_queries: int,
        entries: Iterable[tuple[int, int, str]],
        alphabet: LabelAlphabet,
        **ids,
    ) -> "ObservationMatrix":
        codes = np.full((num_agents, num_queries), MISSING, dtype=np.int64)
        for agent, query, label in entries:
            if not (0 <= agent < num_agents and 0 <= query < num_queries):
                raise ShapeError(f"entry ({agent}, {query}) outside {num_agents}x{num_queries}")
            if codes[agent, query] != MISSING:
                raise ValueError(f"duplicate entry for agent {agent}, query {query}")
            codes[agent, query] = alphabet.index(label)
        return cls(codes, alphabet, **ids)

    @property
    def num_agents(self) -> int:
        return self.codes.shape[0]

    @property
    def num_queries(self) -> int:
        return self.codes.shape[1]

    @property
    def observed(self) -> np.ndarray:
        return self.codes != MISSING

    def entries(self) -> list[tuple[int, int, str]]:
        agents, queries = np.nonzero(self.observed)
        labels = self.alphabet.labels
        return [(int(i), int(j), labels[self.codes[i, j]]) for i, j in zip(agents, queries)]

    def num_entries(self) -> int:
        return int(self.observed.sum())

    def label_counts(self) -> np.ndarray:
        """Per-query vote counts, shape ``(num_queries, alphabet.size)``."""
        return np.stack([(self.codes == k).sum(axis=0) for k in range(self.alphabet.size)], axis=1)

    def with_agents(self, order: Sequence[int]) -> "ObservationMatrix":
        order = list(order)
        return ObservationMatrix(
            self.codes[order], self.alphabet, tuple(self.agent_ids[i] for i in order), self.query_ids
        )


@dataclass(frozen=True)
class AnswerKey:
    """Known true labels for a subset of queries."""

    entries: Mapping[int, str]

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))

    @property
    def coverage(self) -> tuple[int, ...]:
        return tuple(self.entries)

    def __getitem__(self, query: int) -> str:
        return self.entries[query]

    def validate(self, matrix: ObservationMatrix) -> None:
        for q, label in self.entries.items():
            if not 0 <= q < matrix.num_queries:
                raise ShapeError(f"answer key query {q} outside [0, {matrix.num_queries})")
            matrix.alphabet.index(label)

    def codes(self, queries: Sequence[int], alphabet: LabelAlphabet) -> np.ndarray:
        return np.array([alphabet.index(self.entries[q]) for q in queries], dtype=np.int64)


@dataclass(frozen=True)
class Split:
    train: tuple[int, ...]
    test: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(int(q) for q in self.train))
        object.__setattr__(self, "test", tuple(int(q) for q in self.test))
        if set(self.train) & set(self.test):
            raise ValueError("train and test queries overlap")


@dataclass(frozen=True, eq=False)
class TrustWeights:
    weights: np.ndarray
    bias: float = 0.0
    method_tag: str = ""

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights, dtype=float)))
        object.__setattr__(self, "bias", float(self.bias))

    @classmethod
    def uniform(cls, m: int, method_tag: str = "") -> "TrustWeights":
        return cls(np.full(m, 1.0 / m), 0.0, method_tag)

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class FusionResult:
    """Per-query predicted labels and the per-label scores they were read from."""

    predictions: Mapping[int, str]
    scores: Mapping[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_scores(
        cls, queries: Sequence[int], scores: np.ndarray, alphabet: LabelAlphabet
    ) -> "FusionResult":
        """Read predictions off a ``(len(queries), alphabet.size)`` score array.

        ``np.argmax`` returns the first maximum, which is the alphabet-smallest
        label since the alphabet is sorted.
        """
        scores = np.asarray(scores, dtype=float)
        best = np.argmax(scores, axis=1) if len(queries) else []
        preds = {int(q): alphabet.labels[k] for q, k in zip(queries, best)}
        return cls(preds, {int(q): _frozen(s) for q, s in zip(queries, scores)})

    def restrict(self, queries: Iterable[int]) -> "FusionResult":
        queries = list(queries)
        return FusionResult(
            {q: self.predictions[q] for q in queries},
            {q: self.scores[q] for q in queries if q in self.scores},
        )


def encode_binary(matrix: ObservationMatrix, positive: str) -> np.ndarray:
    """Signed view of the matrix: +1 for ``positive``, -1 for any other label, 0 if missing."""
    k = matrix.alphabet.index(positive)
    codes = matrix.codes
    signed = np.where(codes == k, 1.0, -1.0)
    signed[codes == MISSING] = 0.0
    return signed


def fuse(signed: np.ndarray, w: TrustWeights) -> np.ndarray:
    """Per-query score ``bias + sum_i w_i x_ij``; missing entries contribute zero."""
    signed = np.asarray(signed, dtype=float)
    if signed.ndim != 2 or signed.shape[0] != len(w):
        raise ShapeError(f"{len(w)} weights for a matrix of shape {signed.shape}")
    return w.bias + w.weights @ signed


def decide_binary(score: float, positive: str, negative: str) -> str:
    if score > 0:
        return positive
    if score < 0:
        return negative
    return min(positive, negative)


def binary_scores(fused: np.ndarray, positive: str, alphabet: LabelAlphabet) -> np.ndarray:
    """Lift signed scores to per-label scores: ``+s`` on ``positive``, ``-s`` elsewhere.

    For a binary alphabet, argmax over the lifted scores reproduces
    :func:`decide_binary` including its tie rule.
    """
    k = alphabet.index(positive)
    out = np.repeat(-np.asarray(fused, dtype=float)[:, None], alphabet.size, axis=1)
    out[:, k] = fused
    return out


def weighted_vote(
    matrix: ObservationMatrix, w: TrustWeights, queries: Sequence[int] | None = None
) -> FusionResult:
    """Fuse categorical reports: label ``c`` scores the total weight of agents reporting it.

    On a binary alphabet this is exactly the signed fusion ``fuse`` followed by
    ``decide_binary`` (the score difference between the two labels equals the
    signed score), and it extends to any alphabet size.
    """
    if len(w) != matrix.num_agents:
        raise ShapeError(f"{len(w)} weights for {matrix.num_agents} agents")
    queries = list(range(matrix.num_queries)) if queries is None else list(queries)
    codes = matrix.codes[:, queries]
    scores = np.stack(
        [w.weights @ (codes == k) for k in range(matrix.alphabet.size)], axis=1
    ).reshape(len(queries), matrix.alphabet.size)
    return FusionResult.from_scores(queries, scores, matrix.alphabet)


def split_queries(key: AnswerKey, train_count: int, seed: int) -> Split:
    coverage = np.array(key.coverage, dtype=np.int64)
    if not 0 <= train_count <= len(coverage):
        raise ValueError(f"train_count {train_count} outside [0, {len(coverage)}]")
    rng = np.random.default_rng(seed)
    train = np.sort(rng.choice(coverage, size=train_count, replace=False))
    test = np.setdiff1d(coverage, train)
    return Split(tuple(train.tolist()), tuple(test.tolist()))


def accuracy(result: FusionResult, key: AnswerKey, over: Iterable[int]) -> float:
    over = list(over)
    if not over:
        raise EvaluationError("cannot evaluate accuracy over an empty query set")
    missing = [q for q in over if q not in result.predictions]
    if missing:
        raise EvaluationError(f"no prediction for queries {missing[:5]}")
    return sum(result.predictions[q] == key.entries[q] for q in over) / len(over)
