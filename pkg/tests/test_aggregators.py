import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crowdtrust.aggregators import (
    EM_CLAMP,
    agent_accuracy,
    default_eta,
    em_infer,
    exponential_weighted,
    majority_votes,
    weighted_averaging,
)
from crowdtrust.core import (
    MISSING,
    AnswerKey,
    LabelAlphabet,
    ObservationMatrix,
    decide_binary,
    encode_binary,
    fuse,
    weighted_vote,
)
from crowdtrust.simulate import generate_two_coin

BINARY = LabelAlphabet(["irrelevant", "relevant"])


def column(labels, alphabet=BINARY):
    return ObservationMatrix.from_entries(
        len(labels), 1, [(i, 0, lab) for i, lab in enumerate(labels)], alphabet
    )


def agents_vs_truth(correct, truth):
    """Matrix where ``correct[i][j]`` says whether agent i got query j right."""
    codes = np.array([[t if c else 1 - t for c, t in zip(row, truth)] for row in correct])
    key = AnswerKey({j: BINARY.labels[t] for j, t in enumerate(truth)})
    return ObservationMatrix(codes, BINARY), key


def test_majority_examples():
    w, r = majority_votes(column(["relevant", "relevant", "irrelevant"]))
    assert r.predictions[0] == "relevant"
    np.testing.assert_allclose(w.weights, 1 / 3)
    assert w.bias == 0
    colours = LabelAlphabet(["red", "blue"])
    assert majority_votes(column(["red", "blue", "red", "blue"], colours))[1].predictions[0] == "blue"


def test_majority_with_no_votes_predicts_smallest_label():
    matrix = ObservationMatrix(np.full((2, 1), MISSING), LabelAlphabet("CAB"))
    _, r = majority_votes(matrix)
    assert r.predictions[0] == "A"
    assert not r.scores[0].any()


def test_majority_matches_uniform_fusion_on_small_matrices():
    # three states per cell: missing, irrelevant, relevant
    for m, n in [(1, 2), (2, 2), (3, 1)]:
        for cells in itertools.product((-1, 0, 1), repeat=m * n):
            matrix = ObservationMatrix(np.array(cells).reshape(m, n), BINARY)
            w, r = majority_votes(matrix)
            s = fuse(encode_binary(matrix, "relevant"), w)
            assert all(r.predictions[j] == decide_binary(s[j], "relevant", "irrelevant") for j in range(n))


def test_weighted_averaging_example():
    # agent accuracies 1, 1/2, 1/2 on two training queries
    matrix, key = agents_vs_truth([[1, 1], [1, 0], [0, 1]], [1, 0])
    assert agent_accuracy(matrix, key, [0, 1]).q.tolist() == [1.0, 0.5, 0.5]
    w = weighted_averaging(matrix, key, [0, 1])
    np.testing.assert_allclose(w.weights, [0.5, 0.25, 0.25])
    assert w.bias == 0


def test_weighted_averaging_equal_accuracy_reduces_to_majority():
    rng = np.random.default_rng(3)
    codes = rng.integers(0, 2, size=(5, 12))
    # every agent is right on query 0 and wrong on query 1
    key = AnswerKey({0: "irrelevant", 1: "relevant"})
    codes[:, 0], codes[:, 1] = 0, 0
    matrix = ObservationMatrix(codes, BINARY)
    w = weighted_averaging(matrix, key, [0, 1])
    np.testing.assert_allclose(w.weights, 0.2)
    assert weighted_vote(matrix, w).predictions == majority_votes(matrix)[1].predictions


def test_weighted_averaging_zero_accuracy_falls_back_to_uniform():
    matrix, key = agents_vs_truth([[0, 0], [0, 0]], [1, 1])
    np.testing.assert_allclose(weighted_averaging(matrix, key, [0, 1]).weights, 0.5)
    with pytest.raises(ValueError):
        weighted_averaging(matrix, key, [])


def test_agents_without_training_answers():
    codes = np.array([[1, 1], [MISSING, 0]])
    matrix = ObservationMatrix(codes, BINARY)
    key = AnswerKey({0: "relevant"})
    acc = agent_accuracy(matrix, key, [0])
    assert acc.q.tolist() == [1.0, 0.0]
    assert acc.answered.tolist() == [1, 0]
    # no evidence leaves the unnormalised exponential weight at 1
    w = exponential_weighted(matrix, key, [0], eta=1.0)
    np.testing.assert_allclose(w.weights, [0.5, 0.5])


@settings(max_examples=50)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.integers(0, 2**32 - 1))
def test_weighted_averaging_sums_to_one_and_is_monotone(target_q, seed):
    rng = np.random.default_rng(seed)
    n = 20
    truth = rng.integers(0, 2, n)
    correct = [rng.random(n) < q for q in target_q]
    matrix, key = agents_vs_truth(correct, truth)
    q = agent_accuracy(matrix, key, range(n)).q
    w = weighted_averaging(matrix, key, range(n)).weights
    assert w.sum() == pytest.approx(1.0)
    assert np.all(w >= 0)
    for i, j in itertools.permutations(range(len(q)), 2):
        if q[i] >= q[j]:
            assert w[i] >= w[j]


def test_hedge_hand_computed_recurrence():
    matrix, key = agents_vs_truth([[1, 1, 1], [0, 0, 0]], [1, 0, 1])
    w = exponential_weighted(matrix, key, [0, 1, 2], eta=1.0).weights
    e3 = math.exp(3)
    assert abs(w[0] - e3 / (e3 + 1)) < 1e-12
    assert abs(w[1] - 1 / (e3 + 1)) < 1e-12
    assert w[0] == pytest.approx(0.9526, abs=1e-4)


def test_hedge_with_zero_rate_is_uniform():
    matrix, key = agents_vs_truth([[1, 1], [0, 1], [0, 0]], [1, 0])
    np.testing.assert_allclose(exponential_weighted(matrix, key, [0, 1], eta=0.0).weights, 1 / 3)
    with pytest.raises(ValueError):
        exponential_weighted(matrix, key, [0, 1], eta=-0.1)


def test_default_eta():
    assert default_eta(689, 40) == pytest.approx(math.sqrt(8 * math.log(689) / 40))


@settings(max_examples=50)
@given(st.integers(2, 6), st.integers(1, 15), st.floats(0.01, 5), st.integers(0, 2**32 - 1))
def test_hedge_order_follows_training_accuracy(m, n, eta, seed):
    rng = np.random.default_rng(seed)
    truth = rng.integers(0, 2, n)
    correct = rng.random((m, n)) < rng.random((m, 1))
    matrix, key = agents_vs_truth(correct, truth)
    q = agent_accuracy(matrix, key, range(n)).q
    w = exponential_weighted(matrix, key, range(n), eta).weights
    for i, j in itertools.permutations(range(m), 2):
        if q[i] > q[j]:
            assert w[i] > w[j]
        elif q[i] == q[j]:
            assert w[i] == w[j]


def test_em_unanimous_crowd():
    matrix = ObservationMatrix(np.ones((4, 6), dtype=int), BINARY)
    model, r = em_infer(matrix)
    # the fixed point sits on the clamp bound
    assert np.all(model.posteriors >= EM_CLAMP[1] - 1e-12)
    assert set(r.predictions.values()) == {"relevant"}


def test_em_needs_a_positive_label_on_multiclass_data():
    with pytest.raises(ValueError):
        em_infer(ObservationMatrix(np.zeros((2, 2), dtype=int), LabelAlphabet("ABC")))


@pytest.mark.parametrize("seed", range(3))
def test_em_recovers_two_coin_parameters(seed):
    rng = np.random.default_rng(100 + seed)
    alpha, beta = rng.uniform(0.55, 0.95, 30), rng.uniform(0.55, 0.95, 30)
    matrix, key = generate_two_coin(alpha, beta, 1500, seed=seed)
    model, r = em_infer(matrix)
    assert np.abs(model.alpha - alpha).mean() < 0.05
    assert np.abs(model.beta - beta).mean() < 0.05
    assert sum(r.predictions[j] == key[j] for j in range(1500)) / 1500 >= 0.98
    assert np.all(np.diff(model.log_likelihood) >= -1e-9)


def test_em_parameters_stay_in_range():
    matrix, _ = generate_two_coin([0.99, 0.6, 0.5], [0.99, 0.5, 0.6], 30, participation=0.5, seed=4)
    model, _ = em_infer(matrix)
    for v in (model.alpha, model.beta):
        assert np.all((v >= EM_CLAMP[0] - 1e-12) & (v <= EM_CLAMP[1] + 1e-12))
    assert np.all((model.posteriors >= 0) & (model.posteriors <= 1))


def test_em_prefers_the_better_than_chance_orientation():
    # a crowd of liars looks like a crowd of experts with the labels swapped
    matrix, key = generate_two_coin([0.1] * 8, [0.1] * 8, 300, seed=2)
    model, r = em_infer(matrix)
    assert model.flipped or np.mean(model.alpha + model.beta) >= 1
    assert np.mean(model.alpha + model.beta) >= 1


@settings(max_examples=10, deadline=None)
@given(st.permutations(range(6)), st.integers(0, 1000))
def test_em_is_permutation_equivariant(perm, seed):
    rng = np.random.default_rng(seed)
    matrix, _ = generate_two_coin(rng.uniform(0.6, 0.9, 6), rng.uniform(0.6, 0.9, 6), 80, participation=0.7, seed=seed)
    a, ra = em_infer(matrix)
    b, rb = em_infer(matrix.with_agents(perm))
    np.testing.assert_allclose(b.alpha, a.alpha[list(perm)], atol=1e-9)
    np.testing.assert_allclose(b.beta, a.beta[list(perm)], atol=1e-9)
    assert ra.predictions == rb.predictions


def test_methods_are_deterministic():
    matrix, key = generate_two_coin([0.8, 0.7, 0.6], [0.7, 0.8, 0.6], 50, participation=0.8, seed=9)
    train = list(range(10))
    for fn in (
        lambda: majority_votes(matrix)[0].weights,
        lambda: em_infer(matrix)[0].posteriors,
        lambda: weighted_averaging(matrix, key, train).weights,
        lambda: exponential_weighted(matrix, key, train, 0.5).weights,
    ):
        assert fn().tobytes() == fn().tobytes()
