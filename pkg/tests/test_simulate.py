import numpy as np
import pytest

from crowdtrust.core import MISSING, LabelAlphabet, accuracy, split_queries
from crowdtrust.methods import SUPERVISED, run_method
from crowdtrust.optim import HingeProblem, lambda_max, train_hinge
from crowdtrust.simulate import (
    BINARY_LABELS,
    TREC_PARTICIPATION,
    CrowdScenario,
    brute_force_weights,
    exam_like,
    generate,
    generate_two_coin,
    trec_like,
)

BINARY = LabelAlphabet(BINARY_LABELS)


def agent_hit_rate(matrix, key, i):
    seen = matrix.codes[i] != MISSING
    truth = np.array([matrix.alphabet.index(key[j]) for j in range(matrix.num_queries)])
    return (matrix.codes[i][seen] == truth[seen]).mean(), seen.sum()


def test_noiseless_crowd_is_always_right():
    matrix, key = generate(CrowdScenario(4, 30, LabelAlphabet("ABC"), 1.0, 1.0, seed=1))
    split = split_queries(key, 10, 1)
    for method in ("majority", "em", *SUPERVISED):
        assert accuracy(run_method(method, matrix, key, split.train).result, key, split.test) == 1.0


def test_sparse_entry_count_within_three_sigma():
    matrix, _ = generate(CrowdScenario(689, 394, BINARY, 0.8, TREC_PARTICIPATION, seed=0))
    cells = 689 * 394
    mean = cells * TREC_PARTICIPATION
    sd = np.sqrt(cells * TREC_PARTICIPATION * (1 - TREC_PARTICIPATION))
    assert abs(matrix.num_entries() - mean) < 3 * sd
    assert 17_500 < mean < 18_100


def test_reliability_point_seven_at_ten_thousand_queries():
    matrix, key = generate(CrowdScenario(1, 10_000, BINARY, 0.7, 1.0, seed=3))
    rate, _ = agent_hit_rate(matrix, key, 0)
    assert 0.684 <= rate <= 0.716


def test_hit_rates_converge_to_reliability():
    rel = np.array([0.3, 0.5, 0.7, 0.9, 0.99])
    matrix, key = generate(CrowdScenario(5, 10_000, LabelAlphabet("ABCD"), rel, 1.0, seed=5))
    for i, r in enumerate(rel):
        rate, n = agent_hit_rate(matrix, key, i)
        assert abs(rate - r) <= 3.5 * np.sqrt(r * (1 - r) / n)


def test_wrong_answers_are_uniform_over_other_labels():
    alphabet = LabelAlphabet("ABCD")
    truth = ("A",) * 20_000
    matrix, _ = generate(CrowdScenario(1, 20_000, alphabet, 0.0, 1.0, seed=2, truth=truth))
    counts = np.bincount(matrix.codes[0], minlength=4)
    assert counts[0] == 0
    assert np.all(np.abs(counts[1:] / 20_000 - 1 / 3) < 4 * np.sqrt(2 / 9 / 20_000))


def test_same_seed_same_data():
    for build in (trec_like, exam_like):
        a, ka = build(7)
        b, kb = build(7)
        assert np.array_equal(a.codes, b.codes) and ka.entries == kb.entries
    c, _ = trec_like(8)
    assert not np.array_equal(trec_like(7)[0].codes, c.codes)


def test_adding_agents_keeps_existing_rows():
    small, k1 = generate(CrowdScenario(3, 50, BINARY, [0.9, 0.6, 0.7], 0.5, seed=11))
    big, k2 = generate(CrowdScenario(5, 50, BINARY, [0.9, 0.6, 0.7, 0.8, 0.5], 0.5, seed=11))
    assert np.array_equal(small.codes, big.codes[:3])
    assert k1.entries == k2.entries


def test_invalid_scenarios():
    for rel, part in [(1.2, 0.5), (-0.1, 0.5), (0.5, 0.0), (0.5, 1.5)]:
        with pytest.raises(ValueError):
            CrowdScenario(2, 3, BINARY, rel, part)
    with pytest.raises(ValueError):
        CrowdScenario(2, 3, BINARY, 0.5, 0.5, truth=("relevant",))


def test_two_coin_generator_rates():
    matrix, key = generate_two_coin([0.9], [0.6], 20_000, seed=1)
    pos = np.array([key[j] == "relevant" for j in range(20_000)])
    said_pos = matrix.codes[0] == BINARY.index("relevant")
    assert abs(said_pos[pos].mean() - 0.9) < 0.015
    assert abs((~said_pos[~pos]).mean() - 0.6) < 0.015


def test_preset_shapes():
    m, k = trec_like(0)
    assert (m.num_agents, m.num_queries, m.alphabet.labels) == (689, 394, BINARY_LABELS)
    assert len(k.coverage) == 394
    # about 26 answers per agent on average
    assert 20 < m.num_entries() / 689 < 30
    m, k = exam_like(0)
    assert (m.num_agents, m.num_queries, m.alphabet.size) == (183, 40, 4)
    assert m.observed.mean() > 0.95


@pytest.mark.parametrize("seed", range(5))
def test_exam_best_student_is_capped(seed):
    matrix, key = exam_like(seed)
    best = max(agent_hit_rate(matrix, key, i)[0] for i in range(matrix.num_agents))
    assert best <= 0.70 + 0.12


def test_trec_majority_vote_band():
    accs = []
    for seed in range(20):
        matrix, key = trec_like(seed)
        split = split_queries(key, 40, seed)
        accs.append(accuracy(run_method("majority", matrix).result, key, split.test))
    assert 0.70 <= np.mean(accs) <= 0.90


@pytest.mark.parametrize("seed", range(5))
def test_supervised_beat_majority_with_one_expert(seed):
    rel = np.r_[1.0, np.full(20, 0.55)]
    matrix, key = generate(CrowdScenario(21, 200, BINARY, rel, 1.0, seed=seed))
    split = split_queries(key, 30, seed)
    mv = accuracy(run_method("majority", matrix).result, key, split.test)
    for method in SUPERVISED:
        acc = accuracy(run_method(method, matrix, key, split.train).result, key, split.test)
        assert acc >= mv, method


def test_brute_force_shutdown_problem():
    # balanced targets: at w = 0 every bias in [-1, 1] gives hinge exactly 1
    X = np.array([[1.0, -1.0], [1.0, 1.0], [-1.0, 0.0], [0.0, 1.0]])
    t = np.array([1.0, -1.0, 1.0, -1.0])
    lam = 2 * lambda_max(HingeProblem(X, t, 0.0, "l1"))
    w, best = brute_force_weights(HingeProblem(X, t, lam, "l1"), box=3.0, step=0.05)
    assert np.all(w.weights == 0)
    assert best == pytest.approx(1.0)


def test_brute_force_one_perfect_agent_matches_solver():
    t = np.array([1.0, -1.0, 1.0, 1.0])
    p = HingeProblem(t[:, None], t, 0.1, "l2")
    _, best = brute_force_weights(p, box=3.0, step=0.01)
    _, report = train_hinge(p)
    assert abs(best - report.final_objective) < 1e-2


def test_brute_force_symmetric_agents():
    t = np.array([1.0, -1.0, 1.0, -1.0])
    X = np.stack([t, t], axis=1)
    w, _ = brute_force_weights(HingeProblem(X, t, 0.1, "l2"), box=3.0, step=0.01)
    assert w.weights[0] == pytest.approx(w.weights[1])


def test_brute_force_refuses_four_agents():
    with pytest.raises(ValueError):
        brute_force_weights(HingeProblem(np.ones((2, 4)), np.array([1.0, -1.0]), 0.1, "l1"))
