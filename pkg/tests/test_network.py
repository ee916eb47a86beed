import numpy as np
import pytest

from decpomdp_eval.gridworld import GridConfig, resolve_positions
from decpomdp_eval.network import (
    CombinationMatrix,
    NetworkError,
    SinkhornError,
    build_from_positions,
    build_path,
    build_uniform,
    hop_sets,
    min_degree,
    mixing_rate,
    sinkhorn_balance,
    validate_combination,
)


def test_uniform():
    np.testing.assert_array_equal(build_uniform(1).weights, [[1.0]])
    C = build_uniform(4)
    assert np.all(C.weights == 0.25)
    assert abs(mixing_rate(C)) <= 1e-12
    assert min_degree(build_uniform(8)) == 8


@pytest.mark.parametrize("K", range(1, 12))
def test_uniform_mixing_rate_zero(K):
    assert mixing_rate(build_uniform(K)) <= 1e-12


def test_mixing_rate_hand_values():
    assert mixing_rate(np.array([[0.5, 0.5], [0.5, 0.5]])) == pytest.approx(0, abs=1e-15)
    assert mixing_rate(np.eye(2)) == pytest.approx(1.0)
    assert mixing_rate(np.array([[0.75, 0.25], [0.25, 0.75]])) == pytest.approx(0.5, abs=1e-15)


def test_two_agents_from_positions():
    C = build_from_positions([(0, 0), (0, 2)], threshold=np.inf)
    assert validate_combination(C).ok
    assert C.weights[0, 1] > 0


def test_tight_threshold_gives_path():
    C = build_from_positions([(0, 0), (0, 1), (0, 2)], threshold=1)
    np.testing.assert_array_equal(C.adjacency, [[1, 1, 0], [1, 1, 1], [0, 1, 1]])


def test_disconnected_threshold_rejected():
    with pytest.raises(NetworkError, match="larger threshold"):
        build_from_positions([(0, 0), (0, 1), (5, 5)], threshold=1)


def test_random_grid_placements():
    for seed in range(10):
        pos = resolve_positions(GridConfig(layout_seed=seed))
        C = build_from_positions(pos)
        rep = validate_combination(C)
        assert rep.ok and rep.diagnostics.lambda2 < 1


def test_sinkhorn_fixed_point_and_hand_case():
    C = build_uniform(3).weights
    np.testing.assert_allclose(sinkhorn_balance(C).weights, C, atol=1e-12)
    np.testing.assert_allclose(sinkhorn_balance([[2, 1], [1, 2]]).weights, [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-12)


def test_sinkhorn_preserves_pattern_and_symmetry():
    rng = np.random.default_rng(0)
    A = rng.random((8, 8))
    A = A + A.T
    A[rng.random((8, 8)) < 0.3] = 0
    A = np.minimum(A, A.T)
    A[np.diag_indices(8)] = 1.0
    A[np.arange(7), np.arange(1, 8)] = A[np.arange(1, 8), np.arange(7)] = 0.5  # keep it connected
    C = sinkhorn_balance(A).weights
    np.testing.assert_array_equal(C > 0, A > 0)
    np.testing.assert_array_equal(C, C.T)
    assert np.max(np.abs(C.sum(axis=0) - 1)) <= 1e-12


def test_sinkhorn_errors():
    with pytest.raises(SinkhornError):
        sinkhorn_balance([[1, 0], [0, 1]])  # reducible
    with pytest.raises(SinkhornError):
        sinkhorn_balance([[0, 1], [1, 0]])  # zero diagonal
    # a near-degenerate pattern converges too slowly for two iterations
    with pytest.raises(SinkhornError, match="converge"):
        sinkhorn_balance([[1e-9, 1], [1, 5]], max_iter=2)


def test_validate_combination_cases():
    assert "graph is not connected" in validate_combination(np.eye(2)).errors
    assert validate_combination(build_uniform(3).weights).ok
    sym_not_ds = np.array([[0.5, 0.5, 0.0], [0.5, 0.2, 0.3], [0.0, 0.3, 0.3]])
    errs = validate_combination(sym_not_ds).errors
    assert any("sum" in e for e in errs)


def test_min_degree_examples():
    assert min_degree(build_path(3)) == 2
    star = np.eye(5)
    star[0, 1:] = star[1:, 0] = 1
    assert min_degree(sinkhorn_balance(star)) == 2


def test_mixing_rate_is_spectral_norm_and_powers_converge():
    rng = np.random.default_rng(1)
    for _ in range(20):
        pos = rng.choice(100, size=6, replace=False)
        C = build_from_positions(np.stack([pos // 10, pos % 10], axis=1)).weights
        J = np.full((6, 6), 1 / 6)
        lam = mixing_rate(C)
        assert lam == pytest.approx(np.linalg.norm(C - J, 2), abs=1e-10)
        assert np.linalg.norm(np.linalg.matrix_power(C, 64) - J, 2) <= lam**64 + 1e-10


def test_hop_sets_path():
    C = build_path(4)
    assert hop_sets(C, 0) == [[0, 1], [0, 1, 2], [0, 1, 2, 3]]
    assert hop_sets(build_uniform(3), 1) == [[0, 1, 2]]


def test_json_round_trip():
    C = build_path(5)
    D = CombinationMatrix.from_json(C.to_json())
    np.testing.assert_array_equal(C.weights, D.weights)
    with pytest.raises(NetworkError):
        CombinationMatrix.from_json('{"K": 3, "weights": [[1]]}')
