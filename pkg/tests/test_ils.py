import numpy as np
import pytest

from rtk5g.errors import DimensionError, NumericalError
from rtk5g.ils import brute_force_ils, decorrelate, ils_cost, ltdl, search


def random_spd(rng, n, cond=1e3):
    """Correlated SPD matrix with a prescribed condition number."""
    Qo, _ = np.linalg.qr(rng.normal(size=(n, n)))
    ev = np.logspace(0, np.log10(cond), n) * 1e-2
    return Qo @ np.diag(ev) @ Qo.T


def bareiss_det(M):
    """Exact integer determinant (fraction-free elimination on Python ints)."""
    A = [[int(x) for x in row] for row in M]
    n = len(A)
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[-1][-1]


def test_ltdl_examples():
    L, D = ltdl(np.diag([4.0, 9.0]))
    assert np.array_equal(L, np.eye(2)) and np.array_equal(D, np.diag([4.0, 9.0]))
    Q = np.array([[2.0, 1.0], [1.0, 2.0]])
    L, D = ltdl(Q)
    # factor from the last row: d_2 = 2, l_21 = 0.5, d_1 = 2 - 0.5
    assert np.allclose(L, [[1, 0], [0.5, 1]]) and np.allclose(np.diag(D), [1.5, 2.0])


def test_ltdl_reconstructs(rng):
    for n in range(1, 9):
        Q = random_spd(rng, n, 1e4)
        L, D = ltdl(Q)
        assert np.allclose(L.T @ D @ L, Q, rtol=1e-12, atol=1e-14)
        assert np.allclose(np.diag(L), 1.0) and np.allclose(np.triu(L, 1), 0.0)
        assert np.all(np.diag(D) > 0)


def test_ltdl_rejects_indefinite():
    with pytest.raises(NumericalError):
        ltdl(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(DimensionError):
        ltdl(np.ones((2, 3)))


def test_decorrelate_diagonal_is_permutation():
    dec = decorrelate(np.diag([1.0, 4.0, 0.25]))
    Z = dec.Z
    assert np.all(np.abs(Z).sum(axis=0) == 1) and np.all(np.abs(Z).sum(axis=1) == 1)
    assert np.allclose(np.sort(np.diag(dec.Q_transformed)), [0.25, 1.0, 4.0])


def test_decorrelate_one_dimensional():
    dec = decorrelate([[0.3]])
    assert abs(dec.Z[0, 0]) == 1 and dec.Q_transformed[0, 0] == pytest.approx(0.3)


def test_decorrelate_properties(rng):
    reduced, total = 0, 200
    for _ in range(total):
        n = int(rng.integers(2, 7))
        Q = random_spd(rng, n, 10 ** rng.uniform(1, 4))
        dec = decorrelate(Q)
        Z = dec.Z
        assert Z.dtype.kind == "i"
        assert abs(bareiss_det(Z)) == 1
        assert np.allclose(dec.Q_transformed, Z.T @ Q @ Z, rtol=0, atol=1e-12 * np.abs(Z).max() ** 2 * np.abs(Q).max())
        Qt = dec.L.T @ dec.D @ dec.L
        assert np.allclose(Qt, dec.Q_transformed, rtol=1e-8, atol=1e-12 * np.abs(Q).max())
        assert np.all(np.abs(np.tril(dec.L, -1)) <= 0.5 + 1e-12)
        assert np.prod(dec.d) == pytest.approx(np.linalg.det(Q), rel=1e-8)
        if np.linalg.cond(dec.Q_transformed) <= np.linalg.cond(Q) * (1 + 1e-9):
            reduced += 1
    assert reduced >= 0.95 * total


def test_cost_invariant_under_transform(rng):
    for _ in range(50):
        n = int(rng.integers(1, 6))
        Q = random_spd(rng, n)
        dec = decorrelate(Q)
        k_hat = rng.normal(0, 3, n)
        k = np.rint(k_hat) + rng.integers(-2, 3, n)
        a = ils_cost(k_hat, Q, k)
        b = ils_cost(dec.Z.T @ k_hat, dec.Q_transformed, dec.Z.T @ k)
        assert a == pytest.approx(b, rel=1e-9)


def test_search_examples():
    Q = np.eye(2)
    assert np.array_equal(search([0.3, -1.6], Q)[0], [0, -2])
    cands, costs = search([3.0, -7.0, 12.0], np.diag([0.1, 2.0, 0.5]), return_costs=True)
    assert np.array_equal(cands[0], [3, -7, 12]) and costs[0] == 0.0


def test_search_empty_and_errors():
    assert search(np.zeros(0), np.zeros((0, 0)))[0].shape == (0,)
    with pytest.raises(ValueError):
        search([0.1], [[1.0]], n_best=0)
    with pytest.raises(DimensionError):
        search([0.1, 0.2], [[1.0]])


def test_search_n_best_ordering(rng):
    Q = random_spd(rng, 4, 1e3)
    k_hat = rng.normal(0, 5, 4)
    cands, costs = search(k_hat, Q, n_best=6, return_costs=True)
    assert len(cands) == 6 and len({tuple(c) for c in cands}) == 6
    assert all(a <= b for a, b in zip(costs, costs[1:]))
    assert np.allclose(costs, [ils_cost(k_hat, Q, c) for c in cands])
    # nothing in a wide box beats the sixth candidate except the first five
    center = np.rint(k_hat).astype(int)
    grid = np.stack(np.meshgrid(*[np.arange(-4, 5)] * 4, indexing="ij"), -1).reshape(-1, 4) + center
    all_costs = np.sort(ils_cost(k_hat, Q, grid))
    assert np.allclose(all_costs[:6], costs, rtol=1e-9)


def test_brute_force_examples():
    assert np.array_equal(brute_force_ils([0.5 - 1e-9], [[1.0]]), [0])
    assert np.array_equal(brute_force_ils([2.2, -0.7], np.eye(2)), [2, -1])
    with pytest.raises(ValueError):
        brute_force_ils(np.zeros(7), np.eye(7))


def test_search_matches_brute_force(rng):
    for _ in range(100):
        n = int(rng.integers(1, 5))
        Q = random_spd(rng, n, 10 ** rng.uniform(0, 4))
        truth = rng.integers(-50, 51, n)
        k_hat = truth + np.linalg.cholesky(Q) @ rng.normal(size=n)
        got = search(k_hat, Q)[0]
        ref = brute_force_ils(k_hat, Q)
        assert np.array_equal(got, ref), (got, ref)
