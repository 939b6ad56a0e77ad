import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankgauge.core import Observations, set_rank_bounds
from rankgauge.errors import InvalidInput
from rankgauge.studentized_range import quantile_exact_equal_sigma
from rankgauge.tukey import difference_cis, rank_bounds, tukey_rank_cis


def counting_oracle(y, sigma, q):
    """Rank bounds from explicit pairwise difference intervals, plain loops."""
    n = len(y)
    lower, upper = [], []
    for i in range(n):
        above = below = 0
        for j in range(n):
            if i == j:
                continue
            half = (sigma[i] ** 2 + sigma[j] ** 2) ** 0.5 * q
            lo, hi = y[i] - y[j] - half, y[i] - y[j] + half
            above += lo > 0
            below += hi < 0
        lower.append(1 + above)
        upper.append(n - below)
    return lower, upper


def neighbour_count_oracle(y_sorted, sigma_sorted, q):
    """Count non-rejected neighbours on each side of the sorted position."""
    n = len(y_sorted)
    out = []
    for i in range(n):
        def close(j):
            s = (sigma_sorted[i] ** 2 + sigma_sorted[j] ** 2) ** 0.5
            return abs(y_sorted[i] - y_sorted[j]) / s <= q
        s_i = sum(close(j) for j in range(i))
        t_i = sum(close(k) for k in range(i + 1, n))
        out.append((i + 1 - s_i, i + 1 + t_i))
    return out


def test_three_institution_geometry():
    # differences of width 2 * 0.75 around 1.5, 2.0 and 0.5 reproduce the
    # pattern A: [1,1], B and C: [2,3]
    obs = Observations.from_arrays([0.0, 1.5, 2.0], 1.0, ids=["A", "B", "C"])
    q = 0.75 / np.sqrt(2)
    a, b = difference_cis(obs, q)
    assert b[0, 1] < 0 and b[0, 2] < 0 and a[1, 2] < 0 < b[1, 2]
    res = tukey_rank_cis(obs, 0.1, quantile_override=q)
    assert [(int(l), int(u)) for l, u in zip(res.lower, res.upper)] == [(1, 1), (2, 3), (2, 3)]


def test_three_institution_with_real_quantile():
    obs = Observations.from_arrays([0.0, 10.0, 10.5], 1.0, ids=["A", "B", "C"])
    res = tukey_rank_cis(obs, 0.1)
    assert res.lower.tolist() == [1, 2, 2] and res.upper.tolist() == [1, 3, 3]
    assert res.quantile_used == pytest.approx(quantile_exact_equal_sigma(3, 0.1))


def test_single_item():
    res = tukey_rank_cis(Observations.from_arrays([3.0], 2.0), 0.1)
    assert res.lower.tolist() == [1] and res.upper.tolist() == [1]


def test_huge_quantile_gives_full_range():
    obs = Observations.from_arrays([0.0, 1.0, 5.0, 20.0], [1.0, 0.5, 2.0, 1.0])
    res = tukey_rank_cis(obs, 0.1, quantile_override=1e9)
    assert res.lower.tolist() == [1] * 4 and res.upper.tolist() == [4] * 4


def test_zero_quantile_gives_observed_ranks():
    obs = Observations.from_arrays([0.3, -1.0, 5.0, 2.0], [1.0, 0.5, 2.0, 1.0])
    res = tukey_rank_cis(obs, 0.1, quantile_override=0.0)
    assert res.lower.tolist() == res.upper.tolist() == res.position.tolist() == [2, 1, 4, 3]


def test_negative_quantile_rejected():
    obs = Observations.from_arrays([0.0, 1.0], 1.0)
    with pytest.raises(InvalidInput):
        tukey_rank_cis(obs, 0.1, quantile_override=-1.0)
    with pytest.raises(InvalidInput):
        difference_cis(obs, -0.5)


instance = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(-5, 5), min_size=n, max_size=n),
        st.lists(st.floats(0.05, 3), min_size=n, max_size=n),
        st.floats(0, 5),
    )
)


@given(instance)
def test_matches_counting_oracle(inst):
    y, sigma, q = inst
    L, U = rank_bounds(y, sigma, q)
    lo, up = counting_oracle(y, sigma, q)
    assert L.tolist() == lo and U.tolist() == up


@given(instance)
def test_matches_neighbour_count_oracle(inst):
    y, sigma, q = inst
    obs = Observations.from_arrays(y, sigma)
    if len(set(obs.y.tolist())) < obs.n:
        return
    res = tukey_rank_cis(obs, 0.1, quantile_override=q)
    got = sorted(zip(res.position.tolist(), res.lower.tolist(), res.upper.tolist()))
    want = neighbour_count_oracle(obs.y.tolist(), obs.sigma.tolist(), q)
    assert [(l, u) for _, l, u in got] == want


@given(instance, st.floats(0, 3))
def test_nested_in_quantile(inst, extra):
    y, sigma, q = inst
    L1, U1 = rank_bounds(y, sigma, q)
    L2, U2 = rank_bounds(y, sigma, q + extra)
    assert np.all(L2 <= L1) and np.all(U2 >= U1)


@given(instance)
def test_contains_observed_rank(inst):
    y, sigma, q = inst
    L, U = rank_bounds(y, sigma, q)
    lo, up = set_rank_bounds(y)
    # every item can take its own observed set-rank
    assert np.all(L <= lo) and np.all(U >= up)
    assert np.all((1 <= L) & (L <= U) & (U <= len(y)))


@given(instance, st.floats(0.1, 10), st.floats(-10, 10))
def test_affine_equivariance(inst, a, b):
    y, sigma, q = inst
    L1, U1 = rank_bounds(y, sigma, q)
    L2, U2 = rank_bounds(np.asarray(y) * a + b, np.asarray(sigma) * a, q)
    assert L1.tolist() == L2.tolist() and U1.tolist() == U2.tolist()


@given(instance)
def test_reflection(inst):
    y, sigma, q = inst
    n = len(y)
    L1, U1 = rank_bounds(y, sigma, q)
    L2, U2 = rank_bounds(-np.asarray(y), sigma, q)
    assert (n + 1 - U1).tolist() == L2.tolist() and (n + 1 - L1).tolist() == U2.tolist()


@given(st.permutations(range(6)))
def test_permutation_equivariance(perm):
    y = np.array([0.1, 2.0, -1.0, 3.5, 0.4, 1.2])
    sigma = np.array([0.3, 1.0, 0.5, 0.2, 0.8, 0.6])
    L, U = rank_bounds(y, sigma, 1.7)
    Lp, Up = rank_bounds(y[list(perm)], sigma[list(perm)], 1.7)
    assert Lp.tolist() == L[list(perm)].tolist() and Up.tolist() == U[list(perm)].tolist()


def test_batched_rank_bounds():
    rng = np.random.default_rng(0)
    Y = rng.normal(size=(5, 6))
    sigma = rng.uniform(0.2, 1.5, 6)
    L, U = rank_bounds(Y, sigma, 2.0)
    for r in range(5):
        lo, up = counting_oracle(Y[r].tolist(), sigma.tolist(), 2.0)
        assert L[r].tolist() == lo and U[r].tolist() == up


def test_result_in_input_order():
    obs = Observations.from_arrays([5.0, 0.0, 2.5], 0.1, ids=["z", "x", "y"])
    res = tukey_rank_cis(obs, 0.1)
    assert res.ids == ("z", "x", "y")
    assert res.lower.tolist() == [3, 1, 2]
    assert res.y.tolist() == [5.0, 0.0, 2.5]
