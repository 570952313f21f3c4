import numpy as np
import pytest

from hapsim.exceptions import ShapeMismatchError
from hapsim.linalg import lstsq, modified_lstsq, numerical_rank, residual


@pytest.mark.parametrize(
    ("a", "b", "expected"),
    [
        (np.eye(2), [1.0, -2.0], [1.0, -2.0]),
        ([[1.0, 0.0], [0.0, 2.0]], [2.0, 4.0], [2.0, 2.0]),
        ([[1.0, 1.0]], [2.0], [1.0, 1.0]),
    ],
)
def test_lstsq_examples(a, b, expected):
    assert lstsq(a, b) == pytest.approx(expected, abs=1e-12)


def test_rank_deficient_matches_pseudo_inverse():
    rng = np.random.default_rng(1)
    left = rng.normal(size=(8, 3))
    right = rng.normal(size=(3, 6))
    a = left @ right
    b = rng.normal(size=8)
    assert lstsq(a, b) == pytest.approx(np.linalg.pinv(a) @ b, abs=1e-9)


def test_zero_columns_get_zero():
    a = np.array([[0.0, 2.0], [0.0, 1.0], [0.0, 0.0]])
    x = lstsq(a, [2.0, 1.0, 5.0])
    assert x[0] == 0
    assert x[1] == pytest.approx(1.0, abs=1e-12)


def test_zero_matrix():
    assert lstsq(np.zeros((3, 4)), np.ones(3)).tolist() == [0.0] * 4


def test_residual_orthogonal_to_columns():
    rng = np.random.default_rng(40)
    a = rng.normal(size=(40, 40)) + 10 * np.eye(40)
    a = np.vstack([a, rng.normal(size=(10, 40))])
    b = rng.normal(size=50)
    x = lstsq(a, b)
    assert np.abs(a.T @ (a @ x - b)).max() < 1e-9


def test_matches_normal_equations():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.normal(size=(30, 12))
        b = rng.normal(size=30)
        expected = np.linalg.solve(a.T @ a, a.T @ b)
        assert np.abs(lstsq(a, b) - expected).max() < 1e-8


def test_underdetermined_minimum_norm():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(20, 40))
    b = rng.normal(size=20)
    x = lstsq(a, b)
    assert residual(a, x, b) < 1e-10
    assert x == pytest.approx(np.linalg.pinv(a) @ b, abs=1e-9)


def test_residual_is_optimal():
    rng = np.random.default_rng(12)
    a = rng.normal(size=(10, 4))
    b = rng.normal(size=10)
    x = lstsq(a, b)
    best = residual(a, x, b)
    for delta in rng.normal(scale=1e-3, size=(100, 4)):
        assert best <= residual(a, x + delta, b)


def test_deterministic():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(20, 40))
    b = rng.normal(size=20)
    assert np.array_equal(lstsq(a, b), lstsq(a.copy(), b.copy()))


@pytest.mark.parametrize(
    ("b", "clamp", "expected"),
    [
        ([1.0, -2.0], [0, 1], [1.0, 0.0]),
        ([1.0, 2.0], [0, 1], [1.0, 2.0]),
        ([-1.0, -1.0], [0], [0.0, -1.0]),
        ([-1.0, -1.0], [], [-1.0, -1.0]),
    ],
)
def test_modified_lstsq(b, clamp, expected):
    assert modified_lstsq(np.eye(2), b, clamp).tolist() == expected


def test_modified_lstsq_nonnegative_on_clamped():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(6, 10))
    b = rng.normal(size=6)
    clamp = [0, 2, 4, 6, 8]
    x = modified_lstsq(a, b, clamp)
    unconstrained = lstsq(a, b)
    assert (x[clamp] >= 0).all()
    free = [1, 3, 5, 7, 9]
    assert np.array_equal(x[free], unconstrained[free])


def test_modified_lstsq_bad_indices():
    with pytest.raises(ShapeMismatchError):
        modified_lstsq(np.eye(2), [1.0, 1.0], [2])


@pytest.mark.parametrize(
    ("a", "x", "b", "expected"),
    [
        (np.eye(2), [0.0, 0.0], [3.0, 4.0], 5.0),
        (np.eye(2), [3.0, 4.0], [3.0, 4.0], 0.0),
    ],
)
def test_residual(a, x, b, expected):
    assert residual(a, x, b) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    ("a", "b"),
    [
        (np.eye(2), [1.0, 2.0, 3.0]),
        (np.ones(3), [1.0, 2.0, 3.0]),
        ([[1.0, np.nan]], [1.0]),
        (np.eye(2), [[1.0], [2.0]]),
    ],
)
def test_shape_mismatch(a, b):
    with pytest.raises(ShapeMismatchError):
        lstsq(a, b)


def test_residual_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        residual(np.eye(2), [1.0, 2.0, 3.0], [1.0, 2.0])


def test_numerical_rank():
    assert numerical_rank(np.array([3.0, 1e-3, 1e-14])) == 2
    assert numerical_rank(np.zeros(3)) == 0
