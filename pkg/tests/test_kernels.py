import numpy as np
import pytest
from scipy.integrate import trapezoid

from fdasmooth.exceptions import NonpositiveBandwidth
from fdasmooth.kernels import EPANECHNIKOV, KERNELS, TRIANGULAR, UNIFORM, evaluate, get_kernel, scaled

ALL = list(KERNELS.values())


def test_epanechnikov_values():
    assert evaluate(EPANECHNIKOV, 0.0) == 0.75
    assert evaluate(EPANECHNIKOV, 1.0) == 0.0
    assert evaluate(EPANECHNIKOV, -0.5) == pytest.approx(0.5625, abs=1e-15)
    assert evaluate(EPANECHNIKOV, 1.5) == 0.0


def test_scaled_values():
    assert scaled(EPANECHNIKOV, 0.5, 0.0) == pytest.approx(1.5)
    for k in ALL:
        assert scaled(k, 0.1, 0.2) == 0.0
    assert scaled(EPANECHNIKOV, 2.0, 1.0) == pytest.approx(0.28125, abs=1e-15)


@pytest.mark.parametrize("h", [0.0, -1.0])
def test_scaled_rejects_nonpositive_bandwidth(h):
    with pytest.raises(NonpositiveBandwidth):
        scaled(EPANECHNIKOV, h, 0.1)


def test_other_families():
    assert evaluate(TRIANGULAR, 0.25) == pytest.approx(0.75)
    assert evaluate(UNIFORM, 1.0) == 0.5
    assert evaluate(UNIFORM, 1.0 + 1e-12) == 0.0


def test_get_kernel():
    assert get_kernel("Epanechnikov") is EPANECHNIKOV
    assert get_kernel(TRIANGULAR) is TRIANGULAR
    with pytest.raises(ValueError):
        get_kernel("gaussian")


def test_array_evaluation_matches_scalar():
    u = np.linspace(-1.2, 1.2, 13)
    for k in ALL:
        np.testing.assert_array_equal(k(u), [evaluate(k, v) for v in u])


@pytest.mark.invariant
@pytest.mark.parametrize("k", ALL, ids=lambda k: k.family)
def test_symmetry_is_exact(k):
    u = np.random.default_rng(0).uniform(-1.5, 1.5, 10_000)
    np.testing.assert_array_equal(evaluate(k, u), evaluate(k, -u))


@pytest.mark.invariant
@pytest.mark.parametrize("k", ALL, ids=lambda k: k.family)
def test_normalization_and_second_moment(k):
    u = np.linspace(-1, 1, 10_000)
    K = evaluate(k, u)
    assert np.all(K >= 0)
    assert trapezoid(K, u) == pytest.approx(1.0, abs=1e-6)
    assert trapezoid(u * u * K, u) == pytest.approx(k.nu2, abs=1e-6)
    assert np.all(evaluate(k, np.array([-1.01, 1.01, 3.0])) == 0)
