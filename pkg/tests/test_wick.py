import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from staticprop.errors import AngleOutOfRange
from staticprop.propagators import scalar_reduce
from staticprop.wick import (
    CHECK_THETAS,
    contraction_check,
    feynman_kernel_theta,
    obstruction_norm,
    riemannian_decay,
    rotated_generator,
    semigroup,
    wick_sweep,
)


def test_theta_zero_is_b(splits):
    sp = splits["M1"]
    rg = rotated_generator(sp, 0.0)
    np.testing.assert_array_equal(rg.matrix, sp.system.B)


def test_m0_quarter_turn(splits):
    rg = rotated_generator(splits["M0"], np.pi / 2)
    np.testing.assert_allclose(rg.matrix, -1j * np.array([[0, 1], [1, 0]]), atol=1e-15)


def test_half_turn_reflects_spectrum(splits):
    sp = splits["M1"]
    rg = rotated_generator(sp, np.pi)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(rg.matrix).real), np.sort(-sp.values), atol=1e-12)
    np.testing.assert_allclose(semigroup(rg, 0.7), semigroup(rotated_generator(sp, 0.0), -0.7), atol=1e-12)


def test_contraction_examples(splits):
    r0 = contraction_check(rotated_generator(splits["M0"], np.pi / 2), [1.0])
    assert abs(r0["max_norm"] - np.exp(-1)) <= 1e-12 and r0["strict_decay"]
    r1 = contraction_check(rotated_generator(splits["M1"], np.pi / 2), [2.0])
    assert abs(r1["max_norm"] - np.exp(-2)) <= 1e-12
    for name in ("M0", "M1", "M2"):
        rep = contraction_check(rotated_generator(splits[name], 0.0), [-3.0, 1.0, 4.0])
        assert all(abs(r["norm"] - 1.0) <= 1e-12 for r in rep["rows"])
        assert rep["strict_decay"] is None


def test_m0_rotated_feynman_closed_forms(splits, systems):
    sp = splits["M0"]
    k = feynman_kernel_theta(rotated_generator(sp, np.pi / 2))
    np.testing.assert_allclose(k(1.0), np.exp(-1) * sp.pi_plus, atol=1e-15)
    t = np.array([-2.0, -0.5, 0.3, 1.0, 3.0])
    g = scalar_reduce(k, systems["M0"])(t)[:, 0, 0]
    np.testing.assert_allclose(g, 0.5j * np.exp(-np.abs(t)), atol=1e-12)


@pytest.mark.parametrize("name", ["M0", "M1", "M2"])
def test_sweep_slopes(systems, name):
    out = wick_sweep(systems[name])
    assert all(abs(s - 1.0) <= 0.1 for s in out["slopes"].values())


def test_m0_single_theta_error(systems):
    bs = systems["M0"]
    out = wick_sweep(bs, thetas=[0.1, 0.05], times=[1.0])
    row = [r for r in out["rows"] if r["theta"] == 0.1][0]
    assert row["error"] <= 0.1 * out["b_norm"] * (1 + 1e-6)


def test_sweep_rejects_bad_thetas(systems):
    with pytest.raises(ValueError):
        wick_sweep(systems["M0"], thetas=[0.01, 0.1])
    with pytest.raises(ValueError):
        wick_sweep(systems["M0"], thetas=[2.0, 0.1])


def test_riemannian_decay(splits):
    t = np.linspace(-4, 4, 17)
    for name in ("M0", "M1", "M2"):
        assert riemannian_decay(splits[name], t) <= 1e-8


def test_obstruction(splits):
    # the largest positive frequency grows like e^{|t| sin(theta) lambda}
    for name in ("M0", "M1", "M2"):
        lam = splits[name].values.max()
        val = obstruction_norm(splits[name])
        assert val > 1.0
        assert abs(val - np.exp(np.sin(np.pi / 4) * lam)) <= 1e-10 * val


@pytest.mark.parametrize("theta", [-0.1, np.pi + 0.1])
def test_angle_out_of_range(splits, theta):
    with pytest.raises(AngleOutOfRange):
        rotated_generator(splits["M0"], theta)


@given(st.floats(0.0, np.pi), st.lists(st.floats(-8, 8), min_size=1, max_size=5))
def test_contraction_for_any_angle(splits, theta, times):
    for name in ("M1", "M2"):
        rep = contraction_check(rotated_generator(splits[name], theta), times)
        assert rep["max_norm"] <= 1.0 + 1e-12


def test_check_thetas_cover_endpoints():
    assert CHECK_THETAS[0] == 0.0 and CHECK_THETAS[-1] == np.pi
