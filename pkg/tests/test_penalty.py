"""Penalty evaluation: pinned values, concavity sampling, finiteness."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from restless.penalty import Penalty, make_penalty

ALL_KINDS = [
    make_penalty("entropy"),
    make_penalty("mean_std", alpha0=-1.0, alpha1=2.0, beta=0.5),
    make_penalty("quadratic"),
    make_penalty("reciprocal", c=20.0),
]


def test_entropy_pinned_values():
    h = make_penalty("entropy")
    assert h(0.5) == pytest.approx(1.0, abs=1e-12)
    assert h(0.25) == pytest.approx(-(0.25 * np.log2(0.25) + 0.75 * np.log2(0.75)), abs=1e-12)


@given(st.floats(min_value=1e-9, max_value=1.0 - 1e-9))
def test_entropy_symmetric(w):
    h = make_penalty("entropy")
    assert h(w) == pytest.approx(h(1.0 - w), abs=1e-10)


def test_entropy_unimodal_on_grids():
    h = make_penalty("entropy")
    lo = h(np.linspace(1e-6, 0.5, 500))
    hi = h(np.linspace(0.5, 1.0 - 1e-6, 500))
    assert np.all(np.diff(lo) > 0)
    assert np.all(np.diff(hi) < 0)


def test_mean_std_endpoint_limits():
    # variance term vanishes when the cost is deterministic
    f = make_penalty("mean_std", alpha0=-1.0, alpha1=2.0, beta=0.5)
    assert f(1e-12) == pytest.approx(-1.0, abs=1e-5)
    assert f(1.0 - 1e-12) == pytest.approx(2.0, abs=1e-5)


def test_mean_std_matches_direct_moments():
    # oracle: moments of the two-point cost computed straight from definitions
    a0, a1, beta = -1.0, 2.0, 0.5
    f = make_penalty("mean_std", alpha0=a0, alpha1=a1, beta=beta)
    for w in np.linspace(0.01, 0.99, 23):
        mean = a1 * w + a0 * (1 - w)
        second = a1 ** 2 * w + a0 ** 2 * (1 - w)
        assert f(w) == pytest.approx(mean + beta * np.sqrt(second - mean ** 2), abs=1e-12)


def test_quadratic_and_reciprocal_pinned():
    assert make_penalty("quadratic")(0.5) == pytest.approx(1.0, abs=1e-15)
    assert make_penalty("quadratic")(0.25) == pytest.approx(0.75, abs=1e-15)
    assert make_penalty("reciprocal", c=20.0)(0.05) == pytest.approx(0.0, abs=1e-10)
    assert make_penalty("reciprocal")(0.01) == pytest.approx(-80.0, abs=1e-8)


def test_reciprocal_default_c_is_20():
    assert make_penalty("reciprocal")(0.05) == pytest.approx(0.0, abs=1e-10)


def test_concavity_random_midpoints():
    rng = np.random.default_rng(7)
    n = 100_000
    w1 = rng.uniform(1e-6, 1.0 - 1e-6, size=n)
    w2 = rng.uniform(1e-6, 1.0 - 1e-6, size=n)
    t = rng.uniform(0.0, 1.0, size=n)
    for f in ALL_KINDS:
        mid = f(t * w1 + (1.0 - t) * w2)
        chord = t * f(w1) + (1.0 - t) * f(w2)
        assert np.all(mid >= chord - 1e-10), f"{f} violates concavity"


def test_finite_on_clamped_range():
    grid = np.concatenate([[1e-12, 1.0 - 1e-12], np.linspace(1e-6, 1.0 - 1e-6, 1000)])
    for f in ALL_KINDS:
        assert np.all(np.isfinite(f(grid))), f"{f} not finite everywhere"


def test_out_of_range_inputs_clamped_not_nan():
    for f in ALL_KINDS:
        assert np.isfinite(f(0.0))
        assert np.isfinite(f(1.0))
        assert np.isfinite(f(-0.001))
        assert np.isfinite(f(1.001))


def test_scalar_in_scalar_out():
    h = make_penalty("entropy")
    assert isinstance(h(0.3), float)
    out = h(np.array([0.3, 0.6]))
    assert isinstance(out, np.ndarray) and out.shape == (2,)


def test_kind_aliases_and_errors():
    assert make_penalty("mean-std").kind == "mean_std"
    with pytest.raises(ValueError, match="unknown penalty kind"):
        make_penalty("cubic")
    with pytest.raises(ValueError, match="unexpected parameters"):
        make_penalty("entropy", c=3.0)
    with pytest.raises(ValueError, match="unexpected parameters"):
        make_penalty("reciprocal", alpha0=1.0)


def test_mirrored_reflects_and_restores():
    f = make_penalty("mean_std")
    g = f.mirrored()
    for w in (0.1, 0.4, 0.9):
        assert g(w) == pytest.approx(f(1.0 - w), abs=1e-15)
    assert g.mirrored() is f
    h = make_penalty("entropy")
    for w in (0.2, 0.7):
        assert h.mirrored()(w) == pytest.approx(h(w), abs=1e-10)
