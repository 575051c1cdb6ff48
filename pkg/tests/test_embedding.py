import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kflow.embedding import (
    TimeSeries,
    Variant,
    embed,
    embed_euler,
    embed_irregular,
    embed_regular,
    input_dim,
)
from kflow.errors import InputError
from kflow.systems import integrate, lorenz_spec, lorenz_field

SERIES = TimeSeries([0.0, 1.0, 3.0, 4.0], [[1.0], [2.0], [3.0], [4.0]])


def test_regular_tau1():
    d = embed_regular(SERIES, 1)
    np.testing.assert_array_equal(d.inputs, [[1], [2], [3]])
    np.testing.assert_array_equal(d.targets, [[2], [3], [4]])


def test_regular_tau2():
    d = embed_regular(SERIES, 2)
    np.testing.assert_array_equal(d.inputs, [[1, 2], [2, 3]])
    np.testing.assert_array_equal(d.targets, [[3], [4]])


def test_regular_two_dims():
    d = embed_regular(TimeSeries([0, 1], [[1, 5], [2, 6]]), 1)
    np.testing.assert_array_equal(d.inputs, [[1, 5]])
    np.testing.assert_array_equal(d.targets, [[2, 6]])


def test_irregular_tau1():
    d = embed_irregular(SERIES, 1)
    np.testing.assert_array_equal(d.inputs, [[1, 1], [2, 2], [3, 1]])
    np.testing.assert_array_equal(d.targets, [[2], [3], [4]])


def test_irregular_tau2():
    d = embed_irregular(SERIES, 2)
    np.testing.assert_array_equal(d.inputs, [[1, 1, 2, 2], [2, 2, 3, 1]])
    np.testing.assert_array_equal(d.targets, [[3], [4]])


def test_irregular_constant_gaps_is_regular_plus_column():
    ts = TimeSeries(np.arange(6) * 0.5, np.arange(12.0).reshape(6, 2))
    irr = embed_irregular(ts, 2).inputs
    reg = embed_regular(ts, 2).inputs
    np.testing.assert_array_equal(irr[:, [0, 1, 3, 4]], reg)
    np.testing.assert_array_equal(irr[:, [2, 5]], 0.5)


def test_euler_slope():
    d = embed_euler(TimeSeries([0.0, 2.0], [[0.0], [2.0]]))
    np.testing.assert_array_equal(d.inputs, [[0.0]])
    np.testing.assert_array_equal(d.targets, [[1.0]])


def test_euler_linear_flow(rng):
    t = np.sort(rng.uniform(0, 10, 30))
    d = embed_euler(TimeSeries(t, 3.0 * t))
    np.testing.assert_allclose(d.targets, 3.0, rtol=1e-12)


def test_euler_targets_approximate_lorenz_field():
    ts = integrate(lorenz_spec(base_step=1e-4, micro_substeps=1), 2000)
    d = embed_euler(ts)
    f = lorenz_field(10.0, 28.0, 8.0 / 3.0)
    exact = np.array([f(x) for x in d.inputs])
    err = np.max(np.abs(d.targets - exact)) / np.max(np.abs(exact))
    assert err < 5e-3  # first order in the 1e-4 step


def test_dims_and_rows():
    assert input_dim(Variant.REGULAR, 2, 3) == 6
    assert input_dim(Variant.IRREGULAR, 2, 3) == 8
    assert input_dim(Variant.EULER, 5, 3) == 3


@given(n=st.integers(2, 40), tau=st.integers(1, 5), d=st.integers(1, 3))
def test_row_counts(n, tau, d):
    ts = TimeSeries(np.cumsum(np.ones(n)), np.arange(n * d, dtype=float).reshape(n, d))
    if n < tau + 1:
        with pytest.raises(InputError):
            embed_regular(ts, tau)
        return
    for variant in (Variant.REGULAR, Variant.IRREGULAR):
        data = embed(ts, variant, tau)
        assert data.inputs.shape == (n - tau, input_dim(variant, tau, d))
        assert data.targets.shape == (n - tau, d)
    assert embed_euler(ts).inputs.shape == (n - 1, d)


def test_minimal_lengths():
    ts = TimeSeries([0.0, 1.0, 2.5], [[1.0], [2.0], [3.0]])
    d = embed_irregular(ts, 2)
    np.testing.assert_array_equal(d.inputs, [[1, 1, 2, 1.5]])
    with pytest.raises(InputError):
        embed_irregular(ts, 3)
    with pytest.raises(InputError):
        embed_euler(ts.slice(0, 1))


def test_time_series_validation():
    with pytest.raises(InputError):
        TimeSeries([0.0, 0.0], [[1.0], [2.0]])
    with pytest.raises(InputError):
        TimeSeries([0.0, 1.0], [[1.0]])
    with pytest.raises(InputError):
        embed_regular(SERIES, 0)


def test_normalization_flag():
    d = embed_regular(SERIES, 1, normalize=True)
    np.testing.assert_allclose(d.inputs.mean(axis=0), 0.0, atol=1e-15)
    np.testing.assert_allclose(d.inputs.std(axis=0), 1.0)
    np.testing.assert_array_equal(d.targets, [[2], [3], [4]])
