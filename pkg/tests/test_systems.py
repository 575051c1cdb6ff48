import math

import numpy as np
import pytest

from kflow.embedding import TimeSeries
from kflow.errors import DivergenceError, InputError, LengthError
from kflow.systems import (
    SamplingScheme,
    SystemSpec,
    draw_gaps,
    generate,
    henon_orbit,
    henon_spec,
    integrate,
    irregular_series,
    lorenz_field,
    lorenz_spec,
    rk4_trajectory,
    subsample_irregular,
    vanderpol_spec,
)


def test_henon_first_steps():
    ts = henon_orbit(1.4, 0.3, (0.0, 0.0), 4)
    np.testing.assert_allclose(ts.states[1], [1.0, 0.0])
    np.testing.assert_allclose(ts.states[2], [1.0 - 1.4, 0.3], rtol=1e-15)
    # frozen third iterate: 1 - 1.4 * 0.16 + 0.3, 0.3 * -0.4
    np.testing.assert_allclose(ts.states[3], [1.076, -0.12], rtol=1e-14)
    np.testing.assert_array_equal(ts.times, [0, 1, 2, 3])


def test_henon_constant_map():
    # x_1 = 1 + y_0, so the fixed point (1, 0) is reached at step 1 only when y_0 = 0
    ts = henon_orbit(0.0, 0.0, (3.0, 0.0), 6)
    np.testing.assert_array_equal(ts.states[1:], [[1.0, 0.0]] * 5)
    ts = henon_orbit(0.0, 0.0, (3.0, -2.0), 6)
    np.testing.assert_array_equal(ts.states[1], [-1.0, 0.0])
    np.testing.assert_array_equal(ts.states[2:], [[1.0, 0.0]] * 4)


def test_henon_bounded():
    s = henon_orbit(1.4, 0.3, (0.0, 0.0), 10_000).states
    assert np.max(np.abs(s[:, 0])) <= 1.5 and np.max(np.abs(s[:, 1])) <= 0.45


def test_henon_divergence_reports_step():
    with pytest.raises(DivergenceError) as info:
        henon_orbit(1.4, 0.3, (10.0, 0.0), 100)
    assert info.value.step is not None and info.value.step > 0


def test_rk4_linear_decay():
    x = rk4_trajectory(lambda s: [-s[0]], [1.0], 0.01, 101)
    assert x[-1, 0] == pytest.approx(math.exp(-1.0), abs=1e-8)


def _lorenz_at_one(substeps):
    return rk4_trajectory(lorenz_field(10.0, 28.0, 8.0 / 3.0), (1.0, 1.0, 1.0), 0.01, 101, substeps)[-1]


def test_lorenz_step_halving():
    # preset micro-step is 0.01 / 10
    assert np.max(np.abs(_lorenz_at_one(10) - _lorenz_at_one(20))) <= 1e-6
    coarse, fine, finer = (_lorenz_at_one(k) for k in (1, 2, 4))
    ratio = np.linalg.norm(coarse - finer) / np.linalg.norm(fine - finer)
    assert ratio >= 12


def test_vanderpol_bounded():
    ts = integrate(vanderpol_spec(), 10_001)
    assert ts.times[-1] == pytest.approx(10.0)
    assert np.max(np.abs(ts.states)) <= 10


def test_spec_validation():
    with pytest.raises(InputError):
        SystemSpec("vanderpol", {"eps": 0.0}, (0, 0), 0.001)
    with pytest.raises(InputError):
        SystemSpec("lorenz", {}, (1, 1, 1), base_step=0.0)
    with pytest.raises(InputError):
        SamplingScheme(0)
    with pytest.raises(InputError):
        integrate(henon_spec(), 10)


def test_identity_subsampling():
    ts = generate(henon_spec(), 50)
    out = subsample_irregular(ts, SamplingScheme(1, 3))
    np.testing.assert_array_equal(out.states, ts.states)


def test_gap_range_and_subsequence():
    ts = integrate(lorenz_spec(), 500)
    out = subsample_irregular(ts, SamplingScheme(3, 11), 100)
    gaps = np.round(out.gaps / 0.01).astype(int)
    assert set(gaps) <= {1, 2, 3}
    assert np.all(np.isin(out.times, ts.times))


def test_gap_uniformity():
    for alpha in (3, 5):
        counts = np.bincount(draw_gaps(SamplingScheme(alpha, 99), 100_000), minlength=alpha + 1)[1:]
        assert np.all(np.abs(counts / 100_000 - 1 / alpha) <= 0.01)


def test_subsample_exhausted():
    ts = TimeSeries(np.arange(10.0), np.zeros((10, 1)))
    with pytest.raises(LengthError):
        subsample_irregular(ts, SamplingScheme(5, 0), 9)


def test_determinism_and_burn_in():
    spec = henon_spec()
    a = irregular_series(spec, SamplingScheme(3, 4), 200)
    b = irregular_series(spec, SamplingScheme(3, 4), 200)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.times, b.times)
    assert a.times[0] == spec.burn_in
