"""Tests for noise paths, random streams, quadrature and erf."""
import numpy as np
import pytest

from csl_sim.services.errors import InputError, NumericError, ParameterError
from csl_sim.services.stochastic import (
    NoisePath,
    RngStream,
    erf,
    integrate,
    run_blocks,
    sample_noise_path,
    sample_normals,
    standard_error,
)


def test_noise_path_starts_at_zero():
    path = sample_noise_path(0.1, 50, 2.0, RngStream(1))
    B = path.cumulative()
    assert B[0] == 0.0
    assert B.size == 51
    assert np.allclose(np.diff(B), path.increments)
    assert path.times()[-1] == pytest.approx(5.0)


def test_noise_path_mean_is_zero():
    path = sample_noise_path(1.0, 100_000, 1.0, RngStream(2024))
    assert abs(path.increments.mean()) < 5.0 * np.sqrt(1.0 / 100_000)


def test_noise_path_variance_is_lambda_dt():
    path = sample_noise_path(0.25, 100_000, 4.0, RngStream(7))
    var = path.increments.var(ddof=1)
    # SE of a Gaussian sample variance is sigma^2 sqrt(2/(n-1))
    assert abs(var - 1.0) < 5.0 * np.sqrt(2.0 / (100_000 - 1))


def test_same_stream_reproduces_path():
    first = sample_noise_path(0.01, 1000, 1.0, RngStream(99, 3))
    second = sample_noise_path(0.01, 1000, 1.0, RngStream(99, 3))
    assert np.array_equal(first.increments, second.increments)


def test_distinct_streams_differ_and_are_uncorrelated():
    a = sample_normals(100_000, RngStream(5, 0))
    b = sample_normals(100_000, RngStream(5, 1))
    assert not np.array_equal(a, b)
    assert abs(np.corrcoef(a, b)[0, 1]) < 5.0 / np.sqrt(100_000)


def test_noise_scaling_uses_same_normals():
    base = sample_noise_path(0.5, 200, 1.0, RngStream(11))
    scaled = sample_noise_path(0.5, 200, 9.0, RngStream(11))
    assert np.allclose(scaled.increments, 3.0 * base.increments, rtol=1e-15, atol=0)


def test_noise_path_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        sample_noise_path(0.0, 10, 1.0, RngStream(0))
    with pytest.raises(ParameterError):
        sample_noise_path(0.1, 10, -1.0, RngStream(0))
    with pytest.raises(ParameterError):
        sample_noise_path(0.1, 0, 1.0, RngStream(0))


def test_noise_path_is_immutable():
    path = NoisePath(dt=0.1, increments=[1.0, 2.0])
    with pytest.raises(ValueError):
        path.increments[0] = 5.0
    assert np.allclose(path.values(), [10.0, 20.0])


def test_rng_stream_validates_seed():
    with pytest.raises(ParameterError):
        RngStream(-1)
    with pytest.raises(ParameterError):
        RngStream(2**64)
    assert RngStream(2**64 - 1).spawn(4).stream_index == 4


def test_integrate_constant():
    assert integrate(lambda t: 1.0, 0.0, 1.0, 10) == pytest.approx(1.0, abs=1e-15)


def test_integrate_quadratic():
    assert integrate(lambda t: t**2, 0.0, 1.0, 100) == pytest.approx(1.0 / 3.0, abs=1e-8)


def test_integrate_gaussian():
    expected = np.sqrt(np.pi) / 2.0 * erf(2.0)
    assert integrate(lambda t: np.exp(-t**2), 0.0, 2.0, 10_000) == pytest.approx(expected, abs=1e-10)


def test_integrate_odd_interval_count_and_empty_range():
    assert integrate(lambda t: t**3, 0.0, 2.0, 11) == pytest.approx(4.0, rel=1e-12)
    assert integrate(lambda t: t, 3.0, 3.0) == 0.0


def test_integrate_errors():
    with pytest.raises(ParameterError):
        integrate(lambda t: t, 1.0, 0.0)
    with pytest.raises(NumericError):
        integrate(lambda t: np.full_like(t, np.nan), 0.0, 1.0)


def test_erf_values():
    assert erf(0.0) == 0.0
    assert erf(6.0) > 1.0 - 1e-12
    assert erf(1.0) == pytest.approx(0.842700792949715, abs=1e-12)


def test_erf_is_odd_and_bounded():
    xs = np.linspace(-8.0, 8.0, 1001)
    values = erf(xs)
    assert np.allclose(erf(-xs), -values, rtol=0, atol=1e-15)
    assert np.all(np.abs(values) <= 1.0)
    assert np.all(np.diff(values) >= 0.0)


def test_standard_error():
    assert standard_error([1.0, 3.0]) == pytest.approx(1.0)
    with pytest.raises(InputError):
        standard_error([1.0])


def test_run_blocks_preserves_order_across_workers():
    def block(bounds):
        start, stop = bounds
        return list(range(start, stop))

    serial = run_blocks(block, 1000, 64, workers=1)
    threaded = run_blocks(block, 1000, 64, workers=8)
    assert serial == threaded
    assert [x for part in serial for x in part] == list(range(1000))


if __name__ == "__main__":
    pytest.main([__file__])
