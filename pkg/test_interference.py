"""Tests for collapse-damped interference: pair exponents, Mach-Zehnder, two slits."""
import numpy as np
import pytest
from scipy.integrate import simpson

from csl_sim.services.clump_dynamics import ClumpParams
from csl_sim.services.errors import InputError, ParameterError
from csl_sim.services.interference import (
    PacketSpec,
    SlitConfig,
    fringe_visibility,
    mach_zehnder_packets,
    mach_zehnder_prob,
    mach_zehnder_quadrature,
    packet_separation,
    pair_exponent,
    screen_density,
    screen_scan,
    two_slit_intensity,
    two_slit_intensity_quadrature,
    two_slit_rate,
)
from csl_sim.services.stochastic import erf


@pytest.fixture
def params():
    return ClumpParams(N=2, M=1.0, lam=0.25, a=1.0)


def flat(X, t):
    return 1.0


def test_packet_separation_geometry():
    assert packet_separation(0.0, 1.0, -1.0, 1.0, 2.0, 2.0) == 0.0
    assert packet_separation(3.0, 1.5, 1.5, 2.0, 2.0, np.linspace(0, 2, 5)) == pytest.approx(np.zeros(5))
    b, m, t = 0.7, 3.0, 2.0
    k = m * b / t
    tp = np.linspace(0.0, t, 9)
    assert packet_separation(0.0, -k, k, m, t, tp) == pytest.approx(2.0 * b * (1.0 - tp / t))
    with pytest.raises(ParameterError):
        packet_separation(0.0, 1.0, -1.0, 1.0, 1.0, 1.5)


def test_pair_exponent_limits(params):
    assert pair_exponent(lambda tp: np.zeros_like(tp), 3.0, params) == 0.0
    far = pair_exponent(lambda tp: np.full_like(tp, 50.0), 3.0, params)
    assert far == pytest.approx(params.collapse_rate * 3.0, rel=1e-12)
    assert pair_exponent(lambda tp: np.full_like(tp, 50.0), 0.0, params) == 0.0


def test_pair_exponent_two_slit_closed_form(params):
    b, t = 0.8, 2.0
    exponent = pair_exponent(lambda tp: 2.0 * b * (1.0 - tp / t), t, params)
    expected = params.collapse_rate * t * (1.0 - np.sqrt(np.pi) * params.a / (2.0 * b) * erf(b / params.a))
    assert exponent == pytest.approx(expected, rel=1e-6)


def test_single_packet_has_no_collapse_factor(params):
    packet = PacketSpec(0.6 + 0.8j, lambda X: 1.0, lambda X, t: 0.5)
    assert screen_density(0.0, 1.0, [packet], params) == pytest.approx(0.25)
    with pytest.raises(InputError):
        screen_density(0.0, 1.0, [], params)


def test_mach_zehnder_closed_form(params):
    assert mach_zehnder_prob(0.0, params) == 0.0
    assert mach_zehnder_prob(1e3, params) == pytest.approx(0.5)
    t_half = np.log(2.0) / params.collapse_rate
    assert mach_zehnder_prob(t_half, params) == pytest.approx(0.25)
    with pytest.raises(ParameterError):
        mach_zehnder_prob(-1.0, params)


def test_mach_zehnder_quadrature_agrees(params):
    times = np.linspace(0.1, 5.0, 7)
    quad = np.array([mach_zehnder_quadrature(t, params) for t in times])
    closed = mach_zehnder_prob(times, params)
    assert np.max(np.abs(quad - closed) / closed) < 1e-6


def test_mach_zehnder_screen_density(params):
    arms = mach_zehnder_packets(flat, 50.0 * params.a)
    for t in (0.0, 0.5, 2.0):
        assert screen_density(0.0, t, arms, params) == pytest.approx(mach_zehnder_prob(t, params), abs=1e-12)


def test_sign_flip_only_flips_cross_term(params):
    k = 1.5
    left = PacketSpec(0.7, lambda X: -k, flat)
    right = PacketSpec(0.7, lambda X: k, flat)
    flipped = PacketSpec(-0.7, lambda X: k, flat)
    same = screen_density(0.0, 1.0, [left, right], params)
    opposite = screen_density(0.0, 1.0, [left, flipped], params)
    assert same + opposite == pytest.approx(4.0 * 0.49)
    assert same - opposite > 0


def test_straight_line_packets_reproduce_two_slit_centre(params):
    b, t = 0.5, 2.0
    k = params.m * b / t
    packets = [PacketSpec(1.0, lambda X: -k, flat), PacketSpec(1.0, lambda X: k, flat)]
    cfg = SlitConfig(b=b, k=10.0, L=100.0 * b, params=params)
    density = screen_density(0.0, t, packets, params)
    assert density == pytest.approx(2.0 * two_slit_intensity_quadrature(0.0, t, cfg), rel=1e-10)


def test_screen_scan_without_collapse_is_standard_pattern():
    params = ClumpParams(N=1, M=1.0, lam=1e-300, a=1.0)
    packets = [
        PacketSpec(1.0, lambda X: 0.0, lambda X, t: np.exp(1j * X)),
        PacketSpec(1.0, lambda X: 0.0, lambda X, t: np.exp(-1j * X)),
    ]
    xs = np.linspace(-2.0, 2.0, 9)
    assert screen_scan(xs, 1.0, packets, params) == pytest.approx(4.0 * np.cos(xs) ** 2, abs=1e-12)


def test_momentum_regime_guard(params):
    packet = PacketSpec(1.0, lambda X: 0.5, flat, size=2.0)
    with pytest.raises(InputError):
        screen_density(0.0, 1.0, [packet], params)


def test_slit_config_requires_distant_screen(params):
    with pytest.raises(ParameterError):
        SlitConfig(b=1.0, k=10.0, L=50.0, params=params)
    assert SlitConfig(b=0.5, k=4.0, L=100.0, params=params).fringe_period == pytest.approx(np.pi / 2.0)


def test_two_slit_pattern_limits(params):
    cfg = SlitConfig(b=0.5, k=20.0, L=200.0, params=params, A_amp=1.5)
    thetas = np.linspace(-0.2, 0.2, 41)
    assert two_slit_intensity(thetas, 0.0, cfg) == pytest.approx(2.0 * 2.25 * np.cos(10.0 * thetas) ** 2)
    assert two_slit_intensity(thetas, 1e4, cfg) == pytest.approx(np.full(41, 2.25))


def test_two_slit_rate_limits_and_monotonicity(params):
    rates = []
    for ratio in (0.01, 0.1, 1.0, 10.0, 100.0):
        rates.append(two_slit_rate(SlitConfig(b=ratio, k=1.0, L=100.0 * ratio, params=params)))
    assert np.all(np.diff(rates) > 0)
    assert rates[0] == pytest.approx(params.collapse_rate * 0.01**2 / 3.0, rel=0.01)
    assert rates[-1] == pytest.approx(params.collapse_rate, rel=0.01)


def test_two_slit_quadrature_matches_closed_form(params):
    cfg = SlitConfig(b=1.0, k=30.0, L=1000.0, params=params)
    thetas = np.linspace(-2.0 * cfg.fringe_period, 2.0 * cfg.fringe_period, 41)
    quad = two_slit_intensity_quadrature(thetas, 1.5, cfg)
    closed = two_slit_intensity(thetas, 1.5, cfg)
    assert np.max(np.abs(quad - closed) / closed) < 1e-6


def test_fringe_visibility_is_survival(params):
    cfg = SlitConfig(b=1.0, k=30.0, L=1000.0, params=params)
    assert fringe_visibility(0.0, cfg) == pytest.approx(1.0)
    t_half = np.log(2.0) / two_slit_rate(cfg)
    assert fringe_visibility(t_half, cfg) == pytest.approx(0.5, rel=1e-9)
    assert fringe_visibility(1e4, cfg) == pytest.approx(0.0, abs=1e-12)


def test_period_average_is_conserved(params):
    cfg = SlitConfig(b=1.0, k=30.0, L=1000.0, params=params)
    thetas = np.linspace(0.0, cfg.fringe_period, 2001)
    pristine = simpson(two_slit_intensity(thetas, 0.0, cfg), x=thetas)
    washed = simpson(two_slit_intensity(thetas, 1e4, cfg), x=thetas)
    assert pristine == pytest.approx(washed, rel=1e-8)


if __name__ == "__main__":
    pytest.main([__file__])
