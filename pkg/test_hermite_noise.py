"""Tests for the Hermite-function noise decomposition."""
import numpy as np
import pytest
from scipy import special

from csl_sim.services.clump_dynamics import ClumpParams, cm_offdiag_rate, gaussian_pure_state, grid_evolve_cm
from csl_sim.services.errors import InputError, ParameterError, ResolutionError
from csl_sim.services.hermite_noise import (
    HermiteBasis,
    Z_n,
    collapse_exponents,
    evolve_truncated,
    generator_terms,
    hermite_u,
    kernel_reconstruction,
    project_noise,
    sample_white_field,
    truncated_decay_rates,
    truncated_generator,
    z_table,
)
from csl_sim.services.stochastic import RngStream


def test_hermite_u_values():
    a = 2.0
    assert hermite_u(0, 0.0, a) == pytest.approx(np.pi**-0.25 / np.sqrt(a))
    assert hermite_u(1, 0.0, a) == 0.0
    with pytest.raises(ParameterError):
        hermite_u(-1, 0.0, a)


@pytest.mark.parametrize("n", [3, 10, 25, 30])
def test_recurrence_matches_direct_formula(n):
    a = 1.3
    x = np.linspace(-4.0, 4.0, 17)
    norm = np.exp(-0.5 * (0.5 * np.log(np.pi) + n * np.log(2.0) + special.gammaln(n + 1) + np.log(a)))
    direct = norm * special.eval_hermite(n, x / a) * np.exp(-(x**2) / (2.0 * a**2))
    assert np.allclose(hermite_u(n, x, a), direct, rtol=1e-10, atol=1e-14)


def test_high_order_is_finite():
    values = hermite_u(200, np.linspace(-25.0, 25.0, 101), 1.0)
    assert np.all(np.isfinite(values))


def test_orthonormality():
    basis = HermiteBasis(a=1.0, n_max=40)
    gram = basis.orthonormality_matrix()
    assert np.max(np.abs(gram - np.eye(41))) < 1e-8
    assert abs(gram[5, 7]) < 1e-8


@pytest.mark.parametrize("a, n_max", [(0.5, 40), (2.5, 60)])
def test_orthonormality_window_covers_highest_order(a, n_max):
    gram = HermiteBasis(a=a, n_max=n_max).orthonormality_matrix()
    assert gram[n_max, n_max] == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(gram - np.eye(n_max + 1))) < 1e-8


def test_z_values():
    assert Z_n(0, 0.0, 1.0) == 1.0
    assert Z_n(4, 0.0, 1.0) == 0.0
    assert Z_n(3, -1.0, 1.0) == pytest.approx(-np.exp(-0.25) * (1 / np.sqrt(2.0)) ** 3 / np.sqrt(6.0))
    X = np.linspace(-2.0, 2.0, 41)
    assert np.allclose(np.sum(z_table(60, X, 1.0) ** 2, axis=0), 1.0, atol=1e-8)


def test_kernel_reconstruction():
    assert kernel_reconstruction(0.0, 0.0, 5, 1.0) == pytest.approx(1.0)
    assert kernel_reconstruction(1.0, -1.0, 60, 1.0) == pytest.approx(np.exp(-1.0), abs=1e-8)
    X, Xp = 0.7, -0.4
    assert kernel_reconstruction(X, Xp, 0, 1.0) == pytest.approx(np.exp(-(X**2 + Xp**2) / 4.0))


def test_completeness_on_grid():
    axis = np.linspace(-2.0, 2.0, 41)
    X, Xp = np.meshgrid(axis, axis, indexing="ij")
    kernel = kernel_reconstruction(X, Xp, 60, 1.0)
    assert np.max(np.abs(kernel - np.exp(-((X - Xp) ** 2) / 4.0))) < 1e-8


def test_generator_orders_small_X():
    offsets = np.logspace(-3, -2, 11)
    terms = generator_terms(offsets, np.zeros_like(offsets), 1, 1.0)
    slope0 = np.polyfit(np.log(offsets), np.log(terms[0]), 1)[0]
    slope1 = np.polyfit(np.log(offsets), np.log(terms[1]), 1)[0]
    assert slope0 == pytest.approx(4.0, abs=0.1)
    assert slope1 == pytest.approx(2.0, abs=0.1)


def test_lowest_order_generator():
    small = np.linspace(-0.03, 0.03, 11)
    S, Sp = np.meshgrid(small, small, indexing="ij")
    off = S != Sp
    truncated = 0.5 * np.sum(generator_terms(S, Sp, 1, 1.0), axis=0)
    lowest = (S - Sp) ** 2 / 4.0
    assert np.max(np.abs(truncated[off] - lowest[off]) / lowest[off]) < 1e-3


def test_truncated_rates_match_exact_kernel():
    params = ClumpParams(N=2, lam=0.5, a=1.0)
    grid = np.linspace(-2.0, 2.0, 41)
    rates = truncated_decay_rates(grid, 60, params)
    exact = cm_offdiag_rate(np.abs(grid[:, None] - grid[None, :]), params)
    off = exact > 0
    assert np.max(np.abs(rates[off] - exact[off]) / exact[off]) < 1e-8
    assert np.all(np.diag(rates) == 0.0)


def test_truncated_generator_and_evolution():
    params = ClumpParams(N=1, lam=1.0, a=1.0)
    grid = np.linspace(-2.0, 2.0, 101)
    rho = gaussian_pure_state(grid, 0.0, 0.3)
    rate = truncated_generator(rho, 60, params)
    assert np.max(np.abs(np.diag(rate))) == 0.0
    with_kinetic = truncated_generator(rho, 60, params, include_kinetic=True)
    assert np.max(np.abs(with_kinetic - with_kinetic.conj().T)) < 1e-10 * np.max(np.abs(with_kinetic))

    exact = grid_evolve_cm(rho, params, 1.0, 0.01)
    hermite = evolve_truncated(rho, 60, params, 1.0)
    assert np.max(np.abs(exact.entries - hermite.entries)) < 1e-6
    with pytest.raises(ParameterError):
        evolve_truncated(rho, 60, params, -1.0)


def field_grid(basis, spacing):
    reach = basis.turning_point + 3.0 * basis.a + 1.0
    n = int(np.ceil(2 * reach / spacing)) + 1
    return np.linspace(-reach, reach, n)


def test_projection_of_single_mode():
    basis = HermiteBasis(a=1.0, n_max=10)
    x = field_grid(basis, 0.05)
    g = np.sin(np.linspace(0.0, 3.0, 7))
    field = hermite_u(3, x, 1.0)[:, None] * g[None, :]
    v = project_noise(field, x, basis)
    assert np.allclose(v[3], g, atol=1e-10)
    assert np.max(np.abs(np.delete(v, 3, axis=0))) < 1e-10
    assert np.all(project_noise(np.zeros_like(field), x, basis) == 0.0)


def test_projection_resolution_guards():
    basis = HermiteBasis(a=1.0, n_max=40)
    coarse = np.linspace(-20.0, 20.0, 41)
    with pytest.raises(ResolutionError):
        project_noise(np.zeros(coarse.size), coarse, basis)
    narrow = np.linspace(-5.0, 5.0, 2001)
    with pytest.raises(ResolutionError):
        project_noise(np.zeros(narrow.size), narrow, basis)
    with pytest.raises(InputError):
        project_noise(np.zeros(10), narrow, basis)


def test_projected_white_noise_is_independent():
    basis = HermiteBasis(a=1.0, n_max=4)
    x = field_grid(basis, 0.1)
    n_t, dt, lam = 20_000, 0.01, 2.0
    field = sample_white_field(x, n_t, dt, lam, RngStream(31))
    v = project_noise(field, x, basis)
    corr = np.corrcoef(v)
    off = ~np.eye(5, dtype=bool)
    assert np.max(np.abs(corr[off])) < 5.0 / np.sqrt(n_t)
    assert v.var(axis=1, ddof=1) == pytest.approx(np.full(5, lam / dt), rel=0.05)


def test_exponent_identity_for_band_limited_field():
    basis = HermiteBasis(a=1.0, n_max=20)
    x = field_grid(basis, 0.05)
    gen = RngStream(8).generator()
    n_t, dt = 50, 0.02
    coefficients = gen.standard_normal((6, n_t))
    field = basis.matrix(x)[:6].T @ coefficients
    sides = collapse_exponents(field, x, dt, X=0.5, basis=basis, lam=0.7, N=2)
    assert sides["modes"] == pytest.approx(sides["field"], rel=1e-6)


if __name__ == "__main__":
    pytest.main([__file__])
