import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from spectral_kde.errors import GridError, SpectralBudgetError
from spectral_kde.geometry import Circle, Sphere2
from spectral_kde.spectral import (
    HEAT_CUTOFF,
    KernelExpansion,
    Multiplier,
    SpectralKernel,
    eval_kernel,
    heat,
    localization_fit,
    lp_norm,
    markov_defect,
    nikolski_ratio,
    phi_lp,
    psi0,
    psi_j,
    random_bandlimited,
    root_psi_j,
    smooth_step,
    sqdiff_psi_j,
    tabulated,
)


# -- multipliers -----------------------------------------------------------


def test_smooth_step_shape():
    assert smooth_step(-1.0) == 1.0 and smooth_step(0.0) == 1.0
    assert smooth_step(1.0) == 0.0 and smooth_step(3.0) == 0.0
    assert smooth_step(0.5) == pytest.approx(0.5, abs=1e-15)
    u = np.linspace(0, 1, 2001)
    assert np.all(np.diff(smooth_step(u)) <= 0)


@given(st.floats(0, 1))
def test_smooth_step_symmetry(u):
    assert smooth_step(u) + smooth_step(1 - u) == pytest.approx(1.0, abs=1e-15)


def test_phi_bump():
    m = phi_lp()
    assert np.all(m(np.linspace(0, 0.5, 50)) == 1.0)
    assert np.all(m(np.linspace(1.0, 5, 50)) == 0.0)
    assert 0 < m(0.75) < 1


def test_psi0_and_bands():
    for b in (2.0, 3.0):
        m = psi0(b)
        assert m(1.0) == 1.0 and m(b) == 0.0
        t = np.linspace(0, 2 * b**3, 5000)
        band = psi_j(b, 2)(t)
        assert np.all(band[t <= b] == 0) and np.all(band[t >= b**3] == 0)
        assert np.all(band >= 0)


@pytest.mark.parametrize("b", [2.0, 3.0])
def test_root_and_sqdiff_partitions(b):
    t = np.linspace(0, b**6, 10_000)
    J = 5
    roots = sum(root_psi_j(b, j)(t) ** 2 for j in range(J + 1))
    sq = sum(sqdiff_psi_j(b, j)(t) ** 2 for j in range(J + 1))
    top = psi0(b)(t * b**-J)
    assert np.max(np.abs(roots - top)) <= 1e-12
    assert np.max(np.abs(sq - top**2)) <= 1e-12


def test_multiplier_rejects_negative_argument():
    with pytest.raises(ValueError):
        phi_lp()(-0.1)
    with pytest.raises(ValueError):
        Multiplier("gauss")
    with pytest.raises(ValueError):
        psi0(1.0)


def test_heat_cutoff():
    m = heat()
    assert m(HEAT_CUTOFF * 0.999) > 0
    assert m(HEAT_CUTOFF * 1.001) == 0
    assert math.exp(-(HEAT_CUTOFF**2)) == pytest.approx(1e-16, rel=1e-10)


def test_multiplier_descriptor_roundtrip():
    for m in (phi_lp(), psi0(3.0), psi_j(2.0, 4), root_psi_j(2.0, 1), heat(), tabulated([0, 1, 2], [1, 0.5, 0])):
        assert Multiplier.from_descriptor(m.descriptor()) == m


# -- kernels ---------------------------------------------------------------


def test_circle_kernel_matches_cosine_sum(rng):
    C = Circle()
    x, y = rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 7)
    for delta in (0.5, 0.1, 0.03):
        k = np.arange(0, int(1 / (delta * math.pi)) + 2)
        m = phi_lp()(delta * k * math.pi)
        diff = x[:, None] - y[None, :]
        want = 0.5 * m[0] + np.cos(np.multiply.outer(diff, k[1:] * math.pi)) @ m[1:]
        got = SpectralKernel(C, phi_lp(), delta).matrix(x, y)
        assert np.allclose(got, want, atol=1e-12)


def test_sphere_kernel_matches_legendre(rng):
    S = Sphere2()
    x, y = S.uniform_sample(rng, 4), S.uniform_sample(rng, 6)
    kern = SpectralKernel(S, phi_lp(), 0.1)
    cos = np.clip(x @ y.T, -1, 1)
    want = np.zeros_like(cos)
    for k in range(kern.k_cut + 1):
        want += phi_lp()(0.1 * math.sqrt(k * (k + 1))) * (2 * k + 1) / (4 * math.pi) * special.eval_legendre(k, cos)
    assert np.allclose(kern.matrix(x, y), want, atol=1e-11)


def test_kernel_symmetric_and_shapes(space, rng):
    kern = SpectralKernel(space, phi_lp(), 0.2)
    x, y = space.uniform_sample(rng, 5), space.uniform_sample(rng, 3)
    M = kern.matrix(x, y)
    assert M.shape == (5, 3)
    assert np.allclose(M, kern.matrix(y, x).T, atol=1e-12)
    assert isinstance(eval_kernel(kern, x[0], y[0]), float)


def test_kernel_coeffs_read_only():
    kern = SpectralKernel(Circle(), phi_lp(), 0.1)
    with pytest.raises(ValueError):
        kern.coeffs[0] = 3.0


def test_kernel_budget_error():
    with pytest.raises(SpectralBudgetError):
        SpectralKernel(Sphere2(k_max=16), phi_lp(), 0.01)


def test_kernel_constant_when_delta_large():
    kern = SpectralKernel(Circle(), phi_lp(), 10.0)
    assert kern.k_cut == 0
    assert kern(0.3, -0.6) == pytest.approx(0.5)


@pytest.mark.parametrize("delta", [0.5, 0.1, 0.02])
def test_markov_defect(space, delta, rng):
    kern = SpectralKernel(space, phi_lp(), delta)
    grid = space.quadrature_grid(kern.multiplier.cutoff_radius / delta)
    tol = 1e-10 if space.kind == "circle" else 1e-6
    assert markov_defect(kern, space.uniform_sample(rng, 20), grid) <= tol


def test_markov_defect_rejects_coarse_grid():
    kern = SpectralKernel(Circle(), phi_lp(), 0.1)
    with pytest.raises(GridError):
        markov_defect(kern, 0.0, Circle().quadrature_grid(3.0))


# -- localization ----------------------------------------------------------


def _probes(n=4000):
    return np.linspace(-1, 1, n, endpoint=False)


def test_heat_kernel_localizes_fast():
    kern = SpectralKernel(Circle(), heat(), 0.05)
    assert localization_fit(kern, 0.0, _probes()) <= -10


def test_phi_kernel_decay_at_finer_scale():
    assert localization_fit(SpectralKernel(Circle(), phi_lp(), 0.02), 0.0, _probes()) <= -3
    assert localization_fit(SpectralKernel(Circle(), phi_lp(), 0.01), 0.0, _probes()) <= -3


@pytest.mark.xfail(strict=True, reason="only 7 eigenvalues and rho/delta <= 20 at delta=0.05; fitted exponent is about -2.5")
def test_phi_kernel_decay_at_coarse_scale():
    assert localization_fit(SpectralKernel(Circle(), phi_lp(), 0.05), 0.0, _probes()) <= -3


def test_localization_flat_sentinel():
    assert localization_fit(SpectralKernel(Circle(), phi_lp(), 5.0), 0.0, _probes()) is None


# -- expansions ------------------------------------------------------------


def test_expansion_algebra(space, rng):
    f = random_bandlimited(space, 6.0, rng)
    g = random_bandlimited(space, 6.0, rng)
    x = space.uniform_sample(rng, 10)
    assert np.allclose((f + g)(x), f(x) + g(x), atol=1e-12)
    assert np.allclose((2.5 * f - g)(x), 2.5 * f(x) - g(x), atol=1e-12)
    assert KernelExpansion.constant(space, 0.7)(x) == pytest.approx(np.full(10, 0.7))


def test_expansion_mean_matches_quadrature(space, rng):
    f = random_bandlimited(space, 8.0, rng)
    grid = space.quadrature_grid(8.0)
    assert f.mean() == pytest.approx(grid.integrate(f(grid.nodes)), abs=1e-10)
    assert random_bandlimited(space, 8.0, rng, mean_zero=True).mean() == 0.0


def test_random_bandlimited_coefficients_standard_normal():
    # P_k applied to white noise: the k-th block has mean-square energy dim(E_k)
    C = Circle()
    grid = C.quadrature_grid(40 * math.pi)
    energies = []
    for seed in range(300):
        f = random_bandlimited(C, 3 * math.pi, np.random.default_rng(seed))
        energies.append(grid.integrate(f(grid.nodes) ** 2))
    # E ||f||^2 = sum_k dim(E_k) = 1 + 2 * 3
    assert np.mean(energies) == pytest.approx(7.0, rel=0.1)


def test_apply_multiplier_projects(rng):
    C = Circle()
    f = random_bandlimited(C, 10 * math.pi, rng)
    low = f.apply_multiplier(tabulated([0, 4.5 * math.pi, 4.50001 * math.pi], [1, 1, 0]))
    assert low.degree == 4
    grid = C.quadrature_grid(20 * math.pi)
    x = grid.nodes
    coef = [grid.weights @ (f(x) * np.cos(k * math.pi * x)) for k in range(1, 5)]
    coef_low = [grid.weights @ (low(x) * np.cos(k * math.pi * x)) for k in range(1, 5)]
    assert np.allclose(coef, coef_low, atol=1e-10)


# -- norms -----------------------------------------------------------------


def test_lp_norm_constant():
    grid = Circle().quadrature_grid(5.0)
    assert lp_norm(np.full(len(grid), 3.0), grid, 2) == pytest.approx(3 * math.sqrt(2))
    assert lp_norm(np.full(len(grid), -3.0), grid, math.inf) == 3.0
    with pytest.raises(ValueError):
        lp_norm(np.ones(len(grid)), grid, 0.5)


@pytest.mark.parametrize("lam", [4.0, 16.0, 64.0])
def test_nikolski_ratio_bounded(lam, rng):
    C = Circle()
    ratios = [nikolski_ratio(C, lam, 2, math.inf, random_bandlimited(C, lam, rng)) for _ in range(20)]
    # ||g||_inf <= sqrt(sum_k dim E_k / mu) ||g||_2 by Cauchy-Schwarz
    K = C.degree_for_band(lam)
    cs = math.sqrt((1 + 2 * K) / 2) / math.sqrt(lam)
    assert max(ratios) <= cs + 1e-9


def test_nikolski_rejects_bad_order():
    with pytest.raises(ValueError):
        nikolski_ratio(Circle(), 4.0, 3, 2, lambda x: np.cos(x))
