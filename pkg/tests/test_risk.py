import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_kde.geometry import Circle, Sphere2
from spectral_kde.risk import (
    EstimatorRecipe,
    ReplicationError,
    bias_term,
    fit_slope,
    lp_error,
    mc_risk,
    oracle_audit,
    rate_experiment,
    theory_slope,
)
from spectral_kde.sim import RandomStream, density_sample, make_heat_mixture, make_kinked_density, make_uniform
from spectral_kde.spectral import phi_lp


# -- norms -----------------------------------------------------------------


def test_lp_error_trivial_cases():
    C = Circle()
    f = make_heat_mixture(C, [0.2], [0.02], [1.0])
    assert lp_error(C, f, f, 2) == 0
    for p in (1, 2, 3):
        assert lp_error(C, lambda x: f(x) + 0.3, f, p) == pytest.approx(0.3 * 2 ** (1 / p), rel=1e-12)
    assert lp_error(C, lambda x: f(x) + 0.3, f, math.inf) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        lp_error(C, f, f, 0.5)


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, 4.0, math.inf]))
def test_lp_error_triangle_inequality(seed, p):
    C = Circle()
    grid = C.quadrature_grid(64.0)
    g = np.random.default_rng(seed)
    a, b, c = (g.standard_normal(len(grid)) for _ in range(3))
    ab = lp_error(C, a, b, p, grid)
    assert ab <= lp_error(C, a, c, p, grid) + lp_error(C, c, b, p, grid) + 1e-10
    assert lp_error(C, 2 * a, 2 * b, p, grid) == pytest.approx(2 * ab, rel=1e-12)


# -- Monte Carlo risk ------------------------------------------------------


def test_mc_risk_uniform_large_bandwidth():
    C = Circle()
    f = make_uniform(C)
    res = mc_risk(C, EstimatorRecipe("kernel", delta=1.0), f, 400, 2, 5, RandomStream(1))
    # delta = 1 keeps only the constant eigenfunction, which is exact
    assert res.mean <= 1e-12


def test_mc_risk_deterministic_and_thread_independent():
    C = Circle()
    f = make_heat_mixture(C, [0.0], [0.01], [1.0])
    recipe = EstimatorRecipe("kernel", delta=0.1)
    a = mc_risk(C, recipe, f, 300, 2, 6, RandomStream(4))
    b = mc_risk(C, recipe, f, 300, 2, 6, RandomStream(4), threads=3)
    assert a.errors == b.errors and a.mean == b.mean


def test_mc_risk_decreases_with_n():
    C = Circle()
    f = make_heat_mixture(C, [0.0], [0.01], [1.0])
    recipe = EstimatorRecipe("kernel", s=2.0)
    small = mc_risk(C, recipe, f, 256, 2, 20, RandomStream(5, 1))
    large = mc_risk(C, recipe, f, 4096, 2, 20, RandomStream(5, 2))
    assert large.mean < small.mean


def test_stderr_scales_with_reps():
    C = Circle()
    f = make_heat_mixture(C, [0.0], [0.01], [1.0])
    recipe = EstimatorRecipe("kernel", delta=0.1)
    a = mc_risk(C, recipe, f, 200, 2, 100, RandomStream(6, 1))
    b = mc_risk(C, recipe, f, 200, 2, 400, RandomStream(6, 2))
    assert a.stderr / b.stderr == pytest.approx(2.0, rel=0.3)


def test_replication_error_carries_index():
    C = Circle()
    f = make_uniform(C)
    with pytest.raises(ReplicationError) as info:
        mc_risk(C, EstimatorRecipe("kernel", delta=2.0), f, 50, 2, 3, RandomStream(0))
    assert info.value.rep == 0
    with pytest.raises(ValueError):
        mc_risk(C, EstimatorRecipe("kernel"), f, 50, 2, 1, RandomStream(0))


# -- bias ------------------------------------------------------------------


def test_bias_term_matches_fourier_sum():
    C = Circle()
    t = 0.003
    f = make_heat_mixture(C, [0.4], [t], [1.0])
    k = np.arange(1, 400)
    for delta in (0.25, 0.05, 0.01):
        gap = 1.0 - phi_lp()(delta * k * math.pi)
        want = math.sqrt(np.sum(gap**2 * np.exp(-2 * t * (k * math.pi) ** 2)))
        assert bias_term(C, f, delta, 2) == pytest.approx(want, rel=1e-9, abs=1e-15)


def test_bias_quadrature_path_agrees_with_spectral():
    C = Circle()
    f = make_heat_mixture(C, [0.4], [0.01], [1.0])
    stripped = type(f)(C, f.form, f.params, f.sup_bound, None, f.evaluator)
    for delta in (0.2, 0.05):
        assert bias_term(C, stripped, delta, 2) == pytest.approx(bias_term(C, f, delta, 2), rel=1e-8)


def test_risk_dominates_bias():
    C = Circle()
    f = make_heat_mixture(C, [0.0], [0.003], [1.0])
    for n, delta in ((256, 0.3), (1024, 0.2)):
        res = mc_risk(C, EstimatorRecipe("kernel", delta=delta), f, n, 2, 20, RandomStream(7, n))
        assert res.mean >= bias_term(C, f, delta, 2) - 2 * res.stderr


# -- oracle audit ----------------------------------------------------------


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_oracle_audit_constants_stable(p):
    C = Circle()
    f = make_heat_mixture(C, [0.0], [0.01], [1.0])
    out = oracle_audit(C, f, [0.2, 0.1], [256, 1024], p, 10, RandomStream(8))
    assert all(pt["holds"] for pt in out["points"])
    assert math.isfinite(out["c"]) and out["stability"] < 5


# -- slopes ----------------------------------------------------------------


def test_fit_slope_exact_power_law():
    ns = 2.0 ** np.arange(9, 16)
    slope, ci, r2 = fit_slope(ns, 3.7 * ns**-0.4)
    assert slope == pytest.approx(-0.4, abs=1e-10)
    assert r2 == pytest.approx(1.0, abs=1e-12)
    assert ci[0] <= slope <= ci[1]


def test_theory_slopes():
    assert theory_slope("kernel", 2, 1) == pytest.approx(-0.4)
    assert theory_slope("kernel", 2, 2) == pytest.approx(-1 / 3)
    # sparse regime exponent -(s - d(1/r - 1/p)) / (2(s - d(1/r - 1/2)))
    assert theory_slope("threshold", 1.5, 1, p=4, r=1) == pytest.approx(-(1.5 - 0.75) / (2 * (1.5 - 0.5)))


# -- reports ---------------------------------------------------------------


@pytest.fixture(scope="module")
def small_report():
    C = Circle()
    f = make_heat_mixture(C, [0.0], [0.01], [1.0])
    return rate_experiment(C, f, EstimatorRecipe("kernel"), [128, 256, 512, 1024], 4, 2.0, 99)


def test_report_structure(small_report):
    rep = small_report
    assert [e.n for e in rep.entries] == [128, 256, 512, 1024]
    assert all(e.risk_mean >= 0 and e.risk_stderr >= 0 and e.reps == 4 for e in rep.entries)
    assert rep.theory_slope == pytest.approx(-0.4)
    d = json.loads(rep.to_json())
    assert d["fitted_slope"] == rep.fitted_slope
    lines = rep.to_csv().splitlines()
    assert lines[0] == "row,n,rep,error,risk_mean,risk_stderr,reps"
    assert sum(1 for ln in lines if ln.startswith("rep,")) == 16
    assert sum(1 for ln in lines if ln.startswith("summary,")) == 4
    plot = rep.plot_data().splitlines()
    assert len(plot) == 5 and float(plot[1].split()[0]) == pytest.approx(math.log(128))
    assert "vs theory -0.4000" in rep.summary_line()


def test_report_bytes_reproducible(small_report):
    C = Circle()
    f = make_heat_mixture(C, [0.0], [0.01], [1.0])
    again = rate_experiment(C, f, EstimatorRecipe("kernel"), [128, 256, 512, 1024], 4, 2.0, 99, threads=2)
    assert again.to_csv() == small_report.to_csv()
    assert again.to_json() == small_report.to_json()


def test_rate_experiment_validation():
    C = Circle()
    f = make_uniform(C)
    with pytest.raises(ValueError):
        rate_experiment(C, f, EstimatorRecipe("kernel"), [128, 256, 512], 4, 2.0, 0)


def test_recipe_kinds():
    C = Circle()
    f = make_kinked_density(C)
    data = density_sample(f, 600, RandomStream(3).generator)
    for recipe in (EstimatorRecipe("kernel"), EstimatorRecipe("linear"), EstimatorRecipe("threshold", kappa=1.0)):
        est = recipe.fit(C, data)
        assert math.isfinite(est(0.3))
    assert EstimatorRecipe.from_dict(EstimatorRecipe("linear", J=3).descriptor()) == EstimatorRecipe("linear", J=3)
    with pytest.raises(ValueError):
        EstimatorRecipe("histogram")


def test_sphere_rate_direction():
    S = Sphere2()
    f = make_heat_mixture(S, [[0, 0, 1.0]], [0.05], [1.0])
    recipe = EstimatorRecipe("kernel")
    r1 = mc_risk(S, recipe, f, 200, 2, 6, RandomStream(10, 1))
    r2 = mc_risk(S, recipe, f, 3200, 2, 6, RandomStream(10, 2))
    assert r2.mean < r1.mean
