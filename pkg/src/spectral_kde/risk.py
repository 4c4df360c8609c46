"""Monte-Carlo risk, bias, oracle audits and convergence-rate regression."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import NumericalError
from .estimators import (
    SampleSet,
    bandwidth_rule,
    choose_J_linear,
    choose_Jn,
    fit_kernel,
    fit_linear_wavelet,
    fit_threshold,
)
from .frames import Frame, cached_frame, calibrate_cdiamond
from .geometry import QuadratureGrid, SpaceModel
from .sim import RandomStream, TestDensity, density_sample
from .spectral import SpectralKernel, lp_norm, phi_lp

__all__ = [
    "EstimatorRecipe",
    "MCRisk",
    "ReplicationError",
    "RiskEntry",
    "RiskReport",
    "default_risk_grid",
    "lp_error",
    "mc_risk",
    "bias_term",
    "oracle_audit",
    "fit_slope",
    "theory_slope",
    "rate_experiment",
]


class ReplicationError(NumericalError):
    """An estimator fit failed inside a Monte-Carlo replication."""

    def __init__(self, rep: int, cause: BaseException):
        super().__init__(f"replication {rep} failed: {cause}")
        self.rep = rep


@lru_cache(maxsize=32)
def _cdiamond(frame: Frame) -> float:
    return calibrate_cdiamond(frame)


@dataclass(frozen=True)
class EstimatorRecipe:
    """How to fit an estimator for a given sample size.

    ``delta`` / ``J`` pin the kernel bandwidth or linear level; otherwise the
    smoothness ``s`` drives the theoretical schedule.  Threshold fits accept
    ``kappa``, ``c_diamond``, ``A`` and ``lambda_n`` overrides.
    """

    kind: str = "kernel"
    s: float = 2.0
    delta: float | None = None
    J: int | None = None
    b: float = 2.0
    c6: float = 1.0
    kappa: float | None = None
    c_diamond: float | None = None
    A: float | None = None
    lambda_n: float | None = None
    sup_norm_mode: bool = False

    def __post_init__(self):
        if self.kind not in {"kernel", "linear", "threshold"}:
            raise ValueError(f"unknown estimator kind {self.kind!r}")

    def descriptor(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorRecipe":
        return cls(**d)

    def fit(self, model: SpaceModel, data: SampleSet):
        n = data.n
        d = model.homogeneous_dim
        if self.kind == "kernel":
            delta = self.delta if self.delta is not None else bandwidth_rule(n, self.s, d, self.sup_norm_mode)
            return fit_kernel(model, data, delta)
        if self.kind == "linear":
            J = self.J if self.J is not None else choose_J_linear(n, self.s, d, self.b, self.sup_norm_mode)
            return fit_linear_wavelet(cached_frame(model, self.b, J, self.c6), data, J)
        frame = cached_frame(model, self.b, choose_Jn(n, self.b, d), self.c6)
        cd = self.c_diamond
        if cd is None and self.kappa is None and self.lambda_n is None:
            cd = _cdiamond(frame)
        return fit_threshold(frame, data, c_diamond=cd, A=self.A, kappa=self.kappa, lambda_n=self.lambda_n)


def default_risk_grid(model: SpaceModel) -> QuadratureGrid:
    """Exact grid used for L^p errors: 4096 nodes on the circle, degree 64 elsewhere."""
    if model.kind == "circle":
        return model.audit_grid(1024)
    if model.kind == "jacobi":
        return model.audit_grid(256)
    return model.audit_grid(64 if model.kind == "sphere2" else 24)


def lp_error(model: SpaceModel, fhat, f, p: float, grid: QuadratureGrid | None = None) -> float:
    """``||fhat - f||_p`` by quadrature; ``p = inf`` takes the max over the grid."""
    if not (p == math.inf or p >= 1):
        raise ValueError("p must be >= 1 or inf")
    grid = grid or default_risk_grid(model)
    a = _values(fhat, grid)
    b = _values(f, grid)
    return lp_norm(a - b, grid, p)


def _values(g, grid):
    if callable(g):
        return np.asarray(g(grid.nodes), dtype=float)
    return np.broadcast_to(np.asarray(g, dtype=float), (len(grid),))


@dataclass(frozen=True)
class MCRisk:
    mean: float
    stderr: float
    errors: tuple

    def __iter__(self):
        yield self.mean
        yield self.stderr


def _summarize(errors) -> MCRisk:
    errors = tuple(float(e) for e in errors)
    m = len(errors)
    mean = math.fsum(errors) / m
    var = math.fsum((e - mean) ** 2 for e in errors) / (m - 1)
    return MCRisk(mean, math.sqrt(var / m), errors)


def mc_risk(
    model: SpaceModel,
    recipe: EstimatorRecipe,
    f: TestDensity,
    n: int,
    p: float,
    reps: int,
    rng: RandomStream,
    grid: QuadratureGrid | None = None,
    threads: int = 1,
    target=None,
) -> MCRisk:
    """Mean and standard error of ``||fhat_n - f||_p`` over ``reps`` fits.

    Replication ``r`` samples from ``rng.child(r)``, so results do not depend
    on ``threads``.  ``target`` replaces ``f`` as the comparison function
    (used to isolate the stochastic term).
    """
    if reps < 2:
        raise ValueError("need reps >= 2")
    grid = grid or default_risk_grid(model)
    ref = _values(f if target is None else target, grid)

    def one(r: int) -> float:
        try:
            data = density_sample(f, n, rng.child(r).generator)
            est = recipe.fit(model, data)
            return lp_norm(est(grid.nodes) - ref, grid, p)
        except Exception as exc:  # noqa: BLE001 - re-raised with the replication index
            raise ReplicationError(r, exc) from exc

    if threads <= 1:
        errors = [one(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            errors = list(pool.map(one, range(reps)))
    return _summarize(errors)


def bias_term(model: SpaceModel, f: TestDensity, delta: float, p: float, grid: QuadratureGrid | None = None) -> float:
    """``||Phi(delta sqrt L) f - f||_p``.

    Exact in the spectral domain when ``f`` has an expansion; otherwise the
    smoothing is applied by quadrature on a fine grid.
    """
    grid = grid or default_risk_grid(model)
    if f.expansion is not None:
        m = phi_lp()
        lam = model.eigenvalues(f.expansion.degree)
        factor = m(delta * np.sqrt(lam)) - 1.0
        diff = f.expansion.filtered(lambda k: factor[k])
        return lp_norm(diff(grid.nodes), grid, p)
    kern = SpectralKernel(model, phi_lp(), delta)
    fine = grid
    smoothed = kern.apply(grid.nodes, fine.nodes, fine.weights * _values(f, fine))
    return lp_norm(smoothed - _values(f, grid), grid, p)


def oracle_audit(
    model: SpaceModel,
    f: TestDensity,
    deltas,
    ns,
    p: float,
    reps: int,
    rng: RandomStream,
    grid: QuadratureGrid | None = None,
    threads: int = 1,
) -> dict:
    """Fit the constant in the kernel-estimator oracle inequality over a sweep.

    For ``p >= 2`` the stochastic scale is
    ``(n delta^d)^{-(1 - 1/p)} + ||f||_{p/2}^{1/2} (n delta^d)^{-1/2}``; for
    ``p < 2`` it is ``mu^{1/p - 1/2} (n delta^d)^{-1/2}`` (support = whole
    space).  Each point reports the smallest ``c`` for which
    ``E||fhat - Phi f||_p <= c * scale``; by the triangle inequality that
    also gives ``LHS <= c * scale + bias``.
    """
    grid = grid or default_risk_grid(model)
    d = model.homogeneous_dim
    fv = _values(f, grid)
    points = []
    for i, n in enumerate(ns):
        for k, delta in enumerate(deltas):
            recipe = EstimatorRecipe("kernel", delta=float(delta))
            stream = rng.child(i, k)
            lhs = mc_risk(model, recipe, f, n, p, reps, stream, grid, threads)
            smooth = SpectralKernel(model, phi_lp(), delta)
            if f.expansion is not None:
                sf = f.expansion.apply_multiplier(phi_lp(), delta)
            else:
                w = grid.weights * fv
                sf = lambda x, _k=smooth, _w=w: _k.apply(x, grid.nodes, _w)  # noqa: E731
            stoch = mc_risk(model, recipe, f, n, p, reps, stream, grid, threads, target=sf)
            bias = bias_term(model, f, delta, p, grid)
            nd = n * delta**d
            if p >= 2:
                fnorm = lp_norm(fv, grid, p / 2) if p > 2 else float(grid.weights @ np.abs(fv))
                scale = nd ** -(1 - 1 / p) + math.sqrt(fnorm) * nd**-0.5
            else:
                scale = model.total_measure ** (1 / p - 0.5) * nd**-0.5
            points.append(
                {
                    "n": int(n),
                    "delta": float(delta),
                    "lhs": lhs.mean,
                    "lhs_stderr": lhs.stderr,
                    "stochastic": stoch.mean,
                    "bias": bias,
                    "scale": scale,
                    "c_point": stoch.mean / scale,
                    "holds": lhs.mean <= stoch.mean + bias + 2 * lhs.stderr,
                }
            )
    cs = [pt["c_point"] for pt in points]
    return {"p": p, "points": points, "c": max(cs), "stability": max(cs) / min(cs)}


def fit_slope(ns, risks):
    """OLS of ``log risk`` on ``log n``: slope, 95% CI and R^2."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(risks, dtype=float))
    res = stats.linregress(x, y)
    half = stats.t.ppf(0.975, len(x) - 2) * res.stderr
    return float(res.slope), (float(res.slope - half), float(res.slope + half)), float(res.rvalue**2)


def theory_slope(kind: str, s: float, d: float, p: float = 2.0, r: float | None = None) -> float:
    """``-s/(2s+d)``, or the sparse-case exponent when ``r`` is given for thresholding."""
    if kind == "threshold" and r is not None:
        num = s - d * (1 / r - (0 if p == math.inf else 1 / p))
        den = 2 * (s - d * (1 / r - 0.5))
        return -num / den
    return -s / (2 * s + d)


@dataclass(frozen=True)
class RiskEntry:
    n: int
    risk_mean: float
    risk_stderr: float
    reps: int
    errors: tuple = field(repr=False)


@dataclass(frozen=True)
class RiskReport:
    entries: tuple
    p: float
    estimator: dict
    density: dict
    space: dict
    fitted_slope: float
    slope_ci: tuple
    r_squared: float
    theory_slope: float

    def to_dict(self) -> dict:
        return {
            "space": self.space,
            "density": self.density,
            "estimator": self.estimator,
            "p": _num(self.p),
            "entries": [
                {"n": e.n, "risk_mean": e.risk_mean, "risk_stderr": e.risk_stderr, "reps": e.reps, "errors": list(e.errors)}
                for e in self.entries
            ],
            "fitted_slope": self.fitted_slope,
            "slope_ci": list(self.slope_ci),
            "r_squared": self.r_squared,
            "theory_slope": self.theory_slope,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "n", "rep", "error", "risk_mean", "risk_stderr", "reps"])
        for e in self.entries:
            for r, err in enumerate(e.errors):
                w.writerow(["rep", e.n, r, repr(err), "", "", ""])
        for e in self.entries:
            w.writerow(["summary", e.n, "", "", repr(e.risk_mean), repr(e.risk_stderr), e.reps])
        return buf.getvalue()

    def plot_data(self) -> str:
        lines = ["log_n log_risk"]
        for e in self.entries:
            lines.append(f"{math.log(e.n)!r} {math.log(e.risk_mean)!r}")
        return "\n".join(lines) + "\n"

    def summary_line(self) -> str:
        lo, hi = self.slope_ci
        return (
            f"fitted slope {self.fitted_slope:.4f} (95% CI {lo:.4f}..{hi:.4f}, R^2 {self.r_squared:.4f}) "
            f"vs theory {self.theory_slope:.4f}"
        )


def _num(x):
    return "inf" if x == math.inf else x


def rate_experiment(
    model: SpaceModel,
    f: TestDensity,
    recipe: EstimatorRecipe,
    n_grid,
    reps: int,
    p: float,
    seed: int,
    threads: int = 1,
    r: float | None = None,
    grid: QuadratureGrid | None = None,
    progress=None,
) -> RiskReport:
    """Monte-Carlo risk across ``n_grid`` with the recipe's schedule and a log-log fit."""
    n_grid = [int(n) for n in n_grid]
    if len(n_grid) < 4:
        raise ValueError("need at least 4 sample sizes")
    if reps < 2:
        raise ValueError("need reps >= 2")
    grid = grid or default_risk_grid(model)
    root = RandomStream(seed)
    entries = []
    for i, n in enumerate(n_grid):
        res = mc_risk(model, recipe, f, n, p, reps, root.child(i), grid, threads)
        entries.append(RiskEntry(n, res.mean, res.stderr, reps, res.errors))
        if progress:
            progress(n, res)
    slope, ci, r2 = fit_slope(n_grid, [e.risk_mean for e in entries])
    return RiskReport(
        tuple(entries),
        p,
        recipe.descriptor(),
        f.descriptor(),
        model.descriptor(),
        slope,
        ci,
        r2,
        theory_slope(recipe.kind, recipe.s, model.homogeneous_dim, p, r),
    )
