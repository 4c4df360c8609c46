"""Ground-truth test densities and seeded sampling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError
from .estimators import SampleSet
from .frames import Frame, analyze, analyze_expansion, besov_body_norm
from .geometry import Circle, SpaceModel, as_generator
from .spectral import KernelExpansion, random_bandlimited

__all__ = [
    "RandomStream",
    "TestDensity",
    "make_uniform",
    "make_bandlimited_density",
    "make_heat_mixture",
    "make_smooth_density",
    "make_kinked_density",
    "make_density",
    "circle_heat_kernel",
    "density_sample",
    "inverse_cdf_sample",
    "density_besov_diagnostic",
]

log = logging.getLogger(__name__)

# Heat coefficients exp(-t lambda) below exp(-HEAT_EXPONENT) are dropped.
HEAT_EXPONENT = 39.0


@dataclass(frozen=True)
class RandomStream:
    """A reproducible random stream keyed by ``(seed, stream_index)``.

    ``stream_index`` may be an integer or a tuple of integers; streams with
    different indices come from independent ``SeedSequence`` children.
    """

    seed: int
    stream_index: int | tuple = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        key = self.stream_index if isinstance(self.stream_index, tuple) else (self.stream_index,)
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(k) for k in key))
        object.__setattr__(self, "_gen", np.random.Generator(np.random.PCG64(ss)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, *index: int) -> "RandomStream":
        key = self.stream_index if isinstance(self.stream_index, tuple) else (self.stream_index,)
        return RandomStream(self.seed, key + tuple(index))


@dataclass(frozen=True, eq=False)
class TestDensity:
    """A probability density with exact evaluation and a certified sup bound.

    ``expansion`` (when present) is an exact spectral representation used for
    bias and frame computations; ``evaluator`` is a faster pointwise formula
    for the same function.
    """

    __test__ = False  # not a pytest class

    model: SpaceModel
    form: str
    params: dict
    sup_bound: float
    expansion: KernelExpansion | None = None
    evaluator: Callable | None = None

    def __call__(self, x):
        if self.evaluator is not None:
            return self.evaluator(x)
        return self.expansion(x)

    def descriptor(self) -> dict:
        return {"form": self.form, **self.params}

    def audit(self, resolution: int = 128) -> dict:
        """Check nonnegativity, unit mass and the sup bound on a dense grid.

        The mass comes from the exact spectral mean when an expansion is
        available and from the grid otherwise.
        """
        grid = self.model.audit_grid(resolution)
        vals = np.asarray(self(grid.nodes), dtype=float)
        report = {
            "min": float(vals.min()),
            "max": float(vals.max()),
            "mass": self.expansion.mean() if self.expansion is not None else grid.integrate(vals),
            "sup_bound": self.sup_bound,
        }
        if report["min"] < -1e-12:
            raise NumericalError(f"{self.form} density is negative ({report['min']})")
        if abs(report["mass"] - 1.0) > 1e-8:
            raise NumericalError(f"{self.form} density has mass {report['mass']}")
        if report["max"] > self.sup_bound:
            raise NumericalError(f"{self.form} density exceeds its sup bound")
        return report


def _certify(model: SpaceModel, f, resolution: int = 128) -> float:
    """Audited maximum inflated by 5%."""
    grid = model.audit_grid(resolution)
    return 1.05 * float(np.max(f(grid.nodes)))


def make_uniform(model: SpaceModel) -> TestDensity:
    value = 1.0 / model.total_measure
    g = KernelExpansion.constant(model, value)
    return TestDensity(model, "uniform", {}, 1.05 * value, g)


def make_bandlimited_density(model: SpaceModel, band: float, rng, roughness: float = 0.5) -> TestDensity:
    """``(1/mu)(1 + roughness T / M)`` for a random mean-zero band-limited ``T``.

    ``M`` is 1.05 times the audited sup of ``|T|``, which keeps the density
    nonnegative for every ``roughness`` in [0, 1).
    """
    if not 0 <= roughness < 1:
        raise ValueError("roughness must lie in [0, 1)")
    if roughness == 0:
        return make_uniform(model)
    gen = as_generator(rng)
    T = random_bandlimited(model, band, gen, mean_zero=True)
    grid = model.audit_grid(max(64, int(math.ceil(8 * band))) if model.kind != "su2" else 24)
    M = 1.05 * float(np.max(np.abs(T(grid.nodes))))
    if M == 0:
        raise NumericalError("band admits only constants")
    mu = model.total_measure
    g = KernelExpansion.constant(model, 1.0 / mu) + T * (roughness / (mu * M))
    return TestDensity(model, "bandlimited", {"band": band, "roughness": roughness}, (1.0 + roughness) / mu, g)


def circle_heat_kernel(t: float, x, c: float) -> np.ndarray:
    """Heat kernel ``1/2 + sum_k exp(-t k^2 pi^2) cos(k pi (x - c))`` on the circle.

    Evaluated as the periodised Gaussian of variance ``2t``.
    """
    x = np.asarray(x, dtype=float)
    u = np.mod(x - c + 1.0, 2.0) - 1.0
    M = int(math.ceil((math.sqrt(4 * t * 45.0) + 1.0) / 2.0)) + 1
    shifts = 2.0 * np.arange(-M, M + 1)
    z = u[..., None] + shifts
    return np.exp(-z * z / (4.0 * t)).sum(axis=-1) / math.sqrt(4.0 * math.pi * t)


def _heat_coeffs(model: SpaceModel, t: float) -> np.ndarray:
    K = model.degree_for_band(math.sqrt(HEAT_EXPONENT / t))
    if K > model.k_max:
        raise ValueError(f"heat time {t} needs degree {K} > k_max={model.k_max}")
    return np.exp(-t * model.eigenvalues(K))


def make_heat_mixture(model: SpaceModel, centers, times, weights, form: str = "heat_mixture", params=None) -> TestDensity:
    """``sum_m w_m p_{t_m}(x, c_m)`` with heat kernels ``p_t``; weights are normalised."""
    times = np.asarray(times, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if np.any(times <= 0) or np.any(weights < 0) or weights.sum() <= 0:
        raise ValueError("need positive times and nonnegative weights")
    weights = weights / weights.sum()
    pts = model.as_points(centers)
    pts = np.atleast_1d(pts) if model.point_dim == 0 else np.atleast_2d(pts)
    if len(pts) == 1 and len(times) > 1:
        pts = np.repeat(pts, len(times), axis=0)
    if not len(pts) == len(times) == len(weights):
        raise ValueError("centers, times and weights must have equal length")

    # components sharing a center collapse into one coefficient vector
    terms = []
    groups: dict = {}
    for i, p in enumerate(pts):
        groups.setdefault(np.asarray(p).tobytes(), []).append(i)
    for idx in groups.values():
        K = max(len(_heat_coeffs(model, times[i])) for i in idx)
        c = np.zeros(K)
        for i in idx:
            h = _heat_coeffs(model, times[i])
            c[: len(h)] += weights[i] * h
        terms.append((c, pts[idx[0] : idx[0] + 1], np.ones(1)))
    g = KernelExpansion(model, tuple(terms))

    evaluator = None
    if isinstance(model, Circle):
        def evaluator(x, _pts=pts, _t=times, _w=weights):
            x = np.asarray(x, dtype=float)
            out = np.zeros(np.shape(x))
            for c, t, w in zip(_pts, _t, _w):
                out = out + w * circle_heat_kernel(t, x, c)
            return out if np.ndim(out) else float(out)

    if params is None:
        params = {"centers": pts.tolist(), "times": times.tolist(), "weights": weights.tolist()}
    f = TestDensity(model, form, params, 1.0, g, evaluator)
    return TestDensity(model, form, params, _certify(model, f), g, evaluator)


# Smallest heat time per space, chosen so the expansion stays inside k_max.
_T_MIN = {"circle": 2e-6, "jacobi": 1e-5, "sphere2": 1e-4, "su2": 1e-3}


def make_smooth_density(model: SpaceModel, s: float, center=None, t_max: float = 1.0, t_min: float | None = None) -> TestDensity:
    """Heat mixture whose spectral tail gives ``L^2`` approximation order ``s``.

    Times are ``t_max 2^-m`` down to ``t_min`` with weights proportional to
    ``t^((s + d/2) / 2)``, so the eigen-coefficients decay like
    ``lambda^-(s + d/2)/2`` across the covered spectral range.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    t_min = _T_MIN[model.kind] if t_min is None else t_min
    if center is None:
        center = 0.0 if model.point_dim == 0 else np.eye(model.point_dim)[-1]
    m = int(math.floor(math.log2(t_max / t_min)))
    times = t_max * 2.0 ** -np.arange(m + 1)
    gamma = (s + model.homogeneous_dim / 2.0) / 2.0
    weights = times**gamma
    params = {"s": s, "center": np.asarray(center, dtype=float).tolist(), "t_max": t_max, "t_min": t_min}
    return make_heat_mixture(model, [center], times, weights, form="smooth", params=params)


def make_kinked_density(model: SpaceModel, amplitude: float = 1.0) -> TestDensity:
    """Circle density ``1/2 + a (1/2 - |x|)`` with a corner at 0 and at the antipode."""
    if not isinstance(model, Circle):
        raise ValueError("the kinked density is defined on the circle only")
    if not 0 < amplitude <= 1:
        raise ValueError("amplitude must lie in (0, 1]")

    def evaluator(x, a=amplitude):
        x = model.as_points(x)
        return 0.5 + a * (0.5 - np.abs(x))

    return TestDensity(model, "kinked", {"amplitude": amplitude}, 0.5 + 0.5 * amplitude, None, evaluator)


def make_density(model: SpaceModel, config: dict, rng=None) -> TestDensity:
    """Build a density from a config entry such as ``{"form": "smooth", "s": 2}``."""
    config = dict(config)
    form = config.pop("form")
    if form == "uniform":
        f = make_uniform(model)
    elif form == "bandlimited":
        f = make_bandlimited_density(model, config["band"], rng if rng is not None else 0, config.get("roughness", 0.5))
    elif form == "heat_mixture":
        f = make_heat_mixture(model, config["centers"], config["times"], config["weights"])
    elif form == "smooth":
        f = make_smooth_density(model, config["s"], config.get("center"), config.get("t_max", 1.0), config.get("t_min"))
    elif form == "kinked":
        f = make_kinked_density(model, config.get("amplitude", 1.0))
    else:
        raise ValueError(f"unknown density form {form!r}")
    f.audit()
    return f


def density_sample(f: TestDensity, n: int, rng, max_batches: int = 10_000) -> SampleSet:
    """Exact rejection sampling from uniform proposals.

    A proposal ``x`` is kept when ``U sup_bound <= f(x)``; the acceptance
    rate is ``1 / (sup_bound mu)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    model = f.model
    rate = 1.0 / (f.sup_bound * model.total_measure)
    if rate < 1e-3:
        raise NumericalError(f"acceptance rate {rate:.2e} below 1e-3")
    log.debug("rejection sampling %s: acceptance rate %.4f", f.form, rate)
    gen = as_generator(rng)
    chunks, have = [], 0
    for _ in range(max_batches):
        m = int(math.ceil((n - have) / rate * 1.1)) + 16
        x = model.uniform_sample(gen, m)
        u = gen.random(m)
        keep = u * f.sup_bound <= f(x)
        chunks.append(x[keep])
        have += int(keep.sum())
        if have >= n:
            break
    else:
        raise NumericalError("rejection sampler did not finish")
    pts = np.concatenate(chunks, axis=0)[:n]
    return SampleSet(model, pts)


def inverse_cdf_sample(f: TestDensity, n: int, rng, resolution: int = 1 << 16) -> SampleSet:
    """Inverse-CDF sampling on the circle from a tabulated CDF (independent check of rejection)."""
    if not isinstance(f.model, Circle):
        raise ValueError("inverse-CDF sampling is implemented for the circle only")
    x = np.linspace(-1.0, 1.0, resolution + 1)
    v = np.asarray(f(x), dtype=float)
    cdf = np.concatenate([[0.0], np.cumsum((v[1:] + v[:-1]) * 0.5 * np.diff(x))])
    cdf /= cdf[-1]
    u = as_generator(rng).random(n)
    return SampleSet(f.model, np.interp(u, cdf, x))


def density_besov_diagnostic(f: TestDensity, frame: Frame, s: float, p: float, q: float) -> float:
    """Besov-body norm of the frame coefficients of ``f`` (a diagnostic, not a certified norm)."""
    if f.model != frame.model:
        raise ValueError("frame lives on a different space")
    if f.expansion is not None:
        coeffs = analyze_expansion(frame, f.expansion)
    else:
        coeffs = analyze(frame, f, frame.model.quadrature_grid(8 * frame.b ** (frame.J_max + 1)))
    return besov_body_norm(coeffs, s, p, q, frame.model.homogeneous_dim, frame.b)
