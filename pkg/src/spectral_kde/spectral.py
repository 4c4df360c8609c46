"""Spectral multipliers and the integral kernels they induce.

A multiplier ``m`` is an even function on the half line; on a space with
eigenvalues ``lambda_k`` and eigenspace reproducing kernels ``P_k`` the
operator ``m(delta sqrt(L))`` has kernel

    K(x, y) = sum_k m(delta sqrt(lambda_k)) P_k(x, y).

For compactly supported ``m`` the sum is finite, so kernels are exact
trigonometric / polynomial sums.  :class:`KernelExpansion` represents
finite combinations ``sum_j w_j K(x, y_j)`` and is the common currency for
estimators, frame syntheses and test densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import GridError, NumericalError, SpectralBudgetError
from .geometry import QuadratureGrid, SpaceModel, as_generator

__all__ = [
    "smooth_step",
    "Multiplier",
    "phi_lp",
    "psi0",
    "psi_j",
    "root_psi_j",
    "sqdiff_psi_j",
    "heat",
    "tabulated",
    "eval_multiplier",
    "SpectralKernel",
    "eval_kernel",
    "KernelExpansion",
    "random_bandlimited",
    "markov_defect",
    "localization_fit",
    "nikolski_ratio",
    "lp_norm",
    "HEAT_CUTOFF",
]

# Heat coefficients below 1e-16 are dropped: exp(-t^2) < 1e-16 for t > HEAT_CUTOFF.
HEAT_CUTOFF = math.sqrt(-math.log(1e-16))


def smooth_step(u):
    """C-infinity step from 1 (``u <= 0``) to 0 (``u >= 1``).

    ``sigma(u) = g(1-u) / (g(u) + g(1-u))`` with ``g(u) = exp(-1/u)`` for
    ``u > 0``; evaluated as ``expit(1/u - 1/(1-u))`` so that
    ``sigma(u) + sigma(1 - u) = 1`` to rounding.
    """
    u = np.asarray(u, dtype=float)
    out = np.where(u <= 0.0, 1.0, 0.0)
    mid = (u > 0.0) & (u < 1.0)
    if np.any(mid):
        um = u[mid]
        with np.errstate(over="ignore", divide="ignore"):
            out[mid] = expit(1.0 / um - 1.0 / (1.0 - um))
    return out if out.ndim else float(out)


_KINDS = {"phi", "psi0", "psij", "root_psij", "sqdiff_psij", "heat", "tabulated"}
_BANDS = {"psij", "root_psij", "sqdiff_psij"}


@dataclass(frozen=True)
class Multiplier:
    """An even multiplier function evaluated on ``[0, inf)``.

    ``kind`` is one of ``"phi"`` (Littlewood-Paley bump: 1 on [0, 1/2],
    0 beyond 1), ``"psi0"`` (1 on [0, 1], 0 beyond ``b``), ``"psij"`` (band
    ``psi0(b^-j t) - psi0(b^-j+1 t)``), ``"root_psij"`` (square root of that
    band, used by the tight frame), ``"sqdiff_psij"`` (square root of the
    difference of squared ``psi0`` dilates), ``"heat"`` (``exp(-t^2)``) and
    ``"tabulated"`` (piecewise linear through ``samples``).
    """

    kind: str
    b: float = 2.0
    j: int = 0
    samples: tuple = field(default=(), compare=True)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown multiplier kind {self.kind!r}")
        if (self.kind == "psi0" or self.kind in _BANDS) and not self.b > 1:
            raise ValueError("dilation base b must exceed 1")
        if self.j < 0:
            raise ValueError("band index j must be nonnegative")
        if self.kind == "tabulated":
            t = np.asarray([s[0] for s in self.samples], dtype=float)
            if len(t) < 2 or np.any(np.diff(t) <= 0) or t[0] < 0:
                raise ValueError("tabulated samples need increasing nonnegative abscissae")

    @property
    def support_radius(self) -> float:
        if self.kind == "phi":
            return 1.0
        if self.kind == "psi0":
            return self.b
        if self.kind in _BANDS:
            return self.b ** (self.j + 1)
        if self.kind == "heat":
            return math.inf
        return float(self.samples[-1][0])

    @property
    def cutoff_radius(self) -> float:
        """Support radius, or the numerical cutoff for the heat multiplier."""
        return HEAT_CUTOFF if self.kind == "heat" else self.support_radius

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("multipliers are evaluated on t >= 0")
        if self.kind == "phi":
            out = smooth_step(2.0 * t - 1.0)
        elif self.kind == "psi0":
            out = _psi0(t, self.b)
        elif self.kind == "psij":
            out = _band(t, self.b, self.j)
        elif self.kind == "root_psij":
            out = np.sqrt(np.maximum(_band(t, self.b, self.j), 0.0))
        elif self.kind == "sqdiff_psij":
            out = _sqdiff(t, self.b, self.j)
        elif self.kind == "heat":
            out = np.exp(-t * t)
            out = np.where(t > HEAT_CUTOFF, 0.0, out)
        else:
            ts = np.array([s[0] for s in self.samples], dtype=float)
            vs = np.array([s[1] for s in self.samples], dtype=float)
            out = np.interp(t, ts, vs, right=0.0)
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    def descriptor(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "psi0" or self.kind in _BANDS:
            d["b"] = self.b
        if self.kind in _BANDS:
            d["j"] = self.j
        if self.kind == "tabulated":
            d["samples"] = [list(s) for s in self.samples]
        return d

    @classmethod
    def from_descriptor(cls, d: dict) -> "Multiplier":
        d = dict(d)
        if "samples" in d:
            d["samples"] = tuple(tuple(float(v) for v in s) for s in d["samples"])
        return cls(**d)


def _psi0(t, b):
    return smooth_step((np.asarray(t, dtype=float) - 1.0) / (b - 1.0))


def _band(t, b, j):
    if j == 0:
        return _psi0(t, b)
    return _psi0(t * b ** (-j), b) - _psi0(t * b ** (-j + 1), b)


def _sqdiff(t, b, j):
    if j == 0:
        return _psi0(t, b)
    hi = _psi0(t * b ** (-j), b)
    lo = _psi0(t * b ** (-j + 1), b)
    return np.sqrt(np.maximum(hi * hi - lo * lo, 0.0))


def phi_lp() -> Multiplier:
    return Multiplier("phi")


def psi0(b: float = 2.0) -> Multiplier:
    return Multiplier("psi0", b=b)


def psi_j(b: float, j: int) -> Multiplier:
    return Multiplier("psij", b=b, j=j)


def root_psi_j(b: float, j: int) -> Multiplier:
    return Multiplier("root_psij", b=b, j=j)


def sqdiff_psi_j(b: float, j: int) -> Multiplier:
    return Multiplier("sqdiff_psij", b=b, j=j)


def heat() -> Multiplier:
    return Multiplier("heat")


def tabulated(t, values) -> Multiplier:
    return Multiplier("tabulated", samples=tuple(zip(map(float, t), map(float, values))))


def eval_multiplier(m: Multiplier, t):
    return m(t)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


class SpectralKernel:
    """The kernel of ``m(delta sqrt(L))`` on ``model``.

    Coefficients ``m(delta sqrt(lambda_k))`` for ``k <= k_cut`` are computed
    once at construction; evaluation only touches that cached vector.
    """

    def __init__(self, model: SpaceModel, multiplier: Multiplier, delta: float = 1.0):
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.model = model
        self.multiplier = multiplier
        self.delta = float(delta)
        radius = multiplier.cutoff_radius
        k_cut = model.degree_for_band(radius / self.delta)
        if k_cut > model.k_max:
            raise SpectralBudgetError(
                f"kernel needs degree {k_cut} but {model.kind} allows k_max={model.k_max}"
            )
        k_cut = max(k_cut, 0)
        coeffs = multiplier(self.delta * np.sqrt(model.eigenvalues(k_cut)))
        nz = np.nonzero(coeffs)[0]
        self.k_cut = int(nz[-1]) if nz.size else 0
        self.coeffs = np.array(coeffs[: self.k_cut + 1], dtype=float)
        self.coeffs.setflags(write=False)

    def __repr__(self):
        return f"SpectralKernel({self.model!r}, {self.multiplier.kind}, delta={self.delta}, k_cut={self.k_cut})"

    def __call__(self, x, y):
        return eval_kernel(self, x, y)

    def matrix(self, x, y) -> np.ndarray:
        return self.model.kernel_matrix(self.coeffs, x, y)

    def apply(self, x, centers, weights) -> np.ndarray:
        return self.model.apply(self.coeffs, x, centers, weights)


def eval_kernel(kernel: SpectralKernel, x, y):
    """``sum_{k <= k_cut} m(delta sqrt(lambda_k)) P_k(x, y)`` for all pairs."""
    from .geometry import _squeeze_like

    return _squeeze_like(kernel.matrix(x, y), x, y, kernel.model.point_dim)


@dataclass(frozen=True)
class KernelExpansion:
    """A finite sum ``sum_terms sum_j w_j sum_k c_k P_k(x, y_j)``.

    Each term is a triple ``(coeffs, centers, weights)``.  The class is
    closed under addition, scaling and spectral multipliers.
    """

    model: SpaceModel
    terms: tuple = ()

    @classmethod
    def single(cls, model, coeffs, centers, weights) -> "KernelExpansion":
        centers = np.asarray(centers, dtype=float)
        if model.point_dim == 0:
            centers = np.atleast_1d(centers)
        else:
            centers = np.atleast_2d(centers)
        weights = np.broadcast_to(np.asarray(weights, dtype=float), (len(centers),)).copy()
        return cls(model, ((np.asarray(coeffs, dtype=float), centers, weights),))

    @classmethod
    def constant(cls, model, value: float) -> "KernelExpansion":
        anchor = model.uniform_sample(np.random.default_rng(0))
        return cls.single(model, [value * model.total_measure], anchor, [1.0])

    def __call__(self, x):
        pts = self.model.as_points(x)
        single = np.ndim(pts) == (0 if self.model.point_dim == 0 else 1)
        n = 1 if single else len(pts)
        out = np.zeros(n)
        for c, y, w in self.terms:
            out += self.model.apply(c, pts, y, w)
        return float(out[0]) if single else out

    def __add__(self, other):
        if not isinstance(other, KernelExpansion):
            return NotImplemented
        if other.model != self.model:
            raise ValueError("cannot add expansions on different spaces")
        return KernelExpansion(self.model, self.terms + other.terms)

    def __mul__(self, scalar):
        scalar = float(scalar)
        return KernelExpansion(self.model, tuple((c, y, w * scalar) for c, y, w in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    @property
    def degree(self) -> int:
        """Largest eigen-index with a nonzero coefficient."""
        deg = 0
        for c, _, _ in self.terms:
            nz = np.nonzero(c)[0]
            if nz.size:
                deg = max(deg, int(nz[-1]))
        return deg

    def filtered(self, fn) -> "KernelExpansion":
        """Apply the multiplier ``fn`` given as a function of eigen-index arrays."""
        out = []
        for c, y, w in self.terms:
            k = np.arange(len(c))
            out.append((c * np.asarray(fn(k), dtype=float), y, w))
        return KernelExpansion(self.model, tuple(out))

    def apply_multiplier(self, m: Multiplier, delta: float = 1.0) -> "KernelExpansion":
        lam = self.model.eigenvalues(self.degree)
        vals = m(delta * np.sqrt(lam))
        return self.filtered(lambda k: vals[k])

    def mean(self) -> float:
        """Integral over the space (only the k = 0 component contributes)."""
        total = 0.0
        for c, _, w in self.terms:
            total += c[0] * math.fsum(w)
        return float(total)


def random_bandlimited(model: SpaceModel, band: float, rng, mean_zero: bool = False) -> KernelExpansion:
    """Random function with spectrum in ``sqrt(lambda) <= band``.

    Built as the band projector applied to weighted white noise on an exact
    quadrature grid, so the coefficients in any orthonormal eigenbasis are
    i.i.d. standard normal.
    """
    gen = as_generator(rng)
    K = model.degree_for_band(band)
    if K < 0:
        raise ValueError("band admits no eigenvalue")
    grid = model.quadrature_grid(max(band, 1e-9))
    coeffs = np.ones(K + 1)
    if mean_zero:
        coeffs[0] = 0.0
    noise = gen.standard_normal(len(grid)) * np.sqrt(grid.weights)
    return KernelExpansion.single(model, coeffs, grid.nodes, noise)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def markov_defect(kernel: SpectralKernel, x, grid: QuadratureGrid) -> float:
    """``|int K(x, y) dmu(y) - m(0)|`` by quadrature (max over the points ``x``)."""
    need = kernel.multiplier.cutoff_radius / kernel.delta
    if grid.exact_degree < need * (1 - 1e-12):
        raise GridError(f"grid band {grid.exact_degree} below required {need}")
    vals = kernel.apply(x, grid.nodes, grid.weights)
    return float(np.max(np.abs(vals - kernel.multiplier(0.0))))


def localization_fit(kernel: SpectralKernel, x, probes, scale: float | None = None):
    """Least-squares decay exponent of ``|K(x, y)|`` in ``1 + rho(x, y) / scale``.

    Uses probes with ``rho > 5 * scale`` and ``|K| > 1e-13``.  Returns None
    (the "flat" sentinel) when only the constant eigenspace survives.
    """
    scale = kernel.delta if scale is None else scale
    if kernel.k_cut == 0:
        return None
    rho = np.atleast_1d(kernel.model.distance_matrix(x, probes)[0])
    vals = np.abs(np.atleast_1d(kernel.matrix(x, probes)[0]))
    keep = (rho > 5 * scale) & (vals > 1e-13)
    if keep.sum() < 3:
        raise ValueError("too few usable probes for a decay fit")
    slope, _ = np.polyfit(np.log1p(rho[keep] / scale), np.log(vals[keep]), 1)
    return float(slope)


def lp_norm(values, grid: QuadratureGrid, p: float) -> float:
    """Discrete ``L^p(mu)`` norm of nodal values; ``p = inf`` takes the max."""
    v = np.abs(np.asarray(values, dtype=float))
    if p == math.inf:
        return float(v.max())
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((grid.weights @ v**p) ** (1.0 / p))


def nikolski_ratio(model: SpaceModel, lam: float, p: float, q: float, g, grid: QuadratureGrid | None = None) -> float:
    """``||g||_q / (lam^{d(1/p - 1/q)} ||g||_p)`` for band-limited ``g``.

    ``grid`` defaults to an exact rule four times finer than the band, which
    also serves as the sup-norm audit set.
    """
    if not 1 <= p <= q:
        raise ValueError("need 1 <= p <= q")
    grid = grid or model.quadrature_grid(4 * lam)
    vals = g(grid.nodes) if callable(g) else np.asarray(g, dtype=float)
    gp = lp_norm(vals, grid, p)
    if gp == 0:
        raise NumericalError("degenerate band-limited function (zero norm)")
    gq = lp_norm(vals, grid, q)
    expo = model.homogeneous_dim * (1.0 / p - (0.0 if q == math.inf else 1.0 / q))
    return gq / (lam**expo * gp)
