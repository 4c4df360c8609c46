"""Compact metric measure spaces with explicit spectral data.

Four concrete spaces are provided: the periodic interval ``[-1, 1)``
(``Circle``), the interval ``[-1, 1]`` with a Jacobi weight
(``JacobiInterval``), the two-sphere (``Sphere2``) and the group SU(2)
realised as the unit sphere of R^4 (``SU2``).

Points are plain numpy arrays: scalar spaces use shape ``(n,)`` (or a
Python float for a single point), Sphere2 uses ``(n, 3)`` and SU2 uses
``(n, 4)``.

Every space exposes the eigenvalues ``lambda_k`` of its Laplace-type
operator and the reproducing kernels ``P_k(x, y)`` of the eigenspaces.
Spectral kernels ``sum_k c_k P_k(x, y)`` are evaluated by
:meth:`SpaceModel.kernel_matrix` and, summed against weights, by
:meth:`SpaceModel.apply`.  Those two methods are the computational core of
the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import special

from .errors import GridError, SpectralBudgetError

__all__ = [
    "SpaceModel",
    "Circle",
    "JacobiInterval",
    "Sphere2",
    "SU2",
    "Net",
    "QuadratureGrid",
    "make_space",
    "distance",
    "eigenvalue",
    "projector_kernel",
    "eigenspace_dim",
    "ball_volume",
    "build_net",
    "quadrature_grid",
    "uniform_sample",
    "as_generator",
]

# Entries per temporary block when evaluating zonal kernels.
_BLOCK = 1 << 21
# Largest grid the quadrature builder will allocate.
_MAX_GRID_NODES = 4_000_000


def as_generator(rng: Any) -> np.random.Generator:
    """Coerce ``rng`` (Generator, RandomStream-like or int seed) to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if hasattr(rng, "generator"):
        return rng.generator
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")


@dataclass(frozen=True)
class Net:
    """A delta-net with a measurable partition attached.

    ``cell_weights[i]`` is the measure of the cell owned by ``points[i]``.
    """

    level_scale: float
    points: np.ndarray
    cell_weights: np.ndarray

    def __len__(self) -> int:
        return len(self.cell_weights)


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and positive weights integrating band-limited products exactly.

    ``exact_degree`` is the spectral band ``Lambda``: the rule is exact for
    every product ``u * v`` of eigenfunctions with ``sqrt(lambda) <= Lambda``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: float

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, values) -> float:
        values = np.asarray(values, dtype=float)
        return float(self.weights @ values)


class SpaceModel:
    """Base class for the concrete spaces.

    Subclasses set ``kind``, ``homogeneous_dim``, ``total_measure``,
    ``diameter`` and ``point_dim`` (0 for scalar coordinates) and implement
    the geometry-specific hooks.
    """

    kind: str = ""
    homogeneous_dim: float
    total_measure: float
    diameter: float
    point_dim: int = 0

    def __init__(self, k_max: int = 4096):
        if k_max < 1:
            raise ValueError("k_max must be positive")
        self.k_max = int(k_max)

    # -- descriptors -------------------------------------------------------

    def descriptor(self) -> dict:
        return {"kind": self.kind, "k_max": self.k_max}

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.descriptor().items() if k != "kind")
        return f"{type(self).__name__}({args})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SpaceModel) and self.descriptor() == other.descriptor()

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.descriptor().items())))

    # -- spectrum ----------------------------------------------------------

    def eigenvalues(self, kmax: int) -> np.ndarray:
        """Eigenvalues ``lambda_0, ..., lambda_kmax``."""
        return self._eigenvalues(np.arange(kmax + 1, dtype=float))

    def eigenvalue(self, k: int) -> float:
        if k < 0:
            raise ValueError("eigen-index must be nonnegative")
        return float(self._eigenvalues(np.array([float(k)]))[0])

    def eigenspace_dim(self, k: int) -> int:
        raise NotImplementedError

    def degree_for_band(self, band: float) -> int:
        """Largest ``k`` with ``sqrt(lambda_k) <= band`` (``-1`` if none)."""
        if band < 0:
            return -1
        # sqrt(lambda_k) >= k for every space here once k >= 1, so k <= band + 1.
        kmax = int(math.floor(band)) + 2
        roots = np.sqrt(self.eigenvalues(kmax))
        ok = np.nonzero(roots <= band * (1 + 1e-12) + 1e-12)[0]
        return int(ok[-1]) if ok.size else -1

    def _eigenvalues(self, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- points ------------------------------------------------------------

    def as_points(self, x) -> np.ndarray:
        """Validate ``x`` and return it as an array of points."""
        raise NotImplementedError

    def _pair(self, x, y):
        return self.as_points(x), self.as_points(y)

    def distance(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def distance_matrix(self, x, y) -> np.ndarray:
        X = np.atleast_1d(self.as_points(x)) if self.point_dim == 0 else np.atleast_2d(self.as_points(x))
        Y = np.atleast_1d(self.as_points(y)) if self.point_dim == 0 else np.atleast_2d(self.as_points(y))
        if self.point_dim == 0:
            return self.distance(X[:, None], Y[None, :])
        return self.distance(X[:, None, :], Y[None, :, :])

    # -- kernels -----------------------------------------------------------

    def kernel_matrix(self, coeffs, x, y) -> np.ndarray:
        """Matrix ``K[i, j] = sum_k coeffs[k] * P_k(x_i, y_j)``."""
        raise NotImplementedError

    def apply(self, coeffs, x, centers, weights) -> np.ndarray:
        """Vector ``sum_j weights[j] * sum_k coeffs[k] * P_k(x_i, centers_j)``.

        Equivalent to ``kernel_matrix(coeffs, x, centers) @ weights`` but
        never materialises the full matrix.
        """
        raise NotImplementedError

    def projector_kernel(self, k: int, x, y) -> np.ndarray:
        if k < 0:
            raise ValueError("eigen-index must be nonnegative")
        self._check_degree(k)
        coeffs = np.zeros(k + 1)
        coeffs[k] = 1.0
        return _squeeze_like(self.kernel_matrix(coeffs, x, y), x, y, self.point_dim)

    def _check_degree(self, k: int) -> None:
        if k > self.k_max:
            raise SpectralBudgetError(f"degree {k} exceeds k_max={self.k_max} for {self.kind}")

    # -- measure -----------------------------------------------------------

    def ball_volume(self, x, r: float) -> float:
        raise NotImplementedError

    def build_net(self, delta: float) -> Net:
        raise NotImplementedError

    def quadrature_grid(self, Lambda: float) -> QuadratureGrid:
        raise NotImplementedError

    def uniform_sample(self, rng, size: int | None = None) -> np.ndarray:
        raise NotImplementedError

    def audit_grid(self, resolution: int = 64) -> QuadratureGrid:
        """A dense exact grid used for sup-norm audits and L^p errors."""
        return self.quadrature_grid(resolution * math.pi if self.kind == "circle" else float(resolution))


def _squeeze_like(mat: np.ndarray, x, y, point_dim: int):
    single = 0 if point_dim == 0 else 1
    x_single = np.ndim(x) == single
    y_single = np.ndim(y) == single
    if x_single and y_single:
        return float(mat[0, 0])
    if x_single:
        return mat[0]
    if y_single:
        return mat[:, 0]
    return mat


def _trim(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float).ravel()
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1] if nz.size else c[:1] * 0.0


# ---------------------------------------------------------------------------
# Circle
# ---------------------------------------------------------------------------


class Circle(SpaceModel):
    """Periodic ``[-1, 1)`` with Lebesgue measure and ``L = -d^2/dx^2``.

    Eigenvalues are ``k^2 pi^2``; ``P_0 = 1/2`` and
    ``P_k(x, y) = cos(k pi (x - y))``.  The distance is the wrap-around
    ``min(|x - y|, 2 - |x - y|)``, so the diameter is 1.
    """

    kind = "circle"
    homogeneous_dim = 1.0
    total_measure = 2.0
    diameter = 1.0
    point_dim = 0

    def _eigenvalues(self, k):
        return (k * math.pi) ** 2

    def eigenspace_dim(self, k: int) -> int:
        if k < 0:
            raise ValueError("eigen-index must be nonnegative")
        return 1 if k == 0 else 2

    def as_points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("circle points must be finite")
        return np.mod(x + 1.0, 2.0) - 1.0

    def distance(self, x, y):
        x, y = self._pair(x, y)
        d = np.abs(x - y)
        d = np.minimum(d, 2.0 - d)
        return d if np.ndim(d) else float(d)

    def _features(self, x, K):
        ang = np.multiply.outer(np.atleast_1d(x), np.arange(1, K + 1) * math.pi)
        return np.cos(ang), np.sin(ang)

    def kernel_matrix(self, coeffs, x, y):
        c = _trim(coeffs)
        K = len(c) - 1
        self._check_degree(K)
        X = np.atleast_1d(self.as_points(x))
        Y = np.atleast_1d(self.as_points(y))
        out = np.full((len(X), len(Y)), 0.5 * c[0])
        if K >= 1:
            cx, sx = self._features(X, K)
            cy, sy = self._features(Y, K)
            out += (cx * c[1:]) @ cy.T + (sx * c[1:]) @ sy.T
        return out

    def apply(self, coeffs, x, centers, weights):
        c = _trim(coeffs)
        K = len(c) - 1
        self._check_degree(K)
        X = np.atleast_1d(self.as_points(x))
        Y = np.atleast_1d(self.as_points(centers))
        w = np.broadcast_to(np.asarray(weights, dtype=float), Y.shape)
        out = np.full(len(X), 0.5 * c[0] * math.fsum(w))
        if K >= 1:
            cy, sy = self._features(Y, K)
            a = c[1:] * (w @ cy)
            b = c[1:] * (w @ sy)
            cx, sx = self._features(X, K)
            out += cx @ a + sx @ b
        return out

    def ball_volume(self, x, r):
        if r <= 0:
            raise ValueError("radius must be positive")
        return float(min(2.0 * r, 2.0))

    def build_net(self, delta):
        if delta <= 0:
            raise ValueError("delta must be positive")
        n = max(1, math.ceil(2.0 / delta - 1e-9))
        if n > _MAX_GRID_NODES:
            raise SpectralBudgetError("net too fine for the memory budget")
        pts = -1.0 + 2.0 * np.arange(n) / n
        return Net(float(delta), pts, np.full(n, 2.0 / n))

    def quadrature_grid(self, Lambda):
        K = self.degree_for_band(Lambda)
        self._check_degree(max(K, 0))
        # Trapezoid on N points is exact for trigonometric degree < N.
        n = 2
        while n < 2 * K + 2:
            n *= 2
        if n > _MAX_GRID_NODES:
            raise SpectralBudgetError("grid exceeds the memory budget")
        nodes = -1.0 + 2.0 * np.arange(n) / n
        return QuadratureGrid(nodes, np.full(n, 2.0 / n), float(Lambda))

    def uniform_sample(self, rng, size=None):
        return as_generator(rng).uniform(-1.0, 1.0, size=size)


# ---------------------------------------------------------------------------
# Jacobi interval
# ---------------------------------------------------------------------------


class JacobiInterval(SpaceModel):
    """``[-1, 1]`` with weight ``(1-x)^alpha (1+x)^beta`` and the Jacobi operator.

    Distance is ``|arccos x - arccos y|``; eigenfunctions are the
    L^2(mu)-normalised Jacobi polynomials ``p_k`` with eigenvalues
    ``k (k + alpha + beta + 1)``.
    """

    kind = "jacobi"
    diameter = math.pi
    point_dim = 0

    def __init__(self, alpha: float = -0.5, beta: float = -0.5, k_max: int = 2048):
        super().__init__(k_max)
        if alpha <= -1 or beta <= -1:
            raise ValueError("Jacobi parameters must exceed -1")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.homogeneous_dim = 1.0 + max(max(2 * alpha + 1, 0.0), max(2 * beta + 1, 0.0))
        self.total_measure = float(
            math.exp((alpha + beta + 1) * math.log(2.0) + special.betaln(alpha + 1, beta + 1))
        )
        self._recurrence = None

    def descriptor(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta, "k_max": self.k_max}

    def _eigenvalues(self, k):
        return k * (k + self.alpha + self.beta + 1.0)

    def eigenspace_dim(self, k):
        if k < 0:
            raise ValueError("eigen-index must be nonnegative")
        return 1

    def recurrence(self, K: int):
        """Jacobi-matrix coefficients ``(a, b)`` of the orthonormal family.

        ``x p_k = a[k+1] p_{k+1} + b[k] p_k + a[k] p_{k-1}``; ``a[0]`` is unused.
        """
        al, be = self.alpha, self.beta
        ab = al + be
        k = np.arange(K + 2, dtype=float)
        b = np.empty(K + 2)
        b[0] = (be - al) / (ab + 2.0)
        kk = k[1:]
        b[1:] = (be * be - al * al) / ((2 * kk + ab) * (2 * kk + ab + 2))
        a = np.zeros(K + 2)
        if K + 2 > 1:
            a[1] = math.sqrt(4 * (1 + al) * (1 + be) / ((2 + ab) ** 2 * (3 + ab)))
        kk = k[2:]
        a[2:] = np.sqrt(
            4 * kk * (kk + al) * (kk + be) * (kk + ab)
            / ((2 * kk + ab) ** 2 * (2 * kk + ab + 1) * (2 * kk + ab - 1))
        )
        return a, b

    def orthonormal_polys(self, x, K: int) -> np.ndarray:
        """Matrix ``[p_0(x), ..., p_K(x)]`` of shape ``(len(x), K + 1)``."""
        self._check_degree(K)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a, b = self.recurrence(K)
        out = np.empty((len(x), K + 1))
        out[:, 0] = 1.0 / math.sqrt(self.total_measure)
        if K >= 1:
            out[:, 1] = (x - b[0]) * out[:, 0] / a[1]
        for k in range(1, K):
            out[:, k + 1] = ((x - b[k]) * out[:, k] - a[k] * out[:, k - 1]) / a[k + 1]
        return out

    def as_points(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > 1.0 + 1e-12) or not np.all(np.isfinite(x)):
            raise ValueError("Jacobi points must lie in [-1, 1]")
        return np.clip(x, -1.0, 1.0)

    def distance(self, x, y):
        x, y = self._pair(x, y)
        d = np.abs(np.arccos(x) - np.arccos(y))
        return d if np.ndim(d) else float(d)

    def kernel_matrix(self, coeffs, x, y):
        c = _trim(coeffs)
        K = len(c) - 1
        px = self.orthonormal_polys(self.as_points(x), K)
        py = self.orthonormal_polys(self.as_points(y), K)
        return (px * c) @ py.T

    def apply(self, coeffs, x, centers, weights):
        c = _trim(coeffs)
        K = len(c) - 1
        Y = np.atleast_1d(self.as_points(centers))
        w = np.broadcast_to(np.asarray(weights, dtype=float), Y.shape)
        moments = c * (w @ self.orthonormal_polys(Y, K))
        return self.orthonormal_polys(self.as_points(x), K) @ moments

    def _interval_measure(self, lo, hi):
        """mu([lo, hi]) through the regularised incomplete beta function."""
        t_lo = (np.asarray(lo) + 1.0) / 2.0
        t_hi = (np.asarray(hi) + 1.0) / 2.0
        frac = special.betainc(self.beta + 1, self.alpha + 1, t_hi) - special.betainc(
            self.beta + 1, self.alpha + 1, t_lo
        )
        return self.total_measure * frac

    def ball_volume(self, x, r):
        if r <= 0:
            raise ValueError("radius must be positive")
        theta = float(np.arccos(self.as_points(x)))
        lo_t, hi_t = max(theta - r, 0.0), min(theta + r, math.pi)
        return float(self._interval_measure(math.cos(hi_t), math.cos(lo_t)))

    def build_net(self, delta):
        if delta <= 0:
            raise ValueError("delta must be positive")
        n = max(1, math.ceil(math.pi / delta - 1e-9))
        if n > _MAX_GRID_NODES:
            raise SpectralBudgetError("net too fine for the memory budget")
        edges = np.linspace(0.0, math.pi, n + 1)
        theta = 0.5 * (edges[:-1] + edges[1:])
        pts = np.cos(theta)
        w = self._interval_measure(np.cos(edges[1:]), np.cos(edges[:-1]))
        return Net(float(delta), pts, np.asarray(w, dtype=float))

    def quadrature_grid(self, Lambda):
        K = max(self.degree_for_band(Lambda), 0)
        self._check_degree(K)
        nodes, weights = special.roots_jacobi(K + 1, self.alpha, self.beta)
        return QuadratureGrid(np.asarray(nodes), np.asarray(weights), float(Lambda))

    def uniform_sample(self, rng, size=None):
        t = as_generator(rng).beta(self.beta + 1.0, self.alpha + 1.0, size=size)
        return 2.0 * t - 1.0

    def audit_grid(self, resolution=64):
        return self.quadrature_grid(float(4 * resolution))


def _min_ring_count(fixed, scaled, cos_delta):
    """Smallest ``m`` with ``fixed[e] + scaled[e] * cos(pi / m) >= cos_delta`` for all e.

    This is the covering condition at the extreme corners of a cell whose
    angular half-width is ``pi / m``; None when no ``m`` works.
    """
    m = 1
    for a, b in zip(fixed, scaled):
        if b <= 1e-15:
            if a < cos_delta - 1e-15:
                return None
            continue
        r = (cos_delta - a) / b
        if r > 1.0:
            return None
        if r > -1.0:
            m = max(m, math.ceil(math.pi / math.acos(r) - 1e-12))
    return m


def _layout_size(layout) -> int:
    return sum(m1 * m2 for m1, m2 in layout)


# ---------------------------------------------------------------------------
# Spheres: S^2 and SU(2) = S^3
# ---------------------------------------------------------------------------


class _UnitSphere(SpaceModel):
    """Shared code for unit spheres with zonal projector kernels."""

    def as_points(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.point_dim,):
            raise ValueError(f"{self.kind} points need {self.point_dim} coordinates, got shape {x.shape}")
        norms = np.linalg.norm(x, axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError(f"{self.kind} points must be unit vectors")
        # leave already-normalised points untouched so round trips are exact
        norms = np.where(np.abs(norms - 1.0) <= 4 * np.finfo(float).eps, 1.0, norms)
        return x / norms[..., None]

    def distance(self, x, y):
        x, y = self._pair(x, y)
        # atan2 form keeps full relative accuracy near 0 and pi.
        d = 2.0 * np.arctan2(np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1))
        return d if np.ndim(d) else float(d)

    def _zonal_sum(self, c: np.ndarray, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def kernel_matrix(self, coeffs, x, y):
        c = _trim(coeffs)
        self._check_degree(len(c) - 1)
        X = np.atleast_2d(self.as_points(x))
        Y = np.atleast_2d(self.as_points(y))
        return self._zonal_sum(c, np.clip(X @ Y.T, -1.0, 1.0))

    def apply(self, coeffs, x, centers, weights):
        c = _trim(coeffs)
        self._check_degree(len(c) - 1)
        X = np.atleast_2d(self.as_points(x))
        Y = np.atleast_2d(self.as_points(centers))
        w = np.broadcast_to(np.asarray(weights, dtype=float), (len(Y),))
        out = np.zeros(len(X))
        rows = max(1, _BLOCK // max(len(Y), 1))
        cols = min(len(Y), _BLOCK)
        for i in range(0, len(X), rows):
            for j in range(0, len(Y), cols):
                t = np.clip(X[i : i + rows] @ Y[j : j + cols].T, -1.0, 1.0)
                out[i : i + rows] += self._zonal_sum(c, t) @ w[j : j + cols]
        return out

    def _sample_gaussian(self, rng, size):
        g = as_generator(rng).standard_normal((1 if size is None else size, self.point_dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g[0] if size is None else g


class Sphere2(_UnitSphere):
    """The unit sphere in R^3 with surface measure (total ``4 pi``).

    ``lambda_k = k (k + 1)``, ``dim E_k = 2k + 1`` and
    ``P_k(x, y) = (2k + 1) / (4 pi) * Legendre_k(<x, y>)``.
    """

    kind = "sphere2"
    homogeneous_dim = 2.0
    total_measure = 4.0 * math.pi
    diameter = math.pi
    point_dim = 3

    def __init__(self, k_max: int = 1024):
        super().__init__(k_max)

    def _eigenvalues(self, k):
        return k * (k + 1.0)

    def eigenspace_dim(self, k):
        if k < 0:
            raise ValueError("eigen-index must be nonnegative")
        return 2 * k + 1

    def _zonal_sum(self, c, t):
        scale = (2 * np.arange(len(c)) + 1) / (4 * math.pi)
        cs = c * scale
        p_prev = np.ones_like(t)
        out = cs[0] * p_prev
        if len(c) == 1:
            return out
        p = t.copy()
        out += cs[1] * p
        for k in range(1, len(c) - 1):
            p_prev, p = p, ((2 * k + 1) * t * p - k * p_prev) / (k + 1)
            if cs[k + 1] != 0.0:
                out += cs[k + 1] * p
        return out

    def ball_volume(self, x, r):
        if r <= 0:
            raise ValueError("radius must be positive")
        r = min(r, math.pi)
        return float(2 * math.pi * (1 - math.cos(r)))

    def build_net(self, delta):
        if delta <= 0:
            raise ValueError("delta must be positive")
        if delta >= math.pi:
            return Net(float(delta), np.array([[0.0, 0.0, 1.0]]), np.array([self.total_measure]))
        best = None
        for nb in range(max(1, math.ceil(math.pi / (2 * delta) - 1e-9)), math.ceil(2 * math.pi / delta) + 2):
            layout = self._latitude_layout(nb, delta)
            if layout is not None and (best is None or sum(layout) < sum(best)):
                best = layout
        if best is None or sum(best) > _MAX_GRID_NODES:
            raise SpectralBudgetError("no admissible latitude layout within the memory budget")
        nb = len(best)
        h = math.pi / nb
        pts, wts = [], []
        for i, m in enumerate(best):
            lo, hi = i * h, (i + 1) * h
            area = 2 * math.pi * (math.cos(lo) - math.cos(hi))
            if m == 0:
                pts.append(np.array([[0.0, 0.0, 1.0 if i == 0 else -1.0]]))
                wts.append(np.array([area]))
                continue
            th = lo + h / 2
            phi = 2 * math.pi * (np.arange(m) + 0.5 * (i % 2)) / m
            st = math.sin(th)
            pts.append(np.column_stack([st * np.cos(phi), st * np.sin(phi), np.full(m, math.cos(th))]))
            wts.append(np.full(m, area / m))
        return Net(float(delta), np.vstack(pts), np.concatenate(wts))

    @staticmethod
    def _latitude_layout(nb, delta):
        """Points per band for ``nb`` equal-width colatitude bands.

        A polar band collapses to its pole (encoded as 0) when the cap fits in
        a delta-ball.  Returns None when covering or delta/2-separation fails.
        """
        h = math.pi / nb
        if h < delta / 2:
            return None
        counts = []
        for i in range(nb):
            lo, hi = i * h, (i + 1) * h
            if (i == 0 or i == nb - 1) and h <= delta and nb > 1:
                counts.append(0)
                continue
            th = lo + h / 2
            m = _min_ring_count(
                [math.cos(e) * math.cos(th) for e in (lo, hi)],
                [math.sin(e) * math.sin(th) for e in (lo, hi)],
                math.cos(delta),
            )
            if m is None:
                return None
            if m >= 2 and 2 * math.asin(min(1.0, math.sin(th) * math.sin(math.pi / m))) < delta / 2:
                return None
            counts.append(m)
        return counts

    def quadrature_grid(self, Lambda):
        K = max(self.degree_for_band(Lambda), 0)
        self._check_degree(K)
        n_t, n_p = K + 1, 2 * K + 1
        if n_t * n_p > _MAX_GRID_NODES:
            raise SpectralBudgetError("grid exceeds the memory budget")
        z, wz = special.roots_legendre(n_t)
        phi = 2 * math.pi * np.arange(n_p) / n_p
        s = np.sqrt(1 - z * z)
        Z, P = np.meshgrid(z, phi, indexing="ij")
        S = np.meshgrid(s, phi, indexing="ij")[0]
        nodes = np.column_stack([(S * np.cos(P)).ravel(), (S * np.sin(P)).ravel(), Z.ravel()])
        weights = np.repeat(wz * (2 * math.pi / n_p), n_p)
        return QuadratureGrid(nodes, weights, float(Lambda))

    def uniform_sample(self, rng, size=None):
        return self._sample_gaussian(rng, size)


class SU2(_UnitSphere):
    """SU(2) identified with the unit sphere of R^4 (total measure ``2 pi^2``).

    ``lambda_k = k (k + 2)``, ``dim E_k = (k + 1)^2`` and
    ``P_k(x, y) = (k + 1) / (2 pi^2) * U_k(<x, y>)`` with ``U_k`` the
    Chebyshev polynomial of the second kind.  A point ``(x1, x2, x3, x4)``
    stands for the matrix ``[[x1 + i x2, x3 + i x4], [-(x3 - i x4), x1 - i x2]]``.
    """

    kind = "su2"
    homogeneous_dim = 3.0
    total_measure = 2.0 * math.pi**2
    diameter = math.pi
    point_dim = 4

    def __init__(self, k_max: int = 512):
        super().__init__(k_max)

    def _eigenvalues(self, k):
        return k * (k + 2.0)

    def eigenspace_dim(self, k):
        if k < 0:
            raise ValueError("eigen-index must be nonnegative")
        return (k + 1) ** 2

    def _zonal_sum(self, c, t):
        cs = c * (np.arange(len(c)) + 1) / (2 * math.pi**2)
        u_prev = np.ones_like(t)
        out = cs[0] * u_prev
        if len(c) == 1:
            return out
        u = 2 * t
        out += cs[1] * u
        for k in range(1, len(c) - 1):
            u_prev, u = u, 2 * t * u - u_prev
            if cs[k + 1] != 0.0:
                out += cs[k + 1] * u
        return out

    @staticmethod
    def from_matrix(q) -> np.ndarray:
        """Coordinates of a 2x2 SU(2) matrix."""
        q = np.asarray(q, dtype=complex)
        return np.array([q[0, 0].real, q[0, 0].imag, q[0, 1].real, q[0, 1].imag])

    @staticmethod
    def to_matrix(x) -> np.ndarray:
        x1, x2, x3, x4 = np.asarray(x, dtype=float)
        return np.array([[x1 + 1j * x2, x3 + 1j * x4], [-(x3 - 1j * x4), x1 - 1j * x2]])

    def ball_volume(self, x, r):
        if r <= 0:
            raise ValueError("radius must be positive")
        r = min(r, math.pi)
        return float(2 * math.pi * (r - math.sin(r) * math.cos(r)))

    @staticmethod
    def _hopf(eta, xi1, xi2):
        ce, se = np.cos(eta), np.sin(eta)
        return np.column_stack([ce * np.cos(xi1), ce * np.sin(xi1), se * np.cos(xi2), se * np.sin(xi2)])

    def build_net(self, delta):
        # Hopf coordinates: ds^2 = d eta^2 + cos^2(eta) d xi1^2 + sin^2(eta) d xi2^2,
        # dmu = (1/2) d(sin^2 eta) d xi1 d xi2.
        if delta <= 0:
            raise ValueError("delta must be positive")
        if delta >= math.pi:
            return Net(float(delta), np.array([[1.0, 0.0, 0.0, 0.0]]), np.array([self.total_measure]))
        best = None
        for ne in range(max(1, math.ceil(math.pi / (4 * delta) - 1e-9)), math.ceil(math.pi / delta) + 2):
            layout = self._hopf_layout(ne, delta)
            if layout is not None and (best is None or _layout_size(layout) < _layout_size(best)):
                best = layout
        if best is None or _layout_size(best) > _MAX_GRID_NODES:
            raise SpectralBudgetError("no admissible Hopf layout within the memory budget")
        h = (math.pi / 2) / len(best)
        pts, wts = [], []
        for i, (m1, m2) in enumerate(best):
            lo, hi = i * h, (i + 1) * h
            vol = 2 * math.pi**2 * (math.sin(hi) ** 2 - math.sin(lo) ** 2)
            xi1 = 2 * math.pi * (np.arange(m1) + 0.5 * (i % 2)) / m1
            xi2 = 2 * math.pi * np.arange(m2) / m2
            A, B = np.meshgrid(xi1, xi2, indexing="ij")
            pts.append(self._hopf(np.full(A.size, lo + h / 2), A.ravel(), B.ravel()))
            wts.append(np.full(A.size, vol / A.size))
        return Net(float(delta), np.vstack(pts), np.concatenate(wts))

    @staticmethod
    def _hopf_layout(ne, delta):
        """Per-band ``(m1, m2)`` angle counts, or None if no admissible choice."""
        h = (math.pi / 2) / ne
        if h < delta / 2:
            return None
        cd = math.cos(delta)
        layout = []
        for i in range(ne):
            lo, hi = i * h, (i + 1) * h
            eta = lo + h / 2
            ce, se = math.cos(eta), math.sin(eta)
            m1 = np.arange(1, max(2, math.ceil(4 * math.pi * ce / delta) + 2) + 1)
            c1 = np.cos(math.pi / m1)
            m2 = np.ones(m1.shape)
            ok = np.ones(m1.shape, dtype=bool)
            for e in (lo, hi):
                a = math.cos(e) * ce * c1
                b = math.sin(e) * se
                if b <= 1e-15:
                    ok &= a >= cd - 1e-15
                    continue
                r = (cd - a) / b
                ok &= r <= 1.0
                rr = np.clip(r, -1.0, 1.0)
                with np.errstate(divide="ignore"):
                    need = np.where(rr > -1.0, np.ceil(math.pi / np.arccos(rr) - 1e-12), 1.0)
                m2 = np.maximum(m2, need)
            sep1 = np.arccos(np.minimum(1.0, ce * ce * np.cos(2 * math.pi / m1) + se * se))
            ok &= (m1 < 2) | (sep1 >= delta / 2)
            m2_safe = np.maximum(m2, 1.0)
            sep2 = np.arccos(np.minimum(1.0, ce * ce + se * se * np.cos(2 * math.pi / m2_safe)))
            ok &= (m2 < 2) | (sep2 >= delta / 2)
            if not ok.any():
                return None
            size = np.where(ok, m1 * m2, np.inf)
            k = int(np.argmin(size))
            layout.append((int(m1[k]), int(m2[k])))
        return layout

    def quadrature_grid(self, Lambda):
        K = max(self.degree_for_band(Lambda), 0)
        self._check_degree(K)
        # After the two angle averages a degree-2K polynomial becomes a
        # polynomial of degree <= K in u = sin^2(eta).
        n_u = max(1, math.ceil((K + 1) / 2))
        n_x = 2 * K + 1
        if n_u * n_x * n_x > _MAX_GRID_NODES:
            raise SpectralBudgetError("grid exceeds the memory budget")
        z, wz = special.roots_legendre(n_u)
        u = 0.5 * (z + 1.0)
        wu = 0.5 * wz
        eta = np.arcsin(np.sqrt(u))
        xi = 2 * math.pi * np.arange(n_x) / n_x
        E, A, B = np.meshgrid(eta, xi, xi, indexing="ij")
        nodes = self._hopf(E.ravel(), A.ravel(), B.ravel())
        weights = np.repeat(0.5 * wu * (2 * math.pi / n_x) ** 2, n_x * n_x)
        return QuadratureGrid(nodes, weights, float(Lambda))

    def uniform_sample(self, rng, size=None):
        return self._sample_gaussian(rng, size)

    def audit_grid(self, resolution=64):
        return self.quadrature_grid(float(min(resolution, 24)))


# ---------------------------------------------------------------------------
# functional interface
# ---------------------------------------------------------------------------

_KINDS = {"circle": Circle, "jacobi": JacobiInterval, "sphere2": Sphere2, "su2": SU2}


def make_space(config: dict | str) -> SpaceModel:
    """Build a space from a descriptor such as ``{"kind": "jacobi", "alpha": 0}``."""
    if isinstance(config, str):
        config = {"kind": config}
    config = dict(config)
    kind = config.pop("kind")
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown space kind {kind!r}") from None
    return cls(**config)


def distance(model: SpaceModel, x, y):
    return model.distance(x, y)


def eigenvalue(model: SpaceModel, k: int) -> float:
    return model.eigenvalue(k)


def projector_kernel(model: SpaceModel, k: int, x, y):
    return model.projector_kernel(k, x, y)


def eigenspace_dim(model: SpaceModel, k: int) -> int:
    return model.eigenspace_dim(k)


def ball_volume(model: SpaceModel, x, r: float) -> float:
    return model.ball_volume(x, r)


def build_net(model: SpaceModel, delta: float) -> Net:
    return model.build_net(delta)


def quadrature_grid(model: SpaceModel, Lambda: float) -> QuadratureGrid:
    if Lambda <= 0:
        raise GridError("Lambda must be positive")
    return model.quadrature_grid(Lambda)


def uniform_sample(model: SpaceModel, rng, size: int | None = None):
    return model.uniform_sample(rng, size)
