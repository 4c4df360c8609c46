"""Tight band-limited frames over nets that are exact cubatures.

Level ``j`` uses the multiplier ``a_j`` (by default the square root of the
Littlewood-Paley band ``Psi_j``) and a net whose weights integrate every
product of two level-``j`` functions exactly.  The frame elements

    psi_{j xi}(x) = w_xi^{1/2} a_j(sqrt L)(x, xi)

then satisfy ``sum_j sum_xi <f, psi_{j xi}> psi_{j xi} = Psi_0(b^-J sqrt L) f``,
so the frame is tight on functions with spectrum below ``b^J``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import FrameDepthError, GridError, SpectralBudgetError
from .geometry import Net, QuadratureGrid, SpaceModel
from .spectral import KernelExpansion, Multiplier, lp_norm

__all__ = [
    "FrameLevel",
    "Frame",
    "FrameCoefficients",
    "build_frame",
    "cached_frame",
    "frame_element",
    "analyze",
    "analyze_expansion",
    "synthesize",
    "besov_body_norm",
    "calibrate_cdiamond",
]


@dataclass(frozen=True)
class FrameLevel:
    j: int
    net: Net
    multiplier: Multiplier
    coeffs: np.ndarray
    sqrt_weights: np.ndarray

    def __len__(self) -> int:
        return len(self.net)


@dataclass(frozen=True, eq=False)
class Frame:
    model: SpaceModel
    b: float
    J_max: int
    c6: float
    levels: tuple
    variant: str = "root"
    tight: bool = True

    def __len__(self) -> int:
        return len(self.levels)

    def level(self, j: int) -> FrameLevel:
        if not 0 <= j <= self.J_max:
            raise FrameDepthError(f"level {j} outside frame depth 0..{self.J_max}")
        return self.levels[j]

    def descriptor(self) -> dict:
        return {"space": self.model.descriptor(), "b": self.b, "J_max": self.J_max, "c6": self.c6, "variant": self.variant}

    @property
    def sizes(self) -> list[int]:
        return [len(lv) for lv in self.levels]


def _level_net(model: SpaceModel, delta: float, band: float) -> Net:
    """A net at scale ``delta`` whose weights are exact for products below ``band``."""
    K = model.degree_for_band(band)
    if model.kind == "circle":
        net = model.build_net(delta)
        if len(net) >= 2 * K + 1:
            return net
    grid = model.quadrature_grid(band)
    return Net(float(delta), grid.nodes, grid.weights)


def build_frame(model: SpaceModel, b: float = 2.0, J_max: int = 4, c6: float = 1.0, variant: str = "root") -> Frame:
    """Build levels ``0..J_max`` of a tight frame.

    ``variant="root"`` uses ``a_j = sqrt(Psi_j)`` so the squared partition
    telescopes to ``Psi_0(b^-J t)``.  ``variant="squared"`` uses
    ``a_j = sqrt(Psi_0(b^-j t)^2 - Psi_0(b^-j+1 t)^2)``, whose squares
    telescope to ``Psi_0(b^-J t)^2``.
    """
    if not b > 1:
        raise ValueError("b must exceed 1")
    if J_max < 0:
        raise ValueError("J_max must be nonnegative")
    if not c6 > 0:
        raise ValueError("c6 must be positive")
    kind = {"root": "root_psij", "squared": "sqdiff_psij"}.get(variant)
    if kind is None:
        raise ValueError(f"unknown frame variant {variant!r}")
    top = model.degree_for_band(b ** (J_max + 1))
    if top > model.k_max:
        raise SpectralBudgetError(f"frame depth {J_max} needs degree {top} > k_max={model.k_max}")
    levels = []
    for j in range(J_max + 1):
        m = Multiplier(kind, b=b, j=j)
        band = b ** (j + 1)
        K = model.degree_for_band(band)
        coeffs = m(np.sqrt(model.eigenvalues(K)))
        net = _level_net(model, c6 * b ** (-j), band)
        sw = np.sqrt(net.cell_weights)
        coeffs.setflags(write=False)
        sw.setflags(write=False)
        levels.append(FrameLevel(j, net, m, coeffs, sw))
    return Frame(model, float(b), int(J_max), float(c6), tuple(levels), variant)


@lru_cache(maxsize=32)
def cached_frame(model: SpaceModel, b: float = 2.0, J_max: int = 4, c6: float = 1.0, variant: str = "root") -> Frame:
    """Memoised :func:`build_frame`; frames are immutable so sharing is safe."""
    return build_frame(model, b, J_max, c6, variant)


def frame_element(frame: Frame, j: int, xi_index: int, x):
    lv = frame.level(j)
    if not 0 <= xi_index < len(lv):
        raise IndexError(f"net index {xi_index} out of range for level {j} ({len(lv)} points)")
    m = frame.model
    vals = m.apply(lv.coeffs, x, lv.net.points[xi_index : xi_index + 1], lv.sqrt_weights[xi_index : xi_index + 1])
    single = np.ndim(m.as_points(x)) == (0 if m.point_dim == 0 else 1)
    return float(vals[0]) if single else vals


@dataclass(frozen=True, eq=False)
class FrameCoefficients:
    """Per-level coefficient vectors indexed like the frame's nets."""

    levels: tuple

    def __post_init__(self):
        lv = tuple(np.asarray(v, dtype=float) for v in self.levels)
        for v in lv:
            if v.ndim != 1:
                raise ValueError("each level must be a vector")
            if not np.all(np.isfinite(v)):
                raise ValueError("coefficients must be finite")
        object.__setattr__(self, "levels", lv)

    @property
    def J_used(self) -> int:
        return len(self.levels) - 1

    def __eq__(self, other):
        if not isinstance(other, FrameCoefficients) or len(other.levels) != len(self.levels):
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.levels, other.levels))

    def check_against(self, frame: Frame) -> None:
        if self.J_used > frame.J_max:
            raise FrameDepthError(f"coefficients use level {self.J_used} beyond frame depth {frame.J_max}")
        for j, v in enumerate(self.levels):
            if len(v) != len(frame.levels[j]):
                raise ValueError(f"level {j}: {len(v)} coefficients for {len(frame.levels[j])} net points")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "xi_index", "beta"])
        for j, v in enumerate(self.levels):
            for i, beta in enumerate(v):
                w.writerow([j, i, repr(float(beta))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FrameCoefficients":
        rows = list(csv.DictReader(io.StringIO(text)))
        depth = max((int(r["j"]) for r in rows), default=-1) + 1
        sizes = [0] * depth
        for r in rows:
            sizes[int(r["j"])] = max(sizes[int(r["j"])], int(r["xi_index"]) + 1)
        levels = [np.zeros(s) for s in sizes]
        for r in rows:
            levels[int(r["j"])][int(r["xi_index"])] = float(r["beta"])
        return cls(tuple(levels))

    def to_dict(self) -> dict:
        return {"J_used": self.J_used, "levels": [[float(b) for b in v] for v in self.levels]}

    @classmethod
    def from_dict(cls, d: dict) -> "FrameCoefficients":
        levels = tuple(np.array(v, dtype=float) for v in d["levels"])
        if len(levels) - 1 != d.get("J_used", len(levels) - 1):
            raise ValueError("J_used does not match the number of levels")
        return cls(levels)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FrameCoefficients":
        return cls.from_dict(json.loads(text))


def _depth(frame: Frame, J) -> int:
    J = frame.J_max if J is None else int(J)
    if J > frame.J_max:
        raise FrameDepthError(f"requested level {J} but frame depth is {frame.J_max}")
    if J < 0:
        raise ValueError("J must be nonnegative")
    return J


def _coefficients(frame: Frame, centers, weights, J: int, coeff_scale=None) -> FrameCoefficients:
    """``beta_{j xi} = w_xi^{1/2} sum_i weights_i a_j(sqrt L)(xi, centers_i)``."""
    out = []
    for lv in frame.levels[: J + 1]:
        c = lv.coeffs if coeff_scale is None else lv.coeffs * coeff_scale[: len(lv.coeffs)]
        out.append(lv.sqrt_weights * frame.model.apply(c, lv.net.points, centers, weights))
    return FrameCoefficients(tuple(out))


def analyze(frame: Frame, f, grid: QuadratureGrid, J: int | None = None) -> FrameCoefficients:
    """Frame coefficients ``<f, psi_{j xi}>`` computed by quadrature on ``grid``."""
    J = _depth(frame, J)
    need = frame.b ** (J + 1)
    if grid.exact_degree < need * (1 - 1e-12):
        raise GridError(f"grid band {grid.exact_degree} below frame band {need}")
    vals = np.asarray(f(grid.nodes), dtype=float) if callable(f) else np.asarray(f, dtype=float)
    if vals.shape != (len(grid),):
        raise ValueError("function values must match the grid nodes")
    return _coefficients(frame, grid.nodes, grid.weights * vals, J)


def analyze_expansion(frame: Frame, g: KernelExpansion, J: int | None = None) -> FrameCoefficients:
    """Exact frame coefficients of a kernel expansion (no quadrature)."""
    J = _depth(frame, J)
    if g.model != frame.model:
        raise ValueError("expansion lives on a different space")
    out = [np.zeros(len(lv)) for lv in frame.levels[: J + 1]]
    for c, y, w in g.terms:
        for j, lv in enumerate(frame.levels[: J + 1]):
            n = min(len(c), len(lv.coeffs))
            if n == 0:
                continue
            prod = lv.coeffs[:n] * c[:n]
            if np.any(prod):
                out[j] += lv.sqrt_weights * frame.model.apply(prod, lv.net.points, y, w)
    return FrameCoefficients(tuple(out))


def synthesize(frame: Frame, coeffs: FrameCoefficients) -> KernelExpansion:
    """``x -> sum_j sum_xi beta_{j xi} psi_{j xi}(x)`` as a kernel expansion."""
    coeffs.check_against(frame)
    terms = []
    for lv, beta in zip(frame.levels, coeffs.levels):
        terms.append((np.asarray(lv.coeffs), lv.net.points, lv.sqrt_weights * beta))
    return KernelExpansion(frame.model, tuple(terms))


def besov_body_norm(coeffs: FrameCoefficients, s: float, p: float, q: float, d: float, b: float = 2.0) -> float:
    """Sequence norm ``(sum_j b^{jsq} (sum_xi [b^{-jd(1/p-1/2)} |beta|]^p)^{q/p})^{1/q}``.

    ``p`` or ``q`` equal to ``inf`` switch the corresponding sum to a max.
    """
    if not s > 0 or not p >= 1 or not q > 0:
        raise ValueError("need s > 0, p >= 1, q > 0")
    inv_p = 0.0 if p == math.inf else 1.0 / p
    per_level = []
    for j, v in enumerate(coeffs.levels):
        a = np.abs(v) * b ** (-j * d * (inv_p - 0.5))
        if a.size == 0:
            inner = 0.0
        elif p == math.inf:
            inner = float(a.max())
        else:
            inner = float(np.sum(a**p) ** inv_p)
        per_level.append(b ** (j * s) * inner)
    per_level = np.array(per_level)
    if per_level.size == 0:
        return 0.0
    if q == math.inf:
        return float(per_level.max())
    return float(np.sum(per_level**q) ** (1.0 / q))


def calibrate_cdiamond(frame: Frame, per_level: int = 8, grid: QuadratureGrid | None = None, p_values=(1.0, 2.0, math.inf)) -> float:
    """Empirical norm-equivalence constant of the frame elements.

    For sampled ``(j, xi)`` and each ``p`` compares ``||psi_{j xi}||_p``
    with ``b^{jd(1/2 - 1/p)}`` and returns the worst ratio either way.
    Norms use an exact grid four times finer than the top band.
    """
    m = frame.model
    grid = grid or m.quadrature_grid(4 * frame.b ** (frame.J_max + 1))
    d = m.homogeneous_dim
    worst = 1.0
    for lv in frame.levels:
        idx = np.unique(np.linspace(0, len(lv) - 1, min(per_level, len(lv))).round().astype(int))
        vals = m.kernel_matrix(lv.coeffs, grid.nodes, lv.net.points[idx]) * lv.sqrt_weights[idx]
        for p in p_values:
            scale = frame.b ** (lv.j * d * (0.5 - (0.0 if p == math.inf else 1.0 / p)))
            for col in vals.T:
                r = lp_norm(col, grid, p) / scale
                worst = max(worst, r, 1.0 / r)
    return float(worst)
