"""Kernel, linear wavelet and hard-threshold density estimators."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FrameDepthError
from .frames import Frame, FrameCoefficients, cached_frame, calibrate_cdiamond, synthesize
from .geometry import SpaceModel, make_space
from .spectral import KernelExpansion, Multiplier, SpectralKernel, phi_lp, psi0

__all__ = [
    "SampleSet",
    "KernelEstimator",
    "LinearWaveletEstimator",
    "ThresholdEstimator",
    "fit_kernel",
    "bandwidth_rule",
    "choose_J_linear",
    "choose_Jn",
    "threshold_params",
    "empirical_coefficients",
    "fit_linear_wavelet",
    "fit_threshold",
    "estimate_sup_bound",
    "estimator_from_dict",
]

# Guards floor() against log-ratio rounding at exact powers of b.
_FLOOR_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class SampleSet:
    model: SpaceModel
    points: np.ndarray

    def __post_init__(self):
        pts = self.model.as_points(self.points)
        pts = np.atleast_1d(pts) if self.model.point_dim == 0 else np.atleast_2d(pts)
        if len(pts) == 0:
            raise ValueError("empty sample")
        pts = np.array(pts, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    def __len__(self) -> int:
        return self.n

    def split(self, idx) -> "SampleSet":
        return SampleSet(self.model, self.points[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = max(self.model.point_dim, 1)
        w.writerow([f"x{i}" for i in range(dim)])
        for p in self.points.reshape(self.n, dim):
            w.writerow([repr(float(v)) for v in p])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, model: SpaceModel, text: str) -> "SampleSet":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        arr = np.array([[float(v) for v in r] for r in rows if r], dtype=float)
        if model.point_dim == 0:
            arr = arr[:, 0]
        return cls(model, arr)


def _as_sample(model, data) -> SampleSet:
    if isinstance(data, SampleSet):
        if data.model != model:
            raise ValueError("sample lives on a different space")
        return data
    return SampleSet(model, data)


# ---------------------------------------------------------------------------
# kernel estimator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelEstimator:
    """``x -> (1/n) sum_i K_delta(X_i, x)``."""

    kernel: SpectralKernel
    data: SampleSet

    @property
    def delta(self) -> float:
        return self.kernel.delta

    def __call__(self, x):
        return self.as_expansion()(x)

    def as_expansion(self) -> KernelExpansion:
        n = self.data.n
        return KernelExpansion(self.kernel.model, ((self.kernel.coeffs, self.data.points, np.full(n, 1.0 / n)),))

    def to_dict(self) -> dict:
        return {
            "type": "kernel",
            "space": self.kernel.model.descriptor(),
            "multiplier": self.kernel.multiplier.descriptor(),
            "delta": self.delta,
            "points": self.data.points.tolist(),
        }


def fit_kernel(model: SpaceModel, data, delta: float, multiplier: Multiplier | None = None) -> KernelEstimator:
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    data = _as_sample(model, data)
    return KernelEstimator(SpectralKernel(model, multiplier or phi_lp(), delta), data)


def bandwidth_rule(n: int, s: float, d: float, sup_norm_mode: bool = False) -> float:
    """``n^{-1/(2s+d)}``, or ``(log n / n)^{1/(2s+d)}`` for sup-norm risk; clamped to (0, 1]."""
    if n < 2:
        raise ValueError("need n >= 2")
    if not s > 0:
        raise ValueError("need s > 0")
    base = math.log(n) / n if sup_norm_mode else 1.0 / n
    return min(base ** (1.0 / (2 * s + d)), 1.0)


def choose_J_linear(n: int, s: float, d: float, b: float = 2.0, sup_norm_mode: bool = False) -> int:
    """Largest ``J >= 0`` with ``b^J <= n^{1/(2s+d)}`` (``(n / log n)`` in sup-norm mode)."""
    if n < 2:
        raise ValueError("need n >= 2")
    base = n / math.log(n) if sup_norm_mode else float(n)
    return max(int(math.floor(math.log(base) / ((2 * s + d) * math.log(b)) + _FLOOR_EPS)), 0)


def choose_Jn(n: int, b: float, d: float) -> int:
    """The integer with ``b^{J_n} <= (n / log n)^{1/d} < b^{J_n + 1}``."""
    if n < 2:
        raise ValueError("need n >= 2")
    return max(int(math.floor(math.log(n / math.log(n)) / (d * math.log(b)) + _FLOOR_EPS)), 0)


def threshold_params(n: int, c_diamond: float, A: float) -> tuple[float, float]:
    """``kappa = c_diamond sqrt(8 A)`` and ``lambda_n = kappa sqrt(log n / n)``."""
    if A < 4:
        raise ValueError("A must be at least 4")
    if c_diamond < 1:
        raise ValueError("c_diamond must be at least 1")
    if n < 2:
        raise ValueError("need n >= 2")
    kappa = c_diamond * math.sqrt(8.0 * A)
    return kappa, kappa * math.sqrt(math.log(n) / n)


# ---------------------------------------------------------------------------
# wavelet estimators
# ---------------------------------------------------------------------------


def empirical_coefficients(frame: Frame, data: SampleSet, J: int) -> FrameCoefficients:
    """``beta_hat_{j xi} = (1/n) sum_i psi_{j xi}(X_i)`` for ``j <= J``."""
    if J > frame.J_max:
        raise FrameDepthError(f"level {J} beyond frame depth {frame.J_max}")
    w = np.full(data.n, 1.0 / data.n)
    out = []
    for lv in frame.levels[: J + 1]:
        out.append(lv.sqrt_weights * frame.model.apply(lv.coeffs, lv.net.points, data.points, w))
    return FrameCoefficients(tuple(out))


@dataclass(frozen=True, eq=False)
class LinearWaveletEstimator:
    frame: Frame
    J: int
    beta_hat: FrameCoefficients

    def as_expansion(self) -> KernelExpansion:
        return synthesize(self.frame, self.beta_hat)

    def __call__(self, x):
        return self.as_expansion()(x)

    def kernel_form(self, data: SampleSet) -> KernelEstimator:
        """The equivalent ``Psi_0(b^-J sqrt L)`` kernel estimator (root frame variant)."""
        return KernelEstimator(SpectralKernel(self.frame.model, psi0(self.frame.b), self.frame.b ** (-self.J)), data)

    def to_dict(self) -> dict:
        return {"type": "linear", "frame": self.frame.descriptor(), "J": self.J, "coefficients": self.beta_hat.to_dict()}


def fit_linear_wavelet(frame: Frame, data, J: int) -> LinearWaveletEstimator:
    if not 0 <= J <= frame.J_max:
        raise FrameDepthError(f"level {J} outside frame depth 0..{frame.J_max}")
    data = _as_sample(frame.model, data)
    return LinearWaveletEstimator(frame, int(J), empirical_coefficients(frame, data, J))


@dataclass(frozen=True, eq=False)
class ThresholdEstimator:
    frame: Frame
    J_n: int
    lambda_n: float
    kappa: float
    A: float
    beta_star: FrameCoefficients
    beta_hat: FrameCoefficients = field(repr=False)

    def as_expansion(self) -> KernelExpansion:
        return synthesize(self.frame, self.beta_star)

    def __call__(self, x):
        return self.as_expansion()(x)

    @property
    def survivors(self) -> list[int]:
        return [int(np.count_nonzero(v)) for v in self.beta_star.levels]

    def diagnostics(self, resolution: int = 64) -> dict:
        """Mass, negativity extent on an audit grid, and survivors per level."""
        g = self.as_expansion()
        grid = self.frame.model.audit_grid(resolution)
        vals = g(grid.nodes)
        neg = np.minimum(vals, 0.0)
        return {
            "mass": g.mean(),
            "min_value": float(vals.min()),
            "negative_mass": float(-(grid.weights @ neg)) + 0.0,
            "survivors": self.survivors,
            "total": [len(v) for v in self.beta_star.levels],
        }

    def to_dict(self) -> dict:
        return {
            "type": "threshold",
            "frame": self.frame.descriptor(),
            "J_n": self.J_n,
            "lambda_n": self.lambda_n,
            "kappa": self.kappa,
            "A": self.A,
            "coefficients": self.beta_star.to_dict(),
            "empirical": self.beta_hat.to_dict(),
        }


def fit_threshold(
    frame: Frame,
    data,
    c_diamond: float | None = None,
    A: float | None = None,
    kappa: float | None = None,
    lambda_n: float | None = None,
) -> ThresholdEstimator:
    """Hard-threshold estimator keeping ``beta_hat`` only where ``|beta_hat| > 2 lambda_n``.

    ``c_diamond`` and ``A`` default to :func:`calibrate_cdiamond` and
    :func:`estimate_sup_bound`.  ``kappa`` overrides ``c_diamond sqrt(8A)``
    and ``lambda_n`` overrides everything (``lambda_n = 0`` disables
    thresholding).
    """
    model = frame.model
    data = _as_sample(model, data)
    n = data.n
    J_n = choose_Jn(max(n, 2), frame.b, model.homogeneous_dim)
    if frame.J_max < J_n:
        raise FrameDepthError(f"frame depth {frame.J_max} below J_n={J_n} for n={n}")
    if A is None:
        A = estimate_sup_bound(model, data) if n >= 50 else 4.0
    A = max(float(A), 4.0)
    if lambda_n is None:
        if kappa is None:
            cd = calibrate_cdiamond(frame) if c_diamond is None else c_diamond
            kappa, lambda_n = threshold_params(max(n, 2), cd, A)
        else:
            if not kappa > 0:
                raise ValueError("kappa must be positive")
            lambda_n = kappa * math.sqrt(math.log(max(n, 2)) / max(n, 2))
    else:
        if lambda_n < 0:
            raise ValueError("lambda_n must be nonnegative")
        kappa = lambda_n / math.sqrt(math.log(max(n, 2)) / max(n, 2)) if kappa is None else kappa
    beta_hat = empirical_coefficients(frame, data, J_n)
    kept = tuple(np.where(np.abs(v) > 2.0 * lambda_n, v, 0.0) for v in beta_hat.levels)
    return ThresholdEstimator(frame, J_n, float(lambda_n), float(kappa), A, FrameCoefficients(kept), beta_hat)


def estimate_sup_bound(model: SpaceModel, data) -> float:
    """Plug-in ``A = max(sup f_pilot, 4)`` from a pilot kernel fit with ``delta = n^{-1/(2+d)}``."""
    data = _as_sample(model, data)
    if data.n < 50:
        raise ValueError("need at least 50 points for the pilot estimate")
    delta = min(data.n ** (-1.0 / (2.0 + model.homogeneous_dim)), 1.0)
    pilot = fit_kernel(model, data, delta)
    grid = model.quadrature_grid(2.0 / delta)
    return max(float(np.max(pilot(grid.nodes))), 4.0)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _frame_from(d: dict) -> Frame:
    return cached_frame(make_space(d["space"]), d["b"], d["J_max"], d["c6"], d.get("variant", "root"))


def estimator_from_dict(d: dict):
    """Rebuild an estimator written by ``to_dict``."""
    kind = d.get("type")
    if kind == "kernel":
        model = make_space(d["space"])
        return KernelEstimator(
            SpectralKernel(model, Multiplier.from_descriptor(d["multiplier"]), d["delta"]),
            SampleSet(model, np.array(d["points"], dtype=float)),
        )
    if kind == "linear":
        return LinearWaveletEstimator(_frame_from(d["frame"]), d["J"], FrameCoefficients.from_dict(d["coefficients"]))
    if kind == "threshold":
        return ThresholdEstimator(
            _frame_from(d["frame"]),
            d["J_n"],
            d["lambda_n"],
            d["kappa"],
            d["A"],
            FrameCoefficients.from_dict(d["coefficients"]),
            FrameCoefficients.from_dict(d["empirical"]),
        )
    raise ValueError(f"unknown estimator type {kind!r}")
