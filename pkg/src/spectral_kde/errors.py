"""Exception types raised across the package."""


class SpectralBudgetError(ValueError):
    """A requested band, degree or net resolution exceeds the configured budget."""


class GridError(ValueError):
    """A quadrature grid is not exact enough for the requested computation."""


class FrameDepthError(ValueError):
    """A frame has fewer levels than an estimator needs."""


class NumericalError(RuntimeError):
    """A computation produced a degenerate or non-finite result."""
