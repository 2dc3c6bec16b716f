"""Uniform scalar quantization with optional uniform dither, plus other nonlinearities."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import ParameterError, rng_for

__all__ = [
    "QuantizationScheme",
    "quantize_uniform",
    "sample_dither",
    "observe",
    "quantization_error_diagnostics",
]

NONLINEARITIES = ("uniform", "sign", "tanh", "identity")


@dataclass(frozen=True)
class QuantizationScheme:
    """How measurements are digitized.

    ``delta`` is the quantizer resolution and ``dithered`` toggles a uniform
    dither of width ``delta``; both are ignored by the other nonlinearities.
    """

    nonlinearity: str = "uniform"
    delta: float = 0.1
    dithered: bool = True

    def __post_init__(self):
        if self.nonlinearity not in NONLINEARITIES:
            raise ParameterError(
                f"unknown nonlinearity {self.nonlinearity!r}; expected one of {NONLINEARITIES}"
            )
        if self.nonlinearity == "uniform" and not self.delta > 0:
            raise ParameterError(f"quantizer resolution must be positive, got {self.delta}")

    @property
    def uses_dither(self):
        return self.nonlinearity == "uniform" and self.dithered


def quantize_uniform(x, delta):
    """Midpoint quantizer ``delta * (floor(x / delta) + 1/2)``.

    Inputs exactly on a cell boundary go to the upper cell.
    """
    if not delta > 0:
        raise ParameterError(f"quantizer resolution must be positive, got {delta}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ParameterError("quantizer input must be finite")
    out = delta * (np.floor(x / delta) + 0.5)
    return float(out) if out.ndim == 0 else out


def sample_dither(m, delta, seed):
    """i.i.d. ``Unif[-delta/2, delta/2)`` dither of length `m`."""
    if not delta > 0:
        raise ParameterError(f"dither width must be positive, got {delta}")
    u = rng_for(seed).random(m)
    return delta * (u - 0.5)


def observe(ybar, scheme, seed):
    """Apply `scheme` to the linear measurements `ybar`.

    Returns
    -------
    y : ndarray
        Quantized / transformed measurements.
    tau : ndarray
        The dither that was added (zeros when the scheme is undithered).
    """
    ybar = np.asarray(ybar, dtype=float)
    tau = np.zeros_like(ybar)
    kind = scheme.nonlinearity
    if kind == "identity":
        return ybar.copy(), tau
    if kind == "sign":
        return np.where(ybar >= 0, 1.0, -1.0), tau
    if kind == "tanh":
        return np.tanh(ybar), tau
    if scheme.dithered:
        tau = sample_dither(ybar.size, scheme.delta, seed)
    return quantize_uniform(ybar + tau, scheme.delta), tau


def quantization_error_diagnostics(ybar, y, tau, delta):
    """Statistics of the quantization error ``z = y - ybar - tau``.

    With uniform dither, z should look i.i.d. uniform on a cell and be
    uncorrelated with the input. Reported keys: ``mean``, ``variance``,
    ``max_abs``, ``input_correlation`` and ``ks_distance`` (Kolmogorov-Smirnov
    distance to the uniform law on ``[-delta/2, delta/2]``).
    """
    ybar, y, tau = (np.asarray(a, dtype=float) for a in (ybar, y, tau))
    if not ybar.shape == y.shape == tau.shape:
        raise ParameterError("ybar, y and tau must have the same length")
    z = y - ybar - tau
    if np.ptp(ybar) > 0:
        corr = float(np.corrcoef(z, ybar)[0, 1])
    else:
        corr = 0.0
    ks = stats.kstest(z, "uniform", args=(-delta / 2, delta)).statistic
    return {
        "mean": float(z.mean()),
        "variance": float(z.var(ddof=1)),
        "max_abs": float(np.abs(z).max()),
        "input_correlation": corr,
        "ks_distance": float(ks),
    }
