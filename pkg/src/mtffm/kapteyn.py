"""Kapteyn-series representation of the multi-tone feedback FM modulation.

The feedback system ``phi = sum_k z_k sin(k(omega t + phi))`` is solved by
substituting ``theta = omega t + phi``, which gives the generalised Kepler
equation ``psi = theta - sum_k z_k sin(k theta)`` with ``psi = omega t``.
For ``sum_k k|z_k| <= 1`` the map is monotone and

    g(psi) = theta(psi) - psi = sum_m b_m sin(m psi),
    b_m    = (2/m) J_m^{1:K}{m z_1, ..., m z_K}.

This module builds the ``b_m`` (the Kapteyn series), the modulation and phase
functions of the waveform, and a direct root-finding inversion of the Kepler
equation that serves as an independent check on the series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConvergenceDomainError, DomainError, NumericalError
from .special_functions import gbf_kapteyn_orders, weighted_sum

__all__ = [
    "DesignCoefficients",
    "KapteynExpansion",
    "WaveformParams",
    "kapteyn_coefficients",
    "invert_kepler",
    "invert_kepler_many",
    "sine_series",
    "modulation_function",
    "phase_function",
    "phase_on_uniform_grid",
    "peak_scale",
]

CONSTRAINT_SLACK = 1e-12
DEFAULT_TOL = 1e-12
MAX_ORDER = 4096
SCALE_GRID = 4096


@dataclass(frozen=True)
class DesignCoefficients:
    """Design vector ``z_1..z_K`` with ``sum_k k|z_k| <= 1``."""

    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float).reshape(-1)
        if z.size < 1:
            raise DomainError("need at least one design coefficient")
        if not np.all(np.isfinite(z)):
            raise DomainError("design coefficients must be finite")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        if self.weighted_sum > 1.0 + CONSTRAINT_SLACK:
            raise ConvergenceDomainError(
                f"sum_k k|z_k| = {self.weighted_sum:.6g} exceeds 1; "
                "the Kapteyn series and the Kepler inversion are undefined"
            )

    @property
    def K(self) -> int:
        return int(self.z.size)

    @property
    def weighted_sum(self) -> float:
        return weighted_sum(self.z)

    @property
    def margin(self) -> float:
        """Distance ``1 - sum_k k|z_k|`` to the convergence boundary."""
        return 1.0 - self.weighted_sum

    @classmethod
    def zeros(cls, K: int) -> "DesignCoefficients":
        return cls(np.zeros(K))


@dataclass(frozen=True)
class KapteynExpansion:
    """Truncated sine coefficients ``b_1..b_M`` of ``g(psi)``."""

    b: np.ndarray
    tail_bound: float

    @property
    def M(self) -> int:
        return int(self.b.size)

    @property
    def orders(self) -> np.ndarray:
        return np.arange(1, self.M + 1)

    @property
    def gbf_values(self) -> np.ndarray:
        """``J_m^{1:K}{m z_k}`` recovered from ``b_m = 2 J_m / m``."""
        return 0.5 * self.orders * self.b


def kapteyn_coefficients(
    coeffs: DesignCoefficients, tol: float = DEFAULT_TOL, max_order: int = MAX_ORDER
) -> KapteynExpansion:
    """Kapteyn coefficients ``b_m = (2/m) J_m^{1:K}{m z_k}``.

    Orders are added in growing blocks until the largest of the last five
    ``|b_m|`` drops below ``tol`` (or ``max_order`` is reached); that maximum
    is reported as ``tail_bound``.
    """
    if not isinstance(coeffs, DesignCoefficients):
        coeffs = DesignCoefficients(coeffs)
    if tol <= 0:
        raise DomainError("tol must be positive")
    z = coeffs.z
    if not np.any(z):
        # J_m{0} = 0 for m >= 1 exactly; skip the quadrature roundoff
        return KapteynExpansion(np.zeros(5), 0.0)
    b = np.zeros(0)
    block = 32
    while b.size < max_order:
        start = b.size + 1
        stop = min(b.size + block, max_order)
        m = np.arange(start, stop + 1)
        b = np.concatenate((b, 2.0 * gbf_kapteyn_orders(z, m) / m))
        block *= 2
        if b.size >= 5:
            window = np.lib.stride_tricks.sliding_window_view(np.abs(b), 5).max(axis=1)
            below = np.nonzero(window < tol)[0]
            if below.size:
                M = int(below[0]) + 5
                return KapteynExpansion(b[:M].copy(), float(window[below[0]]))
    return KapteynExpansion(b, float(np.abs(b[-5:]).max()))


def _kepler_residual(theta, psi, z, k):
    s = np.sin(np.multiply.outer(theta, k)) @ z
    c = np.cos(np.multiply.outer(theta, k)) @ (k * z)
    return theta - s - psi, 1.0 - c


def invert_kepler_many(
    psi: Sequence[float] | float, coeffs: DesignCoefficients, tol: float = 1e-13, max_iter: int = 200
) -> np.ndarray:
    """Solve ``theta - sum_k z_k sin(k theta) = psi`` elementwise.

    Safeguarded Newton iteration inside the bracket
    ``[psi - sum|z_k|, psi + sum|z_k|]``; falls back to bisection when the
    Newton step leaves the bracket or ``|f'| < 1e-8`` (which happens at the
    boundary ``sum_k k|z_k| = 1``).
    """
    if not isinstance(coeffs, DesignCoefficients):
        coeffs = DesignCoefficients(coeffs)
    psi = np.asarray(psi, dtype=float)
    shape = psi.shape
    psi = psi.reshape(-1)
    z = coeffs.z
    k = np.arange(1, z.size + 1, dtype=float)
    # theta(psi + 2 pi n) = theta(psi) + 2 pi n
    turns = np.round(psi / (2.0 * np.pi))
    p = psi - 2.0 * np.pi * turns
    spread = float(np.sum(np.abs(z)))
    lo = p - spread - 1e-15
    hi = p + spread + 1e-15
    theta = p.copy()
    active = np.ones(p.size, dtype=bool)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        th = theta[idx]
        f, fp = _kepler_residual(th, p[idx], z, k)
        done = np.abs(f) <= tol
        active[idx[done]] = False
        lo[idx] = np.where(f < 0, th, lo[idx])
        hi[idx] = np.where(f > 0, th, hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = th - f / fp
        mid = 0.5 * (lo[idx] + hi[idx])
        bad = (np.abs(fp) < 1e-8) | ~(step > lo[idx]) | ~(step < hi[idx])
        new = np.where(bad, mid, step)
        stuck = (hi[idx] - lo[idx]) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(th))
        active[idx[stuck]] = False
        theta[idx] = np.where(done | stuck, th, new)
    if np.any(active):
        raise NumericalError(f"Kepler inversion did not converge for {active.sum()} points")
    return (theta + 2.0 * np.pi * turns).reshape(shape)


def invert_kepler(psi: float, coeffs: DesignCoefficients) -> float:
    """Scalar form of :func:`invert_kepler_many`."""
    return float(invert_kepler_many(np.array([psi]), coeffs)[0])


def sine_series(b: np.ndarray, psi: Sequence[float] | float) -> np.ndarray:
    """Evaluate ``sum_m b_m sin(m psi)`` at arbitrary points."""
    psi = np.asarray(psi, dtype=float)
    flat = psi.reshape(-1)
    m = np.arange(1, len(b) + 1)
    out = np.empty(flat.size)
    chunk = max(1, (1 << 22) // max(1, len(b)))
    for s in range(0, flat.size, chunk):
        out[s:s + chunk] = np.sin(np.outer(flat[s:s + chunk], m)) @ b
    return out.reshape(psi.shape)


def _cosine_series(a: np.ndarray, psi: np.ndarray) -> np.ndarray:
    flat = psi.reshape(-1)
    m = np.arange(1, len(a) + 1)
    out = np.empty(flat.size)
    chunk = max(1, (1 << 22) // max(1, len(a)))
    for s in range(0, flat.size, chunk):
        out[s:s + chunk] = np.cos(np.outer(flat[s:s + chunk], m)) @ a
    return out.reshape(psi.shape)


def _folded_series(coef: np.ndarray, n: int) -> np.ndarray:
    # sum_m coef_m exp(j m psi_i) at psi_i = -pi + 2 pi i / n, exact for any M
    m = np.arange(1, len(coef) + 1)
    buf = np.zeros(n, dtype=complex)
    np.add.at(buf, m % n, coef * np.where(m % 2 == 0, 1.0, -1.0))
    return n * np.fft.ifft(buf)


def peak_scale(expansion: KapteynExpansion, delta_f: float, n: int = SCALE_GRID) -> float:
    """Scale ``A`` making ``max |A g(2 pi t/T)| = delta_f/2`` on an ``n``-point grid."""
    peak = float(np.max(np.abs(_folded_series(expansion.b, n).imag))) if expansion.M else 0.0
    if peak == 0.0:
        # unmodulated: any A gives m(t) = 0
        return 0.5 * delta_f
    return 0.5 * delta_f / peak


@dataclass(frozen=True)
class WaveformParams:
    """Physical description of one MT-FFM pulse.

    ``A`` defaults to the peak normalisation that sweeps the modulation
    function through exactly ``+-delta_f/2`` on a 4096-point grid.
    """

    T: float
    delta_f: float
    coeffs: DesignCoefficients
    A: float | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not isinstance(self.coeffs, DesignCoefficients):
            object.__setattr__(self, "coeffs", DesignCoefficients(self.coeffs))
        if not (self.T > 0 and math.isfinite(self.T)):
            raise DomainError(f"T must be positive, got {self.T}")
        if not (self.delta_f > 0 and math.isfinite(self.delta_f)):
            raise DomainError(f"delta_f must be positive, got {self.delta_f}")
        if self.A is None:
            object.__setattr__(self, "A", peak_scale(self.expansion, self.delta_f))
        elif not self.A > 0:
            raise DomainError(f"A must be positive, got {self.A}")

    @cached_property
    def expansion(self) -> KapteynExpansion:
        return kapteyn_coefficients(self.coeffs, self.tol)

    @property
    def tbp(self) -> float:
        return self.T * self.delta_f

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.T

    @property
    def phase_coefficients(self) -> np.ndarray:
        """Cosine coefficients ``alpha_m = -2 A T J_m^{1:K}{m z_k} / m^2`` of the phase."""
        m = self.expansion.orders
        return -self.A * self.T * self.expansion.b / m

    def with_coeffs(self, coeffs: DesignCoefficients, A: float | None = None) -> "WaveformParams":
        return WaveformParams(self.T, self.delta_f, coeffs, A=A, tol=self.tol)


def modulation_function(params: WaveformParams, t_grid: Sequence[float]) -> np.ndarray:
    """Instantaneous frequency ``m(t) = A sum_m b_m sin(2 pi m t / T)`` in Hz."""
    t = np.asarray(t_grid, dtype=float)
    return params.A * sine_series(params.expansion.b, params.omega * t)


def phase_function(params: WaveformParams, t_grid: Sequence[float]) -> np.ndarray:
    """Instantaneous phase ``sum_m alpha_m cos(2 pi m t / T)`` in radians."""
    t = np.asarray(t_grid, dtype=float)
    return _cosine_series(params.phase_coefficients, params.omega * t)


def phase_on_uniform_grid(params: WaveformParams, n: int) -> np.ndarray:
    """Phase at ``t_i = -T/2 + i T/n`` via an FFT; same values as :func:`phase_function`."""
    return _folded_series(params.phase_coefficients, n).real
