r"""Bessel functions, generalized Bessel functions and Fourier line projections.

The cylindrical generalized Bessel function (GBF) of the first kind with
``K`` arguments is

.. math::
    \mathcal{J}_m^{1:K}\{x_1, \dots, x_K\}
        = \frac{1}{2\pi}\int_0^{2\pi}
          \cos\Big(m\theta - \sum_{k=1}^{K} x_k \sin k\theta\Big)\,d\theta .

For ``K = 1`` this is the ordinary Bessel function ``J_m(x_1)``.  The
integrand is smooth and ``2*pi``-periodic, so the trapezoidal rule on a
uniform grid converges geometrically; every GBF here is evaluated that way.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DomainError, PreconditionError

__all__ = [
    "bessel_j",
    "gbf",
    "gbf_kapteyn_orders",
    "fourier_line_coefficients",
    "adaptive_line_coefficients",
    "weighted_sum",
]

_SERIES_LIMIT = 12.0
_GBF_TOL = 1e-13
_GBF_MAX_GRID = 1 << 22


def _next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def weighted_sum(z: Sequence[float]) -> float:
    """Return ``sum_k k*|z_k|`` (k starting at 1)."""
    z = np.asarray(z, dtype=float)
    return float(np.sum(np.arange(1, z.size + 1) * np.abs(z)))


def _bessel_series(m: int, x: float) -> float:
    # ascending series sum (-1)^n (x/2)^(2n+m) / (n! (n+m)!)
    half = 0.5 * x
    term = half**m / math.factorial(m)
    terms = [term]
    n = 0
    while True:
        n += 1
        term *= -(half * half) / (n * (n + m))
        terms.append(term)
        if n > 4 and abs(term) < 1e-18:
            break
    return math.fsum(terms)


def _bessel_miller(m: int, x: float) -> float:
    # backward recurrence normalised by J0 + 2*sum J_2k = 1
    top = max(m, int(x))
    start = 2 * ((top + 40 + int(math.sqrt(80.0 * top))) // 2)
    two_over_x = 2.0 / x
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    result = 0.0
    for k in range(start, 0, -1):
        j_prev = k * two_over_x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            result *= 1e-250
        # j_cur now holds the unnormalised J_{k-1}
        if k - 1 == m:
            result = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur
    return result / norm


def bessel_j(m: int, x: float) -> float:
    """Bessel function of the first kind ``J_m(x)`` for integer ``m >= 0``.

    Uses the ascending power series for ``|x| <= 12`` and Miller's backward
    recurrence above.  Absolute error is below ``1e-12`` for ``|x| <= 100``.
    """
    m = int(m)
    if m < 0:
        raise DomainError(f"order must be >= 0, got {m}")
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"argument must be finite, got {x}")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    sign = -1.0 if (x < 0 and m % 2) else 1.0
    ax = abs(x)
    if ax <= _SERIES_LIMIT:
        return sign * _bessel_series(m, ax)
    return sign * _bessel_miller(m, ax)


def _gbf_trapezoid(m: int, x: np.ndarray, n: int) -> float:
    theta = 2.0 * np.pi * np.arange(n) / n
    k = np.arange(1, x.size + 1)
    arg = m * theta - x @ np.sin(np.outer(k, theta))
    return float(np.mean(np.cos(arg)))


def gbf(m: int, z: Sequence[float]) -> float:
    """Generalized Bessel function ``J_m^{1:K}{z_1..z_K}``.

    ``z`` is used as given; to obtain the Kapteyn-type value
    ``J_m^{1:K}{m z_k}`` pass ``m * z``.  Negative orders are evaluated from
    the same integral.
    """
    x = np.atleast_1d(np.asarray(z, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise DomainError("z must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(x)):
        raise DomainError("z must be finite")
    m = int(m)
    bandwidth = abs(m) + math.ceil(weighted_sum(x)) + x.size
    n = _next_pow2(max(256, 8 * bandwidth))
    prev = _gbf_trapezoid(m, x, n)
    while n < _GBF_MAX_GRID:
        n *= 2
        cur = _gbf_trapezoid(m, x, n)
        if abs(cur - prev) < _GBF_TOL:
            return cur
        prev = cur
    return prev


def gbf_kapteyn_orders(z: Sequence[float], orders: Sequence[int]) -> np.ndarray:
    """Vectorised ``J_m^{1:K}{m z_1, ..., m z_K}`` for every ``m`` in ``orders``.

    With ``f(theta) = theta - sum_k z_k sin(k theta)`` the integrand becomes
    ``cos(m f(theta))``, which is even in ``theta``; the quadrature runs over
    ``[0, pi]`` on one grid shared by all orders.  The grid resolves twice
    the Carson bandwidth ``m_max * (1 + sum_k k|z_k|)`` and so assumes the
    weighted sum stays near or below one.
    """
    z = np.asarray(z, dtype=float)
    orders = np.asarray(orders, dtype=int)
    if orders.size == 0:
        return np.zeros(0)
    m_max = int(np.max(np.abs(orders)))
    w = weighted_sum(z)
    half = _next_pow2(max(128, int(m_max * (1.0 + w)) + 8 * z.size + 64))
    theta = np.pi * np.arange(half + 1) / half
    k = np.arange(1, z.size + 1)
    f = theta - z @ np.sin(np.outer(k, theta))
    weights = np.full(half + 1, 1.0 / half)
    weights[0] = weights[-1] = 0.5 / half
    out = np.empty(orders.size)
    if orders.size > 8 and np.all(np.diff(orders) == 1):
        # cos((m+1)f) = 2 cos(f) cos(mf) - cos((m-1)f); error grows ~ m * eps
        two_cos = 2.0 * np.cos(f)
        prev = np.cos((orders[0] - 1) * f)
        cur = np.cos(orders[0] * f)
        for i in range(orders.size):
            if i:
                prev, cur = cur, two_cos * cur - prev
            out[i] = cur @ weights
        return out
    block = max(1, (1 << 22) // (half + 1))
    for start in range(0, orders.size, block):
        sl = slice(start, start + block)
        out[sl] = np.cos(np.outer(orders[sl], f)) @ weights
    return out


def fourier_line_coefficients(phase_samples: Sequence[float], max_order: int) -> np.ndarray:
    """Fourier line coefficients ``c_l`` of ``exp(j*phi(t))`` for ``|l| <= L``.

    ``phase_samples`` holds ``phi`` at ``t_i = -T/2 + i*T/N``, ``i = 0..N-1``.
    The coefficients satisfy ``exp(j*phi(t)) = sum_l c_l exp(+j 2 pi l t / T)``
    so that line ``l`` sits at frequency ``l/T``.  Returned array is indexed
    ``l = -L..L`` (centre element is ``c_0``).
    """
    phi = np.asarray(phase_samples, dtype=float)
    n = phi.size
    L = int(max_order)
    if L < 0:
        raise PreconditionError("max_order must be >= 0")
    if n < 4 * L + 4:
        raise PreconditionError(f"need at least {4 * L + 4} samples for L={L}, got {n}")
    spec = np.fft.fft(np.exp(1j * phi)) / n
    ell = np.arange(-L, L + 1)
    # t_i = -T/2 + i T/N contributes exp(-j pi l) = (-1)^l
    return spec[ell % n] * np.where(ell % 2 == 0, 1.0, -1.0)


def adaptive_line_coefficients(
    phase_samples: Sequence[float],
    energy_tol: float = 1e-10,
    max_order_cap: int | None = None,
) -> tuple[np.ndarray, int]:
    """Smallest-``L`` line coefficients capturing ``1 - energy_tol`` of the energy.

    Returns ``(c, L)``.  Raises :class:`PreconditionError` when the grid is too
    coarse to hold the required order.
    """
    phi = np.asarray(phase_samples, dtype=float)
    n = phi.size
    spec = np.fft.fft(np.exp(1j * phi)) / n
    power = np.abs(spec) ** 2
    l_grid = (n - 4) // 4
    if max_order_cap is not None:
        l_grid = min(l_grid, int(max_order_cap))
    l_idx = np.arange(1, l_grid + 1)
    captured = power[0] + np.concatenate(([0.0], np.cumsum(power[l_idx] + power[-l_idx])))
    hit = np.nonzero(captured >= 1.0 - energy_tol)[0]
    if hit.size:
        L = int(hit[0])
    elif max_order_cap is not None and l_grid == int(max_order_cap):
        L = l_grid
    else:
        raise PreconditionError(
            f"{n} phase samples cannot resolve the line spectrum to {energy_tol:g}"
        )
    return fourier_line_coefficients(phi, L), L
