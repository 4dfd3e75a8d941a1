"""Sampled waveform, line spectrum, closed-form spectrum/AF/ACF and numeric oracles.

A rectangular-envelope FM pulse on ``[-T/2, T/2]`` whose phase is periodic in
``T`` can be written as a line expansion

    s(t) = T^{-1/2} sum_l c_l exp(+j 2 pi l t / T),

with ``c_l`` the Fourier coefficients of ``exp(j phi(t))``.  Line ``l`` sits at
``f = l/T``; every closed form below uses this orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from .errors import PreconditionError
from .kapteyn import WaveformParams, phase_function, phase_on_uniform_grid
from .special_functions import adaptive_line_coefficients

__all__ = [
    "SampledWaveform",
    "FourierLineCoefficients",
    "AmbiguitySurface",
    "Spectrogram",
    "synthesize",
    "line_coefficients",
    "spectrum",
    "ambiguity_closed",
    "ambiguity_surface",
    "ambiguity_numeric",
    "ambiguity_numeric_surface",
    "AutocorrelationFunction",
    "acf",
    "spectrogram",
    "lfm_waveform",
    "DEFAULT_OVERSAMPLING",
    "MIN_OVERSAMPLING",
]

DEFAULT_OVERSAMPLING = 16.0
MIN_OVERSAMPLING = 8.0
LINE_ENERGY_TOL = 1e-10


@dataclass(frozen=True)
class SampledWaveform:
    """Samples of ``s(t)`` at ``t_i = -T/2 + i/sample_rate`` for ``i = 0..N-1``.

    ``end_sample`` is the value at ``t = +T/2`` (the closing edge of the
    support).  It is not part of the energy sum but lets quadrature rules
    reach the end of the pulse.
    """

    samples: np.ndarray
    sample_rate: float
    T: float
    end_sample: complex | None = None

    @property
    def n(self) -> int:
        return int(self.samples.size)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def t(self) -> np.ndarray:
        return -0.5 * self.T + np.arange(self.n) * self.dt

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def closed_samples(self) -> np.ndarray:
        """Samples including ``t = +T/2`` (periodic wrap if ``end_sample`` is unset)."""
        end = self.samples[0] if self.end_sample is None else self.end_sample
        return np.append(self.samples, end)


@dataclass(frozen=True)
class FourierLineCoefficients:
    """Line coefficients ``c_l``, ``l = -L..L``, of a pulse of duration ``T``."""

    c: np.ndarray
    T: float

    @property
    def L(self) -> int:
        return (self.c.size - 1) // 2

    @property
    def ell(self) -> np.ndarray:
        return np.arange(-self.L, self.L + 1)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.c) ** 2))


@dataclass(frozen=True)
class AmbiguitySurface:
    """``chi(tau, nu)`` sampled on ``tau_axis`` x ``nu_axis`` (rows are delays)."""

    values: np.ndarray
    tau_axis: np.ndarray
    nu_axis: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(frozen=True)
class Spectrogram:
    power: np.ndarray  # shape (n_freq, n_time)
    freqs: np.ndarray
    times: np.ndarray


def synthesize(params: WaveformParams, sample_rate: float | None = None) -> SampledWaveform:
    """Sample ``s(t) = exp(j phi(t)) / sqrt(T)`` on ``[-T/2, T/2)``.

    ``sample_rate`` defaults to ``16 * delta_f`` and is rounded so that an
    integer number of samples spans ``T`` exactly.
    """
    if sample_rate is None:
        sample_rate = DEFAULT_OVERSAMPLING * params.delta_f
    if sample_rate < MIN_OVERSAMPLING * params.delta_f * (1 - 1e-12):
        raise PreconditionError(
            f"sample_rate {sample_rate:g} Hz is below {MIN_OVERSAMPLING:g} x delta_f"
        )
    n = int(round(params.T * sample_rate))
    phi = phase_on_uniform_grid(params, n)
    amp = 1.0 / math.sqrt(params.T)
    end_phase = float(phase_function(params, [0.5 * params.T])[0])
    return SampledWaveform(amp * np.exp(1j * phi), n / params.T, params.T, amp * np.exp(1j * end_phase))


def line_coefficients(params: WaveformParams, energy_tol: float = LINE_ENERGY_TOL) -> FourierLineCoefficients:
    """Adaptive-order line coefficients of the MT-FFM pulse.

    ``L`` is the smallest order capturing ``1 - energy_tol`` of the energy,
    capped at ``16 * (ceil(T * delta_f) + K)``: the sweep band plus a margin
    that also covers the modulating harmonics ``k/T``, which dominate the
    sideband spread when ``K`` is comparable to the TBP.
    """
    cap = 16 * (math.ceil(params.tbp) + params.coeffs.K)
    n = 1 << int(16 * math.ceil(params.tbp) + 256).bit_length()
    while True:
        try:
            c, _ = adaptive_line_coefficients(phase_on_uniform_grid(params, n), energy_tol, cap)
            return FourierLineCoefficients(c, params.T)
        except PreconditionError:
            if n > 64 * cap + 4096:
                raise
            n *= 2


def spectrum(lines: FourierLineCoefficients, f_grid: Sequence[float]) -> np.ndarray:
    """``S(f) = sqrt(T) sum_l c_l sinc(pi T (f - l/T))`` with ``sinc x = sin x / x``."""
    f = np.asarray(f_grid, dtype=float)
    flat = f.reshape(-1)
    T = lines.T
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, (1 << 22) // lines.c.size)
    for s in range(0, flat.size, chunk):
        # np.sinc(x) = sin(pi x)/(pi x)
        out[s:s + chunk] = np.sinc(np.subtract.outer(T * flat[s:s + chunk], lines.ell)) @ lines.c
    return math.sqrt(T) * out.reshape(f.shape)


def _lag_products(lines: FourierLineCoefficients, tau: float) -> np.ndarray:
    # D_d = sum_l a_l b_{l-d}, d = -2L..2L, with the exp(-j pi (l+l') tau/T) factor split
    rot = np.exp(-1j * np.pi * lines.ell * tau / lines.T)
    a = lines.c * rot
    b = np.conj(lines.c) * rot
    return np.convolve(a, b[::-1])


def ambiguity_surface(
    lines: FourierLineCoefficients, taus: Sequence[float], nus: Sequence[float]
) -> AmbiguitySurface:
    """Closed-form ``chi(tau, nu)`` over a grid from the line double sum."""
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    T = lines.T
    d = np.arange(-2 * lines.L, 2 * lines.L + 1)
    out = np.zeros((taus.size, nus.size), dtype=complex)
    for i, tau in enumerate(taus):
        span = T - abs(tau)
        if span <= 0:
            continue
        D = _lag_products(lines, tau)
        kernel = np.sinc(span * np.add.outer(nus, d / T))
        out[i] = (span / T) * (kernel @ D)
    return AmbiguitySurface(out, taus, nus)


def ambiguity_closed(lines: FourierLineCoefficients, tau: float, nu: float) -> complex:
    """Closed-form ambiguity function at one ``(tau, nu)``; zero for ``|tau| >= T``."""
    return complex(ambiguity_surface(lines, [tau], [nu]).values[0, 0])


class AutocorrelationFunction:
    """Closed-form ACF ``R(tau) = chi(tau, 0)`` evaluated in O(L) per delay.

    Summing the line double sum along its diagonals gives, for ``tau >= 0``,

        R(tau) = sum_l [(1 - tau/T) |c_l|^2 + q_l] exp(-j 2 pi l tau / T),

    where ``q_l = 2j Im(c_l (u * conj c)_l)`` and ``u_d = (-1)^d / (j 2 pi d)``
    (``u_0 = 0``) is convolved over the line index.  ``R(-tau) = conj R(tau)``.
    """

    def __init__(self, lines: FourierLineCoefficients):
        self.lines = lines
        L = lines.L
        c = lines.c
        d = np.arange(-2 * L, 2 * L + 1)
        u = np.zeros(d.size, dtype=complex)
        nz = d != 0
        u[nz] = np.where(d[nz] % 2 == 0, 1.0, -1.0) / (2j * np.pi * d[nz])
        conv = signal.fftconvolve(u, np.conj(c)) if L > 64 else np.convolve(u, np.conj(c))
        x = c * conv[2 * L:4 * L + 1]
        self.p = np.abs(c) ** 2
        self.q = 2j * x.imag

    @property
    def T(self) -> float:
        return self.lines.T

    def __call__(self, tau: Sequence[float] | float) -> np.ndarray:
        tau = np.asarray(tau, dtype=float)
        flat = tau.reshape(-1)
        at = np.abs(flat)
        ell = self.lines.ell
        out = np.zeros(flat.size, dtype=complex)
        inside = np.nonzero(at < self.T)[0]
        chunk = max(1, (1 << 22) // ell.size)
        for s in range(0, inside.size, chunk):
            idx = inside[s:s + chunk]
            x = at[idx] / self.T
            E = np.exp(-2j * np.pi * np.outer(x, ell))
            out[idx] = (1.0 - x) * (E @ self.p) + E @ self.q
        neg = flat < 0
        out[neg] = np.conj(out[neg])
        return out.reshape(tau.shape)

    def on_uniform_grid(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``(tau, R(tau))`` at ``tau_i = i T / n`` for ``i = 0..n`` via FFT."""
        ell = self.lines.ell
        bp = np.zeros(n, dtype=complex)
        bq = np.zeros(n, dtype=complex)
        np.add.at(bp, ell % n, self.p)
        np.add.at(bq, ell % n, self.q)
        P = np.fft.fft(bp)
        Q = np.fft.fft(bq)
        x = np.arange(n) / n
        r = (1.0 - x) * P + Q
        tau = self.T * np.arange(n + 1) / n
        return tau, np.append(r, 0.0)


def acf(lines: FourierLineCoefficients, tau: Sequence[float] | float) -> np.ndarray:
    """``R(tau) = chi(tau, 0)``."""
    return AutocorrelationFunction(lines)(tau)


# Gregory end corrections: -h * g_j * (nabla^j f_n + (-1)^j Delta^j f_0)
_GREGORY = (1.0 / 12.0, 1.0 / 24.0, 19.0 / 720.0, 3.0 / 160.0)


def _gregory_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    if n < 2 * len(_GREGORY) + 2:
        return w
    for j, g in enumerate(_GREGORY, start=1):
        binom = np.array([math.comb(j, i) for i in range(j + 1)], dtype=float)
        fwd = binom * (-1.0) ** (j - np.arange(j + 1))  # Delta^j f_0 = sum fwd_i f_i
        bwd = binom * (-1.0) ** np.arange(j + 1)  # nabla^j f_n = sum bwd_i f_{n-i}
        w[-1 - np.arange(j + 1)] -= g * bwd
        w[: j + 1] -= g * (-1.0) ** j * fwd
    return w


def _snap(wf: SampledWaveform, tau: float) -> int:
    return int(round(tau / (2.0 * wf.dt)))


def ambiguity_numeric_surface(
    wf: SampledWaveform, taus: Sequence[float], nus: Sequence[float]
) -> AmbiguitySurface:
    """Direct quadrature of ``int s(t - tau/2) s*(t + tau/2) exp(j 2 pi nu t) dt``.

    Each delay is snapped to an even number of samples so both copies shift
    by a whole sample count.  The overlap is integrated with the trapezoid
    rule plus Gregory end corrections.  The returned ``tau_axis`` holds the
    snapped delays.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    s = wf.closed_samples()
    n = wf.n
    t_all = -0.5 * wf.T + np.arange(n + 1) * wf.dt
    out = np.zeros((taus.size, nus.size), dtype=complex)
    snapped = np.empty(taus.size)
    for i, tau in enumerate(taus):
        k = _snap(wf, tau)
        snapped[i] = 2 * k * wf.dt
        a = abs(k)
        count = n - 2 * a + 1
        if count < 2:
            continue
        idx = np.arange(a, n - a + 1)
        prod = s[idx - k] * np.conj(s[idx + k])
        w = _gregory_weights(count) * wf.dt
        phase = np.exp(2j * np.pi * np.outer(nus, t_all[idx]))
        out[i] = phase @ (w * prod)
    return AmbiguitySurface(out, snapped, nus)


def ambiguity_numeric(wf: SampledWaveform, tau: float, nu: float) -> complex:
    """Numeric ambiguity function at one point (delay snapped to the grid)."""
    return complex(ambiguity_numeric_surface(wf, [tau], [nu]).values[0, 0])


def spectrogram(wf: SampledWaveform, window_len: int, hop: int) -> Spectrogram:
    """Magnitude-squared STFT (Hann window), frequencies centred on DC."""
    window_len = int(window_len)
    hop = int(hop)
    if window_len < 2 or window_len > wf.n:
        raise PreconditionError(f"window_len must lie in [2, {wf.n}], got {window_len}")
    if not 0 < hop <= window_len:
        raise PreconditionError(f"hop must lie in [1, window_len], got {hop}")
    freqs, times, Z = signal.stft(
        wf.samples,
        fs=wf.sample_rate,
        window="hann",
        nperseg=window_len,
        noverlap=window_len - hop,
        return_onesided=False,
        boundary=None,
        padded=False,
    )
    order = np.argsort(freqs)
    return Spectrogram(np.abs(Z[order]) ** 2, freqs[order], times - 0.5 * wf.T)


def lfm_waveform(T: float, bandwidth: float, sample_rate: float) -> SampledWaveform:
    """Unit-energy linear FM pulse ``exp(j pi (B/T) t^2) / sqrt(T)``, a reference waveform."""
    n = int(round(T * sample_rate))
    t = -0.5 * T + np.arange(n) * T / n
    rate = bandwidth / T
    amp = 1.0 / math.sqrt(T)
    end = amp * np.exp(1j * np.pi * rate * (0.5 * T) ** 2)
    return SampledWaveform(amp * np.exp(1j * np.pi * rate * t**2), n / T, T, end)
