"""Cross-route identity checks run by ``mtffm verify``.

Each check computes a quantity two independent ways and reports the largest
discrepancy against a fixed tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kapteyn import (
    DesignCoefficients,
    WaveformParams,
    invert_kepler_many,
    kapteyn_coefficients,
    sine_series,
)
from .metrics import rms_bandwidth_direct, rms_bandwidth_kapteyn, rms_bandwidth_spectral
from .optimizer import random_init
from .waveform import ambiguity_numeric_surface, ambiguity_surface, line_coefficients, synthesize


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"[{tag}] {self.name}: error {self.error:.3e} (tol {self.tolerance:.0e}){extra}"


def nielsen_sum(z: float) -> float:
    """``sum_m (J_m(m z) / m)^2`` via the K = 1 Kapteyn expansion (equals ``z^2/4``)."""
    e = kapteyn_coefficients(DesignCoefficients([z]))
    return float(np.sum((e.gbf_values / e.orders) ** 2))


def check_nielsen(zs=(0.1, 0.5, 0.9), tol: float = 1e-8) -> CheckResult:
    errs = [abs(nielsen_sum(z) - z * z / 4.0) for z in zs]
    detail = ", ".join(f"z={z:g}: sum={nielsen_sum(z):.12f}" for z in zs)
    return CheckResult("Nielsen formula", max(errs), tol, detail)


def random_valid_z(rng: np.random.Generator, K: int) -> np.ndarray:
    # weighted sums drawn in [0.05, 0.95] keep the expansion inside MAX_ORDER
    z = rng.standard_normal(K)
    return z * (rng.uniform(0.05, 0.95) / np.sum(np.arange(1, K + 1) * np.abs(z)))


def check_kapteyn_identity(
    n_vectors: int = 50, Ks=(1, 2, 4, 8, 32), seed: int = 0, tol: float = 1e-8, corrupt: bool = False
) -> CheckResult:
    """``4 sum_m (J_m^{1:K}{m z}/m)^2 = sum_k z_k^2`` over random vectors."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_vectors):
        z = random_valid_z(rng, Ks[i % len(Ks)])
        e = kapteyn_coefficients(DesignCoefficients(z))
        J = e.gbf_values.copy()
        if corrupt and i == 0:
            J[0] *= 1.01
        lhs = 4.0 * np.sum((J / e.orders) ** 2)
        worst = max(worst, abs(lhs - np.sum(z * z)))
    return CheckResult("GBF Kapteyn identity", worst, tol, f"{n_vectors} vectors, K in {list(Ks)}")


def check_kepler_oracle(n_points: int = 1000, seed: int = 0, tol: float = 1e-6) -> CheckResult:
    """Series ``g(psi)`` against ``theta(psi) - psi`` from the root finder."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_vector = 50
    for start in range(0, n_points, per_vector):
        K = int(rng.choice([1, 2, 4, 8, 32]))
        coeffs = DesignCoefficients(random_valid_z(rng, K))
        psi = rng.uniform(0.0, 2.0 * np.pi, min(per_vector, n_points - start))
        series = sine_series(kapteyn_coefficients(coeffs).b, psi)
        direct = invert_kepler_many(psi, coeffs) - psi
        worst = max(worst, float(np.max(np.abs(series - direct))))
    return CheckResult("Kepler inversion vs Kapteyn series", worst, tol, f"{n_points} points")


def check_af_equivalence(
    tbp: float = 50.0, K: int = 8, n_tau: int = 64, n_nu: int = 64, seed: int = 0, tol: float = 1e-5
) -> CheckResult:
    """Closed-form line double sum against direct quadrature of the sampled pulse."""
    T = 1.0
    params = WaveformParams(T, tbp / T, random_init(K, seed))
    lines = line_coefficients(params)
    wf = synthesize(params)
    taus = 2 * wf.dt * np.round(np.linspace(-T, T, n_tau) / (2 * wf.dt))
    nus = np.linspace(-10.0 / T, 10.0 / T, n_nu)
    closed = ambiguity_surface(lines, taus, nus).values
    numeric = ambiguity_numeric_surface(wf, taus, nus).values
    return CheckResult(
        "closed-form vs numeric AF", float(np.max(np.abs(closed - numeric))), tol, f"{n_tau}x{n_nu} grid, TBP={tbp:g}"
    )


def check_rms_routes(
    tbp: float = 200.0, K: int = 32, seed: int = 0, tol_kapteyn: float = 1e-8, tol_spectral: float = 5e-3
) -> list[CheckResult]:
    T = 1.0
    params = WaveformParams(T, tbp / T, random_init(K, seed))
    direct = rms_bandwidth_direct(params.coeffs, params.A)
    kapteyn = rms_bandwidth_kapteyn(params.coeffs, params.A, params.expansion)
    spectral = rms_bandwidth_spectral(synthesize(params))
    return [
        CheckResult("RMS bandwidth: Kapteyn vs direct", abs(kapteyn - direct) / direct, tol_kapteyn),
        CheckResult("RMS bandwidth: spectral vs direct", abs(spectral - direct) / direct, tol_spectral),
    ]


def run_identity_suite(seed: int = 0, K: int = 32, tbp: float = 200.0, z=None, corrupt: bool = False) -> list[CheckResult]:
    """All identity checks; ``z`` (if given) adds a Nielsen check at ``z[0]`` when ``K = 1``."""
    results = [check_nielsen()]
    if z is not None and len(z) == 1:
        results.append(check_nielsen((abs(float(z[0])),)))
    results += [
        check_kapteyn_identity(seed=seed, corrupt=corrupt),
        check_kepler_oracle(seed=seed),
        check_af_equivalence(seed=seed, n_tau=32, n_nu=32),
        *check_rms_routes(tbp=tbp, K=K, seed=seed),
    ]
    return results
