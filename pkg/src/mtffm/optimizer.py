"""Constrained ISR minimisation over the design coefficients.

Problem::

    minimise    ISR(z)
    subject to  sum_k k|z_k| <= 1
                (1 - delta) beta2_0 <= beta2(z) <= (1 + delta) beta2_0

``beta2_0`` is the squared RMS bandwidth of the initial waveform.  The first
constraint is enforced exactly by radial projection, the band by a quadratic
penalty plus a feasibility-first acceptance rule.  The solver is an
opportunistic compass search: the mainlobe-null split point of the ISR moves
discontinuously with ``z``, so gradients are not reliable.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MTFFMError, PreconditionError
from .kapteyn import CONSTRAINT_SLACK, DesignCoefficients, WaveformParams
from .metrics import IsrResult, rms_bandwidth_direct, waveform_isr
from .special_functions import weighted_sum
from .waveform import line_coefficients

__all__ = [
    "OptimizerConfig",
    "TraceRecord",
    "OptimizationTrace",
    "Evaluation",
    "random_init",
    "project_convergence",
    "band_violation",
    "evaluate",
    "objective",
    "optimize",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    delta: float = 0.1
    max_evals: int = 4000
    seed: int = 0
    penalty_weight: float = 100.0
    step_init: float = 0.5
    step_min: float = 1e-6

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise PreconditionError(f"delta must lie in (0, 1), got {self.delta}")
        if self.max_evals <= 0:
            raise PreconditionError("max_evals must be positive")
        if self.penalty_weight < 0 or self.step_init <= 0 or self.step_min <= 0:
            raise PreconditionError("penalty_weight, step_init and step_min must be positive")


@dataclass(frozen=True)
class TraceRecord:
    eval_count: int
    isr_db: float
    constraint_violation: float
    objective: float


@dataclass
class OptimizationTrace:
    iterations: list[TraceRecord]
    best_z: DesignCoefficients
    initial_isr_db: float
    final_isr_db: float
    beta2_target: float
    final_beta2: float
    evals: int
    iterates: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def improvement_db(self) -> float:
        return self.initial_isr_db - self.final_isr_db


@dataclass(frozen=True)
class Evaluation:
    """Everything computed for one candidate ``z``."""

    z: np.ndarray
    params: WaveformParams | None
    isr: IsrResult | None
    beta2: float
    violation: float
    objective: float

    @property
    def isr_db(self) -> float:
        return self.isr.isr_db if self.isr is not None else math.inf


def random_init(K: int, seed: int, margin: float = 0.95) -> DesignCoefficients:
    """I.i.d. standard normal ``z`` rescaled so ``sum_k k|z_k| = margin``.

    Uses numpy's PCG64 generator (``default_rng``), whose stream is stable
    across platforms for a fixed seed.
    """
    if K < 1:
        raise PreconditionError(f"K must be >= 1, got {K}")
    if not 0 < margin <= 1:
        raise PreconditionError(f"margin must lie in (0, 1], got {margin}")
    z = np.random.default_rng(seed).standard_normal(K)
    return DesignCoefficients(z * (margin / weighted_sum(z)))


def project_convergence(z) -> np.ndarray:
    """Scale ``z`` radially onto ``sum_k k|z_k| <= 1``."""
    z = np.asarray(z.z if isinstance(z, DesignCoefficients) else z, dtype=float)
    w = weighted_sum(z)
    if w <= 1.0:
        return z.copy()
    out = z / w
    # guard the rounding of the division
    while weighted_sum(out) > 1.0:
        out = out * (1.0 - 1e-16)
    return out


def band_violation(beta2: float, beta2_target: float, delta: float) -> float:
    """Relative distance of ``beta2 / beta2_target`` outside ``[1 - delta, 1 + delta]``."""
    r = beta2 / beta2_target
    return max(0.0, r - (1.0 + delta), (1.0 - delta) - r)


def _better(cand: Evaluation, best: Evaluation) -> bool:
    # feasibility first: the quadratic penalty alone tolerates small band violations
    if (cand.violation > 0) != (best.violation > 0):
        return cand.violation == 0
    return cand.objective < best.objective


def _target(params: WaveformParams) -> float:
    return rms_bandwidth_direct(params.coeffs, params.A)


def evaluate(z, params: WaveformParams, config: OptimizerConfig, beta2_target: float | None = None) -> Evaluation:
    """Synthesize ``z`` at the physical settings of ``params`` and score it.

    ``beta2_target`` defaults to the squared RMS bandwidth of ``params`` itself.
    Candidates whose ISR is undefined score ``inf``.
    """
    if beta2_target is None:
        beta2_target = _target(params)
    z = np.asarray(z.z if isinstance(z, DesignCoefficients) else z, dtype=float)
    cand = params.with_coeffs(DesignCoefficients(z))
    beta2 = rms_bandwidth_direct(cand.coeffs, cand.A)
    v = band_violation(beta2, beta2_target, config.delta) if beta2_target > 0 else 0.0
    try:
        res = waveform_isr(line_coefficients(cand))
    except MTFFMError as exc:
        log.debug("ISR undefined for candidate: %s", exc)
        return Evaluation(z, cand, None, beta2, v, math.inf)
    return Evaluation(z, cand, res, beta2, v, res.ratio + config.penalty_weight * v * v)


def objective(z, params: WaveformParams, config: OptimizerConfig, beta2_target: float | None = None) -> float:
    """Linear-scale ISR plus ``penalty_weight * violation^2`` for the bandwidth band."""
    return evaluate(z, params, config, beta2_target).objective


def optimize(
    init: DesignCoefficients,
    params: WaveformParams,
    config: OptimizerConfig = OptimizerConfig(),
    callback=None,
) -> OptimizationTrace:
    """Compass search on ``y_k = k z_k`` with projection onto the convergence set.

    Coordinate ``k`` moves by ``step * s / k`` where ``s`` is the mean of
    ``|k z_k|`` at the start; ``step`` starts at ``config.step_init`` and is
    halved after a sweep without improvement.  The bandwidth band is anchored
    at ``init``.  Returns the best iterate found within ``config.max_evals``
    objective evaluations.
    """
    init_z = init.z if isinstance(init, DesignCoefficients) else np.asarray(init, dtype=float)
    x = project_convergence(init_z)
    if not np.all(np.isfinite(x)) or weighted_sum(x) > 1.0 + CONSTRAINT_SLACK:
        raise PreconditionError("initial coefficients are infeasible after projection")
    base = params.with_coeffs(DesignCoefficients(x))
    beta2_target = _target(base)
    if beta2_target <= 0:
        raise PreconditionError("initial waveform has zero RMS bandwidth; the band is empty")

    k = np.arange(1, x.size + 1)
    scale = float(np.mean(np.abs(k * x))) / k
    if not np.any(scale > 0):
        scale = np.full(x.size, 1.0 / x.size) / k
    rng = np.random.default_rng(config.seed)

    best = evaluate(x, base, config, beta2_target)
    evals = 1
    initial_isr_db = best.isr_db
    records = [TraceRecord(evals, best.isr_db, best.violation, best.objective)]
    iterates = [best.z.copy()]
    step = config.step_init
    while evals < config.max_evals and step >= config.step_min:
        improved = False
        for j in rng.permutation(x.size):
            for sign in (1.0, -1.0):
                if evals >= config.max_evals:
                    break
                trial = best.z.copy()
                trial[j] += sign * step * scale[j]
                trial = project_convergence(trial)
                cand = evaluate(trial, base, config, beta2_target)
                evals += 1
                iterates.append(cand.z.copy())
                if _better(cand, best):
                    best = cand
                    improved = True
                    records.append(TraceRecord(evals, best.isr_db, best.violation, best.objective))
                    if callback is not None:
                        callback(records[-1])
                    break
        if not improved:
            step *= 0.5
            log.debug("step -> %g after %d evals (ISR %.3f dB)", step, evals, best.isr_db)

    return OptimizationTrace(
        iterations=records,
        best_z=DesignCoefficients(best.z),
        initial_isr_db=initial_isr_db,
        final_isr_db=best.isr_db,
        beta2_target=beta2_target,
        final_beta2=best.beta2,
        evals=evals,
        iterates=iterates,
    )
