"""CSV/JSON writers for waveform data products.

Column layouts are listed in ``csv_schema.json`` next to this module.  Vector
files have a one-line header; matrix files put the column axis in the header
row and the row axis in the first column.
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .kapteyn import WaveformParams, modulation_function, phase_function
from .waveform import (
    AmbiguitySurface,
    AutocorrelationFunction,
    FourierLineCoefficients,
    SampledWaveform,
    Spectrogram,
    spectrum,
)

FMT = "%.17g"


def load_schema() -> dict:
    return json.loads(resources.files("mtffm").joinpath("csv_schema.json").read_text(encoding="utf-8"))


def _db(x: np.ndarray, floor: float = 1e-300) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(x, floor))


def write_columns(path: Path, header: list[str], columns: list[np.ndarray]) -> Path:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt=FMT)
    return path


def write_matrix(path: Path, corner: str, row_axis, col_axis, values) -> Path:
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([corner] + [FMT % v for v in col_axis])
        for r, row in zip(row_axis, values):
            w.writerow([FMT % r] + [FMT % v for v in row])
    return path


def read_matrix(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_matrix`: ``(row_axis, col_axis, values)``."""
    raw = np.loadtxt(path, delimiter=",", dtype=str, ndmin=2)
    col_axis = raw[0, 1:].astype(float)
    row_axis = raw[1:, 0].astype(float)
    return row_axis, col_axis, raw[1:, 1:].astype(float)


def read_columns(path: Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def write_waveform(out: Path, wf: SampledWaveform) -> Path:
    return write_columns(
        out / "waveform.csv", ["t_s", "real", "imag"], [wf.t, wf.samples.real, wf.samples.imag]
    )


def write_modulation(out: Path, params: WaveformParams, n: int = 4096) -> Path:
    t = -0.5 * params.T + params.T * np.arange(n + 1) / n
    return write_columns(
        out / "modulation.csv",
        ["t_s", "frequency_hz", "phase_rad"],
        [t, modulation_function(params, t), phase_function(params, t)],
    )


def write_kapteyn(out: Path, params: WaveformParams) -> Path:
    e = params.expansion
    return write_columns(out / "kapteyn.csv", ["m", "b_m", "gbf_m"], [e.orders, e.b, e.gbf_values])


def write_design_vector(out: Path, z_initial: np.ndarray, z_final: np.ndarray | None = None) -> Path:
    z_final = z_initial if z_final is None else z_final
    k = np.arange(1, len(z_initial) + 1)
    return write_columns(out / "z.csv", ["k", "z_initial", "z_optimized"], [k, z_initial, z_final])


def write_spectrum(out: Path, lines: FourierLineCoefficients, delta_f: float, n: int = 4001) -> Path:
    f = np.linspace(-delta_f, delta_f, n)
    S = spectrum(lines, f)
    power = np.abs(S) ** 2
    return write_columns(
        out / "spectrum.csv", ["f_hz", "magnitude", "power_db"], [f, np.abs(S), _db(power / power.max())]
    )


def acf_tau_axis(T: float, n: int) -> np.ndarray:
    return np.linspace(-T, T, n) if n > 1 else np.zeros(1)


def write_acf(out: Path, lines: FourierLineCoefficients, n: int = 2001) -> Path:
    tau = acf_tau_axis(lines.T, n)
    mag = np.abs(AutocorrelationFunction(lines)(tau))
    return write_columns(out / "acf.csv", ["tau_s", "magnitude", "power_db"], [tau, mag, _db(mag**2)])


def write_af_surface(path: Path, surface: AmbiguitySurface) -> Path:
    return write_matrix(path, "tau_s\\nu_hz", surface.tau_axis, surface.nu_axis, surface.magnitude)


def write_spectrogram(out: Path, sg: Spectrogram) -> Path:
    return write_matrix(out / "spectrogram.csv", "f_hz\\t_s", sg.freqs, sg.times, sg.power)


def write_trace(out: Path, trace) -> Path:
    recs = trace.iterations
    return write_columns(
        out / "trace.csv",
        ["eval_count", "isr_db", "constraint_violation", "objective"],
        [[r.eval_count for r in recs], [r.isr_db for r in recs], [r.constraint_violation for r in recs], [r.objective for r in recs]],
    )


def write_summary(out: Path, summary: dict) -> Path:
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
