"""Command-line front end.

    mtffm design CONFIG
    mtffm verify [CONFIG] [--inject-fault]
    mtffm af-surface CONFIG --tau-points N --nu-points M --nu-max HZ
    mtffm export-waveform CONFIG

Exit codes: 0 success, 1 identity check failed (verify), 2 bad config or
arguments, 3 numerical failure.  ``MTFFM_OUTPUT_DIR`` overrides the config's
``output_dir``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import export
from .config import ConfigError, DesignConfig, load_config
from .errors import ConvergenceDomainError, MTFFMError
from .kapteyn import DesignCoefficients, WaveformParams
from .metrics import rms_bandwidth_direct, rms_bandwidth_kapteyn, rms_bandwidth_spectral, waveform_isr
from .optimizer import OptimizerConfig, optimize, random_init
from .waveform import ambiguity_surface, line_coefficients, spectrogram, synthesize

log = logging.getLogger("mtffm")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def initial_coefficients(cfg: DesignConfig) -> DesignCoefficients:
    if cfg.z is not None:
        return DesignCoefficients(np.array(cfg.z))
    return random_init(cfg.K, cfg.seed, cfg.margin)


def _output_dir(cfg: DesignConfig) -> Path:
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spectrogram_window(n: int) -> tuple[int, int]:
    win = int(min(n, max(16, 2 ** round(np.log2(np.sqrt(8 * n))))))
    return win, max(1, win // 4)


def _write_products(out: Path, cfg: DesignConfig, params: WaveformParams) -> dict:
    """Waveform-level exports shared by ``design`` and ``export-waveform``."""
    lines = line_coefficients(params)
    wf = synthesize(params, cfg.resolved_sample_rate)
    export.write_waveform(out, wf)
    export.write_modulation(out, params)
    export.write_kapteyn(out, params)
    export.write_spectrum(out, lines, params.delta_f)
    export.write_acf(out, lines)
    export.write_spectrogram(out, spectrogram(wf, *_spectrogram_window(wf.n)))
    taus = export.acf_tau_axis(params.T, 257)
    nus = np.linspace(-10.0 / params.T, 10.0 / params.T, 65)
    export.write_af_surface(out / "af_surface.csv", ambiguity_surface(lines, taus, nus))
    res = waveform_isr(lines)
    return {
        "A_hz": params.A,
        "tau_m_s": res.tau_m,
        "isr_db": res.isr_db,
        "beta2_direct": rms_bandwidth_direct(params.coeffs, params.A),
        "beta2_kapteyn": rms_bandwidth_kapteyn(params.coeffs, params.A, params.expansion),
        "beta2_spectral": rms_bandwidth_spectral(wf),
        "weighted_sum": params.coeffs.weighted_sum,
        "L": lines.L,
        "M": params.expansion.M,
    }


def cmd_design(args) -> int:
    cfg = load_config(args.config)
    out = _output_dir(cfg)
    init = initial_coefficients(cfg)
    params = WaveformParams(cfg.T, cfg.delta_f, init)
    opt = OptimizerConfig(
        delta=cfg.delta,
        max_evals=cfg.max_evals,
        seed=cfg.seed,
        penalty_weight=cfg.penalty_weight,
        step_init=cfg.step_init,
    )
    trace = optimize(init, params, opt, callback=lambda r: log.info("eval %d: ISR %.3f dB", r.eval_count, r.isr_db))
    best = params.with_coeffs(trace.best_z)
    export.write_design_vector(out, init.z, trace.best_z.z)
    export.write_trace(out, trace)
    products = _write_products(out, cfg, best)
    summary = {
        "command": "design",
        "config": cfg.to_dict(),
        "initial_isr_db": trace.initial_isr_db,
        "final_isr_db": products.pop("isr_db"),
        "improvement_db": trace.improvement_db,
        "beta2_target": trace.beta2_target,
        "evals": trace.evals,
        **products,
    }
    export.write_summary(out, summary)
    print(
        f"ISR {summary['initial_isr_db']:.2f} dB -> {summary['final_isr_db']:.2f} dB "
        f"({summary['improvement_db']:.2f} dB improvement, {trace.evals} evals); outputs in {out}"
    )
    return EXIT_OK


def cmd_export_waveform(args) -> int:
    cfg = load_config(args.config)
    out = _output_dir(cfg)
    init = initial_coefficients(cfg)
    params = WaveformParams(cfg.T, cfg.delta_f, init)
    export.write_design_vector(out, init.z)
    products = _write_products(out, cfg, params)
    isr_db = products.pop("isr_db")
    summary = {
        "command": "export-waveform",
        "config": cfg.to_dict(),
        "initial_isr_db": isr_db,
        "final_isr_db": isr_db,
        "improvement_db": 0.0,
        "beta2_target": products["beta2_direct"],
        "evals": 0,
        **products,
    }
    export.write_summary(out, summary)
    print(f"ISR {isr_db:.2f} dB; outputs in {out}")
    return EXIT_OK


def _coefficients_for_surface(cfg: DesignConfig, design_dir: str | None) -> DesignCoefficients:
    if design_dir is None:
        return initial_coefficients(cfg)
    cols = export.read_columns(Path(design_dir) / "z.csv")
    return DesignCoefficients(cols["z_optimized"])


def cmd_af_surface(args) -> int:
    cfg = load_config(args.config)
    if args.tau_points < 1 or args.nu_points < 1 or args.nu_max < 0:
        raise ConfigError("grid sizes must be >= 1 and --nu-max >= 0")
    params = WaveformParams(cfg.T, cfg.delta_f, _coefficients_for_surface(cfg, args.from_design))
    lines = line_coefficients(params)
    taus = export.acf_tau_axis(params.T, args.tau_points)
    nus = np.linspace(-args.nu_max, args.nu_max, args.nu_points) if args.nu_points > 1 else np.zeros(1)
    path = Path(args.out) if args.out else _output_dir(cfg) / "af_surface.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    export.write_af_surface(path, ambiguity_surface(lines, taus, nus))
    print(f"wrote {args.tau_points}x{args.nu_points} |chi| grid to {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .identities import run_identity_suite

    cfg = load_config(args.config) if args.config else DesignConfig()
    results = run_identity_suite(seed=cfg.seed, K=cfg.K, tbp=cfg.tbp, z=cfg.z, corrupt=args.inject_fault)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all identities hold" if ok else "identity check FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtffm", description="Multi-tone feedback FM waveform design")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="optimise ISR and export all data products")
    p.add_argument("config")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("verify", help="run the identity suite")
    p.add_argument("config", nargs="?")
    p.add_argument("--inject-fault", action="store_true", help="corrupt one GBF value (harness self-test)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("af-surface", help="export |chi(tau, nu)| on a grid")
    p.add_argument("config")
    p.add_argument("--tau-points", type=int, default=257)
    p.add_argument("--nu-points", type=int, default=65)
    p.add_argument("--nu-max", type=float, default=None, help="Hz (default 10/T)")
    p.add_argument("--from-design", metavar="DIR", help="use z_optimized from a design run's z.csv")
    p.add_argument("--out", help="output CSV path (default OUTPUT_DIR/af_surface.csv)")
    p.set_defaults(func=cmd_af_surface)

    p = sub.add_parser("export-waveform", help="export the configured waveform without optimising")
    p.add_argument("config")
    p.set_defaults(func=cmd_export_waveform)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    if getattr(args, "nu_max", 0) is None:
        try:
            args.nu_max = 10.0 / load_config(args.config).T
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, ConvergenceDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MTFFMError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
