"""Command-line pipeline: simulate, sample, reconstruct, analyze, scan.

Configuration is a flat ``key = value`` text file with units in the key names
(``omega1_ghz``, ``t1_ns``, ...); defaults reproduce the experiment scale
(2^14 shots per setting, 1000 bootstrap trials of 8000 resampled shots).
Every command validates its inputs before computing and writes outputs
atomically, so a failed run leaves no partial files.  Given the same
configuration and seed, outputs are byte-identical.

Exit codes: 0 success, 2 usage error, 3 input-data error, 4 projection did
not converge (outputs are still written).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

from . import analyze, protocol, qops, reconstruct
from .analyze import MetricsReport, bootstrap_ci, landscape_scan, markovian_reference
from .fileio import InputDataError, UsageError, atomic_write, sniff_magic
from .model import (ModelParams, ProcessMatrix, STATUS_RAW, STRONG_COUPLING_PARAMS,
                    model_process_matrix)
from .protocol import ReadoutErrorModel
from .qops import PROCESS_LABELS


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs, with experiment-scale defaults."""

    model: ModelParams = STRONG_COUPLING_PARAMS
    shots: int = 2 ** 14
    seed: int = 0
    noise: ReadoutErrorModel | None = None
    projection_tol: float = 1e-9
    projection_max_iter: int = 20000
    bootstrap_trials: int = 1000
    bootstrap_resample_shots: int = 8000
    scan_t1_ns: tuple[float, ...] = tuple(float(t) for t in range(85, 116))
    scan_t2_ns: tuple[float, ...] = tuple(float(t) for t in range(85, 116))
    out_dir: str = "."


def _parse_grid(text: str, key: str) -> tuple[float, ...]:
    """Grid syntax: 'start:stop:step' (inclusive) or comma-separated values."""
    text = text.strip()
    try:
        if ":" in text:
            start_s, stop_s, step_s = text.split(":")
            start, stop, step = float(start_s), float(stop_s), float(step_s)
            if step <= 0:
                raise ValueError
            n = int(round((stop - start) / step))
            grid = tuple(start + i * step for i in range(n + 1) if start + i * step <= stop + 1e-9)
        else:
            grid = tuple(float(tok) for tok in text.split(",") if tok.strip())
        if not grid:
            raise ValueError
        return grid
    except ValueError:
        raise UsageError(f"config field {key!r}: cannot parse grid {text!r} "
                         "(use start:stop:step or comma-separated values)") from None


_MODEL_KEYS = ("omega1_ghz", "omega2_ghz", "g12_mhz", "t1_ns", "t2_ns", "angular_factor")
_INT_KEYS = ("shots", "seed", "projection_max_iter", "bootstrap_trials",
             "bootstrap_resample_shots")
_FLOAT_KEYS = ("readout_p01", "readout_p10", "projection_tol")


def load_config(path: str | None, seed_override: int | None = None,
                out_override: str | None = None) -> RunConfig:
    """Build a RunConfig from an optional file plus command-line overrides."""
    config = RunConfig()
    if path is not None:
        try:
            with open(path, "r", encoding="ascii") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise InputDataError(f"{path}: cannot read config ({exc})") from exc
        model_kwargs: dict[str, float] = {}
        noise_kwargs: dict[str, float] = {}
        updates: dict[str, object] = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            try:
                if key in _MODEL_KEYS:
                    model_kwargs[key] = float(value)
                elif key in _INT_KEYS:
                    updates[key] = int(value)
                elif key in _FLOAT_KEYS:
                    if key.startswith("readout_"):
                        noise_kwargs[key.removeprefix("readout_")] = float(value)
                    else:
                        updates[key] = float(value)
                elif key in ("scan_t1_ns", "scan_t2_ns"):
                    updates[key] = _parse_grid(value, key)
                elif key == "out_dir":
                    updates[key] = value
                else:
                    raise UsageError(f"{path}: line {lineno}: unknown config field {key!r}")
            except ValueError:
                raise UsageError(f"{path}: line {lineno}: bad value for {key!r}: "
                                 f"{value!r}") from None
        if model_kwargs:
            base = config.model
            merged = {name: model_kwargs.get(name, getattr(base, name))
                      for name in _MODEL_KEYS}
            try:
                updates["model"] = ModelParams(**merged)
            except ValueError as exc:
                raise UsageError(f"{path}: invalid model parameters: {exc}") from None
        if noise_kwargs:
            try:
                updates["noise"] = ReadoutErrorModel(p01=noise_kwargs.get("p01", 0.0),
                                                     p10=noise_kwargs.get("p10", 0.0))
            except ValueError as exc:
                raise UsageError(f"{path}: invalid readout error model: {exc}") from None
        config = replace(config, **updates)
    if seed_override is not None:
        config = replace(config, seed=seed_override)
    if out_override is not None:
        config = replace(config, out_dir=out_override)
    return config


def _out_path(config: RunConfig, name: str) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


def _model_header(config: RunConfig, status: str) -> dict[str, str]:
    p = config.model
    return {"status": status,
            "provenance": p.describe(),
            "t1_ns": f"{p.t1_ns:.16e}",
            "t2_ns": f"{p.t2_ns:.16e}"}


def cmd_simulate(config: RunConfig) -> list[str]:
    """Write the exact model process matrix and its constraint report."""
    w = model_process_matrix(config.model)
    w_path = _out_path(config, "w_model.txt")
    qops.write_operator(w_path, w.op, _model_header(config, w.status))
    report = reconstruct.constraint_report(w.op)
    report_path = _out_path(config, "w_model_report.txt")
    result = reconstruct.ProjectionResult(w_phys=w, report=report, distance=0.0,
                                          iterations=0, converged=True)
    reconstruct.write_report(report_path, result)
    return [w_path, report_path]


def cmd_sample(config: RunConfig, exact: bool = False) -> list[str]:
    """Write a counts table sampled from the model (or its exact frequencies)."""
    w = model_process_matrix(config.model)
    if exact:
        table = protocol.exact_counts(w, noise=config.noise,
                                      provenance=config.model.describe())
    else:
        table = protocol.sample_counts(w, shots=config.shots, seed=config.seed,
                                       noise=config.noise,
                                       provenance=config.model.describe())
    table.extra["t1_ns"] = f"{config.model.t1_ns:.16e}"
    table.extra["t2_ns"] = f"{config.model.t2_ns:.16e}"
    path = _out_path(config, "counts.txt")
    protocol.write_counts(path, table)
    return [path]


def cmd_reconstruct(counts_path: str, config: RunConfig) -> tuple[list[str], bool]:
    """Invert a counts file and project the result onto the physical set.

    Returns the written paths and whether the projection converged.
    """
    table = protocol.read_counts(counts_path)
    w_exp = reconstruct.invert_counts(table)
    result = reconstruct.project_physical(w_exp, tol=config.projection_tol,
                                          max_iter=config.projection_max_iter)
    exp_path = _out_path(config, "w_exp.txt")
    phys_path = _out_path(config, "w_phys.txt")
    report_path = _out_path(config, "projection_report.txt")
    source = {"source": os.path.basename(counts_path)}
    for key in ("t1_ns", "t2_ns"):
        if key in table.extra:
            source[key] = table.extra[key]
    qops.write_operator(exp_path, w_exp.op, {"status": w_exp.status, **source})
    qops.write_operator(phys_path, result.w_phys.op,
                        {"status": result.w_phys.status, **source})
    reconstruct.write_report(report_path, result)
    return [exp_path, phys_path, report_path], result.converged


def _read_process_file(path: str) -> tuple[ProcessMatrix, dict[str, str]]:
    op, header = qops.read_operator(path)
    status = header.get("status", STATUS_RAW)
    if op.labels != PROCESS_LABELS:
        op = qops.reorder(op, PROCESS_LABELS)
    return ProcessMatrix(op, status), header


def _analyze_matrix(w: ProcessMatrix, header: dict[str, str],
                    provenance: str) -> MetricsReport:
    return MetricsReport(
        sqrt_jsd=analyze.sqrt_jsd(w, markovian_reference(w)),
        negativity=analyze.negativity(w),
        t1_ns=float(header["t1_ns"]) if "t1_ns" in header else None,
        t2_ns=float(header["t2_ns"]) if "t2_ns" in header else None,
        provenance=provenance,
    )


def cmd_analyze(input_path: str, config: RunConfig,
                bootstrap: bool = True) -> tuple[list[str], MetricsReport]:
    """Metrics (and, for counts input, bootstrap credible intervals)."""
    magic = sniff_magic(input_path)
    name = os.path.basename(input_path)
    if magic == qops.OPERATOR_MAGIC:
        if bootstrap:
            raise UsageError("bootstrap requires a counts file; pass --no-bootstrap "
                             "to analyze a process-matrix file")
        w, header = _read_process_file(input_path)
        report = _analyze_matrix(w, header, provenance=name)
    elif magic == protocol.COUNTS_MAGIC:
        table = protocol.read_counts(input_path)
        w_exp = reconstruct.invert_counts(table)
        result = reconstruct.project_physical(w_exp, tol=config.projection_tol,
                                              max_iter=config.projection_max_iter)
        report = _analyze_matrix(result.w_phys, table.extra, provenance=name)
        if bootstrap:
            kwargs = dict(trials=config.bootstrap_trials,
                          resample_shots=config.bootstrap_resample_shots,
                          seed=config.seed, tol=config.projection_tol,
                          max_iter=config.projection_max_iter)
            jsd_boot = bootstrap_ci(table, "sqrt_jsd", **kwargs)
            neg_boot = bootstrap_ci(table, "negativity", **kwargs)
            report = replace(report,
                             sqrt_jsd=jsd_boot.point, negativity=neg_boot.point,
                             sqrt_jsd_ci95=jsd_boot.ci95, negativity_ci95=neg_boot.ci95,
                             sqrt_jsd_bias=jsd_boot.bias, negativity_bias=neg_boot.bias)
    else:
        raise InputDataError(f"{input_path}: not a process-matrix or counts file "
                             f"(first line {magic!r})")
    metrics_path = _out_path(config, "metrics.txt")
    analyze.write_metrics(metrics_path, report)
    csv_path = _out_path(config, "metrics.csv")
    atomic_write(csv_path, "t1_ns,t2_ns,sqrt_jsd,negativity\n"
                 + analyze.metrics_csv_row(report) + "\n")
    return [metrics_path, csv_path], report


def cmd_scan(config: RunConfig) -> list[str]:
    """Exact-model metric grid over the configured evolution times."""
    reports = landscape_scan(config.model, config.scan_t1_ns, config.scan_t2_ns)
    path = _out_path(config, "scan.csv")
    atomic_write(path, analyze.scan_csv(reports))
    return [path]


# ----------------------------------------------------------------------
# argument parsing and dispatch
# ----------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multitime",
        description="Synthesize, sample, reconstruct and analyze three-time "
                    "quantum process matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="flat key = value config file")
        p.add_argument("--seed", type=int, metavar="N", help="override the config seed")
        p.add_argument("--out", metavar="DIR", help="output directory (default '.')")

    common(sub.add_parser("simulate", help="write the exact model process matrix"))
    p_sample = sub.add_parser("sample", help="write sampled (or exact) counts")
    common(p_sample)
    p_sample.add_argument("--exact", action="store_true",
                          help="write infinite-shot frequencies instead of samples")
    p_rec = sub.add_parser("reconstruct", help="invert counts and project to physical")
    common(p_rec)
    p_rec.add_argument("counts", metavar="COUNTS_FILE")
    p_ana = sub.add_parser("analyze", help="metrics and credible intervals")
    common(p_ana)
    p_ana.add_argument("input", metavar="FILE", help="counts file or process-matrix file")
    p_ana.add_argument("--no-bootstrap", action="store_true",
                       help="skip bootstrap credible intervals")
    common(sub.add_parser("scan", help="metric grid over evolution times"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config, seed_override=args.seed,
                             out_override=args.out)
        if args.command == "simulate":
            paths = cmd_simulate(config)
        elif args.command == "sample":
            paths = cmd_sample(config, exact=args.exact)
        elif args.command == "reconstruct":
            paths, converged = cmd_reconstruct(args.counts, config)
            for path in paths:
                print(path)
            if not converged:
                print("warning: projection did not converge within "
                      f"{config.projection_max_iter} iterations", file=sys.stderr)
                return 4
            return 0
        elif args.command == "analyze":
            paths, report = cmd_analyze(args.input, config,
                                        bootstrap=not args.no_bootstrap)
            print(report.summary())
        else:
            paths = cmd_scan(config)
        for path in paths:
            print(path)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except InputDataError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
