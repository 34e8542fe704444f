"""Non-Markovianity metrics, bootstrap uncertainties, and parameter scans.

The Markovian reference of a process is the tensor product of its two
single-segment channel marginals; any gap between a process and its reference
is temporal correlation.  The gap is quantified by the square-root
Jensen-Shannon divergence (natural log, so bounded by sqrt(ln 2)) between the
trace-normalized operators, and the quantum share of the correlation by the
negativity across the bipartition separating the first segment's factors
``(A_O, B_I)`` from the second's ``(B_O, C_I)``.

Bootstrap credible intervals follow the resampling scheme used for the
hardware data: per setting, redraw shots from a multinomial with the observed
relative frequencies, push every replica through the full
inversion-plus-projection pipeline, and report twice the standard deviation
of the metric over replicas.  The replica mean generally differs from the
point estimate; that bias is reported, not corrected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import reconstruct
from .fileio import InputDataError, atomic_write, read_text_lines, split_header
from .model import ModelParams, ProcessMatrix, model_process_matrix
from .protocol import CountsTable, enumerate_settings, reachable_tuples
from .qops import LabeledOperator, PROCESS_LABELS

METRICS_MAGIC = "# multitime metrics v1"

SQRT_LN2 = math.sqrt(math.log(2.0))
_EIG_FLOOR = 1e-12

METRIC_NAMES = ("sqrt_jsd", "negativity")


@dataclass(frozen=True)
class MetricsReport:
    """Point metrics of one process, with optional 95% credible intervals."""

    sqrt_jsd: float
    negativity: float
    sqrt_jsd_ci95: float | None = None
    negativity_ci95: float | None = None
    sqrt_jsd_bias: float | None = None
    negativity_bias: float | None = None
    t1_ns: float | None = None
    t2_ns: float | None = None
    provenance: str = ""

    def __post_init__(self):
        if not -1e-9 <= self.sqrt_jsd <= SQRT_LN2 + 1e-9:
            raise ValueError(f"sqrt_jsd {self.sqrt_jsd} outside [0, sqrt(ln 2)]")
        if not -1e-9 <= self.negativity <= 1.5 + 1e-9:
            raise ValueError(f"negativity {self.negativity} outside [0, 1.5]")

    def summary(self) -> str:
        """Human-readable one-liner, rounded to 3 significant digits."""
        def fmt(value, ci):
            s = f"{value:.3g}"
            return f"{s} +/- {ci:.3g}" if ci is not None else s
        parts = [f"sqrt_jsd = {fmt(self.sqrt_jsd, self.sqrt_jsd_ci95)}",
                 f"negativity = {fmt(self.negativity, self.negativity_ci95)}"]
        if self.t1_ns is not None and self.t2_ns is not None:
            parts.insert(0, f"(t1, t2) = ({self.t1_ns:.4g}, {self.t2_ns:.4g}) ns")
        return "  ".join(parts)


# ----------------------------------------------------------------------
# metrics (scalar API plus batched kernels shared with the bootstrap)
# ----------------------------------------------------------------------

def _markov_stack(stack: np.ndarray) -> np.ndarray:
    m5 = stack.reshape(-1, 4, 4, 4, 4)
    seg1 = np.einsum("nagbg->nab", m5) / 2.0
    seg2 = np.einsum("ngagb->nab", m5) / 2.0
    return np.einsum("nab,ncd->nacbd", seg1, seg2).reshape(-1, 16, 16)


def _entropy_stack(stack: np.ndarray) -> np.ndarray:
    vals = np.linalg.eigvalsh(stack)
    vals = np.where(vals > _EIG_FLOOR, vals, 1.0)  # -x log x -> 0 below the floor
    return -(vals * np.log(vals)).sum(axis=-1)


def _sqrt_jsd_stack(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ra = a / np.trace(a, axis1=1, axis2=2).real[:, None, None]
    rb = b / np.trace(b, axis1=1, axis2=2).real[:, None, None]
    jsd = _entropy_stack((ra + rb) / 2) - (_entropy_stack(ra) + _entropy_stack(rb)) / 2
    return np.sqrt(np.clip(jsd, 0.0, None))


def _negativity_stack(stack: np.ndarray) -> np.ndarray:
    rho = stack / 4.0
    m5 = rho.reshape(-1, 4, 4, 4, 4)
    pt = m5.transpose(0, 3, 2, 1, 4).reshape(-1, 16, 16)
    vals = np.linalg.eigvalsh(pt)
    return 0.0 - np.where(vals < -_EIG_FLOOR, vals, 0.0).sum(axis=-1)


def markovian_reference(w: ProcessMatrix) -> ProcessMatrix:
    """Closest temporally-uncorrelated process: the product of channel marginals.

    Each marginal is divided by the dimension of the traced-out output factor
    so the product again has trace 4; a valid process maps to a valid
    process, and the map is idempotent.
    """
    trace = float(np.trace(w.mat).real)
    if abs(trace - 4.0) > 1e-6:
        raise ValueError(f"process matrix trace is {trace}, expected 4")
    return ProcessMatrix(LabeledOperator(PROCESS_LABELS, _markov_stack(w.mat[None])[0]),
                         w.status)


def _check_metric_input(w: ProcessMatrix, name: str) -> None:
    trace = float(np.trace(w.mat).real)
    if abs(trace - 4.0) > 1e-6:
        raise ValueError(f"{name}: trace is {trace}, expected 4")


def sqrt_jsd(w1: ProcessMatrix, w2: ProcessMatrix) -> float:
    """Square-root Jensen-Shannon divergence between two processes.

    Both operators are normalized to unit trace before the entropies are
    taken (natural log, eigenvalues below 1e-12 dropped), which keeps the
    divergence in [0, ln 2].  Symmetric in its arguments.
    """
    for w, name in ((w1, "sqrt_jsd first argument"), (w2, "sqrt_jsd second argument")):
        _check_metric_input(w, name)
        lam_min = float(np.linalg.eigvalsh(w.mat).min())
        if lam_min < -1e-6:
            raise InputDataError(f"{name}: negative eigenvalue {lam_min:.2e}")
    value = float(_sqrt_jsd_stack(w1.mat[None], w2.mat[None])[0])
    assert value <= SQRT_LN2 + 1e-9, f"divergence bound exceeded: {value}"
    return value


def negativity(w: ProcessMatrix) -> float:
    """Entanglement across the two-segment bipartition of the process state.

    Normalizes to ``w / 4``, partially transposes the first-segment pair
    ``(A_O, B_I)`` and sums the magnitudes of the negative eigenvalues.
    Transposing the other pair instead gives the same value.
    """
    _check_metric_input(w, "negativity")
    return float(_negativity_stack(w.mat[None])[0])


# ----------------------------------------------------------------------
# bootstrap
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapResult:
    """Point estimate, 95% credible interval, and resampling diagnostics."""

    point: float
    ci95: float
    bias: float
    trials: int
    failed: int
    values: np.ndarray


def _metric_stack(stack: np.ndarray, metric: str) -> np.ndarray:
    if metric == "sqrt_jsd":
        return _sqrt_jsd_stack(stack, _markov_stack(stack))
    if metric == "negativity":
        return _negativity_stack(stack)
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRIC_NAMES}")


def _pipeline_metric(counts: CountsTable, metric: str, tol: float,
                     max_iter: int) -> float:
    raw = reconstruct.invert_counts(counts)
    result = reconstruct.project_physical(raw, tol=tol, max_iter=max_iter)
    if metric == "sqrt_jsd":
        return sqrt_jsd(result.w_phys, markovian_reference(result.w_phys))
    return negativity(result.w_phys)


def resample_frequencies(rng: np.random.Generator, freqs: np.ndarray,
                         shots: int, trials: int) -> np.ndarray:
    """Multinomial re-draws of a frequency vector: shape (trials, len(freqs))."""
    return rng.multinomial(shots, freqs, size=trials) / shots


def bootstrap_ci(counts: CountsTable, metric: str, trials: int = 1000,
                 resample_shots: int = 8000, seed: int = 0,
                 tol: float = 1e-9, max_iter: int = 20000) -> BootstrapResult:
    """Bootstrap credible interval for a reconstruction metric.

    Every trial resamples each setting's outcome distribution at
    ``resample_shots`` shots and reruns the full inversion and projection
    before evaluating the metric, so the nonlinearity of the projection is
    propagated into the spread.  ``ci95`` is twice the standard deviation of
    the trial values; ``bias`` is the trial mean minus the point estimate.
    Trials whose projection fails to converge are skipped and counted; more
    than 5% failures raises.
    """
    if metric not in METRIC_NAMES:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRIC_NAMES}")
    if trials < 2:
        raise ValueError("bootstrap needs at least 2 trials")
    settings = enumerate_settings()
    freqs = np.array([[counts.frequencies(s)[t] for t in reachable_tuples(s)]
                      for s in settings])
    freqs = np.clip(freqs, 0.0, None)
    freqs /= freqs.sum(axis=1, keepdims=True)

    rng = np.random.default_rng(seed)
    trial_freqs = np.stack(
        [resample_frequencies(rng, f, resample_shots, trials) for f in freqs], axis=1,
    ).reshape(trials, -1)  # (trials, 1296)

    design = reconstruct.design_matrix()
    betas, *_ = np.linalg.lstsq(design, trial_freqs.T, rcond=None)  # (256, trials)
    stack = np.tensordot(betas.T / 16, reconstruct._sigma_stack(), axes=1)
    projected, _, converged = reconstruct.dykstra_stack(stack, tol=tol, max_iter=max_iter)

    values = _metric_stack(projected, metric)
    ok = converged & np.isfinite(values)
    failed = int(trials - ok.sum())
    if failed > 0.05 * trials:
        raise RuntimeError(f"bootstrap: {failed}/{trials} trials failed")
    values = values[ok]

    point = _pipeline_metric(counts, metric, tol, max_iter)
    std = float(values.std(ddof=1))
    return BootstrapResult(point=point, ci95=2 * std,
                           bias=float(values.mean() - point),
                           trials=trials, failed=failed, values=values)


# ----------------------------------------------------------------------
# parameter landscape
# ----------------------------------------------------------------------

def landscape_scan(params_base: ModelParams, t1_grid, t2_grid) -> list[MetricsReport]:
    """Exact model metrics over a grid of free-evolution times.

    One report per (t1, t2) pair, row-major over ``t1_grid`` then
    ``t2_grid``; no sampling, no credible intervals.  Grid points are
    independent, so the loop is safe to parallelize.
    """
    t1_grid = [float(t) for t in t1_grid]
    t2_grid = [float(t) for t in t2_grid]
    if not t1_grid or not t2_grid:
        raise ValueError("scan grids must be non-empty")
    reports = []
    for t1 in t1_grid:
        for t2 in t2_grid:
            params = params_base.at_times(t1, t2)
            w = model_process_matrix(params)
            reports.append(MetricsReport(
                sqrt_jsd=sqrt_jsd(w, markovian_reference(w)),
                negativity=negativity(w),
                t1_ns=t1, t2_ns=t2,
                provenance=params.describe(),
            ))
    return reports


def scan_csv(reports: list[MetricsReport]) -> str:
    """CSV grid with an argmax summary footer."""
    lines = ["t1_ns,t2_ns,sqrt_jsd,negativity"]
    for r in reports:
        lines.append(f"{r.t1_ns:.16e},{r.t2_ns:.16e},{r.sqrt_jsd:.16e},{r.negativity:.16e}")
    best_j = max(reports, key=lambda r: r.sqrt_jsd)
    best_n = max(reports, key=lambda r: r.negativity)
    lines.append(f"# argmax sqrt_jsd: t1_ns={best_j.t1_ns:.16e} t2_ns={best_j.t2_ns:.16e} "
                 f"value={best_j.sqrt_jsd:.16e}")
    lines.append(f"# argmax negativity: t1_ns={best_n.t1_ns:.16e} t2_ns={best_n.t2_ns:.16e} "
                 f"value={best_n.negativity:.16e}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# metrics report file
# ----------------------------------------------------------------------

_OPTIONAL_FIELDS = ("sqrt_jsd_ci95", "negativity_ci95", "sqrt_jsd_bias",
                    "negativity_bias", "t1_ns", "t2_ns")


def metrics_text(report: MetricsReport) -> str:
    lines = [METRICS_MAGIC,
             f"sqrt_jsd: {report.sqrt_jsd:.16e}",
             f"negativity: {report.negativity:.16e}"]
    for name in _OPTIONAL_FIELDS:
        value = getattr(report, name)
        if value is not None:
            lines.append(f"{name}: {value:.16e}")
    if report.provenance:
        lines.append(f"provenance: {report.provenance}")
    return "\n".join(lines) + "\n"


def write_metrics(path: str, report: MetricsReport) -> None:
    atomic_write(path, metrics_text(report))


def read_metrics(path: str) -> MetricsReport:
    header, _ = split_header(read_text_lines(path), path, METRICS_MAGIC)
    try:
        kwargs = {"sqrt_jsd": float(header.pop("sqrt_jsd")),
                  "negativity": float(header.pop("negativity"))}
    except KeyError as exc:
        raise InputDataError(f"{path}: missing metric field {exc}") from None
    for name in _OPTIONAL_FIELDS:
        if name in header:
            kwargs[name] = float(header.pop(name))
    kwargs["provenance"] = header.pop("provenance", "")
    return MetricsReport(**kwargs)


def metrics_csv_row(report: MetricsReport) -> str:
    t1 = f"{report.t1_ns:.16e}" if report.t1_ns is not None else ""
    t2 = f"{report.t2_ns:.16e}" if report.t2_ns is not None else ""
    return f"{t1},{t2},{report.sqrt_jsd:.16e},{report.negativity:.16e}"
