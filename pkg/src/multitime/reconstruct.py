"""Process-matrix reconstruction: linear inversion and physical projection.

A 16x16 process matrix W expands in the four-qubit Pauli basis as
``W = sum_c alpha_c sigma_c`` with 256 real coefficients
``alpha_c = Tr[W sigma_c] / 16``.  Each shot-tuple probability is linear in
the Pauli expectation values ``beta_c = Tr[W sigma_c] = 16 alpha_c``, so the
protocol defines a 1296x256 design matrix mapping expectation vectors to
probabilities.  Inversion solves the least-squares problem against observed
frequencies; in the exact-frequency limit it coincides with reading the
expectation values off the data.

The reconstructed matrix is generally not a valid process, so it is projected
(in Frobenius norm) onto the intersection of the positive cone with the
affine set of trace-4 sequential processes, using Dykstra's alternating
projections, which converge to the exact nearest point.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import qops
from .fileio import InputDataError, atomic_write, read_text_lines, split_header
from .model import ProcessMatrix, STATUS_PHYSICAL, STATUS_RAW
from .protocol import CountsTable, Setting, ShotTuple, enumerate_settings, reachable_tuples
from .qops import LabeledOperator, PROCESS_LABELS

REPORT_MAGIC = "# multitime projection-report v1"

_EYE16 = np.eye(16)
_cache: dict[str, object] = {}


def pauli_labels() -> tuple[tuple[int, int, int, int], ...]:
    """Index order of the 256 Pauli coefficients: (i, j, k, l), i slowest."""
    return tuple(product(range(4), repeat=4))


def _sigma_stack() -> np.ndarray:
    """All 256 four-qubit Pauli matrices, shape (256, 16, 16)."""
    if "sigma" not in _cache:
        stack = np.empty((256, 16, 16), dtype=complex)
        for n, (i, j, k, l) in enumerate(pauli_labels()):
            stack[n] = np.kron(np.kron(qops.PAULIS[i], qops.PAULIS[j]),
                               np.kron(qops.PAULIS[k], qops.PAULIS[l]))
        _cache["sigma"] = stack
    return _cache["sigma"]


def pauli_coefficients(op: LabeledOperator) -> np.ndarray:
    """Coefficients alpha with ``op = sum_c alpha_c sigma_c`` (256 reals).

    ``alpha[0]`` equals ``trace/16``, i.e. 1/4 for a normalized process.
    """
    if op.labels != PROCESS_LABELS:
        raise ValueError(f"expected labels {PROCESS_LABELS}, got {op.labels}")
    coeff = np.einsum("cij,ji->c", _sigma_stack(), op.mat) / 16
    if np.abs(coeff.imag).max() > 1e-10:
        raise ValueError("operator is not Hermitian: complex Pauli coefficients")
    return coeff.real


def operator_from_coefficients(alpha: np.ndarray) -> LabeledOperator:
    """Inverse of :func:`pauli_coefficients`."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (256,):
        raise ValueError(f"expected 256 coefficients, got shape {alpha.shape}")
    return LabeledOperator(PROCESS_LABELS, np.tensordot(alpha, _sigma_stack(), axes=1))


def design_rows() -> tuple[tuple[Setting, ShotTuple], ...]:
    """Canonical (setting, tuple) order of the 1296 probability slots."""
    if "rows" not in _cache:
        _cache["rows"] = tuple((s, t) for s in enumerate_settings()
                               for t in reachable_tuples(s))
    return _cache["rows"]


def _pauli_vector(m: np.ndarray) -> np.ndarray:
    return np.array([np.trace(p @ m) for p in qops.PAULIS])


def design_matrix() -> np.ndarray:
    """1296x256 map from Pauli expectation values to tuple probabilities.

    Row (setting, tuple) holds ``Tr[sigma_c . effect(tuple)] / 16`` for every
    c, so ``probabilities = design @ expectations``; the column of the
    identity component is constant 1/16.  Effects factor over the four
    subsystems, so each row is an outer product of four single-qubit trace
    vectors.  The map must have full column rank 256; anything less signals a
    broken effect table.
    """
    if "design" not in _cache:
        rows = np.empty((1296, 256))
        for r, (setting, shot) in enumerate(design_rows()):
            va = _pauli_vector(shot.prep_a.projector().T)
            vb = _pauli_vector(shot.result_b.projector())
            vc = _pauli_vector(shot.reprep_realized.projector().T)
            vd = _pauli_vector(shot.result_c.projector())
            row = np.kron(np.kron(va, vb), np.kron(vc, vd)) / 16
            if np.abs(row.imag).max() > 1e-12:
                raise RuntimeError("design row is not real; effect table is broken")
            rows[r] = row.real
        rank = np.linalg.matrix_rank(rows, tol=1e-10)
        if rank != 256:
            raise RuntimeError(f"design matrix rank is {rank}, expected 256; "
                               "the effect table is inconsistent")
        rows.setflags(write=False)
        _cache["design"] = rows
    return _cache["design"]


def frequency_vector(counts: CountsTable) -> np.ndarray:
    """Per-tuple frequencies in canonical row order; validates completeness."""
    missing = [s for s in enumerate_settings() if s not in counts.counts]
    if missing:
        names = ", ".join(f"({s.prep_a.label}, {s.meas_b.value}, {s.reprep_b.label}, "
                          f"{s.meas_c.value})" for s in missing[:5])
        raise InputDataError(f"counts table is missing {len(missing)} of 324 settings; "
                             f"first gaps: {names}")
    if counts.shots < 1:
        raise InputDataError("counts table must have shots >= 1")
    freqs = np.empty(1296)
    for r, (setting, shot) in enumerate(design_rows()):
        freqs[r] = counts.counts[setting].get(shot, 0) / counts.shots
    return freqs


def invert_counts(counts: CountsTable, variance_weighted: bool = False) -> ProcessMatrix:
    """Least-squares estimate of the process matrix from counted frequencies.

    With exact frequencies the estimate reproduces the true process; at
    finite shots it is the uniform-weight solution unless
    ``variance_weighted`` scales rows by inverse multinomial standard
    deviations.  The result is Hermitian by construction but typically not
    positive, hence status ``raw-reconstruction``.
    """
    freqs = frequency_vector(counts)
    design = design_matrix()
    if variance_weighted:
        p = np.clip(freqs, 0.5 / counts.shots, 1 - 0.5 / counts.shots)
        weights = 1.0 / np.sqrt(p * (1 - p) / counts.shots)
        design = design * weights[:, None]
        freqs = freqs * weights
    beta, *_ = np.linalg.lstsq(design, freqs, rcond=None)
    return ProcessMatrix(operator_from_coefficients(beta / 16), STATUS_RAW)


def expected_frequencies(w: ProcessMatrix | LabeledOperator) -> np.ndarray:
    """Forward map: the 1296 exact probabilities of a process matrix."""
    op = w.op if isinstance(w, ProcessMatrix) else w
    return design_matrix() @ (16 * pauli_coefficients(op))


# ----------------------------------------------------------------------
# the sequential-process subspace and the physical projection
# ----------------------------------------------------------------------

def _suffix_replace(stack: np.ndarray, k: int) -> np.ndarray:
    """Trace-and-replace over the last ``k`` factors, batched over axis 0."""
    if k == 0:
        return stack
    dk, dr = 2 ** k, 2 ** (4 - k)
    t = stack.reshape(-1, dr, dk, dr, dk)
    reduced = np.einsum("nabcb->nac", t)
    out = np.einsum("nac,bd->nabcd", reduced, np.eye(dk) / dk)
    return out.reshape(-1, 16, 16)


def _comb_project_stack(stack: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto the sequential-process subspace, batched."""
    return (stack
            - _suffix_replace(stack, 1) + _suffix_replace(stack, 2)
            - _suffix_replace(stack, 3) + _suffix_replace(stack, 4))


def comb_subspace_projection(op: LabeledOperator) -> LabeledOperator:
    """Project onto the linear subspace of valid sequential processes.

    The subspace is cut out by two conditions: after discarding the final
    input the preceding output must be maximally mixed, and after discarding
    everything but the first output that output must be maximally mixed.
    The projector is the alternating sum of nested trace-and-replace maps;
    it is idempotent, Hilbert-Schmidt self-adjoint, trace preserving, and
    fixes exactly the operators satisfying both conditions.
    """
    if op.labels != PROCESS_LABELS:
        op = qops.reorder(op, PROCESS_LABELS)
    return LabeledOperator(PROCESS_LABELS, _comb_project_stack(op.mat[None])[0])


@dataclass(frozen=True)
class CombConstraintReport:
    """How far an operator is from being a valid trace-4 sequential process.

    ``psd_violation`` is the most negative eigenvalue (0 when none is below
    the -1e-14 noise floor); the two constraint fields are Frobenius norms of
    the respective trace-and-replace mismatches; ``trace_error`` is
    ``|trace - 4|``.
    """

    psd_violation: float
    c1_violation: float
    c2_violation: float
    trace_error: float

    def max_violation(self) -> float:
        return max(-self.psd_violation, self.c1_violation, self.c2_violation,
                   self.trace_error)


def constraint_report(op: LabeledOperator | ProcessMatrix) -> CombConstraintReport:
    mat = op.mat
    m = mat[None]
    lam_min = float(np.linalg.eigvalsh(mat).min())
    c1 = float(np.linalg.norm(_suffix_replace(m, 1) - _suffix_replace(m, 2)))
    c2 = float(np.linalg.norm(_suffix_replace(m, 3) - _suffix_replace(m, 4)))
    return CombConstraintReport(
        psd_violation=lam_min if lam_min < -1e-14 else 0.0,
        c1_violation=c1,
        c2_violation=c2,
        trace_error=float(abs(np.trace(mat).real - 4.0)),
    )


def _psd_project_stack(stack: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(stack)
    vals = np.clip(vals, 0.0, None)
    return (vecs * vals[:, None, :]) @ vecs.conj().transpose(0, 2, 1)


def _affine_project_stack(stack: np.ndarray) -> np.ndarray:
    """Projection onto {valid sequential subspace} intersect {trace = 4}."""
    traces = np.trace(stack, axis1=1, axis2=2).real
    return _comb_project_stack(stack) + ((4.0 - traces) / 16.0)[:, None, None] * _EYE16


def dykstra_stack(stack: np.ndarray, tol: float = 1e-9, max_iter: int = 20000,
                  history: list | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dykstra alternating projections onto cone-intersect-affine, batched.

    Each cycle projects onto the positive cone (eigenvalue clipping) and then
    onto the affine set, with the standard correction terms; the iteration
    converges to the Frobenius-nearest point of the intersection.  Items
    whose successive-iterate change drops below ``tol`` are retired from the
    batch.  Returns (projected stack, per-item iteration counts, per-item
    convergence flags).  When ``history`` is a list (single-item batches
    only) a :class:`CombConstraintReport` of each cycle's iterate is
    appended.
    """
    x = np.array(stack, dtype=complex)
    n = x.shape[0]
    if history is not None and n != 1:
        raise ValueError("history recording supports single-item batches only")
    x = (x + x.conj().transpose(0, 2, 1)) / 2
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    iterations = np.full(n, max_iter, dtype=int)
    converged = np.zeros(n, dtype=bool)
    active = np.arange(n)
    for it in range(1, max_iter + 1):
        xa, pa, qa = x[active], p[active], q[active]
        y = _psd_project_stack(xa + pa)
        p[active] = xa + pa - y
        xn = _affine_project_stack(y + qa)
        q[active] = y + qa - xn
        delta = np.sqrt((np.abs(xn - xa) ** 2).sum(axis=(1, 2)))
        x[active] = xn
        if history is not None:
            history.append(constraint_report(LabeledOperator(PROCESS_LABELS, x[0])))
        fresh = delta < tol
        iterations[active[fresh]] = it
        converged[active[fresh]] = True
        active = active[~fresh]
        if active.size == 0:
            break
    return x, iterations, converged


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of projecting a raw reconstruction onto the physical set."""

    w_phys: ProcessMatrix
    report: CombConstraintReport
    distance: float
    iterations: int
    converged: bool
    history: tuple[CombConstraintReport, ...] | None = None


def project_physical(w_exp: ProcessMatrix | LabeledOperator, tol: float = 1e-9,
                     max_iter: int = 20000, record_history: bool = False) -> ProjectionResult:
    """Frobenius-nearest valid process matrix to ``w_exp``.

    Stops when the successive-iterate change falls below ``tol`` or after
    ``max_iter`` cycles, whichever comes first; ``converged`` reports which.
    A non-converged result still carries the final iterate and its
    constraint report.
    """
    op = w_exp.op if isinstance(w_exp, ProcessMatrix) else w_exp
    if op.labels != PROCESS_LABELS:
        op = qops.reorder(op, PROCESS_LABELS)
    history: list | None = [] if record_history else None
    out, iters, conv = dykstra_stack(op.mat[None], tol=tol, max_iter=max_iter,
                                     history=history)
    mat = (out[0] + out[0].conj().T) / 2
    w_phys = ProcessMatrix(LabeledOperator(PROCESS_LABELS, mat), STATUS_PHYSICAL)
    return ProjectionResult(
        w_phys=w_phys,
        report=constraint_report(w_phys.op),
        distance=float(np.linalg.norm(mat - op.mat)),
        iterations=int(iters[0]),
        converged=bool(conv[0]),
        history=tuple(history) if history is not None else None,
    )


# ----------------------------------------------------------------------
# projection report file
# ----------------------------------------------------------------------

def report_text(result: ProjectionResult) -> str:
    r = result.report
    lines = [
        REPORT_MAGIC,
        f"converged: {'true' if result.converged else 'false'}",
        f"iterations: {result.iterations}",
        f"distance: {result.distance:.16e}",
        f"psd_violation: {r.psd_violation:.16e}",
        f"c1_violation: {r.c1_violation:.16e}",
        f"c2_violation: {r.c2_violation:.16e}",
        f"trace_error: {r.trace_error:.16e}",
    ]
    return "\n".join(lines) + "\n"


def write_report(path: str, result: ProjectionResult) -> None:
    atomic_write(path, report_text(result))


def read_report(path: str) -> dict[str, str]:
    header, _ = split_header(read_text_lines(path), path, REPORT_MAGIC)
    return header
