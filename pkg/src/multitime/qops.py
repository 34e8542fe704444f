"""Operator algebra on labeled tensor factors of qubits.

Everything downstream works with :class:`LabeledOperator`: a dense complex
square matrix together with an ordered tuple of subsystem labels, one qubit
per label.  The canonical process-matrix label order is
``(A_O, B_I, B_O, C_I)``; environment factors use ``E1, E2, E3``.  All
operations here are pure functions and all values are immutable, so they are
safe to share across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .fileio import (InputDataError, atomic_write, format_complex, parse_complex,
                     read_text_lines, split_header)

PROCESS_LABELS = ("A_O", "B_I", "B_O", "C_I")
ENV_LABELS = ("E1", "E2", "E3")

OPERATOR_MAGIC = "# multitime operator v1"

PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pauli(index: int) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``index`` in {0: identity, 1: x, 2: y, 3: z}."""
    if index not in (0, 1, 2, 3):
        raise ValueError(f"Pauli index must be in [0, 3], got {index}")
    return PAULIS[index].copy()


@dataclass(frozen=True)
class LabeledOperator:
    """Dense operator on an ordered list of two-dimensional subsystems.

    The matrix side must equal ``2 ** len(labels)`` and labels must be
    pairwise distinct.  The matrix is stored read-only.
    """

    labels: tuple[str, ...]
    mat: np.ndarray

    def __post_init__(self):
        labels = tuple(str(l) for l in self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"labels must be pairwise distinct, got {labels}")
        mat = np.array(self.mat, dtype=complex)
        d = 2 ** len(labels)
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match labels {labels} "
                             f"(expected {(d, d)})")
        mat.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def nsys(self) -> int:
        return len(self.labels)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown label {label!r}; operator has {self.labels}") from None


def identity(labels: Iterable[str]) -> LabeledOperator:
    labels = tuple(labels)
    return LabeledOperator(labels, np.eye(2 ** len(labels), dtype=complex))


def is_hermitian(op: LabeledOperator, atol: float = 1e-12) -> bool:
    return bool(np.abs(op.mat - op.mat.conj().T).max() <= atol)


def _tensor_view(op: LabeledOperator) -> np.ndarray:
    n = op.nsys
    return op.mat.reshape((2,) * (2 * n))


def tensor(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Kronecker product with concatenated labels; label sets must be disjoint."""
    overlap = set(a.labels) & set(b.labels)
    if overlap:
        raise ValueError(f"tensor operands share labels {sorted(overlap)}")
    return LabeledOperator(a.labels + b.labels, np.kron(a.mat, b.mat))


def reorder(op: LabeledOperator, new_labels: Iterable[str]) -> LabeledOperator:
    """Permute tensor factors so the label order becomes ``new_labels``."""
    new_labels = tuple(new_labels)
    if sorted(new_labels) != sorted(op.labels):
        raise ValueError(f"cannot reorder {op.labels} to {new_labels}")
    if new_labels == op.labels:
        return op
    n = op.nsys
    perm = [op.labels.index(l) for l in new_labels]
    t = _tensor_view(op).transpose(perm + [p + n for p in perm])
    return LabeledOperator(new_labels, t.reshape(op.dim, op.dim))


def _validate_subset(op: LabeledOperator, over: Iterable[str]) -> tuple[str, ...]:
    over = tuple(dict.fromkeys(over))  # dedupe, keep caller order
    for label in over:
        if label not in op.labels:
            raise ValueError(f"unknown label {label!r}; operator has {op.labels}")
    # normalize to the operator's own ordering
    return tuple(l for l in op.labels if l in over)


def partial_trace(op: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    """Trace out the factors in ``over``; remaining labels keep their order.

    Tracing out every label yields a 1x1 operator holding the full trace.
    """
    over = _validate_subset(op, over)
    labels = list(op.labels)
    t = _tensor_view(op)
    for label in over:
        ax = labels.index(label)
        t = np.trace(t, axis1=ax, axis2=ax + len(labels))
        labels.pop(ax)
    d = 2 ** len(labels)
    if not labels:
        return LabeledOperator((), t.reshape(1, 1))
    return LabeledOperator(tuple(labels), t.reshape(d, d))


def partial_transpose(op: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    """Transpose the factors in ``over`` in the computational basis."""
    over = _validate_subset(op, over)
    n = op.nsys
    perm = list(range(2 * n))
    for label in over:
        i = op.labels.index(label)
        perm[i], perm[i + n] = perm[i + n], perm[i]
    t = _tensor_view(op).transpose(perm)
    return LabeledOperator(op.labels, t.reshape(op.dim, op.dim))


def trace_and_replace(op: LabeledOperator, over: Iterable[str]) -> LabeledOperator:
    """Replace the factors in ``over`` by the normalized identity.

    Returns ``(1/d_over) * identity(over) (x) partial_trace(op, over)``
    re-embedded on the original label order.  This map is idempotent,
    trace preserving, and self-adjoint in the Hilbert-Schmidt inner product.
    """
    over = _validate_subset(op, over)
    if not over:
        return op
    if len(over) == op.nsys:
        tr = np.trace(op.mat)
        return LabeledOperator(op.labels, (tr / op.dim) * np.eye(op.dim))
    reduced = partial_trace(op, over)
    embedded = tensor(reduced, identity(over))
    return reorder(LabeledOperator(embedded.labels, embedded.mat / 2 ** len(over)),
                   op.labels)


def choi_of_unitary(u: LabeledOperator, out_labels: Iterable[str]) -> LabeledOperator:
    """Choi operator of the unitary channel ``rho -> U rho U^dag``.

    Built as ``(1 (x) U) |1>><<1| (1 (x) U)^dag`` with ``|1>> = sum_j |jj>``:
    rank one, trace equal to the input dimension, and labeled
    ``u.labels + out_labels`` (inputs first).  ``out_labels[k]`` is the output
    slot fed by input factor ``u.labels[k]``.  No transpose is baked in;
    measurement/preparation transposes are applied where effect operators are
    assembled, so exactly one transpose convention exists in the codebase.
    """
    out_labels = tuple(out_labels)
    if len(out_labels) != u.nsys:
        raise ValueError(f"need {u.nsys} output labels, got {len(out_labels)}")
    if set(out_labels) & set(u.labels):
        raise ValueError("output labels must not collide with input labels")
    dev = np.abs(u.mat.conj().T @ u.mat - np.eye(u.dim)).max()
    if dev >= 1e-10:
        raise ValueError(f"operator is not unitary (max deviation {dev:.2e})")
    v = u.mat.T.reshape(u.dim * u.dim)  # v[(j, a)] = U[a, j]
    return LabeledOperator(u.labels + out_labels, np.outer(v, v.conj()))


def link_product(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Compose two Choi-form operators over their shared labels.

    Computes ``Tr_shared[(a^{T_shared} (x) 1)(1 (x) b)]`` on the union of the
    non-shared labels.  With no shared labels this is the plain tensor
    product; it is commutative up to label reordering.
    """
    shared = tuple(l for l in a.labels if l in b.labels)
    if not shared:
        return tensor(a, b)
    a_only = tuple(l for l in a.labels if l not in shared)
    b_only = tuple(l for l in b.labels if l not in shared)
    union = a.labels + b_only
    at = partial_transpose(a, shared)
    ea = tensor(at, identity(b_only)) if b_only else at
    eb = tensor(identity(a_only), b) if a_only else b
    eb = reorder(eb, union)
    prod = LabeledOperator(union, ea.mat @ eb.mat)
    return partial_trace(prod, shared)


def hermitian_eig(op: LabeledOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator.

    Returns ascending real eigenvalues and the matching orthonormal
    eigenvector columns.  Rejects inputs that are not Hermitian to 1e-10.
    """
    dev = np.abs(op.mat - op.mat.conj().T).max()
    if dev >= 1e-10:
        raise ValueError(f"operator is not Hermitian (max deviation {dev:.2e})")
    vals, vecs = np.linalg.eigh(op.mat)
    return vals, vecs


# ----------------------------------------------------------------------
# serialization: text, row-major, one (re,im) pair per entry, >= 15 digits
# ----------------------------------------------------------------------

def operator_text(op: LabeledOperator, header: Mapping[str, str] | None = None) -> str:
    lines = [OPERATOR_MAGIC, f"labels: {' '.join(op.labels)}"]
    for key, value in (header or {}).items():
        lines.append(f"{key}: {value}")
    lines.append("matrix:")
    for row in op.mat:
        lines.append(" ".join(format_complex(z) for z in row))
    return "\n".join(lines) + "\n"


def write_operator(path: str, op: LabeledOperator,
                   header: Mapping[str, str] | None = None) -> None:
    atomic_write(path, operator_text(op, header))


def read_operator(path: str) -> tuple[LabeledOperator, dict[str, str]]:
    lines = read_text_lines(path)
    header, body_at = split_header(lines, path, OPERATOR_MAGIC, body_marker="matrix:")
    if "labels" not in header:
        raise InputDataError(f"{path}: missing 'labels' header line")
    labels = tuple(header.pop("labels").split())
    d = 2 ** len(labels)
    rows = [line for line in lines[body_at:] if line.strip()]
    if len(rows) != d:
        raise InputDataError(f"{path}: expected {d} matrix rows, found {len(rows)}")
    mat = np.empty((d, d), dtype=complex)
    for i, line in enumerate(rows):
        tokens = line.split()
        if len(tokens) != d:
            raise InputDataError(f"{path}: row {i} has {len(tokens)} entries, expected {d}")
        for j, token in enumerate(tokens):
            mat[i, j] = parse_complex(token, f"{path}: row {i}, column {j}")
    return LabeledOperator(labels, mat), header
