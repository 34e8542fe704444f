"""The 324-setting prepare-measure-prepare-measure tomography protocol.

A setting fixes a preparation at the first time, a measured observable and a
re-preparation rotation at the middle time, and a measured observable at the
final time.  The middle-time rotation is applied to the qubit as the readout
leaves it (|0> or |1> depending on the classified bit), so the state it
actually prepares is a deterministic function of the recorded outcome.
Recording that realized state per shot replaces feed-forward control: over
many shots every (projector, re-preparation) combination needed for a
full-rank reconstruction occurs on its own.

Outcome conventions: the + eigenstate of an observable reads out as bit 0,
the - eigenstate as bit 1, and |0> is the +1 eigenvector of sigma_z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterator

import numpy as np

from . import qops
from .fileio import InputDataError, atomic_write, read_text_lines, split_header
from .model import ProcessMatrix, STATUS_MODEL, STATUS_PHYSICAL
from .qops import LabeledOperator, PROCESS_LABELS

COUNTS_MAGIC = "# multitime counts v1"

_SQ2 = 1 / math.sqrt(2)
_KETS = {
    ("X", +1): np.array([_SQ2, _SQ2], dtype=complex),
    ("X", -1): np.array([_SQ2, -_SQ2], dtype=complex),
    ("Y", +1): np.array([_SQ2, _SQ2 * 1j], dtype=complex),
    ("Y", -1): np.array([_SQ2, -_SQ2 * 1j], dtype=complex),
    ("Z", +1): np.array([1, 0], dtype=complex),
    ("Z", -1): np.array([0, 1], dtype=complex),
}


class BasisState(Enum):
    """The six eigenstates of the Pauli observables."""

    X_PLUS = ("X", +1)
    X_MINUS = ("X", -1)
    Y_PLUS = ("Y", +1)
    Y_MINUS = ("Y", -1)
    Z_PLUS = ("Z", +1)
    Z_MINUS = ("Z", -1)

    @property
    def axis(self) -> str:
        return self.value[0]

    @property
    def sign(self) -> int:
        return self.value[1]

    @property
    def label(self) -> str:
        return f"{self.axis}{'+' if self.sign > 0 else '-'}"

    def ket(self) -> np.ndarray:
        return _KETS[self.value].copy()

    def projector(self) -> np.ndarray:
        k = _KETS[self.value]
        return np.outer(k, k.conj())

    @classmethod
    def from_label(cls, label: str) -> "BasisState":
        for state in cls:
            if state.label == label:
                return state
        raise InputDataError(f"unknown basis state {label!r}")


BASIS_STATES = tuple(BasisState)


class Observable(Enum):
    X = "X"
    Y = "Y"
    Z = "Z"

    @property
    def matrix(self) -> np.ndarray:
        return qops.pauli("XYZ".index(self.value) + 1)

    def eigenstate(self, sign: int) -> BasisState:
        return BasisState((self.value, sign))

    @classmethod
    def from_label(cls, label: str) -> "Observable":
        try:
            return cls(label)
        except ValueError:
            raise InputDataError(f"unknown observable {label!r}") from None


OBSERVABLES = tuple(Observable)


def _rotation(axis: str, degrees: float) -> np.ndarray:
    theta = math.radians(degrees)
    gen = {"X": qops.PAULIS[1], "Y": qops.PAULIS[2]}[axis]
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * gen


class RotationGate(Enum):
    """The re-preparation gate set: half and full turns about x and y.

    Applied to |0> these reach every basis state, which is what makes the
    middle-time preparations tomographically complete.
    """

    I = "I"
    RX90 = "RX90"
    RX_M90 = "RX-90"
    RY90 = "RY90"
    RY_M90 = "RY-90"
    RX180 = "RX180"

    @property
    def label(self) -> str:
        return self.value

    @property
    def unitary(self) -> np.ndarray:
        return _GATE_UNITARIES[self]

    @classmethod
    def from_label(cls, label: str) -> "RotationGate":
        try:
            return cls(label)
        except ValueError:
            raise InputDataError(f"unknown rotation gate {label!r}") from None


_GATE_UNITARIES = {
    RotationGate.I: np.eye(2, dtype=complex),
    RotationGate.RX90: _rotation("X", 90),
    RotationGate.RX_M90: _rotation("X", -90),
    RotationGate.RY90: _rotation("Y", 90),
    RotationGate.RY_M90: _rotation("Y", -90),
    RotationGate.RX180: _rotation("X", 180),
}

ROTATION_GATES = tuple(RotationGate)


@dataclass(frozen=True)
class Setting:
    """One protocol configuration: prepare, measure+re-prepare, measure."""

    prep_a: BasisState
    meas_b: Observable
    reprep_b: RotationGate
    meas_c: Observable


@dataclass(frozen=True)
class ShotTuple:
    """The four recorded labels of one shot."""

    prep_a: BasisState
    result_b: BasisState
    reprep_realized: BasisState
    result_c: BasisState

    @property
    def labels(self) -> tuple[str, str, str, str]:
        return (self.prep_a.label, self.result_b.label,
                self.reprep_realized.label, self.result_c.label)


@dataclass(frozen=True)
class ReadoutErrorModel:
    """Independent classification errors at the two readouts.

    p01 is the probability of reading 1 given the + eigenstate, p10 of
    reading 0 given the - eigenstate.  Recorded labels (including the
    realized re-preparation) follow the read bit, not the true one.
    """

    p01: float
    p10: float

    def __post_init__(self):
        for name in ("p01", "p10"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


def enumerate_settings() -> tuple[Setting, ...]:
    """All 324 settings in canonical (prep, observable, gate, observable) order."""
    return _all_settings()


@lru_cache(maxsize=1)
def _all_settings() -> tuple[Setting, ...]:
    return tuple(Setting(b0, m0, p1, m1)
                 for b0 in BASIS_STATES
                 for m0 in OBSERVABLES
                 for p1 in ROTATION_GATES
                 for m1 in OBSERVABLES)


def _classify(vec: np.ndarray) -> BasisState:
    for state in BASIS_STATES:
        if abs(np.vdot(_KETS[state.value], vec)) ** 2 > 1 - 1e-10:
            return state
    raise RuntimeError("gate image does not land on a basis state; "
                       "the rotation gate table is inconsistent")


@lru_cache(maxsize=None)
def realized_preparation(result_b: BasisState, gate: RotationGate) -> BasisState:
    """State actually prepared at the middle time, given the recorded outcome.

    The readout leaves the qubit in |0> (bit 0, + outcomes) or |1> (bit 1,
    - outcomes); the rotation gate then acts on that state.  The image is
    identified in the basis-state set up to global phase.
    """
    source = BasisState.Z_PLUS if result_b.sign > 0 else BasisState.Z_MINUS
    return _classify(gate.unitary @ source.ket())


def reachable_tuples(setting: Setting) -> tuple[ShotTuple, ...]:
    """The four shot tuples a setting can produce, in canonical order."""
    tuples = []
    for sb in (+1, -1):
        rb = setting.meas_b.eigenstate(sb)
        rp = realized_preparation(rb, setting.reprep_b)
        for sc in (+1, -1):
            tuples.append(ShotTuple(setting.prep_a, rb, rp, setting.meas_c.eigenstate(sc)))
    return tuple(tuples)


@lru_cache(maxsize=None)
def effect_operator(shot: ShotTuple) -> LabeledOperator:
    """Born-rule effect for one shot tuple on ``(A_O, B_I, B_O, C_I)``.

    Preparations sit on output factors and enter transposed; measurement
    projectors sit on input factors untransposed.
    """
    mat = np.kron(
        np.kron(shot.prep_a.projector().T, shot.result_b.projector()),
        np.kron(shot.reprep_realized.projector().T, shot.result_c.projector()),
    )
    return LabeledOperator(PROCESS_LABELS, mat)


def born_distribution(w: ProcessMatrix, setting: Setting) -> dict[ShotTuple, float]:
    """Exact outcome distribution of one setting under the process ``w``.

    For a valid process the four probabilities are real and sum to one;
    negative probabilities beyond -1e-9 from a supposedly valid matrix
    indicate an internal inconsistency and raise.
    """
    out: dict[ShotTuple, float] = {}
    strict = w.status in (STATUS_MODEL, STATUS_PHYSICAL)
    for shot in reachable_tuples(setting):
        value = np.einsum("ij,ji->", w.mat, effect_operator(shot).mat)
        if abs(value.imag) > 1e-10:
            raise RuntimeError(f"Born probability has imaginary part {value.imag:.2e}")
        p = float(value.real)
        if strict and p < -1e-9:
            raise RuntimeError(f"negative probability {p:.2e} from a {w.status} matrix")
        out[shot] = p
    return out


@dataclass
class CountsTable:
    """Shot counts for every setting, keyed by the recorded four-tuples.

    ``shots`` is the per-setting total.  In exact mode the table holds
    infinite-shot frequencies (``shots = 1``) instead of integer counts.
    """

    shots: int
    counts: dict[Setting, dict[ShotTuple, float]]
    seed: int | None = None
    provenance: str = ""
    exact: bool = False
    extra: dict[str, str] = field(default_factory=dict)

    def settings(self) -> Iterator[Setting]:
        return iter(self.counts)

    def frequencies(self, setting: Setting) -> dict[ShotTuple, float]:
        per = self.counts[setting]
        return {shot: count / self.shots for shot, count in per.items()}

    def total_shots(self) -> float:
        return sum(sum(per.values()) for per in self.counts.values())


def _confusion_matrix(noise: ReadoutErrorModel | None) -> np.ndarray | None:
    if noise is None or (noise.p01 == 0.0 and noise.p10 == 0.0):
        return None
    # single-readout confusion: rows = read sign (+,-), columns = true sign
    single = np.array([[1 - noise.p01, noise.p10],
                       [noise.p01, 1 - noise.p10]])
    # joint over (read_b, read_c) in the canonical tuple order (++, +-, -+, --)
    return np.kron(single, single)


def setting_distribution(w: ProcessMatrix, setting: Setting,
                         noise: ReadoutErrorModel | None = None) -> np.ndarray:
    """Probability 4-vector over ``reachable_tuples(setting)``.

    Readout confusion mixes the recorded labels; a flipped middle readout
    also relabels the realized re-preparation, which keeps the recorded
    tuples inside the same reachable set.
    """
    p = np.array(list(born_distribution(w, setting).values()))
    confusion = _confusion_matrix(noise)
    if confusion is not None:
        p = confusion @ p
    return p


def sample_counts(w: ProcessMatrix, shots: int, seed: int,
                  noise: ReadoutErrorModel | None = None,
                  provenance: str = "") -> CountsTable:
    """Draw multinomial shot counts for every setting.

    Per-setting streams are split deterministically from ``(seed, index)``,
    so settings could be sampled in parallel without changing the result.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    counts: dict[Setting, dict[ShotTuple, float]] = {}
    for index, setting in enumerate(enumerate_settings()):
        p = setting_distribution(w, setting, noise)
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
        rng = np.random.default_rng((seed, index))
        drawn = rng.multinomial(shots, p)
        counts[setting] = {shot: int(n) for shot, n in zip(reachable_tuples(setting), drawn)}
    return CountsTable(shots=shots, counts=counts, seed=seed, provenance=provenance)


def exact_counts(w: ProcessMatrix, noise: ReadoutErrorModel | None = None,
                 provenance: str = "") -> CountsTable:
    """Infinite-shot limit: record the exact per-setting frequencies."""
    counts: dict[Setting, dict[ShotTuple, float]] = {}
    for setting in enumerate_settings():
        p = setting_distribution(w, setting, noise)
        counts[setting] = {shot: float(v) for shot, v in zip(reachable_tuples(setting), p)}
    return CountsTable(shots=1, counts=counts, seed=None,
                       provenance=provenance, exact=True)


# ----------------------------------------------------------------------
# counts file format
# ----------------------------------------------------------------------

_COLUMNS = "prep_a meas_b reprep_b meas_c result_b reprep_realized result_c count"


def counts_text(table: CountsTable) -> str:
    lines = [COUNTS_MAGIC,
             f"shots_per_setting: {table.shots}",
             f"exact: {'true' if table.exact else 'false'}"]
    if table.seed is not None:
        lines.append(f"seed: {table.seed}")
    if table.provenance:
        lines.append(f"provenance: {table.provenance}")
    for key, value in table.extra.items():
        lines.append(f"{key}: {value}")
    lines.append(f"columns: {_COLUMNS}")
    for setting in table.counts:
        per = table.counts[setting]
        for shot in reachable_tuples(setting):
            count = per.get(shot, 0)
            count_s = f"{count:.16e}" if table.exact else str(int(count))
            lines.append(" ".join([setting.prep_a.label, setting.meas_b.value,
                                   setting.reprep_b.label, setting.meas_c.value,
                                   shot.result_b.label, shot.reprep_realized.label,
                                   shot.result_c.label, count_s]))
    return "\n".join(lines) + "\n"


def write_counts(path: str, table: CountsTable) -> None:
    atomic_write(path, counts_text(table))


def read_counts(path: str) -> CountsTable:
    """Parse and validate a counts file.

    This is the ingestion boundary for externally collected data, so every
    record is checked: result axes must match the setting's observables and
    the realized re-preparation must be the image of the recorded outcome
    under the setting's gate.
    """
    lines = read_text_lines(path)
    header, body_at = split_header(lines, path, COUNTS_MAGIC,
                                   body_marker=f"columns: {_COLUMNS}")
    try:
        shots = int(header.pop("shots_per_setting"))
    except KeyError:
        raise InputDataError(f"{path}: missing 'shots_per_setting' header") from None
    except ValueError:
        raise InputDataError(f"{path}: shots_per_setting is not an integer") from None
    exact = header.pop("exact", "false").lower() == "true"
    seed_s = header.pop("seed", None)
    seed = int(seed_s) if seed_s is not None else None
    provenance = header.pop("provenance", "")

    counts: dict[Setting, dict[ShotTuple, float]] = {}
    for offset, line in enumerate(lines[body_at:]):
        lineno = body_at + offset + 1
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 8:
            raise InputDataError(f"{path}: line {lineno}: expected 8 fields, got {len(fields)}")
        where = f"{path}: line {lineno}"
        try:
            setting = Setting(BasisState.from_label(fields[0]),
                              Observable.from_label(fields[1]),
                              RotationGate.from_label(fields[2]),
                              Observable.from_label(fields[3]))
            result_b = BasisState.from_label(fields[4])
            reprep = BasisState.from_label(fields[5])
            result_c = BasisState.from_label(fields[6])
        except InputDataError as exc:
            raise InputDataError(f"{where}: {exc}") from None
        if result_b.axis != setting.meas_b.value:
            raise InputDataError(f"{where}: result_b {result_b.label} does not match "
                                 f"measured observable {setting.meas_b.value}")
        if result_c.axis != setting.meas_c.value:
            raise InputDataError(f"{where}: result_c {result_c.label} does not match "
                                 f"measured observable {setting.meas_c.value}")
        expected = realized_preparation(result_b, setting.reprep_b)
        if reprep is not expected:
            raise InputDataError(f"{where}: reprep_realized {reprep.label} is not the image "
                                 f"of {result_b.label} under {setting.reprep_b.label} "
                                 f"(expected {expected.label})")
        try:
            count = float(fields[7]) if exact else int(fields[7])
        except ValueError:
            raise InputDataError(f"{where}: malformed count {fields[7]!r}") from None
        if count < 0:
            raise InputDataError(f"{where}: negative count {count}")
        shot = ShotTuple(setting.prep_a, result_b, reprep, result_c)
        per = counts.setdefault(setting, {})
        if shot in per:
            raise InputDataError(f"{where}: duplicate record for {shot.labels}")
        per[shot] = count

    for setting, per in counts.items():
        for shot in reachable_tuples(setting):
            per.setdefault(shot, 0)
        total = sum(per.values())
        tol = 1e-6 * shots if exact else 0
        if abs(total - shots) > tol:
            raise InputDataError(
                f"{path}: setting ({setting.prep_a.label}, {setting.meas_b.value}, "
                f"{setting.reprep_b.label}, {setting.meas_c.value}) sums to {total}, "
                f"expected {shots}")
    return CountsTable(shots=shots, counts=counts, seed=seed,
                       provenance=provenance, exact=exact, extra=header)
