"""Electron-nuclear spin register: hyperfine lines and selective gates.

The register is one electron qubit (levels m_S = 0, -1) coupled to a
nitrogen spin and two carbon-13 spins.  Each nuclear configuration shifts
the electron transition by its hyperfine couplings, so microwave pulses
tuned to a single line act on the electron conditional on the nuclear
state.  Two nitrogen views are supported: the full spin-1 triplet (used
only to enumerate the 12-line spectrum) and the two-level subspace
m_I in {0, -1} used by every circuit, with m_I = 0 as logical 0 and
m_I = -1 as logical 1.

Sign conventions (only splittings are observable, so these are fixed by
choice and documented here): in qubit-subspace mode nitrogen contributes
0 (logical 0) or -a_N (logical 1); each carbon contributes +A/2 (logical
0) or -A/2 (logical 1).  In triplet mode nitrogen contributes m_I * a_N
with m_I in {+1, 0, -1}.

Subsystem tensor order is (electron, nitrogen, carbon1, carbon2).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    ATOL_UNITARY,
    DensityMatrix,
    I2,
    KrausChannel,
    SX,
    apply_channel,
    apply_unitary,
    is_unitary,
    op_on,
    rotation,
    tensor,
)

QUBIT_SUBSPACE = "qubit-subspace"
FULL_TRIPLET = "full-triplet"

ELECTRON, NITROGEN, CARBON1, CARBON2 = 0, 1, 2, 3

# triplet nitrogen basis order: index 0 <-> m_I=+1, 1 <-> m_I=0, 2 <-> m_I=-1
TRIPLET_PROJECTIONS = (1, 0, -1)


@dataclass(frozen=True)
class RegisterConfig:
    """Hyperfine couplings and linewidth defining the register (Hz)."""

    a_n: float = 2.16e6
    a_c1: float = 413e3
    a_c2: float = 89e3
    linewidth: float = 50e3
    nitrogen_mode: str = QUBIT_SUBSPACE

    def __post_init__(self):
        couplings = (self.a_n, self.a_c1, self.a_c2)
        if any(c <= 0 for c in couplings):
            raise ValueError("hyperfine couplings must be positive")
        if len(set(couplings)) != 3:
            raise ValueError("hyperfine couplings must be mutually distinct")
        if self.linewidth <= 0:
            raise ValueError("linewidth must be positive")
        if self.nitrogen_mode not in (QUBIT_SUBSPACE, FULL_TRIPLET):
            raise ValueError(f"unknown nitrogen mode {self.nitrogen_mode!r}")
        if self.nitrogen_mode == QUBIT_SUBSPACE:
            gap = min_line_separation(self)
            if self.linewidth >= gap:
                warnings.warn(
                    f"linewidth {self.linewidth} Hz is not below the "
                    f"smallest line separation {gap} Hz; lines overlap",
                    stacklevel=2)

    def nuclear_dims(self) -> tuple[int, int, int]:
        n_dim = 3 if self.nitrogen_mode == FULL_TRIPLET else 2
        return (n_dim, 2, 2)

    def register_dims(self) -> tuple[int, int, int, int]:
        return (2,) + self.nuclear_dims()

    def to_json(self) -> str:
        return json.dumps({
            "a_N_hz": self.a_n,
            "a_C1_hz": self.a_c1,
            "a_C2_hz": self.a_c2,
            "linewidth_hz": self.linewidth,
            "nitrogen_mode": self.nitrogen_mode,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RegisterConfig":
        doc = json.loads(text)
        return cls(a_n=doc["a_N_hz"], a_c1=doc["a_C1_hz"],
                   a_c2=doc["a_C2_hz"], linewidth=doc["linewidth_hz"],
                   nitrogen_mode=doc["nitrogen_mode"])


@dataclass(frozen=True, order=True)
class NuclearLabel:
    """Nuclear configuration (n, c1, c2).

    Carbons are logical bits {0, 1}; nitrogen is a bit in qubit-subspace
    mode or a projection in {+1, 0, -1} in triplet mode.
    """

    n: int
    c1: int
    c2: int

    def __post_init__(self):
        if self.c1 not in (0, 1) or self.c2 not in (0, 1):
            raise ValueError("carbon labels must be 0 or 1")
        if self.n not in (-1, 0, 1):
            raise ValueError("nitrogen label must be in {-1, 0, +1}")

    @classmethod
    def from_bits(cls, bits: str) -> "NuclearLabel":
        """Parse a qubit-subspace label like '101' (order n, c1, c2)."""
        if len(bits) != 3 or any(b not in "01" for b in bits):
            raise ValueError(f"bad label string {bits!r}")
        return cls(int(bits[0]), int(bits[1]), int(bits[2]))

    def bits(self) -> str:
        if self.n not in (0, 1):
            raise ValueError("triplet label has no bit form")
        return f"{self.n}{self.c1}{self.c2}"

    def valid_for(self, mode: str) -> bool:
        if mode == QUBIT_SUBSPACE:
            return self.n in (0, 1)
        return True

    def index(self, mode: str) -> int:
        """Flat index of this configuration in the nuclear tensor space."""
        if mode == QUBIT_SUBSPACE:
            if self.n not in (0, 1):
                raise ValueError(f"label {self} invalid in qubit-subspace mode")
            n_idx, n_dim = self.n, 2
        else:
            n_idx, n_dim = TRIPLET_PROJECTIONS.index(self.n), 3
        return (n_idx * 2 + self.c1) * 2 + self.c2


def nuclear_labels(mode: str) -> list[NuclearLabel]:
    n_values = (0, 1) if mode == QUBIT_SUBSPACE else TRIPLET_PROJECTIONS
    return [NuclearLabel(n, c1, c2)
            for n in n_values for c1 in (0, 1) for c2 in (0, 1)]


def transition_offset(cfg: RegisterConfig, label: NuclearLabel) -> float:
    """Offset of the electron m_S = 0 <-> -1 line for one nuclear state."""
    if not label.valid_for(cfg.nitrogen_mode):
        raise ValueError(f"label {label} invalid for mode {cfg.nitrogen_mode}")
    if cfg.nitrogen_mode == QUBIT_SUBSPACE:
        n_term = 0.0 if label.n == 0 else -cfg.a_n
    else:
        n_term = label.n * cfg.a_n
    c1_term = (1 - 2 * label.c1) * cfg.a_c1 / 2
    c2_term = (1 - 2 * label.c2) * cfg.a_c2 / 2
    return n_term + c1_term + c2_term


def spectrum(cfg: RegisterConfig) -> list[tuple[NuclearLabel, float]]:
    """All hyperfine lines, sorted ascending by frequency offset."""
    lines = [(lab, transition_offset(cfg, lab))
             for lab in nuclear_labels(cfg.nitrogen_mode)]
    return sorted(lines, key=lambda t: t[1])


def min_line_separation(cfg: RegisterConfig) -> float:
    offs = sorted(o for _, o in spectrum(cfg))
    return min(b - a for a, b in zip(offs, offs[1:]))


def _normalize_condition(cfg, condition) -> tuple[NuclearLabel, ...]:
    labels = []
    for item in condition:
        lab = NuclearLabel.from_bits(item) if isinstance(item, str) else item
        if not lab.valid_for(cfg.nitrogen_mode):
            raise ValueError(f"condition label {lab} invalid for mode "
                             f"{cfg.nitrogen_mode}")
        labels.append(lab)
    if not labels:
        raise ValueError("condition set must be nonempty")
    if len(set(labels)) != len(labels):
        raise ValueError("condition set has duplicate labels")
    return tuple(sorted(labels))


@dataclass(frozen=True)
class GateOp:
    """One circuit element: an ideal unitary or a noise channel.

    kinds used here: local-rotation, conditional-electron-rotation,
    cphase, cnnot-e, ce-not-n, noise-channel.
    """

    kind: str
    targets: tuple
    params: dict = field(default_factory=dict)
    matrix: np.ndarray | None = None
    channel: KrausChannel | None = None

    def __post_init__(self):
        if (self.matrix is None) == (self.channel is None):
            raise ValueError("a gate op carries exactly one of matrix/channel")


@dataclass
class Circuit:
    """Ordered gate sequence over a fixed product space."""

    dims: tuple[int, ...]
    ops: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def append(self, op: GateOp) -> None:
        ref = op.matrix if op.matrix is not None else op.channel.operators[0]
        if ref.shape[0] != self.dim:
            raise ValueError("gate dimension does not match circuit space")
        self.ops.append(op)

    def unitary(self) -> np.ndarray:
        """Net unitary of the sequence; fails if any op is a channel."""
        u = np.eye(self.dim, dtype=complex)
        for op in self.ops:
            if op.matrix is None:
                raise ValueError("circuit contains a non-unitary channel")
            u = op.matrix @ u
        return u

    def apply(self, rho: DensityMatrix) -> DensityMatrix:
        for op in self.ops:
            if op.matrix is not None:
                rho = apply_unitary(rho, op.matrix)
            else:
                rho = apply_channel(rho, op.channel)
        return rho


def conditional_electron_rotation(cfg: RegisterConfig, condition,
                                  angle: float, axis: str) -> np.ndarray:
    """Electron rotation applied only on selected nuclear configurations.

    Returns the full-register unitary: R_axis(angle) on the electron
    within the subspace where the nuclei match any condition label,
    identity elsewhere.
    """
    labels = _normalize_condition(cfg, condition)
    if not np.isfinite(angle):
        raise ValueError("angle must be finite")
    r = rotation(axis, angle)
    n_dim = int(np.prod(cfg.nuclear_dims()))
    u = np.eye(2 * n_dim, dtype=complex)
    for lab in labels:
        j = lab.index(cfg.nitrogen_mode)
        for e1 in (0, 1):
            for e2 in (0, 1):
                u[e1 * n_dim + j, e2 * n_dim + j] = r[e1, e2]
    return u


def cphase(cfg: RegisterConfig, condition) -> np.ndarray:
    """Conditional 2pi_x electron rotation: a -1 phase on selected lines.

    The 2pi rotation returns the electron to its initial state while the
    conditioned nuclear configurations acquire a pi phase, so the gate is
    effectively diagonal on the nuclear register.
    """
    return conditional_electron_rotation(cfg, condition, 2 * np.pi, "x")


def cphase_nuclear(cfg: RegisterConfig, condition) -> np.ndarray:
    """Nuclear-space diagonal of cphase: -1 on conditioned configurations."""
    labels = _normalize_condition(cfg, condition)
    n_dim = int(np.prod(cfg.nuclear_dims()))
    diag = np.ones(n_dim, dtype=complex)
    for lab in labels:
        diag[lab.index(cfg.nitrogen_mode)] = -1.0
    return np.diag(diag)


def nuclear_block(u_full: np.ndarray) -> np.ndarray:
    """Nuclear-space action of a register unitary that is trivial on the
    electron (asserted)."""
    d = u_full.shape[0] // 2
    if not np.allclose(u_full[:d, d:], 0) or not np.allclose(
            u_full[d:, :d], 0) or not np.allclose(
            u_full[:d, :d], u_full[d:, d:]):
        raise ValueError("unitary is not trivial on the electron")
    return u_full[:d, :d]


def cnnot_e(cfg: RegisterConfig, condition) -> np.ndarray:
    """Electron pi_x flip conditional on nuclear configurations (the
    readout mapping gate)."""
    return conditional_electron_rotation(cfg, condition, np.pi, "x")


def nuclear_rotation(cfg: RegisterConfig, nucleus: int, angle: float,
                     axis: str) -> np.ndarray:
    """Local rotation of one nuclear qubit, identity elsewhere."""
    dims = cfg.register_dims()
    if nucleus == ELECTRON or dims[nucleus] != 2:
        raise ValueError("nuclear rotation target must be a nuclear qubit")
    return op_on(rotation(axis, angle), nucleus, dims)


def ce_not_n(cfg: RegisterConfig, nucleus: int) -> np.ndarray:
    """Flip one nuclear qubit conditional on the electron being |1>."""
    dims = cfg.register_dims()
    if nucleus == ELECTRON or dims[nucleus] != 2:
        raise ValueError("target must be a nuclear qubit")
    d = int(np.prod(dims))
    x_full = op_on(SX, nucleus, dims)
    n_dim = d // 2
    u = np.eye(d, dtype=complex)
    u[n_dim:, n_dim:] = x_full[n_dim:, n_dim:]
    return u


def electron_reset_channel(cfg: RegisterConfig) -> KrausChannel:
    """Trace-preserving projection of the electron to |0>, nuclei kept."""
    n_dim = int(np.prod(cfg.nuclear_dims()))
    eye_n = np.eye(n_dim, dtype=complex)
    k0 = tensor(np.array([[1, 0], [0, 0]], dtype=complex), eye_n)
    k1 = tensor(np.array([[0, 1], [0, 0]], dtype=complex), eye_n)
    return KrausChannel((k0, k1))


def _ideal_cnot_nuclear(cfg, control, target, control_value) -> np.ndarray:
    dims = cfg.nuclear_dims()
    d = int(np.prod(dims))
    u = np.zeros((d, d), dtype=complex)
    for lab in nuclear_labels(cfg.nitrogen_mode):
        j = lab.index(cfg.nitrogen_mode)
        vals = {NITROGEN: lab.n, CARBON1: lab.c1, CARBON2: lab.c2}
        if vals[control] == control_value:
            vals[target] ^= 1
        flipped = NuclearLabel(vals[NITROGEN], vals[CARBON1], vals[CARBON2])
        u[flipped.index(cfg.nitrogen_mode), j] = 1.0
    return u


def nuclear_cnot(cfg: RegisterConfig, control: int, target: int,
                 control_value: int = 1) -> Circuit:
    """CNOT between two nuclear spins mediated by the electron.

    Composite: y rotations of the target around a cphase whose condition
    selects control = control_value and target = 1.  The net unitary is
    compared entrywise against the textbook CNOT; the diagonal phase
    correction relating them is stored in circuit metadata (identity for
    this gate ordering, but never silently assumed).
    """
    if cfg.nitrogen_mode != QUBIT_SUBSPACE:
        raise ValueError("nuclear circuits require qubit-subspace mode")
    nuclear = (NITROGEN, CARBON1, CARBON2)
    if control == target or control not in nuclear or target not in nuclear:
        raise ValueError("control and target must be distinct nuclear spins")
    if control_value not in (0, 1):
        raise ValueError("control value must be 0 or 1")
    condition = [lab for lab in nuclear_labels(cfg.nitrogen_mode)
                 if {NITROGEN: lab.n, CARBON1: lab.c1,
                     CARBON2: lab.c2}[control] == control_value
                 and {NITROGEN: lab.n, CARBON1: lab.c1,
                      CARBON2: lab.c2}[target] == 1]
    circ = Circuit(dims=cfg.register_dims())
    circ.append(GateOp("local-rotation", (target,),
                       {"angle": -np.pi / 2, "axis": "y"},
                       matrix=nuclear_rotation(cfg, target, -np.pi / 2, "y")))
    circ.append(GateOp("cphase", (ELECTRON,), {"condition": tuple(condition)},
                       matrix=cphase(cfg, condition)))
    circ.append(GateOp("local-rotation", (target,),
                       {"angle": np.pi / 2, "axis": "y"},
                       matrix=nuclear_rotation(cfg, target, np.pi / 2, "y")))
    net = nuclear_block(circ.unitary())
    ideal = _ideal_cnot_nuclear(cfg, control, target, control_value)
    correction = ideal.conj().T @ net
    off = correction - np.diag(np.diag(correction))
    if np.max(np.abs(off)) > ATOL_UNITARY:
        raise ValueError("composite does not equal CNOT up to diagonal phases")
    circ.metadata["phase_correction"] = np.diag(correction).copy()
    circ.metadata["control"], circ.metadata["target"] = control, target
    circ.metadata["control_value"] = control_value
    return circ


def swap_init_circuit(cfg: RegisterConfig) -> Circuit:
    """Polarization transfer initializing all nuclei to |000>.

    For each nucleus: reset the electron, flip it conditional on the
    nucleus being |1> (CnNOTe over the matching lines), then flip the
    nucleus back conditional on the electron (CeNOTn).  A final reset
    leaves the register in |0>_e |000>_n for any input state when gates
    are ideal.
    """
    if cfg.nitrogen_mode != QUBIT_SUBSPACE:
        raise ValueError("initialization circuit requires qubit-subspace mode")
    reset = electron_reset_channel(cfg)
    circ = Circuit(dims=cfg.register_dims())
    field_of = {NITROGEN: "n", CARBON1: "c1", CARBON2: "c2"}
    circ.append(GateOp("noise-channel", (ELECTRON,), {"reset": True},
                       channel=reset))
    for nucleus in (NITROGEN, CARBON1, CARBON2):
        cond = [lab for lab in nuclear_labels(cfg.nitrogen_mode)
                if getattr(lab, field_of[nucleus]) == 1]
        circ.append(GateOp("cnnot-e", (ELECTRON,),
                           {"condition": tuple(cond)},
                           matrix=cnnot_e(cfg, cond)))
        circ.append(GateOp("ce-not-n", (nucleus,), {},
                           matrix=ce_not_n(cfg, nucleus)))
        circ.append(GateOp("noise-channel", (ELECTRON,), {"reset": True},
                           channel=reset))
    return circ
