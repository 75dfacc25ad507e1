"""Three-qubit phase-flip error correction and its fidelity sweep.

A qubit alpha|0> + beta|1> stored on the third nuclear spin is encoded
into alpha|y+ y+ y+> + beta|y- y- y->; independent sigma_z errors of
probability p may strike during the protected interval; decoding maps
single-error syndromes onto the two ancillas and a final doubly
controlled flip restores the data qubit by majority vote.  The figure of
merit is the process fidelity chi_11 of the effective channel on the
data qubit, which for ideal gates follows

    f(p) = 1 - 3 p^2 + 2 p^3     (corrected, errors on all qubits)
    f(p) = 1 - p                 (correction gate omitted)

and stays at 1 for errors confined to a single qubit.  Circuits run
either on the bare three-qubit space ("abstract") or on the full
register with the electron mediating every two-qubit gate ("register");
the two engines agree to numerical precision.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DensityMatrix,
    PureState,
    apply_channel,
    apply_unitary,
    op_on,
    partial_trace,
    phase_flip_on,
    rotation,
    tensor,
    SZ,
)
from .register import (
    CARBON1,
    CARBON2,
    NITROGEN,
    Circuit,
    GateOp,
    NuclearLabel,
    RegisterConfig,
    cphase,
    nuclear_cnot,
    nuclear_rotation,
)
from .tomo import (
    cardinal_state,
    chi11_from_sixpoint,
    chi_from_process,
    sixpoint_from_process,
)

EXACT = "exact-channel"
MONTE_CARLO = "monte-carlo"

# nuclear-space qubit indices: q1, q2 are the ancillas, q3 carries the data
Q1, Q2, Q3 = 0, 1, 2
DATA_QUBIT = Q3
_QUBIT_NAMES = {"q1": Q1, "q2": Q2, "q3": Q3}
_DIMS3 = (2, 2, 2)

PHASE_BASIS = "phase"
BIT_BASIS = "bit"


def _as_target(t) -> int:
    if isinstance(t, str):
        try:
            return _QUBIT_NAMES[t]
        except KeyError:
            raise ValueError(f"unknown qubit name {t!r}") from None
    if t in (Q1, Q2, Q3):
        return int(t)
    raise ValueError(f"bad qubit target {t!r}")


@dataclass(frozen=True)
class ErrorSpec:
    """Phase-flip error model: probability, struck qubits, sampling mode."""

    p: float
    targets: tuple = ("q1", "q2", "q3")
    mode: str = EXACT
    rng_seed: int | None = None
    trials: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"error probability {self.p} outside [0, 1]")
        targets = tuple(sorted(_as_target(t) for t in self.targets))
        if not targets:
            raise ValueError("targets must be nonempty")
        if len(set(targets)) != len(targets):
            raise ValueError("duplicate targets")
        object.__setattr__(self, "targets", targets)
        if self.mode not in (EXACT, MONTE_CARLO):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == MONTE_CARLO:
            if self.trials is None or self.trials < 1:
                raise ValueError("monte-carlo mode needs trials >= 1")
            if self.rng_seed is None:
                raise ValueError("monte-carlo mode needs an rng seed")


@dataclass(frozen=True)
class QecResult:
    """One point of the fidelity sweep."""

    p: float
    fidelity: float
    mode: str
    corrected: bool
    targets: tuple
    trials_used: int | None = None
    standard_error: float | None = None

    def __post_init__(self):
        if not -1e-9 <= self.fidelity <= 1 + 1e-9:
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")


def variant_label(corrected: bool, targets) -> str:
    names = "+".join(f"q{_as_target(t) + 1}" for t in targets)
    return ("corrected:" if corrected else "uncorrected:") + names


def _basis_change(basis: str) -> np.ndarray:
    """Per-qubit map sending |0> to |y+> and |1> to |y-> (phase basis)."""
    if basis == BIT_BASIS:
        return np.eye(2, dtype=complex)
    if basis == PHASE_BASIS:
        return rotation("x", -np.pi / 2) @ rotation("z", -np.pi / 2)
    raise ValueError(f"unknown code basis {basis!r}")


def _cnot3(control: int, target: int) -> np.ndarray:
    u = np.zeros((8, 8), dtype=complex)
    for b in range(8):
        bits = [(b >> 2) & 1, (b >> 1) & 1, b & 1]
        if bits[control]:
            bits[target] ^= 1
        u[(bits[0] << 2) | (bits[1] << 1) | bits[2], b] = 1.0
    return u


def _toffoli3() -> np.ndarray:
    u = np.eye(8, dtype=complex)
    u[[0b110, 0b111]] = 0.0
    u[0b110, 0b111] = 1.0
    u[0b111, 0b110] = 1.0
    return u


def encoding_unitary(basis: str = PHASE_BASIS) -> np.ndarray:
    w = _basis_change(basis)
    w3 = tensor(w, w, w)
    return w3 @ _cnot3(Q3, Q2) @ _cnot3(Q3, Q1)


def decoding_unitary(corrected: bool = True,
                     basis: str = PHASE_BASIS) -> np.ndarray:
    w = _basis_change(basis)
    w3 = tensor(w, w, w)
    u = _cnot3(Q3, Q2) @ _cnot3(Q3, Q1) @ w3.conj().T
    if corrected:
        u = _toffoli3() @ u
    return u


def encode(state: PureState, basis: str = PHASE_BASIS) -> PureState:
    """Map a one-qubit state to its three-qubit codeword."""
    if state.dim != 2:
        raise ValueError("encode expects a single-qubit state")
    start = tensor(np.array([1, 0]), np.array([1, 0]),
                   state.amplitudes).reshape(-1)
    return PureState(encoding_unitary(basis) @ start)


def apply_errors(rho: DensityMatrix, spec: ErrorSpec) -> DensityMatrix:
    """Independent phase flips on the target qubits.

    Exact mode composes the sigma_z Kraus channels; monte-carlo mode
    averages per-trial Bernoulli(p) sigma_z insertions drawn from the
    spec's seed.
    """
    if rho.dim != 8:
        raise ValueError("error channel expects a three-qubit state")
    if spec.mode == EXACT:
        for t in spec.targets:
            rho = apply_channel(rho, phase_flip_on(spec.p, t, _DIMS3))
        return rho
    patterns, weights = _sample_patterns(spec)
    out = np.zeros_like(rho.matrix)
    for pattern, w in zip(patterns, weights):
        u = _pattern_unitary(pattern, spec.targets)
        out = out + w * (u @ rho.matrix @ u.conj().T)
    return DensityMatrix(out)


def _sample_patterns(spec: ErrorSpec):
    """Draw per-trial flip patterns; returns distinct patterns and their
    observed frequencies."""
    rng = np.random.default_rng(spec.rng_seed)
    draws = rng.random((spec.trials, len(spec.targets))) < spec.p
    patterns, counts = np.unique(draws, axis=0, return_counts=True)
    return [tuple(bool(b) for b in row) for row in patterns], \
        counts / spec.trials


def _pattern_unitary(pattern, targets) -> np.ndarray:
    u = np.eye(8, dtype=complex)
    for flip, t in zip(pattern, targets):
        if flip:
            u = op_on(SZ, t, _DIMS3) @ u
    return u


def decode_and_correct(rho: DensityMatrix,
                       basis: str = PHASE_BASIS) -> DensityMatrix:
    """Inverse basis change, syndrome mapping onto the ancillas, then the
    doubly controlled flip of the data qubit."""
    if rho.dim != 8:
        raise ValueError("decode expects a three-qubit state")
    return apply_unitary(rho, decoding_unitary(True, basis))


def data_qubit_state(rho: DensityMatrix) -> DensityMatrix:
    return partial_trace(rho, (DATA_QUBIT,), _DIMS3)


# ---------------------------------------------------------------------------
# register-engine circuits: every two-qubit gate goes through the electron

def _register_basis_ops(cfg: RegisterConfig, inverse: bool) -> list[GateOp]:
    ops = []
    for q in (NITROGEN, CARBON1, CARBON2):
        if inverse:
            steps = (("x", np.pi / 2), ("z", np.pi / 2))
        else:
            steps = (("z", -np.pi / 2), ("x", -np.pi / 2))
        for axis, angle in steps:
            ops.append(GateOp("local-rotation", (q,),
                              {"angle": angle, "axis": axis},
                              matrix=nuclear_rotation(cfg, q, angle, axis)))
    return ops


def _register_toffoli_ops(cfg: RegisterConfig) -> list[GateOp]:
    # a -1 phase on |111> alone; the y sandwich turns it into the doubly
    # controlled flip of the data qubit
    cond = (NuclearLabel.from_bits("111"),)
    return [
        GateOp("local-rotation", (CARBON2,), {"angle": -np.pi / 2,
                                              "axis": "y"},
               matrix=nuclear_rotation(cfg, CARBON2, -np.pi / 2, "y")),
        GateOp("cphase", (0,), {"condition": cond},
               matrix=cphase(cfg, cond)),
        GateOp("local-rotation", (CARBON2,), {"angle": np.pi / 2,
                                              "axis": "y"},
               matrix=nuclear_rotation(cfg, CARBON2, np.pi / 2, "y")),
    ]


def register_encode_circuit(cfg: RegisterConfig) -> Circuit:
    circ = Circuit(dims=cfg.register_dims())
    for target in (NITROGEN, CARBON1):
        circ.ops.extend(nuclear_cnot(cfg, CARBON2, target).ops)
    circ.ops.extend(_register_basis_ops(cfg, inverse=False))
    return circ


def register_decode_circuit(cfg: RegisterConfig,
                            corrected: bool = True) -> Circuit:
    circ = Circuit(dims=cfg.register_dims())
    circ.ops.extend(_register_basis_ops(cfg, inverse=True))
    for target in (NITROGEN, CARBON1):
        circ.ops.extend(nuclear_cnot(cfg, CARBON2, target).ops)
    if corrected:
        circ.ops.extend(_register_toffoli_ops(cfg))
    return circ


# ---------------------------------------------------------------------------
# effective single-qubit process of the full pipeline

def _abstract_process(rho_data: DensityMatrix, error, corrected: bool):
    enc = encoding_unitary()
    start = DensityMatrix(tensor(np.diag([1.0, 0.0]), np.diag([1.0, 0.0]),
                                 rho_data.matrix))
    rho = apply_unitary(start, enc)
    rho = error(rho)
    rho = apply_unitary(rho, decoding_unitary(corrected))
    return data_qubit_state(rho)


def _register_process(rho_data: DensityMatrix, error, corrected: bool,
                      cfg: RegisterConfig):
    p0 = np.diag([1.0, 0.0])
    start = DensityMatrix(tensor(p0, p0, p0, rho_data.matrix))
    rho = register_encode_circuit(cfg).apply(start)
    rho = error(rho)
    rho = register_decode_circuit(cfg, corrected).apply(rho)
    return partial_trace(rho, (CARBON2,), cfg.register_dims())


def _exact_error(spec: ErrorSpec, dims, offset: int):
    def apply_err(rho):
        for t in spec.targets:
            rho = apply_channel(rho, phase_flip_on(spec.p, t + offset, dims))
        return rho
    return apply_err


def _pattern_error(pattern, targets, dims, offset: int):
    def apply_err(rho):
        u = np.eye(int(np.prod(dims)), dtype=complex)
        for flip, t in zip(pattern, targets):
            if flip:
                u = op_on(SZ, t + offset, dims) @ u
        return apply_unitary(rho, u)
    return apply_err


def _make_process(error, corrected: bool, engine: str,
                  cfg: RegisterConfig | None):
    if engine == "abstract":
        return lambda rho: _abstract_process(rho, error, corrected)
    if engine == "register":
        reg_cfg = cfg or RegisterConfig()
        return lambda rho: _register_process(rho, error, corrected, reg_cfg)
    raise ValueError(f"unknown engine {engine!r}")


def _error_for_engine(spec_or_pattern, engine, exact=True, targets=None):
    dims = _DIMS3 if engine == "abstract" else (2, 2, 2, 2)
    offset = 0 if engine == "abstract" else 1
    if exact:
        return _exact_error(spec_or_pattern, dims, offset)
    return _pattern_error(spec_or_pattern, targets, dims, offset)


def qec_process_fidelity(spec: ErrorSpec, corrected: bool = True,
                         engine: str = "abstract",
                         cfg: RegisterConfig | None = None) -> QecResult:
    """chi_11 of the data-qubit process via the six-state protocol.

    Exact mode is deterministic.  Before trusting the six-expectation
    shortcut the full chi matrix is reconstructed once and its
    off-diagonal part is required to vanish (the pipeline's effective
    channel is a Pauli mixture, so anything else signals a bug).
    Monte-carlo mode replays the protocol for each sampled error pattern
    and averages the per-trial fidelities.
    """
    if spec.mode == EXACT:
        process = _make_process(_error_for_engine(spec, engine),
                                corrected, engine, cfg)
        chi = chi_from_process(process)
        off = chi.chi - np.diag(np.diag(chi.chi))
        if np.max(np.abs(off)) > 1e-9:
            raise ValueError("effective channel is not Pauli diagonal; "
                             "six-point shortcut is invalid here")
        fidelity = chi11_from_sixpoint(sixpoint_from_process(process))
        return QecResult(p=spec.p, fidelity=float(fidelity), mode=spec.mode,
                         corrected=corrected, targets=spec.targets)

    patterns, weights = _sample_patterns(spec)
    per_pattern = np.empty(len(patterns))
    for i, pattern in enumerate(patterns):
        err = _error_for_engine(pattern, engine, exact=False,
                                targets=spec.targets)
        process = _make_process(err, corrected, engine, cfg)
        per_pattern[i] = chi11_from_sixpoint(sixpoint_from_process(process))
    fidelity = float(np.dot(weights, per_pattern))
    var = float(np.dot(weights, (per_pattern - fidelity) ** 2))
    return QecResult(p=spec.p, fidelity=fidelity, mode=spec.mode,
                     corrected=corrected, targets=spec.targets,
                     trials_used=spec.trials,
                     standard_error=float(np.sqrt(var / spec.trials)))


def _sweep_point(args):
    p, corrected, targets, mode, trials, seed, engine = args
    spec = ErrorSpec(p=p, targets=targets, mode=mode,
                     rng_seed=seed if mode == MONTE_CARLO else None,
                     trials=trials if mode == MONTE_CARLO else None)
    return qec_process_fidelity(spec, corrected=corrected, engine=engine)


def sweep(p_grid, variants, mode: str = EXACT, trials: int = 10000,
          rng_seed: int = 0, engine: str = "abstract",
          jobs: int = 1) -> list[QecResult]:
    """One QecResult per (p, variant); variants are (corrected, targets)
    pairs.  Monte-carlo points draw independent seeds derived from the
    root seed, so results are reproducible and order independent."""
    p_grid = list(p_grid)
    if not p_grid:
        raise ValueError("probability grid must be nonempty")
    tasks = []
    seeds = np.random.SeedSequence(rng_seed).spawn(len(p_grid) * len(variants))
    i = 0
    for corrected, targets in variants:
        for p in p_grid:
            seed = int(seeds[i].generate_state(1)[0])
            tasks.append((p, corrected, tuple(targets), mode, trials, seed,
                          engine))
            i += 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_point, tasks))
    return [_sweep_point(t) for t in tasks]
