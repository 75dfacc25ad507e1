"""Dense complex linear algebra and quantum-state primitives.

Everything downstream (register gates, entanglement circuits, tomography,
error correction) is built on the small set of objects defined here:
pure states, density matrices, Kraus channels and the handful of
operations that move between them.  Matrices are plain numpy arrays in
row-major order; the register never exceeds dimension 24, so no sparse
path exists.  All tolerances are explicit parameters with the module
defaults below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# default tolerances (absolute)
ATOL_HERMITIAN = 1e-10
ATOL_TRACE = 1e-10
ATOL_UNITARY = 1e-10
ATOL_NORM = 1e-12
PSD_SLACK = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

PAULI = {"I": I2, "X": SX, "Y": SY, "Z": SZ}

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def mat_close(a: np.ndarray, b: np.ndarray, atol: float) -> bool:
    """Entrywise equality within an explicit absolute tolerance."""
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and bool(np.max(np.abs(a - b)) <= atol)


def is_hermitian(m: np.ndarray, atol: float = ATOL_HERMITIAN) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= atol)


def is_unitary(m: np.ndarray, atol: float = ATOL_UNITARY) -> bool:
    m = np.asarray(m)
    return mat_close(m @ m.conj().T, np.eye(m.shape[0]), atol)


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more operators, left to right."""
    if not ops:
        raise ValueError("tensor of zero operators")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def rotation(axis: str, angle: float) -> np.ndarray:
    """Single-qubit rotation exp(-i*angle*sigma_axis/2)."""
    try:
        sigma = PAULI[axis.upper()]
    except KeyError:
        raise ValueError(f"unknown rotation axis {axis!r}") from None
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    return np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * sigma


def op_on(op: np.ndarray, target: int, dims: tuple[int, ...]) -> np.ndarray:
    """Embed `op` acting on subsystem `target` of a product space.

    `dims` lists the per-subsystem dimensions in tensor order.
    """
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[target], dims[target]):
        raise ValueError(f"operator shape {op.shape} does not match "
                         f"subsystem dimension {dims[target]}")
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[target] = op
    return tensor(*factors)


@dataclass(frozen=True)
class PureState:
    """Normalized state vector.  |psi> = alpha|0> + beta|1> lives here."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL_NORM:
            raise ValueError(f"state norm {norm} deviates from 1 by more "
                             f"than {ATOL_NORM}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def computational(cls, index: int, dim: int) -> "PureState":
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def qubit(cls, alpha: complex, beta: complex) -> "PureState":
        return cls(np.array([alpha, beta], dtype=complex))

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one Hermitian state matrix rho.

    Hermiticity and unit trace are checked on construction; the PSD sweep
    is deliberately not (it costs an eigendecomposition), call
    validate_psd() where positivity matters.
    """

    matrix: np.ndarray
    atol_hermitian: float = field(default=ATOL_HERMITIAN, repr=False)
    atol_trace: float = field(default=ATOL_TRACE, repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if not is_hermitian(m, self.atol_hermitian):
            raise ValueError("density matrix is not Hermitian within "
                             f"{self.atol_hermitian}")
        tr = np.trace(m)
        if abs(tr - 1.0) > self.atol_trace:
            raise ValueError(f"trace {tr} deviates from 1 by more than "
                             f"{self.atol_trace}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate_psd(self, slack: float = PSD_SLACK) -> "DensityMatrix":
        evals = np.linalg.eigvalsh(self.matrix)
        if evals.min() < -slack:
            raise ValueError(f"density matrix has eigenvalue {evals.min()} "
                             f"below -{slack}")
        return self

    @classmethod
    def from_pure(cls, psi: PureState) -> "DensityMatrix":
        return psi.density()

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving channel rho -> sum_k K_k rho K_k^dag."""

    operators: tuple
    atol: float = field(default=ATOL_TRACE, repr=False)

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise ValueError("Kraus operators must share one square shape")
        total = sum(k.conj().T @ k for k in ops)
        if not mat_close(total, np.eye(d), self.atol):
            raise ValueError("channel is not trace preserving: "
                             f"max |sum K^dag K - 1| = "
                             f"{np.max(np.abs(total - np.eye(d)))}")
        for k in ops:
            k.flags.writeable = False
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]


def apply_unitary(rho: DensityMatrix, u: np.ndarray,
                  atol: float = ATOL_UNITARY) -> DensityMatrix:
    """rho -> U rho U^dag."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (rho.dim, rho.dim):
        raise ValueError(f"unitary shape {u.shape} does not match state "
                         f"dimension {rho.dim}")
    if not is_unitary(u, atol):
        raise ValueError("operator is not unitary within tolerance")
    return DensityMatrix(u @ rho.matrix @ u.conj().T)


def apply_channel(rho: DensityMatrix, channel: KrausChannel) -> DensityMatrix:
    """rho -> sum_k K_k rho K_k^dag."""
    if channel.dim != rho.dim:
        raise ValueError("channel dimension does not match state")
    out = np.zeros_like(rho.matrix)
    for k in channel.operators:
        out = out + k @ rho.matrix @ k.conj().T
    return DensityMatrix(out)


def expectation(rho: DensityMatrix, obs: np.ndarray,
                atol: float = ATOL_HERMITIAN) -> float:
    """Tr(obs rho) for a Hermitian observable."""
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (rho.dim, rho.dim):
        raise ValueError("observable dimension does not match state")
    if not is_hermitian(obs, atol):
        raise ValueError("observable is not Hermitian within tolerance")
    val = np.trace(obs @ rho.matrix)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary residue {val.imag}")
    return float(val.real)


def state_fidelity(rho: DensityMatrix, psi: PureState) -> float:
    """F = <psi| rho |psi>, clamped to [0, 1]."""
    if psi.dim != rho.dim:
        raise ValueError("state dimensions do not match")
    val = np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)
    f = float(val.real)
    if f < -PSD_SLACK or f > 1.0 + PSD_SLACK:
        raise ValueError(f"fidelity {f} outside [0, 1] beyond slack")
    return min(max(f, 0.0), 1.0)


def partial_trace(rho: DensityMatrix, keep, dims) -> DensityMatrix:
    """Reduced state on the kept subsystems.

    `dims` lists per-subsystem dimensions whose product must equal
    rho.dim; `keep` is the set of subsystem indices to retain, in
    ascending tensor order.
    """
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != rho.dim:
        raise ValueError(f"product of dims {dims} does not equal state "
                         f"dimension {rho.dim}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError("keep indices out of range")
    n = len(dims)
    tensor_rho = rho.matrix.reshape(dims + dims)
    # contract each traced subsystem's ket index with its bra index
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket = list(letters[:n])
    bra = list(letters[n:2 * n])
    for k in range(n):
        if k not in keep:
            bra[k] = ket[k]
    out_idx = "".join(ket[k] for k in keep) + "".join(
        bra[k] for k in keep)
    reduced = np.einsum("".join(ket + bra) + "->" + out_idx, tensor_rho)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return DensityMatrix(reduced.reshape(d_keep, d_keep))


def phase_flip_channel(p: float) -> KrausChannel:
    """Single-qubit channel rho -> (1-p) rho + p Z rho Z."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability {p} outside [0, 1]")
    return KrausChannel((np.sqrt(1 - p) * I2, np.sqrt(p) * SZ))


def phase_flip_on(p: float, target: int, dims: tuple[int, ...]) -> KrausChannel:
    """Phase flip on one qubit subsystem of a product space."""
    if dims[target] != 2:
        raise ValueError("phase flip target must be a qubit")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"flip probability {p} outside [0, 1]")
    return KrausChannel((
        np.sqrt(1 - p) * np.eye(int(np.prod(dims)), dtype=complex),
        np.sqrt(p) * op_on(SZ, target, dims),
    ))


def depolarize(rho: DensityMatrix, eps: float) -> DensityMatrix:
    """Global depolarization rho -> (1-eps) rho + eps 1/d."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"depolarization strength {eps} outside [0, 1]")
    d = rho.dim
    return DensityMatrix((1 - eps) * rho.matrix + eps * np.eye(d) / d)
