"""Pauli-basis state tomography and single-qubit process tomography.

A density matrix is expanded as rho = sum_i a_i A_i over products of
Pauli operators with a_i = Tr(A_i rho)/2^n.  A single-qubit process is
expanded as E(rho) = sum_mn chi_mn A_m rho A_n^dag over {1, X, Y, Z};
chi_11 is the fidelity against the identity process.  chi_from_process
reconstructs the full chi matrix from four probe states and serves as
the brute-force oracle for the six-expectation shortcut used by the
error-correction pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .linalg import (
    ATOL_HERMITIAN,
    DensityMatrix,
    I2,
    PAULI,
    is_hermitian,
    rotation,
    tensor,
)

PAULI_AXES = "IXYZ"

# cardinal single-qubit states |z+>, |z->, |x+>, |x->, |y+>, |y->
_CARDINAL = {
    "z": np.array([1, 0], dtype=complex),
    "-z": np.array([0, 1], dtype=complex),
    "x": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "-x": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "y": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "-y": np.array([1, -1j], dtype=complex) / np.sqrt(2),
}


def cardinal_state(name: str) -> DensityMatrix:
    v = _CARDINAL[name]
    return DensityMatrix(np.outer(v, v.conj()))


def _n_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if 2 ** n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def pauli_strings(n: int) -> list[str]:
    """All 4^n Pauli product labels for n qubits, e.g. 'XZI'."""
    return ["".join(p) for p in product(PAULI_AXES, repeat=n)]


def pauli_matrix(label: str) -> np.ndarray:
    if not label or any(c not in PAULI_AXES for c in label):
        raise ValueError(f"bad Pauli string {label!r}")
    return tensor(*(PAULI[c] for c in label))


def state_tomography_exact(rho: DensityMatrix) -> dict[str, float]:
    """Coefficients a_i = Tr(A_i rho)/2^n of the Pauli expansion."""
    n = _n_qubits(rho.dim)
    coeffs = {}
    for label in pauli_strings(n):
        val = np.trace(pauli_matrix(label) @ rho.matrix)
        if abs(val.imag) > 1e-10:
            raise ValueError(f"coefficient of {label} has imaginary part")
        coeffs[label] = float(val.real) / 2 ** n
    return coeffs


def reconstruct_state(coeffs: dict[str, float]) -> np.ndarray:
    """sum_i a_i A_i from a coefficient map (inverse of the expansion)."""
    labels = list(coeffs)
    n = len(labels[0])
    out = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for label, a in coeffs.items():
        out += a * pauli_matrix(label)
    return out


# measuring X after R_y(-pi/2), or Y after R_x(pi/2), equals measuring Z
_BASIS_ROTATION = {
    "I": I2,
    "Z": I2,
    "X": rotation("y", -np.pi / 2),
    "Y": rotation("x", np.pi / 2),
}


@dataclass(frozen=True)
class TomographyEstimate:
    """Sampled reconstruction; may be non-PSD at finite shots."""

    matrix: np.ndarray
    psd: bool
    min_eigenvalue: float


def state_tomography_sampled(rho: DensityMatrix, shots_per_setting: int,
                             rng_seed: int) -> TomographyEstimate:
    """Simulated measurement tomography.

    Every non-identity Pauli string is measured by rotating each qubit
    into the sigma_z basis and sampling joint outcomes; the state is
    rebuilt from the estimated coefficients and returned raw, together
    with a positivity flag (finite statistics can and do produce
    negative eigenvalues).
    """
    if shots_per_setting < 1:
        raise ValueError("need at least one shot per setting")
    n = _n_qubits(rho.dim)
    rng = np.random.default_rng(rng_seed)
    dim = rho.dim
    # outcome parity of each basis state restricted to a support mask
    bits = ((np.arange(dim)[:, None] >> np.arange(n - 1, -1, -1)) & 1)
    coeffs = {"I" * n: 1.0 / dim}
    for label in pauli_strings(n):
        if label == "I" * n:
            continue
        u = tensor(*(_BASIS_ROTATION[c] for c in label))
        probs = np.clip(np.real(np.diag(u @ rho.matrix @ u.conj().T)), 0, None)
        probs = probs / probs.sum()
        counts = rng.multinomial(shots_per_setting, probs)
        support = np.array([c != "I" for c in label])
        signs = (-1.0) ** bits[:, support].sum(axis=1)
        coeffs[label] = float((counts * signs).sum()
                              / shots_per_setting) / dim
    est = reconstruct_state(coeffs)
    est = (est + est.conj().T) / 2
    evals = np.linalg.eigvalsh(est)
    return TomographyEstimate(matrix=est,
                              psd=bool(evals.min() >= -1e-9),
                              min_eigenvalue=float(evals.min()))


@dataclass(frozen=True)
class SixPointData:
    """Expectation values from the six-state process characterization.

    r_zz is <sigma_z> after the process on input |z+>, r_mz_z the same on
    input |z->, and likewise for the x and y axes.
    """

    r_zz: float
    r_mz_z: float
    r_xx: float
    r_mx_x: float
    r_yy: float
    r_my_y: float

    def __post_init__(self):
        for name, val in self.__dict__.items():
            if not -1 - 1e-9 <= val <= 1 + 1e-9:
                raise ValueError(f"{name} = {val} outside [-1, 1]")


def chi11_from_sixpoint(data: SixPointData) -> float:
    """Identity-process weight chi_11 from the six expectation values.

    For a Pauli-diagonal process the axis responses are
        r_zz - r_mz_z = 2 (chi11 - chi22 - chi33 + chi44)
        r_xx - r_mx_x = 2 (chi11 + chi22 - chi33 - chi44)
        r_yy - r_my_y = 2 (chi11 - chi22 + chi33 - chi44)
    because an off-axis Pauli component inverts the measured expectation
    (e.g. an X error flips <Z>).  Summing and applying the trace
    constraint chi11 + chi22 + chi33 + chi44 = 1 gives S = 8 chi11 - 2.
    A shortcut that keeps only same-axis chi terms in each row leads to
    (S - 2)/4 instead; it disagrees with the chi_from_process oracle on
    any non-identity Pauli-diagonal channel (full dephasing: oracle 1/2,
    shortcut 0), so the oracle-consistent form below is used.  For
    processes with off-diagonal chi only the oracle is authoritative.
    """
    s = (data.r_zz - data.r_mz_z + data.r_xx - data.r_mx_x
         + data.r_yy - data.r_my_y)
    chi11 = (s + 2.0) / 8.0
    return min(max(chi11, 0.0), 1.0 + 1e-9)


@dataclass(frozen=True)
class ProcessMatrix:
    """4x4 chi matrix in the {1, X, Y, Z} operator basis."""

    chi: np.ndarray
    atol_hermitian: float = field(default=ATOL_HERMITIAN, repr=False)
    atol_trace: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        chi = np.array(self.chi, dtype=complex)
        if chi.shape != (4, 4):
            raise ValueError("chi must be 4x4")
        if not is_hermitian(chi, self.atol_hermitian):
            raise ValueError("chi is not Hermitian within tolerance")
        tr = np.trace(chi)
        if abs(tr - 1.0) > self.atol_trace:
            raise ValueError(f"chi trace {tr} deviates from 1 (trace-"
                             "preserving process expected)")
        chi.flags.writeable = False
        object.__setattr__(self, "chi", chi)

    @property
    def chi11(self) -> float:
        return float(self.chi[0, 0].real)


def chi_identity() -> ProcessMatrix:
    return ProcessMatrix(np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex))


_PROBES = ("z", "-z", "x", "y")
_CHECKS = ("-x", "-y")


def chi_from_process(process) -> ProcessMatrix:
    """Reconstruct chi by probing a single-qubit process.

    `process` maps DensityMatrix -> DensityMatrix.  The four probe
    states fix the linear map; two further states plus the maximally
    mixed state cross-check linearity and trace preservation (residual
    above 1e-8 raises).
    """
    paulis = [PAULI[c] for c in "IXYZ"]
    m = np.zeros((16, 16), dtype=complex)
    b = np.zeros(16, dtype=complex)
    for j, name in enumerate(_PROBES):
        rho_in = cardinal_state(name)
        out = process(rho_in)
        if not isinstance(out, DensityMatrix) or out.dim != 2:
            raise ValueError("process must return single-qubit states")
        b[4 * j:4 * j + 4] = out.matrix.reshape(-1)
        for mi in range(4):
            for ni in range(4):
                resp = paulis[mi] @ rho_in.matrix @ paulis[ni].conj().T
                m[4 * j:4 * j + 4, 4 * mi + ni] = resp.reshape(-1)
    chi_vec, *_ = np.linalg.lstsq(m, b, rcond=None)
    chi = chi_vec.reshape(4, 4)
    chi = (chi + chi.conj().T) / 2

    def predicted(rho_in):
        out = np.zeros((2, 2), dtype=complex)
        for mi in range(4):
            for ni in range(4):
                out += chi[mi, ni] * (paulis[mi] @ rho_in
                                      @ paulis[ni].conj().T)
        return out

    residual = 0.0
    for name in _PROBES + _CHECKS:
        rho_in = cardinal_state(name)
        residual = max(residual, float(np.max(np.abs(
            predicted(rho_in.matrix) - process(rho_in).matrix))))
    mixed = DensityMatrix(np.eye(2, dtype=complex) / 2)
    residual = max(residual, float(np.max(np.abs(
        predicted(mixed.matrix) - process(mixed).matrix))))
    if residual > 1e-8:
        raise ValueError(f"process is not linear and trace preserving: "
                         f"consistency residual {residual}")
    return ProcessMatrix(chi)


def sixpoint_from_process(process) -> SixPointData:
    """Run the six-state protocol: init each cardinal state, apply the
    process, measure along the same axis."""
    vals = {}
    for axis in ("z", "x", "y"):
        obs = PAULI[axis.upper()]
        for prefix, name in (("", axis), ("m", "-" + axis)):
            out = process(cardinal_state(name))
            vals[f"r_{prefix}{axis}_{axis}" if prefix else f"r_{axis}{axis}"] \
                = float(np.real(np.trace(obs @ out.matrix)))
    return SixPointData(r_zz=vals["r_zz"], r_mz_z=vals["r_mz_z"],
                        r_xx=vals["r_xx"], r_mx_x=vals["r_mx_x"],
                        r_yy=vals["r_yy"], r_my_y=vals["r_my_y"])


def process_fidelity(chi: ProcessMatrix, chi_ideal: ProcessMatrix) -> float:
    """F = Tr(chi_ideal chi); equals chi_11 when the ideal is identity."""
    return float(np.real(np.trace(chi_ideal.chi @ chi.chi)))


def coefficients_to_json_dict(coeffs: dict[str, float]) -> dict:
    return {k: float(v) for k, v in sorted(coeffs.items())}


def chi_to_json_dict(chi: ProcessMatrix) -> dict:
    return {"real": np.real(chi.chi).tolist(),
            "imag": np.imag(chi.chi).tolist()}
