"""Three-qubit entangled states of the nuclear register and the Mermin test.

The GHZ-class target state is (|0 y- y->  + i |1 y+ y+>)/sqrt(2) with
y+- = (|0> +- i|1>)/sqrt(2); it is prepared from |000> by local pi/2
rotations around one electron-mediated conditional phase gate, and it is
the frame in which the Mermin combination

    |<XXZ> + <XZX> + <YXX> - <YZZ>|  <=  2   (local realism)

reaches the quantum maximum of 4.  Each term is measured by transforming
it onto <1 1 Z> with local rotations plus a conditional phase on the
|011> and |101> configurations; both evaluation routes are computed and
cross-checked here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DensityMatrix,
    I2,
    PAULI,
    SY,
    PureState,
    expectation,
    partial_trace,
    state_fidelity,
    tensor,
)
from .register import (
    CARBON1,
    CARBON2,
    ELECTRON,
    NITROGEN,
    Circuit,
    GateOp,
    NuclearLabel,
    RegisterConfig,
    cphase,
    nuclear_rotation,
)

_KET_YP = np.array([1, 1j], dtype=complex) / np.sqrt(2)
_KET_YM = np.array([1, -1j], dtype=complex) / np.sqrt(2)

MERMIN_TERMS = ("XXZ", "XZX", "YXX", "YZZ")
MERMIN_SIGNS = {"XXZ": 1, "XZX": 1, "YXX": 1, "YZZ": -1}

# pre-measurement sequences per term, listed in time order; rotations are
# (subsystem, axis, angle) and None marks the conditional phase slot
_TRANSFORM_STEPS = {
    "XXZ": [(NITROGEN, "y", np.pi / 2), (CARBON1, "y", np.pi / 2),
            (CARBON2, "y", -np.pi / 2), None, (CARBON2, "y", np.pi / 2)],
    "XZX": [(NITROGEN, "y", np.pi / 2), None, (CARBON2, "y", np.pi / 2)],
    "YXX": [(NITROGEN, "x", np.pi / 2), (CARBON1, "y", np.pi / 2),
            None, (CARBON2, "y", np.pi / 2)],
    "YZZ": [(NITROGEN, "x", np.pi / 2), (CARBON2, "y", -np.pi / 2),
            None, (CARBON2, "y", np.pi / 2)],
}
_MERMIN_CPHASE_CONDITION = ("011", "101")


def ghz_target() -> PureState:
    """(|0 y- y-> + i |1 y+ y+>)/sqrt(2) on the three nuclear qubits."""
    amps = (tensor(np.array([1, 0]), _KET_YM, _KET_YM).reshape(-1)
            + 1j * tensor(np.array([0, 1]), _KET_YP, _KET_YP).reshape(-1))
    return PureState(amps / np.sqrt(2))


def w_target() -> PureState:
    amps = np.zeros(8, dtype=complex)
    amps[[0b001, 0b010, 0b100]] = 1 / np.sqrt(3)
    return PureState(amps)


def _rot_op(cfg, subsystem, axis, angle) -> GateOp:
    return GateOp("local-rotation", (subsystem,),
                  {"angle": angle, "axis": axis},
                  matrix=nuclear_rotation(cfg, subsystem, angle, axis))


def _cphase_op(cfg, condition) -> GateOp:
    labels = tuple(NuclearLabel.from_bits(b) for b in condition)
    return GateOp("cphase", (ELECTRON,), {"condition": labels},
                  matrix=cphase(cfg, labels))


def ghz_circuit(cfg: RegisterConfig | None = None) -> Circuit:
    """Preparation sequence for the GHZ-class state from |000>.

    pi/2 rotations on all three spins, one conditional phase on the
    |100> and |111> configurations, then local frame rotations.
    """
    cfg = cfg or RegisterConfig()
    circ = Circuit(dims=cfg.register_dims())
    for q in (NITROGEN, CARBON1, CARBON2):
        circ.append(_rot_op(cfg, q, "y", np.pi / 2))
    circ.append(_cphase_op(cfg, ("100", "111")))
    for q in (CARBON1, CARBON2):
        circ.append(_rot_op(cfg, q, "y", -np.pi / 2))
    circ.append(_rot_op(cfg, NITROGEN, "z", np.pi / 2))
    for q in (CARBON1, CARBON2):
        circ.append(_rot_op(cfg, q, "x", np.pi / 2))
    return circ


def w_circuit(cfg: RegisterConfig | None = None) -> Circuit:
    """Preparation sequence for the W state from |000>.

    A y rotation puts amplitude 1/sqrt(3) on |100>; a controlled pi/2
    rotation (two conditional phases around local y rotations) splits the
    remainder equally between |010> and |001>; a final controlled flip
    moves |000> to |001>.
    """
    cfg = cfg or RegisterConfig()
    theta1 = 2 * np.arcsin(1 / np.sqrt(3))
    circ = Circuit(dims=cfg.register_dims())
    circ.append(_rot_op(cfg, NITROGEN, "y", theta1))
    # controlled R_y(pi/2) on carbon1 for nitrogen = 0
    cz_c1 = ("010", "011")
    circ.append(_cphase_op(cfg, cz_c1))
    circ.append(_rot_op(cfg, CARBON1, "y", -np.pi / 4))
    circ.append(_cphase_op(cfg, cz_c1))
    circ.append(_rot_op(cfg, CARBON1, "y", np.pi / 4))
    # flip carbon2 where nitrogen = carbon1 = 0
    circ.append(_rot_op(cfg, CARBON2, "y", -np.pi / 2))
    circ.append(_cphase_op(cfg, ("001",)))
    circ.append(_rot_op(cfg, CARBON2, "y", np.pi / 2))
    return circ


def _prepare(circ: Circuit, cfg: RegisterConfig) -> DensityMatrix:
    dim = circ.dim
    rho0 = PureState.computational(0, dim).density()
    return circ.apply(rho0)


def prepare_ghz_register(cfg: RegisterConfig | None = None) -> DensityMatrix:
    """Full-register state after GHZ preparation (electron included)."""
    cfg = cfg or RegisterConfig()
    return _prepare(ghz_circuit(cfg), cfg)


def prepare_ghz(cfg: RegisterConfig | None = None) -> DensityMatrix:
    """GHZ-class state of the three nuclear qubits."""
    cfg = cfg or RegisterConfig()
    full = prepare_ghz_register(cfg)
    return partial_trace(full, (1, 2, 3), cfg.register_dims())


def prepare_w_register(cfg: RegisterConfig | None = None) -> DensityMatrix:
    cfg = cfg or RegisterConfig()
    return _prepare(w_circuit(cfg), cfg)


def prepare_w(cfg: RegisterConfig | None = None) -> DensityMatrix:
    """W state (|001> + |010> + |100>)/sqrt(3) of the nuclear qubits."""
    cfg = cfg or RegisterConfig()
    full = prepare_w_register(cfg)
    return partial_trace(full, (1, 2, 3), cfg.register_dims())


@dataclass(frozen=True)
class MerminSetting:
    """One Mermin term: its observable, transform circuit and sign."""

    term: str
    transform: Circuit
    sign: int

    @property
    def observable(self) -> np.ndarray:
        return tensor(*(PAULI[c] for c in self.term))


def mermin_settings(cfg: RegisterConfig | None = None) -> list[MerminSetting]:
    """The four measurement settings, with sign -1 on YZZ only."""
    cfg = cfg or RegisterConfig()
    settings = []
    for term in MERMIN_TERMS:
        circ = Circuit(dims=cfg.register_dims())
        for step in _TRANSFORM_STEPS[term]:
            if step is None:
                circ.append(_cphase_op(cfg, _MERMIN_CPHASE_CONDITION))
            else:
                q, axis, angle = step
                circ.append(_rot_op(cfg, q, axis, angle))
        settings.append(MerminSetting(term, circ, MERMIN_SIGNS[term]))
    return settings


def _transformed_nuclear(rho: DensityMatrix, setting: MerminSetting,
                         cfg: RegisterConfig) -> DensityMatrix:
    """Embed a nuclear state with the electron in |0>, run the transform,
    and reduce back to the nuclei."""
    embedded = DensityMatrix(tensor(np.array([[1, 0], [0, 0]]), rho.matrix))
    out = setting.transform.apply(embedded)
    return partial_trace(out, (1, 2, 3), cfg.register_dims())


def mermin_value(rho: DensityMatrix,
                 cfg: RegisterConfig | None = None) -> float:
    """|<XXZ> + <XZX> + <YXX> - <YZZ>| for a three-qubit state.

    Evaluated both directly and through the transform circuits followed
    by a <1 1 Z> measurement; the two routes must agree within 1e-9.
    """
    if rho.dim != 8:
        raise ValueError("Mermin value requires a three-qubit state")
    cfg = cfg or RegisterConfig()
    iiz = tensor(I2, I2, PAULI["Z"])
    direct = 0.0
    transformed = 0.0
    for setting in mermin_settings(cfg):
        direct += setting.sign * expectation(rho, setting.observable)
        out = _transformed_nuclear(rho, setting, cfg)
        transformed += setting.sign * expectation(out, iiz)
    if abs(abs(direct) - abs(transformed)) > 1e-9:
        raise AssertionError(
            f"direct ({direct}) and transform ({transformed}) evaluations "
            "disagree beyond 1e-9")
    return abs(direct)


def mermin_sampled(rho: DensityMatrix, shots: int, rng_seed: int,
                   cfg: RegisterConfig | None = None) -> tuple[float, float]:
    """Finite-shot Mermin estimate with propagated binomial errors.

    Each setting is sampled in the sigma_z basis of the last qubit after
    its transform; returns (|signed sum|, standard error).
    """
    if shots < 1:
        raise ValueError("need at least one shot per setting")
    if rho.dim != 8:
        raise ValueError("Mermin sampling requires a three-qubit state")
    cfg = cfg or RegisterConfig()
    rng = np.random.default_rng(rng_seed)
    total = 0.0
    var = 0.0
    for setting in mermin_settings(cfg):
        out = _transformed_nuclear(rho, setting, cfg)
        pops = np.clip(np.real(np.diag(out.matrix)), 0, None)
        pops = pops / pops.sum()
        p_plus = float(pops[np.arange(8) % 2 == 0].sum())  # last-qubit bit 0
        n_plus = rng.binomial(shots, min(max(p_plus, 0.0), 1.0))
        est = 2 * n_plus / shots - 1
        phat = n_plus / shots
        total += setting.sign * est
        var += 4 * phat * (1 - phat) / shots
    return abs(total), float(np.sqrt(var))


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state."""
    if rho.dim != 4:
        raise ValueError("concurrence is defined for two qubits here")
    yy = tensor(SY, SY)
    m = rho.matrix @ yy @ rho.matrix.conj() @ yy
    evals = np.sort(np.abs(np.linalg.eigvals(m)))[::-1]
    roots = np.sqrt(np.clip(evals, 0, None))
    return float(max(0.0, roots[0] - roots[1] - roots[2] - roots[3]))


def ghz_fidelity(rho: DensityMatrix) -> float:
    return state_fidelity(rho, ghz_target())


def w_fidelity(rho: DensityMatrix) -> float:
    return state_fidelity(rho, w_target())
