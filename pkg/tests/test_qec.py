"""Phase-flip code: encoding, decoding, the analytic sweep curves and the
Monte-Carlo mode."""

import numpy as np
import pytest

from spinreg.linalg import (
    DensityMatrix,
    PureState,
    apply_unitary,
    mat_close,
    op_on,
    partial_trace,
    state_fidelity,
    tensor,
)
from spinreg.qec import (
    BIT_BASIS,
    EXACT,
    MONTE_CARLO,
    DATA_QUBIT,
    ErrorSpec,
    QecResult,
    apply_errors,
    data_qubit_state,
    decode_and_correct,
    decoding_unitary,
    encode,
    encoding_unitary,
    qec_process_fidelity,
    sweep,
    variant_label,
)
from spinreg.register import RegisterConfig

RNG = np.random.default_rng(31)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
KET_YP = np.array([1, 1j], dtype=complex) / np.sqrt(2)
KET_YM = np.array([1, -1j], dtype=complex) / np.sqrt(2)


def random_qubit(rng=RNG):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return PureState(v / np.linalg.norm(v))


def f_corrected(p):
    return 1 - 3 * p ** 2 + 2 * p ** 3


# ---------------------------------------------------------------- encoding

def test_encode_ground_state():
    out = encode(PureState.qubit(1, 0))
    target = tensor(KET_YP, KET_YP, KET_YP).reshape(-1)
    assert abs(np.vdot(target, out.amplitudes)) ** 2 == pytest.approx(
        1.0, abs=1e-9)


def test_encode_equal_superposition():
    out = encode(PureState.qubit(1 / np.sqrt(2), 1 / np.sqrt(2)))
    target = (tensor(KET_YP, KET_YP, KET_YP)
              + tensor(KET_YM, KET_YM, KET_YM)).reshape(-1) / np.sqrt(2)
    assert abs(np.vdot(target, out.amplitudes)) ** 2 == pytest.approx(
        1.0, abs=1e-9)


def test_encode_generic_amplitudes_match_codeword():
    alpha, beta = 1 / np.sqrt(3), np.sqrt(2 / 3) * 1j
    out = encode(PureState.qubit(alpha, beta))
    target = (alpha * tensor(KET_YP, KET_YP, KET_YP)
              + beta * tensor(KET_YM, KET_YM, KET_YM)).reshape(-1)
    assert abs(np.vdot(target, out.amplitudes)) ** 2 == pytest.approx(
        1.0, abs=1e-9)


def test_encode_rejects_multi_qubit_input():
    with pytest.raises(ValueError):
        encode(PureState.computational(0, 4))


# ------------------------------------------------------------ error channel

def test_errors_p0_is_identity():
    rho = encode(random_qubit()).density()
    out = apply_errors(rho, ErrorSpec(p=0.0))
    assert mat_close(out.matrix, rho.matrix, 1e-12)


def test_errors_p1_is_deterministic_zzz():
    rho = encode(random_qubit()).density()
    out = apply_errors(rho, ErrorSpec(p=1.0))
    zzz = tensor(_Z, _Z, _Z)
    assert mat_close(out.matrix, zzz @ rho.matrix @ zzz, 1e-12)


def test_errors_half_on_one_qubit_kills_odd_coherences():
    # oracle: expand (1-p) rho + p Z2 rho Z2 at p = 1/2 entrywise
    rho = encode(random_qubit()).density()
    out = apply_errors(rho, ErrorSpec(p=0.5, targets=("q2",)))
    z2 = op_on(_Z, 1, (2, 2, 2))
    oracle = 0.5 * rho.matrix + 0.5 * z2 @ rho.matrix @ z2
    assert mat_close(out.matrix, oracle, 1e-12)
    # coherences between opposite q2 values are gone
    assert abs(out.matrix[0b000, 0b010]) < 1e-12


def test_error_spec_validation():
    with pytest.raises(ValueError):
        ErrorSpec(p=1.5)
    with pytest.raises(ValueError):
        ErrorSpec(p=0.1, targets=())
    with pytest.raises(ValueError):
        ErrorSpec(p=0.1, targets=("q4",))
    with pytest.raises(ValueError):
        ErrorSpec(p=0.1, mode=MONTE_CARLO)  # missing trials/seed
    with pytest.raises(ValueError):
        QecResult(p=0.1, fidelity=1.5, mode=EXACT, corrected=True,
                  targets=(2,))


# ---------------------------------------------------------------- decoding

def test_no_error_roundtrip_plus_state():
    psi = PureState.qubit(1 / np.sqrt(2), 1 / np.sqrt(2))
    out = decode_and_correct(encode(psi).density())
    expect = tensor(np.array([1, 0]), np.array([1, 0]),
                    psi.amplitudes).reshape(-1)
    assert state_fidelity(out, PureState(expect)) == pytest.approx(
        1.0, abs=1e-9)


def test_single_flip_on_data_qubit_corrected():
    psi = PureState.qubit(1 / np.sqrt(2), 1j / np.sqrt(2))
    rho = encode(psi).density()
    rho = apply_errors(rho, ErrorSpec(p=1.0, targets=("q3",)))
    out = decode_and_correct(rho)
    assert state_fidelity(data_qubit_state(out), psi) == pytest.approx(
        1.0, abs=1e-9)


@pytest.mark.parametrize("target", ["q1", "q2", "q3"])
def test_any_single_deterministic_flip_corrected(target):
    psi = random_qubit()
    rho = apply_errors(encode(psi).density(),
                       ErrorSpec(p=1.0, targets=(target,)))
    out = decode_and_correct(rho)
    assert state_fidelity(data_qubit_state(out), psi) == pytest.approx(
        1.0, abs=1e-9)


def test_double_flip_miscorrects_to_x_flipped_input():
    psi = random_qubit()
    rho = apply_errors(encode(psi).density(),
                       ErrorSpec(p=1.0, targets=("q1", "q2")))
    out = decode_and_correct(rho)
    flipped = PureState(_X @ psi.amplitudes)
    assert state_fidelity(data_qubit_state(out), flipped) == pytest.approx(
        1.0, abs=1e-9)


def test_encode_then_decode_is_identity_on_data():
    for _ in range(100):
        psi = random_qubit()
        out = decode_and_correct(encode(psi).density())
        assert state_fidelity(data_qubit_state(out), psi) > 1 - 1e-9


def test_bit_basis_flag_roundtrip_and_x_error_correction():
    # the bit-flip variant differs only by dropping the basis rotations
    psi = random_qubit()
    enc = encode(psi, basis=BIT_BASIS)
    rho = apply_unitary(enc.density(), op_on(_X, 1, (2, 2, 2)))
    out = apply_unitary(rho, decoding_unitary(True, BIT_BASIS))
    assert state_fidelity(partial_trace(out, (DATA_QUBIT,), (2, 2, 2)),
                          psi) == pytest.approx(1.0, abs=1e-9)


# ------------------------------------------------------------ fidelity runs

def test_exact_fidelity_reference_points():
    assert qec_process_fidelity(ErrorSpec(p=0.5)).fidelity == pytest.approx(
        0.5, abs=1e-12)
    r = qec_process_fidelity(ErrorSpec(p=0.3, targets=("q3",)),
                             corrected=False)
    assert r.fidelity == pytest.approx(0.7, abs=1e-12)
    for p in (0.0, 0.2, 0.7, 1.0):
        r = qec_process_fidelity(ErrorSpec(p=p, targets=("q3",)))
        assert r.fidelity == pytest.approx(1.0, abs=1e-9)


def test_exact_sweep_matches_analytic_curves():
    grid = [round(0.1 * i, 1) for i in range(11)]
    res = sweep(grid, [(True, ("q1", "q2", "q3")), (False, ("q3",))])
    corrected = [r for r in res if r.corrected]
    uncorrected = [r for r in res if not r.corrected]
    for r in corrected:
        assert abs(r.fidelity - f_corrected(r.p)) < 1e-9
    for r in uncorrected:
        assert abs(r.fidelity - (1 - r.p)) < 1e-9
    # endpoints
    assert corrected[0].fidelity == pytest.approx(1.0, abs=1e-12)
    assert corrected[-1].fidelity == pytest.approx(0.0, abs=1e-12)
    assert uncorrected[0].fidelity == pytest.approx(1.0, abs=1e-12)
    assert uncorrected[-1].fidelity == pytest.approx(0.0, abs=1e-12)


def test_monte_carlo_converges_to_exact():
    spec = ErrorSpec(p=0.2, mode=MONTE_CARLO, rng_seed=42, trials=10_000)
    r = qec_process_fidelity(spec)
    assert r.trials_used == 10_000
    assert r.standard_error is not None and r.standard_error > 0
    assert abs(r.fidelity - f_corrected(0.2)) < 5 * r.standard_error


@pytest.mark.parametrize("p", [0.1, 0.2, 0.5])
def test_monte_carlo_within_5_se_across_grid(p):
    spec = ErrorSpec(p=p, mode=MONTE_CARLO, rng_seed=7, trials=10_000)
    r = qec_process_fidelity(spec)
    exact = qec_process_fidelity(ErrorSpec(p=p)).fidelity
    assert abs(r.fidelity - exact) < 5 * max(r.standard_error, 1e-12)


def test_effective_channel_is_pauli_diagonal():
    from spinreg.qec import _error_for_engine, _make_process
    from spinreg.tomo import chi_from_process
    spec = ErrorSpec(p=0.37)
    process = _make_process(_error_for_engine(spec, "abstract"), True,
                            "abstract", None)
    chi = chi_from_process(process)
    off = chi.chi - np.diag(np.diag(chi.chi))
    assert np.max(np.abs(off)) < 1e-9
    assert chi.chi11 == pytest.approx(f_corrected(0.37), abs=1e-10)


def test_register_engine_agrees_with_abstract():
    cfg = RegisterConfig()
    for p in (0.0, 0.25, 0.8):
        fa = qec_process_fidelity(ErrorSpec(p=p), engine="abstract").fidelity
        fr = qec_process_fidelity(ErrorSpec(p=p), engine="register",
                                  cfg=cfg).fidelity
        assert abs(fa - fr) < 1e-9
    spec = ErrorSpec(p=0.3, targets=("q2",))
    fa = qec_process_fidelity(spec, corrected=False).fidelity
    fr = qec_process_fidelity(spec, corrected=False, engine="register",
                              cfg=cfg).fidelity
    assert abs(fa - fr) < 1e-9


def test_register_circuits_reproduce_abstract_unitaries():
    from spinreg.qec import register_decode_circuit, register_encode_circuit
    from spinreg.register import nuclear_block
    cfg = RegisterConfig()
    enc_reg = nuclear_block(register_encode_circuit(cfg).unitary())
    assert np.max(np.abs(enc_reg - encoding_unitary())) < 1e-9
    dec_reg = nuclear_block(register_decode_circuit(cfg, True).unitary())
    assert np.max(np.abs(dec_reg - decoding_unitary(True))) < 1e-9


def test_sweep_monte_carlo_is_seed_deterministic():
    grid = [0.1, 0.3]
    variants = [(True, ("q1", "q2", "q3"))]
    a = sweep(grid, variants, mode=MONTE_CARLO, trials=500, rng_seed=9)
    b = sweep(grid, variants, mode=MONTE_CARLO, trials=500, rng_seed=9)
    assert [r.fidelity for r in a] == [r.fidelity for r in b]


def test_variant_label_format():
    assert variant_label(True, ("q1", "q2", "q3")) == "corrected:q1+q2+q3"
    assert variant_label(False, ("q3",)) == "uncorrected:q3"


def test_sweep_rejects_empty_grid():
    with pytest.raises(ValueError):
        sweep([], [(True, ("q3",))])
