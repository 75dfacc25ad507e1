"""Two-tone piecewise-constant pulse optimization for the line-selective
conditional phase gate.

The electron transition splits into one line per nuclear configuration.
A control pulse made of fixed-duration segments, each carrying amplitude
and phase for two microwave tones (one per nitrogen manifold), must
drive every line to plus or minus identity: -1 on the configurations the
gate conditions on, +1 elsewhere, up to one global phase common to all
lines, and it must do so over a +-20 kHz detuning band.

Propagation is exact per sub-slice (each segment is cut into n_sub
slices so the second tone's rotating phase is resolved), the fidelity is
the phase-invariant trace overlap averaged over lines, and optimization
is monotone gradient ascent with finite-difference gradients, a
curvature-informed (L-BFGS style) step direction and a backtracking line
search.  Because each ensemble member's fidelity is phase invariant on
its own, optimizing the full detuning band directly can lock different
members into incompatible global phases; the optimizer therefore ramps
the band up over a few continuation stages before the final ascent on
the requested ensemble, whose history is returned.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .register import (
    NuclearLabel,
    QUBIT_SUBSPACE,
    RegisterConfig,
    nuclear_labels,
    transition_offset,
    _normalize_condition,
)

DEFAULT_SEGMENT_DURATION = 1.46e-6
DEFAULT_AMP_MAX = 2 * np.pi * 250e3
DEFAULT_ENSEMBLE = (-20e3, 0.0, 20e3)

# continuation schedule: (band fraction, points, tolerance, iteration cap)
_STAGES = (
    (0.0, 1, 3e-4, 800),
    (0.5, 3, 2e-3, 800),
    (1.0, 5, 2e-3, 2000),
    (1.0, 9, 2e-3, 2000),
)


@dataclass(frozen=True)
class PulseSequence:
    """Piecewise-constant two-tone control pulse.

    Each segment is (amp1, phase1, amp2, phase2) with amplitudes in rad/s
    and phases in rad; carriers are the two tone offsets in Hz relative
    to the bare electron transition.
    """

    segments: tuple
    carrier1: float
    carrier2: float
    segment_duration: float = DEFAULT_SEGMENT_DURATION

    def __post_init__(self):
        if self.segment_duration <= 0:
            raise ValueError("segment duration must be positive")
        segs = tuple(tuple(float(v) for v in row) for row in self.segments)
        if not segs or any(len(row) != 4 for row in segs):
            raise ValueError("segments must be (amp1, phase1, amp2, phase2)")
        if any(row[0] < 0 or row[2] < 0 for row in segs):
            raise ValueError("amplitudes must be nonnegative")
        object.__setattr__(self, "segments", segs)

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def duration(self) -> float:
        return self.n_segments * self.segment_duration

    def max_amplitude(self) -> float:
        return max(max(row[0], row[2]) for row in self.segments)

    def to_json(self) -> str:
        return json.dumps({
            "segment_duration_s": self.segment_duration,
            "carrier1_hz": self.carrier1,
            "carrier2_hz": self.carrier2,
            "segments": [{"amp1": a1, "phase1": p1, "amp2": a2, "phase2": p2}
                         for a1, p1, a2, p2 in self.segments],
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PulseSequence":
        doc = json.loads(text)
        segs = tuple((s["amp1"], s["phase1"], s["amp2"], s["phase2"])
                     for s in doc["segments"])
        return cls(segments=segs, carrier1=doc["carrier1_hz"],
                   carrier2=doc["carrier2_hz"],
                   segment_duration=doc["segment_duration_s"])


@dataclass(frozen=True)
class ControlTarget:
    """Target electron phase (+1 or -1 times identity) per register line."""

    phases: dict

    def __post_init__(self):
        if not self.phases:
            raise ValueError("target must assign at least one line")
        norm = {}
        for lab, sign in self.phases.items():
            if not isinstance(lab, NuclearLabel):
                lab = NuclearLabel.from_bits(lab)
            if sign not in (-1, 1):
                raise ValueError("target phases must be +1 or -1")
            norm[lab] = int(sign)
        object.__setattr__(self, "phases", norm)

    @classmethod
    def for_cphase(cls, cfg: RegisterConfig, condition) -> "ControlTarget":
        """-1 on the conditioned configurations, +1 on every other line,
        covering the whole register."""
        flip = set(_normalize_condition(cfg, condition))
        return cls({lab: (-1 if lab in flip else 1)
                    for lab in nuclear_labels(cfg.nitrogen_mode)})

    def lines(self, cfg: RegisterConfig) -> list[NuclearLabel]:
        labs = sorted(self.phases)
        for lab in labs:
            if not lab.valid_for(cfg.nitrogen_mode):
                raise ValueError(f"target line {lab} invalid for register")
        return labs

    def signs(self, cfg: RegisterConfig) -> np.ndarray:
        return np.array([self.phases[lab] for lab in self.lines(cfg)],
                        dtype=float)


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of the pulse search."""

    max_iterations: int = 2000
    step_size: float = 1.0
    backtrack_factor: float = 0.5
    convergence_tol: float = 2e-3
    detuning_ensemble: tuple = DEFAULT_ENSEMBLE
    amp_max: float = DEFAULT_AMP_MAX
    rng_seed: int = 1
    n_segments: int = 40
    segment_duration: float = DEFAULT_SEGMENT_DURATION
    n_sub: int = 32
    fd_step_rel: float = 1e-4
    lbfgs_memory: int = 25
    amp_init_frac: float = 0.05

    def __post_init__(self):
        if not self.detuning_ensemble:
            raise ValueError("detuning ensemble must be nonempty")
        if self.convergence_tol <= 0 or self.fd_step_rel <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack factor must be in (0, 1)")


def default_carriers(cfg: RegisterConfig) -> tuple[float, float]:
    """Tone offsets at the centers of the two nitrogen manifolds."""
    split = 0 if cfg.nitrogen_mode == QUBIT_SUBSPACE else 1
    groups: dict[bool, list[float]] = {True: [], False: []}
    for lab in nuclear_labels(cfg.nitrogen_mode):
        groups[lab.n == split].append(transition_offset(cfg, lab))
    return float(np.mean(groups[True])), float(np.mean(groups[False]))


class _PulseProblem:
    """Vectorized propagation over all (line, detuning) pairs."""

    def __init__(self, cfg, target, detunings, carrier1, carrier2,
                 n_segments, segment_duration, n_sub):
        self.n_seg = int(n_segments)
        self.n_sub = int(n_sub)
        self.seg_dur = float(segment_duration)
        self.dt = self.seg_dur / self.n_sub
        lines = target.lines(cfg)
        self.n_lines = len(lines)
        offsets = np.array([transition_offset(cfg, lab) for lab in lines])
        detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
        self.n_det = detunings.size
        hz = 2 * np.pi * ((offsets - carrier1)[:, None] + detunings[None, :])
        self.hz = hz.reshape(-1)
        self.n_sys = self.hz.size
        self.signs = np.repeat(target.signs(cfg), self.n_det)
        delta12 = carrier2 - carrier1
        t_mid = (np.arange(self.n_seg)[:, None] * self.seg_dur
                 + (np.arange(self.n_sub)[None, :] + 0.5) * self.dt)
        self.tone2_phase = 2 * np.pi * delta12 * t_mid  # (seg, sub)
        self._eye = np.broadcast_to(np.eye(2, dtype=complex),
                                    (self.n_sys, 2, 2))

    # controls are Cartesian per segment: (x1, y1, x2, y2), all rad/s

    def _slice_unitaries(self, hx, hy, hz):
        hz = np.broadcast_to(hz, hx.shape)
        norm = np.sqrt(hx ** 2 + hy ** 2 + hz ** 2)
        theta = norm * self.dt / 2
        safe = np.where(norm > 0, norm, 1.0)
        sinc = np.where(norm > 0, np.sin(theta) / safe, self.dt / 2)
        c = np.cos(theta)
        nx, ny, nz = hx * sinc, hy * sinc, hz * sinc
        u = np.empty(hx.shape + (2, 2), dtype=complex)
        u[..., 0, 0] = c - 1j * nz
        u[..., 0, 1] = -1j * nx - ny
        u[..., 1, 0] = -1j * nx + ny
        u[..., 1, 1] = c + 1j * nz
        return u

    def _segment_fields(self, controls):
        x1, y1, x2, y2 = (controls[:, k][:, None] for k in range(4))
        c, s = np.cos(self.tone2_phase), np.sin(self.tone2_phase)
        hx = x1 + x2 * c - y2 * s
        hy = y1 + x2 * s + y2 * c
        return hx, hy

    def segment_propagators(self, controls):
        hx, hy = self._segment_fields(controls)
        hx = np.broadcast_to(hx, (self.n_sys,) + hx.shape)
        hy = np.broadcast_to(hy, (self.n_sys,) + hy.shape)
        u = self._slice_unitaries(hx, hy, self.hz[:, None, None])
        g = u[:, :, 0]
        for k in range(1, self.n_sub):
            g = u[:, :, k] @ g
        return g

    def one_segment(self, row, seg):
        x1, y1, x2, y2 = row
        c = np.cos(self.tone2_phase[seg])
        s = np.sin(self.tone2_phase[seg])
        hx = np.broadcast_to(x1 + x2 * c - y2 * s, (self.n_sys, self.n_sub))
        hy = np.broadcast_to(y1 + x2 * s + y2 * c, (self.n_sys, self.n_sub))
        u = self._slice_unitaries(hx, hy, self.hz[:, None])
        g = u[:, 0]
        for k in range(1, self.n_sub):
            g = u[:, k] @ g
        return g

    def total_propagators(self, controls):
        g = self.segment_propagators(controls)
        p = g[:, 0]
        for s in range(1, self.n_seg):
            p = g[:, s] @ p
        return p

    def fidelity_of(self, props):
        tr = np.trace(props, axis1=-2, axis2=-1)
        overl = (self.signs * tr).reshape(self.n_lines, self.n_det)
        f = np.abs(overl.sum(axis=0)) ** 2 / (2 * self.n_lines) ** 2
        return float(f.mean())

    def fbar(self, controls):
        return self.fidelity_of(self.total_propagators(controls))

    def fbar_and_grad(self, controls, eps, central=False):
        """Objective and finite-difference gradient.

        Perturbing one parameter touches one segment only, so the
        perturbed propagator reuses cached prefix and suffix products.
        """
        g = self.segment_propagators(controls)
        prefix = [self._eye]
        for s in range(self.n_seg):
            prefix.append(g[:, s] @ prefix[s])
        suffix = [None] * (self.n_seg + 1)
        suffix[self.n_seg] = self._eye
        for s in range(self.n_seg - 1, -1, -1):
            suffix[s] = suffix[s + 1] @ g[:, s]
        f0 = self.fidelity_of(prefix[self.n_seg])
        grad = np.zeros_like(controls)
        for s in range(self.n_seg):
            for j in range(4):
                row = np.array(controls[s])
                row[j] += eps
                f_plus = self.fidelity_of(
                    suffix[s + 1] @ (self.one_segment(row, s) @ prefix[s]))
                if central:
                    row[j] -= 2 * eps
                    f_minus = self.fidelity_of(
                        suffix[s + 1] @ (self.one_segment(row, s)
                                         @ prefix[s]))
                    grad[s, j] = (f_plus - f_minus) / (2 * eps)
                else:
                    grad[s, j] = (f_plus - f0) / eps
        return f0, grad


def _controls_from_pulse(pulse: PulseSequence) -> np.ndarray:
    segs = np.asarray(pulse.segments)
    a1, p1, a2, p2 = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    return np.stack([a1 * np.cos(p1), a1 * np.sin(p1),
                     a2 * np.cos(p2), a2 * np.sin(p2)], axis=1)


def _pulse_from_controls(controls, carrier1, carrier2,
                         segment_duration) -> PulseSequence:
    amp1 = np.hypot(controls[:, 0], controls[:, 1])
    amp2 = np.hypot(controls[:, 2], controls[:, 3])
    ph1 = np.mod(np.arctan2(controls[:, 1], controls[:, 0]), 2 * np.pi)
    ph2 = np.mod(np.arctan2(controls[:, 3], controls[:, 2]), 2 * np.pi)
    segs = tuple((a1, p1, a2, p2)
                 for a1, p1, a2, p2 in zip(amp1, ph1, amp2, ph2))
    return PulseSequence(segments=segs, carrier1=carrier1, carrier2=carrier2,
                         segment_duration=segment_duration)


def _problem_for(pulse, cfg, target, detunings, n_sub):
    return _PulseProblem(cfg, target, detunings, pulse.carrier1,
                         pulse.carrier2, pulse.n_segments,
                         pulse.segment_duration, n_sub)


def propagate(pulse: PulseSequence, cfg: RegisterConfig, line: NuclearLabel,
              detuning: float = 0.0, n_sub: int = 32) -> np.ndarray:
    """Electron propagator on one hyperfine line.

    Per segment, in the rotating frame of tone 1,
        H = 2 pi (Delta_line + detuning) sz/2
            + amp1 (cos(ph1) sx + sin(ph1) sy)/2
            + amp2 (cos(ph2 + 2 pi d12 t) sx + sin(ph2 + 2 pi d12 t) sy)/2
    with Delta_line the line offset from carrier 1 and d12 the carrier
    difference; each segment is sub-stepped into n_sub piecewise-constant
    slices sampled at their midpoints.
    """
    target = ControlTarget({line: 1})
    prob = _problem_for(pulse, cfg, target, [detuning], n_sub)
    return prob.total_propagators(_controls_from_pulse(pulse))[0]


def trace_overlap_fidelity(unitaries, signs) -> float:
    """|sum_l s_l Tr(U_l)|^2 / (2 L)^2, invariant under one global phase."""
    unitaries = np.asarray(unitaries, dtype=complex)
    signs = np.asarray(signs, dtype=float)
    tr = np.trace(unitaries, axis1=-2, axis2=-1)
    return float(np.abs((signs * tr).sum()) ** 2 / (2 * len(signs)) ** 2)


def gate_fidelity(pulse: PulseSequence, cfg: RegisterConfig,
                  target: ControlTarget, detuning: float = 0.0,
                  n_sub: int = 32) -> float:
    """Phase-invariant average overlap with the per-line targets."""
    prob = _problem_for(pulse, cfg, target, [detuning], n_sub)
    return prob.fbar(_controls_from_pulse(pulse))


def ensemble_fidelity(pulse: PulseSequence, cfg: RegisterConfig,
                      target: ControlTarget, detunings,
                      n_sub: int = 32) -> float:
    prob = _problem_for(pulse, cfg, target, detunings, n_sub)
    return prob.fbar(_controls_from_pulse(pulse))


def robustness_scan(pulse: PulseSequence, cfg: RegisterConfig,
                    target: ControlTarget, detunings,
                    n_sub: int = 32) -> list[tuple[float, float]]:
    """gate_fidelity per detuning, ready for CSV emission."""
    return [(float(d), gate_fidelity(pulse, cfg, target, d, n_sub))
            for d in detunings]


def _clip_controls(controls, amp_max):
    out = controls.copy()
    for k in (0, 2):
        r = np.hypot(out[:, k], out[:, k + 1])
        fac = np.where(r > amp_max, amp_max / np.where(r > 0, r, 1.0), 1.0)
        out[:, k] *= fac
        out[:, k + 1] *= fac
    return out


def _ascend(prob, controls, opt, tol, max_iter):
    """Monotone backtracking ascent of prob.fbar.

    The step direction is the finite-difference gradient preconditioned
    by an L-BFGS two-loop recursion over accepted iterates; whenever a
    direction fails the line search the memory is dropped and a plain
    scaled-gradient step is tried before giving up.  Every accepted step
    strictly increases the objective, so the history is monotone.
    """
    eps = opt.fd_step_rel * opt.amp_max
    mem_s: list[np.ndarray] = []
    mem_y: list[np.ndarray] = []
    f0, grad = prob.fbar_and_grad(controls, eps)
    history = [f0]
    step0 = opt.step_size
    it = 0
    while it < max_iter and 1 - f0 > tol:
        it += 1
        q = grad.ravel().copy()
        alphas = []
        for s_vec, y_vec in reversed(list(zip(mem_s, mem_y))):
            rho = 1.0 / (y_vec @ s_vec)
            a = rho * (s_vec @ q)
            alphas.append(a)
            q -= a * y_vec
        if mem_s:
            gamma = (mem_s[-1] @ mem_y[-1]) / (mem_y[-1] @ mem_y[-1])
        else:
            gamma = opt.amp_max ** 2 * 1e-2
        q *= gamma
        for (s_vec, y_vec), a in zip(zip(mem_s, mem_y), reversed(alphas)):
            rho = 1.0 / (y_vec @ s_vec)
            q += s_vec * (a - rho * (y_vec @ q))
        direction = q.reshape(controls.shape)
        if np.vdot(direction.ravel(), grad.ravel()).real <= 0:
            direction = grad * opt.amp_max ** 2
            mem_s, mem_y = [], []

        def line_search(direction, step):
            while step > 1e-20:
                cand = _clip_controls(controls + step * direction,
                                      opt.amp_max)
                f1 = prob.fbar(cand)
                if f1 > f0:
                    return cand, f1, step
                step *= opt.backtrack_factor
            return None, f0, step

        cand, f1, step = line_search(direction, step0)
        if cand is None and mem_s:
            mem_s, mem_y = [], []
            cand, f1, step = line_search(grad * opt.amp_max ** 2,
                                         opt.step_size)
        if cand is None:
            break
        _, grad_new = prob.fbar_and_grad(cand, eps)
        s_vec = (cand - controls).ravel()
        y_vec = (grad - grad_new).ravel()
        if s_vec @ y_vec > 1e-30:
            mem_s.append(s_vec)
            mem_y.append(y_vec)
            if len(mem_s) > opt.lbfgs_memory:
                mem_s.pop(0)
                mem_y.pop(0)
        controls, f0, grad = cand, f1, grad_new
        history.append(f0)
        step0 = min(step * 2, 4.0)
    return controls, history


def _stage_ensembles(requested) -> list[np.ndarray]:
    requested = np.atleast_1d(np.asarray(requested, dtype=float))
    span = float(np.max(np.abs(requested)))
    stages = []
    if span > 0:
        for frac, points, _, _ in _STAGES:
            stages.append(span * frac * np.linspace(-1, 1, points)
                          if points > 1 else np.array([0.0]))
    else:
        stages.append(np.array([0.0]))
    return stages


def optimize(cfg: RegisterConfig, target: ControlTarget,
             opt: OptimizerConfig) -> tuple[PulseSequence, list[float]]:
    """Search for a pulse meeting the per-line phase targets.

    Returns the pulse and the fidelity history of the final ascent on
    the requested detuning ensemble (monotone non-decreasing).  Earlier
    continuation stages on narrower bands only shape the starting point.
    If the tolerance is not reached within max_iterations the best pulse
    found is returned and a warning is issued.
    """
    carrier1, carrier2 = default_carriers(cfg)
    rng = np.random.default_rng(opt.rng_seed)
    n = opt.n_segments
    amp1 = rng.uniform(0, opt.amp_init_frac * opt.amp_max, n)
    ph1 = rng.uniform(0, 2 * np.pi, n)
    amp2 = rng.uniform(0, opt.amp_init_frac * opt.amp_max, n)
    ph2 = rng.uniform(0, 2 * np.pi, n)
    controls = np.stack([amp1 * np.cos(ph1), amp1 * np.sin(ph1),
                         amp2 * np.cos(ph2), amp2 * np.sin(ph2)], axis=1)

    def make_problem(dets):
        return _PulseProblem(cfg, target, dets, carrier1, carrier2,
                             n, opt.segment_duration, opt.n_sub)

    requested = np.atleast_1d(np.asarray(opt.detuning_ensemble, dtype=float))
    for dets, (_, _, tol, cap) in zip(_stage_ensembles(requested), _STAGES):
        if dets.size == requested.size and np.allclose(
                np.sort(dets), np.sort(requested)):
            continue
        controls, _ = _ascend(make_problem(dets), controls, opt,
                              max(tol, opt.convergence_tol / 2),
                              min(cap, opt.max_iterations))

    final = make_problem(requested)
    controls, history = _ascend(final, controls, opt, opt.convergence_tol,
                                opt.max_iterations)
    if 1 - history[-1] > opt.convergence_tol:
        warnings.warn(f"pulse search stopped at fidelity {history[-1]:.6f} "
                      "without reaching tolerance; returning best pulse",
                      stacklevel=2)
    pulse = _pulse_from_controls(controls, carrier1, carrier2,
                                 opt.segment_duration)
    return pulse, history
