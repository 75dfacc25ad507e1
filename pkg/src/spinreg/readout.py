"""Repetitive single-shot readout statistics.

One readout shot is a run of short optical readout steps.  The nuclear
spin sets the electron fluorescence level, so each step emits a Poisson
photon count whose mean depends on the current (hidden) spin state, and
the spin may flip between steps.  Summing a shot's counts and thresholding
classifies the state; shifting the threshold below the optimum trades
acceptance rate for initialization fidelity.

The count distribution for each initial state is computed exactly by a
step-by-step convolution over the hidden two-state Markov chain, so all
fidelities here are semi-analytic; simulate_trace provides the matching
Monte-Carlo sampler.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

BRIGHT, DARK = 0, 1


@dataclass(frozen=True)
class ReadoutModel:
    """Photon rates (per step), per-step flip probability, shot length.

    flip_prob_per_step is the bright-to-dark probability; the reverse
    rate defaults to the same value unless flip_prob_dark_to_bright is
    given (physical relaxation is generally asymmetric).
    """

    rate_bright: float
    rate_dark: float
    flip_prob_per_step: float
    steps_per_shot: int
    rng_seed: int = 0
    flip_prob_dark_to_bright: float | None = None

    def __post_init__(self):
        if not self.rate_bright > self.rate_dark >= 0:
            raise ValueError("need rate_bright > rate_dark >= 0")
        for p in (self.flip_prob_per_step, self.flip_back):
            if not 0 <= p < 1:
                raise ValueError("flip probabilities must be in [0, 1)")
        if self.steps_per_shot < 1:
            raise ValueError("steps_per_shot must be at least 1")

    @property
    def flip_back(self) -> float:
        if self.flip_prob_dark_to_bright is None:
            return self.flip_prob_per_step
        return self.flip_prob_dark_to_bright


# model loosely calibrated to a bright/dark pair distinguishable at the
# percent level over a few thousand readout steps
DEFAULT_MODEL = ReadoutModel(rate_bright=0.030, rate_dark=0.012,
                             flip_prob_per_step=2e-5, steps_per_shot=2000)


@dataclass(frozen=True)
class TraceShot:
    """States and per-step counts of one shot."""

    states: np.ndarray
    step_counts: np.ndarray

    @property
    def total_count(self) -> int:
        return int(self.step_counts.sum())


def simulate_trace(model: ReadoutModel, shots: int) -> list[TraceShot]:
    """Sample shots of the hidden-Markov photon process.

    Each shot starts in a fresh 50/50 state; within a shot the chain
    emits Poisson(rate of current state) per step and then flips with
    the state's flip probability.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    rng = np.random.default_rng(model.rng_seed)
    rates = np.array([model.rate_bright, model.rate_dark])
    flips = np.array([model.flip_prob_per_step, model.flip_back])
    states = np.empty((shots, model.steps_per_shot), dtype=np.int8)
    current = rng.integers(0, 2, size=shots)
    for step in range(model.steps_per_shot):
        states[:, step] = current
        flip = rng.random(shots) < flips[current]
        current = np.where(flip, 1 - current, current)
    counts = rng.poisson(rates[states])
    return [TraceShot(states=states[i], step_counts=counts[i])
            for i in range(shots)]


def _support_bound(model: ReadoutModel) -> int:
    mean = model.steps_per_shot * model.rate_bright
    return int(np.ceil(mean + 12 * np.sqrt(mean + 1) + 20))


def count_distributions(model: ReadoutModel) -> tuple[np.ndarray, np.ndarray]:
    """Exact shot-count pmfs for bright and dark initial states.

    Forward pass over the steps: convolve each hidden state's partial
    distribution with that state's per-step Poisson pmf, then mix the
    states through the flip matrix.  Distributions are truncated at a
    12-sigma bound; the lost tail mass is far below every tolerance used
    here.
    """
    kmax = _support_bound(model)
    step_pmfs = []
    for rate in (model.rate_bright, model.rate_dark):
        top = int(stats.poisson.ppf(1 - 1e-14, rate)) + 1 if rate > 0 else 0
        step_pmfs.append(stats.poisson.pmf(np.arange(top + 1), rate))
    stay = np.array([1 - model.flip_prob_per_step, 1 - model.flip_back])
    out = []
    for init in (BRIGHT, DARK):
        dist = np.zeros((2, kmax + 1))
        dist[init, 0] = 1.0
        for _ in range(model.steps_per_shot):
            emitted = [np.convolve(dist[s], step_pmfs[s])[:kmax + 1]
                       for s in (BRIGHT, DARK)]
            dist[BRIGHT] = stay[BRIGHT] * emitted[BRIGHT] \
                + (1 - stay[DARK]) * emitted[DARK]
            dist[DARK] = stay[DARK] * emitted[DARK] \
                + (1 - stay[BRIGHT]) * emitted[BRIGHT]
        out.append(dist.sum(axis=0))
    return out[0], out[1]


def readout_fidelity(model: ReadoutModel,
                     threshold: int) -> tuple[float, float, float]:
    """(f_bright, f_dark, f_mean) for classifying count > threshold as
    bright and count <= threshold as dark."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    dist_b, dist_d = count_distributions(model)
    f_bright = float(dist_b[threshold + 1:].sum()) if threshold + 1 <= len(
        dist_b) else 0.0
    f_dark = float(dist_d[:threshold + 1].sum())
    return f_bright, f_dark, (f_bright + f_dark) / 2


def optimal_threshold(model: ReadoutModel) -> int:
    """Integer threshold maximizing the mean fidelity (ties go low)."""
    dist_b, dist_d = count_distributions(model)
    cdf_b = np.cumsum(dist_b)
    cdf_d = np.cumsum(dist_d)
    f_mean = ((1 - cdf_b) + cdf_d) / 2
    return int(np.argmax(f_mean))


def init_fidelity_surface(model: ReadoutModel, reps_grid,
                          shift_grid) -> tuple[np.ndarray, np.ndarray]:
    """Initialization fidelity and acceptance probability per grid cell.

    For each repetition count the threshold is placed at the readout
    optimum, then shifted down by each grid value; a shot is accepted as
    dark-initialized when its count is at or below the shifted cutoff.
    Fidelity is the posterior probability of the dark state given
    acceptance under equal priors; success_prob is the acceptance
    probability.  An empty acceptance window reports (1.0, 0.0), the
    degenerate limit of ever more stringent selection.
    """
    reps_grid = list(reps_grid)
    shift_grid = list(shift_grid)
    if not reps_grid or not shift_grid:
        raise ValueError("grids must be nonempty")
    fid = np.empty((len(reps_grid), len(shift_grid)))
    succ = np.empty_like(fid)
    for i, reps in enumerate(reps_grid):
        m = replace(model, steps_per_shot=int(reps))
        dist_b, dist_d = count_distributions(m)
        cdf_b, cdf_d = np.cumsum(dist_b), np.cumsum(dist_d)
        t_opt = optimal_threshold(m)
        for j, shift in enumerate(shift_grid):
            cutoff = t_opt - int(shift)
            if cutoff < 0:
                fid[i, j], succ[i, j] = 1.0, 0.0
                continue
            cutoff = min(cutoff, len(cdf_d) - 1)
            p_dark = float(cdf_d[cutoff])
            p_bright = float(cdf_b[cutoff])
            accept = (p_dark + p_bright) / 2
            fid[i, j] = p_dark / (p_dark + p_bright) if accept > 0 else 1.0
            succ[i, j] = accept
    return fid, succ


def charge_postselect(flag_prob: float, results, rng_seed: int = 0) -> list:
    """Drop each result independently with the flagged-charge probability."""
    if not 0 <= flag_prob <= 1:
        raise ValueError("flag probability must lie in [0, 1]")
    results = list(results)
    if flag_prob == 0:
        return results
    if flag_prob == 1:
        return []
    rng = np.random.default_rng(rng_seed)
    keep = rng.random(len(results)) >= flag_prob
    return [r for r, k in zip(results, keep) if k]
