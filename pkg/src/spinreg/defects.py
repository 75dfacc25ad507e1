"""Survey statistics for carbon-13 spins around a defect center.

Utilities for the coupling-survey side of the problem: a Gaussian-sum
probability spectrum of measured hyperfine couplings, and back-of-the-
envelope counts of how many nuclear spins are addressable (strongly
coupled, resolved as distinct lines) or detectable (weakly coupled,
within the dipolar reach set by the coherence time).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

DIAMOND_LATTICE_CONSTANT = 0.357e-9
ATOMS_PER_CELL = 8
NATURAL_C13_ABUNDANCE = 0.011


@dataclass(frozen=True)
class CouplingMeasurement:
    """One fitted hyperfine coupling with its one-sigma fit error (Hz)."""

    coupling: float
    fit_error: float

    def __post_init__(self):
        if self.coupling <= 0 or self.fit_error <= 0:
            raise ValueError("coupling and fit error must be positive")


@dataclass(frozen=True)
class LatticeParams:
    lattice_constant: float = DIAMOND_LATTICE_CONSTANT
    atoms_per_cell: int = ATOMS_PER_CELL
    c13_abundance: float = NATURAL_C13_ABUNDANCE

    def __post_init__(self):
        if self.lattice_constant <= 0 or self.atoms_per_cell <= 0:
            raise ValueError("lattice parameters must be positive")
        if not 0 < self.c13_abundance < 1:
            raise ValueError("abundance must be in (0, 1)")


def hyperfine_spectrum(data, rel_error_cut: float, grid) -> np.ndarray:
    """Gaussian-sum coupling spectrum on a frequency grid.

    Measurements with fit_error/coupling >= rel_error_cut are discarded;
    each surviving one contributes a unit-area normal pdf centered on
    its coupling with the fit error as standard deviation, so the total
    integral equals the number of accepted measurements.
    """
    grid = np.asarray(list(grid), dtype=float)
    if grid.size == 0:
        raise ValueError("frequency grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("frequency grid must be sorted ascending")
    density = np.zeros_like(grid)
    for m in data:
        if m.fit_error / m.coupling < rel_error_cut:
            density += stats.norm.pdf(grid, loc=m.coupling, scale=m.fit_error)
    return density


def addressable_strong_count(max_coupling: float,
                             linewidth: float) -> tuple[int, int]:
    """(resolvable lines, addressable spins) for line-selective control.

    Lines are resolvable down to the inhomogeneous linewidth, and every
    added spin doubles the line count (2^N conditional transitions), so
    the spin count is the floor of log2 of the line count.
    """
    if not max_coupling > linewidth > 0:
        raise ValueError("need max_coupling > linewidth > 0")
    lines = int(np.floor(max_coupling / linewidth))
    spins = int(np.floor(np.log2(lines))) if lines >= 1 else 0
    return lines, spins


def detectable_weak_count(params: LatticeParams,
                          r_max: float) -> tuple[float, float]:
    """(lattice sites, expected spins) within the detection radius."""
    if r_max <= 0:
        raise ValueError("radius must be positive")
    sites = (params.atoms_per_cell / params.lattice_constant ** 3
             * 4 / 3 * np.pi * r_max ** 3)
    return float(sites), float(sites * params.c13_abundance)


def r_max_from_coupling(min_coupling: float, ref_coupling: float = 5e3,
                        ref_distance: float = 1.5e-9) -> float:
    """Detection radius from the weakest usable coupling.

    Dipolar 1/r^3 scaling anchored at a reference pair, by default
    5 kHz at 1.5 nm.
    """
    if min_coupling <= 0 or ref_coupling <= 0 or ref_distance <= 0:
        raise ValueError("couplings and distance must be positive")
    return float(ref_distance * (ref_coupling / min_coupling) ** (1 / 3))


def read_survey_csv(path) -> list[CouplingMeasurement]:
    """Ingest survey rows (coupling_hz, fit_error_hz), header optional."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                coupling, err = float(parts[0]), float(parts[1])
            except ValueError:
                continue  # header
            rows.append(CouplingMeasurement(coupling, err))
    return rows
