"""Coupling-survey spectrum and spin-count estimates."""

import numpy as np
import pytest

from spinreg.defects import (
    CouplingMeasurement,
    LatticeParams,
    addressable_strong_count,
    detectable_weak_count,
    hyperfine_spectrum,
    r_max_from_coupling,
    read_survey_csv,
)


def test_single_measurement_integrates_to_one():
    m = CouplingMeasurement(413e3, 5e3)
    grid = np.linspace(300e3, 500e3, 4001)
    density = hyperfine_spectrum([m], 0.04, grid)
    integral = np.trapezoid(density, grid)
    assert integral == pytest.approx(1.0, rel=0.01)
    assert grid[np.argmax(density)] == pytest.approx(413e3, abs=100)


def test_high_relative_error_is_filtered():
    m = CouplingMeasurement(200e3, 10e3)  # 5 percent
    grid = np.linspace(100e3, 300e3, 101)
    assert np.all(hyperfine_spectrum([m], 0.04, grid) == 0)


def test_usable_survey_values_give_resolved_peaks():
    data = [CouplingMeasurement(124e3, 2e3), CouplingMeasurement(211e3, 3e3)]
    grid = np.linspace(80e3, 260e3, 1801)
    density = hyperfine_spectrum(data, 0.04, grid)
    assert np.all(density >= 0)
    assert np.trapezoid(density, grid) == pytest.approx(2.0, rel=0.01)
    lo = density[(grid > 114e3) & (grid < 134e3)]
    hi = density[(grid > 201e3) & (grid < 221e3)]
    mid = density[(grid > 160e3) & (grid < 175e3)]
    assert lo.max() > 10 * mid.max()
    assert hi.max() > 10 * mid.max()


def test_spectrum_validates_grid():
    with pytest.raises(ValueError):
        hyperfine_spectrum([], 0.04, [])
    with pytest.raises(ValueError):
        hyperfine_spectrum([], 0.04, [2.0, 1.0])


def test_survey_csv_ingestion(tmp_path):
    path = tmp_path / "survey.csv"
    path.write_text("coupling_hz,fit_error_hz\n124000,2000\n211000,3000\n")
    rows = read_survey_csv(path)
    assert rows == [CouplingMeasurement(124000, 2000),
                    CouplingMeasurement(211000, 3000)]


# ----------------------------------------------------------- strong spins

def test_strong_count_reference_point():
    assert addressable_strong_count(4e6, 4e3) == (1000, 9)


def test_strong_count_degenerate_and_small():
    assert addressable_strong_count(5e3, 4.9e3) == (1, 0)
    with pytest.raises(ValueError):
        addressable_strong_count(4e3, 4e3)


def test_five_spins_need_32_lines():
    lines, spins = addressable_strong_count(32 * 4e3, 4e3)
    assert (lines, spins) == (32, 5)


def test_strong_count_monotonicity():
    base_lines, base_spins = addressable_strong_count(2e6, 5e3)
    more_lines, more_spins = addressable_strong_count(3e6, 5e3)
    finer_lines, finer_spins = addressable_strong_count(2e6, 2e3)
    assert more_lines >= base_lines and more_spins >= base_spins
    assert finer_lines >= base_lines and finer_spins >= base_spins


# ------------------------------------------------------------- weak spins

def test_weak_count_reference_point():
    sites, spins = detectable_weak_count(LatticeParams(), 1.5e-9)
    assert abs(sites - 2500) / 2500 < 0.02
    assert abs(spins - 27) / 27 < 0.05


def test_weak_count_cubic_scaling():
    params = LatticeParams()
    sites1, spins1 = detectable_weak_count(params, 1.0e-9)
    sites2, spins2 = detectable_weak_count(params, 2.0e-9)
    assert sites2 == pytest.approx(8 * sites1, rel=1e-12)
    assert spins2 == pytest.approx(8 * spins1, rel=1e-12)


def test_weak_count_linear_in_abundance():
    lo = LatticeParams(c13_abundance=0.005)
    hi = LatticeParams(c13_abundance=0.010)
    _, spins_lo = detectable_weak_count(lo, 1.5e-9)
    _, spins_hi = detectable_weak_count(hi, 1.5e-9)
    assert spins_hi == pytest.approx(2 * spins_lo, rel=1e-12)
    tiny = LatticeParams(c13_abundance=1e-12)
    _, spins_tiny = detectable_weak_count(tiny, 1.5e-9)
    assert spins_tiny < 1e-8


def test_lattice_params_validation():
    with pytest.raises(ValueError):
        LatticeParams(c13_abundance=0.0)
    with pytest.raises(ValueError):
        LatticeParams(lattice_constant=-1)
    with pytest.raises(ValueError):
        detectable_weak_count(LatticeParams(), 0.0)


# ---------------------------------------------------------------- dipolar

def test_r_max_calibration_point():
    assert r_max_from_coupling(5e3) == pytest.approx(1.5e-9, rel=1e-12)


def test_r_max_trivial_and_cube_root_scaling():
    assert r_max_from_coupling(7e3, ref_coupling=7e3, ref_distance=2e-9) \
        == pytest.approx(2e-9)
    base = r_max_from_coupling(8e3)
    assert r_max_from_coupling(1e3) == pytest.approx(2 * base, rel=1e-12)
    with pytest.raises(ValueError):
        r_max_from_coupling(-1.0)
