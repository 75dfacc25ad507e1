"""Command-line entry point: one named experiment per run, CSV/JSON out.

Every run is driven by an optional JSON config plus flag overrides
(flags win), writes its data files into the output directory and drops a
manifest.json echoing the configuration.  Outputs are deterministic for
a fixed seed; only the manifest's wall_time_s field varies between
identical runs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .defects import (
    CouplingMeasurement,
    LatticeParams,
    addressable_strong_count,
    detectable_weak_count,
    hyperfine_spectrum,
    r_max_from_coupling,
    read_survey_csv,
)
from .entangle import (
    ghz_fidelity,
    mermin_sampled,
    mermin_settings,
    mermin_value,
    prepare_ghz,
    prepare_ghz_register,
    prepare_w,
    prepare_w_register,
    w_fidelity,
)
from .grape import (
    ControlTarget,
    OptimizerConfig,
    gate_fidelity,
    optimize,
    robustness_scan,
)
from .linalg import depolarize, expectation, partial_trace
from .qec import EXACT, MONTE_CARLO, sweep, variant_label
from .readout import ReadoutModel, init_fidelity_surface
from .register import RegisterConfig, spectrum
from .tomo import state_tomography_exact

EXPERIMENTS = ("spectrum", "ghz", "w", "mermin", "qec-sweep", "grape",
               "readout-surface", "hyperfine-spectrum", "coupled-count")


class ConfigError(Exception):
    pass


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(config_safe(doc), indent=2, sort_keys=True)
                    + "\n")


def config_safe(obj):
    """Convert numpy scalars/arrays so json can serialize the document."""
    if isinstance(obj, dict):
        return {k: config_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [config_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _register_from(doc: dict) -> RegisterConfig:
    reg = doc.get("register", {})
    try:
        return RegisterConfig(
            a_n=reg.get("a_N_hz", 2.16e6),
            a_c1=reg.get("a_C1_hz", 413e3),
            a_c2=reg.get("a_C2_hz", 89e3),
            linewidth=reg.get("linewidth_hz", 50e3),
            nitrogen_mode=reg.get("nitrogen_mode", "qubit-subspace"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad register config: {exc}") from exc


def run_spectrum(doc, seed, outdir, jobs):
    cfg = _register_from(doc)
    rows = [(lab.n, lab.c1, lab.c2, float(off))
            for lab, off in spectrum(cfg)]
    _write_csv(outdir / "spectrum.csv", ["m_n", "c1", "c2", "offset_hz"],
               rows)
    return {"lines": len(rows)}


def _entangled_state_report(kind, doc, seed, outdir):
    cfg = _register_from(doc)
    if kind == "ghz":
        rho, full, fid = prepare_ghz(cfg), prepare_ghz_register(cfg), \
            ghz_fidelity
    else:
        rho, full, fid = prepare_w(cfg), prepare_w_register(cfg), w_fidelity
    eps = float(doc.get("params", {}).get("depolarization", 0.0))
    if eps:
        rho = depolarize(rho, eps)
    electron = partial_trace(full, (0,), cfg.register_dims())
    report = {
        "state": kind,
        "depolarization": eps,
        "fidelity_vs_target": fid(rho),
        "electron_ground_population": float(np.real(electron.matrix[0, 0])),
        "pauli_coefficients": {k: v for k, v in
                               sorted(state_tomography_exact(rho).items())},
    }
    _write_json(outdir / f"{kind}.json", report)
    return {"fidelity": report["fidelity_vs_target"]}


def run_ghz(doc, seed, outdir, jobs):
    return _entangled_state_report("ghz", doc, seed, outdir)


def run_w(doc, seed, outdir, jobs):
    return _entangled_state_report("w", doc, seed, outdir)


def run_mermin(doc, seed, outdir, jobs):
    cfg = _register_from(doc)
    params = doc.get("params", {})
    rho = prepare_ghz(cfg)
    eps = float(params.get("depolarization", 0.0))
    if eps:
        rho = depolarize(rho, eps)
    per_setting = {}
    for setting in mermin_settings(cfg):
        per_setting[setting.term] = expectation(rho, setting.observable)
    value = mermin_value(rho, cfg)
    report = {
        "per_setting_expectations": per_setting,
        "signs": {"XXZ": 1, "XZX": 1, "YXX": 1, "YZZ": -1},
        "value": value,
        "depolarization": eps,
    }
    shots = int(params.get("shots", 0))
    if shots:
        sampled, se = mermin_sampled(rho, shots, seed, cfg)
        report["sampled"] = {"shots": shots, "value": sampled,
                             "standard_error": se}
    _write_json(outdir / "mermin.json", report)
    return {"value": value}


def _parse_variants(params) -> list[tuple[bool, tuple]]:
    default = [[True, ["q1", "q2", "q3"]], [False, ["q3"]], [True, ["q3"]]]
    out = []
    for corrected, targets in params.get("variants", default):
        out.append((bool(corrected), tuple(targets)))
    return out


def run_qec_sweep(doc, seed, outdir, jobs):
    params = doc.get("params", {})
    p_grid = params.get("p_grid")
    if p_grid is None:
        p_grid = [round(0.05 * i, 2) for i in range(21)]
    mode = params.get("mode", EXACT)
    if mode not in (EXACT, MONTE_CARLO):
        raise ConfigError(f"unknown qec mode {mode!r}")
    results = sweep(p_grid, _parse_variants(params), mode=mode,
                    trials=int(params.get("trials", 10000)),
                    rng_seed=seed, engine=params.get("engine", "abstract"),
                    jobs=jobs)
    rows = [(r.p, variant_label(r.corrected, r.targets), r.mode, r.fidelity,
             r.standard_error if r.standard_error is not None else 0.0)
            for r in results]
    _write_csv(outdir / "qec_sweep.csv",
               ["p", "variant", "mode", "fidelity", "stderr"], rows)
    return {"points": len(rows)}


def run_grape(doc, seed, outdir, jobs):
    cfg = _register_from(doc)
    params = doc.get("params", {})
    condition = params.get("condition", ["100", "111"])
    target = ControlTarget.for_cphase(cfg, condition)
    opt_kwargs = {k: params[k] for k in (
        "max_iterations", "step_size", "backtrack_factor", "convergence_tol",
        "amp_max", "n_segments", "segment_duration", "n_sub",
        "fd_step_rel", "lbfgs_memory", "amp_init_frac") if k in params}
    if "detuning_ensemble" in params:
        opt_kwargs["detuning_ensemble"] = tuple(params["detuning_ensemble"])
    try:
        opt = OptimizerConfig(rng_seed=seed, **opt_kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad optimizer config: {exc}") from exc
    pulse, history = optimize(cfg, target, opt)
    (outdir / "pulse.json").write_text(pulse.to_json() + "\n")
    span = max(abs(d) for d in opt.detuning_ensemble) or 20e3
    scan_points = int(params.get("scan_points", 9))
    scan = robustness_scan(pulse, cfg, target,
                           np.linspace(-span, span, scan_points),
                           n_sub=opt.n_sub)
    _write_csv(outdir / "robustness.csv", ["detuning_hz", "fidelity"], scan)
    ensemble_fid = float(np.mean([gate_fidelity(pulse, cfg, target, d,
                                                opt.n_sub)
                                  for d in opt.detuning_ensemble]))
    _write_json(outdir / "grape.json", {
        "final_ensemble_fidelity": ensemble_fid,
        "iterations": len(history) - 1,
        "fidelity_history_head": history[:10],
        "fidelity_final": history[-1],
        "scan_min": min(f for _, f in scan),
    })
    return {"ensemble_fidelity": ensemble_fid}


def run_readout_surface(doc, seed, outdir, jobs):
    params = doc.get("params", {})
    try:
        model = ReadoutModel(
            rate_bright=float(params.get("rate_bright", 0.030)),
            rate_dark=float(params.get("rate_dark", 0.012)),
            flip_prob_per_step=float(params.get("flip_prob_per_step", 2e-5)),
            steps_per_shot=int(params.get("steps_per_shot", 2000)),
            rng_seed=seed,
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad readout model: {exc}") from exc
    reps_grid = params.get("reps_grid", [500, 1000, 2000, 4000])
    shift_grid = params.get("shift_grid", list(range(0, 13, 2)))
    fid, succ = init_fidelity_surface(model, reps_grid, shift_grid)
    rows = []
    for i, reps in enumerate(reps_grid):
        for j, shift in enumerate(shift_grid):
            rows.append((int(reps), int(shift), float(fid[i, j]),
                         float(succ[i, j])))
    _write_csv(outdir / "readout_surface.csv",
               ["reps", "shift", "fidelity", "success_prob"], rows)
    return {"max_fidelity": float(fid.max())}


def run_hyperfine_spectrum(doc, seed, outdir, jobs):
    params = doc.get("params", {})
    if "survey_csv" in params:
        data = read_survey_csv(params["survey_csv"])
    else:
        rows = params.get("measurements",
                          [[124e3, 3e3], [211e3, 4e3], [384e3, 8e3],
                           [422e3, 9e3], [517e3, 12e3]])
        data = [CouplingMeasurement(float(c), float(e)) for c, e in rows]
    cut = float(params.get("rel_error_cut", 0.04))
    start = float(params.get("grid_start_hz", 50e3))
    stop = float(params.get("grid_stop_hz", 700e3))
    points = int(params.get("grid_points", 1301))
    grid = np.linspace(start, stop, points)
    density = hyperfine_spectrum(data, cut, grid)
    _write_csv(outdir / "hyperfine_spectrum.csv",
               ["frequency_hz", "density"],
               [(float(f), float(d)) for f, d in zip(grid, density)])
    return {"accepted": int(sum(m.fit_error / m.coupling < cut
                                for m in data))}


def run_coupled_count(doc, seed, outdir, jobs):
    params = doc.get("params", {})
    max_coupling = float(params.get("max_coupling_hz", 4e6))
    linewidth = float(params.get("linewidth_hz", 4e3))
    lattice = LatticeParams(
        lattice_constant=float(params.get("lattice_constant_m",
                                          0.357e-9)),
        atoms_per_cell=int(params.get("atoms_per_cell", 8)),
        c13_abundance=float(params.get("c13_abundance", 0.011)))
    if "min_coupling_hz" in params:
        r_max = r_max_from_coupling(float(params["min_coupling_hz"]))
    else:
        r_max = float(params.get("r_max_m", 1.5e-9))
    lines, addressable = addressable_strong_count(max_coupling, linewidth)
    sites, detectable = detectable_weak_count(lattice, r_max)
    _write_json(outdir / "coupled_count.json", {
        "resolvable_lines": lines,
        "addressable_strong_spins": addressable,
        "r_max_m": r_max,
        "lattice_sites": sites,
        "detectable_weak_spins": detectable,
    })
    return {"addressable": addressable, "detectable": detectable}


RUNNERS = {
    "spectrum": run_spectrum,
    "ghz": run_ghz,
    "w": run_w,
    "mermin": run_mermin,
    "qec-sweep": run_qec_sweep,
    "grape": run_grape,
    "readout-surface": run_readout_surface,
    "hyperfine-spectrum": run_hyperfine_spectrum,
    "coupled-count": run_coupled_count,
}


def _fail(code: int, doc: dict) -> int:
    print(json.dumps(config_safe(doc), sort_keys=True))
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinreg",
        description="run one spin-register experiment and write CSV/JSON")
    parser.add_argument("--experiment", help=f"one of {EXPERIMENTS}")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="RNG seed override")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker bound for parallel sweeps")
    args = parser.parse_args(argv)

    doc: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            return _fail(1, {"error": "bad_config_file", "detail": str(exc)})
        if not isinstance(doc, dict):
            return _fail(1, {"error": "bad_config_file",
                             "detail": "top level must be an object"})
    experiment = args.experiment or doc.get("experiment")
    if experiment not in RUNNERS:
        return _fail(1, {"error": "unknown_experiment",
                         "unknown_experiment": experiment,
                         "known": list(RUNNERS)})
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    outdir = Path(args.out or doc.get("output_path", "."))
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(1, {"error": "bad_output_dir", "detail": str(exc)})

    t0 = time.time()
    try:
        summary = RUNNERS[experiment](doc, seed, outdir, max(1, args.jobs))
    except ConfigError as exc:
        return _fail(1, {"error": "invalid_config", "detail": str(exc)})
    except (ValueError, TypeError, KeyError, AssertionError) as exc:
        return _fail(2, {"error": "invariant_violation",
                         "experiment": experiment, "detail": str(exc)})
    manifest = {
        "experiment": experiment,
        "seed": seed,
        "config": doc,
        "summary": summary,
        "versions": {
            "spinreg": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "wall_time_s": round(time.time() - t0, 3),
    }
    _write_json(outdir / "manifest.json", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
