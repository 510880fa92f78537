"""Experiment runner: reproducible scans with machine-readable outputs.

Each subcommand reads an INI config (defaults apply when omitted), writes
plot-ready CSV/JSON data plus a run_report.json manifest (resolved config,
version, wall time, sha256 of every output).  Data files are byte-identical
for identical config and seed; the manifest's wall-time field is the one
value that varies between runs.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 acceptance
threshold failure (``check``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, acceptance, evolve, floquet, spectral, tomography
from .config import ExperimentConfig, load_config
from .errors import ConfigError, SimulationError
from .model import PulseSpec, QubitParams, StateVector
from .units import TWO_PI, ghz_to_rad_per_ns, rad_per_ns_to_ghz


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload) -> None:
    with open(path, "w", newline="\n") as f:
        json.dump(payload, f, sort_keys=True, indent=2)
        f.write("\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _device(config: ExperimentConfig) -> QubitParams:
    d = config["device"]
    return QubitParams(
        delta=ghz_to_rad_per_ns(d["delta_ghz"]),
        persistent_current=d["persistent_current_na"],
        t1=d["t1_ns"],
        t_ramsey=d["t_ramsey_ns"],
    )


def _solver_step(config: ExperimentConfig, fallback: float) -> float:
    step = config["solver"]["propagator_step_ns"]
    return step if step > 0.0 else fallback


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_quasienergies(config: ExperimentConfig, out_dir: Path, oracle: bool) -> list[Path]:
    par = _device(config)
    q = config["quasienergies"]
    n_trunc = config["solver"]["truncation_n"]
    amps = ghz_to_rad_per_ns(
        np.linspace(q["amp_min_ghz"], q["amp_max_ghz"], q["amp_points"])
    )
    header = [
        "amplitude_ghz",
        "omega_ghz",
        "eps0_numeric",
        "eps1_numeric",
        "eps0_analytic",
        "eps1_analytic",
        "delta_eps_numeric",
        "delta_eps_analytic",
    ]
    if oracle:
        header += ["eps0_monodromy", "eps1_monodromy"]
    rows = []
    for factor in q["omega_factors"]:
        omega = factor * par.delta
        specs = floquet.quasienergy_sweep(par.delta, omega, amps, n_trunc)
        if oracle:
            period = TWO_PI / omega
            step = period / config["solver"]["monodromy_steps_per_period"]
            mono = floquet.monodromy_quasienergies_batch(par.delta, amps, omega, step)
        for i, (a, s) in enumerate(zip(amps, specs)):
            e0a, e1a = floquet.analytic_quasienergies(par.delta, a, omega)
            row = [
                rad_per_ns_to_ghz(a),
                rad_per_ns_to_ghz(omega),
                rad_per_ns_to_ghz(s.eps0),
                rad_per_ns_to_ghz(s.eps1),
                rad_per_ns_to_ghz(e0a),
                rad_per_ns_to_ghz(e1a),
                rad_per_ns_to_ghz(s.delta_eps),
                rad_per_ns_to_ghz(e1a - e0a),
            ]
            if oracle:
                row += [rad_per_ns_to_ghz(mono[i][0]), rad_per_ns_to_ghz(mono[i][1])]
            rows.append(row)
    path = out_dir / "quasienergies.csv"
    _write_csv(path, header, rows)
    return [path]


def _rabi_traces(par, amps, omega, durations, step, threads, refine):
    def run(chunk):
        states = evolve.continuous_drive_states(
            par, chunk, omega, durations, target_step=step, refine=refine
        )
        return np.abs(states[:, :, 1]) ** 2

    # with refinement on, group per amplitude so the step-halving decisions
    # (and therefore the bytes) cannot depend on batching or thread count
    if refine or (threads > 1 and len(amps) > 1):
        chunks = [amps[i : i + 1] for i in range(len(amps))]
        with ThreadPoolExecutor(max_workers=max(threads, 1)) as ex:
            parts = list(ex.map(run, chunks))
        return np.vstack(parts)
    return run(amps)


def cmd_rabi_scan(config: ExperimentConfig, out_dir: Path, threads: int) -> list[Path]:
    par = _device(config)
    r = config["rabi"]
    omega = ghz_to_rad_per_ns(r["omega_ghz"])
    amps = ghz_to_rad_per_ns(np.linspace(r["amp_min_ghz"], r["amp_max_ghz"], r["amp_points"]))
    durations = np.arange(0.0, r["duration_ns"] + 1e-9, r["sample_dt_ns"])
    step = _solver_step(config, min(TWO_PI / omega / 200.0, r["sample_dt_ns"] / 2.0))
    p1 = _rabi_traces(
        par, amps, omega, durations, step, threads, config["solver"]["refine"]
    )

    specs = floquet.quasienergy_sweep(
        par.delta, omega, amps, config["solver"]["truncation_n"]
    )
    p1_rows = []
    spec_rows = []
    peak_rows = []
    for a, trace, fspec in zip(amps, p1, specs):
        a_ghz = rad_per_ns_to_ghz(a)
        p1_rows.extend([a_ghz, t, v] for t, v in zip(durations, trace))
        sp = spectral.dft(durations, trace, r["window"], r["zero_pad_factor"])
        keep = sp.freqs <= r["max_freq_ghz"]
        spec_rows.extend(
            [a_ghz, f, m] for f, m in zip(sp.freqs[keep], sp.magnitudes[keep])
        )
        peaks = spectral.find_peaks(sp, r["min_prominence"])
        classified, score = spectral.classify_peaks(
            peaks, omega, fspec.delta_eps, r["n_max"], sp.resolution
        )
        peak_rows.extend(
            [a_ghz, p.frequency, p.amplitude, p.classification,
             -1 if p.n is None else p.n, score]
            for p in classified
        )
    paths = [out_dir / "rabi_p1.csv", out_dir / "rabi_spectra.csv", out_dir / "rabi_peaks.csv"]
    _write_csv(paths[0], ["amplitude_ghz", "t_p_ns", "p1"], p1_rows)
    _write_csv(paths[1], ["amplitude_ghz", "freq_ghz", "magnitude"], spec_rows)
    _write_csv(
        paths[2],
        ["amplitude_ghz", "freq_ghz", "amplitude", "classification", "n", "odd_score"],
        peak_rows,
    )
    return paths


def cmd_tomography_trace(
    config: ExperimentConfig, out_dir: Path, shots: int, seed: int
) -> list[Path]:
    par = _device(config)
    t = config["tomotrace"]
    omega = ghz_to_rad_per_ns(t["omega_ghz"])
    durations = np.arange(0.0, t["duration_ns"] + 1e-9, t["sample_dt_ns"])
    step = _solver_step(config, min(TWO_PI / omega / 200.0, t["sample_dt_ns"] / 2.0))
    header = ["amplitude_ghz", "t_p_ns", "sx", "sy", "sz", "p1"]
    if shots > 0:
        header += ["sx_meas", "sy_meas", "sz_meas"]
    rows = []
    for a_ghz in t["amplitudes_ghz"]:
        amp = ghz_to_rad_per_ns(a_ghz)
        states = evolve.continuous_drive_states(
            par, [amp], omega, durations, target_step=step,
            refine=config["solver"]["refine"],
        )[0]
        z = np.conj(states[:, 0]) * states[:, 1]
        sx, sy = 2.0 * z.real, 2.0 * z.imag
        sz = np.abs(states[:, 0]) ** 2 - np.abs(states[:, 1]) ** 2
        p1 = np.abs(states[:, 1]) ** 2
        meas = None
        if shots > 0:
            seqs = np.random.SeedSequence((seed, int(a_ghz * 1e6))).spawn(len(durations))
            meas = np.empty((len(durations), 3))
            for i, (child, psi) in enumerate(zip(seqs, states)):
                st = StateVector.from_array(psi)
                rng = np.random.default_rng(child)
                for j, basis in enumerate(("ry90", "rx90", "id")):
                    p = np.clip(tomography.measured_p1(st, basis), 0.0, 1.0)
                    k = rng.binomial(shots, p)
                    val = 1.0 - 2.0 * k / shots
                    meas[i, j] = -val if basis == "ry90" else val
        for i, tp in enumerate(durations):
            row = [a_ghz, tp, sx[i], sy[i], sz[i], p1[i]]
            if meas is not None:
                row += [meas[i, 0], meas[i, 1], meas[i, 2]]
            rows.append(row)
    path = out_dir / "bloch_trace.csv"
    _write_csv(path, header, rows)
    return [path]


def cmd_edge_study(config: ExperimentConfig, out_dir: Path, threads: int) -> list[Path]:
    par = _device(config)
    e = config["edges"]
    omega = ghz_to_rad_per_ns(e["omega_ghz"])
    amp = ghz_to_rad_per_ns(e["amplitude_ghz"])
    durations = np.arange(0.0, e["duration_ns"] + 1e-9, e["sample_dt_ns"])
    pairs = [(x, x) for x in e["edge_times_ns"]] + list(e["asymmetric_pairs_ns"])
    fspec = floquet.quasienergy_sweep(
        par.delta, omega, [amp], config["solver"]["truncation_n"]
    )[0]

    def run(pair):
        t_r, t_f = pair
        template = PulseSpec(amp, omega, t_r, 0.0, t_f)
        # same step policy as rabi-scan so the zero-edge pair reproduces it
        cands = [TWO_PI / omega / 200.0, e["sample_dt_ns"] / 2.0]
        cands += [x / 50.0 for x in (t_r, t_f) if x > 0.0]
        step = _solver_step(config, min(cands))
        p1 = evolve.sweep_pulse_duration(
            par, template, durations, target_step=step,
            refine=config["solver"]["refine"],
        )
        lo, hi = spectral.fast_component_amplitudes(durations, p1, omega, fspec.delta_eps)
        return p1, lo, hi

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, pairs))
    else:
        results = [run(p) for p in pairs]

    trace_rows = []
    amp_rows = []
    for (t_r, t_f), (p1, lo, hi) in zip(pairs, results):
        trace_rows.extend([t_r, t_f, tp, v] for tp, v in zip(durations, p1))
        amp_rows.append([t_r, t_f, lo, hi])
    paths = [out_dir / "edge_traces.csv", out_dir / "edge_fast_amplitudes.csv"]
    _write_csv(paths[0], ["t_rise_ns", "t_fall_ns", "t_p_ns", "p1"], trace_rows)
    _write_csv(
        paths[1],
        ["t_rise_ns", "t_fall_ns", "amp_2w_minus_de", "amp_2w_plus_de"],
        amp_rows,
    )
    return paths


def cmd_state_prep(config: ExperimentConfig, out_dir: Path, shots: int, seed: int) -> list[Path]:
    par = _device(config)
    sp = config["stateprep"]
    amp = ghz_to_rad_per_ns(sp["amplitude_ghz"])
    edges = sp["min_edge_ns"]
    n_shots = shots if shots > 0 else sp["shots"]
    report = {}
    for offset, (name, target) in enumerate(
        (("minus_y", StateVector.minus_y()), ("excited", StateVector.excited()))
    ):
        pulse, fid = evolve.prepare_state(par, target, amp, edges)
        final = evolve.propagate(par, pulse, sample_dt=max(pulse.total, 1e-3)).state_at(-1)
        recs = [
            tomography.simulate_shots(final, b, n_shots, seed=seed + 13 * i + 1000 * offset)
            for i, b in enumerate(tomography.BASES)
        ]
        result = tomography.bootstrap_errors(
            recs, tomography.DensityMatrix.from_state(target), b=sp["bootstrap_b"], seed=seed
        )
        report[name] = {
            "pulse": {
                "amplitude_ghz": rad_per_ns_to_ghz(pulse.amplitude_max),
                "carrier_ghz": rad_per_ns_to_ghz(pulse.carrier),
                "t_rise_ns": pulse.t_rise,
                "t_plateau_ns": pulse.t_plateau,
                "t_fall_ns": pulse.t_fall,
                "carrier_phase_rad": pulse.carrier_phase,
                "total_ns": pulse.total,
            },
            "unitary_fidelity": fid,
            "reconstructed_fidelity": result.fidelity_to_target,
            "fidelity_stderr": result.fidelity_stderr,
            "bootstrap_b": result.bootstrap_b,
            "shots": n_shots,
        }
    path = out_dir / "state_prep.json"
    _write_json(path, report)
    return [path]


def cmd_check(full: bool) -> int:
    checks = acceptance.ALL_CHECKS if full else (
        acceptance.check_analytic_limits,
        acceptance.check_printed_matrices,
        acceptance.check_numerical_hygiene,
    )
    failed = 0
    for fn in checks:
        result = fn()
        print(result.line())
        failed += 0 if result.passed else 1
    return 4 if failed else 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strongdrive",
        description="Floquet analysis and pulse simulation of a strongly driven qubit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI config path")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override [run] seed")
    common.add_argument("--shots", type=int, default=0, help="shot-sampled columns (0 = noiseless)")
    common.add_argument("--threads", type=int, default=None, help="override [run] threads")
    common.add_argument("--oracle", action="store_true", help="add monodromy oracle columns")

    sub.add_parser("quasienergies", parents=[common])
    sub.add_parser("rabi-scan", parents=[common])
    sub.add_parser("tomography-trace", parents=[common])
    sub.add_parser("edge-study", parents=[common])
    sub.add_parser("state-prep", parents=[common])
    check = sub.add_parser("check", parents=[common])
    check.add_argument("--full", action="store_true", help="run every acceptance criterion")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.time()
    try:
        if args.command == "check":
            return cmd_check(args.full)
        config = load_config(args.config)
        seed = args.seed if args.seed is not None else config["run"]["seed"]
        threads = args.threads if args.threads is not None else config["run"]["threads"]
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "quasienergies":
            outputs = cmd_quasienergies(config, out_dir, args.oracle)
        elif args.command == "rabi-scan":
            outputs = cmd_rabi_scan(config, out_dir, threads)
        elif args.command == "tomography-trace":
            outputs = cmd_tomography_trace(config, out_dir, args.shots, seed)
        elif args.command == "edge-study":
            outputs = cmd_edge_study(config, out_dir, threads)
        elif args.command == "state-prep":
            outputs = cmd_state_prep(config, out_dir, args.shots, seed)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command}")
    except (ConfigError, ValueError) as exc:
        # domain errors raised by the solvers on bad config values land here
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimulationError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3

    report = {
        "command": args.command,
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "version": __version__,
        "config": config.as_flat_dict(),
        "seed": seed,
        "wall_time_s": round(time.time() - t0, 3),
        "outputs": [
            {"path": p.name, "bytes": p.stat().st_size, "sha256": _sha256(p)}
            for p in outputs
        ],
    }
    _write_json(out_dir / "run_report.json", report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
