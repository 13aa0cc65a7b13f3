"""Command-line runner.

    cavity-eo coupling  --preset feasibility-improved
    cavity-eo cooling   --preset feasibility-baseline --out results/
    cavity-eo parasitic --preset parasitic-sweep
    cavity-eo bae       --preset bae-demo
    cavity-eo compare   --preset compare-cooling --seed 7
    cavity-eo cooling   --set scenario.g_Hz=5000 --format json

Every run writes ``<command>_<name>.csv`` (or ``.data.json`` with
``--format json``) and a ``<command>_<name>.meta.json`` sidecar holding the
resolved manifest, tool version, seed and a timestamp.

Exit codes: 0 success, 2 invalid configuration, 3 unstable system where the
manifest requires a steady state.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .closed_form import cooling_figures, cooling_limit, pa_threshold, parasitic_figures
from .gaussian import evolve_covariance, log_negativity, occupation, steady_state, vacuum_state
from .manifest import (ConfigError, RunManifest, apply_override, load_preset, parse_sweep,
                       resolve_scenario, sweep_points, validate_keys)
from .oracle import OracleDivergenceError, TrajectoryEnsembleSpec, simulate_ensemble
from .params import (CONSTANTS, InvalidParameterError, coupling_rate, hertz, phase_per_volt,
                     voltage_zero_point)
from .systems import Regime, build_system

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE = 0, 2, 3

DEFAULT_PRESETS = {
    "coupling": "feasibility-improved",
    "cooling": "feasibility-baseline",
    "pa": "pa-demo",
    "parasitic": "parasitic-demo",
    "bae": "bae-demo",
    "compare": "compare-cooling",
    "sweep": "parasitic-sweep",
}

COMMAND_REGIME = {
    "cooling": Regime.COOLING,
    "pa": Regime.PARAMETRIC_AMP,
    "parasitic": Regime.PARASITIC_THREE_MODE,
    "bae": Regime.BACK_ACTION_EVADING,
}


class UnstableError(RuntimeError):
    pass


# -- per-point observables ---------------------------------------------------

def coupling_row(doc: dict) -> dict:
    res = resolve_scenario(doc)
    dev = res.device
    if dev is None:
        raise ConfigError("coupling needs a device block", "scenario.device")
    g = coupling_rate(dev)
    return {
        "g_rad_per_s": g,
        "g_Hz": hertz(g),
        "voltage_zero_point_V": voltage_zero_point(dev.omega_b, dev.C),
        "phase_per_volt_rad_per_V": phase_per_volt(dev),
        "l_over_c_tau": dev.l / (CONSTANTS.c * dev.tau),
    }


def cooling_row(doc: dict) -> dict:
    res = resolve_scenario(doc)
    cfg = res.config
    Na, Nb = cfg.optical.occupation, cfg.microwave.occupation
    cf = cooling_figures(cfg.g, res.alpha_sq, cfg.optical.gamma, cfg.microwave.gamma, Na, Nb)
    rep = steady_state(build_system(cfg))
    return {
        "g_rad_per_s": cfg.g,
        "alpha_minus_sq": res.alpha_sq,
        "G0": cf.G0,
        "G": cf.G,
        "G_limit": cooling_limit(cfg.optical.gamma, cfg.microwave.gamma),
        "N_a": Na,
        "N_b": Nb,
        "n_ss_closed_form": cf.n_ss,
        "n_ss_lyapunov": occupation(rep.state, "b") if rep.stable else math.nan,
        "stable": rep.stable,
    }


def pa_row(doc: dict) -> dict:
    res = resolve_scenario(doc)
    cfg = res.config
    rep = steady_state(build_system(cfg))
    return {
        "g_rad_per_s": cfg.g,
        "alpha_plus_sq": res.alpha_sq,
        "C_plus": pa_threshold(cfg.g, res.alpha_sq, cfg.optical.gamma, cfg.microwave.gamma),
        "stable": rep.stable,
        "max_re_eig_rad_per_s": rep.max_drift_eigenvalue_real_part,
        "log_negativity": log_negativity(rep.state, ("a", "b")) if rep.stable else math.nan,
        "n_a": occupation(rep.state, "a") if rep.stable else math.nan,
        "n_b": occupation(rep.state, "b") if rep.stable else math.nan,
    }


def parasitic_row(doc: dict) -> dict:
    res = resolve_scenario(doc)
    cfg = res.config
    Nb = cfg.microwave.occupation
    pf = parasitic_figures(cfg.g, res.alpha_sq, cfg.optical.gamma, cfg.microwave.gamma,
                           cfg.delta, Nb)
    rep = steady_state(build_system(cfg))
    return {
        "g_rad_per_s": cfg.g,
        "alpha0_sq": res.alpha_sq,
        "delta_rad_per_s": cfg.delta,
        "mu": pf.mu,
        "Gamma0": pf.Gamma0,
        "Gamma": pf.Gamma,
        "N_b": Nb,
        "n_ss_closed_form": pf.n_ss,
        "n_ss_lyapunov": occupation(rep.state, "b") if rep.stable else math.nan,
        "formula_valid": pf.valid,
        "stable": rep.stable,
    }


ROW_FUNCS = {
    "coupling": coupling_row,
    Regime.COOLING: cooling_row,
    Regime.PARAMETRIC_AMP: pa_row,
    Regime.PARASITIC_THREE_MODE: parasitic_row,
}


# -- formatting ----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def _select(row: dict, outputs: list[str] | None) -> dict:
    if outputs is None:
        return row
    missing = [k for k in outputs if k not in row]
    if missing:
        raise ConfigError(f"unknown observables {missing}; available: {list(row)}", "outputs")
    return {k: row[k] for k in outputs}


def _write_table(path: Path, header: list[str], rows: list[list], fmt: str) -> Path:
    if fmt == "json":
        path = path.with_suffix(".data.json")
        data = [dict(zip(header, r)) for r in rows]
        path.write_text(json.dumps(data, indent=2, default=_json_default) + "\n")
        return path
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())
    return path


def _json_default(o):
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def _write_sidecar(m: RunManifest, stem: Path, extra: dict | None = None) -> Path:
    meta = {
        "command": m.command,
        "tool": "cavity_eo",
        "tool_version": __version__,
        "seed": m.seed,
        "manifest": m.doc,
        "numpy_version": np.__version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    path = stem.with_suffix(".meta.json")
    path.write_text(json.dumps(meta, indent=2, default=_json_default) + "\n")
    return path


# -- commands -------------------------------------------------------------------

def run_scenario(m: RunManifest) -> tuple[int, list[Path]]:
    """Evaluate the manifest's scenario at every sweep point and write outputs."""
    if m.command == "bae":
        return _run_bae(m)
    if m.command == "coupling":
        key = "coupling"
    else:
        regime = resolve_scenario(m.doc).config.regime
        expected = COMMAND_REGIME.get(m.command)
        if expected is not None and regime is not expected:
            raise ConfigError(f"command {m.command!r} needs regime {expected.value!r}, "
                              f"preset has {regime.value!r}", "scenario.regime")
        if regime not in ROW_FUNCS:
            raise ConfigError(f"regime {regime.value!r} cannot be swept; use the bae command",
                              "scenario.regime")
        key = regime
    if m.command == "sweep" and not parse_sweep(m.doc):
        raise ConfigError("sweep command needs at least one sweep axis", "sweep")
    func = ROW_FUNCS[key]
    axes = parse_sweep(m.doc)
    points = sweep_points(m.doc)
    docs = [d for _, d in points]
    if m.jobs > 1 and len(docs) > 1:
        with ThreadPoolExecutor(max_workers=m.jobs) as pool:
            results = list(pool.map(func, docs))
    else:
        results = [func(d) for d in docs]
    selected = [_select(r, m.outputs) for r in results]
    header = [ax.path for ax in axes] + list(selected[0])
    rows = [list(vals) + list(r.values()) for (vals, _), r in zip(points, selected)]
    stem = m.out_dir / f"{m.command}_{m.name}"
    files = [_write_table(stem.with_suffix(".csv"), header, rows, m.fmt), _write_sidecar(m, stem)]
    if key != "coupling" and m.doc.get("require_steady_state", True):
        if not all(r.get("stable", True) for r in results):
            raise UnstableError("drift matrix is not Hurwitz at one or more sweep points "
                                "(set require_steady_state=false to allow)")
    return EXIT_OK, files


def _run_bae(m: RunManifest) -> tuple[int, list[Path]]:
    res = resolve_scenario(m.doc)
    if res.config.regime is not Regime.BACK_ACTION_EVADING:
        raise ConfigError("bae command needs regime 'back_action_evading'", "scenario.regime")
    if parse_sweep(m.doc):
        raise ConfigError("bae produces a time series and does not sweep", "sweep")
    ts = m.doc.get("time_series") or {}
    try:
        dt, n_steps = float(ts["dt_s"]), int(ts["n_steps"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("needs dt_s and n_steps", "time_series") from None
    sys_ = build_system(res.config)
    traj = evolve_covariance(sys_, vacuum_state(sys_.basis), dt, n_steps)
    labels = list(sys_.basis.labels)
    cols = {"time_s": traj.times}
    for lab in labels:
        cols[f"Var_{lab}"] = traj.variance(lab)
    cols["n_b"] = np.array([occupation(s, "b") for s in traj])
    names = m.outputs or list(cols)
    if "time_s" not in names:
        names = ["time_s"] + names
    missing = [n for n in names if n not in cols]
    if missing:
        raise ConfigError(f"unknown observables {missing}; available: {list(cols)}", "outputs")
    rows = [[cols[n][k] for n in names] for k in range(len(traj))]
    stem = m.out_dir / f"{m.command}_{m.name}"
    return EXIT_OK, [_write_table(stem.with_suffix(".csv"), names, rows, m.fmt),
                     _write_sidecar(m, stem)]


def _oracle_spec(m: RunManifest) -> tuple[TrajectoryEnsembleSpec, str]:
    o = m.doc.get("oracle") or {}
    try:
        spec = TrajectoryEnsembleSpec(int(o["n_trajectories"]), float(o["dt_s"]),
                                      float(o["t_final_s"]), m.seed, float(o.get("burn_in_s", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"needs n_trajectories, dt_s, t_final_s ({exc})", "oracle") from None
    return spec, o.get("scheme", "exact")


COMPARE_HEADER = ["observable", "closed_form", "lyapunov", "oracle", "oracle_se",
                  "rel_diff_closed_form_lyapunov", "z_oracle_lyapunov", "pass", "note"]


def compare_report(m: RunManifest) -> list[list]:
    """Closed form vs Lyapunov vs Monte Carlo for the preset's scenario.

    Backend failures are recorded in the ``note`` column; the report is
    still produced.
    """
    res = resolve_scenario(m.doc)
    cfg = res.config
    tol = {"closed_form_lyapunov_rel": 1e-9, "oracle_sigma": 3.0}
    if cfg.regime is Regime.PARASITIC_THREE_MODE:
        tol["closed_form_lyapunov_rel"] = 0.05
    tol.update(m.doc.get("tolerances") or {})
    if cfg.regime is Regime.BACK_ACTION_EVADING:
        raise ConfigError("compare needs a regime with a steady state and closed form",
                          "scenario.regime")
    system = build_system(cfg)
    spec, scheme = _oracle_spec(m)
    rows: list[list] = []

    rep = steady_state(system)
    try:
        est = simulate_ensemble(system, spec, scheme=scheme, n_jobs=m.jobs)
        oracle_err = None
    except OracleDivergenceError as exc:
        est, oracle_err = None, str(exc)

    if cfg.regime is Regime.PARAMETRIC_AMP:
        c_plus = pa_threshold(cfg.g, res.alpha_sq, cfg.optical.gamma, cfg.microwave.gamma)
        cf_unstable = c_plus >= 1.0
        ly_unstable = not rep.stable
        or_unstable = est is None
        agree = cf_unstable == ly_unstable == or_unstable
        rows.append(["above_threshold", cf_unstable, ly_unstable, or_unstable, None, None, None,
                     agree, f"C_plus={c_plus!r}" + (f"; oracle: {oracle_err}" if oracle_err else "")])
        if rep.stable and est is not None:
            for mode in ("a", "b"):
                rows.append(_oracle_row(f"n_{mode}", None, occupation(rep.state, mode),
                                        est.occupation(mode), tol))
        return rows

    Na, Nb = cfg.optical.occupation, cfg.microwave.occupation
    if cfg.regime is Regime.COOLING:
        cf = cooling_figures(cfg.g, res.alpha_sq, cfg.optical.gamma, cfg.microwave.gamma, Na, Nb).n_ss
    else:
        cf = parasitic_figures(cfg.g, res.alpha_sq, cfg.optical.gamma, cfg.microwave.gamma,
                               cfg.delta, Nb).n_ss
    ly = occupation(rep.state, "b") if rep.stable else None
    rows.append(_oracle_row("n_b", cf, ly, est.occupation("b") if est is not None else None, tol,
                            note=oracle_err or ""))
    return rows


def _oracle_row(name, cf, ly, oracle, tol, note=""):
    o_val, o_se = (None, None) if oracle is None else oracle
    rel = None if cf is None or ly is None else abs(cf - ly) / max(abs(ly), 1e-300)
    z = None if ly is None or o_val is None else abs(o_val - ly) / o_se
    ok = ly is not None and o_val is not None
    if rel is not None:
        ok = ok and rel < tol["closed_form_lyapunov_rel"]
    if z is not None:
        ok = ok and z <= tol["oracle_sigma"]
    return [name, cf, ly, o_val, o_se, rel, z, ok, note]


def run_compare(m: RunManifest) -> tuple[int, list[Path]]:
    if parse_sweep(m.doc):
        raise ConfigError("compare runs a single point", "sweep")
    rows = compare_report(m)
    stem = m.out_dir / f"{m.command}_{m.name}"
    files = [_write_table(stem.with_suffix(".csv"), COMPARE_HEADER, rows, m.fmt),
             _write_sidecar(m, stem)]
    return EXIT_OK, files


# -- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavity-eo", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "coupling": "device geometry -> electro-optic coupling rate g",
        "cooling": "red-sideband cooling figures and steady occupation",
        "pa": "parametric amplification: threshold, stability, entanglement",
        "parasitic": "three-mode cooling with parasitic down-conversion",
        "bae": "back-action-evading quadrature time series",
        "compare": "closed form vs Lyapunov vs Monte Carlo",
        "sweep": "run the preset's scenario over its sweep axes",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--preset", default=DEFAULT_PRESETS[name],
                       help="bundled preset name or path to a JSON manifest")
        p.add_argument("--set", action="append", default=[], metavar="PATH=VALUE",
                       help="override a manifest entry, e.g. scenario.g_Hz=5000")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="64-bit seed (oracle runs)")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def make_manifest(args) -> RunManifest:
    doc = load_preset(args.preset)
    for assignment in args.set:
        doc = apply_override(doc, assignment)
    validate_keys(doc)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "--seed")
    if args.jobs < 1:
        raise ConfigError("must be >= 1", "--jobs")
    doc["seed"] = seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return RunManifest(args.command, doc, out, seed, args.jobs, args.format)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        m = make_manifest(args)
        if m.command == "compare":
            code, files = run_compare(m)
        else:
            code, files = run_scenario(m)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"cavity-eo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnstableError as exc:
        print(f"cavity-eo: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    for f in files:
        print(f)
    return code


if __name__ == "__main__":
    sys.exit(main())
