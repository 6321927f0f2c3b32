"""Scenario runner.

    fnlslab --preset c03-ground-state --out runs/c03
    fnlslab --config my.yaml --out runs/x --emit-plot-data

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 config error,
3 missing prerequisite artifact.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from . import config as cfgmod
from . import io, plotting
from .config import ConfigError, ExperimentConfig
from .diagnostics import (blowup_monitor, build_weight, concentration_columns, concentration_series,
                          virial_identity_defect)
from .evolve import (EvolveControls, FitRefusedError, SimulationAborted, estimate_blowup, fit_power_law, run,
                     rate_exponent_theory, strang_order_ratio)
from .profiles import (ExtractOptions, SyntheticSequenceSpec, align_to_ground_state, compactness_bound_check,
                       extract, manufacture, synthesize)
from .spectral import Field, Grid, energy, gaussian, sobolev_norm
from .variational import (AscentOptions, ConvergenceError, SharpConstants, compute_ground_state, box_sensitivity,
                          gn_margin, gn_rhs, petviashvili_mass_critical, random_smooth_field)

log = logging.getLogger("fnlslab")


class MissingInput(Exception):
    pass


class Run:
    """Output directory bookkeeping: files, assertions, tidy plot data."""

    def __init__(self, cfg: ExperimentConfig, out: Path, emit_plot_data: bool):
        self.cfg = cfg
        self.out = out
        self.emit = emit_plot_data
        self.checks: Dict[str, dict] = {}
        self.plot_rows: List[list] = []
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def check(self, name: str, value, threshold, passed: bool):
        self.checks[name] = {"value": value, "threshold": threshold, "passed": bool(passed)}
        (log.info if passed else log.warning)("%s %s: %r (threshold %r)", "PASS" if passed else "FAIL",
                                              name, value, threshold)

    def tidy(self, figure: str, series: str, x, y):
        if self.emit:
            self.plot_rows.extend([figure, series, float(a), float(b)] for a, b in zip(x, y))

    def finish(self) -> int:
        if self.emit:
            io.write_csv(self.path("plot_data.csv"), ["figure", "series", "x", "y"], self.plot_rows)
        io.write_json(self.path("assertions.json"), self.checks)
        files = {}
        for f in sorted(self.out.rglob("*")):
            if f.is_file() and f.name not in ("manifest.json", "run.log"):
                files[str(f.relative_to(self.out))] = hashlib.sha256(f.read_bytes()).hexdigest()
        p = self.cfg.model()
        io.write_json(self.path("manifest.json"), {
            "config_sha256": self.cfg.digest(), "config": self.cfg.as_dict(), "version": __version__,
            "params": p.as_dict(), "grid": self.cfg.grid, "files": files})
        failed = [k for k, v in self.checks.items() if not v["passed"]]
        for k in failed:
            print(f"assertion failed: {k} = {self.checks[k]['value']!r} "
                  f"(threshold {self.checks[k]['threshold']!r})", file=sys.stderr)
        return 1 if failed else 0


# ---------------------------------------------------------------------------
# helpers

def _grid(cfg) -> Grid:
    return Grid(cfg.params["d"], cfg.grid["N"], cfg.grid["L"])


def _initial(grid: Grid, spec: dict) -> Field:
    if spec["kind"] != "gaussian":
        raise ConfigError("options.initial.kind: only 'gaussian' is supported")
    return gaussian(grid, float(spec["width"]), float(spec["amp"]))


def _need(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise MissingInput(str(p))
    return p


def load_ground_state(path: str):
    d = _need(path)
    _need(str(d / "ground_state.bin"))
    rep_path = _need(str(d / "ground_state.json"))
    Q, _ = io.load_snapshot(d / "ground_state.bin")
    rep = json.loads(rep_path.read_text())
    keys = ("S_gs", "L_gs", "A_GN", "B_GN", "C_GN_masscritical")
    consts = SharpConstants(**{k: rep[k] for k in keys if k in rep})
    return Q, consts, rep


def _series_out(run_: Run, ts, name="series"):
    io.write_csv(run_.path(f"{name}.csv"), ts.columns, ts.rows())
    for c in ("l2", "hs", "energy"):
        run_.tidy(name, c, ts.col("t"), ts.col(c))


def _controls(o: dict, **kw) -> EvolveControls:
    try:
        return EvolveControls(**kw)
    except ValueError as e:
        raise ConfigError(f"options.{e}") from None


# ---------------------------------------------------------------------------
# scenarios

def cmd_ground_state(cfg: ExperimentConfig, run_: Run) -> None:
    p, g, o, a = cfg.model(), _grid(cfg), cfg.options, cfg.assertions
    kind = o["kind"]
    if kind == "mass-critical":
        gs = petviashvili_mass_critical(p, g, max_iter=int(o["max_iter"]))
    elif kind in ("sobolev", "lebesgue"):
        opts = AscentOptions(max_iter=int(o["max_iter"]), tol=float(o["tol"]), strict=False)
        gs = compute_ground_state(p, g, kind, opts=opts)
        gs.diagnostics.pop("maximizer", None)
    else:
        raise ConfigError("options.kind: must be sobolev, lebesgue or mass-critical")
    rep = gs.report()
    if o["box_sensitivity"] and kind != "mass-critical":
        rep["box_sensitivity"] = box_sensitivity(p, g, kind)
    io.save_snapshot(run_.path("ground_state.bin"), gs.field, p)
    io.write_json(run_.path("ground_state.json"), rep)
    x = gs.field.grid.x
    prof = np.abs(gs.field.values) if g.d == 1 else np.abs(gs.field.values[:, g.N // 2])
    io.write_csv(run_.path("profile.csv"), ["x", "abs"], zip(x, prof))
    run_.tidy("profile", "abs", x, prof)
    plotting.profile(gs.field, run_.path("ground_state.png"))
    run_.check("residual_rel", gs.residual_rel, a["residual_rel"], gs.residual_rel < a["residual_rel"])
    if kind != "mass-critical":
        d = max(abs(gs.pohozaev_defect_1), abs(gs.pohozaev_defect_2))
        run_.check("pohozaev", d, a["pohozaev"], d < a["pohozaev"])
        route = gs.diagnostics.get("A_GN_route_gap", gs.diagnostics.get("B_GN_route_gap"))
        run_.check("agn_routes", route, a["agn_routes"], route < a["agn_routes"])
    run_.check("energy", abs(gs.energy_defect), a["energy"], abs(gs.energy_defect) < a["energy"])


def cmd_gn_check(cfg: ExperimentConfig, run_: Run) -> None:
    p, g, o, a = cfg.model(), _grid(cfg), cfg.options, cfg.assertions
    Q, consts, rep = load_ground_state(cfg.inputs["ground_state"])
    which = rep.get("kind", "sobolev")
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(int(o["samples"])):
        f = random_smooth_field(g, rng, int(o["max_bumps"]))
        rows.append([i, gn_rhs(f, consts, p, which), gn_margin(f, consts, p, which)])
    arr = np.array(rows)
    rel = arr[:, 2] / arr[:, 1]
    eq = gn_margin(Q, consts, p, which) / gn_rhs(Q, consts, p, which)
    io.write_csv(run_.path("margins.csv"), ["sample", "rhs", "margin"], rows)
    io.write_json(run_.path("gn_check.json"), {"kind": which, "samples": len(rows), "min_rel_margin": rel.min(),
                                              "equality_rel_margin": eq, "constants": consts.as_dict()})
    plotting.scatter_margins(arr[:, 1], arr[:, 2], run_.path("margins.png"))
    run_.tidy("margins", "rel", arr[:, 1], rel)
    run_.check("margin", float(rel.min()), -a["margin"], rel.min() >= -a["margin"])
    run_.check("equality", abs(eq), a["equality"], abs(eq) < a["equality"])


def cmd_evolve(cfg: ExperimentConfig, run_: Run) -> None:
    p, g, o, a = cfg.model(), _grid(cfg), cfg.options, cfg.assertions
    u0 = _initial(g, o["initial"])
    c = _controls(o, dt0=o["dt"], t_end=o["t_end"], record_stride=int(o["record_stride"]),
                  tail_threshold=o["tail_threshold"], hs_factor=None)
    ts = run(p, u0, c)
    _series_out(run_, ts)
    dr = ts.drifts()
    summary = ts.summary()
    run_.check("mass_drift", dr["mass"], a["mass_drift"], dr["mass"] < a["mass_drift"])
    run_.check("energy_drift", dr["energy"], a["energy_drift"], dr["energy"] < a["energy_drift"])
    run_.check("stop_reason", ts.stop_reason, "horizon", ts.stop_reason == "horizon")
    if o["strang_check"]:
        sg = o["strang_grid"]
        g2 = g if sg is None else Grid(g.d, int(sg[0]), float(sg[1]))
        ratio = strang_order_ratio(p, _initial(g2, o["initial"]), o["dt"], o["strang_t_end"])
        summary["strang_ratio"] = ratio
        lo, hi = a["strang_ratio"]
        run_.check("strang_ratio", ratio, [lo, hi], lo <= ratio <= hi)
    io.write_json(run_.path("summary.json"), summary)
    plotting.series(ts, run_.path("series.png"))


def cmd_virial(cfg: ExperimentConfig, run_: Run) -> None:
    p, g, o, a = cfg.model(), _grid(cfg), cfg.options, cfg.assertions
    w = build_weight(float(o["R"]), g)
    u0 = _initial(g, o["initial"])
    c = _controls(o, dt0=o["dt"], t_end=o["t_end"], record_stride=int(o["record_stride"]),
                  tail_threshold=o["tail_threshold"], hs_factor=None)
    ts = run(p, u0, c, weight=w)
    _series_out(run_, ts)
    defect, det = virial_identity_defect(ts, p, tail_limit=o["tail_threshold"])
    E0 = energy(u0, p)
    mon = blowup_monitor(ts, p, E0)
    io.write_csv(run_.path("virial.csv"), ["t", "dM", "rhs", "rel"],
                 zip(det["t"], det["dM"], det["rhs"], det["rel"]))
    io.write_json(run_.path("virial.json"), {
        "defect": defect, "forms_gap": det["forms_gap"], "coefficients": det["coefficients"],
        "weight": w.constraint_report, "E0": E0, "stop_reason": ts.stop_reason,
        "monitor": {k: v for k, v in mon.items() if k in ("applicable", "reason", "delta", "fraction")}})
    run_.tidy("virial", "dM", det["t"], det["dM"])
    run_.tidy("virial", "rhs", det["t"], det["rhs"])
    plotting.virial(det, run_.path("virial.png"))
    run_.check("virial_defect", defect, a["defect"], defect < a["defect"])


def cmd_blowup(cfg: ExperimentConfig, run_: Run) -> None:
    p, g, o, a = cfg.model(), _grid(cfg), cfg.options, cfg.assertions
    u0 = _initial(g, o["initial"])
    E0 = energy(u0, p)
    keep = deque(maxlen=int(o["keep_last"]))
    c = _controls(o, dt0=o["dt0"], t_end=o["t_end"], record_stride=int(o["record_stride"]),
                  snapshot_stride=int(o["snapshot_stride"]), adapt=o["adapt"], c_adapt=o["c_adapt"],
                  hs_factor=o["hs_factor"], spectral_guard=o["spectral_guard"],
                  tail_threshold=o["tail_threshold"])
    try:
        ts = run(p, u0, c, on_snapshot=lambda k, t, f: keep.append((k, t, f)), keep_snapshots=False)
    except SimulationAborted as e:
        ts = e.series
    _series_out(run_, ts)
    for k, t, f in keep:
        io.save_snapshot(run_.path(f"snapshots/snap_{k:05d}.bin"), f, p, t)
    fit, why = None, None
    try:
        estimate_blowup(ts, o["growth_from"], int(o["min_records"]))  # refuses unusable tails
        hs = ts.col("hs")
        sel = np.nonzero(hs >= o["growth_from"] * hs[0])[0][0]
        fit = fit_power_law(ts.t[sel:], hs[sel:])
    except FitRefusedError as e:
        why = str(e)
    theory = rate_exponent_theory(p)
    out = {"E0": E0, "initial": o["initial"], "stop_reason": ts.stop_reason, "theory_exponent": theory,
           "summary": ts.summary(), "fit_refused": why}
    if fit is not None:
        out.update({"T_est": fit[0], "rate_exponent": fit[1], "fit_R2": fit[2]})
    io.write_json(run_.path("blowup.json"), out)
    plotting.blowup(ts, fit, run_.path("blowup.png"))
    run_.check("E0_negative", E0, 0.0, E0 < 0)
    run_.check("stop_reason", ts.stop_reason, a["stop_reason"], ts.stop_reason == a["stop_reason"])
    if fit is None:
        run_.check("fit", why, "fit accepted", False)
        return
    run_.check("fit_R2", fit[2], a["fit_R2"], fit[2] > a["fit_R2"])
    lo = a["exponent_fraction"] * theory
    run_.check("rate_exponent", fit[1], lo, fit[1] >= lo)


def _snapshots(path: str):
    d = _need(path)
    files = sorted(d.glob("snap_*.bin")) or sorted((d / "snapshots").glob("snap_*.bin"))
    if not files:
        raise MissingInput(str(d / "snapshots/snap_*.bin"))
    snaps = []
    for f in files:
        u, head = io.load_snapshot(f)
        snaps.append((head["t"], u))
    return d, snaps


def cmd_concentration(cfg: ExperimentConfig, run_: Run) -> None:
    p, o, a = cfg.model(), cfg.options, cfg.assertions
    Q, consts, _ = load_ground_state(cfg.inputs["ground_state"])
    d, snaps = _snapshots(cfg.inputs["snapshots"])
    bj = d / "blowup.json"
    if not bj.exists():
        raise MissingInput(str(bj))
    info = json.loads(bj.read_text())
    if "T_est" not in info:
        raise MissingInput(f"{bj} (no T_est)")
    A = o["A"] if o["A"] is not None else 4.0 * float(info["initial"]["width"])
    recs = concentration_series(snaps, p, info["T_est"], A, o["beta"])
    io.write_csv(run_.path("concentration.csv"), concentration_columns(p.d), [r.row() for r in recs])
    S2 = consts.S_gs ** 2
    last = recs[-int(o["last"]):]
    vals = np.array([r.sobolev_value for r in last])
    io.write_json(run_.path("concentration.json"), {"S_gs": consts.S_gs, "A": A, "beta": o["beta"],
                                                    "T": info["T_est"], "final": vals[-1],
                                                    "final_over_S2": vals[-1] / S2})
    run_.tidy("concentration", "sobolev_value", [r.t for r in recs], [r.sobolev_value for r in recs])
    plotting.concentration(recs, S2, run_.path("concentration.png"))
    mono = bool(np.all(np.diff(vals) >= 0))
    run_.check("nondecreasing_last", mono, True, mono)
    run_.check("final_over_S2", vals[-1] / S2, a["fraction"], vals[-1] >= a["fraction"] * S2)


def cmd_profiles(cfg: ExperimentConfig, run_: Run) -> None:
    p, o, a = cfg.model(), cfg.options, cfg.assertions
    Q, consts, _ = load_ground_state(cfg.inputs["ground_state"])
    g = Q.grid
    ext = ExtractOptions(window=o["window"], threshold=o["threshold"], combine=o["combine"])
    out: dict = {"mode": o["mode"]}
    if o["mode"] == "equality":
        shifts = [tuple([float(x)] + [0.0] * (g.d - 1)) for x in o["shifts"]]
        vs = synthesize(SyntheticSequenceSpec([Q], [shifts]))
        chk = compactness_bound_check(vs, consts.S_gs, p, ext)
        out["bound"] = chk
        io.write_json(run_.path("profiles.json"), out)
        dev = abs(chk["ratio"] - 1)
        run_.check("bound_ratio", chk["ratio"], [1 - a["bound_ratio"], 1 + a["bound_ratio"]],
                   dev <= a["bound_ratio"])
        return
    if o["mode"] != "planted":
        raise ConfigError("options.mode: must be planted or equality")
    sec = gaussian(g, o["second"]["width"], o["second"]["amp"])
    seps = [float(s) for s in o["separations"]]
    pad = [0.0] * (g.d - 1)
    law = [[tuple([-s / 2] + pad) for s in seps], [tuple([s / 2] + pad) for s in seps]]
    vs = synthesize(SyntheticSequenceSpec([Q, sec], law, noise=o["noise"], seed=cfg.seed))
    ps = extract(vs, p, ext)
    truth = [Q, sec]
    errs, shift_err = [], []
    for j, V in enumerate(ps.profiles[:2]):
        # match each extracted profile to the nearest planted one by position at the last n
        k = int(np.argmin([np.linalg.norm(g.wrap(np.subtract(ps.shifts[j][-1], law[i][-1]))) for i in range(2)]))
        errs.append(sobolev_norm(V - truth[k], p.s) / sobolev_norm(truth[k], p.s))
        shift_err.append(max(float(np.max(np.abs(g.wrap(np.subtract(x, y))))) for x, y in zip(ps.shifts[j], law[k])))
    for j, V in enumerate(ps.profiles):
        io.save_snapshot(run_.path(f"profile_{j}.bin"), V, p)
    chk = compactness_bound_check(vs, consts.S_gs, p, ext, ps=ps)
    out.update(ps.report())
    out.update({"profile_errors": errs, "shift_errors": shift_err, "bound_ratio": chk["ratio"],
                "profiles": [f"profile_{j}.bin" for j in range(len(ps.profiles))]})
    io.write_json(run_.path("profiles.json"), out)
    plotting.profiles(truth, ps.profiles, run_.path("profiles.png"))
    for j, V in enumerate(ps.profiles):
        run_.tidy("profiles", f"profile_{j}", g.x, np.abs(V.values if g.d == 1 else V.values[:, g.N // 2]))
    run_.check("profile_count", len(ps.profiles), 2, len(ps.profiles) == 2)
    if len(errs) == 2:
        run_.check("profile_error", max(errs), a["profile_error"], max(errs) < a["profile_error"])
        cells = max(shift_err) / g.h
        run_.check("shift_cells", cells, a["shift_cells"], cells <= a["shift_cells"])
    dpy = max(ps.defects["pythagoras_sc"], ps.defects["pythagoras_s"])
    run_.check("pythagoras", dpy, a["pythagoras"], dpy < a["pythagoras"])
    run_.check("remainder", ps.defects["remainder_Lq"], a["remainder"], ps.defects["remainder_Lq"] < a["remainder"])


def cmd_limiting_profile(cfg: ExperimentConfig, run_: Run) -> None:
    p, o, a = cfg.model(), cfg.options, cfg.assertions
    Q, consts, _ = load_ground_state(cfg.inputs["ground_state"])
    g = Q.grid
    x0 = [float(v) for v in o["x0"]]
    if len(x0) != g.d:
        raise ConfigError(f"options.x0: needs {g.d} components")
    u = manufacture(Q, p, float(o["theta"]), x0, float(o["lam"]))
    theta, xr, lam, r_sc, r_s = align_to_ground_state(u, Q, p)
    dth = abs((theta - o["theta"] + math.pi) % (2 * math.pi) - math.pi)
    dlam = abs(lam - o["lam"]) / o["lam"]
    dx = float(np.max(np.abs(np.subtract(xr, x0))))
    out = {"manufactured": {"theta": o["theta"], "x0": x0, "lam": o["lam"]},
           "recovered": {"theta": theta, "x0": list(xr), "lam": lam}, "residual_sc": r_sc, "residual_s": r_s}
    if "snapshots" in cfg.inputs:
        _, snaps = _snapshots(cfg.inputs["snapshots"])
        rows = []
        for t, v in snaps:
            try:
                th, xx, lm, rs, rh = align_to_ground_state(v, Q, p)
            except Exception as e:  # early snapshots may not be aligned yet
                log.info("t=%g not aligned: %s", t, e)
                continue
            rows.append([t, th, lm, rs, rh])
        io.write_csv(run_.path("limiting_profile.csv"), ["t", "theta", "lam", "residual_sc", "residual_s"], rows)
        run_.tidy("limiting", "residual_s", [r[0] for r in rows], [r[4] for r in rows])
    io.write_json(run_.path("limiting_profile.json"), out)
    rec = manufacture(Q, p, theta, xr, lam)
    plotting.alignment(u, rec, run_.path("alignment.png"))
    run_.check("theta", dth, a["theta"], dth < a["theta"])
    run_.check("lam", dlam, a["lam"], dlam < a["lam"])
    run_.check("x0_cells", dx / g.h, a["x0_cells"], dx / g.h <= a["x0_cells"])


COMMANDS: Dict[str, Callable[[ExperimentConfig, Run], None]] = {
    "ground-state": cmd_ground_state, "gn-check": cmd_gn_check, "evolve": cmd_evolve,
    "blowup": cmd_blowup, "concentration": cmd_concentration, "virial": cmd_virial,
    "profiles": cmd_profiles, "limiting-profile": cmd_limiting_profile,
}


# ---------------------------------------------------------------------------
# entry point

def _setup_log(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    h = logging.FileHandler(out / "run.log", mode="w")
    h.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.handlers[:] = [h]
    log.setLevel(logging.INFO)
    log.propagate = False


def run_scenario(cfg: ExperimentConfig, out: Path, emit_plot_data: bool = False) -> int:
    _setup_log(out)
    log.info("fnlslab %s scenario=%s config=%s", __version__, cfg.scenario, cfg.digest())
    r = Run(cfg, out, emit_plot_data)
    try:
        COMMANDS[cfg.scenario](cfg, r)
    except MissingInput as e:
        print(f"missing prerequisite: {e}", file=sys.stderr)
        log.error("missing prerequisite %s", e)
        return 3
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ConvergenceError as e:
        io.write_json(out / "failure.json", {"error": str(e), "type": type(e).__name__})
        print(f"scenario failed: {e}", file=sys.stderr)
        return 1
    return r.finish()


def _sweep_job(args):
    cfg, out, emit = args
    return run_scenario(cfg, Path(out), emit)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fnlslab", description="Fractional NLS laboratory scenarios.")
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--config", help="YAML or JSON experiment config")
    src.add_argument("--preset", help="name of a shipped preset")
    ap.add_argument("--out", default="runs/out", help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
    ap.add_argument("--emit-plot-data", action="store_true", help="also write tidy long-format plot_data.csv")
    ap.add_argument("--list-presets", action="store_true")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_presets:
        print("\n".join(cfgmod.preset_names()))
        return 0
    try:
        if args.config:
            if not Path(args.config).exists():
                print(f"missing prerequisite: {args.config}", file=sys.stderr)
                return 3
            cfg = cfgmod.load(args.config)
        elif args.preset:
            cfg = cfgmod.load_preset(args.preset)
        else:
            print("config error: one of --config or --preset is required", file=sys.stderr)
            return 2
        if args.seed is not None:
            cfg = cfgmod.with_override(cfg, "seed", args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs: must be at least 1")
        jobs = []
        if cfg.sweep:
            keys = list(cfg.sweep)
            for i in range(len(cfg.sweep[keys[0]])):
                c = cfg
                for k in keys:
                    c = cfgmod.with_override(c, k, cfg.sweep[k][i])
                jobs.append((c, str(Path(args.out) / f"sweep_{i:03d}"), args.emit_plot_data))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if not jobs:
        return run_scenario(cfg, Path(args.out), args.emit_plot_data)
    if args.jobs == 1:
        codes = [_sweep_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            codes = list(ex.map(_sweep_job, jobs))
    io.write_json(Path(args.out) / "sweep.json", {"runs": [j[1] for j in jobs], "exit_codes": codes})
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
