"""The eleven acceptance criteria at their stated tolerances.

Each test appends one "criterion N: PASS|FAIL ..." line to the terminal summary.
"""
import csv
import json
import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fnlslab import cli
from fnlslab.diagnostics import build_weight, virial_coefficients, virial_identity_defect
from fnlslab.evolve import EvolveControls, run, strang_order_ratio
from fnlslab.profiles import (
    SyntheticSequenceSpec, align_to_ground_state, compactness_bound_check, extract, manufacture, synthesize,
)
from fnlslab.spectral import Grid, derive_params, energy, gaussian, rescale, sobolev_norm
from fnlslab.variational import compute_ground_state, gn_margin, gn_rhs, random_smooth_field, weinstein_H


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_exponents():
    t0 = time.perf_counter()
    p = derive_params(2, 0.75, 2.4)
    dt = time.perf_counter() - t0
    ok = p.sc == 0.375 and p.alpha_c == 3.2 and dt < 1e-3
    report(1, ok, f"sc={p.sc} alpha_c={p.alpha_c} runtime={dt * 1e3:.3f} ms")


def test_criterion_02_scaling():
    p = derive_params(2, 0.75, 2.4)
    t0 = time.perf_counter()
    g = Grid(2, 512, 64.0)
    f = gaussian(g, 0.75)
    worst = 0.0
    sc_ratio = []
    for lam in (0.5, 2.0):
        fl = rescale(f, lam, p)
        for gam in (0.0, p.sc, p.s):
            want = lam ** (gam + 2 * p.s / p.alpha - p.d / 2)
            got = sobolev_norm(fl, gam) / sobolev_norm(f, gam)
            worst = max(worst, abs(got / want - 1))
            if gam == p.sc:
                sc_ratio.append(got)
    dt = time.perf_counter() - t0
    ok = worst < 1e-4 and all(abs(r - 1) < 1e-4 for r in sc_ratio) and dt < 5
    report(2, ok, f"max rel error={worst:.2e} Hsc ratios={[round(r, 8) for r in sc_ratio]} runtime={dt:.2f} s")


def test_criterion_03_ground_state():
    p = derive_params(1, 0.8, 4.0)
    t0 = time.perf_counter()
    gs = compute_ground_state(p, Grid(1, 1024, 32.0))
    dt = time.perf_counter() - t0
    Q = gs.field
    ns2 = sobolev_norm(Q, p.s) ** 2
    poh = max(abs(gs.pohozaev_defect_1), abs(gs.pohozaev_defect_2))
    e = abs(energy(Q, p)) / ns2
    A_fun = weinstein_H(Q, p)
    A_id = (p.alpha + 2) / 2 * gs.constants.S_gs ** (-p.alpha)
    routes = abs(A_fun - A_id) / A_id
    parts = {"residual": gs.residual_rel < 1e-6, "pohozaev": poh < 1e-5, "energy": e < 1e-5,
             "A_GN": routes < 1e-6, "runtime": dt < 60}
    bad = [k for k, v in parts.items() if not v]
    report(3, not bad, f"residual={gs.residual_rel:.3e} pohozaev={poh:.1e} |E|/|Q|^2={e:.1e} "
                       f"A_GN gap={routes:.1e} runtime={dt:.2f} s" + (f" failing: {bad}" if bad else ""))


def test_criterion_04_gn(gs1, p1):
    t0 = time.perf_counter()
    g = Grid(1, 1024, 32.0)
    rng = np.random.default_rng(0)
    rel = []
    for _ in range(1000):
        f = random_smooth_field(g, rng)
        rel.append(gn_margin(f, gs1.constants, p1) / gn_rhs(f, gs1.constants, p1))
    eq = abs(gn_margin(gs1.field, gs1.constants, p1)) / gn_rhs(gs1.field, gs1.constants, p1)
    dt = time.perf_counter() - t0
    ok = min(rel) >= -1e-6 and eq < 1e-4 and dt < 30
    report(4, ok, f"min margin/RHS={min(rel):.3e} at Q={eq:.1e} runtime={dt:.1f} s")


def test_criterion_05_conservation():
    p = derive_params(2, 0.75, 2.4)
    g = Grid(2, 256, 24.0)
    u0 = gaussian(g, 1.0, 0.5)
    ts = run(p, u0, EvolveControls(dt0=1e-3, t_end=1.0, record_stride=10, hs_factor=None))
    d = ts.drifts()
    ratio = strang_order_ratio(p, u0, 1e-3, 1.0)
    ok = ts.stop_reason == "horizon" and d["mass"] < 1e-10 and d["energy"] < 1e-7 and 3.6 <= ratio <= 4.4
    report(5, ok, f"mass drift={d['mass']:.1e} energy drift={d['energy']:.1e} Strang ratio={ratio:.3f}")


def test_criterion_06_virial():
    p = derive_params(2, 0.75, 2.4)
    t0 = time.perf_counter()
    g = Grid(2, 256, 8.0)
    w = build_weight(3.9, g)
    u0 = gaussian(g, 1 / math.sqrt(2), 3.0)
    ts = run(p, u0, EvolveControls(dt0=5e-4, t_end=0.08, record_stride=1, tail_threshold=1e-3, hs_factor=None),
             weight=w)
    defect, det = virial_identity_defect(ts, p, tail_limit=1e-3)
    dt = time.perf_counter() - t0
    coef = virial_coefficients(p)
    ok = defect < 1e-3 and dt < 120 and math.isclose(coef[0], 19.2) and math.isclose(coef[1], 3.6)
    report(6, ok, f"defect={defect:.2e} coefficients=({coef[0]:.1f}, {coef[1]:.1f}) runtime={dt:.1f} s")


@pytest.fixture(scope="module")
def blowup_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("presets")
    here = os.getcwd()
    os.chdir(root)
    try:
        codes = {name: cli.main(["--preset", name, "--out", f"runs/{out}"])
                 for name, out in (("gs-2d", "gs-2d"), ("c07-blowup", "c07"), ("c08-concentration", "c08"))}
    finally:
        os.chdir(here)
    return root / "runs", codes


def test_criterion_07_blowup(blowup_runs):
    runs, codes = blowup_runs
    b = json.loads((runs / "c07" / "blowup.json").read_text())
    lo = 0.8 * b["theory_exponent"]
    ok = (codes["c07-blowup"] == 0 and b["E0"] < 0 and b["stop_reason"] == "Hs-threshold"
          and b.get("fit_R2", 0) > 0.99 and b.get("rate_exponent", 0) >= lo)
    report(7, ok, f"E0={b['E0']:.3f} stop={b['stop_reason']} R2={b.get('fit_R2', float('nan')):.5f} "
                  f"exponent={b.get('rate_exponent', float('nan')):.4f} (>= {lo:.3f}, soft)")


def test_criterion_08_concentration(blowup_runs):
    runs, codes = blowup_runs
    rows = list(csv.DictReader(open(runs / "c08" / "concentration.csv")))
    vals = np.array([float(r["sobolev_value"]) for r in rows])[-10:]
    c = json.loads((runs / "c08" / "concentration.json").read_text())
    S2 = c["S_gs"] ** 2
    mono = bool(np.all(np.diff(vals) >= 0))
    ok = codes["c08-concentration"] == 0 and mono and vals[-1] >= 0.9 * S2
    report(8, ok, f"nondecreasing over last 10={mono} final/S_gs^2={vals[-1] / S2:.3f} (soft)")


def test_criterion_09_profiles(gs1_wide, p1):
    Q = gs1_wide.field
    g = Q.grid
    t0 = time.perf_counter()
    sec = gaussian(g, 1.0, 1.0)
    seps = [8.0, 16.0, 32.0]
    law = [[(-s / 2,) for s in seps], [(s / 2,) for s in seps]]
    vs = synthesize(SyntheticSequenceSpec([Q, sec], law))
    ps = extract(vs, p1)
    dt = time.perf_counter() - t0
    truth = [Q, sec]
    errs, cells = [], []
    for V, sh in zip(ps.profiles, ps.shifts):
        k = int(np.argmin([abs(g.wrap(np.subtract(sh[-1], law[i][-1]))[0]) for i in range(2)]))
        errs.append(float(sobolev_norm(V - truth[k], p1.s) / sobolev_norm(truth[k], p1.s)))
        cells.append(float(max(abs(g.wrap(np.subtract(x, y))[0]) for x, y in zip(sh, law[k])) / g.h))
    dfx = ps.defects
    ok = (len(ps.profiles) == 2 and max(errs) < 0.05 and max(cells) <= 1.0
          and max(dfx["pythagoras_sc"], dfx["pythagoras_s"]) < 0.02 and dfx["remainder_Lq"] < 0.05 and dt < 60)
    report(9, ok, f"profiles={len(ps.profiles)} Hs errors={[round(e, 4) for e in errs]} "
                  f"shift cells={[round(c, 3) for c in cells]} pythagoras=({dfx['pythagoras_sc']:.1e}, "
                  f"{dfx['pythagoras_s']:.1e}) remainder={dfx['remainder_Lq']:.1e} runtime={dt:.1f} s")


def test_criterion_10_equality(gs1, p1):
    vs = synthesize(SyntheticSequenceSpec([gs1.field], [[(-3.0,), (5.0,), (11.0,)]]))
    r = compactness_bound_check(vs, gs1.constants.S_gs, p1)["ratio"]
    report(10, abs(r - 1) <= 0.02, f"bound ratio={r:.6f}")


def test_criterion_11_round_trip(gs1, p1):
    Q = gs1.field
    theta, x0, lam = 0.7, (1.234,), 2.5
    th, xr, lm, r_sc, r_s = align_to_ground_state(manufacture(Q, p1, theta, x0, lam), Q, p1)
    dth = abs((th - theta + math.pi) % (2 * math.pi) - math.pi)
    dx = abs(xr[0] - x0[0])
    dl = abs(lm - lam) / lam
    ok = dth < 1e-6 and dx <= Q.grid.h and dl < 1e-6
    report(11, ok, f"theta err={dth:.1e} x0 err={dx:.1e} (cell {Q.grid.h:.3f}) lambda rel err={dl:.1e}")
