"""Strang-split time integration of i u_t - (-D)^s u = -|u|^a u.

Both substeps are solved exactly: the linear flow is a Fourier phase and the
nonlinear flow rotates the phase pointwise because |u| is conserved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import fft as sfft
from scipy import optimize

from .spectral import Field, FnlsError, ModelParams, tail_mass

COLUMNS = ["t", "dt", "step", "l2", "hsc", "hs", "lp", "lac", "energy", "virial",
           "tail", "sym", "spec_tail"]
COLUMN_DOC = {
    "t": "time",
    "dt": "step used to reach t",
    "step": "step counter",
    "l2": "L2 norm",
    "hsc": "homogeneous H^sc norm",
    "hs": "homogeneous H^s norm",
    "lp": "L^(alpha+2) norm",
    "lac": "L^(alpha_c) norm",
    "energy": "conserved energy",
    "virial": "localized virial action (nan without a weight)",
    "tail": "L2 mass fraction in the outer 10% annulus",
    "sym": "||u(x)-u(-x)|| / ||u||",
    "spec_tail": "fraction of H^s energy above 2/3 of the Nyquist wavenumber",
}


class SimulationAborted(FnlsError):
    def __init__(self, msg, series=None, last_good: Optional[Field] = None):
        super().__init__(msg)
        self.series = series
        self.last_good = last_good


class FitRefusedError(FnlsError):
    pass


# ---------------------------------------------------------------------------
# substeps

def _dispersion(grid, s):
    return grid.symbol(2 * s)


def linear_substep(f: Field, tau: float, params: ModelParams) -> Field:
    """Exact flow of i u_t = (-D)^s u over time tau."""
    F = f.hat() * np.exp(-1j * tau * _dispersion(f.grid, params.s))
    return f.with_values(sfft.ifftn(F))


def nonlinear_substep(f: Field, tau: float, params: ModelParams) -> Field:
    """Exact flow of i u_t = -|u|^a u over time tau."""
    u = f.values
    return f.with_values(u * np.exp(1j * tau * np.abs(u) ** params.alpha))


def strang_step(f: Field, dt: float, params: ModelParams) -> Field:
    """Half nonlinear, full linear, half nonlinear.  Negative dt steps backward."""
    u = nonlinear_substep(f, dt / 2, params)
    u = linear_substep(u, dt, params)
    return nonlinear_substep(u, dt / 2, params)


# ---------------------------------------------------------------------------
# controls and records

@dataclass
class EvolveControls:
    dt0: float = 1e-3
    t_end: float = 1.0
    record_stride: int = 1
    snapshot_stride: int = 0          # in records; 0 keeps none
    adapt: str = "none"               # none | inverse-sup
    c_adapt: float = 1.0
    hs_factor: Optional[float] = 1e3  # stop when ||u||_{H^s} exceeds this multiple of its start value
    hs_max: Optional[float] = None    # absolute alternative
    min_dt: float = 1e-12
    tail_threshold: float = 1e-6
    spectral_guard: Optional[float] = None  # stop on resolution loss when spec_tail exceeds this

    def __post_init__(self):
        if not self.dt0 > 0:
            raise ValueError("dt0: must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end: must be positive")
        if self.adapt not in ("none", "inverse-sup"):
            raise ValueError("adapt: must be 'none' or 'inverse-sup'")
        for name in ("hs_factor", "hs_max", "spectral_guard"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name}: must be positive")
        if not (self.min_dt > 0 and self.tail_threshold > 0 and self.c_adapt > 0):
            raise ValueError("min_dt, tail_threshold, c_adapt: must be positive")

    def step_size(self, supnorm: float, alpha: float) -> float:
        if self.adapt == "none":
            return self.dt0
        return self.dt0 / (1.0 + supnorm ** alpha / self.c_adapt)


@dataclass
class TimeSeries:
    params: ModelParams
    records: np.ndarray
    stop_reason: str
    snapshots: List[Tuple[float, Field]] = dc_field(default_factory=list)
    steps: int = 0
    columns: List[str] = dc_field(default_factory=lambda: list(COLUMNS))

    def col(self, name: str) -> np.ndarray:
        return self.records[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.col("t")

    def drifts(self) -> dict:
        m = self.col("l2") ** 2
        e = self.col("energy")
        return {"mass": float(np.max(np.abs(m - m[0])) / m[0]),
                "energy": float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300)),
                "symmetry": float(np.max(self.col("sym")))}

    def rows(self):
        return self.records.tolist()

    def summary(self, fit=None) -> dict:
        out = {"stop_reason": self.stop_reason, "steps": self.steps,
               "t_final": float(self.t[-1]), "records": int(len(self.records)),
               "drifts": self.drifts(), "hs_growth": float(self.col("hs")[-1] / self.col("hs")[0])}
        if fit is not None:
            out.update({"T_est": fit[0], "rate_exponent": fit[1], "fit_R2": fit[2]})
        return out


def measure(u: np.ndarray, grid, params: ModelParams, weight=None) -> dict:
    """All monitored quantities of one state."""
    F = sfft.fftn(u)
    P2 = np.abs(F) ** 2 * grid.parseval
    ws = grid.symbol(2 * params.s)
    hs2 = float(np.sum(ws * P2))
    hsc = math.sqrt(float(np.sum(grid.symbol(2 * params.sc) * P2)))
    au = np.abs(u)
    p = params.alpha + 2
    lp_p = float(np.sum(au ** p) * grid.cell)
    lac = float((np.sum(au ** params.alpha_c) * grid.cell) ** (1 / params.alpha_c))
    l2 = math.sqrt(float(np.sum(au ** 2) * grid.cell))
    hi = grid.kmag > (2.0 / 3.0) * math.pi / grid.h
    spec_tail = float(np.sum(ws[hi] * P2[hi]) / hs2) if hs2 > 0 else 0.0
    rev = np.roll(np.flip(u), 1, axis=tuple(range(grid.d)))
    sym = float(np.linalg.norm(u - rev) / max(np.linalg.norm(u), 1e-300))
    f = Field(grid, u)
    vir = math.nan
    if weight is not None:
        from .diagnostics import virial_action
        vir = virial_action(f, weight, F=F)
    return {"l2": l2, "hsc": hsc, "hs": math.sqrt(hs2), "lp": lp_p ** (1 / p),
            "lac": lac, "energy": 0.5 * hs2 - lp_p / p, "virial": vir,
            "tail": tail_mass(f), "sym": sym, "spec_tail": spec_tail}


def run(params: ModelParams, u0: Field, controls: EvolveControls, weight=None,
        on_snapshot: Optional[Callable[[int, float, Field], None]] = None,
        keep_snapshots: bool = True) -> TimeSeries:
    """Integrate from u0 until t_end or a stop rule fires.

    Consecutive nonlinear half steps are fused (they compose exactly); the
    pending half step is flushed before every record so records hold the
    true Strang iterate.
    """
    grid = u0.grid
    c = controls
    if tail_mass(u0) > c.tail_threshold:
        raise ValueError("u0: tail mass exceeds the escape threshold")
    disp = _dispersion(grid, params.s)
    a = params.alpha
    u = np.array(u0.values)
    rows, snaps = [], []
    m0 = measure(u, grid, params, weight)
    rows.append([0.0, 0.0, 0] + [m0[k] for k in COLUMNS[3:]])
    hs0 = m0["hs"]
    limit = c.hs_max if c.hs_max is not None else (c.hs_factor * hs0 if c.hs_factor else math.inf)

    def snapshot(k, t, vals):
        f = Field(grid, vals, f"u(t={t:.6g})")
        if keep_snapshots:
            snaps.append((t, f))
        if on_snapshot:
            on_snapshot(k, t, f)

    if c.snapshot_stride:
        snapshot(0, 0.0, u)
    t, step, pending, nrec = 0.0, 0, 0.0, 0
    last_good = u.copy()
    reason = "horizon"
    while True:
        dt = c.step_size(float(np.max(np.abs(u))), a)
        if dt < c.min_dt:
            reason = "dt-underflow"
            break
        dt = min(dt, c.t_end - t)
        u = u * np.exp(1j * (pending + dt / 2) * np.abs(u) ** a)
        u = sfft.ifftn(np.exp(-1j * dt * disp) * sfft.fftn(u))
        pending = dt / 2
        t += dt
        step += 1
        at_end = t >= c.t_end * (1 - 1e-14)
        if step % c.record_stride and not at_end:
            continue
        u = u * np.exp(1j * pending * np.abs(u) ** a)
        pending = 0.0
        if not np.all(np.isfinite(u)):
            series = TimeSeries(params, np.array(rows), "nan", snaps, step)
            raise SimulationAborted(f"non-finite values at t={t:.6g}", series, Field(grid, last_good))
        last_good = u.copy()
        m = measure(u, grid, params, weight)
        rows.append([t, dt, step] + [m[k] for k in COLUMNS[3:]])
        nrec += 1
        if c.snapshot_stride and nrec % c.snapshot_stride == 0:
            snapshot(nrec, t, u)
        if m["hs"] > limit:
            reason = "Hs-threshold"
        elif m["tail"] > c.tail_threshold:
            reason = "tail-escape"
        elif c.spectral_guard is not None and m["spec_tail"] > c.spectral_guard:
            reason = "resolution-loss"
        elif at_end:
            reason = "horizon"
        else:
            continue
        break
    if pending:
        u = u * np.exp(1j * pending * np.abs(u) ** a)
    if c.snapshot_stride and (not snaps or snaps[-1][0] != t) and (keep_snapshots or on_snapshot):
        snapshot(nrec, t, u)
    ts = TimeSeries(params, np.array(rows, float), reason, snaps, step)
    ts.final = Field(grid, u, f"u(t={t:.6g})")
    return ts


def evolve_to(params: ModelParams, u0: Field, dt: float, t_end: float) -> Field:
    """Fixed-step integration without records (used for order tests)."""
    n = int(round(t_end / dt))
    grid = u0.grid
    disp = np.exp(-1j * dt * _dispersion(grid, params.s))
    a = params.alpha
    u = np.array(u0.values)
    u = u * np.exp(0.5j * dt * np.abs(u) ** a)
    for k in range(n):
        u = sfft.ifftn(disp * sfft.fftn(u))
        tau = dt if k < n - 1 else dt / 2
        u = u * np.exp(1j * tau * np.abs(u) ** a)
    return Field(grid, u)


def strang_order_ratio(params: ModelParams, u0: Field, dt: float, t_end: float) -> float:
    """||u_dt - u_{dt/2}|| / ||u_{dt/2} - u_{dt/4}||, about 4 for a second-order scheme."""
    a = evolve_to(params, u0, dt, t_end).values
    b = evolve_to(params, u0, dt / 2, t_end).values
    c = evolve_to(params, u0, dt / 4, t_end).values
    return float(np.linalg.norm(a - b) / np.linalg.norm(b - c))


# ---------------------------------------------------------------------------
# blowup fit

def fit_power_law(t: np.ndarray, y: np.ndarray, T_bounds=None):
    """Fit log y = c - p log(T - t) with T free; returns (T, p, R2, c)."""
    t = np.asarray(t, float)
    ly = np.log(np.asarray(y, float))
    span = t[-1] - t[0]
    tiny = 1e-9 * max(span, 1e-300)

    def linfit(T):
        X = -np.log(T - t)
        A = np.vstack([np.ones_like(X), X]).T
        coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
        r = ly - A @ coef
        return coef, float(r @ r)

    # search over log(T - t_last) so the singular end is resolved
    lo, hi = (math.log(tiny), math.log(100 * span + tiny)) if T_bounds is None else T_bounds
    grid = np.linspace(lo, hi, 400)
    sse = [linfit(t[-1] + math.exp(g))[1] for g in grid]
    j = int(np.argmin(sse))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda g: linfit(t[-1] + math.exp(g))[1], bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-10})
    T = t[-1] + math.exp(res.x)
    coef, sse = linfit(T)
    sst = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    return T, float(coef[1]), r2, float(coef[0])


def estimate_blowup(series: TimeSeries, growth_from: float = 1.2, min_records: int = 20):
    """(T_est, rate_exponent, R2) from the terminal growth of ||u||_{H^s}."""
    hs = series.col("hs")
    t = series.t
    sel = np.nonzero(hs >= growth_from * hs[0])[0]
    if len(sel) == 0:
        raise FitRefusedError("no records above the growth threshold")
    first = sel[0]
    tt, yy = t[first:], hs[first:]
    if len(tt) < min_records:
        raise FitRefusedError(f"only {len(tt)} records in the terminal growth phase (need {min_records})")
    if np.any(np.diff(yy) <= 0):
        raise FitRefusedError("terminal H^s growth is not monotone")
    T, p, r2, _ = fit_power_law(tt, yy)
    return T, p, r2


def rate_exponent_theory(params: ModelParams) -> float:
    """(s - sc)/(2s)."""
    return (params.s - params.sc) / (2 * params.s)
