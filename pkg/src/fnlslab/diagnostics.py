"""Localized virial weight, virial identity checks and concentration scans."""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft

from .spectral import (
    Field,
    FnlsError,
    Grid,
    ModelParams,
    frac_power,
    gradient,
    windowed_integral,
)


class InvalidWeightError(FnlsError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class ComparisonRefused(FnlsError):
    pass


# ---------------------------------------------------------------------------
# cutoff weight

# chi(r) = r^2 on [0,1]; on [1,2] chi' is the cubic 2 + 2t - 10t^2 + 6t^3 (t = r-1),
# which matches chi' and chi'' at r=1 and vanishes with zero slope at r=2;
# chi is constant beyond r=2.
CHI_OUTER = 13.0 / 6.0


def chi(r):
    r = np.asarray(r, float)
    t = np.clip(r - 1.0, 0.0, 1.0)
    bridge = 1 + 2 * t + t ** 2 - (10 / 3) * t ** 3 + 1.5 * t ** 4
    return np.where(r <= 1, r ** 2, bridge)


def chi_prime(r):
    r = np.asarray(r, float)
    t = np.clip(r - 1.0, 0.0, 1.0)
    return np.where(r <= 1, 2 * r, 2 + 2 * t - 10 * t ** 2 + 6 * t ** 3)


def chi_second(r):
    r = np.asarray(r, float)
    t = np.clip(r - 1.0, 0.0, 1.0)
    return np.where(r <= 1, 2.0, np.where(r >= 2, 0.0, 2 - 20 * t + 18 * t ** 2))


@dataclass
class VirialWeight:
    R: float
    phi: Field
    grad_phi: Tuple[Field, ...]
    lap_phi: Field
    constraint_report: dict


def build_weight(R: float, grid: Grid, tol: float = 1e-10) -> VirialWeight:
    """phi_R(x) = R^2 chi(|x|/R) with analytic derivatives, constraints verified."""
    if not R > 0:
        raise ValueError("R must be positive")
    if 2 * R + 2 * grid.h > grid.L:
        raise InvalidWeightError(f"2R + 2h = {2 * R + 2 * grid.h:.4g} does not fit in half-width L = {grid.L}")
    r = grid.r
    rho = r / R
    phi = R ** 2 * chi(rho)
    c1 = chi_prime(rho)
    c2 = chi_second(rho)
    with np.errstate(invalid="ignore", divide="ignore"):
        over_r = np.where(r > 0, R * c1 / np.where(r > 0, r, 1), 2.0)  # phi'/r
    grads = tuple(Field(grid, over_r * x) for x in grid.coords)
    lap = c2 + (grid.d - 1) * over_r
    inside = rho <= 1
    outside = rho >= 2
    rep = {
        "R": R,
        "max_phi_second_minus_2": float(np.max(c2 - 2)),
        "max_phi_prime_over_r_minus_2": float(np.max(over_r - 2)),
        "max_lap_minus_2d": float(np.max(lap - 2 * grid.d)),
        "inner_defect": float(np.max(np.abs(phi[inside] - r[inside] ** 2))) if inside.any() else 0.0,
        "outer_gradient": float(np.max(np.abs(over_r[outside] * r[outside]))) if outside.any() else 0.0,
        "outer_value": CHI_OUTER * R ** 2,
        "support_radii": [R, 2 * R],
        "sup_norms": {"phi": float(np.max(np.abs(phi))),
                      "grad": float(np.max(np.abs(c1)) * R),
                      "hess": float(np.max(np.abs(c2)))},
    }
    ok = (rep["max_phi_second_minus_2"] <= tol and rep["max_phi_prime_over_r_minus_2"] <= tol
          and rep["max_lap_minus_2d"] <= tol and rep["inner_defect"] <= 1e-12 * max(1.0, R * R)
          and rep["outer_gradient"] == 0.0)
    rep["passed"] = bool(ok)
    if not ok:
        raise InvalidWeightError("virial weight violates its constraints", rep)
    return VirialWeight(R, Field(grid, phi, "phi_R"), grads, Field(grid, lap, "lap_phi_R"), rep)


def virial_action(u: Field, w: VirialWeight, F: Optional[np.ndarray] = None) -> float:
    """M = 2 int grad(phi) . Im(conj(u) grad u) dx, with grad u spectral."""
    grid = u.grid
    F = u.hat() if F is None else F
    tot = 0.0
    for q, gp in zip(grid.wavevectors, w.grad_phi):
        qq = np.where(np.isclose(np.abs(q), math.pi / grid.h), 0.0, q)
        du = sfft.ifftn(1j * qq * F)
        tot += float(np.sum(gp.values.real * np.imag(np.conj(u.values) * du)))
    return 2.0 * tot * grid.cell


def virial_rhs(params: ModelParams, E, hs):
    """4 d a E - 2 (d a - 4 s) ||u||_{H^s}^2."""
    d, a, s = params.d, params.alpha, params.s
    return 4 * d * a * np.asarray(E) - 2 * (d * a - 4 * s) * np.asarray(hs) ** 2


def virial_rhs_direct(params: ModelParams, hs, lp):
    """8 s ||u||_{H^s}^2 - 4 d a/(a+2) ||u||_{a+2}^{a+2}."""
    d, a, s = params.d, params.alpha, params.s
    return 8 * s * np.asarray(hs) ** 2 - 4 * d * a / (a + 2) * np.asarray(lp) ** (a + 2)


def virial_coefficients(params: ModelParams):
    return 4 * params.d * params.alpha, 2 * (params.d * params.alpha - 4 * params.s)


def virial_identity_defect(series, params: ModelParams, tail_limit: float = 1e-6, eps: float = 1e-12):
    """Max relative gap between centered-difference dM/dt and the identity's RHS.

    Returns (defect, details) where details holds per-record arrays and the
    agreement of the two RHS forms.
    """
    t = series.col("t")
    M = series.col("virial")
    if np.any(~np.isfinite(M)):
        raise ComparisonRefused("series carries no virial action")
    tail = series.col("tail")
    if np.max(tail) > tail_limit:
        raise ComparisonRefused(f"tail mass {np.max(tail):.2e} exceeds {tail_limit:.1e}: weight no longer sees |x|^2")
    if len(t) < 3:
        raise ComparisonRefused("need at least three records")
    E, hs, lp = series.col("energy"), series.col("hs"), series.col("lp")
    dM = (M[2:] - M[:-2]) / (t[2:] - t[:-2])
    rhs = virial_rhs(params, E, hs)
    rhs2 = virial_rhs_direct(params, hs, lp)
    mid = rhs[1:-1]
    scale = np.max(np.abs(rhs))
    rel = np.abs(dM - mid) / (np.abs(mid) + eps * scale)
    forms = float(np.max(np.abs(rhs - rhs2)) / scale)
    return float(np.max(rel)), {"t": t[1:-1], "dM": dM, "rhs": mid, "rel": rel, "forms_gap": forms,
                                "coefficients": virial_coefficients(params)}


def blowup_monitor(series, params: ModelParams, E0: float, slack: float = 0.0) -> dict:
    """Check M' <= 2 d a E0 - delta ||u||_{H^s}^2 with delta = d a - 4 s per record."""
    delta = params.d * params.alpha - 4 * params.s
    if E0 >= 0:
        return {"applicable": False, "reason": "E0 >= 0: monitor inapplicable", "delta": delta}
    t, M = series.col("t"), series.col("virial")
    if np.any(~np.isfinite(M)) or len(t) < 3:
        return {"applicable": False, "reason": "no virial action in series", "delta": delta}
    dM = (M[2:] - M[:-2]) / (t[2:] - t[:-2])
    bound = 2 * params.d * params.alpha * E0 - delta * series.col("hs")[1:-1] ** 2
    ok = dM <= bound + slack * np.abs(bound)
    return {"applicable": True, "delta": delta, "fraction": float(np.mean(ok)),
            "t": t[1:-1], "dM": dM, "bound": bound, "satisfied": ok}


# ---------------------------------------------------------------------------
# concentration

@dataclass
class ConcentrationRecord:
    t: float
    a: float
    sobolev_value: float
    lebesgue_value: float
    center_sobolev: Tuple[float, ...]
    center_lebesgue: Tuple[float, ...]

    def row(self):
        return [self.t, self.a, self.sobolev_value, self.lebesgue_value,
                *self.center_sobolev, *self.center_lebesgue]


def concentration_scan(u: Field, a: float, params: ModelParams, t: float = math.nan) -> ConcentrationRecord:
    """Windowed H^sc density and L^{alpha_c} density maxima over balls of radius a."""
    ds = np.abs(frac_power(u, params.sc).values) ** 2
    dl = np.abs(u.values) ** params.alpha_c
    cs, vs, _ = windowed_integral(Field(u.grid, ds), a)
    cl, vl, _ = windowed_integral(Field(u.grid, dl), a)
    return ConcentrationRecord(t, a, vs, vl, cs, cl)


def window_radius(t, T: float, A: float, beta: float, s: float):
    """a(t) = A (T - t)^{beta/(2s)}; admissible for beta < 1."""
    return A * np.power(np.maximum(T - np.asarray(t, float), 0.0), beta / (2 * s))


def concentration_series(snapshots: Sequence[Tuple[float, Field]], params: ModelParams, T: float,
                         A: float, beta: float = 0.8) -> List[ConcentrationRecord]:
    out = []
    for t, u in snapshots:
        a = float(window_radius(t, T, A, beta, params.s))
        a = min(max(a, u.grid.h), 0.999 * u.grid.L)
        out.append(concentration_scan(u, a, params, t))
    return out


def concentration_columns(d: int) -> List[str]:
    axes = "xy"[:d]
    return (["t", "a", "sobolev_value", "lebesgue_value"]
            + [f"center_s_{c}" for c in axes] + [f"center_l_{c}" for c in axes])
