"""Weinstein functionals, their constrained maximization and the ground states.

The maximizer U of H (or K) is sought on the grid with both normalizing norms
equal to one.  On the torus dilations are not a symmetry, so that
normalization is enforced by a retraction: a spectral tilt |xi|^tau fixes the
ratio of the two norms and an amplitude factor fixes their common value.
The ground state is then obtained by dilating the grid itself, which is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, List, Optional

import numpy as np
from scipy import fft as sfft
from scipy.optimize import brentq

from .spectral import (
    Field,
    FnlsError,
    Grid,
    ModelParams,
    Regime,
    energy,
    frac_power,
    lebesgue_norm,
    sobolev_norm,
)


class UndefinedQuotientError(FnlsError, ValueError):
    pass


class ConvergenceError(FnlsError):
    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


class CollapseError(FnlsError):
    pass


# ---------------------------------------------------------------------------
# functionals

def _check_nonzero(*dens):
    for x in dens:
        if not x > 1e-300:
            raise UndefinedQuotientError("zero field: Weinstein quotient undefined")


def weinstein_H(f: Field, params: ModelParams) -> float:
    """||f||_{a+2}^{a+2} / (||f||_{sc}^a ||f||_{s}^2)."""
    p = params.alpha + 2
    F = f.hat()
    nc = sobolev_norm(f, params.sc, F)
    ns = sobolev_norm(f, params.s, F)
    _check_nonzero(nc, ns)
    return lebesgue_norm(f, p) ** p / (nc ** params.alpha * ns ** 2)


def weinstein_K(f: Field, params: ModelParams) -> float:
    """||f||_{a+2}^{a+2} / (||f||_{alpha_c}^a ||f||_{s}^2)."""
    p = params.alpha + 2
    nl = lebesgue_norm(f, params.alpha_c)
    ns = sobolev_norm(f, params.s)
    _check_nonzero(nl, ns)
    return lebesgue_norm(f, p) ** p / (nl ** params.alpha * ns ** 2)


def _log_grad(f: Field, params: ModelParams, functional: str) -> np.ndarray:
    # gradient of log H (or log K) for the pairing Re sum conj(g) v h^d
    a, p = params.alpha, params.alpha + 2
    u = f.values
    P = np.sum(np.abs(u) ** p) * f.grid.cell
    g = p * np.abs(u) ** a * u / P
    ds = frac_power(f, 2 * params.s).values
    g = g - 2 * ds / sobolev_norm(f, params.s) ** 2
    if functional == "H":
        if params.sc > 0:
            dc = frac_power(f, 2 * params.sc).values
        else:
            dc = u
        g = g - a * dc / sobolev_norm(f, params.sc) ** 2
    else:
        q = params.alpha_c
        g = g - a * np.abs(u) ** (q - 2) * u / lebesgue_norm(f, q) ** q
    return g


def weinstein_grad(f: Field, params: ModelParams, functional: str = "H") -> Field:
    """Gradient of H or K with respect to the real L2 pairing on the grid."""
    val = weinstein_H(f, params) if functional == "H" else weinstein_K(f, params)
    return f.with_values(val * _log_grad(f, params, functional), tag=f"grad{functional}")


# ---------------------------------------------------------------------------
# constrained ascent

@dataclass
class AscentOptions:
    step: float = 1.0
    max_iter: int = 5000
    tol: float = 1e-7
    grow: float = 1.3
    min_step: float = 1e-14
    monotone_slack: float = 1e-12
    strict: bool = True


@dataclass
class Maximizer:
    field: Field
    functional: str
    value: float
    iterations: int
    grad_norm: float
    converged: bool
    history: List[float] = dc_field(default_factory=list)


class _Problem:
    """Discrete constrained problem in Fourier space (real fields)."""

    def __init__(self, params: ModelParams, grid: Grid, functional: str):
        self.p, self.g, self.fun = params, grid, functional
        self.ws = grid.symbol(2 * params.s)
        self.project_mean = not (functional == "H" and params.sc == 0)
        if functional == "H":
            self.wc = grid.symbol(2 * params.sc)
        pre = self.ws + (self.wc if functional == "H" else 1.0)
        with np.errstate(divide="ignore"):
            self.P = np.where(pre > 0, 1.0 / pre, 0.0)
        if not self.project_mean:
            self.P = 1.0 / (self.ws + 1.0)
        k = grid.kmag.copy()
        k.flat[0] = np.min(k[k > 0]) / 2
        self.logk = np.log(k)

    def field(self, U) -> Field:
        return Field(self.g, sfft.ifftn(U).real)

    def value(self, U) -> float:
        f = self.field(U)
        return weinstein_H(f, self.p) if self.fun == "H" else weinstein_K(f, self.p)

    def norms(self, U):
        f = self.field(U)
        n2 = sobolev_norm(f, self.p.s, U)
        n1 = sobolev_norm(f, self.p.sc, U) if self.fun == "H" else lebesgue_norm(f, self.p.alpha_c)
        return n1, n2

    def retract(self, U):
        if self.project_mean:
            U = U.copy()
            U.flat[0] = 0.0

        def gap(t):
            n1, n2 = self.norms(U * np.exp(t * self.logk))
            return math.log(n2) - math.log(n1)

        lo, hi = -0.25, 0.25
        for _ in range(60):
            if gap(lo) <= 0:
                break
            lo *= 2
        for _ in range(60):
            if gap(hi) >= 0:
                break
            hi *= 2
        t = brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15)
        V = U * np.exp(t * self.logk)
        return V / self.norms(V)[1]

    def state(self, U):
        f = self.field(U)
        val = self.value(U)
        G = sfft.fftn(_log_grad(f, self.p, self.fun))
        if self.project_mean:
            G.flat[0] = 0.0
        D = self.P * G
        # constraint normals of the two unit norms
        n2 = self.ws * U
        if self.fun == "H":
            n1 = (self.wc * U) if self.p.sc > 0 else U
        else:
            u = f.values
            n1 = sfft.fftn(np.abs(u) ** (self.p.alpha_c - 2) * u)
            if self.project_mean:
                n1.flat[0] = 0.0
        normals = [n1, n2]
        Pn = [self.P * n for n in normals]
        M = np.array([[np.real(np.vdot(a, b)) for b in Pn] for a in normals])
        rhs = np.array([np.real(np.vdot(a, D)) for a in normals])
        c = np.linalg.lstsq(M, rhs, rcond=None)[0]
        D = D - c[0] * Pn[0] - c[1] * Pn[1]
        gn = math.sqrt(abs(np.real(np.vdot(G, D))) * self.g.parseval)
        return val, D, gn


def _center_and_phase(f: Field) -> Field:
    idx = np.unravel_index(int(np.argmax(np.abs(f.values))), f.grid.shape)
    shift = tuple(f.grid.N // 2 - i for i in idx)
    v = np.roll(f.values, shift, axis=tuple(range(f.grid.d)))
    c = v[(f.grid.N // 2,) * f.grid.d]
    return f.with_values(v * (abs(c) / c))


def maximize_weinstein(params: ModelParams, grid: Grid, functional: str, init: Field,
                       opts: Optional[AscentOptions] = None,
                       callback: Optional[Callable[[int, float, float], None]] = None) -> Maximizer:
    """Preconditioned projected gradient ascent of H or K on unit-norm fields.

    Returns a Maximizer; raises ConvergenceError (carrying the partial result)
    when opts.strict and the projected gradient stays above opts.tol.
    """
    if functional not in ("H", "K"):
        raise ValueError("functional must be 'H' or 'K'")
    opts = opts or AscentOptions()
    if np.max(np.abs(init.values)) == 0:
        raise UndefinedQuotientError("init is the zero field")
    prob = _Problem(params, grid, functional)
    U = prob.retract(sfft.fftn(np.real(init.values)))
    val, D, gn = prob.state(U)
    history = [val]
    step, it = opts.step, 0
    while it < opts.max_iter and gn > opts.tol:
        it += 1
        while True:
            Un = prob.retract(U + step * D)
            vn, Dn, gnn = prob.state(Un)
            keep = vn >= val - opts.monotone_slack * abs(val)
            if keep and (vn >= val * (1 - 4e-16) or gnn < gn):
                break
            step *= 0.5
            if step < opts.min_step:
                break
        if step < opts.min_step:
            break
        U, val, D, gn = Un, vn, Dn, gnn
        history.append(val)
        step = min(step * opts.grow, 1e3)
        if callback:
            callback(it, val, gn)
    f = prob.field(U)
    if not np.all(np.isfinite(f.values)) or np.max(np.abs(f.values)) < 1e-300:
        raise CollapseError("ascent collapsed to the zero field")
    f = _center_and_phase(f)
    res = Maximizer(Field(grid, f.values.real, f"max{functional}"), functional, val, it, gn,
                    gn <= opts.tol, history)
    if opts.strict and not res.converged:
        raise ConvergenceError(f"no convergence after {it} iterations: projected gradient {gn:.3e} > tol {opts.tol:.1e}", res)
    return res


# ---------------------------------------------------------------------------
# ground states

@dataclass
class SharpConstants:
    S_gs: Optional[float] = None
    L_gs: Optional[float] = None
    A_GN: Optional[float] = None
    B_GN: Optional[float] = None
    C_GN_masscritical: Optional[float] = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class GroundState:
    field: Field
    kind: str  # sobolev | lebesgue | mass-critical
    residual: float
    residual_rel: float
    pohozaev_defect_1: float
    pohozaev_defect_2: float
    energy_defect: float
    iterations: int
    constants: SharpConstants
    params: ModelParams
    value: Optional[float] = None
    diagnostics: dict = dc_field(default_factory=dict)

    def report(self) -> dict:
        c = self.constants
        rep = {
            "kind": self.kind,
            "residual": self.residual,
            "residual_rel": self.residual_rel,
            "delta1": self.pohozaev_defect_1,
            "delta2": self.pohozaev_defect_2,
            "deltaE": self.energy_defect,
            "iterations": self.iterations,
            "grid": self.field.grid.as_dict(),
            "params": self.params.as_dict(),
            "diagnostics": self.diagnostics,
        }
        rep.update(c.as_dict())
        if self.value is not None:
            rep["functional_value"] = self.value
        return rep


def _mean_free(v: np.ndarray) -> np.ndarray:
    F = sfft.fftn(v)
    F.flat[0] = 0.0
    return sfft.ifftn(F)


def elliptic_residual(f: Field, params: ModelParams, kind: str) -> np.ndarray:
    """Pointwise defect of the ground-state equation of the given kind.

    For the sobolev and lebesgue kinds the zero Fourier mode is projected out:
    the homogeneous operators vanish there and no positive periodic solution
    can balance the mean of the nonlinearity.
    """
    u = f.values
    a = params.alpha
    if kind == "sobolev":
        r = frac_power(f, 2 * params.s).values + frac_power(f, 2 * params.sc).values - np.abs(u) ** a * u
        return _mean_free(r)
    if kind == "lebesgue":
        q = params.alpha_c
        r = frac_power(f, 2 * params.s).values + np.abs(u) ** (q - 2) * u - np.abs(u) ** a * u
        return _mean_free(r)
    if kind == "mass-critical":
        return frac_power(f, 2 * params.s).values + u - np.abs(u) ** a * u
    raise ValueError(kind)


def _l2(f: Field, v) -> float:
    return float(math.sqrt(np.sum(np.abs(v) ** 2) * f.grid.cell))


def multiplier_fit(U: Field, params: ModelParams) -> dict:
    """Least-squares (c1, c2) in |U|^a U = c1 (-D)^s U + c2 (-D)^sc U (mean-free).

    For an exact solution of the Euler-Lagrange equation at unit norms the
    ratio c2/c1 is alpha/2; the measured ratio exposes box truncation.
    """
    F = U.hat()
    cols = [F * U.grid.symbol(2 * params.s), F * U.grid.symbol(2 * params.sc)]
    y = sfft.fftn(np.abs(U.values) ** params.alpha * U.values)
    sel = np.ones(U.grid.shape, bool)
    sel.flat[0] = False
    A = np.stack([c[sel] for c in cols], 1)
    Ar = np.vstack([A.real, A.imag])
    yr = np.concatenate([y[sel].real, y[sel].imag])
    c = np.linalg.lstsq(Ar, yr, rcond=None)[0]
    return {"c1": float(c[0]), "c2": float(c[1]), "ratio": float(c[1] / c[0]), "target": params.alpha / 2}


def sobolev_dilation(params: ModelParams) -> float:
    """lambda = (alpha/2)^{1/(2(s - sc))}."""
    return (params.alpha / 2) ** (1.0 / (2 * (params.s - params.sc)))


def sobolev_amplitude(params: ModelParams, A: float) -> float:
    """|a| = (2 lambda^{2s} A / (alpha+2))^{1/alpha}."""
    lam = sobolev_dilation(params)
    return (2 * lam ** (2 * params.s) * A / (params.alpha + 2)) ** (1.0 / params.alpha)


def lebesgue_coefficients(params: ModelParams, B: float):
    """(b, mu) with V(x) = b R(mu x) turning the K equation into the R equation.

    Matching coefficients gives (a/2) b^{ac-2} mu^{-2s} = 1 and
    (a+2)/(2B) b^a mu^{-2s} = 1, hence
    b = (a B / (a+2))^{1/(a+2-ac)} and mu^{2s} = (a/2) b^{ac-2}.
    """
    a, q = params.alpha, params.alpha_c
    b = (a * B / (a + 2)) ** (1.0 / (a + 2 - q))
    mu = ((a / 2) * b ** (q - 2)) ** (1.0 / (2 * params.s))
    return b, mu


def _dilated(U: Field, amp: float, lam: float, tag: str) -> Field:
    # Q(y) = U(y/lam)/amp realised exactly on the grid of half-width lam*L
    g = U.grid
    return Field(Grid(g.d, g.N, g.L * lam), U.values / amp, tag)


def pohozaev_defects(gs: GroundState, params: ModelParams):
    """(delta1, delta2, deltaE), each normalized by ||Q||_{H^s}^2."""
    f = gs.field
    a, p = params.alpha, params.alpha + 2
    ns2 = sobolev_norm(f, params.s) ** 2
    lp = lebesgue_norm(f, p) ** p
    if gs.kind == "sobolev":
        first = sobolev_norm(f, params.sc) ** 2
    elif gs.kind == "lebesgue":
        first = lebesgue_norm(f, params.alpha_c) ** params.alpha_c
    else:
        raise ValueError("Pohozaev defects are defined for sobolev and lebesgue kinds")
    d1 = (first - a / 2 * ns2) / ns2
    d2 = (a / 2 * ns2 - a / p * lp) / ns2
    dE = energy(f, params) / ns2
    return d1, d2, dE


def to_sobolev_ground_state(U: Field, params: ModelParams, iterations: int = 0) -> GroundState:
    """Renormalize a unit-norm H maximizer into a solution candidate Q."""
    A = weinstein_H(U, params)
    lam = sobolev_dilation(params)
    amp = sobolev_amplitude(params, A)
    Q = _dilated(U, amp, lam, "Q")
    S = sobolev_norm(Q, params.sc)
    consts = SharpConstants(S_gs=S, A_GN=(params.alpha + 2) / 2 * S ** (-params.alpha))
    res = _l2(Q, elliptic_residual(Q, params, "sobolev"))
    ns = sobolev_norm(Q, params.s)
    gs = GroundState(Q, "sobolev", res, res / ns, 0.0, 0.0, 0.0, iterations, consts, params, value=A)
    gs.pohozaev_defect_1, gs.pohozaev_defect_2, gs.energy_defect = pohozaev_defects(gs, params)
    gs.diagnostics = {"lambda": lam, "amplitude": amp, "A_GN_functional": A,
                      "A_GN_route_gap": abs(A - consts.A_GN) / A,
                      "multipliers": multiplier_fit(U, params)}
    return gs


def to_lebesgue_ground_state(V: Field, params: ModelParams, iterations: int = 0) -> GroundState:
    """Renormalize a unit-norm K maximizer into a solution candidate R."""
    B = weinstein_K(V, params)
    b, mu = lebesgue_coefficients(params, B)
    R = _dilated(V, b, mu, "R")
    Lg = lebesgue_norm(R, params.alpha_c)
    consts = SharpConstants(L_gs=Lg, B_GN=(params.alpha + 2) / 2 * Lg ** (-params.alpha))
    res = _l2(R, elliptic_residual(R, params, "lebesgue"))
    ns = sobolev_norm(R, params.s)
    gs = GroundState(R, "lebesgue", res, res / ns, 0.0, 0.0, 0.0, iterations, consts, params, value=B)
    gs.pohozaev_defect_1, gs.pohozaev_defect_2, gs.energy_defect = pohozaev_defects(gs, params)
    gs.diagnostics = {"mu": mu, "amplitude": b, "B_GN_functional": B,
                      "B_GN_route_gap": abs(B - consts.B_GN) / B}
    return gs


def compute_ground_state(params: ModelParams, grid: Grid, kind: str = "sobolev",
                         init: Optional[Field] = None, opts: Optional[AscentOptions] = None) -> GroundState:
    """maximize_weinstein followed by the matching renormalization."""
    if init is None:
        init = Field(grid, np.exp(-grid.r ** 2 / 2))
    fun = "H" if kind == "sobolev" else "K"
    m = maximize_weinstein(params, grid, fun, init, opts)
    conv = to_sobolev_ground_state if kind == "sobolev" else to_lebesgue_ground_state
    gs = conv(m.field, params, m.iterations)
    gs.diagnostics.update({"grad_norm": m.grad_norm, "converged": m.converged})
    gs.diagnostics["maximizer"] = m
    return gs


def box_sensitivity(params: ModelParams, grid: Grid, kind: str = "sobolev",
                    opts: Optional[AscentOptions] = None) -> dict:
    """Residuals and defects at half-width L and 2L (same spacing)."""
    out = {}
    for label, g in (("L", grid), ("2L", Grid(grid.d, 2 * grid.N, 2 * grid.L))):
        gs = compute_ground_state(params, g, kind, opts=opts)
        row = {"N": g.N, "L": g.L, "residual_rel": gs.residual_rel,
               "delta1": gs.pohozaev_defect_1, "delta2": gs.pohozaev_defect_2,
               "deltaE": gs.energy_defect, "value": gs.value}
        if kind == "sobolev":
            row["multiplier_ratio"] = gs.diagnostics["multipliers"]["ratio"]
        out[label] = row
    return out


# ---------------------------------------------------------------------------
# mass-critical ground state

class StabilizerError(FnlsError):
    pass


def petviashvili_mass_critical(params: ModelParams, grid: Grid, init: Optional[Field] = None,
                               gamma: Optional[float] = None, tol: float = 1e-10,
                               max_iter: int = 2000, window=(0.5, 2.0), burn_in: int = 10) -> GroundState:
    """Solve (-D)^s Q + Q - |Q|^{4s/d} Q = 0 by Petviashvili iteration.

    gamma defaults to (alpha+1)/alpha, the usual exponent for a power
    nonlinearity of degree alpha+1.
    """
    if params.regime is not Regime.MASS_CRITICAL:
        raise ValueError("petviashvili_mass_critical needs the mass-critical regime")
    a = params.alpha
    gamma = (a + 1) / a if gamma is None else gamma
    op = grid.symbol(2 * params.s) + 1.0
    u = np.exp(-grid.r ** 2 / 2) if init is None else np.real(init.values)
    U = sfft.fftn(u)
    M, res = 1.0, math.inf
    for it in range(1, max_iter + 1):
        u = sfft.ifftn(U).real
        N = sfft.fftn(np.abs(u) ** a * u)
        num = np.real(np.vdot(U, op * U))
        den = np.real(np.vdot(U, N))
        M = num / den
        if it > burn_in and not (window[0] < M < window[1]):
            raise StabilizerError(f"stabilizing factor {M:.4g} left {window} at iteration {it}")
        U = M ** gamma * N / op
        f = Field(grid, sfft.ifftn(U).real)
        res = _l2(f, elliptic_residual(f, params, "mass-critical"))
        if res < tol:
            break
    Q = _center_and_phase(Field(grid, sfft.ifftn(U).real, "Qmc"))
    Q = Field(grid, Q.values.real, "Qmc")
    m2 = lebesgue_norm(Q, 2)
    C = (2 * params.s + params.d) / params.d * m2 ** (-4 * params.s / params.d)
    ns = sobolev_norm(Q, params.s)
    consts = SharpConstants(C_GN_masscritical=C)
    return GroundState(Q, "mass-critical", res, res / ns, math.nan, math.nan, energy(Q, params) / ns ** 2,
                       it, consts, params, diagnostics={"stabilizer": M, "gamma": gamma})


# ---------------------------------------------------------------------------
# sharp inequalities

def gn_margin(f: Field, constants: SharpConstants, params: ModelParams, which: str = "sobolev") -> float:
    """RHS - LHS of the sharp Gagliardo-Nirenberg inequality of the given kind."""
    a, p = params.alpha, params.alpha + 2
    lhs = lebesgue_norm(f, p) ** p
    ns2 = sobolev_norm(f, params.s) ** 2
    if which == "sobolev":
        rhs = constants.A_GN * sobolev_norm(f, params.sc) ** a * ns2
    elif which == "lebesgue":
        rhs = constants.B_GN * lebesgue_norm(f, params.alpha_c) ** a * ns2
    elif which == "mass-critical":
        rhs = constants.C_GN_masscritical * lebesgue_norm(f, 2) ** a * ns2
    else:
        raise ValueError(which)
    return rhs - lhs


def gn_rhs(f: Field, constants: SharpConstants, params: ModelParams, which: str = "sobolev") -> float:
    return gn_margin(f, constants, params, which) + lebesgue_norm(f, params.alpha + 2) ** (params.alpha + 2)


def random_smooth_field(grid: Grid, rng: np.random.Generator, max_bumps: int = 4,
                        mean_free: bool = True) -> Field:
    """Localized random superposition of complex Gaussian bumps.

    By default the mean is projected out: with the zero mode excluded from the
    homogeneous norms, a nonzero mean makes any GN inequality fail on the torus
    (a constant has zero right-hand side).
    """
    n = int(rng.integers(1, max_bumps + 1))
    v = np.zeros(grid.shape, complex)
    span = grid.L / 4
    for _ in range(n):
        c = rng.uniform(-span, span, grid.d)
        w = rng.uniform(0.3, 2.0)
        amp = rng.normal() + 1j * rng.normal()
        r2 = sum((x - ci) ** 2 for x, ci in zip(grid.coords, c))
        v += amp * np.exp(-r2 / (2 * w * w))
    if mean_free:
        v = v - v.mean()
    return Field(grid, v, "random")
