"""Desk-scale profile decomposition, compactness bound and ground-state alignment.

Extraction follows the greedy scheme: pick the strongest local concentration
of H^sc + H^s density at the last element, track it backwards, estimate the
profile by aligned averaging where competing bumps are far away, subtract and
repeat until the residual local mass is small.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft
from scipy import ndimage, optimize

from .spectral import (
    Field,
    FnlsError,
    Grid,
    ModelParams,
    frac_power,
    lebesgue_norm,
    resample,
    sobolev_norm,
    tail_mass,
    translate,
    windowed_integral,
)


class AmbiguityError(FnlsError):
    pass


class SynthesisError(FnlsError):
    pass


class AlignmentAmbiguous(FnlsError):
    pass


# ---------------------------------------------------------------------------
# synthetic sequences

@dataclass
class SyntheticSequenceSpec:
    profiles: List[Field]
    shifts: List[List[Tuple[float, ...]]]  # shifts[j][n]
    noise: float = 0.0
    seed: int = 0
    tail_threshold: Optional[float] = None

    @property
    def n_count(self) -> int:
        return len(self.shifts[0]) if self.shifts else 0

    def separations(self) -> np.ndarray:
        J, n = len(self.profiles), self.n_count
        g = self.profiles[0].grid
        out = np.full(n, math.inf)
        for a in range(J):
            for b in range(a + 1, J):
                for k in range(n):
                    dx = g.wrap(np.subtract(self.shifts[a][k], self.shifts[b][k]))
                    out[k] = min(out[k], float(np.linalg.norm(dx)))
        return out


def synthesize(spec: SyntheticSequenceSpec) -> List[Field]:
    """v_n = sum_j V^j(. - x_n^j) + noise_n."""
    if not spec.profiles:
        raise SynthesisError("no profiles given")
    if len(spec.shifts) != len(spec.profiles):
        raise SynthesisError("one shift law per profile is required")
    if len({len(s) for s in spec.shifts}) != 1:
        raise SynthesisError("shift laws must have equal length")
    seps = spec.separations()
    if len(spec.profiles) > 1 and np.any(np.diff(seps) <= 0):
        raise SynthesisError("pairwise separations must grow strictly with n")
    g = spec.profiles[0].grid
    for k, s in enumerate(spec.shifts):
        for x in s:
            if np.any(np.abs(x) >= g.L):
                raise SynthesisError(f"shift {x} of profile {k} leaves the box")
    rng = np.random.default_rng(spec.seed)
    out = []
    for n in range(spec.n_count):
        v = np.zeros(g.shape, complex)
        for V, s in zip(spec.profiles, spec.shifts):
            v += translate(V, s[n]).values
        if spec.noise:
            z = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
            z = ndimage.gaussian_filter(z.real, 2) + 1j * ndimage.gaussian_filter(z.imag, 2)
            v += spec.noise * z / np.max(np.abs(z))
        f = Field(g, v, f"v_{n}")
        if spec.tail_threshold is not None and tail_mass(f) > spec.tail_threshold:
            raise SynthesisError(f"v_{n}: tail mass exceeds threshold (box overflow)")
        out.append(f)
    return out


# ---------------------------------------------------------------------------
# extraction

@dataclass
class ExtractOptions:
    window: float = 2.0          # ball radius for local mass
    threshold: float = 0.05      # stop when residual local mass < threshold * original
    min_mass: float = 1e-4       # absolute floor: below it the sequence is treated as noise
    peak_floor: float = 0.05     # competing peaks below this fraction are ignored
    mask_fraction: float = 0.45  # mask radius as a fraction of the distance to the nearest competitor
    combine: str = "mean"        # mean | median | last, over the tail half of the sequence
    max_profiles: int = 8
    backfit: int = 6             # joint refinement sweeps after the greedy pass


@dataclass
class ProfileSet:
    profiles: List[Field]
    shifts: List[List[Tuple[float, ...]]]
    remainders: List[Field]
    defects: dict = dc_field(default_factory=dict)
    params: Optional[ModelParams] = None

    def report(self) -> dict:
        return {"count": len(self.profiles),
                "shifts": [[list(x) for x in s] for s in self.shifts],
                "norms": [{"hsc": sobolev_norm(V, self.params.sc), "hs": sobolev_norm(V, self.params.s)}
                          for V in self.profiles] if self.params else [],
                "defects": self.defects}


def _density(v: Field, params: ModelParams) -> Field:
    d = np.abs(frac_power(v, params.sc).values) ** 2 + np.abs(frac_power(v, params.s).values) ** 2
    return Field(v.grid, d)


def _peaks(m: np.ndarray, floor: float, radius: int = 1) -> List[Tuple[int, ...]]:
    # non-maximum suppression over a (2 radius + 1) box
    mx = ndimage.maximum_filter(m, size=2 * radius + 1, mode="wrap")
    top = m.max()
    idx = np.argwhere((m >= mx) & (m >= floor * top))
    # merge plateaus: keep one index per connected flat top
    out = []
    for i in sorted(map(tuple, idx), key=lambda i: -m[i]):
        if all(max(abs(a - b) for a, b in zip(i, o)) > radius for o in out):
            out.append(i)
    return out


def _mask(grid: Grid, center, radius: float) -> np.ndarray:
    dx = [grid.wrap(c - x0) for c, x0 in zip(grid.coords, center)]
    r = np.sqrt(sum(q ** 2 for q in dx))
    taper = 0.3 * radius
    inner = radius - taper
    t = np.clip((r - inner) / taper, 0.0, 1.0)
    return 0.5 * (1 + np.cos(math.pi * t))


def _track(v_list, params, opts):
    """Strongest peak at the last n, followed back by nearest-peak continuation."""
    n = len(v_list)
    maps = []
    for v in v_list:
        _, _, m = windowed_integral(_density(v, params), opts.window)
        maps.append(m.values.real)
    grid = v_list[0].grid
    last = maps[-1]
    idx = np.unravel_index(int(np.argmax(last)), last.shape)
    centers = [None] * n
    competitors = [None] * n
    centers[-1] = grid.point_of(idx)
    for k in range(n - 1, -1, -1):
        pk = _peaks(maps[k], opts.peak_floor, max(1, int(opts.window / grid.h)))
        pts = [grid.point_of(i) for i in pk]
        ref = centers[k + 1] if k < n - 1 else centers[-1]
        dist = [float(np.linalg.norm(grid.wrap(np.subtract(p, ref)))) for p in pts]
        j = int(np.argmin(dist))
        centers[k] = pts[j]
        others = [float(np.linalg.norm(grid.wrap(np.subtract(p, pts[j])))) for i, p in enumerate(pts) if i != j]
        competitors[k] = min(others) if others else math.inf
    return centers, competitors, float(last.max())


def _estimate(v_list, centers, competitors, opts) -> Field:
    grid = v_list[0].grid
    n = len(v_list)
    use = range(n - 1, n) if opts.combine == "last" else range(n // 2, n)
    stack, weights = [], []
    for k in use:
        al = translate(v_list[k], tuple(-c for c in centers[k])).values
        if math.isfinite(competitors[k]):
            w = _mask(grid, (0.0,) * grid.d, opts.mask_fraction * competitors[k])
        else:
            w = np.ones(grid.shape)
        stack.append(al)
        weights.append(w)
    S, W = np.array(stack), np.array(weights)
    if opts.combine == "median":
        re = np.median(S.real, 0)
        im = np.median(S.imag, 0)
        est = (re + 1j * im) * np.max(W, 0)
    else:
        tot = W.sum(0)
        est = np.where(tot > 0, (W * S).sum(0) / np.where(tot > 0, tot, 1), 0.0) * np.max(W, 0)
    return Field(grid, est, "profile")


def _locate(r: Field, V: Field, guess, radius: float) -> Tuple[float, ...]:
    """Shift z maximizing |<r(. + z), V>|, searched near guess then refined off-grid."""
    grid = r.grid
    Fr, Fv = sfft.fftn(r.values), np.conj(sfft.fftn(V.values))
    corr = np.abs(sfft.ifftn(Fr * Fv))
    lags = [grid.wrap(c + grid.L) for c in grid.coords]  # lag of each correlation index
    dx = [grid.wrap(q - g0) for q, g0 in zip(lags, guess)]
    near = np.sqrt(sum(q ** 2 for q in dx)) <= radius
    corr = np.where(near, corr, -1.0)
    idx = np.unravel_index(int(np.argmax(corr)), corr.shape)
    z0 = grid.wrap(np.array([i * grid.h for i in idx], float))
    prod = Fr * Fv
    ks = grid.wavevectors

    def neg(z):
        ph = np.exp(1j * sum(k * zi for k, zi in zip(ks, z)))
        return -abs(np.sum(prod * ph))

    res = optimize.minimize(neg, z0, method="Nelder-Mead",
                            options={"xatol": 1e-6 * grid.h, "fatol": 0.0, "maxiter": 200})
    z = res.x if np.max(np.abs(res.x - z0)) <= grid.h else z0
    return tuple(float(q) for q in grid.wrap(np.asarray(z)))


def _backfit(v_list, profiles, shifts, opts, sweeps):
    """Alternate shift location and unmasked profile averaging against partial residuals."""
    n = len(v_list)
    use = range(n - 1, n) if opts.combine == "last" else range(n // 2, n)
    for _ in range(sweeps):
        for j in range(len(profiles)):
            part = []
            for k, v in enumerate(v_list):
                r = v.values.copy()
                for i, (V, x) in enumerate(zip(profiles, shifts)):
                    if i != j:
                        r -= translate(V, x[k]).values
                part.append(Field(v.grid, r))
            shifts[j] = [_locate(part[k], profiles[j], shifts[j][k], opts.window) for k in range(n)]
            al = np.array([translate(part[k], tuple(-c for c in shifts[j][k])).values for k in use])
            if opts.combine == "median":
                est = np.median(al.real, 0) + 1j * np.median(al.imag, 0)
            else:
                est = al.mean(0)
            profiles[j] = Field(v_list[0].grid, est, "profile")
    return profiles, shifts


def _recenter(V: Field, xs, radius: float):
    """Fix the translation gauge: put the local |V|^2 centroid at the origin."""
    grid = V.grid
    w = np.abs(V.values) ** 2
    idx = np.unravel_index(int(np.argmax(w)), w.shape)
    p0 = grid.point_of(idx)
    dx = [grid.wrap(c - q) for c, q in zip(grid.coords, p0)]
    ball = np.sqrt(sum(q ** 2 for q in dx)) <= radius
    c = np.array([q0 + np.sum(w * ball * q) / np.sum(w * ball) for q0, q in zip(p0, dx)])
    V = translate(V, tuple(-c))
    return Field(grid, V.values, "profile"), [tuple(float(a + b) for a, b in zip(x, c)) for x in xs]


def _remainders(v_list, profiles, shifts):
    out = []
    for k, v in enumerate(v_list):
        r = v.values.copy()
        for V, x in zip(profiles, shifts):
            r -= translate(V, x[k]).values
        out.append(Field(v.grid, r, f"rem_{k}"))
    return out


def extract(v_list: Sequence[Field], params: ModelParams, opts: Optional[ExtractOptions] = None) -> ProfileSet:
    """Greedy translation-profile extraction from a separating sequence.

    Each round locates the strongest local H^sc + H^s mass, tracks it backwards,
    estimates the profile by masked aligned averaging and subtracts it.  Once the
    residual local mass is small, all profiles are refined jointly by backfitting.
    """
    opts = opts or ExtractOptions()
    if len(v_list) < 3:
        raise ValueError("extract needs at least three fields")
    base = [_density(v, params) for v in v_list]
    mass0 = windowed_integral(base[-1], opts.window)[1]
    resid = list(v_list)
    profiles, shifts = [], []
    while len(profiles) < opts.max_profiles and mass0 > 0:
        _, cur, _ = windowed_integral(_density(resid[-1], params), opts.window)
        if cur < max(opts.threshold * mass0, opts.min_mass):
            break
        centers, competitors, _ = _track(resid, params, opts)
        V = _estimate(resid, centers, competitors, opts)
        # re-centre on the estimate with off-grid shifts, then estimate once more
        centers = [_locate(r, V, c, opts.window) for r, c in zip(resid, centers)]
        V = _estimate(resid, centers, competitors, opts)
        profiles.append(V)
        shifts.append(centers)
        resid = [Field(v.grid, v.values - translate(V, c).values) for v, c in zip(resid, centers)]
    if profiles and opts.backfit:
        profiles, shifts = _backfit(v_list, profiles, shifts, opts, opts.backfit)
    for j in range(len(profiles)):
        profiles[j], shifts[j] = _recenter(profiles[j], shifts[j], opts.window)
    # separations between extracted centres must grow
    g = v_list[0].grid
    for a in range(len(shifts)):
        for b in range(a + 1, len(shifts)):
            dist = [float(np.linalg.norm(g.wrap(np.subtract(x, y)))) for x, y in zip(shifts[a], shifts[b])]
            if np.any(np.diff(dist) <= 0):
                raise AmbiguityError(f"profiles {a} and {b} do not separate: distances {dist}")
    order = sorted(range(len(profiles)),
                   key=lambda j: -(sobolev_norm(profiles[j], params.sc) + sobolev_norm(profiles[j], params.s)))
    profiles = [profiles[j] for j in order]
    shifts = [shifts[j] for j in order]
    ps = ProfileSet(profiles, shifts, _remainders(v_list, profiles, shifts), params=params)
    ps.defects = identity_defects(ps, v_list, params)
    return ps


def identity_defects(ps: ProfileSet, v_list: Sequence[Field], params: ModelParams) -> dict:
    """Pythagoras defects in H^sc and H^s and the L^{a+2} remainder fraction at the last n."""
    v = v_list[-1]
    rem = ps.remainders[-1]
    out = {}
    for name, g in (("pythagoras_sc", params.sc), ("pythagoras_s", params.s)):
        tot = sobolev_norm(v, g) ** 2
        parts = sum(sobolev_norm(V, g) ** 2 for V in ps.profiles) + sobolev_norm(rem, g) ** 2
        out[name] = abs(tot - parts) / tot if tot > 0 else 0.0
    q = params.alpha + 2
    lv = lebesgue_norm(v, q)
    out["remainder_Lq"] = lebesgue_norm(rem, q) / lv if lv > 0 else 0.0
    out["q"] = q
    out["q_admissible"] = bool(lq_admissible(params, q))
    return out


def lq_admissible(params: ModelParams, q: float) -> bool:
    """q in (alpha_c, 2 + 2*) with 2* = 4s/(d-2s) (infinite when d <= 2s)."""
    upper = math.inf if params.d <= 2 * params.s else 2 + 4 * params.s / (params.d - 2 * params.s)
    return params.alpha_c < q < upper


# ---------------------------------------------------------------------------
# compactness lower bound

def compactness_bound_check(v_list: Sequence[Field], S_gs: float, params: ModelParams,
                            opts: Optional[ExtractOptions] = None, ps: Optional[ProfileSet] = None) -> dict:
    """Compare ||V1||_{H^sc}^a with 2/(a+2) m^{a+2}/M^2 S_gs^a."""
    ps = ps or extract(v_list, params, opts)
    if not ps.profiles:
        raise AmbiguityError("no profile extracted")
    a = params.alpha
    m = max(lebesgue_norm(v, a + 2) for v in v_list)
    M = max(sobolev_norm(v, params.s) for v in v_list)
    lhs = sobolev_norm(ps.profiles[0], params.sc) ** a
    bound = 2 / (a + 2) * m ** (a + 2) / M ** 2 * S_gs ** a
    return {"lhs": lhs, "bound": bound, "ratio": lhs / bound, "m": m, "M": M, "S_gs": S_gs,
            "profiles": len(ps.profiles)}


# ---------------------------------------------------------------------------
# limiting profile alignment

def limiting_scale(u: Field, Q: Field, params: ModelParams) -> float:
    """lambda_n = (||Q||_{H^s} / ||u||_{H^s})^{1/(s - sc)}."""
    return (sobolev_norm(Q, params.s) / sobolev_norm(u, params.s)) ** (1.0 / (params.s - params.sc))


def _same_grid(a: Grid, b: Grid) -> bool:
    return a.d == b.d and a.N == b.N and abs(a.L - b.L) <= 1e-9 * b.L


def align_to_ground_state(u: Field, Q: Field, params: ModelParams, ambiguity: float = 0.1,
                          refine: bool = True):
    """Recover (theta, x0, lam) with u ~ e^{i theta} lam^{2s/a} Q(lam x + x0).

    Returns (theta, x0, lam, residual_sc, residual_s).
    """
    if sobolev_norm(u, params.s) <= sobolev_norm(Q, params.s):
        raise ValueError("alignment needs ||u||_{H^s} > ||Q||_{H^s}")
    lam_n = limiting_scale(u, Q, params)
    g = u.grid
    # v(x) = lam_n^{2s/a} u(lam_n x): exact on the grid of half-width L / lam_n
    v = Field(Grid(g.d, g.N, g.L / lam_n), lam_n ** (2 * params.s / params.alpha) * u.values)
    if not _same_grid(v.grid, Q.grid):
        v = resample(v, Q.grid)
    else:
        v = Field(Q.grid, v.values)
    qg = Q.grid
    corr = np.abs(sfft.ifftn(sfft.fftn(v.values) * np.conj(sfft.fftn(Q.values))))
    pk = _peaks(corr, 0.0)
    if len(pk) > 1 and corr[pk[1]] >= (1 - ambiguity) * corr[pk[0]]:
        raise AlignmentAmbiguous("two correlation peaks within tolerance")
    idx = pk[0]
    disp = np.array([i * qg.h for i in idx])
    disp = qg.wrap(disp)  # v(x) ~ Q(x - disp)

    def misfit(z):
        w = translate(v, tuple(-z)).values
        return -abs(np.vdot(Q.values, w))

    if refine:
        res = optimize.minimize(misfit, disp, method="Nelder-Mead",
                                options={"xatol": 1e-10 * qg.h + 1e-13, "fatol": 1e-15, "maxiter": 400})
        if abs(res.x - disp).max() <= qg.h:
            disp = res.x
    w = translate(v, tuple(-disp))
    theta = float(np.angle(np.vdot(Q.values, w.values)))
    aligned = w.with_values(w.values * np.exp(-1j * theta))
    diff = aligned - Q
    r_sc = sobolev_norm(diff, params.sc) / sobolev_norm(Q, params.sc)
    r_s = sobolev_norm(diff, params.s) / sobolev_norm(Q, params.s)
    x0 = tuple(float(-x) for x in disp)  # Q(x + x0) = Q(x - disp)
    return theta, x0, 1.0 / lam_n, r_sc, r_s


def manufacture(Q: Field, params: ModelParams, theta: float, x0, lam: float) -> Field:
    """e^{i theta} lam^{2s/a} Q(lam x + x0), realized on the grid of half-width L_Q / lam."""
    g = Q.grid
    shifted = translate(Q, tuple(-np.asarray(x0, float)))  # Q(y + x0)
    return Field(Grid(g.d, g.N, g.L / lam),
                 np.exp(1j * theta) * lam ** (2 * params.s / params.alpha) * shifted.values, "manufactured")
