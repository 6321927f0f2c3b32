"""Periodic grid geometry, Fourier multipliers, norms and the scaling operator.

Everything here works on the torus [-L, L)^d sampled at N points per axis.
Fields are immutable; every operation returns a new Field.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sfft
from scipy import ndimage


class FnlsError(Exception):
    """Base class for library errors."""


class ParamError(FnlsError, ValueError):
    pass


class CorruptFieldError(FnlsError, ValueError):
    pass


class SupportEscapeError(FnlsError):
    pass


class WindowTooLargeError(FnlsError, ValueError):
    pass


class Regime(str, enum.Enum):
    MASS_CRITICAL = "mass-critical"
    INTERCRITICAL = "intercritical"
    OTHER = "other"


def _exact(x) -> Fraction:
    # decimal-exact rational for a float literal, so 2.4 means 12/5
    return Fraction(repr(float(x))) if not isinstance(x, (int, Fraction)) else Fraction(x)


@dataclass(frozen=True)
class ModelParams:
    d: int
    s: float
    alpha: float
    sc: float
    alpha_c: float
    regime: Regime
    radial: bool = False

    @property
    def alpha_mc(self) -> float:
        """Mass-critical power 4s/d."""
        return 4.0 * self.s / self.d

    @property
    def alpha_upper(self) -> float:
        """Energy-critical power 4s/(d-2s), infinite when d <= 2s."""
        return math.inf if self.d <= 2 * self.s else 4.0 * self.s / (self.d - 2 * self.s)

    @property
    def p(self) -> float:
        """Potential-energy exponent alpha + 2."""
        return self.alpha + 2.0

    def as_dict(self) -> dict:
        return {"d": self.d, "s": self.s, "alpha": self.alpha, "sc": self.sc,
                "alpha_c": self.alpha_c, "regime": self.regime.value, "radial": self.radial}


def derive_params(d: int, s: float, alpha: float, radial: bool = False,
                  require: Optional[str] = None) -> ModelParams:
    """Fill in the critical exponents and regime for (d, s, alpha).

    Arithmetic is done on the decimal-exact rationals of the inputs and rounded
    once, so e.g. (2, 0.75, 2.4) gives sc = 0.375 and alpha_c = 3.2 exactly.
    ``require`` may be "intercritical" or "mass-critical" to demand a regime.
    """
    if d not in (1, 2):
        raise ParamError(f"d: must be 1 or 2, got {d!r}")
    if not (0.0 < s < 1.0) or s == 0.5:
        raise ParamError(f"s: must lie in (0,1) and differ from 1/2, got {s!r}")
    if not (alpha > 0.0) or not math.isfinite(alpha):
        raise ParamError(f"alpha: must be positive and finite, got {alpha!r}")
    if radial and not (d >= 2 and s >= d / (2 * d - 1)):
        raise ParamError(f"radial: requires d >= 2 and s >= d/(2d-1), got d={d}, s={s}")

    S, A = _exact(s), _exact(alpha)
    sc = Fraction(d, 2) - 2 * S / A
    ac = d * A / (2 * S)
    mc = 4 * S / d
    if A == mc:
        regime = Regime.MASS_CRITICAL
    elif A > mc and (d <= 2 * S or A < 4 * S / (d - 2 * S)):
        regime = Regime.INTERCRITICAL
    else:
        regime = Regime.OTHER

    if require is not None:
        want = Regime(require)
        if want is Regime.INTERCRITICAL and regime is not want:
            hi = "inf" if d <= 2 * S else f"{float(4 * S / (d - 2 * S)):.6g}"
            raise ParamError(f"alpha: intercritical regime needs {float(mc):.6g} < alpha < {hi}, got {alpha}")
        if want is Regime.MASS_CRITICAL and regime is not want:
            raise ParamError(f"alpha: mass-critical regime needs alpha = 4s/d = {float(mc):.6g}, got {alpha}")
    return ModelParams(d=d, s=float(s), alpha=float(alpha), sc=float(sc),
                       alpha_c=float(ac), regime=regime, radial=bool(radial))


# ---------------------------------------------------------------------------
# grid

@dataclass(frozen=True)
class Grid:
    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ParamError(f"grid.d: must be 1 or 2, got {self.d}")
        if self.N < 8 or self.N % 2:
            raise ParamError(f"grid.N: must be even and >= 8, got {self.N}")
        if not (self.L > 0):
            raise ParamError(f"grid.L: must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def cell(self) -> float:
        """Quadrature weight h^d."""
        return self.h ** self.d

    @property
    def parseval(self) -> float:
        """Weight turning sum |fft|^2 into the L2 norm squared."""
        return self.h ** self.d / self.N ** self.d

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    @cached_property
    def coords(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.x] * self.d), indexing="ij"))

    @cached_property
    def wavevectors(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.k] * self.d), indexing="ij"))

    @cached_property
    def r(self) -> np.ndarray:
        return np.sqrt(sum(c ** 2 for c in self.coords))

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(sum(q ** 2 for q in self.wavevectors))

    def symbol(self, sigma: float) -> np.ndarray:
        """|xi|^sigma with the zero mode sent to 0 (sigma > 0) or 1 (sigma = 0)."""
        return _symbol(self.d, self.N, self.L, float(sigma))

    def index_of(self, point: Sequence[float]) -> Tuple[int, ...]:
        return tuple(int(round((p + self.L) / self.h)) % self.N for p in point)

    def point_of(self, idx: Sequence[int]) -> Tuple[float, ...]:
        return tuple(float(self.x[i]) for i in idx)

    def wrap(self, dx):
        """Periodic displacement in [-L, L)."""
        return (np.asarray(dx) + self.L) % (2 * self.L) - self.L

    def as_dict(self) -> dict:
        return {"d": self.d, "N": self.N, "L": self.L}


@lru_cache(maxsize=64)
def _symbol(d: int, N: int, L: float, sigma: float) -> np.ndarray:
    g = Grid(d, N, L)
    if sigma == 0.0:
        out = np.ones(g.shape)
    else:
        with np.errstate(divide="ignore"):
            out = g.kmag ** sigma
        out.flat[0] = 0.0
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# fields

@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray
    tag: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.size != self.grid.N ** self.grid.d:
            raise CorruptFieldError(f"field has {v.size} samples, grid needs {self.grid.N ** self.grid.d}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise CorruptFieldError("field contains NaN or Inf samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values, tag: Optional[str] = None) -> "Field":
        return Field(self.grid, values, self.tag if tag is None else tag)

    def hat(self) -> np.ndarray:
        return sfft.fftn(self.values)

    def __add__(self, other: "Field") -> "Field":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def from_function(grid: Grid, fn, tag: str = "") -> Field:
    return Field(grid, fn(*grid.coords), tag)


def gaussian(grid: Grid, width: float = 1.0, amp: float = 1.0, center=None) -> Field:
    c = np.zeros(grid.d) if center is None else np.asarray(center, float)
    r2 = sum((x - ci) ** 2 for x, ci in zip(grid.coords, c))
    return Field(grid, amp * np.exp(-r2 / (2 * width ** 2)), "gaussian")


def from_hat(grid: Grid, F: np.ndarray, tag: str = "") -> Field:
    return Field(grid, sfft.ifftn(F), tag)


# ---------------------------------------------------------------------------
# multipliers and norms

def frac_power(f: Field, sigma: float) -> Field:
    """Apply the Fourier multiplier |xi|^sigma; (-Delta)^s is sigma = 2s."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return f
    return from_hat(f.grid, f.hat() * f.grid.symbol(sigma), f.tag)


def sobolev_norm(f: Field, gamma: float, F: Optional[np.ndarray] = None) -> float:
    """Homogeneous H^gamma norm by Plancherel (pass F to reuse a transform)."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    F = f.hat() if F is None else F
    w = np.abs(F) ** 2
    if gamma > 0:
        w = w * f.grid.symbol(2 * gamma)
    return float(math.sqrt(np.sum(w) * f.grid.parseval))


def lebesgue_norm(f: Field, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(np.abs(f.values) ** p) * f.grid.cell) ** (1.0 / p))


def sup_norm(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def mass(f: Field) -> float:
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.cell)


def energy(f: Field, params: ModelParams) -> float:
    p = params.alpha + 2
    return 0.5 * sobolev_norm(f, params.s) ** 2 - lebesgue_norm(f, p) ** p / p


def gradient(f: Field) -> Tuple[Field, ...]:
    """Spectral gradient; the Nyquist mode is dropped to keep real data real."""
    F = f.hat()
    out = []
    for ax, q in enumerate(f.grid.wavevectors):
        qq = q.copy()
        nyq = np.isclose(np.abs(qq), np.pi / f.grid.h)
        qq[nyq] = 0.0
        out.append(from_hat(f.grid, 1j * qq * F))
    return tuple(out)


def tail_mass(f: Field, frac: float = 0.1) -> float:
    """Fraction of L2 mass in the outer annulus max_i |x_i| >= (1-frac) L."""
    g = f.grid
    outer = np.zeros(g.shape, bool)
    for c in g.coords:
        outer |= np.abs(c) >= (1 - frac) * g.L
    dens = np.abs(f.values) ** 2
    tot = dens.sum()
    return 0.0 if tot == 0 else float(dens[outer].sum() / tot)


def check_confined(f: Field, threshold: float = 1e-8, what: str = "field") -> None:
    tm = tail_mass(f)
    if tm > threshold:
        raise SupportEscapeError(f"{what}: tail mass {tm:.3e} in outer 10% annulus exceeds {threshold:.1e}")


# ---------------------------------------------------------------------------
# interpolation and scaling

def _eval_matrix(g: Grid, pts: np.ndarray) -> np.ndarray:
    # rows: trigonometric interpolant basis at pts; Nyquist split symmetrically
    ph = np.outer(pts + g.L, g.k)
    E = np.exp(1j * ph)
    nyq = g.N // 2
    E[:, nyq] = np.cos(ph[:, nyq])
    return E / g.N


def evaluate(f: Field, axes_pts: Sequence[np.ndarray], periodic: bool = True) -> np.ndarray:
    """Trigonometric interpolant of f on the tensor grid axes_pts[0] x axes_pts[1] ...

    With periodic=False, points outside [-L, L) read zero (f viewed as a
    confined function on the whole space).
    """
    F = f.hat()
    out = F
    for ax, pts in enumerate(axes_pts):
        pts = np.asarray(pts, float)
        E = _eval_matrix(f.grid, pts)
        if not periodic:
            E[(pts < -f.grid.L) | (pts >= f.grid.L)] = 0.0
        out = np.moveaxis(np.tensordot(E, np.moveaxis(out, ax, 0), axes=(1, 0)), 0, ax)
    return out


def rescale(f: Field, lam: float, params: ModelParams, tail_threshold: float = 1e-8,
            check: bool = True) -> Field:
    """Return lam^{2s/alpha} f(lam x) sampled on the same grid."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if check:
        check_confined(f, tail_threshold, "rescale input")
    if lam == 1:
        return f
    pts = lam * f.grid.x
    vals = lam ** (2 * params.s / params.alpha) * evaluate(f, [pts] * f.grid.d, periodic=False)
    out = Field(f.grid, vals, f.tag)
    if check:
        check_confined(out, tail_threshold, "rescale output")
    return out


def translate(f: Field, shift: Sequence[float]) -> Field:
    """Spectral translation f(x - shift), exact for band-limited data."""
    g = f.grid
    out = f.hat()
    for ax, c in enumerate(shift):
        m = np.exp(-1j * g.k * c)
        m[g.N // 2] = np.cos(g.k[g.N // 2] * c)  # real Nyquist factor keeps real data real
        shape = [1] * g.d
        shape[ax] = g.N
        out = out * m.reshape(shape)
    return from_hat(g, out, f.tag)


def resample(f: Field, grid: Grid) -> Field:
    """Evaluate the interpolant of f at the nodes of another grid (periodic wrap)."""
    return Field(grid, evaluate(f, [grid.x] * grid.d), f.tag)


# ---------------------------------------------------------------------------
# sliding-ball integrals

def ball_indicator(grid: Grid, a: float) -> np.ndarray:
    """Ball of radius a centred at the origin, edge mollified over one cell.

    Returned in FFT layout (origin at index 0) for circular convolution.
    """
    r = np.sqrt(sum(grid.wrap(c + grid.L) ** 2 for c in grid.coords))
    return np.clip((a - r) / grid.h + 0.5, 0.0, 1.0)


def windowed_integral(g: Field, a: float, tol: float = 1e-10):
    """Max over centres of the integral of density g over a ball of radius a.

    Returns (center, value, map) where map holds the ball integral for every
    centre on the grid.
    """
    grid = g.grid
    if not (0 < a < grid.L):
        raise WindowTooLargeError(f"window radius {a} must satisfy 0 < a < L = {grid.L}")
    dens = np.real(g.values)
    if dens.min() < -tol * max(1.0, np.abs(dens).max()):
        raise ValueError("density must be nonnegative")
    B = ball_indicator(grid, a)
    m = np.real(sfft.ifftn(sfft.fftn(dens) * sfft.fftn(B))) * grid.cell
    idx = np.unravel_index(int(np.argmax(m)), m.shape)
    top = float(m[idx])
    # full capture gives a plateau of maximal centres; report the middle of the one holding the argmax
    flat = m >= top - 1e-9 * max(abs(top), 1e-300)
    lab, _ = ndimage.label(flat)
    comp = lab == lab[idx]
    off = [grid.wrap(c - grid.x[i]) for c, i in zip(grid.coords, idx)]
    center = tuple(float(grid.wrap(grid.x[i] + np.mean(o[comp]))) for i, o in zip(idx, off))
    return center, top, Field(grid, m, "window-map")
