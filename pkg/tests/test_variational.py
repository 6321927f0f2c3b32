import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fnlslab.spectral import Field, Grid, derive_params, energy, gaussian, lebesgue_norm, rescale, sobolev_norm, translate
from fnlslab.variational import (
    AscentOptions, ConvergenceError, SharpConstants, UndefinedQuotientError, compute_ground_state,
    elliptic_residual, gn_margin, gn_rhs, maximize_weinstein, petviashvili_mass_critical, pohozaev_defects,
    random_smooth_field, sobolev_dilation, to_sobolev_ground_state, weinstein_grad, weinstein_H, weinstein_K,
)


def _mean_free(f):
    return f.with_values(f.values - f.values.mean())


# ---------------------------------------------------------------------------
# functionals

def test_H_amplitude_and_phase_invariance(p1):
    f = _mean_free(gaussian(Grid(1, 256, 16.0), 1.3))
    h = weinstein_H(f, p1)
    assert weinstein_H(f * 2.0, p1) == pytest.approx(h, rel=1e-13)
    assert weinstein_H(f * np.exp(0.4j), p1) == pytest.approx(h, rel=1e-13)
    assert weinstein_K(f * 3.0, p1) == pytest.approx(weinstein_K(f, p1), rel=1e-13)


def test_H_dilation_invariance(p2):
    # ANALYTIC: H is invariant under the NLS scaling
    # widen (lam < 1) so both fields stay resolved; the box must be ~80 widths to
    # keep the dropped zero mode below 1e-4
    g = Grid(2, 1024, 128.0)
    f = gaussian(g, 0.75)
    assert weinstein_H(rescale(f, 0.5, p2), p2) == pytest.approx(weinstein_H(f, p2), rel=1e-4)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6), lam=st.floats(0.2, 5.0))
def test_H_exact_under_grid_dilation(seed, lam):
    # same samples on a box of half-width lam L is exactly f(x/lam)
    p = derive_params(1, 0.8, 4.0)
    r = np.random.default_rng(seed)
    g = Grid(1, 64, 8.0)
    f = Field(g, r.normal(size=64) + 1j * r.normal(size=64))
    f2 = Field(Grid(1, 64, 8.0 * lam), f.values)
    assert weinstein_H(f2, p) == pytest.approx(weinstein_H(f, p), rel=1e-11)


def test_zero_field_refused(p1):
    g = Grid(1, 64, 4.0)
    with pytest.raises(UndefinedQuotientError):
        weinstein_H(Field(g, np.zeros(64)), p1)
    with pytest.raises(UndefinedQuotientError):
        maximize_weinstein(p1, g, "H", Field(g, np.zeros(64)))


@pytest.mark.parametrize("functional", ["H", "K"])
def test_gradient_matches_finite_differences(p1, functional):
    g = Grid(1, 128, 8.0)
    r = np.random.default_rng(7)
    f = _mean_free(gaussian(g, 1.0) + Field(g, 0.1 * r.normal(size=128)))
    fun = weinstein_H if functional == "H" else weinstein_K
    G = weinstein_grad(f, p1, functional).values
    eps = 1e-6
    for _ in range(20):
        v = r.normal(size=128) + 1j * r.normal(size=128)
        v -= v.mean()
        fd = (fun(f + Field(g, eps * v), p1) - fun(f - Field(g, eps * v), p1)) / (2 * eps)
        an = float(np.real(np.vdot(G, v)) * g.cell)
        assert an == pytest.approx(fd, rel=1e-5, abs=1e-9)


# ---------------------------------------------------------------------------
# ascent and ground states

def test_ascent_monotone_and_cross_init(p1):
    g = Grid(1, 1024, 32.0)
    m1 = maximize_weinstein(p1, g, "H", Field(g, np.exp(-g.x ** 2 / 2)))
    m2 = maximize_weinstein(p1, g, "H", Field(g, 1 / np.cosh(g.x)))
    assert m1.converged and m2.converged
    h = np.array(m1.history)
    assert np.all(np.diff(h) >= -1e-12 * abs(h[-1]))
    assert m1.value == pytest.approx(m2.value, rel=1e-6)


def test_ascent_reports_nonconvergence(p1):
    g = Grid(1, 256, 16.0)
    with pytest.raises(ConvergenceError) as e:
        maximize_weinstein(p1, g, "H", gaussian(g, 1.0), AscentOptions(max_iter=2))
    assert e.value.result is not None


def test_dilation_constant_example(p2):
    # ANALYTIC: lambda = (alpha/2)^{1/(2(s-sc))} = 1.2^{4/3}
    assert sobolev_dilation(p2) == pytest.approx(1.2751902830191332792572906666, rel=1e-13)


def test_ground_state_identities(gs1, p1):
    Q, c = gs1.field, gs1.constants
    ns2 = sobolev_norm(Q, p1.s) ** 2
    assert abs(gs1.pohozaev_defect_1) < 1e-5 and abs(gs1.pohozaev_defect_2) < 1e-5
    assert abs(energy(Q, p1)) < 1e-5 * ns2
    assert weinstein_H(Q, p1) == pytest.approx(c.A_GN, rel=1e-4)
    assert c.S_gs == pytest.approx(((p1.alpha + 2) / (2 * c.A_GN)) ** (1 / p1.alpha), rel=1e-12)
    # the Lp norm of Q is what the Pohozaev check uses
    assert lebesgue_norm(Q, p1.alpha + 2) ** (p1.alpha + 2) == pytest.approx((p1.alpha + 2) / 2 * ns2, rel=1e-10)


def test_pohozaev_ratio_2d(gs2, p2):
    # ANALYTIC: ||Q||_sc^2 / ||Q||_s^2 = alpha/2 = 1.2
    Q = gs2.field
    assert sobolev_norm(Q, p2.sc) ** 2 / sobolev_norm(Q, p2.s) ** 2 == pytest.approx(1.2, rel=1e-10)


def test_pohozaev_negative_control(gs1, p1):
    Q = gs1.field
    r = np.random.default_rng(3)
    noisy = Q + Field(Q.grid, 0.01 * np.abs(Q.values).max() * r.normal(size=Q.grid.shape))
    gs = type(gs1)(noisy, "sobolev", 0, 0, 0, 0, 0, 0, gs1.constants, p1)
    d1, d2, _ = pohozaev_defects(gs, p1)
    assert max(abs(d1), abs(d2)) > 1e-3


def test_residual_decreases_with_box(p1):
    # the pointwise equation is only met as the box grows (algebraic tails)
    res = [compute_ground_state(p1, Grid(1, 32 * L, float(L))).residual_rel for L in (16, 32, 64)]
    assert res[0] > res[1] > res[2]


@pytest.mark.xfail(strict=True, reason="box-limited: residual decays only algebraically in L (see README, known limitations)")
def test_ground_state_residual_tight(gs1):
    assert gs1.residual_rel < 1e-6


def test_lebesgue_ground_state(p1):
    gs = compute_ground_state(p1, Grid(1, 1024, 32.0), "lebesgue")
    R = gs.field
    assert weinstein_K(R, p1) == pytest.approx(gs.constants.B_GN, rel=1e-4)
    # ||R||_{alpha_c}^{alpha_c} = (alpha/2) ||R||_s^2 (exponent alpha_c, see README)
    lhs = lebesgue_norm(R, p1.alpha_c) ** p1.alpha_c
    assert lhs == pytest.approx(p1.alpha / 2 * sobolev_norm(R, p1.s) ** 2, rel=1e-4)
    assert abs(gs.energy_defect) < 1e-5


def test_mass_critical_ground_state():
    p = derive_params(1, 0.8, 3.2)
    g = Grid(1, 1024, 32.0)
    gs = petviashvili_mass_critical(p, g)
    assert gs.residual < 1e-8
    # DERIVED: C_GN from Q_mc against direct maximization of the sc = 0 quotient
    m = maximize_weinstein(p, g, "H", Field(g, np.exp(-g.x ** 2 / 2)))
    assert gs.constants.C_GN_masscritical == pytest.approx(m.value, rel=1e-3)
    rng = np.random.default_rng(1)
    for _ in range(200):
        f = random_smooth_field(g, rng)
        assert gn_margin(f, gs.constants, p, "mass-critical") >= -1e-6 * gn_rhs(f, gs.constants, p, "mass-critical")


# ---------------------------------------------------------------------------
# sharp inequality

def test_gn_equality_and_zero(gs1, p1):
    Q, c = gs1.field, gs1.constants
    assert abs(gn_margin(Q, c, p1)) / gn_rhs(Q, c, p1) < 1e-4
    assert gn_margin(Field(Q.grid, np.zeros(Q.grid.shape)), c, p1) == 0.0


def test_gn_random_fields(gs1, p1):
    rng = np.random.default_rng(2024)
    for _ in range(200):
        f = random_smooth_field(gs1.field.grid, rng)
        assert gn_margin(f, gs1.constants, p1) >= -1e-6 * gn_rhs(f, gs1.constants, p1)


def test_random_fields_are_mean_free_and_seeded():
    g = Grid(2, 32, 6.0)
    a = random_smooth_field(g, np.random.default_rng(5))
    b = random_smooth_field(g, np.random.default_rng(5))
    assert np.array_equal(a.values, b.values)
    assert abs(a.values.mean()) < 1e-14


def test_translated_ground_state_is_still_critical(gs1, p1):
    Q = gs1.field
    Qs = translate(Q, (3.7,))
    assert weinstein_H(Qs, p1) == pytest.approx(gs1.constants.A_GN, rel=1e-10)
    r0 = elliptic_residual(Q, p1, "sobolev")
    r1 = elliptic_residual(Qs, p1, "sobolev")
    assert np.linalg.norm(r1) == pytest.approx(np.linalg.norm(r0), rel=1e-6)


def test_renormalization_is_exact(p1):
    g = Grid(1, 256, 16.0)
    m = maximize_weinstein(p1, g, "H", gaussian(g, 1.0))
    gs = to_sobolev_ground_state(m.field, p1)
    assert gs.diagnostics["A_GN_route_gap"] < 1e-12
    assert SharpConstants(S_gs=1.0).as_dict() == {"S_gs": 1.0}
