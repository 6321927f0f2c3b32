import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fnlslab.profiles import (
    AlignmentAmbiguous, AmbiguityError, SynthesisError, SyntheticSequenceSpec,
    align_to_ground_state, compactness_bound_check, extract, identity_defects, limiting_scale, lq_admissible,
    manufacture, synthesize,
)
from fnlslab.spectral import Field, Grid, derive_params, gaussian, sobolev_norm, translate


def _pair_law(seps, d=1):
    pad = [0.0] * (d - 1)
    return [[tuple([-s / 2] + pad) for s in seps], [tuple([s / 2] + pad) for s in seps]]


def _pair(grid, seps, w1=1.0, w2=0.6, a2=0.8):
    return synthesize(SyntheticSequenceSpec([gaussian(grid, w1), gaussian(grid, w2, a2)], _pair_law(seps)))


# ---------------------------------------------------------------------------
# synthesis

def test_single_static_profile():
    g = Grid(1, 128, 16.0)
    V = gaussian(g, 1.2)
    vs = synthesize(SyntheticSequenceSpec([V], [[(0.0,)] * 4]))
    assert len(vs) == 4 and all(np.allclose(v.values, V.values, atol=1e-15) for v in vs)


def test_two_copies_double_the_norm(gs1_wide, p1):
    # DERIVED: cross terms vanish as the copies separate, but only algebraically
    # (Q has power tails), so 1e-4 needs a separation of about 160
    Q = gs1_wide.field
    seps = [24.0, 48.0, 96.0, 160.0]
    vs = synthesize(SyntheticSequenceSpec([Q, Q], _pair_law(seps)))
    n2 = 2 * sobolev_norm(Q, p1.s) ** 2
    gap = np.array([abs(sobolev_norm(v, p1.s) ** 2 / n2 - 1) for v in vs])
    assert np.all(np.diff(gap) < 0)
    slope = np.polyfit(np.log(seps), np.log(gap), 1)[0]
    assert -2.5 < slope < -1.5
    assert gap[-1] < 1e-4


def test_synthesis_refusals():
    g = Grid(1, 64, 8.0)
    V = gaussian(g)
    with pytest.raises(SynthesisError):
        synthesize(SyntheticSequenceSpec([], []))
    with pytest.raises(SynthesisError):
        synthesize(SyntheticSequenceSpec([V, V], _pair_law([4.0, 3.0, 5.0])))
    with pytest.raises(SynthesisError):
        synthesize(SyntheticSequenceSpec([V], [[(9.0,)]]))
    with pytest.raises(SynthesisError):
        synthesize(SyntheticSequenceSpec([V], [[(7.0,)]], tail_threshold=1e-8))


def test_noise_only_gives_nothing(p1):
    g = Grid(1, 256, 32.0)
    zero = Field(g, np.zeros(256))
    vs = synthesize(SyntheticSequenceSpec([zero], [[(0.0,)] * 4], noise=1e-3, seed=4))
    assert extract(vs, p1).profiles == []
    # on top of a unit bump the same noise is left in the remainder
    ref = synthesize(SyntheticSequenceSpec([gaussian(g)], [[(0.0,)] * 4]))
    assert len(extract([a + b for a, b in zip(vs, ref)], p1).profiles) == 1
    with pytest.raises(ValueError):
        extract(vs[:2], p1)


# ---------------------------------------------------------------------------
# extraction

def test_single_centred_profile(p1):
    g = Grid(1, 512, 32.0)
    V = gaussian(g, 1.0)
    ps = extract(synthesize(SyntheticSequenceSpec([V], [[(0.0,)] * 4])), p1)
    assert len(ps.profiles) == 1
    assert max(abs(x[0]) for x in ps.shifts[0]) < g.h
    assert ps.defects["pythagoras_s"] < 1e-10 and ps.defects["remainder_Lq"] < 1e-3


def test_planted_gaussian_pair(p1):
    g = Grid(1, 1024, 64.0)
    seps = [8.0, 16.0, 32.0]
    vs = _pair(g, seps)
    ps = extract(vs, p1)
    assert len(ps.profiles) == 2
    # larger profile first
    truth = [gaussian(g, 1.0), gaussian(g, 0.6, 0.8)]
    law = _pair_law(seps)
    for V, s, T, x in zip(ps.profiles, ps.shifts, truth, law):
        assert sobolev_norm(V - T, p1.s) / sobolev_norm(T, p1.s) < 0.05
        assert abs(s[-1][0] - x[-1][0]) <= g.h
    assert ps.defects["pythagoras_s"] < 0.02


def test_translation_equivariance(p1):
    g = Grid(1, 1024, 64.0)
    seps = [8.0, 16.0, 32.0]
    vs = _pair(g, seps)
    z = 3.3
    a = extract(vs, p1)
    b = extract([translate(v, (z,)) for v in vs], p1)
    for sa, sb in zip(a.shifts, b.shifts):
        for xa, xb in zip(sa, sb):
            assert abs(g.wrap(np.array(xb) - np.array(xa) - z)[0]) <= g.h
    for Va, Vb in zip(a.profiles, b.profiles):
        assert sobolev_norm(Va - Vb, p1.s) / sobolev_norm(Va, p1.s) < 0.02


@settings(max_examples=5, deadline=None)
@given(w2=st.floats(0.5, 1.0), sep0=st.floats(4.0, 6.0))
def test_defects_shrink_as_separations_double(w2, sep0):
    p = derive_params(1, 0.8, 4.0)
    g = Grid(1, 512, 64.0)
    V1, V2 = gaussian(g, 1.0), gaussian(g, w2, 0.7)
    d = []
    for k in range(3):
        sep = sep0 * 2 ** k
        v = synthesize(SyntheticSequenceSpec([V1, V2], [[(-sep / 2,)], [(sep / 2,)]]))[0]
        tot = sobolev_norm(v, p.s) ** 2
        d.append(abs(tot - sobolev_norm(V1, p.s) ** 2 - sobolev_norm(V2, p.s) ** 2) / tot)
    assert d[0] > d[1] > d[2]


def test_non_separating_refused(p1):
    g = Grid(1, 512, 32.0)
    V = gaussian(g, 1.0)
    # the second bump orbits the first instead of moving away
    law = [[(0.0,)] * 4, [(8.0,), (12.0,), (9.0,), (14.0,)]]
    vs = [translate(V, a) + translate(V, b) for a, b in zip(law[0], law[1])]
    with pytest.raises(AmbiguityError):
        extract(vs, p1)


def test_defects_identity_for_exact_decomposition(p1):
    g = Grid(1, 256, 32.0)
    V = gaussian(g)
    vs = synthesize(SyntheticSequenceSpec([V], [[(0.0,)] * 3]))
    ps = extract(vs, p1)
    d = identity_defects(ps, vs, p1)
    assert d["pythagoras_sc"] < 1e-6 and d["q"] == 6.0 and d["q_admissible"]


def test_lq_gate():
    # ANALYTIC: alpha_c = 3.2 < 4.4 < 8 at (2, 0.75, 2.4)
    p = derive_params(2, 0.75, 2.4)
    assert lq_admissible(p, 4.4)
    assert not lq_admissible(p, 3.2) and not lq_admissible(p, 8.0)


# ---------------------------------------------------------------------------
# compactness bound

def test_equality_case(gs1, p1):
    # ANALYTIC: Q-translates saturate the bound
    Q = gs1.field
    vs = synthesize(SyntheticSequenceSpec([Q], [[(0.0,), (1.0,), (2.0,), (3.0,)]]))
    chk = compactness_bound_check(vs, gs1.constants.S_gs, p1)
    assert chk["ratio"] == pytest.approx(1.0, abs=0.02)


def test_scaled_ground_state_is_also_equality(gs1, p1):
    # both sides are homogeneous of degree alpha in the amplitude, so 1.5 Q saturates too
    Q = gs1.field * 1.5
    vs = synthesize(SyntheticSequenceSpec([Q], [[(0.0,), (1.0,), (2.0,)]]))
    assert compactness_bound_check(vs, gs1.constants.S_gs, p1)["ratio"] == pytest.approx(1.0, abs=1e-6)


def test_strict_side_for_gaussian(gs1, p1):
    g = gs1.field.grid
    vs = synthesize(SyntheticSequenceSpec([gaussian(g, 1.0)], [[(0.0,), (1.0,), (2.0,)]]))
    assert compactness_bound_check(vs, gs1.constants.S_gs, p1)["ratio"] > 1.0


def test_bound_holds_with_far_small_bump(gs1_wide, p1):
    Q = gs1_wide.field
    g = Q.grid
    small = gaussian(g, 0.7, 0.1)
    vs = synthesize(SyntheticSequenceSpec([Q, small], _pair_law([16.0, 32.0, 64.0])))
    assert compactness_bound_check(vs, gs1_wide.constants.S_gs, p1)["ratio"] >= 0.98


# ---------------------------------------------------------------------------
# alignment

def test_limiting_scale_example(p2):
    # ANALYTIC: ||u||_s = 4 ||Q||_s and s - sc = 0.375 give 4^{-8/3}
    g = Grid(2, 32, 6.0)
    Q = gaussian(g)
    assert limiting_scale(Q * 4.0, Q, p2) == pytest.approx(0.0248031414370031167929954006136, rel=1e-13)


def test_alignment_round_trip(gs1, p1):
    Q = gs1.field
    u = manufacture(Q, p1, 0.7, (1.234,), 2.5)
    theta, x0, lam, r_sc, r_s = align_to_ground_state(u, Q, p1)
    assert theta == pytest.approx(0.7, abs=1e-6)
    assert abs(x0[0] - 1.234) <= Q.grid.h
    assert lam == pytest.approx(2.5, rel=1e-6)
    assert r_sc < 1e-6 and r_s < 1e-6


@settings(max_examples=8, deadline=None)
@given(theta=st.floats(-3.0, 3.0), x=st.floats(-5.0, 5.0), lam=st.floats(1.2, 4.0))
def test_alignment_inverts_manufacture(theta, x, lam):
    p = derive_params(1, 0.8, 4.0)
    g = Grid(1, 256, 12.0)
    Q = gaussian(g, 0.8)
    th, x0, lm, r_sc, r_s = align_to_ground_state(manufacture(Q, p, theta, (x,), lam), Q, p)
    assert abs((th - theta + math.pi) % (2 * math.pi) - math.pi) < 1e-6
    assert abs(x0[0] - x) <= g.h
    assert lm == pytest.approx(lam, rel=1e-6)


def test_alignment_refusals(p1):
    g = Grid(1, 256, 16.0)
    Q = gaussian(g, 1.0)
    with pytest.raises(ValueError):
        align_to_ground_state(Q * 0.5, Q, p1)
    twin = translate(Q, (-5.0,)) + translate(Q, (5.0,))
    with pytest.raises(AlignmentAmbiguous):
        align_to_ground_state(twin * 3.0, twin, p1)
