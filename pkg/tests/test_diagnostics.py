import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import golden
from fpstates import ModelParams, SlabConfig, build_fp_state, bump, indicator, torus_spectrum
from fpstates import diagnostics as dg
from fpstates.errors import InsufficientModes, InvalidParams, InvalidSubslab
from fpstates.experiments import resonant_spectrum, unsoftened_state
from fpstates.fpstate import FPState, reference_state
from fpstates.spectrum import synthetic_spectrum


def hand_state(lam, theta, cutoff=None):
    """State with prescribed angles, bypassing the softening."""
    lam = np.asarray(lam, dtype=float)
    spec = synthetic_spectrum(1.0, lam)
    return FPState(spec, "fp", lam, np.ones_like(lam), np.asarray(theta, dtype=float),
                   np.zeros_like(lam), float(lam[-1] if cutoff is None else cutoff), SlabConfig(-1, 1))


@pytest.fixture(scope="module")
def softened20():
    spec = torus_spectrum(ModelParams(1.0), 20.0)
    return build_fp_state(spec, SlabConfig(-15, 15), bump(0, 15))


@pytest.fixture(scope="module")
def unsoftened100():
    return unsoftened_state(b=1.0, cutoff=100.0)


def test_sin_theta_sequence(golden_state, small_spectrum):
    z, mu = dg.sin_theta_sequence(golden_state)
    np.testing.assert_array_equal(z, np.arange(1, len(golden_state) + 1))
    np.testing.assert_allclose(mu[2:14], golden.SIN_THETA, atol=1e-15)
    assert mu[0] == 0  # lambda = m
    _, ref = dg.sin_theta_sequence(reference_state(small_spectrum))
    assert np.all(ref == 0)
    spec = synthetic_spectrum(1.0, [math.pi / 2] * 10)
    _, zero = dg.sin_theta_sequence(build_fp_state(spec, SlabConfig(-1, 1), indicator(-1, 1)))
    assert np.all(zero == 0)


def test_reference_series_is_zero(small_spectrum):
    ref = reference_state(small_spectrum)
    for p in (0, 2, 7):
        r = dg.hadamard_series(ref, p)
        assert r.total == 0 and r.verdict == dg.CONVERGED


def test_softened_series_converges(softened20):
    r = dg.hadamard_series(softened20, 0)
    assert r.verdict == dg.CONVERGED
    assert r.decade_change < 1e-8 and r.tail_estimate < 1e-8


def test_unsoftened_series_diverges(unsoftened100):
    r = dg.hadamard_series(unsoftened100, 2)
    assert r.verdict == dg.DIVERGING
    n, s = np.array(r.partial_sums).T
    assert s[-1] > 10 * s[len(s) // 10]


def test_partial_sums_at_group_ends(golden_state):
    r = dg.hadamard_series(golden_state, 1)
    ends = dg._group_ends(golden_state.lam)
    n, s = np.array(r.partial_sums).T
    np.testing.assert_array_equal(n, ends + 1)
    np.testing.assert_allclose(s, np.cumsum(golden_state.lam * np.sin(golden_state.theta) ** 2)[ends])
    assert r.total == s[-1]


def test_series_validation(golden_state):
    with pytest.raises(InvalidParams):
        dg.hadamard_series(golden_state, -1)
    with pytest.raises(InsufficientModes):
        dg.hadamard_series(hand_state([1.5, 2.0], [0.1, 0.1]), 0)
    with pytest.raises(InvalidParams):
        dg.fluctuation_squared(golden_state, 0)
    with pytest.raises(InvalidParams):
        dg.Thresholds(decay_floor=1.5)
    with pytest.raises(InvalidParams):
        dg.Thresholds(tail_tol=0)


LAM = np.linspace(1.0, 400.0, 6000)


def test_verdict_exponential_decay():
    r = dg.hadamard_series(hand_state(LAM, 1e-3 * np.exp(-LAM / 4)), 2)
    assert r.verdict == dg.CONVERGED


def test_verdict_oscillation_persists():
    r = dg.hadamard_series(hand_state(LAM, 0.4 * np.abs(np.sin(3.1 * LAM))), 0)
    assert r.verdict == dg.DIVERGING


def test_verdict_slow_power_law_is_inconclusive():
    # terms ~ lambda^-1.5 with linear counting: summable, but the tail is far above tolerance
    r = dg.hadamard_series(hand_state(LAM, 0.1 * LAM ** -0.75), 0)
    assert r.verdict == dg.INCONCLUSIVE
    assert r.fit_exponent == pytest.approx(-1.5, abs=1e-4)  # sin^2 is not exactly a power
    # int_L^inf C l^-1.5 dN with dN = n/L dl
    c = 0.01
    density = LAM.size / (LAM[-1] - LAM[0])
    # the counting fit is a local power law, so only a few percent agreement is expected
    assert r.tail_estimate == pytest.approx(c * density * 2 / math.sqrt(LAM[-1]), rel=0.05)


@settings(max_examples=25, deadline=None)
@given(st.floats(1.2, 4.0), st.floats(1e-6, 1e-3))
def test_steep_power_law_converges(q, amp):
    theta = amp * LAM ** (-q - 4)
    r = dg.hadamard_series(hand_state(LAM, theta), 0)
    assert r.verdict == dg.CONVERGED
    assert r.total == pytest.approx(float(np.sum(np.sin(theta) ** 2)), rel=1e-12)


def test_k_operator(golden_state, small_spectrum):
    k = dg.k_operator_spectrum(golden_state, -0.5, 0.5)
    np.testing.assert_allclose(k.magnitudes[2:14], golden.SIN_THETA, atol=1e-15)
    ev = k.eigenvalues()
    np.testing.assert_array_equal(ev[:, 0], -ev[:, 1])
    assert k.solver_deviation < 1e-12
    ref = replace(reference_state(small_spectrum), slab=SlabConfig(-1, 1))
    zero = dg.k_operator_spectrum(ref, -0.5, 0.5)
    assert np.all(zero.magnitudes == 0)
    with pytest.raises(InvalidSubslab):
        dg.k_operator_spectrum(golden_state, -2, 0.5)
    with pytest.raises(InvalidSubslab):
        dg.k_operator_spectrum(golden_state, 0.5, 0.2)


def test_k_operator_width_scales(golden_state):
    a = dg.k_operator_spectrum(golden_state, -0.5, 0.5)
    b = dg.k_operator_spectrum(golden_state, -0.2, 0.1)
    np.testing.assert_allclose(b.magnitudes, 0.3 * a.magnitudes, rtol=1e-14)


def test_k_operator_verdicts(unsoftened100):
    assert dg.k_operator_spectrum(unsoftened100, -0.5, 0.5).verdict == "noncompact-indicated"
    st_ = hand_state(LAM, 1e-3 * np.exp(-LAM / 4))
    assert dg.k_operator_spectrum(st_, -0.5, 0.5).verdict == "compact-indicated"


def test_scan_resonance_and_generic_b():
    b = 1.0
    spec = resonant_spectrum(b)
    res = dg.scan_slab_halfwidths(spec, [b])
    assert res.maximum[0] < 1e-20
    assert not res.flagged[0]
    assert res.verdicts == ["inconclusive"]
    generic = dg.scan_slab_halfwidths(spec, [b * math.sqrt(2)])
    assert generic.maximum[0] > 0.99
    assert generic.flagged[0]
    assert generic.verdicts == ["non-hadamard-indicated"]


def test_scan_torus_fraction():
    spec = torus_spectrum(ModelParams(1.0, (1.0, 1.0, 1.0)), 60.0)
    r = dg.scan_slab_halfwidths(spec, np.linspace(0.3, 3, 202)[1:-1])
    assert r.flagged_fraction >= 0.95


def test_scan_validation(small_spectrum):
    with pytest.raises(InvalidParams):
        dg.scan_slab_halfwidths(small_spectrum, [])
    with pytest.raises(InvalidParams):
        dg.scan_slab_halfwidths(small_spectrum, [2.0, 1.0])


def test_range_max_matches_naive(rng):
    vals = rng.random(300)
    starts = rng.integers(0, 290, 50)
    stops = starts + rng.integers(1, 10, 50)
    want = [vals[a:b].max() for a, b in zip(starts, stops)]
    np.testing.assert_array_equal(dg._range_max(vals, starts, stops), want)


def test_fluctuation_single_mode(golden_state, small_spectrum):
    r = dg.fluctuation_squared(golden_state, 1)
    assert r.terms[2] == pytest.approx(golden.FLUCT_P1, abs=1e-15)
    r2 = dg.fluctuation_squared(golden_state, 1, hhat0=0.5j)
    assert r2.terms[2] == pytest.approx(0.25 * golden.FLUCT_P1, abs=1e-15)
    assert dg.fluctuation_squared(reference_state(small_spectrum), 2).total == 0


def test_bridge(golden_state, softened20, unsoftened100):
    for state in (golden_state, softened20, unsoftened100):
        rep = dg.fluctuation_implies_hadamard_check(state)
        assert rep.bridge_ok and rep.cos_sq_ok
    s2 = golden.SIN_SQ_THETA
    assert 2 * s2 <= golden.SIN_SQ_2THETA <= 4 * s2
    rep = dg.fluctuation_implies_hadamard_check(softened20, ps=(1,))
    assert rep.agreement[1][2]


def test_large_slab_envelope():
    lam = np.array([1.0, 2.0, 50.0])
    env = dg.large_slab_envelope(lam, 1.0, 10.0)
    assert env[0] == 0
    assert np.all(np.diff(env) > 0)
    assert np.all(dg.large_slab_envelope(lam, 1.0, 1000.0) < env + 1e-300)
