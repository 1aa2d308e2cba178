import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qptomo.linalg import ID4, NotHermitianError
from qptomo.metrics import (D_THRESHOLD, PowerLawFit, eta, fit_power_law,
                            n_to_threshold, trace_distance, trace_distance_batch)
from qptomo.pom import LABELS, hw_group
from qptomo.states import EnsembleSpec, bell_state, random_state

seeds = st.integers(0, 2 ** 32 - 1)


def _states(seed, count):
    rng = np.random.default_rng(seed)
    kinds = ("unbiased_mixed", "pure", "max_entangled")
    return [random_state(EnsembleSpec(kinds[k % 3]), rng) for k in range(count)]


def test_trace_distance_examples():
    assert trace_distance(ID4 / 4, ID4 / 4) == 0
    assert trace_distance(bell_state("psi_minus"), bell_state("phi_plus")) == pytest.approx(1.0)
    assert trace_distance(bell_state("psi_minus"), ID4 / 4) == pytest.approx(0.75)
    with pytest.raises(NotHermitianError):
        trace_distance(np.triu(np.ones((4, 4))), ID4)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_trace_distance_is_a_metric(seed):
    a, b, c = _states(seed, 3)
    dab = trace_distance(a, b)
    assert dab >= 0
    assert dab == trace_distance(b, a)
    assert trace_distance(a, c) <= dab + trace_distance(b, c) + 1e-10
    assert dab <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(LABELS))
def test_trace_distance_hw_invariance(seed, mn):
    a, b = _states(seed, 2)
    u = hw_group().element(*mn)
    moved = trace_distance(u @ a @ u.conj().T, u @ b @ u.conj().T)
    assert moved == pytest.approx(trace_distance(a, b), abs=1e-10)


def test_trace_distance_batch(rng):
    a = np.array(_states(1, 6))
    b = np.array(_states(2, 6))
    ref = [trace_distance(x, y) for x, y in zip(a, b)]
    assert np.allclose(trace_distance_batch(a, b), ref, atol=1e-12)


def test_exact_power_law_fit():
    n = np.arange(250, 6001, 250)
    fit = fit_power_law(list(zip(n, 2 * n ** -0.5)))
    assert fit.a == pytest.approx(2, abs=1e-10)
    assert fit.c == pytest.approx(0.5, abs=1e-10)
    assert fit.residual_rms < 1e-12
    assert fit.n_points == 24


def test_noisy_power_law_fit():
    rng = np.random.default_rng(0)
    n = np.linspace(200, 6000, 20)
    d = 1.3 * n ** -0.45 * (1 + 0.01 * rng.standard_normal(20))
    assert fit_power_law(np.column_stack([n, d])).c == pytest.approx(0.45, abs=0.05)


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_power_law([(100, 0.1), (200, 0.05)])
    with pytest.raises(ValueError):
        fit_power_law([(100, 0.1), (200, 0.0), (300, 0.02)])
    with pytest.raises(ValueError):
        fit_power_law([(100, 0.1), (100, 0.05), (300, 0.02)])


def test_n_to_threshold_examples():
    assert n_to_threshold(PowerLawFit(2, 0.5, 3, 0), 0.1) == pytest.approx(400)
    assert n_to_threshold(PowerLawFit(1, 1, 3, 0), 0.1) == pytest.approx(10)
    with pytest.raises(ValueError):
        n_to_threshold(PowerLawFit(1, 0, 3, 0))
    with pytest.raises(ValueError):
        n_to_threshold(PowerLawFit(1, -0.2, 3, 0))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 1.2))
def test_fit_threshold_roundtrip(a, c):
    n = np.arange(250, 6001, 250)
    fit = fit_power_law(list(zip(n, a * n ** -c)))
    n_thr = n_to_threshold(fit, D_THRESHOLD)
    assert fit.predict(n_thr) == pytest.approx(D_THRESHOLD, rel=1e-9)


def test_eta():
    f = PowerLawFit(2.0, 0.5, 3, 0.0)
    assert eta(f, f).eta == 1.0
    g = PowerLawFit(1.5, 0.5, 3, 0.0)
    rep = eta(f, g)
    assert rep.eta == pytest.approx(rep.n_prod_thr / rep.n_sic_thr, rel=1e-12)
    assert rep.eta == pytest.approx((2 / 1.5) ** 2)
    assert rep.d_thr == D_THRESHOLD
