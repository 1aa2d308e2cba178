import warnings

import numpy as np
import pytest

from qptomo.estimate import (ML_RESULT_COLUMNS, MlConfig, ProbabilityFloorWarning, log_likelihood,
                             ml_estimate, ml_estimate_batch, ml_r_operator,
                             rd_estimate, rd_estimate_batch, stop_metric,
                             warm_start)
from qptomo.linalg import ID4, min_eigenvalue
from qptomo.metrics import trace_distance
from qptomo.pom import probabilities
from qptomo.simulate import frequencies, simulate_clicks
from qptomo.states import EnsembleSpec, bell_state, purity, random_state

TIGHT = MlConfig(stop_threshold=1e-10, max_iterations=50_000)


def _mixed(seed):
    return random_state(EnsembleSpec("unbiased_mixed"), np.random.default_rng(seed))


# RD

def test_rd_of_mixed_state(any_pom):
    est = rd_estimate(any_pom, probabilities(any_pom, ID4 / 4))
    assert np.max(np.abs(est.matrix - ID4 / 4)) <= 1e-14
    assert est.physical


@pytest.mark.parametrize("seed", range(10))
def test_rd_inverts_exact_probabilities(any_pom, seed):
    rho = _mixed(seed)
    est = rd_estimate(any_pom, probabilities(any_pom, rho))
    assert np.max(np.abs(est.matrix - rho)) <= 1e-10
    assert np.trace(est.matrix).real == pytest.approx(1.0, abs=1e-10)


def test_rd_singlet_mostly_unphysical(product):
    rho = bell_state("psi_minus")
    flags = [rd_estimate(product, frequencies(simulate_clicks(product, rho, 1000, s))).physical
             for s in range(100)]
    assert np.mean(flags) < 0.1


def test_rd_batch_matches_single(sic, rng):
    f = np.array([frequencies(simulate_clicks(sic, bell_state("phi_plus"), 400, rng))
                  for _ in range(5)])
    mats, lam = rd_estimate_batch(sic, f)
    for k in range(5):
        one = rd_estimate(sic, f[k])
        assert np.allclose(mats[k], one.matrix, atol=1e-14)
        assert lam[k] == pytest.approx(one.min_eig, abs=1e-10)


# likelihood and R

def test_loglik_examples(any_pom):
    u = np.full(16, 1 / 16)
    assert log_likelihood(any_pom, u, 1000, ID4 / 4) == pytest.approx(1000 * np.log(1 / 16))
    rho = _mixed(1)
    p = probabilities(any_pom, rho)
    best = log_likelihood(any_pom, p, 500, rho)
    assert best == pytest.approx(500 * np.sum(p * np.log(p)), rel=1e-12)
    for s in range(2, 7):
        assert log_likelihood(any_pom, p, 500, _mixed(s)) < best


def test_loglik_zero_cells_contribute_nothing(product):
    rho = bell_state("psi_minus")
    f = probabilities(product, rho)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ProbabilityFloorWarning)
        val = log_likelihood(product, f, 100, rho)
    mask = f > 0
    assert val == pytest.approx(100 * np.sum(f[mask] * np.log(f[mask])))


def test_loglik_floor_warns(product):
    f = np.full(16, 1 / 16)
    with pytest.warns(ProbabilityFloorWarning):
        val = log_likelihood(product, f, 10, bell_state("psi_minus"))
    assert np.isfinite(val)


def test_r_vanishes_at_true_state(any_pom):
    rho = _mixed(4)
    r = ml_r_operator(any_pom, probabilities(any_pom, rho), rho)
    assert np.max(np.abs(r)) <= 1e-10


def test_r_at_mixed_state(any_pom, rng):
    f = frequencies(simulate_clicks(any_pom, _mixed(5), 300, rng))
    r = ml_r_operator(any_pom, f, ID4 / 4)
    expect = 16 * np.einsum("j,jab->ab", f, any_pom.outcomes) - ID4
    assert np.max(np.abs(r - expect)) <= 1e-12


def test_r_omits_zero_frequency_cells(product):
    rho = bell_state("psi_minus")
    f = probabilities(product, rho)
    r = ml_r_operator(product, f, rho)
    assert np.all(np.isfinite(r))
    assert np.max(np.abs(r @ rho)) <= 1e-10


# ML

def test_config_validation_and_roundtrip():
    with pytest.raises(ValueError):
        MlConfig(stop_threshold=0)
    with pytest.raises(ValueError):
        MlConfig(trial_epsilons=(0.3, 0.3))
    cfg = MlConfig(stop_threshold=1e-7, trial_epsilons=(0.2, 0.4))
    assert MlConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("seed", range(5))
def test_ml_noiseless_recovers_state(any_pom, seed):
    rho = _mixed(100 + seed)
    res = ml_estimate(any_pom, probabilities(any_pom, rho), 1000, TIGHT)
    assert res.converged
    assert trace_distance(res.estimate, rho) <= 1e-6


def test_ml_fixed_point_exits_immediately(any_pom):
    rho = _mixed(7)
    res = ml_estimate(any_pom, probabilities(any_pom, rho), 1000, start=rho)
    assert res.iterations == 0 and res.converged
    assert res.loglik_trace == [pytest.approx(log_likelihood(any_pom, probabilities(any_pom, rho), 1000, rho))]


@pytest.mark.parametrize("seed", range(4))
def test_ml_iterates_positive_and_monotone(any_pom, seed):
    rng = np.random.default_rng(seed)
    rho = random_state(EnsembleSpec("pure"), rng)
    n = 500
    f = frequencies(simulate_clicks(any_pom, rho, n, rng))
    res = ml_estimate(any_pom, f, n, record_iterates=True)
    assert res.converged and res.final_stop_metric < MlConfig().stop_threshold
    assert len(res.loglik_trace) == res.iterations + 1 == len(res.iterates)
    assert np.all(np.diff(res.loglik_trace) > 0)
    direct = []
    for it in res.iterates:
        assert min_eigenvalue(it) >= -1e-10
        assert np.trace(it).real == pytest.approx(1.0, abs=1e-10)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ProbabilityFloorWarning)
            direct.append(log_likelihood(any_pom, f, n, it))
    direct = np.array(direct)
    assert np.all(np.diff(direct) >= -1e-9 * np.abs(direct[1:]))
    assert direct[-1] == pytest.approx(res.loglik_trace[-1], rel=1e-8)


def test_ml_beats_rd_likelihood_when_rd_unphysical(product, rng):
    rho = bell_state("psi_minus")
    f = frequencies(simulate_clicks(product, rho, 1000, rng))
    rd = rd_estimate(product, f)
    assert not rd.physical
    ml = ml_estimate(product, f, 1000)
    assert min_eigenvalue(ml.estimate) >= -1e-10
    assert ml.final_stop_metric == pytest.approx(stop_metric(product, f, ml.estimate), rel=1e-6, abs=1e-12)


def _physical_rd_cases(pom, count, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        rho = 0.5 * _mixed(int(rng.integers(1 << 30))) + 0.125 * ID4
        f = frequencies(simulate_clicks(pom, rho, 5000, rng))
        rd = rd_estimate(pom, f)
        if rd.min_eig > 1e-3:
            out.append((f, rd.matrix))
    return out


def test_ml_equals_physical_rd(any_pom):
    cases = _physical_rd_cases(any_pom, 50, 8)
    out = ml_estimate_batch(any_pom, np.array([f for f, _ in cases]), TIGHT)
    assert np.all(out["status"] == 0)
    for k, (_, rd) in enumerate(cases):
        assert trace_distance(out["estimate"][k], rd) <= 1e-6


def test_ml_singlet_large_n(product):
    rho = bell_state("psi_minus")
    d = []
    for seed in range(20):
        f = frequencies(simulate_clicks(product, rho, 6000, seed))
        res = ml_estimate(product, f, 6000)
        assert min_eigenvalue(res.estimate) >= -1e-10
        assert purity(res.estimate) <= 1 + 1e-12
        d.append(trace_distance(res.estimate, rho))
    assert 0.01 <= np.mean(d) <= 0.05


def test_ml_iteration_cap_is_flagged(sic, rng):
    f = frequencies(simulate_clicks(sic, bell_state("psi_minus"), 300, rng))
    res = ml_estimate(sic, f, 300, MlConfig(max_iterations=3))
    assert res.status == "max_iterations" and not res.converged
    assert res.iterations == 3
    assert res.final_stop_metric == pytest.approx(stop_metric(sic, f, res.estimate), rel=1e-9)


def test_batch_matches_single(sic, rng):
    fs = np.array([frequencies(simulate_clicks(sic, _mixed(s), 700, rng)) for s in range(6)])
    out = ml_estimate_batch(sic, fs)
    for k in range(6):
        one = ml_estimate(sic, fs[k], 700)
        assert np.allclose(one.estimate, out["estimate"][k], atol=1e-13)
        assert one.iterations == out["iterations"][k]


def test_warm_start_is_a_state(product, rng):
    f = frequencies(simulate_clicks(product, bell_state("psi_minus"), 800, rng))
    start = warm_start(rd_estimate(product, f).matrix)
    assert min_eigenvalue(start) > 5e-4
    assert np.trace(start).real == pytest.approx(1.0)
    cold = ml_estimate(product, f, 800, TIGHT)
    warm = ml_estimate(product, f, 800, TIGHT, start=start)
    assert trace_distance(cold.estimate, warm.estimate) < 1e-3


def test_result_csv_row(sic, rng):
    f = frequencies(simulate_clicks(sic, bell_state("psi_minus"), 300, rng))
    res = ml_estimate(sic, f, 300)
    row = res.csv_row()
    assert len(row) == len(ML_RESULT_COLUMNS)
    assert row[0] == "converged" and row[1] == res.iterations
    assert float(row[2]) == res.final_stop_metric
