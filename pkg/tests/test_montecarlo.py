import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochac.assembly import assemble_system, l2_project
from stochac.errors import InvalidArgument, UndefinedOrderError
from stochac.initial import init_test1
from stochac.mesh import generate_uniform
from stochac.montecarlo import (
    EnsembleConfig,
    EnsembleError,
    Welford,
    convergence_orders,
    noise_term_samples,
    run_ensemble,
    strong_error,
)
from stochac.stepper import SchemeConfig, SolverConfig, StepWorkspace, run_trajectory
from stochac.vector_field import VectorField


def test_orders_from_published_errors():
    o = convergence_orders([0.09895, 0.06557, 0.04472, 0.03136])
    assert o[0] == pytest.approx(0.5937, abs=5e-5)
    assert o[1] == pytest.approx(0.5521, abs=5e-5)
    assert o[2] == pytest.approx(0.5120, abs=5e-5)
    assert convergence_orders([0.3, 0.3]) == [0.0]
    assert convergence_orders([0.4, 0.1], [0.01, 0.0025])[0] == pytest.approx(1.0)


def test_orders_undefined():
    with pytest.raises(UndefinedOrderError):
        convergence_orders([0.1, 0.0])
    with pytest.raises(UndefinedOrderError):
        convergence_orders([-0.1, 0.2])
    with pytest.raises(InvalidArgument):
        convergence_orders([0.1])


def _welford(xs):
    w = Welford(xs.shape[1:])
    for x in xs:
        w.add(x)
    return w


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.integers(0, 30), st.integers(0, 30))
def test_welford_merge(seed, n1, n2, n3):
    r = np.random.default_rng(seed)
    xs = r.standard_normal((n1 + n2 + n3, 4)) * 3 + 1
    a, b, c = _welford(xs[:n1]), _welford(xs[n1:n1 + n2]), _welford(xs[n1 + n2:])
    full = _welford(xs)
    for merged in (a.merge(b).merge(c), a.merge(b.merge(c)), c.merge(a).merge(b)):
        assert merged.count == full.count
        np.testing.assert_allclose(merged.mean, full.mean, atol=1e-12)
        np.testing.assert_allclose(merged.m2, full.m2, atol=1e-12 * max(1.0, np.abs(full.m2).max()))
    if full.count > 1:
        np.testing.assert_allclose(full.variance, xs.var(axis=0, ddof=1), rtol=1e-12)


def _scheme(delta=1.0, tau=0.002, **kw):
    return SchemeConfig(0.1, delta, tau, **kw)


def test_config_validation():
    with pytest.raises(InvalidArgument):
        EnsembleConfig(_scheme(), M=0)
    with pytest.raises(InvalidArgument):
        EnsembleConfig(_scheme(), T=0.009)
    with pytest.raises(InvalidArgument):
        EnsembleConfig(_scheme(), T=0.016, ladder=(0.004, 0.008))
    with pytest.raises(InvalidArgument):
        EnsembleConfig(_scheme(), T=0.016, ladder=(0.008, 0.003))
    with pytest.raises(InvalidArgument):
        EnsembleConfig(_scheme(), T=0.016, ladder=(0.008, 0.004), tau_ref=0.003)
    cfg = EnsembleConfig(_scheme(), T=0.016, ladder=(0.008, 0.004))
    assert cfg.tau_ref == pytest.approx(0.001)


def test_single_sample_without_noise_is_deterministic_run():
    n = 8
    cfg = EnsembleConfig(_scheme(delta=0.0), M=1, T=0.02, n=n)
    stats = run_ensemble(cfg)
    m = generate_uniform(n)
    s = assemble_system(m, VectorField())
    u0 = l2_project(m, lambda x, y: init_test1(x, y, 0.1), s.M)
    tr = run_trajectory(u0, None, StepWorkspace(m, cfg.scheme, system=s), 0.02)
    np.testing.assert_array_equal(stats.mean_field, tr.states)
    assert stats.energy.shape == (1, len(tr.times))


def test_worker_count_does_not_change_results():
    cfg = EnsembleConfig(_scheme(), M=5, T=0.008, n=8, ladder=(0.004, 0.002), master_seed=77)
    a = run_ensemble(cfg, workers=1)
    b = run_ensemble(cfg, workers=2)
    assert np.abs(a.mean_field - b.mean_field).max() <= 1e-12
    assert np.abs(a.field.variance - b.field.variance).max() <= 1e-12
    for tau in cfg.ladder:
        assert a.errors[tau].mean == pytest.approx(b.errors[tau].mean, abs=1e-12)


def test_self_comparison_has_zero_error():
    cfg = EnsembleConfig(_scheme(), M=2, T=0.008, n=8, ladder=(0.002, 0.001), tau_ref=0.001)
    rows = strong_error(cfg)
    assert rows[-1].error == 0.0
    assert rows[0].error > 0
    assert rows[0].order is None and rows[1].order is None


def test_tau_ref_off_the_micro_grid_uses_bridge():
    cfg = EnsembleConfig(_scheme(), M=2, T=0.004, n=6, ladder=(0.002, 0.001), tau_ref=0.00025)
    rows = strong_error(cfg)
    assert all(r.error > 0 for r in rows)


def test_first_order_without_noise():
    cfg = EnsembleConfig(_scheme(delta=0.0, tau=0.004), M=1, T=0.016, n=16,
                         ladder=(0.004, 0.002, 0.001), tau_ref=0.000125)
    rows = strong_error(cfg)
    for r in rows[1:]:
        assert 0.8 <= r.order <= 1.3
    assert rows[0].error / rows[1].error == pytest.approx(2.0, rel=0.25)


def test_failures_abort_the_ensemble():
    cfg = EnsembleConfig(_scheme(solver=SolverConfig(max_iter=1)), M=3, T=0.004, n=6)
    with pytest.raises(EnsembleError) as info:
        run_ensemble(cfg)
    assert sorted(info.value.failures) == [0, 1, 2]


def test_noise_term_unbiased():
    m = generate_uniform(8)
    s = assemble_system(m, VectorField())
    u = l2_project(m, lambda x, y: init_test1(x, y, 0.1), s.M)
    draws = noise_term_samples(s.C2, u, 1.0, 0.002, 10_000, master_seed=5)
    mean = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    active = se > 0
    assert active.any()
    assert np.all(np.abs(mean[active]) <= 4 * se[active])
    assert not np.any(mean[~active])
