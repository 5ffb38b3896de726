import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochac.errors import InvalidArgument
from stochac.noise import (
    BrownianPath,
    generate_path,
    macro_increments,
    refine,
    refinement_factor,
    standard_normals,
    steps_per,
)


def test_determinism():
    a = generate_path(0.1, 1e-4, 7, 3)
    b = generate_path(0.1, 1e-4, 7, 3)
    assert a == b
    assert np.array_equal(a.increments, b.increments)
    assert a.increments.shape == (1000,)
    assert a.T == pytest.approx(0.1)
    assert a != generate_path(0.1, 1e-4, 7, 4)
    assert a != generate_path(0.1, 1e-4, 8, 3)


def test_increment_mean_and_variance():
    dt = 1e-4
    p = generate_path(10.0, dt, 2024, 0)
    inc = p.increments
    assert inc.size == 100_000
    assert abs(inc.mean()) <= 4 * np.sqrt(dt / inc.size)
    assert abs(inc.var() / dt - 1) <= 0.05


def test_stream_correlation():
    n = 100_000
    a = standard_normals(11, 0, n)
    b = standard_normals(11, 1, n)
    c = standard_normals(12, 0, n)
    for x, y in ((a, b), (a, c)):
        assert abs(np.corrcoef(x, y)[0, 1]) <= 4 / np.sqrt(n)


def test_substreams_disjoint():
    a = standard_normals(1, 2, 1000, stream=0)
    b = standard_normals(1, 2, 1000, stream=4)
    assert abs(np.corrcoef(a, b)[0, 1]) <= 4 / np.sqrt(1000)
    np.testing.assert_array_equal(standard_normals(1, 2, 10), a[:10])


def test_identity_aggregation():
    p = generate_path(0.01, 1e-4, 0, 0)
    np.testing.assert_array_equal(macro_increments(p, 1e-4).dW, p.increments)


@pytest.mark.parametrize("tau", [0.001, 0.002, 0.004])
def test_coarsening_bitwise(tau):
    p = generate_path(0.064, 1e-4, 5, 9)
    fine = macro_increments(p, tau).dW
    coarse = macro_increments(p, 2 * tau).dW
    assert np.array_equal(coarse, fine[0::2] + fine[1::2])


def test_sum_is_W_T():
    p = generate_path(0.08, 1e-4, 3, 1)
    W = [macro_increments(p, t).dW.sum() for t in (0.001, 0.002, 0.004, 0.008)]
    assert np.ptp(W) <= 1e-15
    assert W[0] == pytest.approx(p.increments.sum(), abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63), st.integers(0, 2**20), st.sampled_from([1, 3, 5, 6, 10, 20]), st.integers(1, 4))
def test_coarsening_identity_property(seed, sid, k, blocks):
    p = generate_path(1e-4 * 2 * k * blocks, 1e-4, seed, sid)
    fine = macro_increments(p, 1e-4 * k).dW
    coarse = macro_increments(p, 2e-4 * k).dW
    assert np.array_equal(coarse, fine[0::2] + fine[1::2])


def test_errors():
    with pytest.raises(InvalidArgument):
        generate_path(0.00015, 1e-4)
    with pytest.raises(InvalidArgument):
        generate_path(-1.0, 1e-4)
    with pytest.raises(InvalidArgument):
        steps_per(0.00025, 1e-4)
    p = generate_path(0.003, 1e-4)
    with pytest.raises(InvalidArgument):
        macro_increments(p, 0.002)
    with pytest.raises(InvalidArgument):
        standard_normals(-1, 0, 3)


def test_binary_round_trip(tmp_path):
    p = generate_path(0.01, 1e-4, 2**63 + 5, 17)
    f = tmp_path / "w.bin"
    p.save(f)
    raw = f.read_bytes()
    assert raw[:4] == b"SACW"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert len(raw) == 4 + 4 + 8 + 8 * 3 + 8 * 100
    q = BrownianPath.load(f)
    assert q == p
    f.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(InvalidArgument):
        BrownianPath.load(f)
    f.write_bytes(raw[:-8])
    with pytest.raises(InvalidArgument):
        BrownianPath.load(f)


def test_refinement_keeps_path():
    p = generate_path(0.02, 1e-4, 1, 2)
    r = refine(p, 4)
    assert r.dt_micro == pytest.approx(2.5e-5)
    sums = r.increments.reshape(-1, 4).sum(axis=1)
    np.testing.assert_allclose(sums, p.increments, atol=1e-17)
    assert refine(p, 1) is p
    # refined pieces have the right variance
    big = refine(generate_path(2.0, 1e-4, 3, 0), 4).increments
    assert abs(big.var() / 2.5e-5 - 1) <= 0.05


def test_refinement_factor():
    assert refinement_factor([0.008, 0.004, 0.002, 0.001], 1e-4) == 1
    assert refinement_factor([0.001, 0.00025], 1e-4) == 2
    with pytest.raises(InvalidArgument):
        refinement_factor([1e-4 / 97], 1e-4, max_factor=64)
