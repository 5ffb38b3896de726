import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from stochac.errors import EvaluationError, InvalidArgument
from stochac.initial import (
    ellipse_signed_distance,
    init_circle,
    init_test1,
    init_test2,
    make_initial,
    dumbbell_profile,
)

EPS = 0.1


def test_test1_examples():
    assert ellipse_signed_distance(0.3, 0.0) == pytest.approx(0.1, abs=1e-12)
    assert ellipse_signed_distance(0.0, 0.0) == pytest.approx(-0.1, abs=1e-12)
    assert init_test1(0.3, 0.0, EPS) == pytest.approx(np.tanh(0.1 / (np.sqrt(2) * EPS)), abs=1e-12)
    assert init_test1(0.0, 0.0, EPS) == pytest.approx(np.tanh(-0.1 / (np.sqrt(2) * EPS)), abs=1e-12)
    th = np.linspace(0, 2 * np.pi, 50)
    assert np.abs(init_test1(0.2 * np.cos(th), 0.1 * np.sin(th), EPS)).max() <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_distance_matches_sampling_oracle(x1, x2):
    d = float(ellipse_signed_distance(x1, x2))
    ref = oracles.ellipse_distance_sampled(x1, x2)
    assert d == pytest.approx(ref, abs=2e-7)


def test_distance_on_major_axis_inside_evolute():
    # closest point is off-axis here: x = a^2 px / (a^2 - b^2)
    for px in (0.0, 0.05, 0.1, 0.149):
        for py in (0.0, 2e-16, 1e-12, 1e-9, 1e-7, 1e-5):
            d = float(ellipse_signed_distance(px, py))
            assert d == pytest.approx(oracles.ellipse_distance_sampled(px, py), abs=2e-7)


def test_circle_sign():
    assert init_circle(0.0, 0.0, 0.01) < -0.99
    assert init_circle(0.4, 0.4, 0.01) > 0.99
    assert init_circle(0.25, 0.0, 0.01) == pytest.approx(0.0, abs=1e-14)


def test_test2_first_branch_example():
    # scaled point (0.5, 0) satisfies branch 1
    u = dumbbell_profile(np.array(0.5), np.array(0.0), EPS)
    k = 1 / (np.sqrt(2) * EPS)
    assert u == pytest.approx(np.tanh(-k * np.hypot(0.36, 0.15)), abs=1e-15)
    assert init_test2(0.5 / 3, 0.0, EPS) == pytest.approx(u, abs=1e-15)


def test_test2_matches_transcription_oracle(rng):
    y = rng.uniform(-1.5, 1.5, (100_000, 2))
    ours = dumbbell_profile(y[:, 0], y[:, 1], EPS)
    ref = np.array([oracles.test2_scalar(a, b, EPS) for a, b in y], dtype=float)
    assert np.abs(ours - ref).max() <= 1e-12
    assert np.abs(ours).max() <= 1.0


def test_test2_values_bounded_on_grid():
    x = np.linspace(-0.5, 0.5, 301)
    X1, X2 = np.meshgrid(x, x)
    u = init_test2(X1, X2, 0.01)
    assert np.all(np.abs(u) <= 1 + 1e-6)


def test_test2_verbatim_is_guarded():
    # the printed table leaves gaps; evaluation reports the offending point
    y = np.array([-0.286]), np.array([-0.904])
    assert oracles.test2_scalar(y[0][0], y[1][0], EPS, corrected=False) is None
    with pytest.raises(EvaluationError) as info:
        dumbbell_profile(*y, EPS, variant="verbatim")
    assert info.value.point == pytest.approx((-0.286, -0.904))


def test_test2_verbatim_matches_oracle_where_defined(rng):
    y = rng.uniform(-1.5, 1.5, (20_000, 2))
    ref = np.array([oracles.test2_scalar(a, b, EPS, corrected=False) for a, b in y], dtype=object)
    ok = np.array([r is not None for r in ref])
    ours = dumbbell_profile(y[ok, 0], y[ok, 1], EPS, variant="verbatim")
    assert np.abs(ours - ref[ok].astype(float)).max() <= 1e-12


def test_psi5_domain_scan():
    # the fifth auxiliary curve of the printed table needs 1 - 0.2451 y^2 >= 0,
    # which holds on the whole scaled domain |y| <= 1.5
    y2 = np.linspace(-1.5, 1.5, 10001)
    assert np.all(1 - 0.2451 * y2**2 >= 0)


def test_make_initial():
    assert make_initial("constant", EPS, value=-1.0)(np.zeros(3), np.zeros(3)).tolist() == [-1.0] * 3
    f = make_initial("expression", EPS, expression="x1 + 2*x2 + eps")
    assert f(np.array([1.0]), np.array([1.0]))[0] == pytest.approx(3.1)
    with pytest.raises(InvalidArgument):
        make_initial("nope", EPS)
    with pytest.raises(InvalidArgument):
        make_initial("expression", EPS, expression="x1.__class__")
    with pytest.raises(InvalidArgument):
        make_initial("expression", EPS, expression="open('f')")
