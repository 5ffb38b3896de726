import numpy as np
import pytest
import scipy.io
from hypothesis import given, settings
from hypothesis import strategies as st

from stochac import __version__
from stochac.assembly import assemble_mass
from stochac.config import RunConfig, config_hash, parse, serialize
from stochac.errors import ConfigError
from stochac.io import read_csv, write_csv, write_levelset, write_matrix_market, write_vtk
from stochac.mesh import generate_uniform
from stochac.observables import LevelSetPolyline


def test_defaults_and_comments():
    cfg = parse("# comment\n\nmesh.n = 16   # trailing\nscheme.delta = 0.5\n")
    assert cfg.n == 16 and cfg.delta == 0.5
    assert cfg.epsilon == RunConfig().epsilon


def test_round_trip_defaults():
    cfg = RunConfig()
    assert parse(serialize(cfg)) == cfg


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 300),
    eps=st.floats(0.05, 0.5),
    delta=st.floats(0.0, 10.0),
    k=st.integers(1, 25),
    steps=st.integers(1, 50),
    seed=st.integers(0, 2**64 - 1),
    M=st.integers(1, 1000),
    kind=st.sampled_from(["test1", "test2", "circle", "constant"]),
    value=st.floats(-2, 2),
    formats=st.sampled_from([("csv",), ("vtk",), ("csv", "vtk")]),
)
def test_round_trip_property(n, eps, delta, k, steps, seed, M, kind, value, formats):
    tau = k * 1e-4
    scheme = "fully_implicit" if tau <= eps**2 else "convex_splitting"
    cfg = RunConfig(n=n, epsilon=eps, delta=delta, tau=tau, nonlinearity=scheme, master_seed=seed, M=M,
                    T=steps * tau, dt_micro=1e-4, initial=kind, initial_value=value, formats=formats)
    text = serialize(cfg)
    again = parse(text)
    assert again == cfg
    assert serialize(again) == text
    assert config_hash(again) == config_hash(cfg)


def test_hash_ignores_execution_keys():
    cfg = RunConfig()
    assert config_hash(cfg.replace(workers=4, out_dir="elsewhere")) == config_hash(cfg)
    assert config_hash(cfg.replace(master_seed=1)) != config_hash(cfg)


def test_ladder_and_optional_values():
    cfg = parse("ensemble.T = 0.04\nensemble.ladder = 0.008, 0.004,0.002\nensemble.tau_ref = auto\nscheme.stabilization = 0.7\n")
    assert cfg.ladder == (0.008, 0.004, 0.002)
    assert cfg.tau_ref is None and cfg.stabilization == 0.7
    e = cfg.ensemble(with_ladder=True)
    assert e.tau_ref == pytest.approx(0.0005)


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("mesh.n = 4\nmesh.nn = 5\n", 2, "unknown key"),
        ("mesh.n = 4\nmesh.n = 5\n", 2, "duplicate"),
        ("\n\nmesh.n = four\n", 3, "mesh.n"),
        ("scheme.epsilon = 0.1\nscheme.nonlinearity = fully_implicit\nscheme.tau = 0.02\n", 3, "tau"),
        ("scheme.epsilon = -0.1\n", 1, "epsilon"),
        ("ensemble.M = 0\n", 1, "ensemble.M"),
        ("noise.master_seed = -3\n", 1, "master_seed"),
        ("just words\n", 1, "key = value"),
        ("ensemble.T = 0.04\nensemble.ladder = 0.004, 0.008\n", 2, "ladder"),
        ("output.formats = csv, png\n", 1, "png"),
        ("initial.kind = expression\ninitial.expression = x1 + y\n", 2, "unknown name"),
    ],
)
def test_diagnostics_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse(text)
    assert info.value.line == line
    assert f"line {line}:" in str(info.value)
    assert fragment in str(info.value)


def test_unknown_key_lists_valid_keys():
    with pytest.raises(ConfigError) as info:
        parse("bogus = 1\n")
    assert "mesh.n" in str(info.value) and "scheme.epsilon" in str(info.value)


def test_overrides():
    cfg = parse("mesh.n = 4\n", {"mesh.n": "8", "noise.master_seed": "3"})
    assert cfg.n == 8 and cfg.master_seed == 3
    with pytest.raises(ConfigError):
        parse("", {"nope": "1"})


def test_csv_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ("a", "b"), [(1, 0.1), (2, None)], meta="x=1")
    text = p.read_text()
    assert text.startswith("# x=1\n")
    header, data = read_csv(p)
    assert header == ["a", "b"]
    assert data[0, 1] == 0.1 and np.isnan(data[1, 1])


def test_levelset_csv(tmp_path):
    lines = [LevelSetPolyline(np.array([[0.0, 1.0], [2.0, 3.0]]), False),
             LevelSetPolyline(np.array([[4.0, 5.0]]), True)]
    p = tmp_path / "ls.csv"
    write_levelset(p, lines, meta="m")
    header, data = read_csv(p)
    assert header == ["polyline_id", "point_index", "x", "y"]
    np.testing.assert_array_equal(data, [[0, 0, 0, 1], [0, 1, 2, 3], [1, 0, 4, 5]])


def test_vtk_layout(tmp_path):
    m = generate_uniform(2)
    p = tmp_path / "f.vtk"
    write_vtk(p, m, {"u": np.arange(9.0)}, meta="hash=abc")
    lines = p.read_text().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[1] == "hash=abc"
    assert lines[2] == "ASCII" and lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert lines[4] == "POINTS 9 double"
    i = lines.index("CELLS 8 32")
    assert lines[i + 1].startswith("3 ")
    assert "CELL_TYPES 8" in lines and "POINT_DATA 9" in lines
    assert lines[-1] == "8.0"


def test_matrix_market(tmp_path):
    M = assemble_mass(generate_uniform(3))
    p = tmp_path / "M.mtx"
    write_matrix_market(p, M, meta="stochac hash")
    head = p.read_text().splitlines()
    assert head[0] == "%%MatrixMarket matrix coordinate real general"
    assert "stochac hash" in head[1]
    back = scipy.io.mmread(str(p))
    assert abs(back - M).max() <= 1e-16
    assert __version__
