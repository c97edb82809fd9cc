import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kreinstring import (CantorComponent, DensitySegment, DomainError, InputError,
                         MassDistribution, cantor_chain, homogeneous, single_atom, two_segment)


def test_eval_mass_homogeneous():
    assert homogeneous().eval_mass(0.5, "right") == pytest.approx(0.5, abs=1e-15)


def test_eval_mass_jump_sides():
    M = single_atom()
    assert M.eval_mass(1.0, "left") == 0.0
    assert M.eval_mass(1.0, "right") == 1.0


def test_eval_mass_cantor_midpoint():
    assert cantor_chain(2).eval_mass(0.5, "right") == pytest.approx(0.5, abs=1e-15)


def test_eval_mass_outside_interval():
    with pytest.raises(DomainError):
        homogeneous().eval_mass(1.5)
    with pytest.raises(DomainError):
        homogeneous().eval_mass(-0.1)


def test_atom_at_origin_rejected():
    with pytest.raises(DomainError):
        MassDistribution(1.0, (), ((0.0, 1.0),))


def test_atom_at_right_end_allowed():
    M = MassDistribution(1.0, (DensitySegment(0, 1),), ((1.0, 2.0),))
    assert M.total_mass == 3.0


def test_overlapping_segments_rejected():
    with pytest.raises(DomainError):
        MassDistribution(1.0, (DensitySegment(0, 0.6), DensitySegment(0.5, 1)))


def test_negative_density_rejected():
    with pytest.raises(DomainError):
        DensitySegment(0, 1, (1.0, -3.0))


def test_degree_limit():
    with pytest.raises(DomainError):
        DensitySegment(0, 1, (1, 0, 0, 0, 1))


def test_cantor_mass_exact_and_count():
    c = CantorComponent(0.0, 1.0, 0.7, 5)
    atoms = c.atoms()
    assert len(atoms) == 32
    assert math.fsum(m for _, m in atoms) == 0.7


def test_cantor_ratio_bounds():
    with pytest.raises(DomainError):
        CantorComponent(0.0, 1.0, 1.0, 2, ratio=0.5)


def test_discretize_homogeneous_one_and_two():
    one = homogeneous().discretize(1)
    assert one.atoms == ((0.5, 1.0),)
    two = homogeneous().discretize(2)
    assert two.atoms == ((0.25, 0.5), (0.75, 0.5))


def test_discretize_two_segment():
    atoms = two_segment().discretize(2).atoms
    np.testing.assert_allclose([x for x, _ in atoms], [1 / 8, 3 / 8, 5 / 8, 7 / 8], atol=1e-15)
    np.testing.assert_allclose([m for _, m in atoms], [0.25, 0.25, 1.0, 1.0], atol=1e-15)


def test_discretize_passes_atoms_through():
    M = MassDistribution(2.0, (DensitySegment(0, 1),), ((1.5, 0.3),))
    D = M.discretize(4)
    assert (1.5, 0.3) in D.atoms
    assert D.total_mass == pytest.approx(1.3, abs=1e-15)


def test_discretize_rejects_bad_count():
    with pytest.raises(DomainError):
        homogeneous().discretize(0)


def _first_moment(M):
    moments = [s.moment_between(s.x0, s.x1) for s in M.segments]
    return math.fsum(moments + [x * m for x, m in M.atoms])


def _second_moment(M):
    moments = [s.moment_between(s.x0, s.x1, 2) for s in M.segments]
    return math.fsum(moments + [x * x * m for x, m in M.atoms])


def test_discretize_moments_linear_density():
    M = MassDistribution(1.0, (DensitySegment(0, 1, (1.0, 2.0)),))
    # centroid placement reproduces the first moment exactly
    for n in (1, 3, 10):
        assert _first_moment(M.discretize(n)) == pytest.approx(_first_moment(M), rel=1e-13)
    errs = [abs(_second_moment(M.discretize(n)) - _second_moment(M)) for n in (10, 20, 40)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    for r in ratios:
        assert 3.5 < r < 4.5


densities = st.lists(st.floats(0.1, 5.0), min_size=1, max_size=3)


@settings(max_examples=40, deadline=None)
@given(coeffs=densities, n=st.integers(1, 50), x_split=st.floats(0.1, 0.9))
def test_discretize_total_mass_property(coeffs, n, x_split):
    M = MassDistribution(1.0, (DensitySegment(0, x_split, coeffs), DensitySegment(x_split, 1.0, (2.0,))),
                         ((0.95, 0.1),))
    D = M.discretize(n)
    assert abs(D.total_mass - M.total_mass) <= 4 * np.finfo(float).eps * M.total_mass


@settings(max_examples=40, deadline=None)
@given(xs=st.lists(st.floats(0.0, 1.0), min_size=2, max_size=30))
def test_eval_mass_monotone(xs):
    M = MassDistribution(1.0, (DensitySegment(0, 0.5, (1.0, 1.0)),), ((0.5, 0.2), (0.8, 0.1)),
                         (CantorComponent(0.6, 0.9, 0.3, 3),))
    xs = sorted(xs)
    vals = []
    for x in xs:
        left, right = M.eval_mass(x, "left"), M.eval_mass(x, "right")
        assert right >= left
        vals += [left, right]
    assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


def test_growth_at_origin_and_tail():
    assert homogeneous().growth_at_origin()
    assert not single_atom().growth_at_origin()
    assert single_atom().massless_right_tail() == 1.0
    assert homogeneous().massless_right_tail() == 0.0


def test_sqrt_density_integral():
    assert two_segment().sqrt_density_integral() == pytest.approx(1.5, rel=1e-14)
    lin = MassDistribution(1.0, (DensitySegment(0, 1, (0.0, 1.0)),))
    assert lin.sqrt_density_integral() == pytest.approx(2 / 3, rel=1e-10)


def test_json_round_trip(tmp_path):
    M = MassDistribution(2.0, (DensitySegment(0, 1, (1, 0.5)),), ((1.5, 0.3),),
                         (CantorComponent(1.0, 2.0, 0.5, 3),))
    path = tmp_path / "m.json"
    path.write_text(json.dumps(M.to_dict()))
    assert MassDistribution.load(path) == M


def test_json_unknown_key_named(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"length": 1, "segments": [{"x0": 0, "x1": 1, "pol": [1]}]}))
    with pytest.raises(InputError, match="pol"):
        MassDistribution.load(path)


def test_json_invalid_values(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"length": 1, "point_masses": [{"x": 0, "m": 1}]}))
    with pytest.raises(InputError):
        MassDistribution.load(path)
    path.write_text("{not json")
    with pytest.raises(InputError):
        MassDistribution.load(path)
