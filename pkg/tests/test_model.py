from fractions import Fraction
import math

import pytest

from compass_chain.errors import ConfigError
from compass_chain.model import Boundary, ModelParams, momentum_grid, site_index


def test_abc_grid_four_cells():
    g = momentum_grid(ModelParams(4))
    assert g.points == (Fraction(1, 4), Fraction(3, 4))
    assert g.special_points == ()
    assert g.values() == pytest.approx([math.pi / 4, 3 * math.pi / 4])


def test_pbc_grid_four_cells():
    g = momentum_grid(ModelParams(4, bc="PBC"))
    assert g.points == (Fraction(1, 2),)
    assert g.special_points == (Fraction(0), Fraction(1))


def test_smallest_grid():
    assert momentum_grid(ModelParams(2)).points == (Fraction(1, 2),)


@pytest.mark.parametrize("n", [2, 4, 6, 10, 64, 256])
def test_grid_counts(n):
    abc = momentum_grid(ModelParams(n))
    pbc = momentum_grid(ModelParams(n, bc=Boundary.PBC))
    assert len(abc) + len(abc.special_points) == n // 2
    assert len(pbc) + len(pbc.special_points) == n // 2 + 1
    for g in (abc, pbc):
        assert all(0 < q < 1 for q in g.points)
        assert list(g.points) == sorted(g.points)


@pytest.mark.parametrize("n", [0, 1, 3, -2, 2.5])
def test_rejects_bad_cell_count(n):
    with pytest.raises(ConfigError):
        ModelParams(n)


def test_rejects_nonpositive_coupling_and_nan():
    with pytest.raises(ConfigError):
        ModelParams(4, J=0.0)
    with pytest.raises(ConfigError):
        ModelParams(4, h=float("nan"))


def test_site_count_and_flags():
    p = ModelParams(6, beta=0.5, bc="ABC")
    assert p.n_sites == 12
    assert not p.is_compass
    assert p.with_(beta=1.0).is_compass
    assert p.bc is Boundary.ABC


def test_site_index():
    assert site_index(1, 1) == 0
    assert site_index(2, 1) == 1
    assert site_index(1, 3) == 4
