import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compass_chain.correlations import ground_majorana
from compass_chain.errors import ConfigError, NumericalConsistencyError
from compass_chain.model import ModelParams
from compass_chain.observables import (
    NONZERO_COEFFICIENTS,
    PAULI,
    block_entropy,
    concurrence,
    entropy_curve,
    fidelity,
    fidelity_min,
    fidelity_susceptibility,
    ising_magnetization,
    ising_susceptibility_at,
    magnetization,
    pauli_coefficients,
    susceptibility,
    susceptibility_at,
    two_site_density_matrix,
)
from compass_chain.oracle import ed_ground_state, ed_observable
from compass_chain.solver import ground_state


def _mcm(n, alpha, h):
    return ground_majorana(ground_state(ModelParams(n, alpha=alpha, h=h)))


def _rotation(rng):
    q, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    return q


# fidelity -------------------------------------------------------------------

def test_zero_step_fidelity_is_one():
    f = fidelity(ModelParams(8, alpha=0.4, h=0.3), "h", 0.0)
    assert f.value == 1.0 and f.log_value == 0.0


def test_fidelity_matches_oracle_overlap():
    p = ModelParams(4, alpha=0.5, h=0.2)
    f = fidelity(p, "alpha", 1e-4)
    a = ed_ground_state(p, "even")
    b = ed_ground_state(p.with_(alpha=0.5 + 1e-4), "even")
    assert f.value == pytest.approx(ed_observable(a, "fidelity-overlap", other=b), abs=1e-8)
    assert ed_observable(a, "fidelity-overlap", other=a) == pytest.approx(1.0)


def test_fidelity_bounds_and_flags():
    f = fidelity(ModelParams(20, alpha=1.0, h=0.0), "alpha", 1e-3)
    assert 0 < f.value <= 1 and f.degenerate
    assert not fidelity(ModelParams(20, alpha=0.6, h=0.3), "h").degenerate
    with pytest.raises(ConfigError):
        fidelity(ModelParams(4, bc="PBC"), "h")
    with pytest.raises(ConfigError):
        fidelity(ModelParams(4), "beta")


def test_fidelity_min_takes_smaller_direction():
    p = ModelParams(10, alpha=0.8, h=0.2)
    fm = fidelity_min(p)
    assert fm.value == min(fidelity(p, "h").value, fidelity(p, "alpha").value)


def test_one_minus_fidelity_is_quadratic():
    p = ModelParams(20, alpha=0.5, h=0.6)
    r = [(1 - fidelity(p, "h", d).value) / d**2 for d in (1e-3, 5e-4)]
    r.append(-fidelity(p, "h", 1e-4).log_value / 1e-8)
    assert max(r) / min(r) < 1.05


def test_fs_dimer_line_smooth_and_finite():
    chis = [fidelity_susceptibility(ModelParams(20, alpha=0.0, h=h), "alpha") for h in (0.9, 1.0, 1.1)]
    assert all(math.isfinite(c) and c > 0 for c in chis)
    assert abs(chis[1] - 0.5 * (chis[0] + chis[2])) < 0.1 * chis[1]


def test_fs_peaks_at_zero_field():
    hs = np.linspace(-0.2, 0.2, 21)
    chi = [fidelity_susceptibility(ModelParams(40, alpha=1.0, h=h)) for h in hs]
    k = int(np.argmax(chi))
    assert hs[k] == pytest.approx(0.0, abs=1e-12)
    assert all(c >= 0 for c in chi)


def test_richardson_agrees_with_plain_step_off_criticality():
    p = ModelParams(20, alpha=0.5, h=0.6)
    a = fidelity_susceptibility(p, "h", 1e-4)
    b = fidelity_susceptibility(p, "h", richardson=True)
    assert a == pytest.approx(b, rel=1e-3)


def test_fidelity_ignores_block_phases():
    p = ModelParams(10, alpha=0.7, h=0.4)
    a = ground_state(p)
    b = ground_state(p.with_(h=0.4 + 1e-3))
    rng = np.random.default_rng(1)
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, a.vectors.shape[0]))[:, None]
    o1 = np.abs(np.einsum("ka,ka->k", a.vectors.conj(), b.vectors)).prod()
    o2 = np.abs(np.einsum("ka,ka->k", (phases * a.vectors).conj(), b.vectors)).prod()
    assert o1 == pytest.approx(o2, abs=1e-14)
    assert fidelity(p, "h", 1e-3).value == pytest.approx(o1, abs=1e-12)


# two-site density matrix and concurrence -----------------------------------

@pytest.mark.parametrize("pair", [(0, 1), (1, 2), (2, 7)])
def test_density_matrix_invariants(pair):
    mcm = _mcm(8, 0.9, 0.3)
    rho = two_site_density_matrix(mcm, pair)
    r = rho.rho
    assert np.allclose(r, r.conj().T, atol=1e-12)
    assert np.trace(r).real == pytest.approx(1.0)
    assert rho.eigenvalues().min() > -1e-9
    assert rho.coefficients[(0, 0)] == 1.0
    allc = pauli_coefficients(mcm, pair)
    for k, v in allc.items():
        if k not in NONZERO_COEFFICIENTS:
            assert abs(v) < 1e-9
        assert isinstance(v, float)


def test_density_matrix_matches_oracle():
    p = ModelParams(6, alpha=1.0, h=0.4)
    ed = ed_ground_state(p, "even")
    mcm = ground_majorana(ground_state(p))
    for pair in ((0, 1), (1, 2)):
        got = two_site_density_matrix(mcm, pair).rho
        assert np.abs(got - ed_observable(ed, "two-site-rdm", sites=pair)).max() < 1e-8


def test_density_matrix_polarized_and_dimer():
    r = two_site_density_matrix(_mcm(6, 1.0, 1e4), (0, 1)).rho
    up = np.zeros(4)
    up[0] = 1
    assert np.allclose(r, np.outer(up, up), atol=1e-4)
    rho = two_site_density_matrix(_mcm(6, 0.0, 0.0), (0, 1))
    assert np.allclose(rho.rho, np.eye(4) / 4, atol=1e-12)
    assert concurrence(rho) == 0.0


def test_density_matrix_rejects_bad_pairs():
    with pytest.raises(ConfigError):
        two_site_density_matrix(_mcm(4, 0.5, 0.1), (3, 1))


def test_concurrence_bell_and_product():
    bell = np.array([1, 0, 0, -1]) / math.sqrt(2)
    assert concurrence(np.outer(bell, bell.conj())) == pytest.approx(1.0)
    prod = np.kron([1, 0], [0.6, 0.8])
    assert concurrence(np.outer(prod, prod)) == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(NumericalConsistencyError):
        concurrence(np.diag([1.5, -0.5, 0, 0]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_concurrence_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    rho = two_site_density_matrix(_mcm(6, 1.1, 0.2), (0, 1)).rho
    u = np.kron(_rotation(rng), _rotation(rng))
    assert concurrence(u @ rho @ u.conj().T) == pytest.approx(concurrence(rho), abs=1e-8)


def test_concurrence_matches_oracle():
    p = ModelParams(6, alpha=1.0, h=0.3)
    ed = ed_ground_state(p, "even")
    got = concurrence(two_site_density_matrix(ground_majorana(ground_state(p)), (0, 1)))
    assert got == pytest.approx(concurrence(ed_observable(ed, "two-site-rdm", sites=(0, 1))), abs=1e-8)


# entropy --------------------------------------------------------------------

def test_entropy_trivial_cases():
    mcm = _mcm(6, 1.0, 0.3)
    assert block_entropy(mcm, 0) == 0.0
    big = _mcm(16, 1.0, 1e3)
    assert max(block_entropy(big, L) for L in range(33)) < 1e-2
    with pytest.raises(ConfigError):
        block_entropy(mcm, 13)


def test_entropy_complement_symmetry():
    mcm = _mcm(20, 0.8, 0.2)
    n = 40
    for L in (1, 5, 13, 19):
        assert block_entropy(mcm, L) == pytest.approx(block_entropy(mcm, n - L), abs=1e-8)


def test_entropy_matches_oracle():
    p = ModelParams(6, alpha=1.0, h=0.3)
    ed = ed_ground_state(p, "even")
    mcm = ground_majorana(ground_state(p))
    for L in range(0, 13):
        assert block_entropy(mcm, L) == pytest.approx(ed_observable(ed, "block-entropy", L=L), abs=1e-6)


def test_entropy_curve_shape():
    gs = ground_state(ModelParams(8, alpha=1.0, h=0.2))
    curve = entropy_curve(gs, range(1, 9))
    assert list(curve.block_sizes) == list(range(1, 9))
    assert np.all(curve.entropies >= 0)


def test_dimer_entropy_counts_cut_bonds():
    mcm = _mcm(6, 0.0, 0.0)
    # L = 1 cuts the bond to the neighboring cell's first site... block 1..L
    assert block_entropy(mcm, 2) == pytest.approx(2.0, abs=1e-12)
    assert block_entropy(mcm, 3) == pytest.approx(1.0, abs=1e-12)


# magnetization and susceptibility ------------------------------------------

def test_magnetization_limits():
    assert magnetization(ground_state(ModelParams(16, alpha=0.8, h=0.0))) == pytest.approx(0.0, abs=1e-12)
    assert magnetization(ground_state(ModelParams(16, alpha=0.8, h=1e4))) == pytest.approx(2.0, abs=1e-6)
    with pytest.raises(ConfigError):
        magnetization(ground_state(ModelParams(4, bc="PBC")))


def test_magnetization_matches_oracle_and_hellmann_feynman():
    p = ModelParams(6, alpha=0.9, h=0.35)
    ed = ed_ground_state(p, "even")
    m = magnetization(ground_state(p))
    assert m == pytest.approx(ed_observable(ed, "magnetization"), abs=1e-10)
    s = 1e-5
    dE = (ground_state(p.with_(h=p.h + s)).energy - ground_state(p.with_(h=p.h - s)).energy) / (2 * s)
    assert m * p.n_cells == pytest.approx(-2 * dE, abs=1e-6)


def test_susceptibility_properties():
    p = ModelParams(16, alpha=1.0)
    hs = np.array([-0.6, -0.3, 0.3, 0.6])
    chi = susceptibility_at(p, hs)
    assert chi[0] == pytest.approx(chi[3], rel=1e-6) and chi[1] == pytest.approx(chi[2], rel=1e-6)
    assert susceptibility_at(p, [500.0])[0] < 1e-5
    curve = susceptibility(p, np.linspace(0, 1, 6))
    assert curve.shape == (6,)


def test_susceptibility_matches_oracle():
    p = ModelParams(6, alpha=1.0)
    h, s = 0.4, 1e-3
    got = susceptibility(p, [h - s, h, h + s])[1]
    ms = [ed_observable(ed_ground_state(p.with_(h=x), "even"), "magnetization") for x in (h - s, h + s)]
    assert got == pytest.approx((ms[1] - ms[0]) / (2 * s), abs=1e-5)


def test_susceptibility_grid_checks():
    p = ModelParams(4)
    with pytest.raises(ConfigError):
        susceptibility(p, [0.1, 0.2])
    with pytest.raises(ConfigError):
        susceptibility(p, [0.1, 0.3, 0.2])


def test_ising_magnetization_matches_oracle():
    for h in (0.5, 2.0, 3.1):
        p = ModelParams(4, h=h)
        ed = ed_ground_state(p, "even", "ising")
        assert ising_magnetization(p) == pytest.approx(ed_observable(ed, "magnetization"), abs=1e-10)
    assert np.all(np.isfinite(ising_susceptibility_at(ModelParams(8), [1.0, 2.0])))
    with pytest.raises(ConfigError):
        ising_magnetization(ModelParams(4, bc="PBC"))
