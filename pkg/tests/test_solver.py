import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from compass_chain.errors import ConfigError, NumericalConsistencyError
from compass_chain.model import ModelParams, momentum_grid
from compass_chain.oracle import ed_ground_state, ed_spectrum, lowest_excitation
from compass_chain.solver import (
    EVEN,
    EVEN_PATTERNS,
    ODD,
    EVEN_LISTING_ORDER,
    ValidityWarning,
    block_hamiltonian,
    dispersion,
    energy_gap,
    finite_size_gap,
    ground_energy_closed_form,
    ground_state,
    hermitian_eigensystem,
    ising_ground_energy,
    spectra_n4,
    spectrum_analytic,
)

HALF = Fraction(1, 2)


def _entry(W, a, b):
    return W.matrix[EVEN_PATTERNS.index(a), EVEN_PATTERNS.index(b)]


def test_block_is_hermitian_and_parity_pure():
    p = ModelParams(8, alpha=0.7, h=0.4, beta=0.6)
    for q in momentum_grid(p).points:
        for parity, want in ((EVEN, 0), (ODD, 1)):
            W = block_hamiltonian(p, q, parity)
            assert np.abs(W.matrix - W.matrix.conj().T).max() < 1e-14
            assert all(sum(lab) % 2 == want for lab in W.basis_labels)


def test_even_block_entries_alpha1_h0():
    W = block_hamiltonian(ModelParams(2, alpha=1.0, h=0.0), HALF)
    vac, quad = EVEN_LISTING_ORDER[0], EVEN_LISTING_ORDER[7]
    # vacuum couples to the two mixed pairs with modulus |e^{-ip'} + 1|
    assert abs(_entry(W, vac, (1, 0, 0, 1))) == pytest.approx(math.sqrt(2))
    assert abs(_entry(W, vac, (0, 1, 1, 0))) == pytest.approx(math.sqrt(2))
    assert abs(_entry(W, (1, 0, 0, 1), quad)) == pytest.approx(math.sqrt(2))
    assert np.allclose(np.diag(W.matrix), 0.0)


def test_even_block_vacuum_row_signs():
    p, J, a = math.pi / 2, 1.0, 0.3
    W = block_hamiltonian(ModelParams(2, alpha=a, J=J), HALF)
    vac = (0, 0, 0, 0)
    assert _entry(W, vac, (1, 0, 0, 1)) == pytest.approx(J * np.exp(-1j * p) + J * a)
    assert _entry(W, vac, (0, 1, 1, 0)) == pytest.approx(-J * np.exp(1j * p) - J * a)


def test_even_block_diagonal_field_pattern():
    h = 0.9
    W = block_hamiltonian(ModelParams(2, alpha=0.4, h=h), HALF)
    d = {lab: W.matrix[k, k].real for k, lab in enumerate(EVEN_PATTERNS)}
    assert d[(0, 0, 0, 0)] == 0.0
    assert d[(1, 1, 1, 1)] == pytest.approx(-4 * h)
    for lab, val in d.items():
        if sum(lab) == 2:
            assert val == pytest.approx(-2 * h)
    # the trace is -16h, consistent with the eigenvalue list below
    assert np.trace(W.matrix).real == pytest.approx(-16 * h)


def test_lowest_eigenvalue_alpha1_h1():
    w, _ = hermitian_eigensystem(block_hamiltonian(ModelParams(2, alpha=1, h=1), HALF).matrix)
    assert w[0] == pytest.approx(-2 - 2 * math.sqrt(3), abs=1e-12)
    want = sorted([-2 + 2 * math.sqrt(3), -2 - 2 * math.sqrt(3),
                   -2 + 2 * math.sqrt(2), -2 - 2 * math.sqrt(2), -2, -2, -2, -2])
    assert np.allclose(w, want, atol=1e-12)


@pytest.mark.parametrize("alpha,h,beta", [(0.3, 0.2, 1.0), (1.0, 0.0, 1.0), (-1.7, 1.1, 1.0), (0.8, 0.5, 0.4)])
def test_block_eigenvalues_match_analytic_list(alpha, h, beta):
    p = ModelParams(10, alpha=alpha, h=h, beta=beta)
    for q in momentum_grid(p).points:
        w, _ = hermitian_eigensystem(block_hamiltonian(p, q).matrix)
        if beta != 1.0:
            assert np.all(np.isfinite(w))
            continue
        ex, ey = dispersion(p, math.pi * float(q))
        want = sorted([-2 * h + ex, -2 * h - ex, -2 * h + ey, -2 * h - ey] + [-2 * h] * 4)
        assert np.allclose(w, want, atol=1e-10)


def test_hermitian_eigensystem_identity_and_reconstruction():
    w, v = hermitian_eigensystem(np.eye(8))
    assert np.allclose(w, 1.0)
    m = block_hamiltonian(ModelParams(6, alpha=0.9, h=0.3), Fraction(1, 6)).matrix
    w, v = hermitian_eigensystem(m)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, m, atol=1e-10)
    assert np.allclose(v.conj().T @ v, np.eye(8), atol=1e-12)
    mod = np.abs(v)
    top = np.argmax(mod >= mod.max(axis=0) * (1 - 1e-12), axis=0)  # lowest index on ties
    piv = v[top, np.arange(8)]
    assert np.allclose(piv.imag, 0, atol=1e-14) and np.all(piv.real > 0)


def test_hermitian_eigensystem_rejects_non_hermitian():
    m = np.eye(8, dtype=complex)
    m[0, 1] = 1.0
    with pytest.raises(NumericalConsistencyError):
        hermitian_eigensystem(m)


def test_block_rejects_special_and_off_grid_momenta():
    p = ModelParams(4, bc="PBC")
    with pytest.raises(ConfigError):
        block_hamiltonian(p, Fraction(0))
    with pytest.raises(ConfigError):
        block_hamiltonian(ModelParams(4), Fraction(1, 2))
    with pytest.raises(ConfigError):
        block_hamiltonian(ModelParams(4), HALF, "both")


def test_spectrum_analytic_examples():
    s = spectrum_analytic(ModelParams(4, alpha=0.0, h=0.0), Fraction(1, 4))
    assert dict(s.branches)[1] == pytest.approx(2.0)
    s = spectrum_analytic(ModelParams(2, alpha=1.0, h=1.0), HALF)
    e = dict(s.branches)
    assert e[1] == pytest.approx(2 * math.sqrt(3))
    assert e[1] == -e[2] and e[3] == -e[4]
    ex, _ = dispersion(ModelParams(2, alpha=1.0), math.pi)
    assert ex == pytest.approx(0.0, abs=1e-7)


def test_spectrum_analytic_pbc_has_eight_branches():
    s = spectrum_analytic(ModelParams(6, alpha=0.5, h=0.3, bc="PBC"), Fraction(1, 3))
    assert len(s.branches) == 8 and s.parity == ODD


def test_spectra_n4_examples():
    w = spectra_n4(ModelParams(2, alpha=0.0, h=0.0))
    assert np.allclose(w[:4], [2, -2, 2, -2]) and np.allclose(w[4:8], 0)
    for a, h in [(0.3, 0.2), (1.4, 1.9), (-0.8, 0.0)]:
        w = spectra_n4(ModelParams(2, alpha=a, h=h))
        assert np.all(w[4:8] == 0.0)
    assert math.fsum(spectra_n4(ModelParams(2, alpha=0.77, h=0.0))) == pytest.approx(0.0, abs=1e-12)


def test_spectra_n4_matches_oracle_alpha1():
    p = ModelParams(2, alpha=1.0, h=0.8)
    assert np.allclose(np.sort(spectra_n4(p)), ed_spectrum(p), atol=1e-10)


def test_ground_energy_examples():
    for n in (2, 4, 10):
        assert ground_state(ModelParams(n, alpha=0.0, h=0.0)).energy == pytest.approx(-n)
    e = ground_state(ModelParams(4, alpha=1.0, h=0.0)).energy
    assert e == pytest.approx(-4 * (math.cos(math.pi / 8) + math.cos(3 * math.pi / 8)), abs=1e-12)
    big = ground_energy_closed_form(ModelParams(20000, alpha=1.0))
    assert big / 20000 == pytest.approx(-4 / math.pi, abs=1e-6)


@pytest.mark.parametrize("alpha,h", [(0.3, 0.7), (1.0, 0.0), (-1.2, 0.4), (2.0, 1.5)])
def test_block_sum_matches_closed_form(alpha, h):
    p = ModelParams(12, alpha=alpha, h=h)
    gs = ground_state(p)
    assert gs.energy == pytest.approx(ground_energy_closed_form(p), rel=1e-10)
    assert np.allclose(np.linalg.norm(gs.vectors, axis=1), 1.0)
    assert set(gs.per_block) == set(momentum_grid(p).points)


def test_even_sector_oracle_matches_abc_for_small_chains():
    for n in (2, 4, 6):
        for a, h in [(0.4, 0.3), (1.0, 0.9), (-1.5, 0.2)]:
            p = ModelParams(n, alpha=a, h=h)
            assert ed_ground_state(p, "even").energy == pytest.approx(ground_state(p).energy, abs=1e-10)


def test_pbc_matches_odd_sector_oracle():
    for a in (-1.3, 0.2, 1.0, 1.8):
        p = ModelParams(4, alpha=a, h=0.8, bc="PBC")
        assert ground_state(p).energy == pytest.approx(ed_ground_state(p, "odd").energy, abs=1e-10)


def test_energy_even_in_alpha():
    for n, h in ((8, 0.3), (20, 1.1)):
        for a in (0.2, 0.9, 1.6):
            e1 = ground_state(ModelParams(n, alpha=a, h=h)).energy
            e2 = ground_state(ModelParams(n, alpha=-a, h=h)).energy
            assert e1 == pytest.approx(e2, abs=1e-10)


def test_abc_pbc_energy_per_site_converges():
    diffs = []
    for n in (8, 16, 32, 64):
        a = ground_state(ModelParams(n, alpha=0.6, h=0.5)).energy
        b = ground_state(ModelParams(n, alpha=0.6, h=0.5, bc="PBC")).energy
        diffs.append(abs(a - b) / (2 * n))
    assert all(x > y for x, y in zip(diffs, diffs[1:]))


def test_gap_examples():
    assert energy_gap(ModelParams(2, alpha=1.0, h=0.0)) == 0.0
    assert energy_gap(ModelParams(2, alpha=-1.0, h=0.0)) == 0.0
    assert energy_gap(ModelParams(2, alpha=0.0, h=1.0)) == pytest.approx(2 * (math.sqrt(2) - 1))
    # both +/- branches: min(2 sqrt 5 - 4, 2)
    assert energy_gap(ModelParams(2, alpha=1.0, h=1.0)) == pytest.approx(2 * math.sqrt(5) - 4)
    for h in (0.05, 0.5, 2.0):
        assert energy_gap(ModelParams(2, alpha=0.7, h=h)) > 0


def test_gap_is_min_of_quasiparticle_difference():
    ps = np.linspace(0, math.pi, 10001)
    for a, h in [(1.0, 1.0), (0.4, 0.3), (-1.3, 0.8), (2.0, 0.1)]:
        p = ModelParams(2, alpha=a, h=h)
        ex, ey = dispersion(p, ps)
        assert energy_gap(p) == pytest.approx((ex - ey).min(), abs=1e-8)


def test_finite_size_gap_matches_oracle():
    for a, h in [(1.0, 0.5), (0.3, 0.2), (1.5, 1.0)]:
        p = ModelParams(4, alpha=a, h=h)
        assert finite_size_gap(p) == pytest.approx(lowest_excitation(p, "even"), abs=1e-10)


def test_degenerate_blocks_are_flagged_and_lifted():
    gs = ground_state(ModelParams(8, alpha=1.0, h=0.0))
    assert gs.any_degenerate
    assert ground_state(ModelParams(8, alpha=1.0, h=0.0), lift="beta").any_degenerate
    assert not ground_state(ModelParams(8, alpha=1.0, h=0.2)).any_degenerate
    with pytest.raises(ConfigError):
        ground_state(ModelParams(8, alpha=1.0, h=0.0), lift="nope")


def test_field_lift_is_the_small_field_limit():
    a = ground_state(ModelParams(8, alpha=0.8, h=0.0)).vectors
    b = ground_state(ModelParams(8, alpha=0.8, h=1e-7)).vectors
    ov = np.abs(np.einsum("ka,ka->k", a.conj(), b))
    assert np.allclose(ov, 1.0, atol=1e-10)


def test_ising_energies():
    for n in (2, 6):
        assert ising_ground_energy(ModelParams(n, h=0.0)) == pytest.approx(-2 * n)
    e = ising_ground_energy(ModelParams(20000, h=2.0))
    assert e / 40000 == pytest.approx(-4 / math.pi, abs=1e-6)
    p = ModelParams(4, h=1.0, bc="PBC")
    assert ising_ground_energy(p) == pytest.approx(ed_ground_state(p, "odd", "ising").energy, abs=1e-10)
    q = ModelParams(4, h=1.3)
    assert ising_ground_energy(q) == pytest.approx(ed_ground_state(q, "even", "ising").energy, abs=1e-10)


def test_ising_pbc_validity_warning():
    with pytest.warns(ValidityWarning):
        ising_ground_energy(ModelParams(4, h=2.5, bc="PBC"))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ising_ground_energy(ModelParams(4, h=1.0, bc="PBC"))
