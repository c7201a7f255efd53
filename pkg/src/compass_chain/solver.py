"""Momentum-block exact solution of the transverse-field compass chain.

After the Jordan-Wigner map and a Fourier transform with antiperiodic fermion
boundary conditions, the Hamiltonian splits into commuting blocks ``W(p')`` acting
on the four modes ``a1(p'), a2(p'), a1(-p'), a2(-p')``.  Each block conserves
fermion parity, so it is an 8x8 matrix per parity sector.

Fock states of the four modes are written ``(a1+(p'))^n0 (a2+(p'))^n1
(a1+(-p'))^n2 (a2+(-p'))^n3 |0>`` and ordered lexicographically in
``(n0, n1, n2, n3)``.  Index ``k`` of the label tuple is mode ``k`` of that list.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
import itertools
import math
import warnings

import numpy as np

from .errors import ConfigError, NumericalConsistencyError
from .model import Boundary, ModelParams, momentum_grid

EVEN, ODD = "even", "odd"

MODE_NAMES = ("a1(p')", "a2(p')", "a1(-p')", "a2(-p')")
_PATTERNS = list(itertools.product((0, 1), repeat=4))
EVEN_PATTERNS = tuple(p for p in _PATTERNS if sum(p) % 2 == 0)
ODD_PATTERNS = tuple(p for p in _PATTERNS if sum(p) % 2 == 1)

# even basis as occupation patterns in the conventional order: vacuum, the six
# pairs, then the fully occupied state
EVEN_LISTING_ORDER = (
    (0, 0, 0, 0),
    (1, 0, 1, 0),
    (1, 0, 0, 1),
    (0, 1, 1, 0),
    (0, 1, 0, 1),
    (1, 1, 0, 0),
    (0, 0, 1, 1),
    (1, 1, 1, 1),
)

HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-13


def _mode(s: int, sign: int) -> int:
    return (s - 1) + (0 if sign > 0 else 2)


@lru_cache(maxsize=None)
def fock_annihilators() -> tuple[np.ndarray, ...]:
    """Real 16x16 annihilation matrices for the four block modes."""
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    z = np.diag([1.0, -1.0])
    ops = []
    for k in range(4):
        m = np.ones((1, 1))
        for j in range(4):
            m = np.kron(m, z if j < k else (a if j == k else np.eye(2)))
        ops.append(m)
    return tuple(ops)


def _sector_indices(parity: str) -> list[int]:
    pats = EVEN_PATTERNS if parity == EVEN else ODD_PATTERNS
    return [int("".join(map(str, p)), 2) for p in pats]


@lru_cache(maxsize=None)
def _term_operators(parity: str):
    """Sector-restricted operators whose momentum-dependent sum gives W(p').

    Returns a dict of name -> (8,8) complex matrix.  ``W = sum_k coef_k O_k`` with
    the coefficients from :func:`_coefficients`.
    """
    A = fock_annihilators()
    C = tuple(x.T for x in A)
    idx = _sector_indices(parity)

    def restrict(m):
        return m[np.ix_(idx, idx)].astype(complex)

    ops = {}
    for sign in (+1, -1):
        k1, k2 = _mode(1, sign), _mode(2, sign)
        m1, m2 = _mode(1, -sign), _mode(2, -sign)
        # even (inter-cell) bond, momentum p = sign*p'
        ops[("x_pair", sign)] = restrict(C[k2] @ C[m1])
        ops[("x_hop", sign)] = restrict(C[k2] @ A[k1])
        ops[("x_hop_h", sign)] = restrict(A[k2] @ C[k1])
        ops[("x_anni", sign)] = restrict(A[k2] @ A[m1])
        # odd (intra-cell) bond
        ops[("y_pair", sign)] = restrict(C[k1] @ C[m2])
        ops[("y_hop", sign)] = restrict(C[k1] @ A[k2])
        ops[("y_hop_h", sign)] = restrict(A[k1] @ C[k2])
        ops[("y_anni", sign)] = restrict(A[k1] @ A[m2])
    ops["number"] = restrict(sum(C[k] @ A[k] for k in range(4)))
    return ops


def _coefficients(p, alpha, beta, h, J):
    """Coefficients matching the keys of :func:`_term_operators` (p may be an array)."""
    p = np.asarray(p, dtype=float)
    co = {}
    for sign in (+1, -1):
        q = sign * p
        em, ep = np.exp(-1j * q), np.exp(1j * q)
        co[("x_pair", sign)] = -J * em
        co[("x_hop", sign)] = -J * em
        co[("x_hop_h", sign)] = J * ep
        co[("x_anni", sign)] = J * ep
        co[("y_pair", sign)] = -J * alpha * (1.0 - 2.0 * beta) + 0 * q
        co[("y_hop", sign)] = -J * alpha + 0 * q
        co[("y_hop_h", sign)] = J * alpha + 0 * q
        co[("y_anni", sign)] = -J * alpha * (2.0 * beta - 1.0) + 0 * q
    co["number"] = -h + 0 * p
    return co


def _assemble(p, alpha, beta, h, J, parity=EVEN) -> np.ndarray:
    ops = _term_operators(parity)
    co = _coefficients(p, alpha, beta, h, J)
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape + (8, 8), dtype=complex)
    for key, op in ops.items():
        out += np.multiply.outer(co[key], op)
    return out


def _field_derivative(parity=EVEN) -> np.ndarray:
    return -_term_operators(parity)["number"]


def _beta_derivative(p, alpha, J, parity=EVEN) -> np.ndarray:
    ops = _term_operators(parity)
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape + (8, 8), dtype=complex)
    for sign in (+1, -1):
        out += 2.0 * J * alpha * ops[("y_pair", sign)]
        out -= 2.0 * J * alpha * ops[("y_anni", sign)]
    return out


@dataclass(frozen=True)
class BlockHamiltonian:
    momentum: float
    parity: str
    matrix: np.ndarray
    basis_labels: tuple[tuple[int, int, int, int], ...]


@dataclass(frozen=True)
class Spectrum:
    momentum: float
    branches: tuple[tuple[int, float], ...]
    parity: str

    @property
    def energies(self) -> np.ndarray:
        return np.array([e for _, e in self.branches])


@dataclass
class GroundState:
    """Ground state of the chain as a product over momentum blocks.

    ``vectors[k]`` is the normalized, phase-fixed even-sector ground vector of the
    block at ``momenta[k]``.  ``degenerate[k]`` marks blocks whose lowest level was
    degenerate and had to be resolved by perturbation theory.
    """

    params: ModelParams
    momenta: np.ndarray
    vectors: np.ndarray
    block_energies: np.ndarray
    energy: float
    degenerate: np.ndarray
    special_energy: float | None = None
    special_branch: int | None = None
    lift: str = "field"
    meta: dict = field(default_factory=dict)

    @property
    def per_block(self) -> dict[Fraction, np.ndarray]:
        grid = momentum_grid(self.params)
        return dict(zip(grid.points, self.vectors))

    @property
    def any_degenerate(self) -> bool:
        return bool(np.any(self.degenerate))


def _momentum_value(params: ModelParams, p, allow_special=False) -> float:
    """Accept a Fraction (multiple of pi) or a float in radians; check the grid."""
    grid = momentum_grid(params)
    if isinstance(p, Fraction):
        frac = p
    else:
        frac = Fraction(float(p) / math.pi).limit_denominator(4 * params.n_cells)
        if abs(math.pi * float(frac) - float(p)) > 1e-9:
            raise ConfigError(f"momentum {p} is not on the {params.bc.value} grid")
    if frac in grid.special_points:
        if allow_special:
            return math.pi * float(frac)
        raise ConfigError(
            f"momentum {frac}*pi is a special point; its levels come from spectra_n4"
        )
    if frac not in grid.points:
        raise ConfigError(f"momentum {frac}*pi is not on the {params.bc.value} grid")
    return math.pi * float(frac)


def block_hamiltonian(params: ModelParams, p, parity: str = EVEN) -> BlockHamiltonian:
    if parity not in (EVEN, ODD):
        raise ConfigError(f"parity must be 'even' or 'odd', got {parity!r}")
    pv = _momentum_value(params, p)
    m = _assemble(pv, params.alpha, params.beta, params.h, params.J, parity)
    labels = EVEN_PATTERNS if parity == EVEN else ODD_PATTERNS
    return BlockHamiltonian(pv, parity, m, labels)


def _phase_fix(v: np.ndarray) -> np.ndarray:
    """Make the largest-modulus component real positive (lowest index on ties).

    Works on (..., n, k) arrays of column eigenvectors.
    """
    mod = np.abs(v)
    top = mod.max(axis=-2, keepdims=True)
    first = np.argmax(mod >= top * (1 - 1e-12), axis=-2)[..., None, :]
    pivot = np.take_along_axis(v, first, axis=-2)
    return v * (np.abs(pivot) / pivot)


def hermitian_eigensystem(m) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and phase-fixed orthonormal eigenvectors (columns)."""
    m = np.asarray(m)
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - np.conj(np.swapaxes(m, -1, -2))).max(initial=0.0) > HERMITIAN_TOL * scale:
        raise NumericalConsistencyError("matrix is not Hermitian")
    w, v = np.linalg.eigh(m)
    return w, _phase_fix(v)


def _select_ground(W, w, v, perturbation, tol):
    """Ground vector of one block; degenerate ground levels are resolved by
    first- then second-order perturbation theory in ``perturbation``."""
    cluster = np.flatnonzero(w - w[0] < tol)
    if cluster.size == 1:
        return v[:, 0], False
    P = v[:, cluster]
    Vp = perturbation
    m1 = P.conj().T @ Vp @ P
    m1 = 0.5 * (m1 + m1.conj().T)
    a1, u1 = np.linalg.eigh(m1)
    keep = np.flatnonzero(a1 - a1[0] < tol)
    P = P @ u1[:, keep]
    if keep.size > 1:
        rest = np.setdiff1d(np.arange(w.size), cluster)
        Q = v[:, rest]
        denom = w[0] - w[rest]
        coupling = Q.conj().T @ Vp @ P
        m2 = (coupling.conj().T / denom) @ coupling
        m2 = 0.5 * (m2 + m2.conj().T)
        a2, u2 = np.linalg.eigh(m2)
        P = P @ u2[:, :1]
    g = _phase_fix(P[:, :1])[:, 0]
    return g / np.linalg.norm(g), True


def _abc_ground_blocks(params: ModelParams, lift: str = "field"):
    grid = momentum_grid(params)
    ps = np.array(grid.values())
    Ws = _assemble(ps, params.alpha, params.beta, params.h, params.J, EVEN)
    w, v = hermitian_eigensystem(Ws)
    vecs = v[:, :, 0].copy()
    degenerate = np.zeros(ps.size, dtype=bool)
    scale = 1.0 + params.J * (2.0 + abs(params.alpha)) + abs(params.h)
    tol = DEGENERACY_TOL * scale
    suspects = np.flatnonzero(w[:, 1] - w[:, 0] < tol)
    if suspects.size:
        if lift == "field":
            pert = np.broadcast_to(_field_derivative(EVEN), Ws.shape)
        elif lift == "beta":
            # beta -> 1 from below: the parameter decreases
            pert = -_beta_derivative(ps, params.alpha, params.J)
        else:
            raise ConfigError(f"unknown degeneracy lift {lift!r}")
        for k in suspects:
            vecs[k], degenerate[k] = _select_ground(Ws[k], w[k], v[k], pert[k], tol)
    return ps, vecs, w[:, 0], degenerate


def _radicands(params: ModelParams, p):
    a, J = params.alpha, params.J
    y = 1.0 + 2.0 * a * np.cos(p) + a * a
    x = (params.h / J) ** 2 + y
    return x, np.maximum(y, 0.0)


def _require_compass(params: ModelParams, what: str):
    if not params.is_compass:
        raise ConfigError(f"{what} is only available for beta = 1")


def dispersion(params: ModelParams, p) -> tuple[np.ndarray, np.ndarray]:
    """Positive branches 2J sqrt(X), 2J sqrt(Y) at arbitrary momenta (no grid check)."""
    _require_compass(params, "dispersion")
    x, y = _radicands(params, np.asarray(p, dtype=float))
    return 2 * params.J * np.sqrt(x), 2 * params.J * np.sqrt(y)


def spectrum_analytic(params: ModelParams, p) -> Spectrum:
    _require_compass(params, "spectrum_analytic")
    pv = _momentum_value(params, p)
    ex, ey = dispersion(params, pv)
    ex, ey = float(ex), float(ey)
    if params.bc is Boundary.ABC:
        br = ((1, ex), (2, -ex), (3, ey), (4, -ey))
        return Spectrum(pv, br, EVEN)
    hx, hy = ex / 2, ey / 2
    vals = (-hx - hy, -hx - hy, -hx + hy, -hx + hy, hx - hy, hx - hy, hx + hy, hx + hy)
    return Spectrum(pv, tuple(enumerate(vals, start=1)), ODD)


def spectra_n4(params: ModelParams) -> np.ndarray:
    """The 16 levels of the four-site ring, ABC part (1-8) then PBC part (9-16)."""
    _require_compass(params, "spectra_n4")
    a, J, t = params.alpha, params.J, params.h / params.J
    r1 = 2 * J * math.sqrt(t * t + 1 + a * a)
    r2 = 2 * J * math.sqrt(1 + a * a)
    rm = J * math.sqrt(t * t + 1 - 2 * a + a * a)
    rp = J * math.sqrt(t * t + 1 + 2 * a + a * a)
    w = [r1, -r1, r2, -r2, 0.0, 0.0, 0.0, 0.0]
    w += [J * a + J + rm, J * a + J - rm]
    w += [J * a - J + rp, J * a - J - rp]
    w += [-J * a - J + rm, -J * a - J - rm]
    w += [-J * a + J + rp, -J * a + J - rp]
    return np.array(w)


def ground_state(params: ModelParams, lift: str = "field") -> GroundState:
    """Ground state and energy.

    ABC: product of even-sector block ground vectors, ``E = sum lambda_min + h N'``.
    PBC: energy from the non-special momenta plus the lowest four-site PBC level
    standing in for the p' = 0, pi modes; vectors cover non-special momenta only.

    ``lift`` picks the limit used when a block ground level is degenerate (h = 0):
    ``"field"`` takes h -> 0+, ``"beta"`` takes beta -> 1-.
    """
    if params.bc is Boundary.ABC:
        ps, vecs, lam, deg = _abc_ground_blocks(params, lift)
        energy = float(math.fsum(lam)) + params.h * params.n_cells
        return GroundState(params, ps, vecs, lam, energy, deg, lift=lift)

    _require_compass(params, "PBC ground_state")
    grid = momentum_grid(params)
    ps = np.array(grid.values())
    if ps.size:
        Ws = _assemble(ps, params.alpha, params.beta, params.h, params.J, EVEN)
        w, v = hermitian_eigensystem(Ws)
        vecs, lam = v[:, :, 0], w[:, 0]
        deg = w[:, 1] - w[:, 0] < DEGENERACY_TOL
        ex, _ = dispersion(params, ps)
        regular = -float(math.fsum(ex))
    else:
        vecs = np.zeros((0, 8), complex)
        lam = np.zeros(0)
        deg = np.zeros(0, bool)
        regular = 0.0
    omega = spectra_n4(params)[8:]
    k = int(np.argmin(omega))
    energy = regular + float(omega[k])
    return GroundState(params, ps, vecs, lam, energy, deg, float(omega[k]), 9 + k, lift=lift)


def ground_energy_closed_form(params: ModelParams) -> float:
    """ABC ground energy as a direct sum over the momentum grid (beta = 1)."""
    _require_compass(params, "closed-form energy")
    if params.bc is not Boundary.ABC:
        return ground_state(params).energy
    ex, _ = dispersion(params, np.array(momentum_grid(params).values()))
    return -float(math.fsum(ex))


def energy_gap(params: ModelParams) -> float:
    """Thermodynamic-limit even-sector gap, min over the two zone-boundary branches."""
    _require_compass(params, "energy_gap")
    J, a, t = params.J, params.alpha, params.h / params.J
    vals = [
        2 * J * math.sqrt(t * t + 1 + 2 * s * a + a * a) - 2 * J * abs(a + s)
        for s in (+1, -1)
    ]
    return max(0.0, min(vals))


def finite_size_gap(params: ModelParams) -> float:
    """Lowest even-parity excitation of the finite ABC chain (numerical blocks)."""
    if params.bc is not Boundary.ABC:
        raise ConfigError("finite_size_gap is defined for ABC")
    ps = np.array(momentum_grid(params).values())
    Ws = _assemble(ps, params.alpha, params.beta, params.h, params.J, EVEN)
    w = np.linalg.eigvalsh(Ws)
    wo = np.linalg.eigvalsh(_assemble(ps, params.alpha, params.beta, params.h, params.J, ODD))
    in_block = (w[:, 1] - w[:, 0]).min()
    odd_cost = np.sort(wo[:, 0] - w[:, 0])
    pair = odd_cost[0] + odd_cost[1] if odd_cost.size > 1 else np.inf
    return float(min(in_block, pair))


class ValidityWarning(UserWarning):
    pass


def ising_ground_energy(params: ModelParams) -> float:
    """Ground energy of the transverse Ising ring (both bonds J, field +h/2 sigma^z).

    ``alpha`` and ``beta`` are ignored.  The +/- in the radicand is summed over.
    """
    J, h, n = params.J, params.h, params.n_cells
    if params.bc is Boundary.ABC:
        p = np.array([j * math.pi / n for j in range(1, n, 2)])
    else:
        p = np.array([2 * j * math.pi / n for j in range(1, n // 2)])
    c = np.cos(p / 2)
    terms = np.concatenate(
        [np.sqrt(h * h + 4 * J * J + 4 * J * h * c), np.sqrt(h * h + 4 * J * J - 4 * J * h * c)]
    )
    e = -float(math.fsum(terms))
    if params.bc is Boundary.PBC:
        if not (0 < h < 2 * J):
            warnings.warn(
                f"PBC Ising special-point term assumes 0 < h < 2J (h={h}, J={J})",
                ValidityWarning,
                stacklevel=2,
            )
        e += -2 * J - math.sqrt(4 * J * J + h * h)
    return e
