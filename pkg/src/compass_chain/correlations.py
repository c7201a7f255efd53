"""Real-space fermion correlators, Majorana covariance, Pfaffians and spin strings.

Majorana convention: for flat site ``j`` (0-based) ``c[2j] = a_j^+ + a_j`` and
``c[2j+1] = i (a_j^+ - a_j)``; ``<c_k c_l> = delta_kl + i Gamma_kl``.

With the Jordan-Wigner string ``prod_{k<j} (-Z_k)``:

    X_j = prod_{k<j}(-i c[2k] c[2k+1]) c[2j]
    Y_j = -prod_{k<j}(-i c[2k] c[2k+1]) c[2j+1]
    Z_j = i c[2j] c[2j+1]
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NumericalConsistencyError
from .model import Boundary
from .solver import GroundState, _term_operators, fock_annihilators, _sector_indices, EVEN

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class FermionCorrelators:
    normal: np.ndarray  # f[m, n] = <a_m^+ a_n>
    anomalous: np.ndarray  # g[m, n] = <a_m^+ a_n^+>

    @property
    def n_sites(self) -> int:
        return self.normal.shape[0]


@dataclass(frozen=True)
class MajoranaCorrelationMatrix:
    gamma: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.gamma.shape[0] // 2


@lru_cache(maxsize=None)
def _quadratic_ops():
    """Even-sector matrices of a_i^+ a_j and a_i^+ a_j^+ for the four block modes."""
    A = fock_annihilators()
    idx = _sector_indices(EVEN)
    hop = np.empty((4, 4, 8, 8))
    pair = np.empty((4, 4, 8, 8))
    for i in range(4):
        for j in range(4):
            hop[i, j] = (A[i].T @ A[j])[np.ix_(idx, idx)]
            pair[i, j] = (A[i].T @ A[j].T)[np.ix_(idx, idx)]
    return hop, pair


def block_expectations(gs: GroundState) -> tuple[np.ndarray, np.ndarray]:
    """Per-block <a_i^+ a_j> and <a_i^+ a_j^+> over the four modes, shape (K, 4, 4)."""
    hop, pair = _quadratic_ops()
    v = gs.vectors
    F = np.einsum("ka,ijab,kb->kij", v.conj(), hop, v)
    G = np.einsum("ka,ijab,kb->kij", v.conj(), pair, v)
    return F, G


def displacement_tables(gs: GroundState):
    """f_st(d), g_st(d) for cell displacement d = n - m in [-(N'-1), N'-1].

    Returns ``(d, f, g)`` with ``f[d_index, s, t]``.
    """
    if gs.params.bc is not Boundary.ABC:
        raise ConfigError("real-space correlators are built for ABC only")
    n = gs.params.n_cells
    F, G = block_expectations(gs)
    p = gs.momenta
    d = np.arange(-(n - 1), n)
    ph = np.exp(1j * np.outer(d, p))  # (D, K) for +p'
    f = np.zeros((d.size, 2, 2), complex)
    g = np.zeros((d.size, 2, 2), complex)
    for s in range(2):
        for t in range(2):
            # modes: s -> s (p'), s + 2 (-p')
            f[:, s, t] = ph @ F[:, s, t] + ph.conj() @ F[:, s + 2, t + 2]
            g[:, s, t] = ph @ G[:, s, t + 2] + ph.conj() @ G[:, s + 2, t]
    return d, f / n, g / n


def real_space_correlators(gs: GroundState) -> FermionCorrelators:
    d, f, g = displacement_tables(gs)
    n = gs.params.n_cells
    cell = np.repeat(np.arange(n), 2)
    site = np.tile(np.arange(2), n)
    di = cell[:, None] - cell[None, :] + (n - 1)
    fm = f[di, site[:, None], site[None, :]]
    gm = g[di, site[:, None], site[None, :]]
    return FermionCorrelators(fm, gm)


def majorana_matrix(fc: FermionCorrelators) -> MajoranaCorrelationMatrix:
    f, g = fc.normal, fc.anomalous
    n = f.shape[0]
    eye = np.eye(n)
    # <b b^T> for b = (a^+, a)
    B = np.block([[g, f], [eye - f.T, g.conj().T]])
    U = np.zeros((2 * n, 2 * n), complex)
    j = np.arange(n)
    U[2 * j, j] = 1.0
    U[2 * j, n + j] = 1.0
    U[2 * j + 1, j] = 1j
    U[2 * j + 1, n + j] = -1j
    M = U @ B @ U.T
    gamma = (M - np.eye(2 * n)) / 1j
    resid = np.abs(gamma.imag).max(initial=0.0)
    if resid > IMAG_TOL:
        raise NumericalConsistencyError(
            f"Majorana covariance has imaginary residue {resid:.3e}"
        )
    gamma = gamma.real
    return MajoranaCorrelationMatrix(0.5 * (gamma - gamma.T))


def pfaffian(m) -> float | complex:
    """Pfaffian of an antisymmetric matrix by Parlett-Reid elimination with pivoting."""
    a = np.array(m, dtype=complex if np.iscomplexobj(m) else float)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("pfaffian needs a square matrix")
    if n % 2:
        raise ValueError("pfaffian of an odd-dimensional matrix")
    if n == 0:
        return a.dtype.type(1.0)
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a + a.T).max() > 1e-10 * scale:
        raise NumericalConsistencyError("pfaffian input is not antisymmetric")
    result = a.dtype.type(1.0)
    for k in range(0, n - 1, 2):
        piv = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if piv != k + 1:
            a[[k + 1, piv]] = a[[piv, k + 1]]
            a[:, [k + 1, piv]] = a[:, [piv, k + 1]]
            result = -result
        if a[k, k + 1] == 0:
            return a.dtype.type(0.0)
        result *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2:] / a[k, k + 1]
            col = a[k + 2:, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return result


def pauli_to_majorana(ops: dict[int, str]) -> tuple[complex, tuple[int, ...]]:
    """Rewrite a product of Pauli operators (site -> 'X'/'Y'/'Z', ascending sites
    multiplied left to right) as ``coeff * c[i1] c[i2] ...`` with sorted indices."""
    coeff = 1.0 + 0j
    factors: list[int] = []
    for j in sorted(ops):
        kind = ops[j].upper()
        if kind == "I":
            continue
        if kind == "Z":
            coeff *= 1j
            factors += [2 * j, 2 * j + 1]
            continue
        if kind not in ("X", "Y"):
            raise ConfigError(f"unknown Pauli operator {kind!r}")
        for k in range(j):
            coeff *= -1j
            factors += [2 * k, 2 * k + 1]
        if kind == "X":
            factors.append(2 * j)
        else:
            coeff *= -1
            factors.append(2 * j + 1)
    # bring to sorted order, counting transpositions, then cancel c^2 = 1
    sign = 1
    arr = list(factors)
    for i in range(1, len(arr)):
        x = arr[i]
        k = i - 1
        while k >= 0 and arr[k] > x:
            arr[k + 1] = arr[k]
            k -= 1
            sign = -sign
        arr[k + 1] = x
    reduced: list[int] = []
    for x in arr:
        if reduced and reduced[-1] == x:
            reduced.pop()
        else:
            reduced.append(x)
    return coeff * sign, tuple(reduced)


def majorana_expectation(gamma: np.ndarray, indices) -> complex:
    """<c[i1] ... c[i2k]> for strictly ascending indices via Wick's theorem."""
    idx = np.asarray(indices, dtype=int)
    if idx.size == 0:
        return 1.0 + 0j
    if idx.size % 2:
        return 0.0 + 0j
    sub = gamma[np.ix_(idx, idx)]
    k = idx.size // 2
    return (1j ** k) * pfaffian(sub)


def pauli_expectation(mcm: MajoranaCorrelationMatrix, ops: dict[int, str]) -> float:
    coeff, idx = pauli_to_majorana(ops)
    val = coeff * majorana_expectation(mcm.gamma, idx)
    if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
        raise NumericalConsistencyError(f"spin expectation not real: {val}")
    return float(val.real)


def ground_majorana(gs: GroundState) -> MajoranaCorrelationMatrix:
    return majorana_matrix(real_space_correlators(gs))


def string_correlator_xx(gs_or_gamma, r: int) -> float:
    """<X_{2,1} X_{1,2+r}>: flat sites 2 and 2r+3 (1-based)."""
    mcm = gs_or_gamma if isinstance(gs_or_gamma, MajoranaCorrelationMatrix) else ground_majorana(gs_or_gamma)
    n_cells = mcm.n_sites // 2
    if not 0 <= r <= n_cells // 2:
        raise ConfigError(f"distance r must lie in [0, {n_cells // 2}], got {r}")
    m, n = 1, 2 * r + 2  # 0-based sites
    # X_m X_n is the consecutive Majorana run c[2m+1] ... c[2n]
    sub = mcm.gamma[2 * m + 1:2 * n + 1, 2 * m + 1:2 * n + 1]
    return float(np.real(pfaffian(sub)))


def two_site_correlators(gs_or_gamma, pair: tuple[int, int]) -> dict[str, float]:
    """XX, YY, ZZ and the two Z expectations for 0-based flat sites ``pair``."""
    mcm = gs_or_gamma if isinstance(gs_or_gamma, MajoranaCorrelationMatrix) else ground_majorana(gs_or_gamma)
    i, j = pair
    n = mcm.n_sites
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise ConfigError(f"invalid site pair {pair} for {n} sites")
    out = {}
    for name, op in (("xx", "X"), ("yy", "Y"), ("zz", "Z")):
        out[name] = pauli_expectation(mcm, {i: op, j: op})
    out["z_i"] = -float(mcm.gamma[2 * i, 2 * i + 1])
    out["z_j"] = -float(mcm.gamma[2 * j, 2 * j + 1])
    return out


def majorana_bond_correlator(gs_or_gamma, r: int) -> float:
    """Gamma between the end Majoranas of the X_2 ... X_{2r+3} string, no string factor.

    A fermionic two-point diagnostic; the spin correlator is string_correlator_xx.
    """
    mcm = gs_or_gamma if isinstance(gs_or_gamma, MajoranaCorrelationMatrix) else ground_majorana(gs_or_gamma)
    n_cells = mcm.n_sites // 2
    if not 0 <= r <= n_cells // 2:
        raise ConfigError(f"distance r must lie in [0, {n_cells // 2}], got {r}")
    m, n = 1, 2 * r + 2
    return float(mcm.gamma[2 * m + 1, 2 * n])
