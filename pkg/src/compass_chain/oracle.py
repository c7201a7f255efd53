"""Brute-force exact diagonalization in the full spin Hilbert space.

Basis states are integers; site ``j`` (0-based flat index) lives in bit
``N-1-j`` so that ``psi.reshape([2]*N)`` has axis ``j`` for site ``j``.  Bit 0
is spin up (Z = +1).  Spins are always periodic; the fermion boundary condition
of the momentum solver corresponds to the parity sector (even <-> ABC,
odd <-> PBC).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import ConfigError, NumericalConsistencyError, SizeLimitError
from .model import ModelParams

MAX_SITES = 16
DENSE_MAX_SITES = 12
RESIDUAL_TOL = 1e-9
SECTORS = ("full", "even", "odd")
MODELS = ("compass", "ising")


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    out = np.zeros_like(x)
    while np.any(x):
        out += x & 1
        x >>= 1
    return out


@dataclass(frozen=True)
class _Bond:
    i: int
    j: int
    kind: str  # "XX" or "YY"
    coeff: float


class SpinHamiltonian:
    """Matrix-free spin Hamiltonian restricted to a Z-parity sector.

    ``model="compass"`` is the two-site-cell chain with the ``beta`` mixing of
    intra-cell XX and YY bonds; ``model="ising"`` puts XX on every bond and the
    field with the opposite sign (+h/2 Z), ignoring ``alpha`` and ``beta``.
    """

    def __init__(self, params: ModelParams, sector: str = "full", model: str = "compass"):
        if sector not in SECTORS:
            raise ConfigError(f"sector must be one of {SECTORS}, got {sector!r}")
        if model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {model!r}")
        n = params.n_sites
        if n > MAX_SITES:
            raise SizeLimitError(f"exact diagonalization limited to N <= {MAX_SITES}, got N={n}")
        self.params = params
        self.sector = sector
        self.model = model
        self.n_sites = n
        states = np.arange(2**n, dtype=np.int64)
        if sector != "full":
            par = _popcount(states) % 2
            states = states[par == (0 if sector == "even" else 1)]
        self.states = states
        self._pos = np.full(2**n, -1, dtype=np.int64)
        self._pos[states] = np.arange(states.size)
        self.bonds = self._bonds()
        self._diag = self._field_diagonal()
        self._hops = [self._hop(b) for b in self.bonds if b.coeff != 0.0]

    @property
    def dimension(self) -> int:
        return int(self.states.size)

    def _bit(self, site: int) -> int:
        return self.n_sites - 1 - site

    def _bonds(self) -> list[_Bond]:
        p, n = self.params, self.n_sites
        J = p.J
        bonds = []
        for c in range(p.n_cells):
            s1, s2, s3 = 2 * c, 2 * c + 1, (2 * c + 2) % n
            bonds.append(_Bond(s2, s3, "XX", -J))
            if self.model == "ising":
                bonds.append(_Bond(s1, s2, "XX", -J))
            else:
                bonds.append(_Bond(s1, s2, "XX", -J * p.alpha * (1 - p.beta)))
                bonds.append(_Bond(s1, s2, "YY", -J * p.alpha * p.beta))
        return bonds

    def _field_diagonal(self) -> np.ndarray:
        bits = (self.states[:, None] >> np.arange(self.n_sites)[None, :]) & 1
        z_total = (1 - 2 * bits).sum(axis=1).astype(float)
        sign = 1.0 if self.model == "ising" else -1.0
        return sign * 0.5 * self.params.h * z_total

    def _hop(self, b: _Bond):
        bi, bj = self._bit(b.i), self._bit(b.j)
        src = self.states ^ ((1 << bi) | (1 << bj))
        cols = self._pos[src]
        if b.kind == "XX":
            amp = np.full(self.dimension, b.coeff)
        else:
            # Y_i Y_j |b_i b_j> = -(-1)^(b_i + b_j) |flipped>
            par = ((src >> bi) & 1) + ((src >> bj) & 1)
            amp = -b.coeff * (1 - 2 * (par % 2))
        return cols, amp

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape[0] != self.dimension:
            raise ConfigError(f"vector length {v.shape[0]} != sector dimension {self.dimension}")
        diag = self._diag if v.ndim == 1 else self._diag[:, None]
        out = diag * v
        for cols, amp in self._hops:
            out = out + (amp if v.ndim == 1 else amp[:, None]) * v[cols]
        return out

    def to_dense(self) -> np.ndarray:
        if self.n_sites > DENSE_MAX_SITES:
            raise SizeLimitError(f"dense matrix limited to N <= {DENSE_MAX_SITES}")
        m = np.diag(self._diag)
        rows = np.arange(self.dimension)
        for cols, amp in self._hops:
            np.add.at(m, (rows, cols), amp)
        return m

    def linear_operator(self) -> LinearOperator:
        return LinearOperator((self.dimension,) * 2, matvec=self.apply, dtype=float)

    def embed(self, v: np.ndarray) -> np.ndarray:
        """Sector vector -> full 2^N amplitude vector."""
        full = np.zeros(2**self.n_sites, dtype=v.dtype)
        full[self.states] = v
        return full


@dataclass(frozen=True)
class EDGroundState:
    energy: float
    vector: np.ndarray
    parity: int
    params: ModelParams
    sector: str = "full"
    model: str = "compass"

    @property
    def n_sites(self) -> int:
        return self.params.n_sites


def _fix_sign(v: np.ndarray) -> np.ndarray:
    tol = 1e-10 * np.abs(v).max()
    k = int(np.argmax(np.abs(v) > tol))
    return -v if v[k] < 0 else v


def _lowest(ham: SpinHamiltonian, k: int = 1):
    if ham.n_sites <= DENSE_MAX_SITES:
        w, v = np.linalg.eigh(ham.to_dense())
        return w[:k], v[:, :k]
    rng = np.random.default_rng(0)
    v0 = rng.standard_normal(ham.dimension)
    w, v = eigsh(ham.linear_operator(), k=k, which="SA", v0=v0, tol=1e-13)
    order = np.argsort(w)
    return w[order], v[:, order]


def ed_ground_state(params: ModelParams, sector: str = "full", model: str = "compass") -> EDGroundState:
    """Lowest eigenpair in a Z-parity sector, embedded in the full space."""
    ham = SpinHamiltonian(params, sector, model)
    w, v = _lowest(ham, 1)
    vec = _fix_sign(v[:, 0] / np.linalg.norm(v[:, 0]))
    resid = np.linalg.norm(ham.apply(vec) - w[0] * vec)
    if resid > RESIDUAL_TOL * max(1.0, abs(w[0])):
        raise NumericalConsistencyError(f"ED residual {resid:.3e} above tolerance")
    full = ham.embed(vec)
    par = _popcount(ham.states[np.abs(vec) > 1e-12]) % 2
    if np.all(par == 0):
        parity = 1
    elif np.all(par == 1):
        parity = -1
    else:
        parity = 0  # mixed: only possible in a degenerate full-space level
    return EDGroundState(float(w[0]), full, parity, params, sector, model)


def ed_spectrum(params: ModelParams, sector: str = "full", model: str = "compass",
                k: int | None = None) -> np.ndarray:
    """Ascending eigenvalues; all of them (dense, N <= 12) or the lowest ``k``."""
    ham = SpinHamiltonian(params, sector, model)
    if k is None:
        return np.linalg.eigvalsh(ham.to_dense())
    return _lowest(ham, k)[0]


_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _tensor(state: EDGroundState) -> np.ndarray:
    n = state.n_sites
    if n > MAX_SITES:
        raise SizeLimitError(f"N={n} exceeds {MAX_SITES}")
    if state.vector.size != 2**n:
        raise ConfigError("state dimension does not match its parameters")
    return state.vector.reshape([2] * n)


def apply_paulis(state: EDGroundState, ops: dict[int, str]) -> np.ndarray:
    psi = _tensor(state).astype(complex)
    for site, kind in ops.items():
        if not 0 <= site < state.n_sites:
            raise ConfigError(f"site {site} outside chain")
        psi = np.moveaxis(np.tensordot(_PAULI[kind.upper()], psi, axes=([1], [site])), 0, site)
    return psi.reshape(-1)


def reduced_density_matrix(state: EDGroundState, sites) -> np.ndarray:
    """Partial trace over the complement of ``sites`` (kept in the given order)."""
    sites = list(sites)
    if len(set(sites)) != len(sites):
        raise ConfigError("repeated site in reduced density matrix")
    psi = _tensor(state)
    rest = [k for k in range(state.n_sites) if k not in sites]
    m = np.transpose(psi, sites + rest).reshape(2 ** len(sites), -1)
    return m @ m.conj().T


def _entropy_bits(state: EDGroundState, L: int) -> float:
    if not 0 <= L <= state.n_sites:
        raise ConfigError(f"block size must be in [0, {state.n_sites}]")
    if L in (0, state.n_sites):
        return 0.0
    s = np.linalg.svd(state.vector.reshape(2**L, -1), compute_uv=False) ** 2
    s = s[s > 1e-300]
    return float(-(s * np.log2(s)).sum())


def ed_observable(state: EDGroundState, which: str, **kw):
    """Oracle observables computed straight from the state vector.

    ``fidelity-overlap`` (other=state), ``two-site-rdm`` (sites=(i, j)),
    ``block-entropy`` (L), ``correlator`` (ops={site: 'X'|'Y'|'Z'}),
    ``magnetization`` (<Z_1n> + <Z_2n>, averaged over cells).
    """
    if which == "fidelity-overlap":
        other = kw["other"]
        if other.vector.shape != state.vector.shape:
            raise ConfigError("states of different dimension")
        return float(abs(np.vdot(state.vector, other.vector)))
    if which == "two-site-rdm":
        return reduced_density_matrix(state, kw["sites"])
    if which == "block-entropy":
        return _entropy_bits(state, int(kw["L"]))
    if which == "correlator":
        val = np.vdot(state.vector, apply_paulis(state, kw["ops"]))
        return float(val.real)
    if which == "magnetization":
        psi = _tensor(state)
        probs = np.abs(psi) ** 2
        z = 0.0
        for k in range(state.n_sites):
            marg = probs.sum(axis=tuple(a for a in range(state.n_sites) if a != k))
            z += marg[0] - marg[1]
        return float(z / state.params.n_cells)
    raise ConfigError(f"unknown observable {which!r}")


def lowest_excitation(params: ModelParams, sector: str = "even", model: str = "compass") -> float:
    """Gap between the two lowest levels of a sector."""
    w = ed_spectrum(params, sector, model, k=2)
    return float(w[1] - w[0])


__all__ = [
    "SpinHamiltonian",
    "EDGroundState",
    "ed_ground_state",
    "ed_spectrum",
    "ed_observable",
    "reduced_density_matrix",
    "apply_paulis",
    "lowest_excitation",
]
