"""Ground-state diagnostics: fidelity and its susceptibility, two-site density
matrices and concurrence, block entanglement entropy, magnetization."""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .correlations import (
    MajoranaCorrelationMatrix,
    block_expectations,
    ground_majorana,
    pauli_expectation,
)
from .errors import ConfigError, NumericalConsistencyError
from .model import Boundary, ModelParams
from .solver import GroundState, ground_state

DEFAULT_STEP = 1e-4
RICHARDSON_STEPS = (1e-3, 5e-4, 1e-4)
PSD_TOL = 1e-9

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
_LABEL = {1: "X", 2: "Y", 3: "Z"}
NONZERO_COEFFICIENTS = ((0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0))


@dataclass(frozen=True)
class Fidelity:
    value: float
    log_value: float
    degenerate: bool = False

    def __float__(self) -> float:
        return self.value


def _shift(params: ModelParams, direction: str, delta: float) -> ModelParams:
    if direction == "alpha":
        return params.with_(alpha=params.alpha + delta)
    if direction == "h":
        return params.with_(h=params.h + delta)
    raise ConfigError(f"direction must be 'alpha' or 'h', got {direction!r}")


def _log_overlaps(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """log |<u|v>| per row, accurate when the overlap is close to 1."""
    ov = np.einsum("ka,ka->k", u.conj(), v)
    phase = np.where(np.abs(ov) > 0, ov / np.maximum(np.abs(ov), 1e-300), 1.0)
    diff = u - v * phase.conj()[:, None]
    one_minus = 0.5 * np.einsum("ka,ka->k", diff.conj(), diff).real
    return np.log1p(-np.clip(one_minus, 0.0, 1.0))


def fidelity(params: ModelParams, direction: str = "h", delta: float = DEFAULT_STEP,
             lift: str = "field") -> Fidelity:
    """Product over momentum blocks of |<v0(x)|v0(x + delta)>|."""
    if params.bc is not Boundary.ABC:
        raise ConfigError("fidelity is defined for ABC")
    a = ground_state(params, lift)
    if delta == 0:
        return Fidelity(1.0, 0.0, a.any_degenerate)
    b = ground_state(_shift(params, direction, delta), lift)
    logf = float(math.fsum(_log_overlaps(a.vectors, b.vectors)))
    return Fidelity(math.exp(logf), logf, a.any_degenerate or b.any_degenerate)


def fidelity_susceptibility(params: ModelParams, direction: str = "h",
                            delta: float = DEFAULT_STEP, richardson: bool = False,
                            lift: str = "field") -> float:
    """chi_F = -2 ln F / delta^2 with a forward step.

    ``richardson=True`` extrapolates the forward-step estimates at
    1e-3, 5e-4, 1e-4 to zero step (fit in 1, delta, delta^2).
    """
    if not richardson:
        f = fidelity(params, direction, delta, lift)
        return max(0.0, -2.0 * f.log_value / delta**2)
    steps = np.array(RICHARDSON_STEPS)
    vals = [-2.0 * fidelity(params, direction, d, lift).log_value / d**2 for d in steps]
    coef = np.linalg.solve(np.vander(steps, 3, increasing=True), vals)
    return float(coef[0])


@dataclass(frozen=True)
class TwoSiteDensityMatrix:
    rho: np.ndarray
    coefficients: dict = field(default_factory=dict)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)


def pauli_coefficients(mcm: MajoranaCorrelationMatrix, pair) -> dict[tuple[int, int], float]:
    """All 16 coefficients p_ab = <sigma^a_i sigma^b_j>."""
    i, j = pair
    out = {}
    for a in range(4):
        for b in range(4):
            ops = {}
            if a:
                ops[i] = _LABEL[a]
            if b:
                ops[j] = _LABEL[b]
            out[(a, b)] = 1.0 if not ops else pauli_expectation(mcm, ops)
    return out


def density_matrix_from_coefficients(coeffs: dict) -> np.ndarray:
    rho = np.zeros((4, 4), complex)
    for (a, b), val in coeffs.items():
        rho += val * np.kron(PAULI[a], PAULI[b])
    return rho / 4.0


def two_site_density_matrix(gs_or_gamma, pair) -> TwoSiteDensityMatrix:
    """Reduced state of flat sites ``pair`` (0-based, i < j) from its Pauli expansion.

    Only the six symmetry-allowed coefficients enter rho; the remaining ones are
    computed as well and must vanish.
    """
    mcm = gs_or_gamma if isinstance(gs_or_gamma, MajoranaCorrelationMatrix) else ground_majorana(gs_or_gamma)
    i, j = pair
    if not (0 <= i < j < mcm.n_sites):
        raise ConfigError(f"pair must satisfy 0 <= i < j < {mcm.n_sites}, got {pair}")
    allc = pauli_coefficients(mcm, pair)
    stray = max(abs(v) for k, v in allc.items() if k not in NONZERO_COEFFICIENTS)
    if stray > PSD_TOL:
        raise NumericalConsistencyError(f"forbidden Pauli coefficient of size {stray:.3e}")
    coeffs = {k: allc[k] for k in NONZERO_COEFFICIENTS}
    rho = density_matrix_from_coefficients(coeffs)
    w = np.linalg.eigvalsh(rho)
    if w.min() < -PSD_TOL:
        raise NumericalConsistencyError(f"two-site density matrix not PSD (min eig {w.min():.3e})")
    return TwoSiteDensityMatrix(rho, coeffs)


_YY = np.kron(PAULI[2], PAULI[2])


def concurrence(rho) -> float:
    r = rho.rho if isinstance(rho, TwoSiteDensityMatrix) else np.asarray(rho, complex)
    if np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() < -PSD_TOL:
        raise NumericalConsistencyError("density matrix has a negative eigenvalue")
    flipped = _YY @ r.conj() @ _YY
    ev = np.linalg.eigvals(r @ flipped)
    if np.min(ev.real) < -PSD_TOL:
        raise NumericalConsistencyError(f"negative eigenvalue {np.min(ev.real):.3e} in rho*rho~")
    roots = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(max(0.0, roots[0] - roots[1] - roots[2] - roots[3]))


def binary_entropy(x) -> np.ndarray:
    x = np.clip(np.asarray(x, float), 0.0, 1.0)
    out = np.zeros_like(x)
    m = (x > 0) & (x < 1)
    xm = x[m]
    out[m] = -xm * np.log2(xm) - (1 - xm) * np.log2(1 - xm)
    return out


def block_entropy(gs_or_gamma, L: int) -> float:
    """Von Neumann entropy (bits) of flat sites 1..L."""
    mcm = gs_or_gamma if isinstance(gs_or_gamma, MajoranaCorrelationMatrix) else ground_majorana(gs_or_gamma)
    n = mcm.n_sites
    if not 0 <= L <= n:
        raise ConfigError(f"block size must be in [0, {n}], got {L}")
    if L == 0:
        return 0.0
    nu = np.linalg.eigvalsh(1j * mcm.gamma[: 2 * L, : 2 * L])
    if np.abs(nu).max() > 1 + PSD_TOL:
        raise NumericalConsistencyError(f"Majorana spectrum outside [-1, 1]: {np.abs(nu).max()}")
    nu = np.clip(nu, -1.0, 1.0)
    # the +-nu pairs double count
    return float(0.5 * binary_entropy((1 + nu) / 2).sum())


@dataclass(frozen=True)
class EntropyCurve:
    block_sizes: np.ndarray
    entropies: np.ndarray
    params: ModelParams


def entropy_curve(gs: GroundState, sizes) -> EntropyCurve:
    mcm = ground_majorana(gs)
    sizes = np.asarray(list(sizes), dtype=int)
    vals = np.array([block_entropy(mcm, int(L)) for L in sizes])
    return EntropyCurve(sizes, vals, gs.params)


def site_occupations(gs: GroundState) -> np.ndarray:
    """<n_1>, <n_2> per cell (translation invariant) from the block vectors."""
    F, _ = block_expectations(gs)
    n = gs.params.n_cells
    occ = np.array([F[:, 0, 0].real.sum() + F[:, 2, 2].real.sum(),
                    F[:, 1, 1].real.sum() + F[:, 3, 3].real.sum()])
    return occ / n


def magnetization(gs: GroundState) -> float:
    """<Z_{1,n}> + <Z_{2,n}>."""
    if gs.params.bc is not Boundary.ABC:
        raise ConfigError("magnetization is evaluated with ABC")
    occ = site_occupations(gs)
    return float(2.0 * occ.sum() - 2.0)


def susceptibility(params: ModelParams, h_grid, lift: str = "field") -> np.ndarray:
    """d<Z>/dh by finite differences on ``h_grid`` (central inside, one-sided at ends)."""
    h = np.asarray(h_grid, float)
    if h.size < 3:
        raise ConfigError("susceptibility needs at least 3 field values")
    d = np.diff(h)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ConfigError("field grid must be strictly monotone")
    m = np.array([magnetization(ground_state(params.with_(h=float(x)), lift)) for x in h])
    return np.gradient(m, h, edge_order=1)


def susceptibility_at(params: ModelParams, h_values, rel_step: float = 1e-3,
                      min_step: float = 1e-5, lift: str = "field") -> np.ndarray:
    """chi at isolated field values via three-point stencils fed to susceptibility()."""
    out = []
    for x in np.atleast_1d(h_values):
        s = max(min_step, rel_step * abs(x))
        out.append(susceptibility(params, [x - s, x, x + s], lift)[1])
    return np.array(out)


def ising_magnetization(params: ModelParams) -> float:
    """<Z_{1,n}> + <Z_{2,n}> of the transverse Ising ring (ABC), field +h/2 Z.

    Exact derivative of the closed-form ABC energy: the per-cell sum equals
    (2/N') dE/dh.
    """
    if params.bc is not Boundary.ABC:
        raise ConfigError("Ising magnetization is evaluated with ABC")
    J, h, n = params.J, params.h, params.n_cells
    c = np.cos(np.array([j * math.pi / n for j in range(1, n, 2)]) / 2)
    dE = 0.0
    for s in (1.0, -1.0):
        dE -= math.fsum((h + 2 * J * s * c) / np.sqrt(h * h + 4 * J * J + 4 * J * h * s * c))
    return 2.0 * dE / n


def ising_susceptibility_at(params: ModelParams, h_values, rel_step: float = 1e-3,
                            min_step: float = 1e-5) -> np.ndarray:
    """d<Z>/dh of the Ising ring by the same three-point stencil as susceptibility_at."""
    out = []
    for x in np.atleast_1d(h_values):
        s = max(min_step, rel_step * abs(x))
        m = [ising_magnetization(params.with_(h=float(x + d))) for d in (-s, s)]
        out.append((m[1] - m[0]) / (2 * s))
    return np.array(out)


def fidelity_min(params: ModelParams, delta: float = DEFAULT_STEP, lift: str = "field") -> Fidelity:
    """min[F(h, h + delta), F(alpha, alpha + delta)]."""
    fh = fidelity(params, "h", delta, lift)
    fa = fidelity(params, "alpha", delta, lift)
    return fh if fh.log_value <= fa.log_value else fa
