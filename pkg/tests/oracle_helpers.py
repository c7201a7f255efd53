"""Test-side helpers that evaluate Majorana products directly on ED vectors."""
import numpy as np

from compass_chain.oracle import EDGroundState

_OPS = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _apply(psi, n, site, kind):
    t = psi.reshape([2] * n)
    t = np.moveaxis(np.tensordot(_OPS[kind], t, axes=([1], [site])), 0, site)
    return t.reshape(-1)


def apply_majorana(psi, n, k):
    """c[2j] = prod_{i<j}(-Z_i) X_j, c[2j+1] = -prod_{i<j}(-Z_i) Y_j."""
    j, odd = divmod(k, 2)
    out = _apply(psi, n, j, "Y" if odd else "X")
    if odd:
        out = -out
    for i in range(j):
        out = -_apply(out, n, i, "Z")
    return out


def ed_gamma(state: EDGroundState) -> np.ndarray:
    n = state.n_sites
    psi = state.vector.astype(complex)
    cs = [apply_majorana(psi, n, k) for k in range(2 * n)]
    g = np.zeros((2 * n, 2 * n))
    for k in range(2 * n):
        for l in range(2 * n):
            if k != l:
                # <c_k c_l> = <c_k psi | c_l psi> since c_k is Hermitian
                g[k, l] = (np.vdot(cs[k], cs[l]) / 1j).real
    return g
