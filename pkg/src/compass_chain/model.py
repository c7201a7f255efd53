"""Model parameters and momentum bookkeeping for the two-site-cell compass chain.

Sites are labelled ``(s, n)`` with ``s in {1, 2}`` and cell ``n in 1..N'``; the flat
index used everywhere else is ``2*(n-1) + s`` (1-based), i.e. ``2*(n-1) + s - 1``
0-based.  The spin Hamiltonian is

    H = -J sum_n X_{2,n} X_{1,n+1}
        - J*alpha sum_n [(1-beta) X_{1,n} X_{2,n} + beta Y_{1,n} Y_{2,n}]
        - h/2 sum_n (Z_{1,n} + Z_{2,n})

with periodic spins.  ``beta = 1`` is the compass model, ``alpha = 1`` the XX-YY
interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
import math

from .errors import ConfigError


class Boundary(str, Enum):
    ABC = "ABC"
    PBC = "PBC"


@dataclass(frozen=True)
class ModelParams:
    n_cells: int
    alpha: float = 1.0
    h: float = 0.0
    J: float = 1.0
    beta: float = 1.0
    bc: Boundary = Boundary.ABC

    def __post_init__(self):
        if isinstance(self.n_cells, bool) or int(self.n_cells) != self.n_cells:
            raise ConfigError(f"n_cells must be an integer, got {self.n_cells!r}")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        if self.n_cells < 2 or self.n_cells % 2:
            raise ConfigError(f"n_cells must be even and >= 2, got {self.n_cells}")
        if not self.J > 0:
            raise ConfigError(f"J must be positive, got {self.J}")
        object.__setattr__(self, "bc", Boundary(self.bc))
        for name in ("alpha", "h", "beta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @property
    def n_sites(self) -> int:
        return 2 * self.n_cells

    @property
    def is_compass(self) -> bool:
        return self.beta == 1.0

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class MomentumGrid:
    """Positive momenta stored as exact fractions of pi."""

    points: tuple[Fraction, ...]
    special_points: tuple[Fraction, ...] = field(default=())

    def values(self) -> list[float]:
        return [math.pi * float(q) for q in self.points]

    def special_values(self) -> list[float]:
        return [math.pi * float(q) for q in self.special_points]

    def __len__(self) -> int:
        return len(self.points)


def _check_cells(n_cells: int) -> None:
    if n_cells < 2 or n_cells % 2:
        raise ConfigError(f"n_cells must be even and >= 2, got {n_cells}")


def momentum_grid(params: ModelParams) -> MomentumGrid:
    """Positive momenta p' of the independent (p', -p') blocks, ascending."""
    n = params.n_cells
    _check_cells(n)
    if params.bc is Boundary.ABC:
        return MomentumGrid(tuple(Fraction(j, n) for j in range(1, n, 2)))
    pts = tuple(Fraction(2 * j, n) for j in range(1, n // 2))
    return MomentumGrid(pts, (Fraction(0), Fraction(1)))


def site_index(s: int, n: int) -> int:
    """0-based flat index of site ``(s, n)`` (both 1-based)."""
    return 2 * (n - 1) + (s - 1)
