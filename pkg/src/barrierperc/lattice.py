"""Square-lattice geometry, bond indexing, and random barrier allocation.

The lattice is an L x L grid of sites labeled M = i*L + j for column i and
row j. Connectivity lives on two bond arrays (horizontal and vertical, each
of length L*(L-1)); entry 1 means the bond is open, 0 means a barrier blocks
it. Barrier allocation draws a binomial number of sites, selects them without
replacement, and closes one or two of each site's nominal bonds according to
the chosen model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels

DIR_UP, DIR_DOWN, DIR_LEFT, DIR_RIGHT = 0, 1, 2, 3
DIRECTION_NAMES = ("up", "down", "left", "right")


@dataclass(frozen=True)
class LatticeGeometry:
    """Side length and derived counts for an L x L site lattice."""

    L: int

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"lattice side must be >= 2, got {self.L}")

    @property
    def N(self) -> int:
        return self.L * self.L

    @property
    def bonds_per_direction(self) -> int:
        return self.L * (self.L - 1)

    @property
    def total_bonds(self) -> int:
        return 2 * self.L * (self.L - 1)


def site_index(i: int, j: int, geometry: LatticeGeometry) -> int:
    """Linearized label of the site at column i, row j."""
    L = geometry.L
    if not (0 <= i < L and 0 <= j < L):
        raise ValueError(f"site ({i}, {j}) outside {L}x{L} lattice")
    return i * L + j


def site_coords(label: int, geometry: LatticeGeometry) -> tuple[int, int]:
    """Inverse of site_index: (column, row) of a label."""
    L = geometry.L
    if not (0 <= label < geometry.N):
        raise ValueError(f"label {label} outside lattice with {geometry.N} sites")
    return label // L, label % L


def incident_bonds(label: int, geometry: LatticeGeometry):
    """The four nominal bonds of a site, as (direction, bond or None) entries.

    A bond reference is ('H', index) or ('V', index); None marks a direction
    that leaves the lattice. Every physical bond is referenced by exactly two
    sites, with opposite directions.
    """
    L = geometry.L
    i, j = site_coords(label, geometry)
    return [
        ("up", ("V", i * (L - 1) + j - 1) if j > 0 else None),
        ("down", ("V", i * (L - 1) + j) if j < L - 1 else None),
        ("left", ("H", (i - 1) * L + j) if i > 0 else None),
        ("right", ("H", i * L + j) if i < L - 1 else None),
    ]


class BarrierModel(Enum):
    """Barrier allocation models: which bonds close around a selected site."""

    SQ2N_1 = "sq2N-1"
    SQ2N_2 = "sq2N-2"
    SQ2N_2_CORNERS = "sq2N-2-corners"
    SQ2N_2_PARALLELS = "sq2N-2-parallels"
    JOINT_SITE_BOND = "joint"

    @property
    def patterns(self) -> np.ndarray:
        """Pattern table: rows of direction codes, -1 padding; uniform draw."""
        return _PATTERNS[self]

    @property
    def bonds_per_site(self) -> int:
        return 1 if self is BarrierModel.SQ2N_1 else 2

    @property
    def param_name(self) -> str:
        return "q_b" if self is BarrierModel.JOINT_SITE_BOND else "p_d"


# Pattern sets, one row per equally likely choice. sq2N-2 uses all six
# unordered direction pairs; corners pairs left+up and right+down; parallels
# pairs up+down and left+right.
_PATTERNS = {
    BarrierModel.SQ2N_1: np.array(
        [[DIR_UP, -1], [DIR_DOWN, -1], [DIR_LEFT, -1], [DIR_RIGHT, -1]], dtype=np.int8
    ),
    BarrierModel.SQ2N_2: np.array(
        [
            [DIR_UP, DIR_DOWN],
            [DIR_UP, DIR_LEFT],
            [DIR_UP, DIR_RIGHT],
            [DIR_DOWN, DIR_LEFT],
            [DIR_DOWN, DIR_RIGHT],
            [DIR_LEFT, DIR_RIGHT],
        ],
        dtype=np.int8,
    ),
    BarrierModel.SQ2N_2_CORNERS: np.array(
        [[DIR_LEFT, DIR_UP], [DIR_RIGHT, DIR_DOWN]], dtype=np.int8
    ),
    BarrierModel.SQ2N_2_PARALLELS: np.array(
        [[DIR_UP, DIR_DOWN], [DIR_LEFT, DIR_RIGHT]], dtype=np.int8
    ),
}


@dataclass
class BondGrid:
    """Open/closed state of all bonds; frozen read-only after construction."""

    L: int
    horizontal: np.ndarray
    vertical: np.ndarray

    @classmethod
    def fully_open(cls, geometry: LatticeGeometry) -> "BondGrid":
        nb = geometry.bonds_per_direction
        return cls(
            L=geometry.L,
            horizontal=np.ones(nb, dtype=np.uint8),
            vertical=np.ones(nb, dtype=np.uint8),
        )

    def freeze(self) -> "BondGrid":
        self.horizontal.flags.writeable = False
        self.vertical.flags.writeable = False
        return self

    def copy(self) -> "BondGrid":
        return BondGrid(self.L, self.horizontal.copy(), self.vertical.copy())

    def closed_count(self) -> int:
        nb = self.horizontal.shape[0]
        return int(
            2 * nb - np.count_nonzero(self.horizontal) - np.count_nonzero(self.vertical)
        )

    def closed_bond_lines(self) -> list[str]:
        """Debug dump: one sorted `H i j` / `V i j` line per closed bond."""
        L = self.L
        lines = []
        for idx in np.flatnonzero(self.horizontal == 0):
            lines.append(f"H {idx // L} {idx % L}")
        for idx in np.flatnonzero(self.vertical == 0):
            lines.append(f"V {idx // (L - 1)} {idx % (L - 1)}")
        return sorted(lines)


@dataclass(frozen=True)
class BarrierAllocation:
    """Bookkeeping of one allocation draw."""

    p_d: float
    n_d: int
    newly_closed: int
    sites: np.ndarray = field(repr=False, default=None)  # selected labels, diagnostics


def allocate_barriers(
    geometry: LatticeGeometry,
    model: BarrierModel,
    p_d: float,
    rng: np.random.Generator,
) -> tuple[BondGrid, BarrierAllocation]:
    """Draw one random barrier configuration.

    n_d ~ Binomial(N, p_d) sites are selected without replacement; each gets
    a uniformly drawn pattern of the model and its pattern bonds are closed.
    `newly_closed` counts only open-to-closed transitions, so a bond shared
    by two selected neighbors is counted once.
    """
    if not 0.0 <= p_d <= 1.0:
        raise ValueError(f"p_d must be in [0, 1], got {p_d}")
    if model is BarrierModel.JOINT_SITE_BOND:
        raise ValueError("joint site-bond model has no per-site patterns; "
                         "use allocate_joint_bonds")
    grid = BondGrid.fully_open(geometry)
    n_d = int(rng.binomial(geometry.N, p_d))
    u = rng.random(2 * n_d)
    sites = np.empty(n_d, dtype=np.int64)
    newly = _kernels.allocate_barriers(
        geometry.L, n_d, u[:n_d], u[n_d:], model.patterns,
        grid.horizontal, grid.vertical, sites,
    )
    grid.freeze()
    return grid, BarrierAllocation(p_d=p_d, n_d=n_d, newly_closed=int(newly), sites=sites)


def allocate_joint_bonds(
    geometry: LatticeGeometry, q_b: float, rng: np.random.Generator
) -> BondGrid:
    """Close each of the 2L(L-1) bonds independently with probability q_b."""
    if not 0.0 <= q_b <= 1.0:
        raise ValueError(f"q_b must be in [0, 1], got {q_b}")
    nb = geometry.bonds_per_direction
    grid = BondGrid(
        L=geometry.L,
        horizontal=(rng.random(nb) >= q_b).astype(np.uint8),
        vertical=(rng.random(nb) >= q_b).astype(np.uint8),
    )
    return grid.freeze()


def allocation_stats(
    geometry: LatticeGeometry,
    model: BarrierModel,
    param: float,
    draws: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Mean and standard error of the closed-bond fraction over many draws."""
    if draws < 1:
        raise ValueError("draws must be >= 1")
    total = geometry.total_bonds
    vals = np.empty(draws)
    for k in range(draws):
        if model is BarrierModel.JOINT_SITE_BOND:
            vals[k] = allocate_joint_bonds(geometry, param, rng).closed_count() / total
        else:
            _, alloc = allocate_barriers(geometry, model, param, rng)
            vals[k] = alloc.newly_closed / total
    se = vals.std(ddof=1) / np.sqrt(draws) if draws > 1 else float("nan")
    return float(vals.mean()), float(se)


def pd_for_target_qb(
    geometry: LatticeGeometry,
    model: BarrierModel,
    qb_target: float,
    rng: np.random.Generator,
    draws: int = 64,
    tol: float = 1e-3,
) -> float:
    """Invert the measured mean closed fraction: find p_d with q_b ~ target.

    Bisection on the empirically measured mean (monotone in p_d). Used to
    express barrier models on a closed-fraction axis without a fitted curve.
    """
    if model is BarrierModel.JOINT_SITE_BOND:
        return qb_target
    hi_mean, _ = allocation_stats(geometry, model, 1.0, draws, rng)
    if qb_target > hi_mean:
        raise ValueError(
            f"target q_b={qb_target} above maximum reachable {hi_mean:.4f} for {model.value}"
        )
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        mean, _ = allocation_stats(geometry, model, mid, draws, rng)
        if mean < qb_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
