"""Microcanonical site-addition sweeps over fixed bond configurations.

One replica draws a barrier configuration, occupies sites one at a time in
uniform random order, maintains clusters with union-find, and records the
occupation count at the first top-to-bottom spanning event. Campaigns
accumulate those counts into per-n histograms over many replicas, each with
its own derived RNG stream, so the result is independent of worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .lattice import (
    BarrierModel,
    BondGrid,
    LatticeGeometry,
    allocate_barriers,
    allocate_joint_bonds,
)
from .streams import cell_words, replica_rng

SPANNING_MODES = ("vertical", "either")

# site states emitted by snapshots
UNOCCUPIED, OTHER_CLUSTER, LARGEST_CLUSTER = 0, 1, 2
STATE_NAMES = {UNOCCUPIED: "unoccupied", OTHER_CLUSTER: "other-cluster",
               LARGEST_CLUSTER: "largest-cluster"}


class UnionFind:
    """Disjoint sets over 0..n-1, union by size with path compression."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return int(x)

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)


@dataclass
class SpanningHistogram:
    """Per-n first-spanning counts plus barrier statistics for one campaign."""

    L: int
    model: str
    param_name: str
    param: float
    replicas: int
    counts: np.ndarray  # counts[n] = replicas whose first spanning used n sites
    nonspanning: int
    nb_count: int
    nb_sum: int
    nb_sumsq: int
    seed: int | None = None
    spanning: str = "vertical"

    def __post_init__(self):
        total = int(self.counts.sum()) + self.nonspanning
        if total != self.replicas:
            raise ValueError(
                f"histogram mass {total} does not match replica count {self.replicas}"
            )

    def merge(self, other: "SpanningHistogram") -> "SpanningHistogram":
        """Entrywise sum of two campaigns over the same cell."""
        for attr in ("L", "model", "param_name", "param", "seed", "spanning"):
            if getattr(self, attr) != getattr(other, attr):
                raise ValueError(f"cannot merge histograms differing in {attr}")
        return replace(
            self,
            replicas=self.replicas + other.replicas,
            counts=self.counts + other.counts,
            nonspanning=self.nonspanning + other.nonspanning,
            nb_count=self.nb_count + other.nb_count,
            nb_sum=self.nb_sum + other.nb_sum,
            nb_sumsq=self.nb_sumsq + other.nb_sumsq,
        )

    def nb_mean(self) -> float:
        if self.nb_count == 0:
            raise ValueError("no barrier statistics accumulated")
        return self.nb_sum / self.nb_count

    def nb_variance(self) -> float:
        if self.nb_count < 2:
            raise ValueError("need at least two draws for a variance")
        n = self.nb_count
        return (self.nb_sumsq - self.nb_sum**2 / n) / (n - 1)


def run_replica(
    geometry: LatticeGeometry,
    grid: BondGrid,
    rng: np.random.Generator | None = None,
    *,
    order: np.ndarray | None = None,
    spanning: str = "vertical",
) -> int | None:
    """Occupation count at first spanning for one sweep, or None if never.

    Supply `rng` for a uniform random order (Fisher-Yates, generated lazily so
    the sweep stops at the spanning event) or an explicit `order` permutation.
    """
    either = _spanning_flag(spanning)
    if (rng is None) == (order is None):
        raise ValueError("provide exactly one of rng or order")
    if order is not None:
        order = np.asarray(order, dtype=np.int64)
        n_c = _kernels.sweep_ordered(geometry.L, grid.horizontal, grid.vertical,
                                     order, either)
    else:
        u = rng.random(geometry.N)
        n_c = _kernels.sweep_random(geometry.L, grid.horizontal, grid.vertical,
                                    u, either)
    return None if n_c < 0 else int(n_c)


def _spanning_flag(spanning: str) -> bool:
    if spanning not in SPANNING_MODES:
        raise ValueError(f"spanning must be one of {SPANNING_MODES}, got {spanning!r}")
    return spanning == "either"


def _run_chunk(args) -> tuple[np.ndarray, int, int, int]:
    (L, model_value, param, w0, w1, start, stop, either) = args
    model = BarrierModel(model_value)
    geometry = LatticeGeometry(L)
    N = geometry.N
    words = np.array([w0, w1], dtype=np.uint64)
    counts = np.zeros(N + 1, dtype=np.int64)
    nonspanning = 0
    nb_sum = 0
    nb_sumsq = 0
    joint = model is BarrierModel.JOINT_SITE_BOND
    for rep in range(start, stop):
        rng = replica_rng(words, rep)
        if joint:
            grid = allocate_joint_bonds(geometry, param, rng)
            nb = grid.closed_count()
        else:
            grid, alloc = allocate_barriers(geometry, model, param, rng)
            nb = alloc.newly_closed
        u = rng.random(N)
        n_c = _kernels.sweep_random(L, grid.horizontal, grid.vertical, u, either)
        if n_c < 0:
            nonspanning += 1
        else:
            counts[n_c] += 1
        nb_sum += nb
        nb_sumsq += nb * nb
    return counts, nonspanning, nb_sum, nb_sumsq


def run_campaign(
    geometry: LatticeGeometry,
    model: BarrierModel,
    param: float,
    replicas: int,
    seed: int,
    *,
    workers: int = 1,
    replica_offset: int = 0,
    chunk_size: int = 4096,
    spanning: str = "vertical",
) -> SpanningHistogram:
    """Run `replicas` independent sweeps, each with a fresh barrier draw.

    Replica r uses the stream keyed by (seed, model, L, param, replica_offset + r),
    so campaigns are reproducible, mergeable over disjoint index ranges, and
    bit-identical for any worker count.
    """
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    either = _spanning_flag(spanning)
    words = cell_words(seed, model.value, geometry.L, param)
    starts = range(replica_offset, replica_offset + replicas, chunk_size)
    payloads = [
        (geometry.L, model.value, float(param), int(words[0]), int(words[1]),
         start, min(start + chunk_size, replica_offset + replicas), either)
        for start in starts
    ]
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, payloads))
    else:
        results = [_run_chunk(p) for p in payloads]

    counts = np.zeros(geometry.N + 1, dtype=np.int64)
    nonspanning = 0
    nb_sum = 0
    nb_sumsq = 0
    for c, ns, s, s2 in results:
        counts += c
        nonspanning += ns
        nb_sum += s
        nb_sumsq += s2
    return SpanningHistogram(
        L=geometry.L,
        model=model.value,
        param_name=model.param_name,
        param=float(param),
        replicas=replicas,
        counts=counts,
        nonspanning=nonspanning,
        nb_count=replicas,
        nb_sum=int(nb_sum),
        nb_sumsq=int(nb_sumsq),
        seed=seed,
        spanning=spanning,
    )


@dataclass
class Snapshot:
    """One static occupancy draw, classified by cluster membership."""

    L: int
    states: np.ndarray  # UNOCCUPIED / OTHER_CLUSTER / LARGEST_CLUSTER per site
    largest_size: int
    spanning: bool


def snapshot_largest_cluster(
    geometry: LatticeGeometry,
    model: BarrierModel,
    param: float,
    chi: float,
    seed: int,
    *,
    replica_index: int = 0,
) -> Snapshot:
    """Occupy sites independently with probability chi and mark the largest cluster."""
    if not 0.0 <= chi <= 1.0:
        raise ValueError(f"chi must be in [0, 1], got {chi}")
    rng = replica_rng(cell_words(seed, model.value, geometry.L, param), replica_index)
    if model is BarrierModel.JOINT_SITE_BOND:
        grid = allocate_joint_bonds(geometry, param, rng)
    else:
        grid, _ = allocate_barriers(geometry, model, param, rng)
    occupied = (rng.random(geometry.N) < chi).astype(np.uint8)
    states = np.zeros(geometry.N, dtype=np.uint8)
    if not occupied.any():
        return Snapshot(L=geometry.L, states=states, largest_size=0, spanning=False)
    roots = _kernels.cluster_occupied(geometry.L, grid.horizontal, grid.vertical, occupied)
    occ_roots = roots[occupied == 1]
    sizes = np.bincount(occ_roots, minlength=geometry.N)
    largest_root = int(sizes.argmax())
    largest_size = int(sizes[largest_root])
    states[occupied == 1] = OTHER_CLUSTER
    states[roots == largest_root] = LARGEST_CLUSTER
    top = roots[np.arange(geometry.L) * geometry.L]
    bottom = roots[np.arange(geometry.L) * geometry.L + geometry.L - 1]
    shared = np.intersect1d(top[top >= 0], bottom[bottom >= 0])
    return Snapshot(
        L=geometry.L,
        states=states,
        largest_size=largest_size,
        spanning=shared.size > 0,
    )
