import itertools

import numpy as np
import pytest

from barrierperc import _kernels
from barrierperc.engine import (
    LARGEST_CLUSTER,
    OTHER_CLUSTER,
    UNOCCUPIED,
    SpanningHistogram,
    UnionFind,
    run_campaign,
    run_replica,
    snapshot_largest_cluster,
)
from barrierperc.lattice import (
    BarrierModel,
    BondGrid,
    LatticeGeometry,
    pd_for_target_qb,
)

from conftest import random_instance
from oracles import bfs_components, first_spanning_bfs, spans_vertically


def kernel_partition(geom, grid, occupied):
    roots = _kernels.cluster_occupied(geom.L, grid.horizontal, grid.vertical, occupied)
    comps = {}
    for s in range(geom.N):
        if occupied[s]:
            comps.setdefault(roots[s], set()).add(s)
    return {frozenset(c) for c in comps.values()}


class TestUnionFind:
    def test_fresh_singleton(self):
        assert UnionFind(10).find(5) == 5

    def test_transitivity(self):
        uf = UnionFind(6)
        uf.union(1, 2)
        uf.union(2, 3)
        assert uf.find(1) == uf.find(3)
        assert uf.connected(1, 3)
        assert not uf.connected(0, 3)

    def test_idempotent_find(self):
        uf = UnionFind(8)
        uf.union(0, 7)
        assert uf.find(uf.find(7)) == uf.find(7)

    def test_matches_bfs_on_random_instance(self, rng):
        # cluster a random 6x6 occupancy via the class and compare partitions
        geom, grid, occupied = random_instance(rng, L=6)
        uf = UnionFind(geom.N)
        for s in range(geom.N):
            if not occupied[s]:
                continue
            i, j = divmod(s, 6)
            if i < 5 and grid.horizontal[s] and occupied[s + 6]:
                uf.union(s, s + 6)
            if j < 5 and grid.vertical[i * 5 + j] and occupied[s + 1]:
                uf.union(s, s + 1)
        ours = {}
        for s in range(geom.N):
            if occupied[s]:
                ours.setdefault(uf.find(s), set()).add(s)
        assert {frozenset(c) for c in ours.values()} == set(
            bfs_components(6, grid.horizontal, grid.vertical, occupied)
        )


class TestClusterOracle:
    def test_partition_equals_bfs_on_1000_instances(self):
        rng = np.random.default_rng(60)
        for _ in range(1000):
            geom, grid, occupied = random_instance(rng)
            assert kernel_partition(geom, grid, occupied) == set(
                bfs_components(geom.L, grid.horizontal, grid.vertical, occupied)
            )


class TestRunReplica:
    def test_2x2_exhaustive(self):
        # every vertical neighbor pair with its bond open spans at n = 2
        geom = LatticeGeometry(2)
        grid = BondGrid.fully_open(geom)
        for order in itertools.permutations(range(4)):
            n_c = run_replica(geom, grid, order=np.array(order))
            assert n_c == first_spanning_bfs(2, grid.horizontal, grid.vertical, order)
        # the specific order (0,0) then (0,1): labels 0, 1
        assert run_replica(geom, grid, order=np.array([0, 1, 2, 3])) == 2

    def test_all_bonds_closed_never_spans(self, rng):
        geom = LatticeGeometry(3)
        grid = BondGrid(
            L=3,
            horizontal=np.zeros(6, dtype=np.uint8),
            vertical=np.zeros(6, dtype=np.uint8),
        )
        for _ in range(30):
            assert run_replica(geom, grid, rng) is None

    def test_spanning_needs_at_least_L_sites(self, rng):
        geom = LatticeGeometry(3)
        grid = BondGrid.fully_open(geom)
        for _ in range(200):
            assert run_replica(geom, grid, rng) >= 3

    def test_matches_bfs_first_spanning(self):
        rng = np.random.default_rng(61)
        for _ in range(300):
            geom, grid, _ = random_instance(rng)
            order = rng.permutation(geom.N)
            assert run_replica(geom, grid, order=order) == first_spanning_bfs(
                geom.L, grid.horizontal, grid.vertical, order
            )

    def test_closing_bonds_never_speeds_spanning(self):
        rng = np.random.default_rng(62)
        for _ in range(200):
            geom, grid, _ = random_instance(rng)
            order = rng.permutation(geom.N)
            n1 = run_replica(geom, grid, order=order)
            closed = grid.copy()
            mask = rng.random(closed.horizontal.shape[0]) < 0.3
            closed.horizontal[mask] = 0
            closed.vertical[rng.random(mask.shape[0]) < 0.3] = 0
            n2 = run_replica(geom, closed, order=order)
            if n1 is None:
                assert n2 is None
            elif n2 is not None:
                assert n2 >= n1

    def test_virtual_nodes_agree_with_component_geometry(self):
        rng = np.random.default_rng(63)
        for _ in range(200):
            geom, grid, _ = random_instance(rng)
            order = rng.permutation(geom.N)
            n_c = run_replica(geom, grid, order=order)
            occupied = np.zeros(geom.N, dtype=np.uint8)
            prefix = order if n_c is None else order[:n_c]
            occupied[prefix] = 1
            comps = bfs_components(geom.L, grid.horizontal, grid.vertical, occupied)
            assert spans_vertically(geom.L, comps) == (n_c is not None)

    def test_either_mode_spans_no_later(self):
        rng = np.random.default_rng(64)
        for _ in range(200):
            geom, grid, _ = random_instance(rng)
            order = rng.permutation(geom.N)
            vert = run_replica(geom, grid, order=order, spanning="vertical")
            either = run_replica(geom, grid, order=order, spanning="either")
            if vert is not None:
                assert either is not None and either <= vert

    def test_argument_validation(self, rng):
        geom = LatticeGeometry(3)
        grid = BondGrid.fully_open(geom)
        with pytest.raises(ValueError):
            run_replica(geom, grid)
        with pytest.raises(ValueError):
            run_replica(geom, grid, rng, order=np.arange(9))
        with pytest.raises(ValueError):
            run_replica(geom, grid, rng, spanning="diagonal")


class TestCampaign:
    def test_open_grid_mass_conservation(self):
        geom = LatticeGeometry(8)
        hist = run_campaign(geom, BarrierModel.SQ2N_1, 0.0, 100, seed=1)
        assert int(hist.counts.sum()) + hist.nonspanning == 100
        assert hist.nonspanning == 0

    def test_deterministic_across_runs_and_workers(self):
        geom = LatticeGeometry(16)
        kw = dict(replicas=400, seed=9, chunk_size=64)
        h1 = run_campaign(geom, BarrierModel.SQ2N_2, 0.2, **kw)
        h2 = run_campaign(geom, BarrierModel.SQ2N_2, 0.2, **kw)
        h3 = run_campaign(geom, BarrierModel.SQ2N_2, 0.2, workers=2, **kw)
        for other in (h2, h3):
            assert np.array_equal(h1.counts, other.counts)
            assert (h1.nonspanning, h1.nb_sum, h1.nb_sumsq) == (
                other.nonspanning, other.nb_sum, other.nb_sumsq)

    def test_chunk_size_does_not_matter(self):
        geom = LatticeGeometry(12)
        h1 = run_campaign(geom, BarrierModel.SQ2N_1, 0.1, 300, seed=4, chunk_size=37)
        h2 = run_campaign(geom, BarrierModel.SQ2N_1, 0.1, 300, seed=4, chunk_size=128)
        assert np.array_equal(h1.counts, h2.counts)
        assert h1.nb_sumsq == h2.nb_sumsq

    def test_merge_equals_single_campaign(self):
        geom = LatticeGeometry(12)
        full = run_campaign(geom, BarrierModel.SQ2N_2, 0.3, 200, seed=8)
        a = run_campaign(geom, BarrierModel.SQ2N_2, 0.3, 120, seed=8)
        b = run_campaign(geom, BarrierModel.SQ2N_2, 0.3, 80, seed=8, replica_offset=120)
        merged = a.merge(b)
        assert np.array_equal(merged.counts, full.counts)
        assert merged.nonspanning == full.nonspanning
        assert merged.nb_sum == full.nb_sum
        assert merged.nb_sumsq == full.nb_sumsq

    def test_merge_rejects_mismatched_cells(self):
        geom = LatticeGeometry(8)
        a = run_campaign(geom, BarrierModel.SQ2N_1, 0.1, 50, seed=1)
        b = run_campaign(geom, BarrierModel.SQ2N_1, 0.2, 50, seed=1)
        with pytest.raises(ValueError):
            a.merge(b)

    def test_mass_must_match_replicas(self):
        with pytest.raises(ValueError):
            SpanningHistogram(
                L=2, model="sq2N-1", param_name="p_d", param=0.0, replicas=5,
                counts=np.array([0, 0, 1, 0, 0], dtype=np.int64), nonspanning=0,
                nb_count=5, nb_sum=0, nb_sumsq=0,
            )

    def test_replicas_validation(self):
        with pytest.raises(ValueError):
            run_campaign(LatticeGeometry(4), BarrierModel.SQ2N_1, 0.0, 0, seed=1)


class TestSnapshot:
    def test_chi_zero_all_unoccupied(self):
        snap = snapshot_largest_cluster(
            LatticeGeometry(8), BarrierModel.SQ2N_1, 0.2, 0.0, seed=3)
        assert (snap.states == UNOCCUPIED).all()
        assert snap.largest_size == 0
        assert not snap.spanning

    def test_chi_one_open_grid_single_cluster(self):
        geom = LatticeGeometry(8)
        snap = snapshot_largest_cluster(geom, BarrierModel.SQ2N_1, 0.0, 1.0, seed=3)
        assert (snap.states == LARGEST_CLUSTER).all()
        assert snap.largest_size == geom.N
        assert snap.spanning

    def test_deterministic(self):
        a = snapshot_largest_cluster(LatticeGeometry(12), BarrierModel.SQ2N_2,
                                     0.4, 0.7, seed=5)
        b = snapshot_largest_cluster(LatticeGeometry(12), BarrierModel.SQ2N_2,
                                     0.4, 0.7, seed=5)
        assert np.array_equal(a.states, b.states)

    def test_states_are_consistent(self):
        snap = snapshot_largest_cluster(LatticeGeometry(16), BarrierModel.SQ2N_2,
                                        0.3, 0.6, seed=6)
        n_largest = int((snap.states == LARGEST_CLUSTER).sum())
        assert n_largest == snap.largest_size
        assert (snap.states == OTHER_CLUSTER).sum() + n_largest \
            == (snap.states != UNOCCUPIED).sum()

    def test_corner_barriers_fragment_earlier_than_joint(self):
        # a closed fraction of 0.475 sits at the corner model's full-occupancy
        # critical density (spanning is a coin flip there) but well below the
        # joint model's 0.5, so corners must fragment far more often
        geom = LatticeGeometry(64)
        p_d = pd_for_target_qb(geom, BarrierModel.SQ2N_2_CORNERS, 0.475,
                               np.random.default_rng(70), draws=48)
        corners_spanning = 0
        joint_spanning = 0
        for k in range(100):
            snap = snapshot_largest_cluster(
                geom, BarrierModel.SQ2N_2_CORNERS, p_d, 1.0, seed=71,
                replica_index=k)
            assert snap.largest_size < geom.N
            corners_spanning += snap.spanning
            joint_spanning += snapshot_largest_cluster(
                geom, BarrierModel.JOINT_SITE_BOND, 0.475, 1.0, seed=71,
                replica_index=k).spanning
        assert corners_spanning <= 60
        assert joint_spanning - corners_spanning >= 20
