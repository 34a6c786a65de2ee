"""Render largest-cluster snapshots as ASCII art.

Fully susceptible plantation (chi = 1) with the same effective barrier
fraction under each allocation strategy. '#' marks the largest connected
cluster, '+' other clusters; the corner model breaks the lattice apart at a
barrier density where random placement still leaves a giant cluster.
"""

import numpy as np

from barrierperc import (
    BarrierModel,
    LatticeGeometry,
    pd_for_target_qb,
    snapshot_largest_cluster,
)
from barrierperc.engine import LARGEST_CLUSTER, OTHER_CLUSTER

L = 40
Q_B = 0.475
geom = LatticeGeometry(L)
CHARS = {0: " ", OTHER_CLUSTER: "+", LARGEST_CLUSTER: "#"}

for model in (BarrierModel.JOINT_SITE_BOND, BarrierModel.SQ2N_1,
              BarrierModel.SQ2N_2, BarrierModel.SQ2N_2_PARALLELS,
              BarrierModel.SQ2N_2_CORNERS):
    if model is BarrierModel.JOINT_SITE_BOND:
        param = Q_B
    else:
        param = pd_for_target_qb(geom, model, Q_B, np.random.default_rng(1),
                                 draws=48)
    snap = snapshot_largest_cluster(geom, model, param, 1.0, seed=12)
    frac = snap.largest_size / geom.N
    print(f"\n=== {model.value}  ({model.param_name} = {param:.3f}, "
          f"largest cluster {frac:.0%} of sites, spanning: {snap.spanning}) ===")
    rows = snap.states.reshape(L, L).T  # states are column-major (i*L + j)
    for j in range(L):
        print("".join(CHARS[s] for s in rows[j]))
