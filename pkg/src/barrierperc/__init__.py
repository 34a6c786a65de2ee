"""Monte Carlo percolation toolkit for random barrier allocation on square lattices.

Workflow: simulate first-spanning histograms per lattice size and barrier
fraction (`engine`), convolve them into percolation-probability curves
(`analysis`), extract and extrapolate thresholds (`fitting`), and compare
barrier strategies against the joint site-bond baseline (`costmodel`).
The `cli` module drives the full pipeline from a JSON config.
"""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    BarrierAllocation,
    BarrierModel,
    BondGrid,
    LatticeGeometry,
    allocate_barriers,
    allocate_joint_bonds,
    allocation_stats,
    incident_bonds,
    pd_for_target_qb,
    site_coords,
    site_index,
)
from .engine import (  # noqa: F401
    Snapshot,
    SpanningHistogram,
    UnionFind,
    run_campaign,
    run_replica,
    snapshot_largest_cluster,
)
from .analysis import (  # noqa: F401
    PercolationCurve,
    binomial_weights,
    cumulative,
    curve_from_histogram,
    effective_barrier_fraction,
    percolation_probability,
)
from .fitting import (  # noqa: F401
    FitFailureError,
    FssFit,
    InsufficientDataError,
    LogitFit,
    PowerLawFit,
    QExpFit,
    SigmoidFit,
    SITE_PERCOLATION_THRESHOLD,
    ThresholdEstimate,
    ThresholdNotReachedError,
    WidthScalingFit,
    estimate_threshold,
    estimate_threshold_from_points,
    fit_logit,
    fit_power_law,
    fit_qexp_curve,
    fit_sigmoid_rough,
    fit_threshold_scaling,
    fit_width_scaling,
    q_exponential,
    sigmoid_window,
    tanh_sigmoid,
)
from .costmodel import (  # noqa: F401
    BOND_PERCOLATION_THRESHOLD,
    CostResult,
    JointCurve,
    OutOfModelRangeError,
    cost_table,
    joint_bond_threshold_scan,
    pd_of_chi,
    qb_of_chi,
    relative_cost,
)
