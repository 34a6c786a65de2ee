"""Barrier-strategy cost comparison against the joint site-bond baseline.

The baseline critical curve ties the site and bond occupation probabilities
through p_b = B / (p_s + A), with A and B fixed by the pure-site and
pure-bond thresholds. Inverting a model's fitted critical curve gives the
barrier fraction it needs to reach a target susceptibility; the relative
cost is the percent difference against the baseline's barrier fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import cumulative, percolation_probability
from .engine import run_campaign
from .fitting import (
    SITE_PERCOLATION_THRESHOLD,
    PowerLawFit,
    QExpFit,
    ThresholdEstimate,
    fit_logit,
    fit_sigmoid_rough,
)
from .lattice import BarrierModel, LatticeGeometry

BOND_PERCOLATION_THRESHOLD = 0.5


class OutOfModelRangeError(ValueError):
    """The requested susceptibility is beyond the model's reachable range."""


@dataclass(frozen=True)
class JointCurve:
    """Empirical joint site-bond critical curve p_b = B / (p_s + A)."""

    p_cb: float = BOND_PERCOLATION_THRESHOLD
    p_cs: float = SITE_PERCOLATION_THRESHOLD

    @property
    def A(self) -> float:
        return (self.p_cb - self.p_cs) / (1.0 - self.p_cb)

    @property
    def B(self) -> float:
        return self.p_cb * (1.0 - self.p_cs) / (1.0 - self.p_cb)

    def bond_threshold(self, p_s):
        """Critical bond probability at site occupation p_s."""
        p_s = np.asarray(p_s, dtype=float)
        if np.any(p_s < self.p_cs) or np.any(p_s > 1.0):
            raise ValueError(
                f"p_s must lie in [{self.p_cs}, 1]; no finite bond threshold below"
            )
        out = self.B / (p_s + self.A)
        return float(out) if out.ndim == 0 else out

    def barrier_fraction(self, chi_c):
        """Baseline closed-bond fraction needed for critical susceptibility chi_c."""
        out = 1.0 - self.bond_threshold(chi_c)
        return out


def pd_of_chi(chi_c, fit: QExpFit):
    """Invert the fitted critical curve: the p_d giving susceptibility chi_c."""
    chi_c = np.asarray(chi_c, dtype=float)
    if np.any(chi_c < fit.p_cs):
        raise ValueError(f"chi_c below the pure-site threshold {fit.p_cs}")
    ratio = fit.p_cs / chi_c
    if fit.q == 1.0:
        out = np.log(1.0 / ratio) / fit.lam
    else:
        out = (1.0 - ratio ** (1.0 - fit.q)) / ((1.0 - fit.q) * fit.lam)
    if np.any(out > 1.0 + 1e-12):
        raise OutOfModelRangeError(
            "requested susceptibility needs p_d > 1 for this model"
        )
    out = np.minimum(out, 1.0)
    return float(out) if out.ndim == 0 else out


def qb_of_chi(chi_c, qexp: QExpFit, power: PowerLawFit):
    """Barrier fraction the model needs to reach chi_c: power law of the inverse."""
    return power.q_b(pd_of_chi(chi_c, qexp))


@dataclass
class CostResult:
    """Cost of one strategy at one target susceptibility; eta < 0 is a saving."""

    chi_c: float
    q_b_model: float
    q_b_joint: float
    eta: float  # percent
    eta_se: float = float("nan")


def relative_cost(
    chi_c: float,
    qexp: QExpFit,
    power: PowerLawFit,
    joint: JointCurve | None = None,
    with_uncertainty: bool = False,
) -> CostResult:
    """Percent barrier-cost difference against the joint site-bond baseline.

    With `with_uncertainty`, eta_se carries the first-order propagation of the
    four fit standard errors, treated as independent.
    """
    joint = joint or JointCurve()
    qb_joint = float(joint.barrier_fraction(chi_c))
    if qb_joint <= 0.0:
        raise ValueError(
            "baseline barrier fraction vanishes at the pure-site threshold; "
            "the cost ratio is undefined there"
        )
    qb_model = float(qb_of_chi(chi_c, qexp, power))
    eta_se = float("nan")
    if with_uncertainty:
        eta_se = _propagate_eta_se(chi_c, qexp, power, qb_joint)
    return CostResult(
        chi_c=float(chi_c),
        q_b_model=qb_model,
        q_b_joint=qb_joint,
        eta=100.0 * (qb_model - qb_joint) / qb_joint,
        eta_se=eta_se,
    )


def _propagate_eta_se(chi_c, qexp, power, qb_joint) -> float:
    """Quadrature sum of central-difference sensitivities times the fit SEs."""
    from dataclasses import replace

    def eta_at(qe, pw):
        return 100.0 * (float(qb_of_chi(chi_c, qe, pw)) - qb_joint) / qb_joint

    var = 0.0
    for field_name, se, target in (
        ("lam", qexp.lam_se, "qexp"),
        ("q", qexp.q_se, "qexp"),
        ("sigma", power.sigma_se, "power"),
        ("tau", power.tau_se, "power"),
    ):
        if not se or not np.isfinite(se):
            continue
        h = 1e-6 * max(1.0, abs(getattr(qexp if target == "qexp" else power,
                                        field_name)))
        lo_obj = hi_obj = None
        if target == "qexp":
            lo_obj = replace(qexp, **{field_name: getattr(qexp, field_name) - h})
            hi_obj = replace(qexp, **{field_name: getattr(qexp, field_name) + h})
            deriv = (eta_at(hi_obj, power) - eta_at(lo_obj, power)) / (2 * h)
        else:
            lo_obj = replace(power, **{field_name: getattr(power, field_name) - h})
            hi_obj = replace(power, **{field_name: getattr(power, field_name) + h})
            deriv = (eta_at(qexp, hi_obj) - eta_at(qexp, lo_obj)) / (2 * h)
        var += (deriv * se) ** 2
    return float(np.sqrt(var))


def joint_bond_threshold_scan(
    geometry: LatticeGeometry,
    chi: float,
    replicas: int,
    seed: int,
    *,
    workers: int = 1,
    epsilon: float = 0.1,
    coarse_points: int = 9,
    window_points: int = 9,
    center_guess: float = BOND_PERCOLATION_THRESHOLD,
    width_guess: float | None = None,
) -> ThresholdEstimate:
    """Critical bond probability at fixed site occupation chi, by simulation.

    Validates the empirical joint curve: campaigns run over a coarse p_b grid
    around the guess, the sigmoid fit locates the transition, and a second
    round of campaigns inside the half-height window feeds the log-odds
    refinement. The transition width shrinks like L^(-3/4), so both grids
    adapt to the guessed width.
    """
    if width_guess is None:
        width_guess = 0.55 * geometry.L ** -0.75

    def spanning_at(p_b_values):
        out = np.empty(len(p_b_values))
        for k, p_b in enumerate(p_b_values):
            hist = run_campaign(
                geometry, BarrierModel.JOINT_SITE_BOND, 1.0 - float(p_b),
                replicas, seed, workers=workers,
            )
            F = cumulative(hist)
            out[k] = percolation_probability(F, np.array([chi]), L=geometry.L).P[0]
        return out

    lo = max(center_guess - 2.5 * width_guess, 0.02)
    hi = min(center_guess + 2.5 * width_guess, 0.98)
    coarse = np.linspace(lo, hi, coarse_points)
    rough = fit_sigmoid_rough(coarse, spanning_at(coarse), epsilon)
    fine = np.linspace(max(rough.window[0], 0.02), min(rough.window[1], 0.98),
                       window_points)
    logit = fit_logit(fine, spanning_at(fine))
    return ThresholdEstimate(
        chi_cL=logit.chi_cL, Delta_L=logit.Delta_L, rough=rough, logit=logit
    )


def cost_table(
    qexp: QExpFit,
    power: PowerLawFit,
    *,
    joint: JointCurve | None = None,
    lo: float | None = None,
    hi: float = 1.0,
    points: int = 71,
) -> list[CostResult]:
    """Cost curve over a susceptibility range, clipped to the model's reach.

    The default range starts just above the pure-site threshold (where the
    ratio is defined) and stops at min(hi, chi_c(p_d = 1)).
    """
    joint = joint or JointCurve()
    if lo is None:
        lo = qexp.p_cs + 0.01
    chi_max = float(qexp.chi_c(1.0))
    hi = min(hi, chi_max)
    if not lo < hi:
        raise ValueError(f"empty cost range: lo={lo}, hi={hi}")
    return [
        relative_cost(chi, qexp, power, joint)
        for chi in np.linspace(lo, hi, points)
    ]
