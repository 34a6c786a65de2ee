"""Threshold extraction, finite-size scaling, and critical-curve fits.

The per-size pipeline is two-stage: a rough tanh-sigmoid fit over a coarse
susceptibility window locates the transition, then an ordinary least-squares
fit of the log-odds ln(P/(1-P)) inside a narrow window around the midpoint
refines the threshold and width. Thermodynamic-limit values come from power
law scaling of the width and a grid-searched convergence exponent for the
threshold. Critical curves over the barrier fraction are fit with a
q-exponential (threshold vs p_d) and a power law (closed fraction vs p_d).

Width convention: the sigmoid is g(x) = (1 + tanh((x - c) / w)) / 2, whose
log-odds is exactly 2(x - c)/w. Delta_L always refers to w. The slope and
intercept recorded on LogitFit are 1/Delta_L and -chi_cL/Delta_L, i.e. half
the raw regression coefficients; the factor two is folded in when converting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

SITE_PERCOLATION_THRESHOLD = 0.59274621

# minimizer settings shared by the nonlinear fits
_STEP_TOL = 1e-8
_MAX_NFEV = 1500


class ThresholdNotReachedError(RuntimeError):
    """The curve saturates below 1/2: the threshold lies outside the window."""


class InsufficientDataError(ValueError):
    """Too few usable points for the requested fit."""


class FitFailureError(RuntimeError):
    """The minimizer diverged or the result violates its own constraints."""


def tanh_sigmoid(x, center, width):
    """g(x) = (1 + tanh((x - center)/width)) / 2."""
    return 0.5 * (1.0 + np.tanh((np.asarray(x, dtype=float) - center) / width))


def sigmoid_window(center: float, width: float, epsilon: float) -> tuple[float, float]:
    """x values where the exact sigmoid passes 1/2 -+ epsilon."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 0.5), got {epsilon}")
    half = 0.5 * width * np.log((1 + 2 * epsilon) / (1 - 2 * epsilon))
    return center - half, center + half


@dataclass
class SigmoidFit:
    """Rough threshold estimate from the full-window sigmoid fit."""

    center: float  # chi_cL*, rough threshold
    width: float  # Delta_L*, rough transition width
    epsilon: float
    window: tuple[float, float]
    residual_norm: float


def fit_sigmoid_rough(x, P, epsilon: float = 0.1) -> SigmoidFit:
    """Least-squares tanh-sigmoid fit over a coarse transition curve.

    Raises ThresholdNotReachedError when the curve never reaches 1/2, which
    signals that the threshold exceeds the sampled window.
    """
    x = np.asarray(x, dtype=float)
    P = np.asarray(P, dtype=float)
    if x.shape != P.shape or x.size < 4:
        raise InsufficientDataError("need at least 4 (x, P) points")
    if P.max() < 0.5:
        raise ThresholdNotReachedError(
            f"curve saturates at {P.max():.3f} < 0.5; threshold beyond window"
        )
    if P.min() > 0.5:
        raise ValueError("curve starts above 0.5; transition not spanned from below")

    k = int(np.argmax(P >= 0.5))
    if k == 0:
        center0 = x[0]
    else:
        center0 = x[k - 1] + (0.5 - P[k - 1]) * (x[k] - x[k - 1]) / (P[k] - P[k - 1])
    span = x[-1] - x[0]
    lo = x[np.argmax(P >= 0.25)] if (P >= 0.25).any() else x[0]
    hi = x[np.argmax(P >= 0.75)] if (P >= 0.75).any() else x[-1]
    width0 = max((hi - lo) / (2 * np.arctanh(0.5)), span / 100.0)

    res = least_squares(
        lambda th: tanh_sigmoid(x, th[0], th[1]) - P,
        x0=(center0, width0),
        method="lm",
        xtol=_STEP_TOL,
        max_nfev=_MAX_NFEV,
    )
    if not res.success:
        raise FitFailureError(f"sigmoid fit did not converge: {res.message}")
    center, width = float(res.x[0]), float(abs(res.x[1]))
    if width <= 0:
        raise FitFailureError("sigmoid fit returned a non-positive width")
    return SigmoidFit(
        center=center,
        width=width,
        epsilon=epsilon,
        window=sigmoid_window(center, width, epsilon),
        residual_norm=float(np.sqrt(2 * res.cost)),
    )


@dataclass
class LogitFit:
    """Refined threshold from the linear log-odds fit inside the window.

    The standard errors come from the regression residuals; on a smooth
    convolved curve they measure only how linear the log-odds is, not the
    campaign's statistical noise.
    """

    chi_cL: float
    Delta_L: float
    slope: float  # 1 / Delta_L
    intercept: float  # -chi_cL / Delta_L
    n_points: int
    residual_norm: float
    chi_cL_se: float
    Delta_L_se: float


def fit_logit(x, P) -> LogitFit:
    """OLS of ln(P/(1-P)) against x; points at P in {0, 1} are excluded."""
    x = np.asarray(x, dtype=float)
    P = np.asarray(P, dtype=float)
    mask = (P > 0.0) & (P < 1.0)
    n = int(mask.sum())
    if n < 3:
        raise InsufficientDataError(
            f"only {n} points strictly inside (0, 1); need at least 3"
        )
    xs = x[mask]
    y = np.log(P[mask] / (1.0 - P[mask]))
    A = np.column_stack([xs, np.ones(n)])
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    a, b = float(coef[0]), float(coef[1])
    if a <= 0:
        raise FitFailureError("log-odds slope is not positive; data not increasing")
    resid = y - A @ coef
    ssr = float(resid @ resid)
    dof = n - 2
    sigma2 = ssr / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(A.T @ A)
    var_a, var_b, cov_ab = cov[0, 0], cov[1, 1], cov[0, 1]
    # log-odds of the sigmoid is 2(x - c)/w: halve raw coefficients to report
    # the 1/Delta_L convention, and convert variances accordingly
    delta = 2.0 / a
    chi_c = -b / a
    var_chi = (b / a**2) ** 2 * var_a + var_b / a**2 - 2 * (b / a**3) * cov_ab
    return LogitFit(
        chi_cL=chi_c,
        Delta_L=delta,
        slope=1.0 / delta,
        intercept=-chi_c / delta,
        n_points=n,
        residual_norm=float(np.sqrt(ssr)),
        chi_cL_se=float(np.sqrt(max(var_chi, 0.0))),
        Delta_L_se=float(2.0 * np.sqrt(var_a) / a**2),
    )


@dataclass
class ThresholdEstimate:
    """Result of the two-stage per-size pipeline."""

    chi_cL: float
    Delta_L: float
    rough: SigmoidFit
    logit: LogitFit


def estimate_threshold(
    curve_fn,
    *,
    coarse_lo: float = 0.1,
    coarse_hi: float = 1.0,
    coarse_points: int = 91,
    window_points: int = 201,
    epsilon: float = 0.1,
    clamp: tuple[float, float] = (1e-6, 1.0 - 1e-6),
) -> ThresholdEstimate:
    """Rough sigmoid fit on a coarse grid, then log-odds refinement.

    `curve_fn` maps an array of susceptibilities to spanning probabilities;
    it is evaluated twice, the second time on `window_points` points inside
    the rough fit's half-height window.
    """
    coarse = np.linspace(coarse_lo, coarse_hi, coarse_points)
    rough = fit_sigmoid_rough(coarse, curve_fn(coarse), epsilon)
    lo = max(rough.window[0], clamp[0])
    hi = min(rough.window[1], clamp[1])
    if not lo < hi:
        raise FitFailureError(f"degenerate refinement window ({lo}, {hi})")
    fine = np.linspace(lo, hi, window_points)
    logit = fit_logit(fine, curve_fn(fine))
    return ThresholdEstimate(
        chi_cL=logit.chi_cL, Delta_L=logit.Delta_L, rough=rough, logit=logit
    )


def estimate_threshold_from_points(x, P, epsilon: float = 0.1) -> ThresholdEstimate:
    """Two-stage estimate when the curve exists only at fixed sample points."""
    x = np.asarray(x, dtype=float)
    P = np.asarray(P, dtype=float)
    rough = fit_sigmoid_rough(x, P, epsilon)
    lo, hi = rough.window
    mask = (x >= lo) & (x <= hi)
    if mask.sum() < 3:
        raise InsufficientDataError(
            f"only {int(mask.sum())} sample points inside window ({lo:.4g}, {hi:.4g})"
        )
    logit = fit_logit(x[mask], P[mask])
    return ThresholdEstimate(
        chi_cL=logit.chi_cL, Delta_L=logit.Delta_L, rough=rough, logit=logit
    )


def _ols(x, y):
    """Slope, intercept, their variances, and R^2 of a plain line fit."""
    n = x.size
    A = np.column_stack([x, np.ones(n)])
    coef, _, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ssr = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    dof = n - 2
    if dof > 0:
        cov = (ssr / dof) * np.linalg.inv(A.T @ A)
        var = (float(cov[0, 0]), float(cov[1, 1]))
    else:
        var = (float("nan"), float("nan"))
    return float(coef[0]), float(coef[1]), var, r2


@dataclass
class WidthScalingFit:
    """Correlation-length exponent from Delta_L ~ L^(-1/nu)."""

    nu: float
    nu_se: float
    r_squared: float
    n_points: int
    low_confidence: bool  # set when only two sizes were supplied


def fit_width_scaling(sizes, widths) -> WidthScalingFit:
    """Log-log regression of transition widths against lattice size."""
    sizes = np.asarray(sizes, dtype=float)
    widths = np.asarray(widths, dtype=float)
    if (widths <= 0).any():
        raise ValueError("transition widths must be positive")
    if sizes.size < 2:
        raise InsufficientDataError("need at least 2 sizes")
    slope, _, (var_slope, _), r2 = _ols(np.log(sizes), np.log(widths))
    if slope >= 0:
        raise FitFailureError("widths do not shrink with size")
    nu = -1.0 / slope
    nu_se = float(np.sqrt(var_slope) / slope**2) if np.isfinite(var_slope) else float("nan")
    return WidthScalingFit(
        nu=nu, nu_se=nu_se, r_squared=r2, n_points=int(sizes.size),
        low_confidence=sizes.size < 3,
    )


@dataclass
class FssFit:
    """Thermodynamic-limit threshold from the L^alpha extrapolation."""

    chi_c: float
    chi_c_se: float
    alpha: float
    r_squared: float
    n_points: int
    poor_scaling: bool  # best R^2 below 0.9
    sizes: np.ndarray = field(repr=False, default=None)
    chi_cL: np.ndarray = field(repr=False, default=None)


def fit_threshold_scaling(
    sizes,
    thresholds,
    *,
    alpha_lo: float = -2.5,
    alpha_hi: float = -1.0,
    alpha_step: float = 0.005,
    r2_floor: float = 0.9,
) -> FssFit:
    """Grid-search the convergence exponent, extrapolate chi_cL to L -> inf.

    For each alpha on the grid, chi_cL is regressed linearly on L^alpha; the
    alpha maximizing R^2 wins and the intercept is the infinite-size
    threshold. A best R^2 below `r2_floor` flags the result as poor scaling
    without failing it.
    """
    sizes = np.asarray(sizes, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    if sizes.size < 4:
        raise InsufficientDataError("need at least 4 sizes for the extrapolation")
    alphas = np.arange(alpha_lo, alpha_hi + alpha_step / 2, alpha_step)
    X = sizes[None, :] ** alphas[:, None]
    xm = X.mean(axis=1)
    ym = thresholds.mean()
    var_x = (X**2).mean(axis=1) - xm**2
    cov_xy = (X * thresholds).mean(axis=1) - xm * ym
    slopes = cov_xy / var_x
    sst = float(((thresholds - ym) ** 2).sum())
    ssr = sst - sizes.size * slopes * cov_xy
    r2 = 1.0 - ssr / sst if sst > 0 else np.ones_like(slopes)
    best = int(np.argmax(r2))
    alpha = float(alphas[best])
    slope, intercept, (_, var_int), best_r2 = _ols(sizes**alpha, thresholds)
    return FssFit(
        chi_c=intercept,
        chi_c_se=float(np.sqrt(var_int)) if np.isfinite(var_int) else float("nan"),
        alpha=alpha,
        r_squared=best_r2,
        n_points=int(sizes.size),
        poor_scaling=best_r2 < r2_floor,
        sizes=sizes,
        chi_cL=thresholds,
    )


def q_exponential(x, q: float):
    """(1 + (1-q) x)^(1/(1-q)); the ordinary exponential at q = 1.

    Raises ValueError outside the support 1 + (1-q) x > 0.
    """
    x = np.asarray(x, dtype=float)
    if q == 1.0:
        out = np.exp(x)
        return float(out) if out.ndim == 0 else out
    base = 1.0 + (1.0 - q) * x
    if np.any(base <= 0.0):
        raise ValueError(f"argument outside q-exponential support for q={q}")
    out = np.exp(np.log1p((1.0 - q) * x) / (1.0 - q))
    return float(out) if out.ndim == 0 else out


@dataclass
class QExpFit:
    """Critical curve chi_c(p_d) = p_cs / e_q(-lambda p_d) with p_cs pinned."""

    lam: float
    q: float
    lam_se: float
    q_se: float
    p_cs: float
    n_points: int
    residual_norm: float

    def chi_c(self, p_d):
        """Evaluate the fitted critical curve."""
        return self.p_cs / q_exponential(-self.lam * np.asarray(p_d, dtype=float), self.q)


def _qexp_residual(theta, p_d, chi_c, p_cs, inv_err):
    lam, q = theta
    arg = -lam * p_d
    base = 1.0 + (1.0 - q) * arg
    out = np.empty_like(p_d)
    bad = base <= 0.0
    good = ~bad
    if good.any():
        if abs(1.0 - q) < 1e-12:
            eq = np.exp(arg[good])
        else:
            eq = np.exp(np.log1p((1.0 - q) * arg[good]) / (1.0 - q))
        out[good] = (p_cs / eq - chi_c[good]) * inv_err[good]
    # finite penalty outside the support keeps the minimizer recoverable
    out[bad] = 1e3 * (1.0 + np.abs(base[bad]))
    return out


def _inverse_errors(errors, n):
    if errors is None:
        return np.ones(n)
    errors = np.asarray(errors, dtype=float)
    if (errors <= 0).any():
        raise ValueError("per-point errors must be positive")
    return 1.0 / errors


def fit_qexp_curve(
    p_d, chi_c, p_cs: float = SITE_PERCOLATION_THRESHOLD, errors=None
) -> QExpFit:
    """Nonlinear least squares for (lambda, q) of the critical curve.

    lambda starts from the small-p_d slope (the curve is ~ p_cs(1 + lambda p_d)
    there) and q from 0; iterations run to relative step tolerance 1e-8.
    Unweighted by default; pass per-point standard errors for an
    inverse-variance weighted fit.
    """
    p_d = np.asarray(p_d, dtype=float)
    chi_c = np.asarray(chi_c, dtype=float)
    if p_d.size < 4:
        raise InsufficientDataError("need at least 4 (p_d, chi_c) points")
    at_zero = p_d == 0
    if at_zero.any() and np.abs(chi_c[at_zero] - p_cs).max() > 0.05:
        raise ValueError("p_d = 0 point inconsistent with the pure-site threshold")
    inv_err = _inverse_errors(errors, p_d.size)
    pos = p_d > 0
    if pos.any():
        k = int(np.argmin(np.where(pos, p_d, np.inf)))
        lam0 = max((chi_c[k] / p_cs - 1.0) / p_d[k], 0.05)
    else:
        lam0 = 0.5
    res = least_squares(
        _qexp_residual,
        x0=(lam0, 0.0),
        args=(p_d, chi_c, p_cs, inv_err),
        method="lm",
        xtol=_STEP_TOL,
        max_nfev=_MAX_NFEV,
    )
    if not res.success:
        raise FitFailureError(f"q-exponential fit did not converge: {res.message}")
    lam, q = float(res.x[0]), float(res.x[1])
    if q < 1.0 and lam * (1.0 - q) * p_d.max() >= 1.0:
        raise FitFailureError("fitted parameters violate the support condition")
    ses = _nls_parameter_se(res, p_d.size, 2)
    return QExpFit(
        lam=lam, q=q, lam_se=ses[0], q_se=ses[1], p_cs=p_cs,
        n_points=int(p_d.size), residual_norm=float(np.sqrt(2 * res.cost)),
    )


@dataclass
class PowerLawFit:
    """Effective barrier fraction q_b(p_d) = sigma * p_d^tau."""

    sigma: float
    tau: float
    sigma_se: float
    tau_se: float
    n_points: int
    residual_norm: float

    def q_b(self, p_d):
        """Evaluate the fitted power law."""
        return self.sigma * np.asarray(p_d, dtype=float) ** self.tau


def fit_power_law(p_d, q_b, errors=None) -> PowerLawFit:
    """Fit sigma * p_d^tau; log-log regression seeds a fit in data space.

    Points with non-positive q_b (or p_d) are excluded before fitting.
    Unweighted by default; pass per-point standard errors for an
    inverse-variance weighted fit.
    """
    p_d = np.asarray(p_d, dtype=float)
    q_b = np.asarray(q_b, dtype=float)
    mask = (p_d > 0) & (q_b > 0)
    if not mask.any():
        raise ValueError("no points with positive p_d and q_b")
    if mask.sum() < 3:
        raise InsufficientDataError("need at least 3 positive (p_d, q_b) points")
    ps = p_d[mask]
    qs = q_b[mask]
    inv_err = _inverse_errors(None if errors is None else np.asarray(errors)[mask],
                              ps.size)
    tau0, lnsig0, _, _ = _ols(np.log(ps), np.log(qs))
    res = least_squares(
        lambda th: (th[0] * ps ** th[1] - qs) * inv_err,
        x0=(np.exp(lnsig0), tau0),
        method="lm",
        xtol=_STEP_TOL,
        max_nfev=_MAX_NFEV,
    )
    if not res.success:
        raise FitFailureError(f"power-law fit did not converge: {res.message}")
    sigma, tau = float(res.x[0]), float(res.x[1])
    if sigma <= 0:
        raise FitFailureError("power-law fit returned a non-positive prefactor")
    ses = _nls_parameter_se(res, int(mask.sum()), 2)
    return PowerLawFit(
        sigma=sigma, tau=tau, sigma_se=ses[0], tau_se=ses[1],
        n_points=int(mask.sum()), residual_norm=float(np.sqrt(2 * res.cost)),
    )


def _nls_parameter_se(res, n_points: int, n_params: int) -> np.ndarray:
    """Asymptotic standard errors from the final Jacobian."""
    dof = n_points - n_params
    if dof <= 0:
        return np.full(n_params, np.nan)
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * (2 * res.cost / dof)
    except np.linalg.LinAlgError:
        return np.full(n_params, np.nan)
    return np.sqrt(np.maximum(np.diag(cov), 0.0))
