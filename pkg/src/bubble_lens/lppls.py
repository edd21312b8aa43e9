"""LPPLS forward model and two-step grid calibration.

The log-price model is

    ln p(t) = A + B*(tc - t)^beta
            + (tc - t)^beta * [C1*cos(w*ln(tc - t)) + C2*sin(w*ln(tc - t))]

which equals the amplitude/phase form A + B*f + C*f*cos(w*ln(tc - t) + phi)
under C1 = C*cos(phi), C2 = -C*sin(phi), f = (tc - t)^beta.

Calibration is two-step: the nonlinear triplet (tc, beta, omega) is scanned
on a grid, and at every grid point the linear coefficients (A, B, C1, C2)
solve an ordinary least-squares problem. The grid point with the lowest
root-mean-square error wins. The scan runs on batched normal equations for
speed; the winner is then re-solved with a QR-based least-squares factorization
so the reported coefficients and RMSE do not inherit normal-equation rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllGridPointsDegenerate,
    InvalidNonlinearParams,
    RankDeficient,
    TimeAtOrPastCritical,
    WindowTooShort,
)
from .timeseries import MIN_OBSERVATIONS, PriceSeries, Window

__all__ = [
    "GridSpec",
    "LpplsParams",
    "FitResult",
    "derive_canonical",
    "lppls_eval",
    "design_matrix",
    "ols_solve",
    "fit_window",
    "calibrate",
]

# Relative eigenvalue floor below which a grid point's 4x4 normal matrix is
# treated as rank deficient and skipped.
_DEGENERATE_EIG = 1e-10


def derive_canonical(c1: float, c2: float, omega: float) -> tuple[float, float, float]:
    """Oscillation magnitude, phase, and characteristic scale from (C1, C2).

    Returns (C, phi, tau) with C = sqrt(C1^2 + C2^2), phi = atan2(-C2, C1)
    in (-pi, pi], and tau = exp(-phi/omega). tau is the fraction of the
    time-to-critical at which oscillations effectively set in; values above
    1 (negative phi) have no such reading and are flagged downstream.
    """
    if not omega > 0:
        raise InvalidNonlinearParams(f"omega must be positive, got {omega}")
    c = math.hypot(c1, c2)
    phi = math.atan2(-c2, c1)
    return c, phi, math.exp(-phi / omega)


@dataclass(frozen=True)
class LpplsParams:
    """Full parameter set: nonlinear (tc, beta, omega) + linear (a, b, c1, c2).

    tc is in window-local trading days (t = 0 at the first observation of
    the calibration window). Derived quantities are exposed as properties.
    """

    tc: float
    beta: float
    omega: float
    a: float
    b: float
    c1: float
    c2: float

    @property
    def c(self) -> float:
        return derive_canonical(self.c1, self.c2, self.omega)[0]

    @property
    def phi(self) -> float:
        return derive_canonical(self.c1, self.c2, self.omega)[1]

    @property
    def tau(self) -> float:
        return derive_canonical(self.c1, self.c2, self.omega)[2]


@dataclass(frozen=True)
class GridSpec:
    """Search grid for the nonlinear triplet.

    tc is specified as an offset beyond the last observation of the window
    (window-local t_max), so one spec applies to windows of any length:
    tc runs over [t_max + tc_margin[0], t_max + tc_margin[1]] in steps of
    tc_step trading days. beta and omega are uniform grids over their
    ranges, endpoints included.
    """

    tc_margin: tuple[float, float] = (10.0, 200.0)
    tc_step: float = 2.0
    beta_range: tuple[float, float] = (0.1, 1.0)
    n_beta: int = 30
    omega_range: tuple[float, float] = (6.0, 13.0)
    n_omega: int = 20

    def __post_init__(self):
        lo, hi = self.tc_margin
        if not (0 < lo <= hi):
            raise ValueError(f"tc_margin must satisfy 0 < lo <= hi, got {self.tc_margin}")
        if not self.tc_step > 0:
            raise ValueError("tc_step must be positive")
        if not (0 < self.beta_range[0] <= self.beta_range[1] <= 1.0):
            raise ValueError(f"beta_range must lie in (0, 1], got {self.beta_range}")
        if not (0 < self.omega_range[0] <= self.omega_range[1]):
            raise ValueError(f"omega_range must be positive, got {self.omega_range}")
        if self.n_beta < 1 or self.n_omega < 1:
            raise ValueError("grid counts must be positive")

    def tc_offsets(self) -> np.ndarray:
        lo, hi = self.tc_margin
        n = int(math.floor((hi - lo) / self.tc_step + 1e-9)) + 1
        return lo + self.tc_step * np.arange(n)

    def tc_values(self, t_max: float) -> np.ndarray:
        return t_max + self.tc_offsets()

    def beta_values(self) -> np.ndarray:
        return np.linspace(self.beta_range[0], self.beta_range[1], self.n_beta)

    def omega_values(self) -> np.ndarray:
        return np.linspace(self.omega_range[0], self.omega_range[1], self.n_omega)

    def to_dict(self) -> dict:
        return {
            "tc_margin": list(self.tc_margin),
            "tc_step": self.tc_step,
            "beta_range": list(self.beta_range),
            "n_beta": self.n_beta,
            "omega_range": list(self.omega_range),
            "n_omega": self.n_omega,
        }


@dataclass(frozen=True)
class FitResult:
    """Winning calibration for one window."""

    params: LpplsParams
    window: Window
    rmse: float
    n_obs: int
    converged_on_boundary: dict = field(default_factory=dict)
    n_degenerate_grid_points: int = 0
    grid: GridSpec = GridSpec()


def lppls_eval(params: LpplsParams, t):
    """Model log-price at window-local time(s) t. Requires t < tc."""
    t = np.asarray(t, dtype=float)
    dt = params.tc - t
    if np.any(dt <= 0):
        raise TimeAtOrPastCritical(f"t must be < tc = {params.tc}")
    f = dt**params.beta
    phase = params.omega * np.log(dt)
    out = params.a + f * (
        params.b + params.c1 * np.cos(phase) + params.c2 * np.sin(phase)
    )
    return out if out.ndim else float(out)


def _times_of(series_or_t) -> np.ndarray:
    if isinstance(series_or_t, PriceSeries):
        return series_or_t.t_index.astype(float)
    return np.asarray(series_or_t, dtype=float)


def design_matrix(series_or_t, tc: float, beta: float, omega: float) -> np.ndarray:
    """N x 4 design [1, f, f*cos(w*ln(tc-t)), f*sin(w*ln(tc-t))], f = (tc-t)^beta."""
    t = _times_of(series_or_t)
    if not tc > t.max():
        raise InvalidNonlinearParams(f"tc = {tc} must exceed the last time {t.max()}")
    if not 0 < beta <= 1.0:
        raise InvalidNonlinearParams(f"beta = {beta} outside (0, 1]")
    if not omega > 0:
        raise InvalidNonlinearParams(f"omega = {omega} must be positive")
    dt = tc - t
    f = dt**beta
    phase = omega * np.log(dt)
    return np.column_stack([np.ones_like(t), f, f * np.cos(phase), f * np.sin(phase)])


def ols_solve(X: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float, float]:
    """Least-squares (A, B, C1, C2, rss) via a rank-revealing QR/SVD solve."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != 4:
        raise ValueError(f"X must be N x 4, got {X.shape}")
    if X.shape[0] < 5:
        raise ValueError(f"need at least 5 observations, got {X.shape[0]}")
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < 4:
        raise RankDeficient(f"design matrix has rank {rank} < 4")
    r = y - X @ coef
    return float(coef[0]), float(coef[1]), float(coef[2]), float(coef[3]), float(r @ r)


def _scan_grid(t, y, tc_vals, beta_vals, omega_vals):
    """Grid scan via batched 4x4 normal equations.

    Returns (best_itc, best_ibeta, best_iomega, n_degenerate). Selection uses
    a residual sum computed from the centered quadratic form; ties resolve to
    the smallest tc, then beta, then omega because earlier candidates win only
    on a strict improvement and the flattened argmin takes the first minimum.
    """
    n = t.size
    yc = y - y.mean()
    yy = float(yc @ yc)
    nb, nw = beta_vals.size, omega_vals.size
    eye = np.eye(4)
    best_rss = np.inf
    best = (-1, -1, -1)
    n_degenerate = 0
    for itc, tc in enumerate(tc_vals):
        dt = tc - t
        logdt = np.log(dt)
        F = dt[None, :] ** beta_vals[:, None]  # (nb, n)
        cos = np.cos(omega_vals[:, None] * logdt[None, :])  # (nw, n)
        sin = np.sin(omega_vals[:, None] * logdt[None, :])
        F2 = F * F
        Fy = F * yc[None, :]

        s_f = F.sum(axis=1)
        s_ff = F2.sum(axis=1)
        s_fc = F @ cos.T
        s_fs = F @ sin.T
        s_ffc = F2 @ cos.T
        s_ffs = F2 @ sin.T
        s_ffcc = F2 @ (cos * cos).T
        s_ffss = F2 @ (sin * sin).T
        s_ffcs = F2 @ (cos * sin).T
        s_yf = F @ yc
        s_yfc = Fy @ cos.T
        s_yfs = Fy @ sin.T

        G = np.empty((nb, nw, 4, 4))
        G[..., 0, 0] = n
        G[..., 0, 1] = G[..., 1, 0] = s_f[:, None]
        G[..., 0, 2] = G[..., 2, 0] = s_fc
        G[..., 0, 3] = G[..., 3, 0] = s_fs
        G[..., 1, 1] = s_ff[:, None]
        G[..., 1, 2] = G[..., 2, 1] = s_ffc
        G[..., 1, 3] = G[..., 3, 1] = s_ffs
        G[..., 2, 2] = s_ffcc
        G[..., 2, 3] = G[..., 3, 2] = s_ffcs
        G[..., 3, 3] = s_ffss

        rhs = np.empty((nb, nw, 4))
        rhs[..., 0] = 0.0  # y is centered
        rhs[..., 1] = s_yf[:, None]
        rhs[..., 2] = s_yfc
        rhs[..., 3] = s_yfs

        diag = np.einsum("...ii->...i", G)
        bad = (diag <= 0).any(axis=-1)
        scale = np.where(diag > 0, np.sqrt(diag), 1.0)
        Gs = G / scale[..., None, :] / scale[..., :, None]
        bad |= np.linalg.eigvalsh(Gs)[..., 0] < _DEGENERATE_EIG
        n_degenerate += int(bad.sum())

        solvable = np.where(bad[..., None, None], eye, G)
        theta = np.linalg.solve(solvable, rhs[..., None])[..., 0]
        rss = yy - np.einsum("...i,...i->...", theta, rhs)
        rss = np.where(bad, np.inf, np.maximum(rss, 0.0))

        k = int(np.argmin(rss))
        ib, iw = divmod(k, nw)
        if rss[ib, iw] < best_rss:
            best_rss = float(rss[ib, iw])
            best = (itc, ib, iw)
    if best[0] < 0:
        raise AllGridPointsDegenerate(
            f"all {tc_vals.size * nb * nw} grid points were rank deficient"
        )
    return best, n_degenerate


def _solve_triplet(t, y, tc, beta, omega):
    X = design_matrix(t, tc, beta, omega)
    a, b, c1, c2, rss = ols_solve(X, y)
    return LpplsParams(float(tc), float(beta), float(omega), a, b, c1, c2), rss


def _polish_triplet(t, y, grid, itc, ib, iw):
    """Optional Nelder-Mead refinement within one grid cell around the winner."""
    from scipy.optimize import Bounds, minimize

    tc_vals = grid.tc_values(t.max())
    beta_vals = grid.beta_values()
    omega_vals = grid.omega_values()

    def cell(vals, i, floor, ceil):
        lo = vals[max(i - 1, 0)]
        hi = vals[min(i + 1, vals.size - 1)]
        return max(lo, floor), min(hi, ceil)

    tiny = 1e-9
    lo_tc, hi_tc = cell(tc_vals, itc, t.max() + tiny, np.inf)
    lo_b, hi_b = cell(beta_vals, ib, tiny, 1.0)
    lo_w, hi_w = cell(omega_vals, iw, tiny, np.inf)

    def objective(x):
        try:
            _, rss = _solve_triplet(t, y, x[0], x[1], x[2])
        except (InvalidNonlinearParams, RankDeficient):
            return np.inf
        return rss

    res = minimize(
        objective,
        x0=np.array([tc_vals[itc], beta_vals[ib], omega_vals[iw]]),
        method="Nelder-Mead",
        bounds=Bounds([lo_tc, lo_b, lo_w], [hi_tc, hi_b, hi_w]),
        options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": 500},
    )
    return float(res.x[0]), float(res.x[1]), float(res.x[2])


def calibrate(t, y, grid: GridSpec | None = None, refine: bool = False):
    """Core two-step calibration on window-local times t (t[0] == 0).

    Returns (params, rmse, boundary_flags, n_degenerate). Deterministic:
    the scan order and tie-break are fixed, independent of any parallelism
    in the caller.
    """
    grid = grid or GridSpec()
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    tc_vals = grid.tc_values(t.max())
    beta_vals = grid.beta_values()
    omega_vals = grid.omega_values()
    (itc, ib, iw), n_degenerate = _scan_grid(t, y, tc_vals, beta_vals, omega_vals)
    boundary = {
        "tc": itc in (0, tc_vals.size - 1),
        "beta": ib in (0, beta_vals.size - 1),
        "omega": iw in (0, omega_vals.size - 1),
    }
    tc, beta, omega = tc_vals[itc], beta_vals[ib], omega_vals[iw]
    if refine:
        tc, beta, omega = _polish_triplet(t, y, grid, itc, ib, iw)
    params, rss = _solve_triplet(t, y, tc, beta, omega)
    rmse = math.sqrt(rss / t.size)
    return params, rmse, boundary, n_degenerate


def fit_window(
    series: PriceSeries,
    window: Window,
    grid: GridSpec | None = None,
    refine: bool = False,
) -> FitResult:
    """Calibrate the model over [t1, t2] of a series.

    Times are window-local (t = 0 at t1), so params.tc reads as trading
    days from the window start.
    """
    grid = grid or GridSpec()
    sub = series.slice(window)
    if len(sub) < MIN_OBSERVATIONS:
        raise WindowTooShort(
            f"window has {len(sub)} observations; need {MIN_OBSERVATIONS}"
        )
    t = sub.t_index.astype(float)
    params, rmse, boundary, n_degenerate = calibrate(t, sub.log_prices, grid, refine)
    return FitResult(
        params=params,
        window=window,
        rmse=rmse,
        n_obs=len(sub),
        converged_on_boundary=boundary,
        n_degenerate_grid_points=n_degenerate,
        grid=grid,
    )
