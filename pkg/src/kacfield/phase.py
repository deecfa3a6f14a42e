"""Random-field Curie-Weiss phase structure.

Fixed points of the mean-field map, the two-phase region test, and every
derived scalar constant the rest of the package consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

__all__ = [
    "PhasePoint",
    "PhaseConstants",
    "entropy",
    "free_energy",
    "g_beta",
    "dg_dm",
    "theta_1c",
    "solve_fixed_points",
    "phase_constants",
    "constants_record",
    "CONSTANTS_CSV_HEADER",
    "constants_csv_row",
]


@dataclass(frozen=True)
class PhasePoint:
    """Model parameters (beta, theta) for the local mean-field problem."""

    beta: float
    theta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.theta < 0:
            raise ValueError(f"theta must be nonnegative, got {self.theta}")

    @property
    def in_two_minima_region(self) -> bool:
        """True when the fixed-point equation has exactly three solutions.

        Strict inequality theta < theta_1c below beta = 3/2, non-strict at and
        above it.  theta = 0 is admitted (symmetric degenerate field).
        """
        if self.beta <= 1:
            return False
        t1c = theta_1c(self.beta)
        if self.beta < 1.5:
            return self.theta < t1c
        return self.theta <= t1c


@dataclass
class PhaseConstants:
    """Derived scalars at a phase point.

    f_star (the surface tension) is filled in later by the profile module.
    """

    beta: float
    theta: float
    m_tilde: float
    m_beta_1: float
    m_beta_2: float
    theta_1c: float
    alpha: float
    v_const: float
    kappa_est: float
    f_star: Optional[float] = None

    @property
    def point(self) -> PhasePoint:
        return PhasePoint(self.beta, self.theta)

    @property
    def m_beta(self) -> tuple[float, float]:
        return (self.m_beta_1, self.m_beta_2)

    @property
    def t_m_beta(self) -> tuple[float, float]:
        return (-self.m_beta_2, -self.m_beta_1)

    def with_f_star(self, f_star: float) -> "PhaseConstants":
        return replace(self, f_star=f_star)


def entropy(m):
    """(1+m)/2 log((1+m)/2) + (1-m)/2 log((1-m)/2), with 0 log 0 = 0."""
    if abs(m) > 1:
        raise ValueError(f"magnetization {m} outside [-1, 1]")
    if abs(m) == 1.0:
        return 0.0
    p = 0.5 * (1.0 + m)
    q = 0.5 * (1.0 - m)
    return p * math.log(p) + q * math.log(q)


def _entropy_arr(m):
    # vectorized entropy; endpoints forced to the 0 log 0 = 0 convention
    m = np.asarray(m, dtype=float)
    p = 0.5 * (1.0 + m)
    q = 0.5 * (1.0 - m)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        out = out + np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0)
    return out


def free_energy(m1, m2, point: PhasePoint):
    """Two-component local free energy at (m1, m2)."""
    if abs(m1) > 1 or abs(m2) > 1:
        raise ValueError(f"({m1}, {m2}) outside the admissible square")
    quad = -((m1 + m2) ** 2) / 8.0 - (point.theta / 2.0) * (m1 - m2)
    return quad + (entropy(m1) + entropy(m2)) / (2.0 * point.beta)


def _free_energy_arr(m1, m2, point: PhasePoint):
    # vectorized free energy on arrays already inside the square
    quad = -((m1 + m2) ** 2) / 8.0 - (point.theta / 2.0) * (m1 - m2)
    return quad + (_entropy_arr(m1) + _entropy_arr(m2)) / (2.0 * point.beta)


def g_beta(m_tilde, point: PhasePoint):
    """Mean-field map: average of tanh beta(m+theta) and tanh beta(m-theta)."""
    b, t = point.beta, point.theta
    return 0.5 * np.tanh(b * (m_tilde + t)) + 0.5 * np.tanh(b * (m_tilde - t))


def dg_dm(m_tilde, point: PhasePoint):
    """Derivative of the mean-field map in m."""
    b, t = point.beta, point.theta
    s1 = 1.0 / np.cosh(b * (m_tilde + t))
    s2 = 1.0 / np.cosh(b * (m_tilde - t))
    return (b / 2.0) * (s1 * s1 + s2 * s2)


def theta_1c(beta: float) -> float:
    """Critical field strength below which the map has three fixed points."""
    if beta <= 1:
        raise ValueError(f"no phase coexistence for beta <= 1, got {beta}")
    return math.atanh(math.sqrt(1.0 - 1.0 / beta)) / beta


def solve_fixed_points(point: PhasePoint, grid_points: int = 10_000,
                       tol: float = 1e-12) -> list[float]:
    """All roots of m = g(m) in [-1, 1], sorted ascending.

    Sign-change bracketing on a uniform grid, then bisection.  The root count
    must come out 1, 3 or 5 (odd map); anything else is a bracketing failure.
    """
    grid = np.linspace(-1.0, 1.0, grid_points)
    resid = grid - g_beta(grid, point)

    roots = []
    exact = np.flatnonzero(resid == 0.0)
    roots.extend(grid[exact].tolist())
    crossings = np.flatnonzero(resid[:-1] * resid[1:] < 0.0)
    for i in crossings:
        a, b = grid[i], grid[i + 1]
        fa = resid[i]
        for _ in range(100):
            mid = 0.5 * (a + b)
            fm = mid - float(g_beta(mid, point))
            if fm == 0.0:
                a = b = mid
                break
            if (fa < 0) == (fm < 0):
                a, fa = mid, fm
            else:
                b = mid
        roots.append(float(0.5 * (a + b)))

    roots = sorted(roots)
    # dedupe near-coincident brackets
    dedup = []
    for r in roots:
        if not dedup or r - dedup[-1] > 1e-9:
            dedup.append(r)
    roots = dedup

    bad = [r for r in roots if abs(r - float(g_beta(r, point))) >= tol]
    if bad or len(roots) not in (1, 3, 5):
        raise RuntimeError(
            f"bracketing failed at grid resolution {grid_points}: "
            f"{len(roots)} roots, worst residual "
            f"{max((abs(r - float(g_beta(r, point))) for r in roots), default=0.0):.3e}"
        )
    return roots


def _kappa_grid_estimate(point: PhasePoint, m1: float, m2: float,
                         step: float, exclusion: float) -> float:
    # grid infimum of [f(m) - f(m_beta)] / min L1-distance^2 to the two minima
    axis = np.arange(-1.0, 1.0 + step / 2, step)
    g1, g2 = np.meshgrid(axis, axis, indexing="ij")
    fvals = _free_energy_arr(g1, g2, point)
    fmin = free_energy(m1, m2, point)
    d_plus = np.abs(g1 - m1) + np.abs(g2 - m2)
    d_minus = np.abs(g1 + m2) + np.abs(g2 + m1)
    dmin = np.minimum(d_plus, d_minus)
    mask = dmin > exclusion
    ratio = (fvals[mask] - fmin) / dmin[mask] ** 2
    return float(ratio.min())


def phase_constants(point: PhasePoint, kappa_grid_step: float = 0.01,
                    kappa_exclusion: float = 1e-3) -> PhaseConstants:
    """Compute every derived scalar at a two-minima phase point.

    kappa_est is a certified-at-grid-resolution lower bound for the quadratic
    growth constant, not the optimal one.
    """
    if not point.in_two_minima_region:
        raise ValueError(
            f"(beta={point.beta}, theta={point.theta}) outside the "
            "two-minima region"
        )
    roots = solve_fixed_points(point)
    m_tilde = max(roots)
    b, t = point.beta, point.theta
    m1 = math.tanh(b * (m_tilde + t))
    m2 = math.tanh(b * (m_tilde - t))
    t2bt = math.tanh(2.0 * b * t)
    v_const = math.log((1.0 + m2 * t2bt) / (1.0 - m1 * t2bt))
    deriv = float(dg_dm(m_tilde, point))
    # stability of the outer fixed point: contraction rate strictly below 1
    if deriv >= 1.0:
        raise ValueError(f"unstable outer fixed point, dg/dm = {deriv}")
    alpha = -math.log(deriv)
    kappa = _kappa_grid_estimate(point, m1, m2, kappa_grid_step, kappa_exclusion)
    return PhaseConstants(
        beta=point.beta,
        theta=point.theta,
        m_tilde=m_tilde,
        m_beta_1=m1,
        m_beta_2=m2,
        theta_1c=theta_1c(point.beta),
        alpha=alpha,
        v_const=v_const,
        kappa_est=kappa,
    )


# provenance ids for emitted numbers (self-describing, stable across versions)
_SOURCES = {
    "beta": "input_parameter",
    "theta": "input_parameter",
    "m_tilde": "mean_field_fixed_point",
    "m_beta_1": "tanh_branch_plus",
    "m_beta_2": "tanh_branch_minus",
    "theta_1c": "critical_field_closed_form",
    "alpha": "contraction_log_rate",
    "v_const": "tilt_log_ratio",
    "kappa_est": "quadratic_growth_grid_bound",
    "f_star": "instanton_surface_tension",
}

CONSTANTS_CSV_HEADER = [
    "beta", "theta", "m_tilde", "m_beta_1", "m_beta_2",
    "theta_1c", "alpha", "v_const", "kappa_est", "f_star",
]


def constants_record(point: PhasePoint, pc: PhaseConstants) -> dict:
    """JSON-ready record keyed by (beta, theta), one labeled entry per number."""
    values = {
        "beta": point.beta,
        "theta": point.theta,
        "m_tilde": pc.m_tilde,
        "m_beta_1": pc.m_beta_1,
        "m_beta_2": pc.m_beta_2,
        "theta_1c": pc.theta_1c,
        "alpha": pc.alpha,
        "v_const": pc.v_const,
        "kappa_est": pc.kappa_est,
        "f_star": pc.f_star,
    }
    return {
        k: {"value": v, "source": _SOURCES[k]} for k, v in values.items()
    }


def constants_csv_row(point: PhasePoint, pc: PhaseConstants) -> list:
    row = [point.beta, point.theta, pc.m_tilde, pc.m_beta_1, pc.m_beta_2,
           pc.theta_1c, pc.alpha, pc.v_const, pc.kappa_est, pc.f_star]
    return ["" if v is None else v for v in row]
