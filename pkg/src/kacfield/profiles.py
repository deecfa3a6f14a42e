"""Two-component magnetization profiles and the excess free-energy functional.

Profiles are piecewise constant on cells of width grid_step (macroscopic
units).  The interaction kernel is the unit-mass indicator window of radius
1/2, so every convolution is an exact cell-overlap sum: for piecewise
constant profiles it reduces to a uniform window with half-weight end cells.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .phase import PhaseConstants, PhasePoint, _free_energy_arr, dg_dm, free_energy

__all__ = [
    "Profile",
    "BoundaryCondition",
    "t_transform",
    "t_transform_bc",
    "coarsen",
    "eta_classify",
    "excess_free_energy",
    "relax_step",
    "find_minimizer",
    "instanton",
    "fit_decay_rate",
    "zeta0_default",
    "alpha_rate",
    "profile_csv_rows",
]

BcSide = Union[str, "Profile"]
_BC_NAMES = ("zero", "m_plus", "m_minus")


@dataclass
class Profile:
    """Piecewise-constant (m1, m2) profile.

    cells[i] covers macroscopic [ (i - origin_offset)*h, (i - origin_offset + 1)*h ).
    """

    grid_step: float
    cells: np.ndarray
    origin_offset: int = 0

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=float)
        if self.grid_step <= 0:
            raise ValueError("grid_step must be positive")
        if self.cells.ndim != 2 or self.cells.shape[1] != 2:
            raise ValueError("cells must have shape (n, 2)")
        if np.abs(self.cells).max(initial=0.0) > 1.0 + 1e-12:
            raise ValueError("profile components must lie in [-1, 1]")

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def m1(self) -> np.ndarray:
        return self.cells[:, 0]

    @property
    def m2(self) -> np.ndarray:
        return self.cells[:, 1]

    @property
    def m_tilde(self) -> np.ndarray:
        return 0.5 * (self.cells[:, 0] + self.cells[:, 1])

    @property
    def interval(self) -> tuple[float, float]:
        h = self.grid_step
        return (-self.origin_offset * h, (self.n_cells - self.origin_offset) * h)

    def r_left_edges(self) -> np.ndarray:
        h = self.grid_step
        return (np.arange(self.n_cells) - self.origin_offset) * h

    def copy(self) -> "Profile":
        return Profile(self.grid_step, self.cells.copy(), self.origin_offset)

    @staticmethod
    def constant(pair, grid_step: float, n_cells: int, origin_offset: int = 0) -> "Profile":
        cells = np.tile(np.asarray(pair, dtype=float), (n_cells, 1))
        return Profile(grid_step, cells, origin_offset)


@dataclass
class BoundaryCondition:
    """Boundary data on each side: a named phase or an explicit width-1 profile."""

    left: BcSide = "zero"
    right: BcSide = "zero"

    def __post_init__(self):
        for side in (self.left, self.right):
            if isinstance(side, str):
                if side not in _BC_NAMES:
                    raise ValueError(f"unknown boundary condition {side!r}")
            elif isinstance(side, Profile):
                width = side.n_cells * side.grid_step
                if abs(width - 1.0) > 1e-9:
                    raise ValueError("explicit boundary profiles must have width 1")
            else:
                raise TypeError("boundary side must be a name or a Profile")


def _window_half_cells(grid_step: float) -> int:
    # kernel radius 1/2 must be an exact number of cells
    w = 0.5 / grid_step
    wi = round(w)
    if wi < 1 or abs(w - wi) > 1e-9:
        raise ValueError(f"grid_step {grid_step} does not divide the window radius 1/2")
    return wi


def _kernel(grid_step: float) -> np.ndarray:
    # exact overlap of the radius-1/2 indicator with cells: half weight at ends
    w = _window_half_cells(grid_step)
    k = np.full(2 * w + 1, grid_step)
    k[0] *= 0.5
    k[-1] *= 0.5
    return k


def _side_m_tilde(side: BcSide, w: int, pc: PhaseConstants, which: str) -> np.ndarray:
    """m-tilde of the w boundary cells adjacent to I, ordered left to right."""
    if isinstance(side, Profile):
        mt = side.m_tilde
        if side.n_cells < w:
            raise ValueError("explicit boundary profile too narrow for the window")
        return mt[-w:] if which == "left" else mt[:w]
    if side == "zero":
        return np.zeros(w)
    if side == "m_plus":
        return np.full(w, 0.5 * (pc.m_beta_1 + pc.m_beta_2))
    return np.full(w, -0.5 * (pc.m_beta_1 + pc.m_beta_2))


def t_transform(p: Profile) -> Profile:
    """Componentwise (m1, m2) -> (-m2, -m1)."""
    flipped = np.empty_like(p.cells)
    flipped[:, 0] = -p.cells[:, 1]
    flipped[:, 1] = -p.cells[:, 0]
    return Profile(p.grid_step, flipped, p.origin_offset)


def t_transform_bc(bc: BoundaryCondition) -> BoundaryCondition:
    def flip(side: BcSide) -> BcSide:
        if isinstance(side, Profile):
            return t_transform(side)
        return {"zero": "zero", "m_plus": "m_minus", "m_minus": "m_plus"}[side]

    return BoundaryCondition(flip(bc.left), flip(bc.right))


def coarsen(p: Profile, delta: float) -> Profile:
    """Block averages over delta-cells; delta must be a multiple of grid_step."""
    ratio = delta / p.grid_step
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-9:
        raise ValueError(f"delta {delta} is not a multiple of grid_step {p.grid_step}")
    if p.n_cells % k or p.origin_offset % k:
        raise ValueError("profile does not align with the coarse grid")
    coarse = p.cells.reshape(p.n_cells // k, k, 2).mean(axis=1)
    return Profile(delta, coarse, p.origin_offset // k)


def eta_classify(p: Profile, delta: float, zeta: float, ell: int,
                 pc: PhaseConstants) -> int:
    """Phase label of the unit block [ell, ell+1): +1, -1 or 0.

    +1 iff every delta-subblock average is within zeta of m_beta in l1;
    -1 with the flipped phase; 0 otherwise.
    """
    h = p.grid_step
    per_unit = round(1.0 / h)
    if abs(per_unit * h - 1.0) > 1e-9:
        raise ValueError("grid_step must divide 1")
    sub = round(1.0 / delta)
    if abs(sub * delta - 1.0) > 1e-9:
        raise ValueError("1/delta must be an integer")
    k = round(delta / h)
    if abs(k * h - delta) > 1e-9 or k < 1:
        raise ValueError("delta must be a multiple of grid_step")
    start = p.origin_offset + ell * per_unit
    stop = start + per_unit
    if start < 0 or stop > p.n_cells:
        raise ValueError(f"unit block {ell} outside the profile domain")
    block = p.cells[start:stop].reshape(sub, k, 2).mean(axis=1)
    d_plus = np.abs(block[:, 0] - pc.m_beta_1) + np.abs(block[:, 1] - pc.m_beta_2)
    d_minus = np.abs(block[:, 0] + pc.m_beta_2) + np.abs(block[:, 1] + pc.m_beta_1)
    if (d_plus <= zeta).all():
        return 1
    if (d_minus <= zeta).all():
        return -1
    return 0


def excess_free_energy(p: Profile, bc: BoundaryCondition,
                       pc: PhaseConstants) -> float:
    """Riemann-sum excess free energy of p on its interval given bc.

    Local term plus 1/4 interior-pair term plus 1/2 boundary-pair term, all
    with exact cell-overlap kernel weights; nonnegative by construction.
    """
    h = p.grid_step
    w = _window_half_cells(h)
    point = pc.point
    mt = p.m_tilde

    fvals = _free_energy_arr(p.m1, p.m2, point)
    fmin = free_energy(pc.m_beta_1, pc.m_beta_2, point)
    total = h * float(np.sum(fvals - fmin))

    # interior pairs: weight 1 for offsets below w, 1/2 at the window edge
    pair = 0.0
    for k in range(1, w + 1):
        if k >= p.n_cells:
            break
        a_k = 0.5 if k == w else 1.0
        diff = mt[k:] - mt[:-k]
        pair += a_k * float(np.dot(diff, diff))
    total += 0.5 * h * h * pair

    # boundary pairs: interior cell i against the q-th cell beyond each edge
    left = _side_m_tilde(bc.left, w, pc, "left")
    right = _side_m_tilde(bc.right, w, pc, "right")
    bdry = 0.0
    n = p.n_cells
    for q in range(1, w + 1):
        bl = left[w - q]
        br = right[q - 1]
        for i in range(0, min(w - q, n - 1) + 1):
            a_k = 0.5 if i + q == w else 1.0
            bdry += a_k * (mt[i] - bl) ** 2
            bdry += a_k * (mt[n - 1 - i] - br) ** 2
    total += 0.5 * h * h * bdry
    return total


def relax_step(p: Profile, bc: BoundaryCondition, pc: PhaseConstants) -> Profile:
    """One fixed-point iteration of the stationarity condition.

    m1 <- tanh beta(J*mt + theta), m2 <- tanh beta(J*mt - theta), with the
    convolution running over the profile extended by the boundary values.
    """
    h = p.grid_step
    w = _window_half_cells(h)
    beta, theta = pc.beta, pc.theta
    left = _side_m_tilde(bc.left, w, pc, "left")
    right = _side_m_tilde(bc.right, w, pc, "right")
    ext = np.concatenate([left, p.m_tilde, right])
    conv = np.convolve(ext, _kernel(h), mode="valid")
    out = np.empty_like(p.cells)
    out[:, 0] = np.tanh(beta * (conv + theta))
    out[:, 1] = np.tanh(beta * (conv - theta))
    return Profile(h, out, p.origin_offset)


def zeta0_default(pc: PhaseConstants) -> float:
    """Default closeness tolerance for the phase tube."""
    return 0.1 * (1.0 - pc.m_beta_1)


def alpha_rate(pc: PhaseConstants, zeta: float = 0.0) -> float:
    """Contraction log-rate at m_tilde - zeta/2."""
    d = float(dg_dm(pc.m_tilde - 0.5 * zeta, pc.point))
    if d >= 1.0:
        raise ValueError(f"no contraction at zeta={zeta}")
    return -math.log(d)


def _bc_within_tube(bc: BoundaryCondition, zeta: float, delta: float,
                    pc: PhaseConstants) -> None:
    # admissibility: each explicit side must sit within zeta of a pure phase
    for which, side in (("left", bc.left), ("right", bc.right)):
        if isinstance(side, str):
            continue
        coarse = coarsen(side, delta) if delta > side.grid_step else side
        d_plus = (np.abs(coarse.m1 - pc.m_beta_1)
                  + np.abs(coarse.m2 - pc.m_beta_2)).max()
        d_minus = (np.abs(coarse.m1 + pc.m_beta_2)
                   + np.abs(coarse.m2 + pc.m_beta_1)).max()
        if min(d_plus, d_minus) > zeta:
            raise ValueError(f"{which} boundary profile is not within "
                             f"zeta={zeta} of a pure phase")


def find_minimizer(bc: BoundaryCondition, interval: tuple[float, float],
                   zeta: float, delta: float, pc: PhaseConstants,
                   start: Optional[Profile] = None, grid_step: float = 1 / 64,
                   max_iter: int = 100_000, tol: float = 1e-12,
                   track_functional: bool = False):
    """Minimize the excess free energy on the interval for the given bc.

    Picard iteration to sup-norm tolerance; raises on non-convergence.
    Returns the minimizer (and the per-iterate functional values if asked).
    """
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    _bc_within_tube(bc, zeta, delta, pc)
    a, b = interval
    h = grid_step
    n = round((b - a) / h)
    if n < 1 or abs(n * h - (b - a)) > 1e-9:
        raise ValueError("interval length must be a multiple of grid_step")
    offset = round(-a / h)
    if start is None:
        start = Profile.constant(pc.m_beta, h, n, offset)
    p = start
    trace = []
    if track_functional:
        trace.append(excess_free_energy(p, bc, pc))
    for _ in range(max_iter):
        q = relax_step(p, bc, pc)
        if track_functional:
            trace.append(excess_free_energy(q, bc, pc))
        change = float(np.abs(q.cells - p.cells).max())
        p = q
        if change < tol:
            break
    else:
        raise RuntimeError(f"no convergence after {max_iter} iterations, "
                           f"final sup-norm change {change:.3e}")
    return (p, trace) if track_functional else p


def _recenter(p: Profile, pc: PhaseConstants) -> Profile:
    # translate so the sign change of m_tilde sits at the origin cell
    mt = p.m_tilde
    pos = np.flatnonzero(mt >= 0.0)
    if pos.size == 0 or pos.size == mt.size:
        return p
    shift = int(pos[0]) - p.origin_offset
    if shift == 0:
        return p
    cells = p.cells
    if shift > 0:
        filler = np.tile(pc.m_beta, (shift, 1))
        cells = np.concatenate([cells[shift:], filler])
    else:
        filler = np.tile(pc.t_m_beta, (-shift, 1))
        cells = np.concatenate([filler, cells[:shift]])
    return Profile(p.grid_step, cells, p.origin_offset)


def instanton(pc: PhaseConstants, half_length: float, grid_step: float = 1 / 64,
              max_iter: int = 100_000, tol: float = 1e-12,
              track_functional: bool = False):
    """Front profile between the two phases and its excess free energy.

    Relaxes a sharp step with the sign change re-pinned to the origin cell
    after every iteration; returns (profile, f_star).
    """
    alpha = alpha_rate(pc)
    if half_length < 10.0 / alpha:
        raise ValueError(f"half_length {half_length} below 10/alpha = {10.0 / alpha:.3f}")
    h = grid_step
    n = round(2 * half_length / h)
    if abs(n * h - 2 * half_length) > 1e-9:
        raise ValueError("2*half_length must be a multiple of grid_step")
    offset = n // 2
    bc = BoundaryCondition("m_minus", "m_plus")
    cells = np.empty((n, 2))
    cells[:offset] = pc.t_m_beta
    cells[offset:] = pc.m_beta
    p = Profile(h, cells, offset)
    trace = []
    if track_functional:
        trace.append(excess_free_energy(p, bc, pc))
    for _ in range(max_iter):
        q = _recenter(relax_step(p, bc, pc), pc)
        if track_functional:
            trace.append(excess_free_energy(q, bc, pc))
        change = float(np.abs(q.cells - p.cells).max())
        p = q
        if change < tol:
            break
    else:
        raise RuntimeError(f"no convergence after {max_iter} iterations, "
                           f"final sup-norm change {change:.3e}")
    f_star = excess_free_energy(p, bc, pc)
    tail = max(
        abs(p.cells[0, 0] - pc.t_m_beta[0]) + abs(p.cells[0, 1] - pc.t_m_beta[1]),
        abs(p.cells[-1, 0] - pc.m_beta[0]) + abs(p.cells[-1, 1] - pc.m_beta[1]),
    )
    if tail > 1e-6:
        warnings.warn(f"domain too short: boundary deviation {tail:.2e}",
                      RuntimeWarning, stacklevel=2)
    result = (p, f_star, trace) if track_functional else (p, f_star)
    return result


def fit_decay_rate(p: Profile, pc: PhaseConstants, r_min: float = 2.0,
                   r_max: Optional[float] = None, floor: float = 1e-12) -> float:
    """Least-squares slope of log l1-deviation from m_beta on [r_min, r_max]."""
    r = p.r_left_edges() + 0.5 * p.grid_step
    dev = np.abs(p.m1 - pc.m_beta_1) + np.abs(p.m2 - pc.m_beta_2)
    if r_max is None:
        r_max = p.interval[1] - 2.0
    mask = (r >= r_min) & (r <= r_max) & (dev > floor)
    if mask.sum() < 2:
        raise ValueError("not enough cells to fit a decay rate")
    slope = np.polyfit(r[mask], np.log(dev[mask]), 1)[0]
    return float(slope)


def profile_csv_rows(p: Profile) -> list[tuple[float, float, float]]:
    """(r, m1, m2) rows, r the left edge of each cell."""
    r = p.r_left_edges()
    return [(float(r[i]), float(p.cells[i, 0]), float(p.cells[i, 1]))
            for i in range(p.n_cells)]
