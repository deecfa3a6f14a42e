"""Random sign fields, their block decomposition, and free-energy increments.

A realization assigns an independent fair sign to every microscopic site.
Sites are grouped into blocks of delta_star/gamma sites (an even integer).
Each block is split into two half blocks of equal size: the majority-sign
sites up to the index where their count first reaches half the block, and
everything else.  The overflow set D collects the majority sites beyond that
index; its size drives all the randomness that survives coarse graining.

The increment X of a block is twice the inverse temperature times the gap
between the constrained cumulant of the tilted half block evaluated at the
minimizing magnetization pair and at its swap-reflected image.  Summing X
over the blocks of a mesoscopic window and scaling by gamma gives the walk
increment chi used by the localization construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FieldRealization",
    "BlockStats",
    "GDecomposition",
    "RoughEstimateResult",
    "sample_field",
    "decompose_block",
    "block_size",
    "m_lattice",
    "closest_lattice_point",
    "lattice_m_beta",
    "cumulant_G",
    "X_of_block",
    "x_table",
    "c_theta_const",
    "xi_residual_bounds",
    "pp_admissible",
    "pp_decompose",
    "p_cutoff",
    "chi_alpha",
    "chi_profile",
    "rough_estimate_condition",
    "rough_estimate_check",
    "BLOCK_CSV_HEADER",
    "block_csv_rows",
]


# ---------------------------------------------------------------------------
# field realizations


@dataclass(frozen=True, eq=False)
class FieldRealization:
    """A +-1 field over a contiguous microscopic index range.

    seed is kept for provenance; persisting (seed, len(values)) is enough to
    rebuild a sampled realization.  Derived realizations (for instance sign
    flips) carry the seed of their parent.
    """

    seed: int | None
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int8)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a nonempty 1d array")
        if not np.all(np.abs(v) == 1):
            raise ValueError("field values must be +1 or -1")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return int(self.values.size)

    def flipped(self):
        """The realization with every sign reversed."""
        return FieldRealization(self.seed, -self.values)


def sample_field(seed, n_sites):
    """Draw n_sites independent fair signs, reproducibly from seed."""
    if n_sites <= 0:
        raise ValueError("n_sites must be positive")
    rng = np.random.default_rng(seed)
    vals = rng.integers(0, 2, size=int(n_sites), dtype=np.int8) * 2 - 1
    return FieldRealization(seed, vals)


# ---------------------------------------------------------------------------
# block decomposition


def block_size(gamma, delta_star):
    """Sites per block, delta_star/gamma; must be an even integer."""
    ratio = delta_star / gamma
    n_sites = int(round(ratio))
    if abs(ratio - n_sites) > 1e-9 or n_sites <= 0:
        raise ValueError("delta_star/gamma must be a positive integer")
    if n_sites % 2 != 0:
        raise ValueError("delta_star/gamma must be even")
    return n_sites


@dataclass(frozen=True, eq=False)
class BlockStats:
    """Decomposition of one block of the field.

    lam is the majority sign (0 on balanced blocks), d_size the number of
    majority sites left over after the first half-block fills up, and
    p = d_size / (half block size).  b_plus and b_minus hold the absolute
    site indices of the two half blocks, each of size delta_star/(2 gamma).
    """

    x: int
    lam: int
    d_size: int
    p: float
    b_plus: np.ndarray
    b_minus: np.ndarray

    def __post_init__(self):
        if self.lam not in (-1, 0, 1):
            raise ValueError("lam must be -1, 0 or +1")
        if self.b_plus.size != self.b_minus.size:
            raise ValueError("half blocks must have equal size")
        if self.d_size < 0 or not 0.0 <= self.p <= 1.0:
            raise ValueError("invalid overflow statistics")

    @property
    def half_size(self):
        return int(self.b_plus.size)


def decompose_block(h, x, gamma, delta_star):
    """Split block x of the realization into its half blocks.

    The majority sites are taken in index order until half the block is
    filled; the remainder of the block forms the other half.  On balanced
    blocks the split is by sign.
    """
    n_sites = block_size(gamma, delta_star)
    lo, hi = x * n_sites, (x + 1) * n_sites
    if x < 0 or hi > len(h):
        raise ValueError(f"block {x} outside the realization")
    sites = h.values[lo:hi]
    half = n_sites // 2
    idx = np.arange(lo, hi)
    plus = idx[sites > 0]
    minus = idx[sites < 0]
    excess = plus.size - half
    lam = (excess > 0) - (excess < 0)
    if lam == 0:
        b_plus, b_minus, d = plus, minus, 0
    else:
        majority, minority = (plus, minus) if lam > 0 else (minus, plus)
        lead = majority[:half]
        rest = np.sort(np.concatenate([minority, majority[half:]]))
        d = majority.size - half
        b_plus, b_minus = (lead, rest) if lam > 0 else (rest, lead)
    return BlockStats(x=int(x), lam=int(lam), d_size=int(d),
                      p=d / half, b_plus=b_plus, b_minus=b_minus)


# ---------------------------------------------------------------------------
# magnetization lattice


def m_lattice(gamma, delta_star):
    """Admissible half-block magnetizations, spacing 4 gamma/delta_star."""
    half = block_size(gamma, delta_star) // 2
    return np.linspace(-1.0, 1.0, half + 1)


def closest_lattice_point(value, gamma, delta_star):
    """Nearest admissible magnetization; ties resolve toward zero."""
    half = block_size(gamma, delta_star) // 2
    k = (value + 1.0) * half / 2.0
    k0 = int(min(max(math.floor(k), 0), half))
    k1 = int(min(k0 + 1, half))
    c0 = -1.0 + 2.0 * k0 / half
    c1 = -1.0 + 2.0 * k1 / half
    d0, d1 = abs(value - c0), abs(value - c1)
    if abs(d0 - d1) <= 1e-12:
        return c0 if abs(c0) <= abs(c1) else c1
    return c0 if d0 < d1 else c1


def lattice_m_beta(constants, gamma, delta_star):
    """Both components of the minimizing pair projected to the lattice."""
    return (closest_lattice_point(constants.m_beta_1, gamma, delta_star),
            closest_lattice_point(constants.m_beta_2, gamma, delta_star))


# ---------------------------------------------------------------------------
# constrained cumulants


def _half_block_cumulant(n, d, lam, m, beta, theta):
    # counting over the half block: k runs over +1 spins inside the overflow
    # set, the constraint fixes the total number of +1 spins to j
    target = (1.0 + m) * n / 2.0
    j = round(target)
    if abs(target - j) > 1e-9 or not 0 <= j <= n:
        raise ValueError("magnetization not realizable on this half block")
    if d == 0 or lam == 0 or theta == 0.0:
        return 0.0
    k_lo = max(0, j - (n - d))
    k_hi = min(d, j)
    logs = [math.log(math.comb(d, k)) + math.log(math.comb(n - d, j - k))
            + 2.0 * beta * theta * lam * (2 * k - d)
            for k in range(k_lo, k_hi + 1)]
    peak = max(logs)
    total = peak + math.log(math.fsum(math.exp(w - peak) for w in logs))
    return -(total - math.log(math.comb(n, j))) / beta


def cumulant_G(block, m_component, beta, theta):
    """Constrained cumulant of the tilted half block, exact by counting.

    m_component must lie on the magnetization lattice of the half block
    carrying the overflow set.  Zero when the overflow set is empty or the
    field amplitude vanishes.
    """
    n = block.half_size
    if n > 64:
        raise ValueError("half block too large for exact counting")
    return _half_block_cumulant(n, block.d_size, block.lam,
                                m_component, beta, theta)


def _sides(lam, m1_lat, m2_lat):
    # the tilted half block sees component 2 for lam=+1, component 1 for
    # lam=-1; the swap reflection negates and exchanges the components
    if lam > 0:
        return m2_lat, -m1_lat
    return m1_lat, -m2_lat


def X_of_block(block, constants, gamma, delta_star, beta=None, theta=None):
    """Free-energy increment of one block.

    Twice inverse temperature times the cumulant gap between the minimizing
    pair and its swap-reflected image.  Antisymmetric under a global sign
    flip of the field and zero on balanced blocks.
    """
    beta = constants.beta if beta is None else beta
    theta = constants.theta if theta is None else theta
    if block.lam == 0 or block.d_size == 0:
        return 0.0
    m1_lat, m2_lat = lattice_m_beta(constants, gamma, delta_star)
    m_side, t_side = _sides(block.lam, m1_lat, m2_lat)
    g_m = cumulant_G(block, m_side, beta, theta)
    g_t = cumulant_G(block, t_side, beta, theta)
    return 2.0 * beta * (g_m - g_t)


def x_table(constants, gamma, delta_star, beta=None, theta=None):
    """Increment values for lam=+1 indexed by overflow size 0..half.

    X depends on a block only through (lam, d_size); the lam=-1 column is
    the negative of this one.  Used to vectorize experiments over many
    realizations.
    """
    beta = constants.beta if beta is None else beta
    theta = constants.theta if theta is None else theta
    half = block_size(gamma, delta_star) // 2
    m1_lat, m2_lat = lattice_m_beta(constants, gamma, delta_star)
    m_side, t_side = _sides(1, m1_lat, m2_lat)
    out = np.zeros(half + 1)
    for d in range(1, half + 1):
        g_m = _half_block_cumulant(half, d, 1, m_side, beta, theta)
        g_t = _half_block_cumulant(half, d, 1, t_side, beta, theta)
        out[d] = 2.0 * beta * (g_m - g_t)
    return out


# ---------------------------------------------------------------------------
# residual bounds for the leading-term approximation


def c_theta_const(beta, theta):
    """Growth constant of the variance correction in the tilted half block."""
    t = math.tanh(2.0 * beta * theta)
    return t * t * (1.0 + t * t) ** 2 / ((1.0 - t * t) ** 2 * (1.0 - t) ** 6)


def xi_residual_bounds(constants, gamma, delta_star):
    """Printed bounds for the two residuals of the leading-term split.

    Returns (per-overflow-site bound, additive bound); both carry the
    quarter-power small parameter of the block scale ratio.
    """
    beta, theta = constants.beta, constants.theta
    small = (2.0 * gamma / delta_star) ** 0.25
    t = math.tanh(2.0 * beta * theta)
    xi1 = small * 64.0 * beta * theta * (1.0 + beta * theta) / (
        (1.0 - constants.m_beta_1) ** 2 * (1.0 - t))
    xi2 = small * (36.0 + 2.0 * c_theta_const(beta, theta))
    return xi1, xi2


# ---------------------------------------------------------------------------
# grand canonical decomposition of the cumulant


@dataclass(frozen=True)
class GDecomposition:
    """Split of the half-block cumulant into a sharp constraint ratio and a
    smooth tilt term.

    nu1 matches the magnetization without tilt, nu2 with it; phi_value is
    the smooth term, hat_phi its residual beyond the explicit leading part,
    and psi_ratio_log the log ratio of the two point-mass weights.
    """

    nu1: float
    nu2: float
    psi_ratio_log: float
    phi_value: float
    hat_phi: float


def pp_admissible(n, d, m, beta, theta):
    """Magnetization window on which the decomposition bounds are proved."""
    p = d / n
    t = math.tanh(2.0 * beta * theta)
    gap = max(n ** -0.75, 16.0 * p * beta * theta / (1.0 - t))
    return abs(m) <= 1.0 - gap


def pp_decompose(block, m_component, beta, theta):
    """Decompose the half-block cumulant through the grand canonical tilt.

    Solves the mean constraint for the tilted chemical potential by
    bisection, then evaluates the smooth term and the constraint-ratio term
    separately.  Their sum reproduces the cumulant exactly.
    """
    n = block.half_size
    d = block.d_size
    lam = block.lam
    p = d / n
    m = float(m_component)
    target = (1.0 + m) * n / 2.0
    j = round(target)
    if abs(target - j) > 1e-9 or not 0 <= j <= n:
        raise ValueError("magnetization not realizable on this half block")
    if abs(m) >= 1.0:
        raise ValueError("saturated magnetization has no chemical potential")
    nu1 = math.atanh(m)
    shift = 2.0 * beta * theta * lam
    if d == 0 or shift == 0.0:
        return GDecomposition(nu1=nu1, nu2=nu1, psi_ratio_log=0.0,
                              phi_value=0.0, hat_phi=0.0)

    def constraint(nu):
        return p * math.tanh(nu + shift) + (1.0 - p) * math.tanh(nu) - m

    lo, hi = nu1 - abs(shift) - 1.0, nu1 + abs(shift) + 1.0
    for _ in range(8):
        if constraint(lo) <= 0.0 <= constraint(hi):
            break
        lo -= 2.0
        hi += 2.0
    else:
        raise RuntimeError("failed to bracket the tilted chemical potential")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if constraint(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    nu2 = 0.5 * (lo + hi)

    phi = n * ((nu1 - nu2) * m
               + p * (math.log(math.cosh(nu2 + shift)) - math.log(math.cosh(nu1)))
               + (1.0 - p) * (math.log(math.cosh(nu2)) - math.log(math.cosh(nu1))))
    psi_t = _log_psi(n, d, j, nu2, shift)
    psi_0 = _log_psi(n, 0, j, nu1, 0.0)
    t = math.tanh(2.0 * beta * theta)
    leading = math.log(math.cosh(2.0 * beta * theta)) + math.log(1.0 + lam * m * t)
    return GDecomposition(nu1=nu1, nu2=nu2, psi_ratio_log=psi_t - psi_0,
                          phi_value=phi, hat_phi=phi / d - leading)


def _log_psi(n, d, j, nu, shift):
    # log weight of the exact-count event under the tilted product measure
    k_lo = max(0, j - (n - d))
    k_hi = min(d, j)
    logs = [math.log(math.comb(d, k)) + math.log(math.comb(n - d, j - k))
            + shift * (2 * k - d) for k in range(k_lo, k_hi + 1)]
    peak = max(logs)
    count = peak + math.log(math.fsum(math.exp(w - peak) for w in logs))
    return (nu * (2 * j - n) + count
            - d * math.log(2.0 * math.cosh(nu + shift))
            - (n - d) * math.log(2.0 * math.cosh(nu)))


# ---------------------------------------------------------------------------
# walk increments


def p_cutoff(gamma, delta_star):
    """Overflow fraction above which a block is dropped from the walk."""
    return (2.0 * gamma / delta_star) ** 0.25


def _blocks_per_window(gamma, delta_star, eps):
    m_blocks = eps / (gamma * delta_star)
    m_int = int(round(m_blocks))
    if abs(m_blocks - m_int) > 1e-9 or m_int <= 0:
        raise ValueError("eps/(gamma*delta_star) must be a positive integer")
    return m_int


def chi_alpha(h, alpha_index, params, constants):
    """Walk increment of one mesoscopic window, reference implementation.

    params is any object with float attributes gamma, delta_star, eps.
    Window alpha_index >= 1 covers blocks (alpha_index-1)*M .. alpha_index*M-1
    where M = eps/(gamma*delta_star).  Blocks whose overflow fraction exceeds
    the quarter-power cutoff are dropped.
    """
    gamma, delta_star = params.gamma, params.delta_star
    m_blocks = _blocks_per_window(gamma, delta_star, params.eps)
    n_sites = block_size(gamma, delta_star)
    if alpha_index < 1 or alpha_index * m_blocks * n_sites > len(h):
        raise ValueError(f"window {alpha_index} outside the realization")
    cutoff = p_cutoff(gamma, delta_star)
    total = 0.0
    for x in range((alpha_index - 1) * m_blocks, alpha_index * m_blocks):
        stats = decompose_block(h, x, gamma, delta_star)
        if stats.p <= cutoff:
            total += X_of_block(stats, constants, gamma, delta_star)
    return gamma * total


def chi_profile(h, params, constants):
    """All complete walk increments of a realization, vectorized.

    Equals chi_alpha over alpha_index = 1..n_windows; X is looked up from
    the (lam, d_size) table, which determines it completely.
    """
    gamma, delta_star = params.gamma, params.delta_star
    m_blocks = _blocks_per_window(gamma, delta_star, params.eps)
    n_sites = block_size(gamma, delta_star)
    half = n_sites // 2
    n_windows = len(h) // (m_blocks * n_sites)
    if n_windows == 0:
        return np.zeros(0)
    sums = h.values[:n_windows * m_blocks * n_sites].reshape(-1, n_sites).sum(axis=1)
    d = np.abs(sums) // 2
    lam = np.sign(sums)
    x_vals = x_table(constants, gamma, delta_star)[d] * lam
    x_vals[d / half > p_cutoff(gamma, delta_star)] = 0.0
    return gamma * x_vals.reshape(n_windows, m_blocks).sum(axis=1)


# ---------------------------------------------------------------------------
# rough estimate


@dataclass(frozen=True)
class RoughEstimateResult:
    """Outcome of the field-energy rough bound on one realization."""

    ok: bool
    lhs: float
    bound: float
    n_blocks: int

    def __bool__(self):
        return self.ok

    @property
    def margin(self):
        return self.lhs / self.bound if self.bound > 0 else math.inf


def rough_estimate_condition(gamma, delta_star, range_exponent=2):
    """Smallness condition under which the rough bound is guaranteed."""
    return 64.0 * (2 + range_exponent) * delta_star * math.log(1.0 / gamma) <= 1.0


def rough_estimate_check(h, interval_length, params, theta=1.0):
    """Check the worst-case field energy of an interval against its bound.

    The left side is the energy sup over spin configurations, attained by
    aligning every spin with its block majority: 2 theta gamma times the
    total overflow count.  The inequality is scale free in theta, which
    enters only the reported magnitudes.
    """
    gamma, delta_star = params.gamma, params.delta_star
    range_exponent = getattr(params, "range_exponent", 2)
    if not rough_estimate_condition(gamma, delta_star, range_exponent):
        raise ValueError("smallness condition fails for these scales")
    if interval_length > gamma ** (-range_exponent):
        raise ValueError("interval longer than the guaranteed range")
    n_blocks = interval_length / delta_star
    k = int(round(n_blocks))
    if abs(n_blocks - k) > 1e-9 or k <= 0:
        raise ValueError("interval must hold a whole number of blocks")
    n_sites = block_size(gamma, delta_star)
    if k * n_sites > len(h):
        raise ValueError("realization shorter than the interval")
    sums = h.values[:k * n_sites].reshape(k, n_sites).sum(axis=1)
    total_overflow = int(np.abs(sums).sum()) // 2
    lhs = 2.0 * theta * gamma * total_overflow
    bound = 4.0 * theta * interval_length * math.sqrt(gamma / delta_star)
    return RoughEstimateResult(ok=lhs <= bound, lhs=lhs, bound=bound, n_blocks=k)


# ---------------------------------------------------------------------------
# export


BLOCK_CSV_HEADER = ("x", "lambda", "d_size", "p", "X")


def block_csv_rows(h, constants, gamma, delta_star):
    """Yield one (x, lambda, d_size, p, X) row per complete block."""
    n_sites = block_size(gamma, delta_star)
    for x in range(len(h) // n_sites):
        stats = decompose_block(h, x, gamma, delta_star)
        yield (stats.x, stats.lam, stats.d_size, stats.p,
               X_of_block(stats, constants, gamma, delta_star))
