"""Residual block-to-block coupling and its convergent polymer series.

Coarse graining onto blocks replaces the microscopic pair interaction by a
block-level kernel; the replacement is exact except near the interaction
range, where a site pair can fall on the opposite side of the microscopic
cutoff from its block pair.  The leftover is a weak coupling U between block
pairs whose separation is within one block of half the interaction range.
This module evaluates the total log-weight V of those leftovers under the
constrained tilted product measure on blocks, both directly (exact
enumeration, small systems) and as a polymer series whose truncation error
is certified by a geometric tail.

Blocks are listed by integer index with arbitrary gaps, so a handful of
blocks near the coupling window can be studied without carrying the many
blocks between them.  Each block keeps its own field signs: the constraint
fixes the magnetization of both half blocks and the tilt acts on the
overflow sites of unbalanced blocks, exactly as induced by the realization.

The series certificate S is the largest single-block sum of exp(|R|)|rho(R)|
over polymers R through that block.  Convergence requires the coupling
strength beta (delta*)^2/gamma below 1/(6 e^3); S then stays below
6 e^3 beta (delta*)^2/gamma, the truncation tail is geometric in S, and the
per-site Lipschitz constant of V is at most S/((1-S) beta).
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .fields import FieldRealization, block_size, decompose_block

__all__ = [
    "SizeLimitError",
    "ConvergenceError",
    "Polymer",
    "BlockSystem",
    "coupling_window",
    "pair_potential",
    "polymer_activity",
    "v_direct",
    "v_series",
    "s_estimate",
    "s_bound",
    "lipschitz_check",
    "R_MAX_DEFAULT",
    "ORDER_MAX",
]

R_MAX_DEFAULT = 4
ORDER_MAX = 6

_ACTIVITY_SITE_CAP = 12
_DIRECT_SITE_CAP = 8
_DIRECT_BLOCK_CAP = 6

_LETTERS = "abcdefghijklmnopqrstuvwxyz"
_CUT_TOL = 1e-9


class SizeLimitError(ValueError):
    """A request beyond the exact-enumeration budget."""


class ConvergenceError(ValueError):
    """The polymer series is not certified to converge."""


# ---------------------------------------------------------------------------
# pair coupling


def coupling_window(x, y, delta_star):
    """Whether blocks x and y are close enough to half the range to couple."""
    r = delta_star * abs(x - y)
    return 0.5 - delta_star - _CUT_TOL <= r <= 0.5 + delta_star + _CUT_TOL


def _pair_kernel(x, y, gamma, delta_star, n):
    """Site-pair coupling matrix between blocks x and y, or None if zero.

    Entry (p, q) couples site p of block x to site q of block y; the value
    is -gamma times the mismatch between the microscopic range indicator and
    the block-distance indicator.
    """
    if x == y:
        raise ValueError("pair coupling needs two distinct blocks")
    if not coupling_window(x, y, delta_star):
        return None
    offsets = np.arange(n)
    dist = np.abs((y - x) * n + offsets[None, :] - offsets[:, None])
    j_micro = gamma * dist <= 0.5 + _CUT_TOL
    j_block = 1.0 if delta_star * abs(y - x) <= 0.5 + _CUT_TOL else 0.0
    kernel = -gamma * (j_micro.astype(float) - j_block)
    if not np.any(kernel):
        return None
    return kernel


def pair_potential(sigma_x, sigma_y, x, y, gamma, delta_star):
    """Residual coupling of two spin blocks at block indices x and y.

    The value is the double sum over site pairs of -gamma times the
    difference between the microscopic range indicator and the block one;
    it vanishes unless the block separation is within one block of half
    the interaction range.
    """
    n = block_size(gamma, delta_star)
    sx = np.asarray(sigma_x, dtype=float)
    sy = np.asarray(sigma_y, dtype=float)
    if sx.shape != (n,) or sy.shape != (n,):
        raise ValueError(f"spin blocks must have {n} sites")
    if not (np.all(np.abs(sx) == 1) and np.all(np.abs(sy) == 1)):
        raise ValueError("spins must be +1 or -1")
    kernel = _pair_kernel(x, y, gamma, delta_star, n)
    if kernel is None:
        return 0.0
    return float(sx @ kernel @ sy)


# ---------------------------------------------------------------------------
# block systems


@dataclass(frozen=True)
class Polymer:
    """A set of at least two block indices, kept strictly increasing."""

    blocks: tuple

    def __post_init__(self):
        b = tuple(int(v) for v in self.blocks)
        if len(b) < 2:
            raise ValueError("a polymer needs at least two blocks")
        if any(u >= v for u, v in zip(b, b[1:])):
            raise ValueError("polymer blocks must be strictly increasing")
        object.__setattr__(self, "blocks", b)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


@dataclass(frozen=True, eq=False)
class _BlockTables:
    """Exact enumeration of one constrained tilted block.

    sigma holds every admissible configuration as a row of +-1 over the
    block's local sites; probs is the matching normalized tilt weight.
    """

    lam: int
    d_size: int
    sigma: np.ndarray
    probs: np.ndarray


def _occupation(m, half):
    """Number of up spins on a half block at magnetization m."""
    k = (1.0 + m) * half / 2.0
    k_int = int(round(k))
    if abs(k - k_int) > 1e-9 or not 0 <= k_int <= half:
        raise ValueError(
            f"constraint {m} is not on the half-block magnetization lattice")
    return k_int


class BlockSystem:
    """A finite family of spin blocks under the constrained tilted measure.

    field gives each block's +-1 signs, one row per block (a flat array is
    reshaped); constraints gives the (m_plus, m_minus) half-block
    magnetization pair each block is conditioned on.  blocks lists the
    integer block indices and may leave gaps, so a few blocks near the
    coupling window can be studied in isolation; it defaults to the
    contiguous range starting at zero.
    """

    def __init__(self, field, constraints, *, gamma, delta_star, beta, theta,
                 blocks=None):
        n = block_size(gamma, delta_star)
        rows = np.array(field, dtype=np.int8)
        if rows.ndim == 1:
            if rows.size == 0 or rows.size % n:
                raise ValueError(
                    f"flat field length must be a positive multiple of {n}")
            rows = rows.reshape(-1, n)
        if rows.ndim != 2 or rows.shape[1] != n or rows.shape[0] == 0:
            raise ValueError(f"field must provide rows of {n} signs")
        if not np.all(np.abs(rows) == 1):
            raise ValueError("field values must be +1 or -1")
        cons = np.array(np.broadcast_to(np.asarray(constraints, dtype=float),
                                        (rows.shape[0], 2)))
        if blocks is None:
            blocks = range(rows.shape[0])
        idx = tuple(int(v) for v in blocks)
        if len(idx) != rows.shape[0]:
            raise ValueError("blocks must list one index per field row")
        if any(u >= v for u, v in zip(idx, idx[1:])):
            raise ValueError("blocks must be strictly increasing")
        if beta <= 0:
            raise ValueError("beta must be positive")
        if theta < 0:
            raise ValueError("theta must be nonnegative")
        self.gamma = float(gamma)
        self.delta_star = float(delta_star)
        self.beta = float(beta)
        self.theta = float(theta)
        self.n_sites = n
        self.half = n // 2
        self.blocks = idx
        rows.setflags(write=False)
        cons.setflags(write=False)
        self.rows = rows
        self.constraints = cons
        self._position = {b: i for i, b in enumerate(idx)}
        realization = FieldRealization(None, rows.ravel().copy())
        self._tables = [self._build_tables(realization, r)
                        for r in range(rows.shape[0])]
        self._kernels = {}
        self._factors = {}
        self._polymer_cache = {}

    def _build_tables(self, realization, r):
        stats = decompose_block(realization, r, self.gamma, self.delta_star)
        base = r * self.n_sites
        b_plus = stats.b_plus - base
        b_minus = stats.b_minus - base
        if stats.lam:
            majority = np.flatnonzero(self.rows[r] == stats.lam)
            d_local = majority[self.half:]
        else:
            d_local = np.empty(0, dtype=int)
        k1 = _occupation(self.constraints[r, 0], self.half)
        k2 = _occupation(self.constraints[r, 1], self.half)
        configs = []
        for up_plus in itertools.combinations(range(self.half), k1):
            for up_minus in itertools.combinations(range(self.half), k2):
                cfg = np.full(self.n_sites, -1.0)
                cfg[b_plus[list(up_plus)]] = 1.0
                cfg[b_minus[list(up_minus)]] = 1.0
                configs.append(cfg)
        sigma = np.array(configs)
        tilt = 2.0 * self.beta * self.theta * stats.lam
        weights = np.exp(tilt * sigma[:, d_local].sum(axis=1))
        return _BlockTables(lam=int(stats.lam), d_size=int(stats.d_size),
                            sigma=sigma, probs=weights / weights.sum())

    @property
    def n_blocks(self):
        return len(self.blocks)

    @property
    def lams(self):
        """Majority sign of each block, in listing order."""
        return np.array([t.lam for t in self._tables])

    def _kernel(self, a, b):
        if a > b:
            a, b = b, a
        if (a, b) not in self._kernels:
            self._kernels[a, b] = _pair_kernel(
                self.blocks[a], self.blocks[b], self.gamma, self.delta_star,
                self.n_sites)
        return self._kernels[a, b]

    def supported(self, a, b):
        """Whether blocks at listing positions a and b couple at all."""
        return self._kernel(a, b) is not None

    def _factor(self, a, b, mayer):
        """State-indexed e^(beta U) matrix between positions a and b.

        With mayer set, 1 is subtracted.  Positions must be a coupled pair.
        """
        if a > b:
            return self._factor(b, a, mayer).T
        key = (a, b, mayer)
        if key not in self._factors:
            u = self._tables[a].sigma @ self._kernel(a, b) @ self._tables[b].sigma.T
            bu = self.beta * u
            self._factors[key] = np.expm1(bu) if mayer else np.exp(bu)
        return self._factors[key]

    def coupled_pairs(self):
        """All coupled block-index pairs, in listing order."""
        out = []
        for a in range(self.n_blocks):
            for b in range(a + 1, self.n_blocks):
                if self.supported(a, b):
                    out.append((self.blocks[a], self.blocks[b]))
        return out

    def flip_site(self, site):
        """A new system with one field sign reversed, constraints kept."""
        site = int(site)
        if not 0 <= site < self.n_blocks * self.n_sites:
            raise ValueError("site outside the system")
        rows = self.rows.copy()
        rows[site // self.n_sites, site % self.n_sites] *= -1
        return BlockSystem(rows, self.constraints, gamma=self.gamma,
                           delta_star=self.delta_star, beta=self.beta,
                           theta=self.theta, blocks=self.blocks)


# ---------------------------------------------------------------------------
# expectation contraction


def _contract(system, positions, mats):
    """Sum over joint block states of prod probs times prod pair matrices.

    mats maps (i, j) pairs of local indices into positions to state-indexed
    matrices.
    """
    subs = []
    ops = []
    for i, pos in enumerate(positions):
        subs.append(_LETTERS[i])
        ops.append(system._tables[pos].probs)
    for (i, j), mat in mats.items():
        subs.append(_LETTERS[i] + _LETTERS[j])
        ops.append(mat)
    return float(np.einsum(",".join(subs) + "->", *ops, optimize=True))


def _spanning_connected(edges, k):
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    touched = set()
    for a, b in edges:
        touched.update((a, b))
        parent[find(a)] = find(b)
    return len(touched) == k and len({find(i) for i in range(k)}) == 1


def _spanning_subsets(edges, k):
    """Edge subsets that connect all k vertices."""
    out = []
    for count in range(max(k - 1, 1), len(edges) + 1):
        for subset in itertools.combinations(edges, count):
            if _spanning_connected(subset, k):
                out.append(subset)
    return out


# ---------------------------------------------------------------------------
# activities and direct evaluation


def polymer_activity(polymer, system, *, r_max=R_MAX_DEFAULT):
    """Activity rho of a polymer: connected-graph sum of coupling factors.

    The expectation of the product of e^(beta U) - 1 over the links of every
    connected graph spanning the polymer, under the product measure of the
    system.  Zero whenever the polymer is not connected through the coupling
    window.
    """
    blocks = tuple(polymer.blocks) if isinstance(polymer, Polymer) \
        else tuple(sorted(int(v) for v in polymer))
    if len(blocks) < 2 or len(set(blocks)) != len(blocks):
        raise ValueError("a polymer is a set of at least two distinct blocks")
    if len(blocks) > r_max:
        raise SizeLimitError(
            f"polymer size {len(blocks)} exceeds the cap {r_max}")
    if system.n_sites > _ACTIVITY_SITE_CAP:
        raise SizeLimitError(
            f"activities need blocks of at most {_ACTIVITY_SITE_CAP} sites")
    try:
        pos = [system._position[b] for b in blocks]
    except KeyError as err:
        raise ValueError(f"block {err.args[0]} is not in the system") from None
    k = len(pos)
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)
             if system.supported(pos[i], pos[j])]
    total = 0.0
    for graph in _spanning_subsets(edges, k):
        mats = {(i, j): system._factor(pos[i], pos[j], True)
                for i, j in graph}
        total += _contract(system, pos, mats)
    return total


def _components(system):
    """Connected components of the coupling graph, as position lists."""
    n = system.n_blocks
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start]:
            continue
        comp, stack = [], [start]
        seen[start] = True
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in range(n):
                if not seen[j] and system.supported(i, j):
                    seen[j] = True
                    stack.append(j)
        comps.append(sorted(comp))
    return comps


def v_direct(system):
    """Exact log-expectation of all pair couplings, per unit inverse
    temperature.

    Factorizes over connected components of the coupling graph; decoupled
    blocks contribute nothing.
    """
    if system.n_blocks > _DIRECT_BLOCK_CAP:
        raise SizeLimitError(
            f"direct evaluation caps at {_DIRECT_BLOCK_CAP} blocks")
    if system.n_sites > _DIRECT_SITE_CAP:
        raise SizeLimitError(
            f"direct evaluation needs blocks of at most {_DIRECT_SITE_CAP} sites")
    total = 0.0
    for comp in _components(system):
        if len(comp) == 1:
            continue
        mats = {(i, j): system._factor(comp[i], comp[j], False)
                for i in range(len(comp)) for j in range(i + 1, len(comp))
                if system.supported(comp[i], comp[j])}
        total += math.log(_contract(system, comp, mats)) / system.beta
    return total


# ---------------------------------------------------------------------------
# polymer series


def _polymer_table(system, r_max):
    """All window-connected block subsets up to r_max with their activities."""
    if r_max in system._polymer_cache:
        return system._polymer_cache[r_max]
    n = system.n_blocks
    nbrs = [[j for j in range(n) if j != i and system.supported(i, j)]
            for i in range(n)]
    level = {frozenset((i,)) for i in range(n)}
    subsets = []
    for _ in range(2, r_max + 1):
        grown = set()
        for s in level:
            for i in s:
                for j in nbrs[i]:
                    if j not in s:
                        grown.add(s | {j})
        level = grown
        subsets.extend(sorted(tuple(sorted(s)) for s in grown))
    table = []
    for pos in subsets:
        rho = polymer_activity(tuple(system.blocks[p] for p in pos), system,
                               r_max=r_max)
        table.append((pos, rho))
    system._polymer_cache[r_max] = table
    return table


def s_bound(system):
    """Printed ceiling for the series certificate."""
    return 6.0 * math.exp(3.0) * system.beta * system.delta_star ** 2 / system.gamma


def s_estimate(system, *, r_max=R_MAX_DEFAULT):
    """Series certificate: largest per-block sum of exp(|R|) |rho(R)|.

    The value is expected to stay below 6 e^3 beta (delta*)^2/gamma; a
    violation is reported as a warning with its margin, never raised.
    """
    per_block = [0.0] * system.n_blocks
    for pos, rho in _polymer_table(system, r_max):
        weight = math.exp(len(pos)) * abs(rho)
        for p in pos:
            per_block[p] += weight
    value = max(per_block) if per_block else 0.0
    ceiling = s_bound(system)
    if value >= ceiling:
        warnings.warn(
            f"series certificate {value:.6g} is not below its ceiling "
            f"{ceiling:.6g} (margin {value - ceiling:.3g})",
            RuntimeWarning, stacklevel=2)
    return value


_URSELL_CACHE = {}


def _ursell(k, mask):
    """Hard-core Ursell coefficient of an overlap graph on k instances.

    mask sets one bit per vertex pair in lexicographic order; each kept edge
    carries a factor -1, and only subsets connecting all k vertices count.
    """
    if k == 1:
        return 1
    key = (k, mask)
    if key not in _URSELL_CACHE:
        pairs = list(itertools.combinations(range(k), 2))
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        total = 0
        for graph in _spanning_subsets(edges, k):
            total += -1 if len(graph) % 2 else 1
        _URSELL_CACHE[key] = total
    return _URSELL_CACHE[key]


def _require_convergent(system):
    strength = system.delta_star ** 2 / system.gamma
    ceiling = 1.0 / (6.0 * math.exp(3.0) * system.beta)
    if not strength < ceiling:
        raise ConvergenceError(
            f"coupling strength (delta*)^2/gamma = {strength:.6g} must be "
            f"below {ceiling:.6g} at beta = {system.beta:g}")


def v_series(system, order, *, r_max=R_MAX_DEFAULT):
    """Truncated polymer series for the coupling log-weight, with its tail.

    Sums all multisets of up to `order` polymers weighted by activities and
    hard-core Ursell coefficients.  Returns (value, tail_bound) where the
    tail is geometric in the series certificate S: n_blocks S^order/(1-S)
    per unit inverse temperature.
    """
    order = int(order)
    if not 1 <= order <= ORDER_MAX:
        raise ValueError(f"order must be between 1 and {ORDER_MAX}")
    _require_convergent(system)
    table = [(pos, rho) for pos, rho in _polymer_table(system, r_max)
             if rho != 0.0]
    sets = [frozenset(pos) for pos, _ in table]
    rhos = [rho for _, rho in table]
    total = 0.0
    for count in range(1, order + 1):
        for multi in itertools.combinations_with_replacement(
                range(len(table)), count):
            mask = 0
            bit = 0
            for i in range(count):
                for j in range(i + 1, count):
                    if sets[multi[i]] & sets[multi[j]]:
                        mask |= 1 << bit
                    bit += 1
            phi = _ursell(count, mask)
            if phi == 0:
                continue
            term = float(phi)
            for i in multi:
                term *= rhos[i]
            for mult in Counter(multi).values():
                term /= math.factorial(mult)
            total += term
    certificate = s_estimate(system, r_max=r_max)
    if certificate >= 1.0:
        raise ConvergenceError(
            f"series certificate {certificate:.6g} reached 1; tail undefined")
    tail = system.n_blocks * certificate ** order / (1.0 - certificate) \
        / system.beta
    return total / system.beta, tail


def lipschitz_check(system, site, *, r_max=R_MAX_DEFAULT):
    """Half the direct-value change under one field sign flip, and its bound.

    The bound is S/((1-S) beta) with S the larger series certificate of the
    two fields; the empirical value is expected to stay within it, and a
    violation is reported as a warning with its margin.
    """
    _require_convergent(system)
    flipped = system.flip_site(site)
    empirical = abs(v_direct(system) - v_direct(flipped)) / 2.0
    certificate = max(s_estimate(system, r_max=r_max),
                      s_estimate(flipped, r_max=r_max))
    if certificate >= 1.0:
        raise ConvergenceError(
            f"series certificate {certificate:.6g} reached 1; bound undefined")
    bound = certificate / (1.0 - certificate) / system.beta
    if empirical > bound:
        warnings.warn(
            f"flip response {empirical:.6g} exceeds its bound {bound:.6g} "
            f"(margin {empirical - bound:.3g})",
            RuntimeWarning, stacklevel=2)
    return empirical, bound
