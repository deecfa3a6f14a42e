"""Bilateral walk of window increments and the interface localization.

The walk cumulates window increments chi(alpha) into a two-sided path Y
anchored at Y_0 = 0.  An interval (a, b] is a positive elongation when its
net increment clears 2*f_star + f while no subinterval drops more than
2*f_star - f; negative elongations are the mirror image.  Breaking points
are first minimizers and maximizers of Y over explicit search windows
between consecutive elongations of opposite sign; the open interval J
between the two breaking points surrounding the origin localizes the
interface, and the sign tau is read off the net increment over J shrunk by
a safety margin at both ends.

Paths whose elongation pattern cannot support the construction are a
classified outcome, not an error: `construct_localization` returns an
output with `exceptional` set to a short reason, and
`exceptional_membership` sorts a path into the failure classes that the
probability estimates control.

`verify_bounds` runs a registry of Monte Carlo checks comparing crossing
times, repeated-sign indices, hitting splits, argmax laws, and interval
length tails of sampled walks against printed one-sided bounds; every
check reports the empirical frequency with a 99 percent confidence
interval and enforces the hypotheses of the bound it tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WalkPath",
    "ElongationParams",
    "Elongation",
    "BoundaryMaps",
    "LocalizationOutput",
    "StoppingTimeTrace",
    "BoundCheck",
    "VerifyConfig",
    "VerifyReport",
    "HypothesisViolationError",
    "classify_elongation",
    "boundary_maps",
    "construct_localization",
    "exceptional_membership",
    "stopping_trace",
    "sample_walk_path",
    "verify_bounds",
]

Z99 = 2.5758293035489004


# ---------------------------------------------------------------------------
# path container and parameters


@dataclass(frozen=True, eq=False)
class WalkPath:
    """Two-sided increment path with the origin pinned to zero.

    increments[i] is the step chi(alpha) into position alpha =
    alpha_min + 1 + i, so Y lives on the integer range
    [alpha_min, alpha_max] with Y_0 = 0 and Y_alpha - Y_{alpha-1} =
    chi(alpha).  The range must contain 0.
    """

    increments: np.ndarray
    alpha_min: int
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        inc = np.ascontiguousarray(np.asarray(self.increments, dtype=float))
        if inc.ndim != 1 or inc.size == 0:
            raise ValueError("increments must be a nonempty 1d array")
        if not np.all(np.isfinite(inc)):
            raise ValueError("increments must be finite")
        a_min = int(self.alpha_min)
        if not a_min <= 0 <= a_min + inc.size:
            raise ValueError("path range must contain the origin")
        y = np.concatenate(([0.0], np.cumsum(inc)))
        y -= y[-a_min]
        inc.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "alpha_min", a_min)
        object.__setattr__(self, "y", y)

    @property
    def alpha_max(self) -> int:
        return self.alpha_min + self.increments.size

    def __len__(self) -> int:
        return self.increments.size

    def index(self, alpha: int) -> int:
        """Position of Y_alpha inside the y array."""
        i = int(alpha) - self.alpha_min
        if not 0 <= i < self.y.size:
            raise ValueError(f"alpha={alpha} outside [{self.alpha_min}, {self.alpha_max}]")
        return i

    def alpha_of(self, index: int) -> int:
        return self.alpha_min + int(index)

    def y_at(self, alpha: int) -> float:
        return float(self.y[self.index(alpha)])

    def chi_at(self, alpha: int) -> float:
        i = int(alpha) - self.alpha_min - 1
        if not 0 <= i < self.increments.size:
            raise ValueError(f"no increment into alpha={alpha}")
        return float(self.increments[i])

    def interval_sum(self, a: int, b: int) -> float:
        """Net increment over (a, b]."""
        return self.y_at(b) - self.y_at(a)

    def mirrored(self) -> "WalkPath":
        return WalkPath(-np.asarray(self.increments), self.alpha_min)


@dataclass(frozen=True)
class ElongationParams:
    """Thresholds for elongation detection on a window path.

    f_star is the barrier scale; the margin f defaults to eps**(1/4) and
    must stay strictly below f_star / 4.  rho sets the localization
    trim rho/eps (in window units) and defaults to eps**(1/(4*(2+a))).
    q_span is the half range in macro units; q_span/eps must be a whole
    number of windows.
    """

    f_star: float
    eps: float
    q_span: float
    f: float = None
    rho: float = None
    a: float = 1.0
    n_side: int = field(init=False)

    def __post_init__(self):
        if not self.f_star > 0:
            raise ValueError("f_star must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.q_span > 0:
            raise ValueError("q_span must be positive")
        if not self.a > 0:
            raise ValueError("a must be positive")
        f = float(self.eps**0.25 if self.f is None else self.f)
        rho = float(
            self.eps ** (1.0 / (4.0 * (2.0 + self.a))) if self.rho is None else self.rho
        )
        if not 0.0 < f < self.f_star / 4.0:
            raise ValueError("f must lie strictly inside (0, f_star/4)")
        if not rho > 0:
            raise ValueError("rho must be positive")
        n_side = self.q_span / self.eps
        if abs(n_side - round(n_side)) > 1e-9 or round(n_side) < 1:
            raise ValueError("q_span/eps must be a positive whole number of windows")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "n_side", int(round(n_side)))

    @property
    def rise_threshold(self) -> float:
        """Net increment a positive elongation must reach: 2 f_star + f."""
        return 2.0 * self.f_star + self.f

    @property
    def sag_threshold(self) -> float:
        """Largest opposing excursion an elongation tolerates: 2 f_star - f."""
        return 2.0 * self.f_star - self.f

    def delta_tilde(self, rho: float = None) -> float:
        """Height tolerance rho**(2+a) used by the near-miss flags."""
        r = self.rho if rho is None else float(rho)
        return r ** (2.0 + self.a)


@dataclass(frozen=True)
class Elongation:
    """One chain segment (a, b] with its sign."""

    interval: tuple
    sign: int

    @property
    def a(self) -> int:
        return self.interval[0]

    @property
    def b(self) -> int:
        return self.interval[1]


def classify_elongation(path: WalkPath, interval, params: ElongationParams) -> str:
    """Label (a, b] as "positive", "negative", or "none" in one pass.

    The deepest subinterval drop equals max over b' of (running max before
    b') - Y_{b'}, so a single sweep with running extrema decides both sign
    conditions; endpoints outside the path raise ValueError.
    """
    a, b = interval
    ia = path.index(int(a))
    ib = path.index(int(b))
    if not ia < ib:
        raise ValueError("interval (a, b] needs a < b")
    seg = path.y[ia : ib + 1]
    net = float(seg[-1] - seg[0])
    run_max = np.maximum.accumulate(seg[:-1])
    drop = float(np.max(run_max - seg[1:]))
    run_min = np.minimum.accumulate(seg[:-1])
    gain = float(np.max(seg[1:] - run_min))
    if net >= params.rise_threshold and drop <= params.sag_threshold:
        return "positive"
    if net <= -params.rise_threshold and gain <= params.sag_threshold:
        return "negative"
    return "none"


# ---------------------------------------------------------------------------
# range statistics: doubling tables with O(1) queries


class _RangeStats:
    """Doubling tables over y for vectorized range extrema and drop/gain.

    Max and min queries use the usual overlapping halves.  drop(lo, hi)
    is max(0, max_{lo <= i < j <= hi} y_i - y_j) and gain is its mirror;
    both are order-sensitive, so their queries walk a disjoint cover of
    the range left to right, carrying the running aggregate.  The zero
    floor stands for "no falling pair", and every threshold compared
    against these is positive.  All query methods accept equal-length
    integer arrays.
    """

    __slots__ = ("y", "n", "levels", "log2", "MX", "MN", "DD", "DU")

    def __init__(self, y):
        y = np.asarray(y, dtype=float)
        n = y.size
        levels = max(1, int(n).bit_length())
        MX = np.empty((levels, n))
        MN = np.empty((levels, n))
        DD = np.zeros((levels, n))
        DU = np.zeros((levels, n))
        MX[0] = y
        MN[0] = y
        for j in range(1, levels):
            h = 1 << (j - 1)
            m = n - (1 << j) + 1
            if m <= 0:
                break
            MX[j, :m] = np.maximum(MX[j - 1, :m], MX[j - 1, h : h + m])
            MN[j, :m] = np.minimum(MN[j - 1, :m], MN[j - 1, h : h + m])
            DD[j, :m] = np.maximum(
                np.maximum(DD[j - 1, :m], DD[j - 1, h : h + m]),
                MX[j - 1, :m] - MN[j - 1, h : h + m],
            )
            DU[j, :m] = np.maximum(
                np.maximum(DU[j - 1, :m], DU[j - 1, h : h + m]),
                MX[j - 1, h : h + m] - MN[j - 1, :m],
            )
        self.y = y
        self.n = n
        self.levels = levels
        self.log2 = np.floor(np.log2(np.arange(1, n + 1))).astype(np.int64)
        self.MX = MX
        self.MN = MN
        self.DD = DD
        self.DU = DU

    def _halves(self, lo, hi):
        k = self.log2[hi - lo]
        off = hi - (1 << k).astype(np.int64) + 1
        return k, off

    def range_max(self, lo, hi):
        k, off = self._halves(lo, hi)
        return np.maximum(self.MX[k, lo], self.MX[k, off])

    def range_min(self, lo, hi):
        k, off = self._halves(lo, hi)
        return np.minimum(self.MN[k, lo], self.MN[k, off])

    def range_drop(self, lo, hi):
        """Deepest falling pair over [lo, hi], floored at zero."""
        lo = np.asarray(lo, dtype=np.int64)
        length = np.asarray(hi, dtype=np.int64) - lo + 1
        acc_dd = np.zeros(lo.shape)
        acc_mx = np.full(lo.shape, -np.inf)
        pos = lo.copy()
        for j in range(self.levels - 1, -1, -1):
            idx = np.nonzero((length >> j) & 1)[0]
            if idx.size == 0:
                continue
            p = pos[idx]
            nd = np.maximum(np.maximum(acc_dd[idx], self.DD[j, p]), acc_mx[idx] - self.MN[j, p])
            acc_dd[idx] = nd
            acc_mx[idx] = np.maximum(acc_mx[idx], self.MX[j, p])
            pos[idx] = p + (1 << j)
        return acc_dd

    def range_gain(self, lo, hi):
        """Steepest rising pair over [lo, hi], floored at zero."""
        lo = np.asarray(lo, dtype=np.int64)
        length = np.asarray(hi, dtype=np.int64) - lo + 1
        acc_du = np.zeros(lo.shape)
        acc_mn = np.full(lo.shape, np.inf)
        pos = lo.copy()
        for j in range(self.levels - 1, -1, -1):
            idx = np.nonzero((length >> j) & 1)[0]
            if idx.size == 0:
                continue
            p = pos[idx]
            ng = np.maximum(np.maximum(acc_du[idx], self.DU[j, p]), self.MX[j, p] - acc_mn[idx])
            acc_du[idx] = ng
            acc_mn[idx] = np.minimum(acc_mn[idx], self.MN[j, p])
            pos[idx] = p + (1 << j)
        return acc_du

    def reach_right_drop(self, start, cap):
        """Largest e >= start with drop(start..e) <= cap, per row."""
        pos = np.array(start, dtype=np.int64, copy=True)
        acc_dd = np.zeros(pos.shape)
        acc_mx = np.full(pos.shape, -np.inf)
        for j in range(self.levels - 1, -1, -1):
            ok = np.nonzero(pos + (1 << j) - 1 <= self.n - 1)[0]
            if ok.size == 0:
                continue
            p = pos[ok]
            nd = np.maximum(np.maximum(acc_dd[ok], self.DD[j, p]), acc_mx[ok] - self.MN[j, p])
            good = nd <= cap
            g = ok[good]
            pg = p[good]
            acc_dd[g] = nd[good]
            acc_mx[g] = np.maximum(acc_mx[g], self.MX[j, pg])
            pos[g] = pg + (1 << j)
        return pos - 1

    def reach_right_gain(self, start, cap):
        """Largest e >= start with gain(start..e) <= cap, per row."""
        pos = np.array(start, dtype=np.int64, copy=True)
        acc_du = np.zeros(pos.shape)
        acc_mn = np.full(pos.shape, np.inf)
        for j in range(self.levels - 1, -1, -1):
            ok = np.nonzero(pos + (1 << j) - 1 <= self.n - 1)[0]
            if ok.size == 0:
                continue
            p = pos[ok]
            ng = np.maximum(np.maximum(acc_du[ok], self.DU[j, p]), self.MX[j, p] - acc_mn[ok])
            good = ng <= cap
            g = ok[good]
            pg = p[good]
            acc_du[g] = ng[good]
            acc_mn[g] = np.minimum(acc_mn[g], self.MN[j, pg])
            pos[g] = pg + (1 << j)
        return pos - 1

    def reach_left_drop(self, end, cap):
        """Smallest s <= end with drop(s..end) <= cap, per row."""
        pos = np.array(end, dtype=np.int64, copy=True)
        acc_dd = np.zeros(pos.shape)
        acc_mn = np.full(pos.shape, np.inf)
        for j in range(self.levels - 1, -1, -1):
            ok = np.nonzero(pos - (1 << j) + 1 >= 0)[0]
            if ok.size == 0:
                continue
            s = pos[ok] - (1 << j) + 1
            nd = np.maximum(np.maximum(acc_dd[ok], self.DD[j, s]), self.MX[j, s] - acc_mn[ok])
            good = nd <= cap
            g = ok[good]
            sg = s[good]
            acc_dd[g] = nd[good]
            acc_mn[g] = np.minimum(acc_mn[g], self.MN[j, sg])
            pos[g] = sg - 1
        return pos + 1

    def reach_left_gain(self, end, cap):
        """Smallest s <= end with gain(s..end) <= cap, per row."""
        pos = np.array(end, dtype=np.int64, copy=True)
        acc_du = np.zeros(pos.shape)
        acc_mx = np.full(pos.shape, -np.inf)
        for j in range(self.levels - 1, -1, -1):
            ok = np.nonzero(pos - (1 << j) + 1 >= 0)[0]
            if ok.size == 0:
                continue
            s = pos[ok] - (1 << j) + 1
            ng = np.maximum(np.maximum(acc_du[ok], self.DU[j, s]), acc_mx[ok] - self.MN[j, s])
            good = ng <= cap
            g = ok[good]
            sg = s[good]
            acc_du[g] = ng[good]
            acc_mx[g] = np.maximum(acc_mx[g], self.MX[j, sg])
            pos[g] = sg - 1
        return pos + 1

    def _scan_forward(self, lo, hi, x, extreme, cmp_skip):
        """First i in [lo, hi] with y_i passing the threshold, else n."""
        n = self.n
        out = np.full(lo.shape, n, dtype=np.int64)
        alive = lo <= hi
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            return out
        has = cmp_skip(extreme(lo[idx], hi[idx]), x[idx])
        idx = idx[~has]
        if idx.size == 0:
            return out
        cur = lo[idx].copy()
        hj = hi[idx]
        xj = x[idx]
        for j in range(self.levels - 1, -1, -1):
            cand_end = cur + (1 << j) - 1
            ok = np.nonzero(cand_end <= hj)[0]
            if ok.size == 0:
                continue
            skip = cmp_skip(extreme(cur[ok], cand_end[ok]), xj[ok])
            cur[ok[skip]] += 1 << j
        out[idx] = cur
        return out

    def _scan_backward(self, lo, hi, x, extreme, cmp_skip):
        """Last i in [lo, hi] with y_i passing the threshold, else -1."""
        out = np.full(lo.shape, -1, dtype=np.int64)
        alive = lo <= hi
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            return out
        has = cmp_skip(extreme(lo[idx], hi[idx]), x[idx])
        idx = idx[~has]
        if idx.size == 0:
            return out
        cur = hi[idx].copy()
        lj = lo[idx]
        xj = x[idx]
        for j in range(self.levels - 1, -1, -1):
            cand_start = cur - (1 << j) + 1
            ok = np.nonzero(cand_start >= lj)[0]
            if ok.size == 0:
                continue
            skip = cmp_skip(extreme(cand_start[ok], cur[ok]), xj[ok])
            cur[ok[skip]] -= 1 << j
        out[idx] = cur
        return out

    def first_at_least(self, lo, hi, x):
        return self._scan_forward(lo, hi, x, self.range_max, np.less)

    def first_at_most(self, lo, hi, x):
        return self._scan_forward(lo, hi, x, self.range_min, np.greater)

    def last_at_least(self, lo, hi, x):
        return self._scan_backward(lo, hi, x, self.range_max, np.less)

    def last_at_most(self, lo, hi, x):
        return self._scan_backward(lo, hi, x, self.range_min, np.greater)


# ---------------------------------------------------------------------------
# boundary maps


class BoundaryMaps:
    """First and last elongation partners for every path position.

    b_minus(a) / b_plus(a) give the first / last end of an elongation
    starting at a; a_minus(b) / a_plus(b) give the first / last start of
    one ending at b.  An absent partner is returned as None.  All eight
    sign-restricted arrays are precomputed, so point queries are O(1).
    """

    def __init__(self, path: WalkPath, params: ElongationParams):
        self.path = path
        self.params = params
        self.stats = _RangeStats(path.y)
        n = self.stats.n
        self.n = n
        H = params.rise_threshold
        G = params.sag_threshold
        st = self.stats

        starts = np.arange(0, max(n - 1, 0), dtype=np.int64)
        ya = path.y[starts]
        lo = starts + 1
        reach_d = st.reach_right_drop(starts, G)
        reach_u = st.reach_right_gain(starts, G)
        r_pos = st.first_at_least(lo, reach_d, ya + H)
        bp_pos = st.last_at_least(lo, reach_d, ya + H)
        r_neg = st.first_at_most(lo, reach_u, ya - H)
        bp_neg = st.last_at_most(lo, reach_u, ya - H)

        ends = np.arange(1, n, dtype=np.int64)
        yb = path.y[ends]
        hi = ends - 1
        back_d = st.reach_left_drop(ends, G)
        back_u = st.reach_left_gain(ends, G)
        am_pos = st.first_at_most(back_d, hi, yb - H)
        ap_pos = st.last_at_most(back_d, hi, yb - H)
        am_neg = st.first_at_least(back_u, hi, yb + H)
        ap_neg = st.last_at_least(back_u, hi, yb + H)

        def pad_end(arr):
            out = np.full(n, n, dtype=np.int64)
            out[: arr.size] = arr
            return out

        def pad_end_last(arr):
            out = np.full(n, -1, dtype=np.int64)
            out[: arr.size] = arr
            return out

        def pad_start(arr, sentinel):
            out = np.full(n, sentinel, dtype=np.int64)
            out[1:] = arr
            return out

        self.r = {1: pad_end(r_pos), -1: pad_end(r_neg)}
        self.bp = {1: pad_end_last(bp_pos), -1: pad_end_last(bp_neg)}
        self.am = {1: pad_start(am_pos, n), -1: pad_start(am_neg, n)}
        self.ap = {1: pad_start(ap_pos, -1), -1: pad_start(ap_neg, -1)}
        self.b_minus_arr = np.minimum(self.r[1], self.r[-1])
        self.b_plus_arr = np.maximum(self.bp[1], self.bp[-1])
        self.a_minus_arr = np.minimum(self.am[1], self.am[-1])
        self.a_plus_arr = np.maximum(self.ap[1], self.ap[-1])

    def _start_index(self, a: int) -> int:
        i = self.path.index(a)
        if i > self.n - 2:
            raise ValueError("no interval starts at the right edge")
        return i

    def _end_index(self, b: int) -> int:
        i = self.path.index(b)
        if i < 1:
            raise ValueError("no interval ends at the left edge")
        return i

    def b_minus(self, a: int):
        v = self.b_minus_arr[self._start_index(a)]
        return None if v >= self.n else self.path.alpha_of(v)

    def b_plus(self, a: int):
        v = self.b_plus_arr[self._start_index(a)]
        return None if v < 0 else self.path.alpha_of(v)

    def a_minus(self, b: int):
        v = self.a_minus_arr[self._end_index(b)]
        return None if v >= self.n else self.path.alpha_of(v)

    def a_plus(self, b: int):
        v = self.a_plus_arr[self._end_index(b)]
        return None if v < 0 else self.path.alpha_of(v)


def boundary_maps(path: WalkPath, params: ElongationParams) -> BoundaryMaps:
    """Precompute all four boundary maps for a path."""
    return BoundaryMaps(path, params)


# ---------------------------------------------------------------------------
# localization construction


@dataclass(frozen=True)
class LocalizationOutput:
    """Breaking points, chain, localization intervals, and interface sign.

    alpha_stars holds (index, position) pairs sorted by index; position 0
    is the central breaking point.  j_alpha is the open interval between
    the two breaking points around the origin in window units; i_alpha is
    j_alpha shrunk by the trim at both ends (floats).  j_interval and
    i_interval are the same in macro units when gamma was supplied.  tau
    is the sign of the net increment over i_alpha, 0 when i_alpha is
    empty.  exceptional carries a short reason when the construction did
    not go through; origin_flag marks the arbitrary case alpha*_0 == 0.
    """

    alpha_stars: tuple
    chain: tuple
    seed_interval: tuple
    seed_sign: int
    anchors: tuple
    windows: tuple
    j_alpha: tuple
    i_alpha: tuple
    j_interval: tuple
    i_interval: tuple
    tau: int
    exceptional: str
    origin_flag: bool

    @property
    def is_exceptional(self) -> bool:
        return self.exceptional is not None

    @property
    def stars(self) -> dict:
        return dict(self.alpha_stars)

    def star(self, j: int) -> int:
        return dict(self.alpha_stars)[j]

    def anchor(self, name: str) -> int:
        return dict(self.anchors)[name]

    def window(self, name: str):
        return dict(self.windows)[name]


def _exceptional_output(reason, stars, anchors, windows, seed, seed_sign):
    return LocalizationOutput(
        alpha_stars=tuple(sorted(stars.items())),
        chain=(),
        seed_interval=seed,
        seed_sign=seed_sign,
        anchors=tuple(sorted(anchors.items())),
        windows=tuple(sorted(windows.items())),
        j_alpha=None,
        i_alpha=None,
        j_interval=None,
        i_interval=None,
        tau=0,
        exceptional=reason,
        origin_flag=False,
    )


def _first_true_at_or_after(mask, start):
    """Smallest index >= start with mask true, else -1."""
    sub = mask[start:]
    if not sub.any():
        return -1
    return start + int(np.argmax(sub))


def _last_true_before(mask, stop):
    """Largest index < stop with mask true, else -1."""
    sub = mask[:stop]
    if not sub.any():
        return -1
    return int(sub.size - 1 - np.argmax(sub[::-1]))


def _construct_core(path, maps, params, extensions):
    """Run the seed-positive construction on index arrays.

    Returns (stars, anchors, windows, left_cap, right_cap, None) on
    success, or (partial stars, anchors, windows, None, None, reason)
    when the path is exceptional.
    """
    n = maps.n
    y = path.y
    i0 = path.index(0)
    end_ok = {s: maps.ap[s] > -1 for s in (1, -1)}
    start_ok = {s: maps.r[s] < n for s in (1, -1)}

    stars = {}
    anchors = {}
    windows = {}

    # seed: first start at or right of the origin, full map
    a0 = _first_true_at_or_after(start_ok[1] | start_ok[-1], i0)
    if a0 < 0:
        return stars, anchors, windows, None, None, "no elongation starting at or right of the origin"
    b0 = int(maps.b_minus_arr[a0])
    anchors["a_0"] = a0
    anchors["b_0"] = b0

    # backward companion: last negative elongation ending before the seed end
    bm1 = _last_true_before(end_ok[-1], b0)
    if bm1 < 0:
        return stars, anchors, windows, None, None, "no negative elongation ending left of the seed end"
    am1 = int(maps.ap[-1][bm1])
    anchors["a_-1"] = am1
    anchors["b_-1"] = bm1
    if am1 >= i0:
        return stars, anchors, windows, None, None, "backward companion starts at or right of the origin"
    floor0 = int(maps.a_minus_arr[b0])
    if floor0 >= n or bm1 < floor0:
        return stars, anchors, windows, None, None, "backward window collapsed"
    star0 = floor0 + int(np.argmin(y[floor0 : bm1 + 1]))
    stars[0] = star0
    windows["star_0"] = (floor0, bm1)

    # forward step: first negative elongation starting after the center
    cap0 = int(maps.b_plus_arr[star0]) if star0 <= n - 2 else -1
    if cap0 < 0:
        return stars, anchors, windows, None, None, "no elongation resumes at the central breaking point"
    a1 = _first_true_at_or_after(start_ok[-1], star0 + 1)
    if a1 < 0:
        return stars, anchors, windows, None, None, "no negative elongation starting right of the center"
    if a1 > cap0:
        return stars, anchors, windows, None, None, "forward window collapsed"
    b1 = int(maps.r[-1][a1])
    anchors["a_1"] = a1
    anchors["b_1"] = b1
    star1 = a1 + int(np.argmax(y[a1 : cap0 + 1]))
    stars[1] = star1
    windows["star_1"] = (a1, cap0)
    right_cap = b1
    out_sign = -1  # sign of the chain segment leaving the rightmost star

    if star0 >= i0:
        # the center is not negative: extend once to the left in search of
        # a negative breaking point
        bm2 = _last_true_before(end_ok[1], star0)
        if bm2 < 1:
            return stars, anchors, windows, None, None, "no positive elongation ending left of the center"
        am2 = int(maps.ap[1][bm2])
        anchors["a_-2"] = am2
        anchors["b_-2"] = bm2
        floor1 = int(maps.a_minus_arr[star0]) if star0 >= 1 else n
        if floor1 >= n:
            return stars, anchors, windows, None, None, "no elongation ends at the central breaking point"
        if bm2 < floor1:
            return stars, anchors, windows, None, None, "left extension window collapsed"
        starm1 = floor1 + int(np.argmax(y[floor1 : bm2 + 1]))
        if starm1 >= i0:
            return stars, anchors, windows, None, None, "left breaking point not negative"
        stars[-1] = starm1
        windows["star_-1"] = (floor1, bm2)
        left_cap = am2
        in_sign = 1  # sign of the chain segment entering the leftmost star
    else:
        left_cap = am1
        in_sign = -1

    # optional extensions, alternating signs outward on both sides
    jmax = 1
    for _ in range(extensions):
        prev = stars[jmax]
        want = -out_sign
        cap = int(maps.b_plus_arr[prev]) if prev <= n - 2 else -1
        if cap < 0:
            break
        a_next = _first_true_at_or_after(start_ok[want], prev + 1)
        if a_next < 0 or a_next > cap:
            break
        stars[jmax + 1] = a_next + int(
            np.argmin(y[a_next : cap + 1]) if want > 0 else np.argmax(y[a_next : cap + 1])
        )
        windows[f"star_{jmax + 1}"] = (a_next, cap)
        right_cap = int(maps.r[want][a_next])
        out_sign = want
        jmax += 1
    jmin = min(stars)
    for _ in range(extensions):
        prev = stars[jmin]
        want = -in_sign
        floor = int(maps.a_minus_arr[prev]) if prev >= 1 else n
        if floor >= n:
            break
        b_next = _last_true_before(end_ok[want], prev)
        if b_next < 1 or b_next < floor:
            break
        stars[jmin - 1] = floor + int(
            np.argmax(y[floor : b_next + 1]) if want > 0 else np.argmin(y[floor : b_next + 1])
        )
        windows[f"star_{jmin - 1}"] = (floor, b_next)
        left_cap = int(maps.ap[want][b_next])
        in_sign = want
        jmin -= 1

    return stars, anchors, windows, left_cap, right_cap, None


def construct_localization(
    path: WalkPath,
    params: ElongationParams,
    *,
    gamma: float = None,
    extra_trim: float = 0.0,
    extensions: int = 0,
    maps: BoundaryMaps = None,
) -> LocalizationOutput:
    """Build breaking points and the localization interval around 0.

    The seed is the first elongation starting at or right of the origin;
    a negative seed mirrors the path so the core always runs seed
    positive.  extensions (up to 5) adds that many further breaking
    points on each side when the chain continues.  extra_trim widens the
    i-interval trim by extra_trim (macro units, needs gamma); gamma also
    switches on the macro-unit j_interval / i_interval fields.
    """
    if not 0 <= int(extensions) <= 5:
        raise ValueError("extensions must be between 0 and 5")
    if extra_trim < 0:
        raise ValueError("extra_trim must be nonnegative")
    if extra_trim > 0 and gamma is None:
        raise ValueError("extra_trim is in macro units and needs gamma")
    if maps is None:
        maps = boundary_maps(path, params)
    n = maps.n
    i0 = path.index(0)

    start_any = (maps.r[1] < n) | (maps.r[-1] < n)
    a0 = _first_true_at_or_after(start_any, i0)
    if a0 < 0:
        return _exceptional_output(
            "no elongation starting at or right of the origin", {}, {}, {}, None, 0
        )
    seed_sign = 1 if maps.r[1][a0] <= maps.r[-1][a0] else -1
    seed = (path.alpha_of(a0), path.alpha_of(int(maps.b_minus_arr[a0])))

    if seed_sign < 0:
        work = path.mirrored()
        work_maps = boundary_maps(work, params)
    else:
        work = path
        work_maps = maps
    stars, anchors, windows, left_cap, right_cap, reason = _construct_core(
        work, work_maps, params, int(extensions)
    )

    to_alpha = path.alpha_of
    stars_a = {j: to_alpha(i) for j, i in stars.items()}
    anchors_a = {k: to_alpha(i) for k, i in anchors.items()}
    windows_a = {k: (to_alpha(lo), to_alpha(hi)) for k, (lo, hi) in windows.items()}
    if reason is not None:
        return _exceptional_output(reason, stars_a, anchors_a, windows_a, seed, seed_sign)

    # chain with alternating signs; segment (star_j, star_{j+1}] carries
    # sign +1 for even j in the seed-positive frame
    jmin = min(stars)
    jmax = max(stars)
    seg_sign = lambda j: (1 if j % 2 == 0 else -1) * seed_sign
    chain = [Elongation((to_alpha(left_cap), stars_a[jmin]), -seg_sign(jmin))]
    for j in range(jmin, jmax):
        chain.append(Elongation((stars_a[j], stars_a[j + 1]), seg_sign(j)))
    chain.append(Elongation((stars_a[jmax], to_alpha(right_cap)), -seg_sign(jmax - 1)))

    # J sits between the two base breaking points: (star_-1, star_0) when
    # the core took the left-extension branch (marked by the a_-2 anchor),
    # (star_0, star_1) otherwise; extension stars never move it
    if "b_-2" in anchors_a:
        j_alpha = (stars_a[-1], stars_a[0])
    else:
        j_alpha = (stars_a[0], stars_a[1])
    trim = params.rho / params.eps
    if gamma is not None and extra_trim > 0:
        trim += extra_trim * gamma / params.eps
    i_alpha = (j_alpha[0] + trim, j_alpha[1] - trim)
    lo_idx = math.floor(i_alpha[0])
    hi_idx = math.floor(i_alpha[1])
    if hi_idx > lo_idx and i_alpha[0] < i_alpha[1]:
        tau = float(path.y_at(hi_idx) - path.y_at(lo_idx))
        tau = 0 if tau == 0.0 else (1 if tau > 0 else -1)
    else:
        tau = 0
    scale = None if gamma is None else params.eps / gamma
    return LocalizationOutput(
        alpha_stars=tuple(sorted(stars_a.items())),
        chain=tuple(chain),
        seed_interval=seed,
        seed_sign=seed_sign,
        anchors=tuple(sorted(anchors_a.items())),
        windows=tuple(sorted(windows_a.items())),
        j_alpha=j_alpha,
        i_alpha=i_alpha,
        j_interval=None if scale is None else (j_alpha[0] * scale, j_alpha[1] * scale),
        i_interval=None if scale is None else (i_alpha[0] * scale, i_alpha[1] * scale),
        tau=int(tau),
        exceptional=None,
        origin_flag=(stars_a[0] == 0),
    )


# ---------------------------------------------------------------------------
# exceptional-set membership


def _greedy_chain_right(maps, i0):
    """Longest alternating elongation chain starting at or right of i0."""
    n = maps.n
    best = 0
    suffix = {}
    for s in (1, -1):
        rev = np.minimum.accumulate(maps.r[s][::-1])[::-1]
        suffix[s] = rev
    for s0 in (1, -1):
        cnt = 0
        cur = i0
        s = s0
        while cur <= n - 2:
            e = int(suffix[s][cur])
            if e >= n:
                break
            cnt += 1
            cur = e
            s = -s
        best = max(best, cnt)
    return best


def _greedy_chain_left(maps, i0):
    """Longest alternating elongation chain ending at or left of i0."""
    best = 0
    prefix = {s: np.maximum.accumulate(maps.ap[s]) for s in (1, -1)}
    for s0 in (1, -1):
        cnt = 0
        cur = i0
        s = s0
        while cur >= 1:
            a = int(prefix[s][cur])
            if a < 0:
                break
            cnt += 1
            cur = a
            s = -s
        best = max(best, cnt)
    return best


def _four_point_pattern(y, f_star, tol):
    """Two nearby levels 2 f_star apart revisited inside a tight envelope.

    Looks for alpha_1 < alpha_2 < alpha_3 < alpha_4 with
    | |Y_1 - Y_2| - 2 f_star | <= tol, |Y_3 - Y_1| <= tol,
    |Y_4 - Y_2| <= tol, and the whole stretch [alpha_1, alpha_4] inside
    [min(Y_1, Y_2) - tol, max(Y_1, Y_2) + tol].
    """
    n = y.size
    gap = 2.0 * f_star
    block = 256
    for lo in range(0, n - 3, block):
        hi = min(lo + block, n - 3)
        y1 = y[lo:hi]
        diff = np.abs(np.abs(y[None, lo + 1 :] - y1[:, None]) - gap) <= tol
        diff[np.arange(hi - lo)[:, None] + lo + 1 > np.arange(lo + 1, n)[None, :]] = False
        for r, c in zip(*np.nonzero(diff)):
            i1 = lo + r
            i2 = lo + 1 + c
            if i2 + 2 > n - 1:
                continue
            env_lo = min(y[i1], y[i2]) - tol
            env_hi = max(y[i1], y[i2]) + tol
            outside = (y[i1:] < env_lo) | (y[i1:] > env_hi)
            stop = i1 + int(np.argmax(outside)) if outside.any() else n
            if stop <= i2 + 2:
                continue
            seg = y[i2 + 1 : stop]
            near1 = np.abs(seg - y[i1]) <= tol
            if not near1.any():
                continue
            first3 = int(np.argmax(near1))
            near2 = np.abs(seg - y[i2]) <= tol
            if near2[first3 + 1 :].any():
                return True
    return False


def exceptional_membership(
    path: WalkPath,
    params: ElongationParams,
    *,
    k_values=(1, 2, 3),
    delta_tilde: float = None,
    construction: LocalizationOutput = None,
    maps: BoundaryMaps = None,
) -> frozenset:
    """Sort a path into the classified failure sets.

    Returns a frozenset of flags: "P0" (no elongation anywhere), "P1(k)"
    (no k-link alternating chain on both sides), "P2''" (an oversized
    increment or the four-point near-return pattern), "P2(j)" (a near
    duplicate of breaking point j inside its search window, farther than
    rho/eps but within delta_tilde in height), and "P3" (a central
    breaking point within 2 rho/eps of the origin).  P2(j) and P3 need
    the construction to have gone through; exceptional constructions
    simply cannot carry those flags.
    """
    if maps is None:
        maps = boundary_maps(path, params)
    n = maps.n
    i0 = path.index(0)
    flags = set()

    if not bool((maps.b_minus_arr < n).any()):
        flags.add("P0")

    right = _greedy_chain_right(maps, i0)
    left = _greedy_chain_left(maps, i0)
    for k in k_values:
        if right < k or left < k:
            flags.add(f"P1({int(k)})")

    tol = 3.0 * params.f
    if float(np.max(np.abs(path.increments))) > params.f:
        flags.add("P2''")
    elif _four_point_pattern(path.y, params.f_star, tol):
        flags.add("P2''")

    if construction is None:
        construction = construct_localization(path, params, maps=maps)
    if not construction.is_exceptional:
        dt = params.delta_tilde() if delta_tilde is None else float(delta_tilde)
        sep = params.rho / params.eps
        anchors = dict(construction.anchors)
        stars = dict(construction.alpha_stars)
        window_specs = [("0", 0, "a_-1", "b_0"), ("+1", 1, "a_0", "b_1"), ("-1", -1, "a_-2", "b_-1")]
        for label, j, lo_key, hi_key in window_specs:
            if j not in stars or lo_key not in anchors or hi_key not in anchors:
                continue
            lo = path.index(anchors[lo_key])
            hi = path.index(anchors[hi_key])
            c = path.index(stars[j])
            seg = path.y[lo : hi + 1]
            near = np.abs(seg - path.y[c]) <= dt
            far = np.abs(np.arange(lo, hi + 1) - c) > sep
            if bool((near & far).any()):
                flags.add(f"P2({label})")
        lim = 2.0 * sep
        if abs(stars[0]) <= lim or (-1 in stars and abs(stars[-1]) <= lim):
            flags.add("P3")

    return frozenset(flags)


# ---------------------------------------------------------------------------
# stopping times


@dataclass(frozen=True)
class StoppingTimeTrace:
    """Crossing times of size-b net increments on both sides of 0.

    taus_right[k-1] is the k-th time after 0 at which the net increment
    since the previous crossing reaches b in absolute value;
    signs_right[k-1] is its direction.  The left side mirrors this
    backward from 0.  i_stars_* are the repeated-sign indices: the first
    right index i with S_i == S_{i+1}, then successive indices at least
    two further with the opposite repeated sign, and symmetrically
    leftward.  truncated_* reports that the path ran out mid-crossing.
    """

    b: float
    taus_right: tuple
    signs_right: tuple
    taus_left: tuple
    signs_left: tuple
    i_stars_right: tuple
    i_stars_left: tuple
    truncated_right: bool
    truncated_left: bool

    def tau(self, k: int) -> int:
        if k == 0:
            return 0
        if k > 0:
            return self.taus_right[k - 1]
        return self.taus_left[-k - 1]

    def sign(self, k: int) -> int:
        if k > 0:
            return self.signs_right[k - 1]
        if k < 0:
            return self.signs_left[-k - 1]
        raise ValueError("sign index 0 is undefined")


def _sign_at(signs_right, signs_left, i):
    return signs_right[i - 1] if i > 0 else signs_left[-i - 1]


def _repeated_sign_indices(signs_right, signs_left):
    kr = len(signs_right)
    rights = []
    i1 = None
    for i in range(1, kr):
        if signs_right[i - 1] == signs_right[i]:
            i1 = i
            break
    if i1 is None:
        return (), ()
    rights.append(i1)
    while True:
        prev = rights[-1]
        target = -signs_right[prev - 1]
        nxt = None
        for i in range(prev + 2, kr):
            if signs_right[i - 1] == signs_right[i] == target:
                nxt = i
                break
        if nxt is None:
            break
        rights.append(nxt)

    lefts = []
    kl = len(signs_left)
    if kl >= 1:
        target = -signs_right[i1 - 1]
        if signs_left[0] == signs_right[0] == target:
            lefts.append(-1)
        else:
            for i in range(-2, -kl - 1, -1):
                if _sign_at(signs_right, signs_left, i) == _sign_at(signs_right, signs_left, i + 1) == target:
                    lefts.append(i)
                    break
    while lefts:
        prev = lefts[-1]
        target = -_sign_at(signs_right, signs_left, prev)
        nxt = None
        for i in range(prev - 2, -kl - 1, -1):
            if _sign_at(signs_right, signs_left, i) == _sign_at(signs_right, signs_left, i + 1) == target:
                nxt = i
                break
        if nxt is None:
            break
        lefts.append(nxt)
    return tuple(rights), tuple(lefts)


def stopping_trace(path: WalkPath, b: float) -> StoppingTimeTrace:
    """All size-b crossing times, their signs, and repeated-sign indices."""
    if not b > 0:
        raise ValueError("b must be positive")
    y = path.y
    i0 = path.index(0)
    n = y.size

    taus_r = []
    signs_r = []
    cur = i0
    while True:
        seg = np.abs(y[cur + 1 :] - y[cur]) >= b
        if not seg.any():
            truncated_right = cur < n - 1
            break
        j = cur + 1 + int(np.argmax(seg))
        taus_r.append(path.alpha_of(j))
        signs_r.append(1 if y[j] > y[cur] else -1)
        cur = j

    taus_l = []
    signs_l = []
    cur = i0
    while True:
        seg = np.abs(y[:cur] - y[cur]) >= b
        if not seg.any():
            truncated_left = cur > 0
            break
        t = int(cur - 1 - np.argmax(seg[::-1]))
        taus_l.append(path.alpha_of(t))
        signs_l.append(1 if y[cur] > y[t] else -1)
        cur = t

    i_r, i_l = _repeated_sign_indices(signs_r, signs_l)
    return StoppingTimeTrace(
        b=float(b),
        taus_right=tuple(taus_r),
        signs_right=tuple(signs_r),
        taus_left=tuple(taus_l),
        signs_left=tuple(signs_l),
        i_stars_right=i_r,
        i_stars_left=i_l,
        truncated_right=truncated_right,
        truncated_left=truncated_left,
    )


# ---------------------------------------------------------------------------
# synthetic paths


def _draw_steps(rng, shape, dist, scale):
    if dist == "gauss":
        return rng.standard_normal(shape) * scale
    if dist == "pm1":
        return (rng.integers(0, 2, shape) * 2.0 - 1.0) * scale
    raise ValueError(f"unknown increment distribution {dist!r}")


def sample_walk_path(seed, params: ElongationParams, *, scale: float = None, dist: str = "gauss") -> WalkPath:
    """Synthetic two-sided path with q_span/eps windows per side.

    scale defaults to sqrt(eps), the window-increment scale at unit
    variance constant.
    """
    rng = np.random.default_rng(seed)
    if scale is None:
        scale = math.sqrt(params.eps)
    steps = _draw_steps(rng, 2 * params.n_side, dist, float(scale))
    return WalkPath(steps, alpha_min=-params.n_side)


# ---------------------------------------------------------------------------
# Monte Carlo bound verification


class HypothesisViolationError(ValueError):
    """A check was asked to run outside the hypotheses of its bound."""


@dataclass(frozen=True)
class BoundCheck:
    """One verified inequality: empirical value against a printed bound."""

    name: str
    n_trials: int
    empirical: float
    ci_half: float
    bound: float
    orientation: str
    passed: bool
    params: tuple = ()
    detail: str = ""

    def line(self) -> str:
        rel = {"upper": "<=", "lower": ">=", "two_sided": "~"}[self.orientation]
        tag = "PASS" if self.passed else "FAIL"
        ps = ", ".join(f"{k}={v:g}" for k, v in self.params)
        ps = f" [{ps}]" if ps else ""
        out = (
            f"{tag} {self.name}{ps}: empirical={self.empirical:.6g} "
            f"(99% CI +-{self.ci_half:.3g}, n={self.n_trials}) {rel} bound={self.bound:.6g}"
        )
        if self.detail:
            out += f"  ({self.detail})"
        return out


@dataclass(frozen=True)
class VerifyReport:
    """Result of a verify run: one BoundCheck per tested inequality."""

    seed: int
    dist: str
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]

    def __str__(self) -> str:
        return "\n".join(self.lines())


DEFAULT_CHECKS = (
    "crossing_sign_law",
    "crossing_pair_lower",
    "tau1_tail",
    "tau1_mean",
    "tauk_lower_tail",
    "tauk_upper_tail",
    "hitting_split",
    "dwell_tail",
    "argmax_arcsine",
    "interval_tails",
)

_DEFAULT_TRIALS = {
    "crossing_sign_law": 100_000,
    "crossing_pair_lower": 10_000,
    "tau1_tail": 10_000,
    "tau1_mean": 10_000,
    "tauk_lower_tail": 10_000,
    "tauk_upper_tail": 10_000,
    "hitting_split": 10_000,
    "dwell_tail": 10_000,
    "argmax_arcsine": 10_000,
    "interval_tails": 10_000,
    "chi_moment_bounds": 10_000,
}


@dataclass(frozen=True)
class VerifyConfig:
    """Scales, hypotheses, and trial counts for the verification suite.

    The crossing checks run on a surrogate walk with increment variance
    eps * v_const**2; d_ratio plays the block-to-range ratio entering the
    variance brackets (its largest admissible value 2**-5 by default).
    The localization tail checks run the full construction at the loc_*
    parameters.  trials overrides per-check trial counts by name.
    """

    seed: int = 0
    dist: str = "gauss"
    checks: tuple = DEFAULT_CHECKS
    trials: dict = None
    v_const: float = 1.0
    d_ratio: float = 2.0**-5
    eps: float = 1.4e-5
    b_over_v: float = 0.125
    sign_law_ks: tuple = (2, 3, 4, 5, 6)
    pair_ks: tuple = (2, 4)
    pair_s: float = 1.0
    tail_vs: tuple = (1, 2)
    tauk_ks: tuple = (1, 3)
    s_lower: float = 2.0e-3
    s_upper: float = 1.0
    dwell_d: float = 2.0
    argmax_steps: int = 10_000
    loc_f_star: float = 1.0
    loc_eps: float = 1.0 / 512.0
    loc_q: float = 8.0
    loc_a: float = 1.0
    t1_xs: tuple = (0.02, 0.05, 0.078)
    t2_xs: tuple = (2.0, 4.0, 8.0)
    moment_lambdas: tuple = (0.5, 1.0)
    moment_ks: tuple = (8, 64)
    gamma: float = None
    delta_star: float = None
    beta: float = None
    theta: float = None

    def n_trials(self, name: str) -> int:
        if self.trials and name in self.trials:
            return int(self.trials[name])
        return _DEFAULT_TRIALS[name]


def _require(conds, check):
    bad = [msg for ok, msg in conds if not ok]
    if bad:
        raise HypothesisViolationError(f"{check}: " + "; ".join(bad))


def _upper_tail_prob(x):
    """P[standard normal >= x]."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def _scales(cfg):
    v = cfg.v_const
    b = cfg.b_over_v * v
    sig = math.sqrt(cfg.eps) * v
    vp = v * (1.0 + cfg.d_ratio**0.2)
    vm = v * (1.0 - cfg.d_ratio**0.2)
    p4 = _upper_tail_prob(4.0 * b / v)
    eps0 = p4 * p4 / 3**8
    c1 = 2.0 / p4
    return v, b, sig, vp, vm, p4, eps0, c1


def _prop_ci(p, n):
    return Z99 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


_SLAB_ELEMS = 8_000_000


def _sim_crossings(rng, n_rows, k, b, scale, dist, max_steps, cols):
    """Times and signs of the first k size-b crossings per row.

    Returns (taus, signs, censored): taus[i, j] is the (j+1)-th crossing
    time in steps, signs in {-1, +1}; rows that exceed max_steps before
    crossing j are censored with taus[i, j:] = max_steps + 1 and sign 0.
    Fresh noise is drawn after every crossing, which matches the walk law
    since post-crossing increments are independent of the past.
    """
    taus = np.full((n_rows, k), max_steps + 1, dtype=np.int64)
    signs = np.zeros((n_rows, k), dtype=np.int8)
    censored = np.zeros(n_rows, dtype=bool)
    row_chunk = max(256, _SLAB_ELEMS // max(cols, 1))
    for r0 in range(0, n_rows, row_chunk):
        r1 = min(r0 + row_chunk, n_rows)
        rows = np.arange(r0, r1)
        t_done = np.zeros(rows.size, dtype=np.int64)
        dead = np.zeros(rows.size, dtype=bool)
        for j in range(k):
            idx = np.nonzero(~dead)[0]
            z = np.zeros(idx.size)
            t = t_done[idx].copy()
            while idx.size:
                draw = _draw_steps(rng, (idx.size, cols), dist, scale)
                zc = z[:, None] + np.cumsum(draw, axis=1)
                hit = np.abs(zc) >= b
                has = hit.any(axis=1)
                first = np.argmax(hit, axis=1)
                done = idx[has]
                tt = t[has] + first[has] + 1
                taus[rows[done], j] = tt
                signs[rows[done], j] = np.sign(zc[has, first[has]]).astype(np.int8)
                t_done[done] = tt
                rem = ~has
                idx = idx[rem]
                z = zc[rem, -1]
                t = t[rem] + cols
                over = t >= max_steps
                if over.any():
                    dead[idx[over]] = True
                    censored[rows[idx[over]]] = True
                    keep = ~over
                    idx = idx[keep]
                    z = z[keep]
                    t = t[keep]
    return taus, signs, censored


def _sim_two_barrier(rng, n_rows, up, down, scale, dist, max_steps, cols):
    """First passage above +up or below -down per row.

    Returns (which, t): which in {+1, -1, 0}, 0 meaning censored at
    max_steps with t = max_steps + 1.
    """
    which = np.zeros(n_rows, dtype=np.int8)
    times = np.full(n_rows, max_steps + 1, dtype=np.int64)
    row_chunk = max(256, _SLAB_ELEMS // max(cols, 1))
    for r0 in range(0, n_rows, row_chunk):
        r1 = min(r0 + row_chunk, n_rows)
        rows = np.arange(r0, r1)
        idx = np.arange(rows.size)
        z = np.zeros(idx.size)
        t = np.zeros(idx.size, dtype=np.int64)
        while idx.size:
            draw = _draw_steps(rng, (idx.size, cols), dist, scale)
            zc = z[:, None] + np.cumsum(draw, axis=1)
            hit = (zc >= up) | (zc <= -down)
            has = hit.any(axis=1)
            first = np.argmax(hit, axis=1)
            done = idx[has]
            times[rows[done]] = t[has] + first[has] + 1
            which[rows[done]] = np.where(zc[has, first[has]] >= up, 1, -1).astype(np.int8)
            rem = ~has
            idx = idx[rem]
            z = zc[rem, -1]
            t = t[rem] + cols
            over = t >= max_steps
            if over.any():
                keep = ~over
                idx = idx[keep]
                z = z[keep]
                t = t[keep]
    return which, times


def _has_adjacent_pair(signs, k):
    s = signs[:, :k]
    return (s[:, :-1] == s[:, 1:]).any(axis=1)


def _check_crossing_sign_law(cfg, rng, n):
    """Adjacent equal crossing signs occur with probability 1 - 2**(1-k)."""
    kmax = max(cfg.sign_law_ks)
    _require([(kmax >= 2, "needs k >= 2")], "crossing_sign_law")
    b = 4.0
    taus, signs, censored = _sim_crossings(rng, n, kmax, b, 1.0, cfg.dist, 1 << 14, 64)
    ok_rows = ~censored
    out = []
    for k in cfg.sign_law_ks:
        p = 1.0 - 2.0 ** (1 - k)
        emp = float(_has_adjacent_pair(signs[ok_rows], k).mean())
        ci = _prop_ci(p, int(ok_rows.sum()))
        out.append(
            BoundCheck(
                name="crossing_sign_law",
                n_trials=int(ok_rows.sum()),
                empirical=emp,
                ci_half=ci,
                bound=p,
                orientation="two_sided",
                passed=abs(emp - p) <= ci,
                params=(("k", k),),
                detail=f"censored={int(censored.sum())}",
            )
        )
    return out


def _check_crossing_pair_lower(cfg, rng, n):
    """Fast k-th crossing together with an adjacent equal-sign pair."""
    v, b, sig, vp, vm, p4, eps0, c1 = _scales(cfg)
    _require(
        [
            (cfg.eps < eps0, f"eps={cfg.eps:g} must be < eps0={eps0:g}"),
            (cfg.pair_s > 0, "s must be positive"),
        ],
        "crossing_pair_lower",
    )
    kmax = max(cfg.pair_ks)
    max_steps = 1 << 16
    taus, signs, censored = _sim_crossings(rng, n, kmax, b, sig, cfg.dist, max_steps, 2048)
    out = []
    s = cfg.pair_s
    for k in cfg.pair_ks:
        thr = k * (s + math.log(2.0)) * c1 / cfg.eps
        bound = (1.0 - math.exp(-s * k)) * (1.0 - 2.0 ** (1 - k))
        # censored rows count as misses, which only lowers the empirical
        # frequency against a lower bound
        event = (~censored) & (taus[:, k - 1] <= thr) & _has_adjacent_pair(signs, k)
        emp = float(event.mean())
        ci = _prop_ci(emp, n)
        out.append(
            BoundCheck(
                name="crossing_pair_lower",
                n_trials=n,
                empirical=emp,
                ci_half=ci,
                bound=bound,
                orientation="lower",
                passed=emp >= bound,
                params=(("k", k), ("s", s)),
                detail=f"threshold={thr:.3g} steps, censored={int(censored.sum())}",
            )
        )
    return out


def _check_tau1_tail(cfg, rng, n):
    """Tail of the first crossing time in whole units of 1/eps."""
    v, b, sig, vp, vm, p4, eps0, c1 = _scales(cfg)
    _require(
        [
            (cfg.eps < eps0, f"eps={cfg.eps:g} must be < eps0={eps0:g}"),
            (all(int(x) == x and x >= 1 for x in cfg.tail_vs), "v values must be positive integers"),
        ],
        "tau1_tail",
    )
    vmax = max(cfg.tail_vs)
    max_steps = int(math.ceil(vmax / cfg.eps)) + 8
    taus, signs, censored = _sim_crossings(rng, n, 1, b, sig, cfg.dist, max_steps, 4096)
    t1 = taus[:, 0]
    out = []
    for vv in cfg.tail_vs:
        thr = vv / cfg.eps
        emp = float((t1 >= thr).mean())
        bound = math.exp(-vv * p4)
        ci = _prop_ci(emp, n)
        out.append(
            BoundCheck(
                name="tau1_tail",
                n_trials=n,
                empirical=emp,
                ci_half=ci,
                bound=bound,
                orientation="upper",
                passed=emp <= bound,
                params=(("v", vv),),
            )
        )
    return out


def _check_tau1_mean(cfg, rng, n):
    """Mean first crossing time inside the variance-bracket window."""
    v, b, sig, vp, vm, p4, eps0, c1 = _scales(cfg)
    _require(
        [
            (cfg.eps < eps0, f"eps={cfg.eps:g} must be < eps0={eps0:g}"),
            (0.0 <= cfg.d_ratio <= 2.0**-5, "d_ratio must lie in [0, 2**-5]"),
        ],
        "tau1_mean",
    )
    max_steps = 1 << 17
    taus, signs, censored = _sim_crossings(rng, n, 1, b, sig, cfg.dist, max_steps, 4096)
    t1 = taus[:, 0].astype(float)
    mean = float(t1.mean())
    ci = Z99 * float(t1.std(ddof=1)) / math.sqrt(n)
    base = b * b / (cfg.eps * v * v)
    corr = 1.0 + 9.0 * (v / b) * math.sqrt(cfg.eps * math.log(c1 / cfg.eps))
    lower = base * (1.0 - cfg.d_ratio**0.2) ** 2
    upper = base * (1.0 + cfg.d_ratio**0.2) ** 2 * corr * corr
    detail = f"bracket=[{lower:.4g}, {upper:.4g}], censored={int(censored.sum())}"
    return [
        BoundCheck(
            name="tau1_mean_lower",
            n_trials=n,
            empirical=mean,
            ci_half=ci,
            bound=lower,
            orientation="lower",
            passed=mean >= lower,
            detail=detail,
        ),
        BoundCheck(
            name="tau1_mean_upper",
            n_trials=n,
            empirical=mean,
            ci_half=ci,
            bound=upper,
            orientation="upper",
            passed=mean <= upper,
            detail=detail,
        ),
    ]


def _check_tauk_lower_tail(cfg, rng, n):
    """Probability that the k-th crossing comes too early."""
    v, b, sig, vp, vm, p4, eps0, c1 = _scales(cfg)
    s = cfg.s_lower
    s_cap = b * b / (4.0 * math.log(2.0) * vp * vp)
    _require(
        [(0.0 < s < s_cap, f"s={s:g} must lie in (0, {s_cap:g})")],
        "tauk_lower_tail",
    )
    kmax = max(cfg.tauk_ks)
    taus, signs, censored = _sim_crossings(rng, n, kmax, b, sig, cfg.dist, 1 << 16, 2048)
    out = []
    for k in cfg.tauk_ks:
        thr = k * s / cfg.eps
        # censored rows have taus beyond max_steps >> thr, never early
        emp = float((taus[:, k - 1] <= thr).mean())
        bound = math.exp(-k * b * b / (4.0 * s * vp * vp))
        ci = _prop_ci(emp, n)
        out.append(
            BoundCheck(
                name="tauk_lower_tail",
                n_trials=n,
                empirical=emp,
                ci_half=ci,
                bound=bound,
                orientation="upper",
                passed=emp <= bound,
                params=(("k", k), ("s", s)),
            )
        )
    return out


def _check_tauk_upper_tail(cfg, rng, n):
    """Probability that the k-th crossing comes too late."""
    v, b, sig, vp, vm, p4, eps0, c1 = _scales(cfg)
    s = cfg.s_upper
    _require(
        [
            (cfg.eps < eps0, f"eps={cfg.eps:g} must be < eps0={eps0:g}"),
            (s > 0, "s must be positive"),
        ],
        "tauk_upper_tail",
    )
    kmax = max(cfg.tauk_ks)
    max_steps = 1 << 16
    taus, signs, censored = _sim_crossings(rng, n, kmax, b, sig, cfg.dist, max_steps, 2048)
    out = []
    for k in cfg.tauk_ks:
        thr = k * (s + math.log(2.0)) * c1 / cfg.eps
        # censored rows count as late arrivals: conservative for an upper
        # bound on the tail
        emp = float(((taus[:, k - 1] >= thr) | censored).mean())
        bound = math.exp(-s * k)
        ci = _prop_ci(emp, n)
        out.append(
            BoundCheck(
                name="tauk_upper_tail",
                n_trials=n,
                empirical=emp,
                ci_half=ci,
                bound=bound,
                orientation="upper",
                passed=emp <= bound,
                params=(("k", k), ("s", s)),
                detail=f"threshold={thr:.3g} steps, censored={int(censored.sum())}",
            )
        )
    return out


def _check_hitting_split(cfg, rng, n):
    """Which barrier is hit first, against the drift-free split bounds."""
    v, b, sig, vp, vm, p4, eps0, c1 = _scales(cfg)
    x = a = b
    _require(
        [(cfg.eps <= eps0, f"eps={cfg.eps:g} must be <= eps0={eps0:g}")],
        "hitting_split",
    )
    which, times = _sim_two_barrier(rng, n, x, a, sig, cfg.dist, 1 << 16, 2048)
    slack = 9.0 * v * math.sqrt(cfg.eps * math.log(c1 / cfg.eps))
    emp_down = float(((which == -1) | (which == 0)).mean())
    emp_up = float(((which == 1) | (which == 0)).mean())
    bound_down = (x + slack) / (x + a)
    bound_up = (a + slack) / (x + a)
    return [
        BoundCheck(
            name="hitting_split_down",
            n_trials=n,
            empirical=emp_down,
            ci_half=_prop_ci(emp_down, n),
            bound=bound_down,
            orientation="upper",
            passed=emp_down <= bound_down,
            params=(("x", x), ("a", a)),
            detail=f"censored={int((which == 0).sum())}",
        ),
        BoundCheck(
            name="hitting_split_up",
            n_trials=n,
            empirical=emp_up,
            ci_half=_prop_ci(emp_up, n),
            bound=bound_up,
            orientation="upper",
            passed=emp_up <= bound_up,
            params=(("x", x), ("a", a)),
            detail=f"symmetric toy split ~ 1/2",
        ),
    ]


def _check_dwell_tail(cfg, rng, n):
    """Probability of leaving neither barrier for d/eps steps."""
    v, b, sig, vp, vm, p4, eps0, c1 = _scales(cfg)
    x = a = b
    d = cfg.dwell_d
    _require(
        [
            (cfg.eps <= eps0, f"eps={cfg.eps:g} must be <= eps0={eps0:g}"),
            (d > 0, "d must be positive"),
        ],
        "dwell_tail",
    )
    thr = int(math.ceil(d / cfg.eps))
    which, times = _sim_two_barrier(rng, n, x, a, sig, cfg.dist, thr, 4096)
    emp = float(((times >= thr) | (which == 0)).mean())
    slack = math.sqrt(cfg.eps * math.log(c1 / cfg.eps))
    bound = 4.0 * x * a / (v * v * d) + (36.0 / (v * v * d)) * slack * (
        9.0 * (x + a) + v * slack
    )
    return [
        BoundCheck(
            name="dwell_tail",
            n_trials=n,
            empirical=emp,
            ci_half=_prop_ci(emp, n),
            bound=bound,
            orientation="upper",
            passed=emp <= bound,
            params=(("x", x), ("a", a), ("d", d)),
        )
    ]


def _arcsine_cdf(x):
    return (2.0 / math.pi) * np.arcsin(np.sqrt(np.clip(x, 0.0, 1.0)))


def _check_argmax_arcsine(cfg, rng, n):
    """First argmax position of a symmetric walk against the arcsine law."""
    steps = int(cfg.argmax_steps)
    _require([(steps >= 100, "argmax_steps must be >= 100")], "argmax_arcsine")
    u = np.empty(n)
    row_chunk = max(64, _SLAB_ELEMS // steps)
    for r0 in range(0, n, row_chunk):
        r1 = min(r0 + row_chunk, n)
        # the law is distribution free for continuous symmetric steps;
        # gauss is used regardless of cfg.dist to keep ties at measure zero
        draw = rng.standard_normal((r1 - r0, steps))
        cum = np.cumsum(draw, axis=1)
        u[r0:r1] = (np.argmax(cum, axis=1) + 1) / steps
    su = np.sort(u)
    grid = np.arange(1, n + 1) / n
    fu = _arcsine_cdf(su)
    ks = float(np.max(np.maximum(fu - (grid - 1.0 / n), grid - fu)))
    return [
        BoundCheck(
            name="argmax_arcsine",
            n_trials=n,
            empirical=ks,
            ci_half=0.0,
            bound=0.02,
            orientation="upper",
            passed=ks <= 0.02,
            params=(("steps", steps),),
            detail="KS distance to the kappa->0 arcsine law",
        )
    ]


def _check_interval_tails(cfg, rng, n):
    """Length tails of the localization interval at both ends."""
    v = cfg.v_const
    f = cfg.loc_eps**0.25
    rho = cfg.loc_eps ** (1.0 / (4.0 * (2.0 + cfg.loc_a)))
    zorro = (2.0 / (v * v * math.log(1944.0))) * min(
        rho ** (4.0 + 2.0 * cfg.loc_a), f**2
    )
    t1_cap = cfg.loc_f_star**2 / (18.0 * v * v * math.log(2.0))
    _require(
        [
            (
                f < cfg.loc_f_star / 4.0,
                f"schedule f=loc_eps^(1/4)={f:g} must be < f_star/4={cfg.loc_f_star / 4.0:g}",
            ),
            (cfg.loc_eps <= zorro, f"loc_eps={cfg.loc_eps:g} must be <= {zorro:g}"),
            (all(0.0 < x < t1_cap for x in cfg.t1_xs), f"t1 x values must lie in (0, {t1_cap:g})"),
            (all(x > 0 for x in cfg.t2_xs), "t2 x values must be positive"),
        ],
        "interval_tails",
    )
    params = ElongationParams(
        f_star=cfg.loc_f_star, eps=cfg.loc_eps, q_span=cfg.loc_q, a=cfg.loc_a
    )
    sig = math.sqrt(params.eps) * v
    lengths = []
    n_exceptional = 0
    n_rough = 0
    for _ in range(n):
        steps = rng.standard_normal(2 * params.n_side) * sig
        if float(np.max(np.abs(steps))) > params.f:
            n_rough += 1
            continue
        path = WalkPath(steps, alpha_min=-params.n_side)
        out = construct_localization(path, params)
        if out.is_exceptional:
            n_exceptional += 1
            continue
        lengths.append(params.eps * (out.j_alpha[1] - out.j_alpha[0]))
    lengths = np.asarray(lengths)
    m = lengths.size
    if m == 0:
        raise HypothesisViolationError(
            "interval_tails: every trial was exceptional; scales are off"
        )
    detail = f"non-exceptional={m}/{n}, rough={n_rough}, exceptional={n_exceptional}"
    p4f = _upper_tail_prob(4.0 * cfg.loc_f_star / v)
    c1f = 2.0 / p4f
    checks = []
    for x in cfg.t1_xs:
        emp = float((lengths <= x).mean())
        bound = 2.0 * math.exp(-cfg.loc_f_star**2 / (18.0 * x * v * v))
        checks.append(
            BoundCheck(
                name="interval_short_tail",
                n_trials=m,
                empirical=emp,
                ci_half=_prop_ci(emp, m),
                bound=bound,
                orientation="upper",
                passed=emp <= bound,
                params=(("x", x),),
                detail=detail,
            )
        )
    rate = (1.0 - math.log(3.0) / math.log(4.0)) / (8.0 * c1f)
    tail_emps = []
    for x in cfg.t2_xs:
        emp = float((lengths >= x).mean())
        tail_emps.append(emp)
        bound = 4.0 * math.exp(-rate * x)
        checks.append(
            BoundCheck(
                name="interval_long_tail",
                n_trials=m,
                empirical=emp,
                ci_half=_prop_ci(emp, m),
                bound=bound,
                orientation="upper",
                passed=emp <= bound,
                params=(("x", x),),
                detail=detail,
            )
        )
    xs = [x for x, e in zip(cfg.t2_xs, tail_emps) if e > 0]
    es = [e for e in tail_emps if e > 0]
    if len(xs) >= 2:
        slope = float(np.polyfit(xs, np.log(es), 1)[0])
        src = f"log-tail slope over x={xs}"
    else:
        slope = -math.inf
        src = "tail empty beyond the first grid point"
    checks.append(
        BoundCheck(
            name="interval_tail_decay",
            n_trials=m,
            empirical=slope,
            ci_half=0.0,
            bound=0.0,
            orientation="upper",
            passed=slope <= 0.0,
            detail=src,
        )
    )
    return checks


def _sample_chi_matrix(cfg, rng, n_rows, n_cols):
    """Window increments for the moment checks, surrogate or physical."""
    if cfg.gamma is None:
        sig = math.sqrt(cfg.eps) * cfg.v_const
        return rng.standard_normal((n_rows, n_cols)) * sig, cfg.d_ratio
    from types import SimpleNamespace

    from .fields import chi_profile, sample_field
    from .phase import PhasePoint, phase_constants

    d_ratio = cfg.gamma / cfg.delta_star
    pars = SimpleNamespace(gamma=cfg.gamma, delta_star=cfg.delta_star, eps=cfg.eps)
    pc = phase_constants(PhasePoint(cfg.beta, cfg.theta))
    total = n_rows * n_cols
    n_blocks = int(round(cfg.eps / (cfg.gamma * cfg.delta_star))) * total
    block = int(round(cfg.delta_star / cfg.gamma))
    h = sample_field(rng.integers(0, 2**63 - 1), n_blocks * block)
    chi = chi_profile(h, pars, pc)[:total]
    return chi.reshape(n_rows, n_cols), d_ratio


def _check_chi_moments(cfg, rng, n):
    """Exponential and maximal moment bounds for window increments."""
    if cfg.gamma is not None:
        missing = [
            nm
            for nm in ("gamma", "delta_star", "beta", "theta")
            if getattr(cfg, nm) is None
        ]
        _require([(not missing, f"field mode needs {missing}")], "chi_moment_bounds")
        d_ratio = cfg.gamma / cfg.delta_star
    else:
        d_ratio = cfg.d_ratio
    _require(
        [(0.0 < d_ratio <= 2.0**-5, f"d_ratio={d_ratio:g} must lie in (0, 2**-5]")],
        "chi_moment_bounds",
    )
    if cfg.gamma is not None:
        from .phase import PhasePoint, phase_constants

        v = phase_constants(PhasePoint(cfg.beta, cfg.theta)).v_const
        eps = cfg.eps
    else:
        v = cfg.v_const
        eps = cfg.eps
    vp = v * (1.0 + d_ratio**0.2)
    kmax = max(cfg.moment_ks)
    chi, _ = _sample_chi_matrix(cfg, rng, n, kmax)
    checks = []
    for lam_rel in cfg.moment_lambdas:
        lam = lam_rel / math.sqrt(eps * vp * vp)
        emp = float(np.exp(lam * chi[:, 0]).mean())
        se = float(np.exp(lam * chi[:, 0]).std(ddof=1)) / math.sqrt(n)
        bound = math.exp(lam * lam * eps * vp * vp / 2.0)
        checks.append(
            BoundCheck(
                name="chi_exp_moment",
                n_trials=n,
                empirical=emp,
                ci_half=Z99 * se,
                bound=bound,
                orientation="upper",
                passed=emp <= bound,
                params=(("lambda", lam),),
            )
        )
    lam_sq = 1.0 / (2.0 * eps * vp * vp)
    vals = np.exp(lam_sq * chi[:, 0] ** 2 / 2.0)
    emp = float(vals.mean())
    bound = 1.0 / (1.0 - eps * lam_sq * vp * vp)
    checks.append(
        BoundCheck(
            name="chi_square_moment",
            n_trials=n,
            empirical=emp,
            ci_half=Z99 * float(vals.std(ddof=1)) / math.sqrt(n),
            bound=bound,
            orientation="upper",
            passed=emp <= bound,
            params=(("lambda", lam_sq),),
        )
    )
    for k in cfg.moment_ks:
        mx = np.max(np.abs(chi[:, :k]), axis=1)
        logk = math.log(k)
        for p in (1, 2, 4):
            emp = float((mx**p).mean())
            se = float((mx**p).std(ddof=1)) / math.sqrt(n)
            bound = (4.0 * eps * vp * vp * logk) ** (p / 2.0) * (1.0 + p / logk) ** max(
                p / 2.0, 1.0
            )
            checks.append(
                BoundCheck(
                    name="chi_max_moment",
                    n_trials=n,
                    empirical=emp,
                    ci_half=Z99 * se,
                    bound=bound,
                    orientation="upper",
                    passed=emp <= bound,
                    params=(("k", k), ("p", p)),
                )
            )
    return checks


_CHECK_REGISTRY = {
    "crossing_sign_law": _check_crossing_sign_law,
    "crossing_pair_lower": _check_crossing_pair_lower,
    "tau1_tail": _check_tau1_tail,
    "tau1_mean": _check_tau1_mean,
    "tauk_lower_tail": _check_tauk_lower_tail,
    "tauk_upper_tail": _check_tauk_upper_tail,
    "hitting_split": _check_hitting_split,
    "dwell_tail": _check_dwell_tail,
    "argmax_arcsine": _check_argmax_arcsine,
    "interval_tails": _check_interval_tails,
    "chi_moment_bounds": _check_chi_moments,
}


def verify_bounds(config: VerifyConfig = None, **overrides) -> VerifyReport:
    """Run the configured Monte Carlo checks and collect a report.

    Every inequality is tested one-sided exactly as printed, with its
    hypotheses enforced up front; censoring conventions always push the
    empirical value toward the bound, never away from it.
    """
    if config is None:
        config = VerifyConfig(**overrides)
    elif overrides:
        raise ValueError("pass either a config or keyword overrides, not both")
    unknown = [c for c in config.checks if c not in _CHECK_REGISTRY]
    if unknown:
        raise ValueError(f"unknown checks: {unknown}")
    ss = np.random.SeedSequence(config.seed)
    children = ss.spawn(len(config.checks))
    results = []
    for name, child in zip(config.checks, children):
        rng = np.random.default_rng(child)
        results.extend(_CHECK_REGISTRY[name](config, rng, config.n_trials(name)))
    return VerifyReport(seed=config.seed, dist=config.dist, checks=tuple(results))
