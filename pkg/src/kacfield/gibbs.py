"""Finite-volume Gibbs measures, heat-bath dynamics, and the phase probe.

The measure lives on a contiguous window of sites carrying the sampled
field; outside spins enter only through a fixed boundary layer on each
side.  Exact enumeration is available for small windows, a single-site
heat-bath chain for everything else.  The experiment at the end draws a
field, localizes an interface window from the increment walk, and asks
matched and mismatched boundary conditions how often the window classifies
as the predicted phase.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clusters import SizeLimitError
from .fields import (
    FieldRealization,
    block_size,
    chi_profile,
    decompose_block,
    sample_field,
)
from .phase import PhaseConstants, PhasePoint, phase_constants
from .profiles import Profile, eta_classify
from .walk import ElongationParams, WalkPath, construct_localization

_ENUM_LIMIT = 20
_ENUM_CHUNK = 1 << 14
_AUDIT_INTERVAL = 1000
_AUDIT_TOL = 1e-9
_PROBE_SWEEPS = 500
_EDGE_TOL = 1e-9


# ---------------------------------------------------------------------------
# specification


@dataclass(frozen=True)
class SpinConfig:
    """Spins on a contiguous site range starting at left."""

    left: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int8)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a nonempty 1d array")
        if not np.all(np.abs(v) == 1):
            raise ValueError("spins must be +1 or -1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "left", int(self.left))

    def __len__(self):
        return int(self.values.size)


@dataclass(frozen=True)
class Boundary:
    """Fixed spins flanking the window.

    left lists the spins directly below the window in ascending site
    order (its last entry is adjacent to the window); right lists the
    spins directly above, first entry adjacent.
    """

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        for name in ("left", "right"):
            v = np.asarray(getattr(self, name), dtype=np.int8)
            if v.ndim != 1 or v.size == 0:
                raise ValueError(f"{name} boundary must be a nonempty 1d array")
            if not np.all(np.abs(v) == 1):
                raise ValueError("boundary spins must be +1 or -1")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class GibbsSpec:
    """A finite-volume measure: window, couplings, field, boundary.

    The window is [left, left + size) and must sit inside the field
    realization.  boundary None means free boundary; a supplied boundary
    must cover the full interaction range on both sides.
    """

    beta: float
    theta: float
    gamma: float
    left: int
    size: int
    field: FieldRealization
    boundary: Optional[Boundary] = None

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not 0 < self.gamma:
            raise ValueError("gamma must be positive")
        if self.size < 1:
            raise ValueError("size must be at least 1")
        if self.left < 0 or self.left + self.size > len(self.field):
            raise ValueError("window must sit inside the field realization")
        if self.boundary is not None:
            r = self.radius
            if self.boundary.left.size < r or self.boundary.right.size < r:
                raise ValueError("boundary must cover the interaction range")

    @property
    def radius(self) -> int:
        """Sites within coupling reach of a given site, one side."""
        return int(math.floor(0.5 / self.gamma + _EDGE_TOL))

    @property
    def field_window(self) -> np.ndarray:
        return self.field.values[self.left:self.left + self.size]

    def flipped(self):
        """The spec with field and boundary signs reversed."""
        bdry = self.boundary
        if bdry is not None:
            bdry = Boundary(-bdry.left, -bdry.right)
        return GibbsSpec(self.beta, self.theta, self.gamma, self.left,
                         self.size, self.field.flipped(), bdry)


def _boundary_sums(spec: GibbsSpec) -> np.ndarray:
    """Coupled boundary spin total for each window site, integer."""
    n, r = spec.size, spec.radius
    out = np.zeros(n, dtype=np.int64)
    if spec.boundary is None or r == 0:
        return out
    i = np.arange(n)
    bl = spec.boundary.left.astype(np.int64)
    counts = np.clip(r - i, 0, bl.size)
    suffix = np.concatenate(([0], np.cumsum(bl[::-1])))
    out += suffix[counts]
    br = spec.boundary.right.astype(np.int64)
    counts = np.clip(r - (n - 1 - i), 0, br.size)
    prefix = np.concatenate(([0], np.cumsum(br)))
    out += prefix[counts]
    return out


def _window_sums(sig: np.ndarray, r: int) -> np.ndarray:
    """Sliding sums over [i - r, i + r] clipped to the array, integer."""
    n = sig.shape[-1]
    p = np.concatenate([np.zeros(sig.shape[:-1] + (1,), dtype=np.int64),
                        np.cumsum(sig, axis=-1, dtype=np.int64)], axis=-1)
    i = np.arange(n)
    lo = np.maximum(i - r, 0)
    hi = np.minimum(i + r, n - 1)
    return p[..., hi + 1] - p[..., lo]


def hamiltonian(config: SpinConfig, spec: GibbsSpec) -> float:
    """Energy of a configuration, boundary coupling included.

    The pair sum runs over ordered site pairs of the window including the
    diagonal, each at half weight; boundary spins couple at full weight
    and carry no field term.  All three sums are integers, so the result
    is reproducible bit for bit.
    """
    if config.left != spec.left or len(config) != spec.size:
        raise ValueError("configuration does not match the window")
    sig = config.values.astype(np.int64)
    pair = int(np.dot(sig, _window_sums(sig, spec.radius)))
    fld = int(np.dot(sig, spec.field_window.astype(np.int64)))
    bdry = int(np.dot(sig, _boundary_sums(spec)))
    return -0.5 * spec.gamma * pair - spec.theta * fld - spec.gamma * bdry


# ---------------------------------------------------------------------------
# exact enumeration

def _sign_matrix(codes: np.ndarray, n: int) -> np.ndarray:
    """Spins for integer codes; site s is +1 when bit s is set."""
    bits = (codes[:, None] >> np.arange(n)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


class ExactMeasure:
    """Probabilities of all configurations of a small window.

    Configurations are indexed by integer code; site s of code k carries
    spin +1 exactly when bit s of k is set.  Energies use integer pair,
    field, and boundary sums, so two specs related by a global sign flip
    produce bitwise identical probability tables up to code complement.
    """

    def __init__(self, spec: GibbsSpec, energies: np.ndarray):
        self.spec = spec
        self.energies = energies
        e0 = float(energies.min())
        w = np.exp(-spec.beta * (energies - e0))
        z = math.fsum(w)
        self.probs = w / z

    def __len__(self):
        return int(self.probs.size)

    def config_values(self, code: int) -> np.ndarray:
        return _sign_matrix(np.array([code], dtype=np.int64), self.spec.size)[0]

    def probability(self, values) -> float:
        v = np.asarray(values)
        if v.size != self.spec.size or not np.all(np.abs(v) == 1):
            raise ValueError("values must be a full window of signs")
        code = int(np.dot((v > 0).astype(np.int64), 1 << np.arange(v.size)))
        return float(self.probs[code])

    def site_marginals(self) -> np.ndarray:
        """Probability of spin +1 at each site."""
        n = self.spec.size
        out = np.zeros(n)
        for lo in range(0, len(self), _ENUM_CHUNK):
            codes = np.arange(lo, min(lo + _ENUM_CHUNK, len(self)))
            bits = (codes[:, None] >> np.arange(n)[None, :]) & 1
            out += self.probs[codes] @ bits
        return out

    def expectation(self, observable) -> float:
        """Mean of a vectorized observable of the sign matrix.

        observable maps an (m, size) sign matrix to m values.
        """
        total = 0.0
        for lo in range(0, len(self), _ENUM_CHUNK):
            codes = np.arange(lo, min(lo + _ENUM_CHUNK, len(self)))
            vals = np.asarray(observable(_sign_matrix(codes, self.spec.size)))
            total += float(np.dot(self.probs[codes], vals))
        return total


def brute_force_measure(spec: GibbsSpec) -> ExactMeasure:
    """Enumerate every configuration of a window of at most 20 sites."""
    n = spec.size
    if n > _ENUM_LIMIT:
        raise SizeLimitError(f"window of {n} sites exceeds the "
                             f"enumeration limit {_ENUM_LIMIT}")
    r = spec.radius
    h = spec.field_window.astype(np.int64)
    bsum = _boundary_sums(spec)
    energies = np.empty(1 << n)
    for lo in range(0, 1 << n, _ENUM_CHUNK):
        codes = np.arange(lo, min(lo + _ENUM_CHUNK, 1 << n), dtype=np.int64)
        s = _sign_matrix(codes, n).astype(np.int64)
        pair = np.sum(s * _window_sums(s, r), axis=1)
        fld = s @ h
        bdry = s @ bsum
        energies[lo:lo + codes.size] = (-0.5 * spec.gamma * pair
                                        - spec.theta * fld
                                        - spec.gamma * bdry)
    return ExactMeasure(spec, energies)


# ---------------------------------------------------------------------------
# heat-bath chain


class HeatBathChain:
    """Single-site heat-bath dynamics on a window.

    One sweep updates every site left to right; each update resamples the
    spin from its exact conditional given the rest.  The local field
    splits into gamma times the neighbor sum plus a per-site constant, so
    acceptance probabilities come from a small lookup table.  The running
    energy is audited against a fresh evaluation every thousand sweeps.
    """

    def __init__(self, spec: GibbsSpec, seed, initial: SpinConfig = None):
        self.spec = spec
        n, r = spec.size, spec.radius
        self._n, self._r = n, r
        self._rng = np.random.default_rng(seed)
        if initial is None:
            vals = self._rng.integers(0, 2, size=n, dtype=np.int8) * 2 - 1
        else:
            if initial.left != spec.left or len(initial) != spec.size:
                raise ValueError("initial configuration does not match the window")
            vals = initial.values.copy()
        self._sig = [int(v) for v in vals]

        const = (spec.theta * spec.field_window.astype(np.float64)
                 + spec.gamma * _boundary_sums(spec))
        uniq, inv = np.unique(const, return_inverse=True)
        w = np.arange(-2 * r, 2 * r + 1, dtype=np.float64)
        local = spec.gamma * w[None, :] + uniq[:, None]
        ptable = 1.0 / (1.0 + np.exp(-2.0 * spec.beta * local))
        self._codes = [int(c) for c in inv]
        self._ptable = ptable.tolist()
        self._ftable = local.tolist()
        self._sweep_count = 0
        self._energy = hamiltonian(self.config, spec)

    @property
    def config(self) -> SpinConfig:
        return SpinConfig(self.spec.left, np.array(self._sig, dtype=np.int8))

    @property
    def energy(self) -> float:
        """Incrementally tracked energy of the current configuration."""
        return self._energy

    def recomputed_energy(self) -> float:
        return hamiltonian(self.config, self.spec)

    def flip_probability(self, i: int) -> float:
        """Conditional probability of spin +1 at site i given the rest."""
        n, r = self._n, self._r
        if not 0 <= i < n:
            raise ValueError("site outside the window")
        sig = self._sig
        w = sum(sig[max(i - r, 0):min(i + r, n - 1) + 1]) - sig[i]
        return self._ptable[self._codes[i]][w + 2 * r]

    def sweep(self):
        """One left-to-right pass over the window."""
        n, r = self._n, self._r
        sig = self._sig
        codes = self._codes
        ptable = self._ptable
        ftable = self._ftable
        u = self._rng.random(n).tolist()
        shift = 2 * r
        s_win = sum(sig[0:min(r, n - 1) + 1])
        energy = self._energy
        for i in range(n):
            s_old = sig[i]
            w = s_win - s_old
            row = codes[i]
            s_new = 1 if u[i] < ptable[row][w + shift] else -1
            if s_new != s_old:
                energy -= (s_new - s_old) * ftable[row][w + shift]
                sig[i] = s_new
                s_win += s_new - s_old
            if i >= r:
                s_win -= sig[i - r]
            if i + 1 + r < n:
                s_win += sig[i + 1 + r]
        self._energy = energy
        self._sweep_count += 1
        if self._sweep_count % _AUDIT_INTERVAL == 0:
            fresh = self.recomputed_energy()
            if abs(fresh - self._energy) > _AUDIT_TOL:
                raise RuntimeError(
                    f"energy drift {abs(fresh - self._energy):.3e} after "
                    f"{self._sweep_count} sweeps")
            self._energy = fresh

    def sweeps(self, count: int):
        for _ in range(int(count)):
            self.sweep()


def heat_bath_sample(spec: GibbsSpec, sweeps: int, seed, *,
                     burn_in: int = 0, thin: int = 1,
                     initial: SpinConfig = None):
    """Yield configurations along a heat-bath chain.

    Runs burn_in unrecorded sweeps, then sweeps more, yielding every
    thin-th configuration.  The chain is reproducible from the seed,
    which also draws the initial configuration when none is given.
    """
    if sweeps < 0 or burn_in < 0:
        raise ValueError("sweep counts must be nonnegative")
    if thin < 1:
        raise ValueError("thin must be at least 1")
    chain = HeatBathChain(spec, seed, initial)
    chain.sweeps(burn_in)
    for k in range(1, int(sweeps) + 1):
        chain.sweep()
        if k % thin == 0:
            yield chain.config


# ---------------------------------------------------------------------------
# block observables and boundary draws


def block_observables(config: SpinConfig, spec: GibbsSpec,
                      delta_star: float) -> np.ndarray:
    """Half-block magnetization pairs of a configuration, (blocks, 2).

    The window must be block aligned.  Column 0 averages the half block
    with the surplus field sign removed, column 1 the other half, both
    normalized by the half-block size.
    """
    n_blk = block_size(spec.gamma, delta_star)
    if spec.left % n_blk != 0 or spec.size % n_blk != 0:
        raise ValueError("window is not block aligned")
    if config.left != spec.left or len(config) != spec.size:
        raise ValueError("configuration does not match the window")
    half = n_blk // 2
    b0 = spec.left // n_blk
    n_blocks = spec.size // n_blk
    out = np.empty((n_blocks, 2))
    for b in range(n_blocks):
        stats = decompose_block(spec.field, b0 + b, spec.gamma, delta_star)
        out[b, 0] = config.values[stats.b_plus - spec.left].sum() / half
        out[b, 1] = config.values[stats.b_minus - spec.left].sum() / half
    return out


def pure_phase_draw(h: FieldRealization, gamma: float, delta_star: float,
                    blocks, sign: int, pc: PhaseConstants,
                    rng) -> np.ndarray:
    """Draw spins from the product caricature of one pure phase.

    Sites in the favored half block are +1 with mean given by the larger
    minimizer component, the other half by the smaller one; sign -1
    mirrors the pair with both signs reversed.  Returns signs over the
    contiguous site span of the given blocks.  Used for fixed boundary
    layers and for phase-typical initial configurations.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be -1 or +1")
    blocks = [int(b) for b in blocks]
    if not blocks or any(b2 - b1 != 1 for b1, b2 in zip(blocks, blocks[1:])):
        raise ValueError("blocks must be contiguous ascending")
    n_blk = block_size(gamma, delta_star)
    lo = blocks[0] * n_blk
    mean = np.empty(len(blocks) * n_blk)
    for b in blocks:
        stats = decompose_block(h, b, gamma, delta_star)
        if sign == 1:
            mean[stats.b_plus - lo] = pc.m_beta_1
            mean[stats.b_minus - lo] = pc.m_beta_2
        else:
            mean[stats.b_plus - lo] = -pc.m_beta_2
            mean[stats.b_minus - lo] = -pc.m_beta_1
    u = rng.random(mean.size)
    return np.where(u < (1.0 + mean) / 2.0, 1, -1).astype(np.int8)


# ---------------------------------------------------------------------------
# chain diagnostics


def autocorrelation_time(series) -> float:
    """Integrated autocorrelation time of a scalar series.

    Sums normalized autocovariances until the first nonpositive lag; a
    constant or too short series counts as uncorrelated (time 1/2).
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if n < 2:
        return 0.5
    x = x - x.mean()
    c0 = float(np.dot(x, x)) / n
    if c0 == 0.0:
        return 0.5
    tau = 0.5
    for t in range(1, n):
        rho = float(np.dot(x[:-t], x[t:])) / (n * c0)
        if rho <= 0.0:
            break
        tau += rho
    return tau


def sign_test_pvalue(n_plus: int, n_total: int) -> float:
    """One-sided sign test: chance of at least n_plus heads in n_total."""
    if not 0 <= n_plus <= n_total:
        raise ValueError("need 0 <= n_plus <= n_total")
    total = sum(math.comb(n_total, k) for k in range(n_plus, n_total + 1))
    return total / 2 ** n_total


# ---------------------------------------------------------------------------
# localization experiment


@dataclass(frozen=True)
class ExperimentParams:
    """Knobs of the boundary-condition comparison experiment.

    The walk thresholds (f_star, f, rho) are calibrated so elongations
    are rare but present at the default span; sweeps and thin control the
    chain budget per boundary arm.  flip_field reruns everything on the
    sign-reversed field.  control_interval and control_tau bypass the
    walk with a fixed window (macro units relative to the field center)
    and a fixed predicted sign, for calibration against enumeration.
    classifier_point overrides the phase point used for labels and
    boundary draws, which keeps them meaningful at beta 0.
    """

    beta: float = 2.0
    theta: float = 0.1
    gamma: float = 1.0 / 16
    delta_star: float = 0.25
    delta: float = 0.5
    zeta: float = 0.2
    eps: float = 1.0 / 16
    q_span: float = 16.0
    f_star: float = 0.38
    f: float = 0.08
    rho: float = 1.0 / 16
    sweeps: int = 2500
    burn_in: Optional[int] = None
    thin: int = 5
    flip_field: bool = False
    control_interval: Optional[tuple] = None
    control_tau: Optional[int] = None
    classifier_point: Optional[PhasePoint] = None

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if min(self.gamma, self.delta_star, self.eps, self.q_span) <= 0:
            raise ValueError("scales must be positive")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must be in (0, 1]")
        if self.zeta <= 0:
            raise ValueError("zeta must be positive")
        if self.sweeps < 1 or self.thin < 1:
            raise ValueError("sweeps and thin must be positive")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        m = self.eps / (self.gamma * self.delta_star)
        if abs(m - round(m)) > _EDGE_TOL or round(m) < 1:
            raise ValueError("eps must hold a whole number of blocks")
        if (self.control_interval is None) != (self.control_tau is None):
            raise ValueError("control_interval and control_tau come together")
        if self.control_tau is not None and self.control_tau not in (-1, 1):
            raise ValueError("control_tau must be -1 or +1")

    @property
    def blocks_per_window(self) -> int:
        return int(round(self.eps / (self.gamma * self.delta_star)))

    @property
    def point(self) -> PhasePoint:
        return PhasePoint(self.beta, self.theta)


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything fixed before the chains run.

    tau is the predicted phase of the localized window on the reported
    field.  The specs are in the working frame, where the predicted
    phase is always +1; flipped records whether that frame reverses the
    reported field.  Exceptional plans carry a reason and no specs.
    """

    seed: int
    exceptional: Optional[str]
    tau: int = 0
    flipped: bool = False
    i_interval: Optional[tuple] = None
    window: Optional[tuple] = None
    unit_blocks: tuple = ()
    matched_spec: Optional[GibbsSpec] = None
    mismatched_spec: Optional[GibbsSpec] = None
    matched_seed: object = None
    mismatched_seed: object = None
    burn_in: int = 0
    constants: Optional[PhaseConstants] = None


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one seed of the experiment.

    tau is the predicted phase, interval the localized window in macro
    units of the sampled field, window its simulated site range.  The
    fractions count (sample, unit block) pairs classified as the
    predicted phase under matched and mismatched boundaries.
    """

    seed: int
    tau: int
    interval: Optional[tuple]
    window: Optional[tuple]
    unit_blocks: tuple
    matched_fraction: float
    mismatched_fraction: float
    n_samples: int
    burn_in: int
    exceptional: Optional[str]

    @property
    def is_exceptional(self) -> bool:
        return self.exceptional is not None


def _exceptional_plan(seed, reason):
    return ExperimentPlan(seed=seed, exceptional=reason)


def plan_experiment(params: ExperimentParams, seed: int) -> ExperimentPlan:
    """Sample a field, localize a window, and fix both boundary arms.

    Seeds split into named substreams (field, matched chain, mismatched
    chain, boundary draws, probe) so the arms differ only in boundary
    condition.  The plan is exceptional when the walk fails to localize,
    the net increment over the window vanishes, no unit block fits, or
    the window leaves the sampled field.
    """
    ss = np.random.SeedSequence(seed)
    field_ss, matched_ss, mismatched_ss, bc_ss, probe_ss = ss.spawn(5)
    pc = phase_constants(params.classifier_point if params.classifier_point
                         is not None else params.point)

    n_blk = block_size(params.gamma, params.delta_star)
    m_blocks = params.blocks_per_window
    spw = m_blocks * n_blk
    n_side = params.q_span / params.eps
    if abs(n_side - round(n_side)) > _EDGE_TOL:
        raise ValueError("q_span must hold a whole number of windows")
    n_side = int(round(n_side))
    n_total = 2 * n_side * spw
    center = n_side * spw

    h = sample_field(field_ss, n_total)
    if params.flip_field:
        h = h.flipped()

    if params.control_interval is not None:
        i_macro = (float(params.control_interval[0]),
                   float(params.control_interval[1]))
        tau = int(params.control_tau)
    else:
        chi = chi_profile(h, params, pc)
        path = WalkPath(chi, alpha_min=-n_side)
        epar = ElongationParams(f_star=params.f_star, eps=params.eps,
                                q_span=params.q_span, f=params.f,
                                rho=params.rho)
        out = construct_localization(path, epar, gamma=params.gamma)
        if out.is_exceptional:
            return _exceptional_plan(seed, out.exceptional)
        if out.tau == 0:
            return _exceptional_plan(seed, "flat net increment over the window")
        # the net increment accumulates minus the favored sign, so the
        # predicted phase is its reverse
        tau = -out.tau
        i_macro = out.i_interval

    lo_site = center + i_macro[0] / params.gamma
    hi_site = center + i_macro[1] / params.gamma
    if hi_site - lo_site < 1:
        return _exceptional_plan(seed, "localized window shorter than a site")

    per_unit = 1.0 / params.gamma
    ell_lo = math.ceil(lo_site * params.gamma - _EDGE_TOL)
    ell_hi = math.floor(hi_site * params.gamma + _EDGE_TOL)
    unit_blocks = tuple(range(ell_lo, ell_hi))
    if not unit_blocks:
        return _exceptional_plan(seed, "no unit block inside the window")

    radius = int(math.floor(0.5 / params.gamma + _EDGE_TOL))
    flank = math.ceil(radius / n_blk)
    b_lo = math.floor(lo_site / n_blk + _EDGE_TOL)
    b_hi = math.ceil(hi_site / n_blk - _EDGE_TOL)
    left = (b_lo - flank) * n_blk
    right = (b_hi + flank) * n_blk
    if left - flank * n_blk < 0 or right + flank * n_blk > n_total:
        return _exceptional_plan(seed, "window leaves the sampled field")

    flipped = tau == -1
    h_work = h.flipped() if flipped else h
    bc_rng = np.random.default_rng(bc_ss)
    left_blocks = range(b_lo - 2 * flank, b_lo - flank)
    right_blocks = range(b_hi + flank, b_hi + 2 * flank)
    draws = {"matched": None, "mismatched": None}
    if radius > 0:
        for arm_sign, name in ((1, "matched"), (-1, "mismatched")):
            bl = pure_phase_draw(h_work, params.gamma, params.delta_star,
                                 left_blocks, arm_sign, pc, bc_rng)
            br = pure_phase_draw(h_work, params.gamma, params.delta_star,
                                 right_blocks, arm_sign, pc, bc_rng)
            draws[name] = Boundary(bl[-radius:], br[:radius])

    size = right - left
    matched_spec = GibbsSpec(params.beta, params.theta, params.gamma,
                             left, size, h_work, draws["matched"])
    mismatched_spec = GibbsSpec(params.beta, params.theta, params.gamma,
                                left, size, h_work, draws["mismatched"])

    if params.burn_in is not None:
        burn_in = int(params.burn_in)
    else:
        probe = HeatBathChain(matched_spec, probe_ss)
        mags = np.empty(_PROBE_SWEEPS)
        for k in range(_PROBE_SWEEPS):
            probe.sweep()
            mags[k] = sum(probe._sig)
        tau_int = autocorrelation_time(mags)
        burn_in = int(np.clip(math.ceil(10 * tau_int), 100, 2000))

    return ExperimentPlan(
        seed=seed, exceptional=None, tau=tau, flipped=flipped,
        i_interval=(center * params.gamma + i_macro[0],
                    center * params.gamma + i_macro[1]),
        window=(left, right), unit_blocks=unit_blocks,
        matched_spec=matched_spec, mismatched_spec=mismatched_spec,
        matched_seed=matched_ss, mismatched_seed=mismatched_ss,
        burn_in=burn_in, constants=pc)


def _arm_fraction(spec: GibbsSpec, plan: ExperimentPlan, chain_seed,
                  arm_sign: int, params: ExperimentParams) -> tuple:
    """Fraction of (sample, unit block) pairs classified +1 in work frame.

    The chain starts from a phase-typical draw of the arm's own sign, so
    the mismatched arm measures how far the field and matched bulk invade
    a window prepared in the opposing phase.
    """
    n_blk = block_size(params.gamma, params.delta_star)
    half = n_blk // 2
    b0 = spec.left // n_blk
    n_blocks = spec.size // n_blk
    plus_idx = np.empty((n_blocks, half), dtype=np.int64)
    minus_idx = np.empty((n_blocks, half), dtype=np.int64)
    for b in range(n_blocks):
        stats = decompose_block(spec.field, b0 + b, params.gamma,
                                params.delta_star)
        plus_idx[b] = stats.b_plus - spec.left
        minus_idx[b] = stats.b_minus - spec.left
    init_ss, run_ss = np.random.SeedSequence(chain_seed.entropy,
                                             spawn_key=chain_seed.spawn_key
                                             ).spawn(2)
    init = SpinConfig(spec.left, pure_phase_draw(
        spec.field, params.gamma, params.delta_star,
        range(b0, b0 + n_blocks), arm_sign, plan.constants,
        np.random.default_rng(init_ss)))
    agree = 0
    total = 0
    n_samples = 0
    cells = np.empty((n_blocks, 2))
    for cfg in heat_bath_sample(spec, params.sweeps, run_ss,
                                burn_in=plan.burn_in, thin=params.thin,
                                initial=init):
        v = cfg.values
        cells[:, 0] = v[plus_idx].sum(axis=1) / half
        cells[:, 1] = v[minus_idx].sum(axis=1) / half
        prof = Profile(params.delta_star, cells.copy(), origin_offset=-b0)
        for ell in plan.unit_blocks:
            eta = eta_classify(prof, params.delta, params.zeta, ell,
                               plan.constants)
            agree += int(eta == 1)
            total += 1
        n_samples += 1
    return (agree / total if total else math.nan), n_samples


def localization_experiment(params: ExperimentParams,
                            seed: int) -> ExperimentReport:
    """Run both boundary arms on one seed and report agreement fractions.

    The matched arm fixes boundary spins drawn from the predicted pure
    phase, the mismatched arm from its reverse; both chains see the same
    field window.  A localized interface should pull the matched fraction
    above the mismatched one.
    """
    plan = plan_experiment(params, seed)
    if plan.exceptional is not None:
        return ExperimentReport(seed=seed, tau=0, interval=None, window=None,
                                unit_blocks=(), matched_fraction=math.nan,
                                mismatched_fraction=math.nan, n_samples=0,
                                burn_in=0, exceptional=plan.exceptional)
    matched, n_samples = _arm_fraction(plan.matched_spec, plan,
                                       plan.matched_seed, 1, params)
    mismatched, _ = _arm_fraction(plan.mismatched_spec, plan,
                                  plan.mismatched_seed, -1, params)
    return ExperimentReport(
        seed=seed, tau=plan.tau, interval=plan.i_interval,
        window=plan.window, unit_blocks=plan.unit_blocks,
        matched_fraction=matched, mismatched_fraction=mismatched,
        n_samples=n_samples, burn_in=plan.burn_in, exceptional=None)
