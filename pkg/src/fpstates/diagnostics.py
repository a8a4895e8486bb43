"""Finite-mode evidence for the Hadamard question.

Nothing here proves convergence or divergence of an infinite series; the
verdicts summarise what the available modes show, using fixed thresholds:

* ``converged``: the partial sum moves by less than ``tail_tol`` over the
  last index decade and a power-law tail fit integrates below ``tail_tol``;
* ``diverging``: per-mode terms keep returning above ``decay_floor`` times
  their overall maximum throughout the top ``window_fraction`` of modes;
* ``inconclusive``: anything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientModes, InvalidParams, InvalidSubslab
from .fpstate import projector_difference, reference_state

CONVERGED = "converged"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Thresholds:
    decay_floor: float = 0.1
    window_fraction: float = 0.25
    tail_tol: float = 1e-8
    rolling: int = 5
    min_modes: int = 10

    def __post_init__(self):
        for name in ("decay_floor", "window_fraction"):
            v = getattr(self, name)
            if not 0 < v < 1 and not (name == "window_fraction" and v == 1):
                raise InvalidParams(f"{name} must lie in (0, 1), got {v}")
        if not self.tail_tol > 0:
            raise InvalidParams("tail_tol must be positive")
        if self.rolling < 1 or self.min_modes < 1:
            raise InvalidParams("rolling and min_modes must be positive")


DEFAULT_THRESHOLDS = Thresholds()


@dataclass(frozen=True)
class SeriesReport:
    p: float
    n: np.ndarray = field(repr=False)
    partial: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    terms: np.ndarray = field(repr=False)
    decade_change: float
    tail_estimate: float
    fit_exponent: float
    verdict: str
    cutoff: float

    @property
    def total(self):
        return float(self.partial[-1])

    @property
    def partial_sums(self):
        """``(N, S(N))`` at the last index of every distinct eigenvalue."""
        ends = _group_ends(self.lam)
        return list(zip(self.n[ends].tolist(), self.partial[ends].tolist()))


@dataclass(frozen=True)
class ScanReport:
    b_grid: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    mean: np.ndarray
    rolling_floor: np.ndarray
    flagged: np.ndarray
    floor: float

    @property
    def verdicts(self):
        return ["non-hadamard-indicated" if f else INCONCLUSIVE for f in self.flagged]

    @property
    def flagged_fraction(self):
        return float(np.mean(self.flagged))


@dataclass(frozen=True)
class KSpectrum:
    z: np.ndarray
    magnitudes: np.ndarray
    solver_deviation: float
    verdict: str

    def eigenvalues(self):
        """Nonzero eigenvalues ``(+m_z, -m_z)`` in mode order, shape ``(n, 2)``."""
        return np.stack([self.magnitudes, -self.magnitudes], axis=1)


@dataclass(frozen=True)
class BridgeReport:
    bridge_ok: bool
    cos_sq_ok: bool
    worst_lower: float
    worst_upper: float
    agreement: dict
    ok: bool


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _group_ends(lam):
    lam = np.asarray(lam)
    if lam.size == 0:
        return np.array([], dtype=int)
    return np.append(np.nonzero(np.diff(lam) != 0)[0], lam.size - 1)


def _group_max(lam, values):
    """Per distinct eigenvalue: ``(lambda, max value)`` over the group."""
    ends = _group_ends(lam)
    starts = np.concatenate([[0], ends[:-1] + 1])
    return np.asarray(lam)[ends], np.maximum.reduceat(values, starts)


def _rolling_max(values, width):
    width = min(width, values.size)
    if width <= 1:
        return values.copy()
    windows = np.lib.stride_tricks.sliding_window_view(values, width)
    return windows.max(axis=1)


def _tail_fit(lam, terms, resolved, cutoff):
    """Integrated power-law tail beyond ``cutoff``.

    Terms are fitted as ``C lambda^s`` and the counting function as
    ``c_w lambda^d`` over the top index decade of the resolved positive
    terms; the tail is ``int_cutoff^inf C l^s dN(l)``.  Returns
    ``(tail, s)``, with ``tail = inf`` when ``s + d >= 0`` or the fit is
    degenerate.
    """
    index = np.arange(1, lam.size + 1)
    use = np.nonzero((terms > 0) & resolved)[0]
    if use.size == 0:
        return 0.0, -math.inf
    use = use[math.ceil(use.size / 10) - 1:] if use.size >= 10 else use
    sel_lam = lam[use]
    if np.unique(sel_lam).size < 2:
        return math.inf, math.nan
    slope, intercept = np.polyfit(np.log(sel_lam), np.log(terms[use]), 1)
    span = slice(use[0], use[-1] + 1)
    ends = _group_ends(lam[span])
    glam, counts = lam[span][ends], index[span][ends]
    if glam.size < 2:
        return math.inf, float(slope)
    d, logc = np.polyfit(np.log(glam), np.log(counts), 1)
    expo = slope + d
    if not expo < 0 or not d > 0:
        return math.inf, float(slope)
    tail = math.exp(intercept + logc) * d * cutoff ** expo / -expo
    return float(tail), float(slope)


def _series(lam, terms, p, cutoff, thresholds, resolved=None):
    lam = np.asarray(lam, dtype=float)
    terms = np.asarray(terms, dtype=float)
    n_modes = lam.size
    if n_modes < thresholds.min_modes:
        raise InsufficientModes(f"{n_modes} modes available, need at least {thresholds.min_modes}")
    partial = np.cumsum(terms)
    n = np.arange(1, n_modes + 1)
    lo = math.ceil(n_modes / 10)
    decade_change = float(partial[-1] - partial[lo - 1])

    if resolved is None:
        resolved = np.ones(n_modes, dtype=bool)
    tail, slope = _tail_fit(lam, terms, resolved, float(lam[-1]))

    verdict = INCONCLUSIVE
    if decade_change < thresholds.tail_tol and tail < thresholds.tail_tol:
        verdict = CONVERGED
    elif _persists(lam, terms, thresholds):
        verdict = DIVERGING
    return SeriesReport(p, n, partial, lam, terms, decade_change, tail, slope, verdict, cutoff)


def _persists(lam, values, thresholds):
    """True if values in the top window keep reaching ``floor * max``."""
    peak = float(np.max(values)) if values.size else 0.0
    if peak <= 0:
        return False
    start = int(math.floor(lam.size * (1 - thresholds.window_fraction)))
    glam, gmax = _group_max(lam[start:], values[start:])
    if gmax.size < thresholds.rolling:
        return False
    return bool(np.min(_rolling_max(gmax, thresholds.rolling)) >= thresholds.decay_floor * peak)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def sin_theta_sequence(state):
    """``(z, |sin theta_z|)`` arrays."""
    return state.indices, np.abs(state.sin_theta())


def hadamard_series(state, p, thresholds=DEFAULT_THRESHOLDS):
    """``S_p(N) = sum_{z <= N} lambda_z^p sin^2 theta_z`` with a verdict."""
    if p < 0:
        raise InvalidParams("p must be nonnegative")
    terms = state.lam ** p * state.sin_theta() ** 2
    return _series(state.lam, terms, p, state.cutoff, thresholds, state.resolved)


def fluctuation_squared(state, p, hhat0=1.0, thresholds=DEFAULT_THRESHOLDS):
    """``|hhat(0)|^2 sum lambda_w^(4p-2) sin^2 2 theta_w`` with a verdict."""
    if int(p) != p or p < 1:
        raise InvalidParams("p must be a positive integer")
    s2 = np.sin(2 * state.theta) ** 2 if state.kind != "ceiling" else np.zeros(len(state))
    terms = abs(hhat0) ** 2 * state.lam ** (4 * p - 2) * s2
    return _series(state.lam, terms, int(p), state.cutoff, thresholds, state.resolved)


def k_operator_spectrum(state, a_sub, b_sub, reference=None, thresholds=DEFAULT_THRESHOLDS):
    """Nonzero spectrum ``+-(b' - a') |sin theta_z|`` of the restricted difference operator.

    The closed form is cross-checked against ``eigvalsh`` of
    ``(b' - a') (Q_f - Q)`` block by block; ``solver_deviation`` is the
    largest disagreement.
    """
    slab = state.slab
    if slab is None:
        raise InvalidSubslab("state has no slab")
    if not slab.a < a_sub < b_sub < slab.b:
        raise InvalidSubslab(f"need {slab.a} < a' < b' < {slab.b}, got ({a_sub}, {b_sub})")
    width = b_sub - a_sub
    if reference is None:
        reference = reference_state(state.spectrum, state.cutoff)
    mags = width * np.abs(state.sin_theta())
    evals = np.linalg.eigvalsh(width * projector_difference(state, reference))
    closed = np.stack([-mags, mags], axis=1)
    deviation = float(np.max(np.abs(evals - closed))) if len(state) else 0.0
    if _persists(state.lam, mags, thresholds):
        verdict = "noncompact-indicated"
    elif mags.size == 0 or mags[-1] <= thresholds.decay_floor * max(float(np.max(mags)), 1e-300):
        verdict = "compact-indicated"
    else:
        verdict = INCONCLUSIVE
    return KSpectrum(state.indices, mags, deviation, verdict)


def _range_max(values, starts, stops):
    """``max(values[starts[i]:stops[i]])`` for each ``i`` via a sparse table."""
    table = [values]
    width = 1
    while 2 * width <= values.size:
        prev = table[-1]
        table.append(np.maximum(prev[:-width], prev[width:]))
        width *= 2
    length = stops - starts
    level = np.floor(np.log2(length)).astype(int)
    out = np.empty(starts.size)
    for k in np.unique(level):
        sel = level == k
        row = table[k]
        out[sel] = np.maximum(row[starts[sel]], row[stops[sel] - (1 << k)])
    return out


def scan_slab_halfwidths(spectrum, b_grid, window=0.25, floor=0.1, rolling=5):
    """Per ``b``: statistics of ``sin^2(2 b lambda)`` over the top spectral window.

    ``window`` is a fraction of the positive modes (``0 < window <= 1``) or
    a mode count.  Values are taken once per distinct eigenvalue.  The
    rolling maximum runs over windows that hold at least ``rolling``
    consecutive eigenvalues and span at least one period ``pi / (2b)`` of
    the oscillation; ``b`` is flagged when every such window reaches above
    ``floor``.  Unflagged points are reported as inconclusive, not as
    Hadamard.
    """
    b_grid = np.asarray(b_grid, dtype=float)
    if b_grid.size == 0 or np.any(np.diff(b_grid) <= 0) or np.any(b_grid <= 0):
        raise InvalidParams("b grid must be nonempty, positive and strictly increasing")
    lam = np.asarray(spectrum.positive)
    count = int(math.ceil(window * lam.size)) if window <= 1 else int(window)
    count = max(1, min(count, lam.size))
    top = np.unique(lam[lam.size - count:])
    vals = np.sin(2 * b_grid[:, None] * top[None, :]) ** 2
    low = np.empty(b_grid.size)
    for i, b in enumerate(b_grid):
        period = math.pi / (2 * b)
        starts = np.arange(top.size)
        stops = np.maximum(starts + rolling, np.searchsorted(top, top + period))
        # windows cut off by the end of the spectrum are incomplete
        full = (stops <= top.size) & (top + period <= top[-1])
        if not np.any(full):
            stops = np.array([top.size])
            starts = np.array([0])
            full = np.array([True])
        low[i] = np.min(_range_max(vals[i], starts[full], stops[full]))
    return ScanReport(b_grid, vals.min(axis=1), vals.max(axis=1), vals.mean(axis=1), low,
                      low > floor, floor)


def fluctuation_implies_hadamard_check(state, ps=(1, 2), thresholds=DEFAULT_THRESHOLDS):
    """Per-mode bridge ``2 s^2 <= sin^2 2t <= 4 s^2`` and verdict agreement.

    Agreement compares ``fluctuation_squared(p)`` with
    ``hadamard_series(4p - 2)`` for each ``p``.
    """
    s2 = state.sin_theta() ** 2
    c2 = np.cos(state.theta) ** 2
    sin2t2 = 4 * s2 * c2
    slack = 1e-15
    lower = float(np.max(2 * s2 - sin2t2, initial=-np.inf))
    upper = float(np.max(sin2t2 - 4 * s2, initial=-np.inf))
    bridge_ok = lower <= slack and upper <= slack
    cos_ok = bool(np.all(c2 > 0.5))
    agreement = {}
    for p in ps:
        fl = fluctuation_squared(state, p, thresholds=thresholds).verdict
        hs = hadamard_series(state, 4 * p - 2, thresholds=thresholds).verdict
        agreement[p] = (fl, hs, fl == hs)
    ok = bridge_ok and cos_ok and all(v[2] for v in agreement.values())
    return BridgeReport(bridge_ok, cos_ok, lower, upper, agreement, ok)


def large_slab_envelope(lam, mass, b):
    """Largest ``|sin theta|`` any mode at ``lam`` can reach for ``indicator(-b, b)``.

    With ``|fhat(2 lam)| = |sin(2 b lam)| / lam <= 1 / lam`` the angle obeys
    ``tan 2 theta <= sqrt(1 - m^2/lam^2) / (2 b m)``.
    """
    lam = np.asarray(lam, dtype=float)
    return np.sin(0.5 * np.arctan2(np.sqrt(1 - (mass / lam) ** 2), 2 * b * mass))
