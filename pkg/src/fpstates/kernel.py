"""Difference-kernel terms sigma_z on point pairs of the slab.

With mode functions ``kappa+_z(t, x) = exp(-i lam t) u+ exp(i k.x) / sqrt(V)``
and ``kappa-_z(t, x) = exp(+i lam t) u- exp(i k.x) / sqrt(V)``, and the
rotated mode ``kf = cos(t) kappa+ + exp(-i phi) sin(t) kappa-``,

    sigma_z(p, q) = gamma0 [kf(p) kf(q)^dag - kappa+(p) kappa+(q)^dag].

Read as a bispinor kernel with Dirac adjoints this is
``gamma0 kf (kf)^dag gamma0`` composed with the adjoint's ``gamma0``; the
trailing factors cancel, which is the form evaluated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _accel
from .errors import IndexOutOfRange, InvalidParams, PointOutsideSlab, SpectrumMismatch
from .spectrum import GAMMA0


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        x = tuple(float(v) for v in self.x)
        if len(x) != 3:
            raise InvalidParams("spatial point needs three coordinates")
        object.__setattr__(self, "x", x)


def _check_basis(state, basis, n):
    if n > len(basis) or n > len(state):
        raise IndexOutOfRange(f"need {n} modes; state has {len(state)}, basis {len(basis)}")
    if not np.array_equal(np.asarray(basis.spectrum.positive[:n]), state.lam[:n]):
        raise SpectrumMismatch("basis and state disagree on eigenvalues")


def _check_times(state, *times):
    slab = state.slab
    if slab is None:
        return
    for t in times:
        t = np.atleast_1d(t)
        if np.any((t <= slab.a) | (t >= slab.b)):
            bad = float(t[(t <= slab.a) | (t >= slab.b)][0])
            raise PointOutsideSlab(f"time {bad} outside the slab ({slab.a}, {slab.b})")


def _angles(state, sl):
    c = np.cos(state.theta[sl])
    s = np.sin(state.theta[sl])
    if state.kind == "ceiling":
        c = np.zeros_like(c)
        s = np.ones_like(s)
    return c, s, state.phi[sl]


def mode_terms(state, basis, z, tp, xp, tq, xq, phi=None):
    """``sigma_z`` at many point pairs, shape ``(P, 4, 4)``.

    ``phi`` overrides the stored angle (used to express time translations).
    """
    _check_basis(state, basis, z)
    if z < 1:
        raise IndexOutOfRange(f"index {z} must be positive")
    i = z - 1
    tp, tq = np.atleast_1d(tp).astype(float), np.atleast_1d(tq).astype(float)
    xp, xq = np.atleast_2d(xp).astype(float), np.atleast_2d(xq).astype(float)
    lam = state.lam[i]
    k = basis.kphys[i]
    inv = 1.0 / math.sqrt(basis.params.volume)
    c, s, ph = _angles(state, slice(i, i + 1))
    ph = ph[0] if phi is None else phi
    sp = np.exp(1j * (xp @ k)) * inv
    sq = np.exp(1j * (xq @ k)) * inv
    kp_ref = (np.exp(-1j * lam * tp) * sp)[:, None] * basis.u_pos[i]
    kq_ref = (np.exp(-1j * lam * tq) * sq)[:, None] * basis.u_pos[i]
    rot = np.exp(-1j * ph) * s[0]
    kp_f = c[0] * kp_ref + rot * (np.exp(1j * lam * tp) * sp)[:, None] * basis.u_neg[i]
    kq_f = c[0] * kq_ref + rot * (np.exp(1j * lam * tq) * sq)[:, None] * basis.u_neg[i]
    diff = np.einsum("pa,pb->pab", kp_f, kq_f.conj()) - np.einsum("pa,pb->pab", kp_ref, kq_ref.conj())
    return GAMMA0 @ diff


def sigma_term(state, basis, z, p, q):
    """``sigma_z(p, q)`` as a 4x4 matrix."""
    if not 1 <= z <= len(state):
        raise IndexOutOfRange(f"index {z} outside 1..{len(state)}")
    _check_times(state, p.t, q.t)
    return mode_terms(state, basis, z, p.t, np.array(p.x), q.t, np.array(q.x))[0]


def _duration(state):
    if state.slab is None:
        raise InvalidParams("state has no slab")
    return state.slab.b - state.slab.a


def sigma_l2_norm_sq(state, z):
    """``||sigma_z||^2`` over ``((a, b) x torus)^2``: ``2 (b - a)^2 sin^2 theta_z``.

    The four outer-product pieces of ``sigma_z`` are pointwise orthogonal
    (``u+`` and ``u-`` are orthogonal spinors), each piece has constant
    Frobenius norm ``1/V`` per factor, and the time integral runs over both
    arguments, hence the squared slab duration.
    """
    if not 1 <= z <= len(state):
        raise IndexOutOfRange(f"index {z} outside 1..{len(state)}")
    s = 1.0 if state.kind == "ceiling" else math.sin(state.theta[z - 1])
    return 2 * _duration(state) ** 2 * s * s


def sigma_l2_norms_sq(state):
    s = state.sin_theta()
    return 2 * _duration(state) ** 2 * s * s


# ---------------------------------------------------------------------------
# Numerical checks on grids
# ---------------------------------------------------------------------------

def _time_nodes(state, n_t):
    a, b = state.slab.a, state.slab.b
    width = (b - a) / n_t
    return a + (np.arange(n_t) + 0.5) * width, width


def sigma_norm_sampled(state, basis, z, n_grid=32, samples=4096, seed=0):
    """Monte Carlo estimate of ``||sigma_z||^2`` over a product grid.

    Point pairs are drawn uniformly from an ``n_grid``-per-axis midpoint grid
    of ``((a, b) x torus)^2``; the estimate is the sample mean of
    ``|sigma_z|_F^2`` times the measure of the domain.
    """
    rng = np.random.default_rng(seed)
    lengths = np.asarray(basis.params.lengths)
    t_nodes, _ = _time_nodes(state, n_grid)
    ti = rng.integers(0, n_grid, size=(2, samples))
    xi = rng.integers(0, n_grid, size=(2, samples, 3))
    xs = (xi + 0.5) / n_grid * lengths
    vals = mode_terms(state, basis, z, t_nodes[ti[0]], xs[0], t_nodes[ti[1]], xs[1])
    frob = np.sum(np.abs(vals) ** 2, axis=(1, 2))
    measure = (_duration(state) * basis.params.volume) ** 2
    return float(np.mean(frob) * measure)


def _mode_gram(state, basis, w, z, n_t, n_x):
    """``G[i, k] = int kappa^i_w(p)^dag kappa^k_z(p) dp`` on a midpoint product grid.

    ``i, k`` run over (+, -).  The integrand separates into a time factor, a
    spinor contraction and one periodic sum per spatial axis.
    """
    t, dt = _time_nodes(state, n_t)
    dk = basis.k[z - 1] - basis.k[w - 1]
    space = 1.0
    for axis in range(3):
        nodes = (np.arange(n_x) + 0.5) / n_x
        space *= np.sum(np.exp(2j * np.pi * dk[axis] * nodes)) / n_x
    lam_w, lam_z = state.lam[w - 1], state.lam[z - 1]
    u_w = (basis.u_pos[w - 1], basis.u_neg[w - 1])
    u_z = (basis.u_pos[z - 1], basis.u_neg[z - 1])
    sign = (-1.0, 1.0)  # kappa+ ~ exp(-i lam t), kappa- ~ exp(+i lam t)
    g = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for k in range(2):
            time = np.sum(np.exp(1j * (sign[k] * lam_z - sign[i] * lam_w) * t)) * dt
            g[i, k] = time * np.vdot(u_w[i], u_z[k]) * space
    return g


def _coefficients(state, z):
    """``C`` with ``sigma_z = gamma0 sum_ij C_ij kappa^i(p) kappa^j(q)^dag``."""
    c, s, ph = _angles(state, slice(z - 1, z))
    c, s, ph = c[0], s[0], ph[0]
    e = complex(math.cos(ph), -math.sin(ph)) * s    # exp(-i phi) sin
    a = np.array([c, e])
    out = np.outer(a, a.conj())
    out[0, 0] -= 1.0
    return out


def sigma_inner_grid(state, basis, w, z, n_t=64, n_x=32):
    """``<sigma_w, sigma_z>`` in L^2 evaluated on a product grid by separation.

    The inner product factors as ``sum conj(C^w_ij) C^z_kl G_ik conj(G_jl)``
    with ``G`` the single-point Gram matrix of the mode functions.
    """
    _check_basis(state, basis, max(w, z))
    g = _mode_gram(state, basis, w, z, n_t, n_x)
    cw = _coefficients(state, w)
    cz = _coefficients(state, z)
    return complex(np.einsum("ij,kl,ik,jl->", cw.conj(), cz, g, g.conj()))


# ---------------------------------------------------------------------------
# Truncated sums
# ---------------------------------------------------------------------------

def difference_kernel(state, basis, tp, xp, tq, xq, n_modes):
    """``sum_{z <= n_modes} sigma_z`` at each point pair, plus the L^2 tail.

    Returns ``(values, tail)`` with ``values`` of shape ``(P, 4, 4)`` and
    ``tail = sum_{n_modes < z <= len(state)} ||sigma_z||^2``.
    """
    n_modes = int(n_modes)
    if n_modes < 0 or n_modes > len(state):
        raise IndexOutOfRange(f"cannot sum {n_modes} modes of {len(state)}")
    tp, tq = np.atleast_1d(tp).astype(float), np.atleast_1d(tq).astype(float)
    xp, xq = np.atleast_2d(xp).astype(float), np.atleast_2d(xq).astype(float)
    _check_times(state, tp, tq)
    tail = float(np.sum(sigma_l2_norms_sq(state)[n_modes:]))
    if n_modes == 0:
        return np.zeros((tp.size, 4, 4), dtype=complex), tail
    _check_basis(state, basis, n_modes)
    sl = slice(0, n_modes)
    c, s, ph = _angles(state, sl)
    raw = _accel.sigma_sum(state.lam[sl], basis.kphys[sl], basis.u_pos[sl], basis.u_neg[sl],
                           c, s, ph, tp, xp, tq, xq, 1.0 / math.sqrt(basis.params.volume))
    return GAMMA0 @ raw, tail


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def read_point_pairs(path):
    """Lines ``t x1 x2 x3 t' x1' x2' x3'``; returns ``(tp, xp, tq, xq)``."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 8:
            raise InvalidParams(f"{path}:{lineno}: expected 8 numbers per point pair")
        rows.append([float(v) for v in parts])
    if not rows:
        raise InvalidParams(f"{path}: no point pairs")
    data = np.array(rows)
    return data[:, 0], data[:, 1:4], data[:, 4], data[:, 5:8]


def kernel_columns():
    return [f"{part}_{a}{b}" for a in range(4) for b in range(4) for part in ("re", "im")]


def kernel_rows(values):
    """Flatten ``(P, 4, 4)`` complex values to ``(P, 32)`` real columns (re, im interleaved)."""
    flat = np.asarray(values).reshape(-1, 16)
    out = np.empty((flat.shape[0], 32))
    out[:, 0::2] = flat.real
    out[:, 1::2] = flat.imag
    return out
