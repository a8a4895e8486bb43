"""Hot numeric kernels, each in a numba and a pure-numpy flavour.

The numba versions are used when numba imports cleanly and the environment
variable ``FPSTATES_DISABLE_NUMBA`` is not set to a truthy value.  Both
flavours are always importable under explicit names so tests and the
benchmark can compare them directly.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_DISABLED = os.environ.get("FPSTATES_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED

# rows of cos(omega * x) evaluated at once in the numpy path
_CHUNK_ELEMS = 4_000_000


def backend_name():
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Smooth bump: I(omega) = int_0^1 exp(-1/(1-x^2)) cos(omega x) dx
# ---------------------------------------------------------------------------

def _bump_profile(x):
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


def bump_cos_integrals_numpy(omegas, panels, nodes, weights):
    """Composite Gauss-Legendre on [0, 1] with ``panels[i]`` equal panels for ``omegas[i]``."""
    omegas = np.asarray(omegas, dtype=np.float64)
    panels = np.asarray(panels, dtype=np.int64)
    out = np.empty(omegas.shape[0], dtype=np.float64)
    for n in np.unique(panels):
        sel = np.nonzero(panels == n)[0]
        width = 1.0 / n
        x = ((np.arange(n)[:, None] + 0.5 * (nodes[None, :] + 1.0)) * width).ravel()
        gw = _bump_profile(x) * np.tile(weights, n) * (0.5 * width)
        rows = max(1, _CHUNK_ELEMS // x.size)
        for start in range(0, sel.size, rows):
            idx = sel[start:start + rows]
            out[idx] = np.cos(np.outer(omegas[idx], x)) @ gw
    return out


def _bump_cos_integrals_loop(omegas, panels, nodes, weights):
    m = omegas.shape[0]
    q = nodes.shape[0]
    out = np.empty(m)
    for i in range(m):
        n = panels[i]
        width = 1.0 / n
        w = omegas[i]
        acc = 0.0
        for j in range(n):
            left = j * width
            part = 0.0
            for k in range(q):
                x = left + 0.5 * (nodes[k] + 1.0) * width
                if x < 1.0:
                    part += weights[k] * np.exp(-1.0 / (1.0 - x * x)) * np.cos(w * x)
            acc += part
        out[i] = acc * 0.5 * width
    return out


# ---------------------------------------------------------------------------
# Piecewise-linear transform: sum over segments of int y(t) e^{i w t} dt
# ---------------------------------------------------------------------------

def _sinc_j1(alpha):
    """sin(a)/a and the spherical Bessel j1(a), both safe near a = 0."""
    a2 = alpha * alpha
    small = np.abs(alpha) < 1e-3
    safe = np.where(small, 1.0, alpha)
    sinc = np.where(small, 1.0 - a2 / 6.0 + a2 * a2 / 120.0, np.sin(safe) / safe)
    j1 = np.where(small, alpha / 3.0 - alpha * a2 / 30.0,
                  (np.sin(safe) - safe * np.cos(safe)) / (safe * safe))
    return sinc, j1


def pwl_fourier_numpy(omegas, t, y):
    omegas = np.asarray(omegas, dtype=np.float64)
    dt = np.diff(t)
    tm = 0.5 * (t[1:] + t[:-1])
    ybar = 0.5 * (y[1:] + y[:-1])
    dy = 0.5 * (y[1:] - y[:-1])
    out = np.empty(omegas.shape[0], dtype=np.complex128)
    rows = max(1, _CHUNK_ELEMS // max(1, dt.size))
    for start in range(0, omegas.size, rows):
        w = omegas[start:start + rows, None]
        sinc, j1 = _sinc_j1(0.5 * w * dt[None, :])
        seg = dt[None, :] * np.exp(1j * w * tm[None, :]) * (ybar[None, :] * sinc + 1j * dy[None, :] * j1)
        out[start:start + rows] = seg.sum(axis=1)
    return out


def _pwl_fourier_loop(omegas, t, y):
    m = omegas.shape[0]
    ns = t.shape[0] - 1
    out = np.empty(m, dtype=np.complex128)
    for i in range(m):
        w = omegas[i]
        re = 0.0
        im = 0.0
        for s in range(ns):
            dt = t[s + 1] - t[s]
            tm = 0.5 * (t[s + 1] + t[s])
            ybar = 0.5 * (y[s + 1] + y[s])
            dy = 0.5 * (y[s + 1] - y[s])
            a = 0.5 * w * dt
            if abs(a) < 1e-3:
                a2 = a * a
                sinc = 1.0 - a2 / 6.0 + a2 * a2 / 120.0
                j1 = a / 3.0 - a * a2 / 30.0
            else:
                sinc = np.sin(a) / a
                j1 = (np.sin(a) - a * np.cos(a)) / (a * a)
            c = np.cos(w * tm)
            sn = np.sin(w * tm)
            # dt * e^{i w tm} * (ybar*sinc + i*dy*j1)
            re += dt * (c * ybar * sinc - sn * dy * j1)
            im += dt * (sn * ybar * sinc + c * dy * j1)
        out[i] = re + 1j * im
    return out


# ---------------------------------------------------------------------------
# Difference-kernel sums: sum_z gamma0 (kf(p) kf(q)^H - k(p) k(q)^H)
# ---------------------------------------------------------------------------

def sigma_sum_numpy(lam, kvec, u_pos, u_neg, cos_t, sin_t, phi, tp, xp, tq, xq, inv_sqrt_vol):
    """Summed 4x4 kernel values at point pairs (without the leading gamma0).

    Returns ``S[p] = sum_z kf_z(p) kf_z(q)^H - kr_z(p) kr_z(q)^H``; callers
    apply the gamma0 on the left.
    """
    npairs = tp.shape[0]
    out = np.zeros((npairs, 4, 4), dtype=np.complex128)
    nmodes = lam.shape[0]
    step = max(1, _CHUNK_ELEMS // max(1, 16 * npairs))
    for start in range(0, nmodes, step):
        sl = slice(start, start + step)
        lz = lam[sl]
        space_p = np.exp(1j * (xp @ kvec[sl].T)) * inv_sqrt_vol   # (P, Z)
        space_q = np.exp(1j * (xq @ kvec[sl].T)) * inv_sqrt_vol
        ep_plus = np.exp(-1j * np.outer(tp, lz)) * space_p
        ep_minus = np.exp(1j * np.outer(tp, lz)) * space_p
        eq_plus = np.exp(-1j * np.outer(tq, lz)) * space_q
        eq_minus = np.exp(1j * np.outer(tq, lz)) * space_q
        c = cos_t[sl]
        s = np.exp(-1j * phi[sl]) * sin_t[sl]
        up = u_pos[sl]
        un = u_neg[sl]
        kp_ref = ep_plus[:, :, None] * up[None]
        kq_ref = eq_plus[:, :, None] * up[None]
        kp_f = c[None, :, None] * kp_ref + (s[None, :] * ep_minus)[:, :, None] * un[None]
        kq_f = c[None, :, None] * kq_ref + (s[None, :] * eq_minus)[:, :, None] * un[None]
        out += np.einsum("pza,pzb->pab", kp_f, kq_f.conj())
        out -= np.einsum("pza,pzb->pab", kp_ref, kq_ref.conj())
    return out


def _sigma_sum_loop(lam, kvec, u_pos, u_neg, cos_t, sin_t, phi, tp, xp, tq, xq, inv_sqrt_vol):
    npairs = tp.shape[0]
    nmodes = lam.shape[0]
    out = np.zeros((npairs, 4, 4), dtype=np.complex128)
    kfp = np.empty(4, dtype=np.complex128)
    kfq = np.empty(4, dtype=np.complex128)
    krp = np.empty(4, dtype=np.complex128)
    krq = np.empty(4, dtype=np.complex128)
    for p in range(npairs):
        for z in range(nmodes):
            argp = kvec[z, 0] * xp[p, 0] + kvec[z, 1] * xp[p, 1] + kvec[z, 2] * xp[p, 2]
            argq = kvec[z, 0] * xq[p, 0] + kvec[z, 1] * xq[p, 1] + kvec[z, 2] * xq[p, 2]
            sp = np.exp(1j * argp) * inv_sqrt_vol
            sq = np.exp(1j * argq) * inv_sqrt_vol
            epp = np.exp(-1j * lam[z] * tp[p]) * sp
            epm = np.exp(1j * lam[z] * tp[p]) * sp
            eqp = np.exp(-1j * lam[z] * tq[p]) * sq
            eqm = np.exp(1j * lam[z] * tq[p]) * sq
            c = cos_t[z]
            s = np.exp(-1j * phi[z]) * sin_t[z]
            for a in range(4):
                krp[a] = epp * u_pos[z, a]
                krq[a] = eqp * u_pos[z, a]
                kfp[a] = c * krp[a] + s * epm * u_neg[z, a]
                kfq[a] = c * krq[a] + s * eqm * u_neg[z, a]
            for a in range(4):
                for b in range(4):
                    out[p, a, b] += kfp[a] * np.conj(kfq[b]) - krp[a] * np.conj(krq[b])
    return out


if HAVE_NUMBA:
    bump_cos_integrals_numba = numba.njit(cache=True)(_bump_cos_integrals_loop)
    pwl_fourier_numba = numba.njit(cache=True)(_pwl_fourier_loop)
    sigma_sum_numba = numba.njit(cache=True)(_sigma_sum_loop)
else:  # pragma: no cover
    bump_cos_integrals_numba = None
    pwl_fourier_numba = None
    sigma_sum_numba = None


def bump_cos_integrals(omegas, panels, nodes, weights):
    omegas = np.ascontiguousarray(omegas, dtype=np.float64)
    panels = np.ascontiguousarray(panels, dtype=np.int64)
    if USE_NUMBA:
        return bump_cos_integrals_numba(omegas, panels, nodes, weights)
    return bump_cos_integrals_numpy(omegas, panels, nodes, weights)


def pwl_fourier(omegas, t, y):
    omegas = np.ascontiguousarray(omegas, dtype=np.float64)
    if USE_NUMBA:
        return pwl_fourier_numba(omegas, np.ascontiguousarray(t, dtype=np.float64),
                                 np.ascontiguousarray(y, dtype=np.float64))
    return pwl_fourier_numpy(omegas, t, y)


def sigma_sum(*args):
    args = tuple(np.ascontiguousarray(a) if isinstance(a, np.ndarray) else a for a in args)
    if USE_NUMBA:
        return sigma_sum_numba(*args)
    return sigma_sum_numpy(*args)
