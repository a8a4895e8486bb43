"""Softening weights and their Fourier transforms.

The transform convention is ``fhat(lam) = int f(t) exp(+i lam t) dt``.  The
indicator has a closed form, the smooth bump is integrated by composite
Gauss-Legendre quadrature with panels no wider than ``pi / |lam|``, and
tabulated weights are integrated exactly as piecewise-linear interpolants.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _accel
from .errors import InvalidInterval, InvalidParams, QuadratureFailure

_GL_ORDER = 16
# int_0^1 exp(-1/(1-x^2)) dx
_BUMP_MASS = 0.22199690808403972


@dataclass(frozen=True)
class SlabConfig:
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not self.a < self.b:
            raise InvalidInterval(f"slab needs a < b, got ({self.a}, {self.b})")

    @property
    def duration(self):
        return self.b - self.a

    def contains(self, t):
        return self.a < t < self.b


@dataclass(frozen=True, eq=False)
class SofteningFunction:
    """A nonnegative integrable weight ``f`` with bounded support.

    Build instances with :func:`indicator`, :func:`bump` or
    :func:`tabulated`.  ``scale`` multiplies the base profile; negative
    scales are only reachable through :meth:`scaled` with
    ``allow_signed=True``.
    """

    kind: str
    support: tuple
    shape: dict
    scale: float = 1.0
    tol: float = 1e-10
    max_panels: int = 1 << 18
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    # -- evaluation -------------------------------------------------------
    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "indicator":
            a, b = self.support
            val = ((t > a) & (t < b)).astype(float)
        elif self.kind == "bump":
            x = (t - self.shape["center"]) / self.shape["halfwidth"]
            val = _accel._bump_profile(np.atleast_1d(x)).reshape(x.shape)
        else:
            val = np.interp(t, self.shape["t"], self.shape["y"], left=0.0, right=0.0)
        return self.scale * val

    @property
    def f0(self):
        """``fhat(0)``, the integral of ``f``."""
        return float(self.fourier_at(0.0).real)

    def fourier_at(self, lam):
        return complex(self.fourier_many(np.array([float(lam)]))[0])

    def fourier_many(self, lams, with_error=False):
        """Transform at many points; results are cached per exact ``lam``.

        With ``with_error`` an array of absolute error estimates is returned
        as well (quadrature disagreement or accumulated rounding).
        """
        lams = np.asarray(lams, dtype=float)
        uniq, inverse = np.unique(lams.ravel(), return_inverse=True)
        keys = uniq.tolist()
        with self._lock:
            known = {v: self._cache[v] for v in keys if v in self._cache}
        missing = np.array([v for v in keys if v not in known], dtype=float)
        if missing.size:
            values, errors = self._compute(missing)
            with self._lock:
                for v, fv, ev in zip(missing.tolist(), values.tolist(), errors.tolist()):
                    self._cache[v] = known[v] = (fv, ev)
        pairs = [known[v] for v in keys]
        out = np.array([fv for fv, _ in pairs], dtype=complex)[inverse].reshape(lams.shape)
        if not with_error:
            return out
        err = np.array([ev for _, ev in pairs], dtype=float)[inverse].reshape(lams.shape)
        return out, err

    def _compute(self, lams):
        eps = np.finfo(float).eps
        if self.kind == "indicator":
            a, b = self.support
            half = 0.5 * lams * (b - a)
            safe = np.where(half == 0, 1.0, half)
            sinc = np.where(half == 0, 1.0, np.sin(safe) / safe)
            vals = self.scale * (b - a) * np.exp(0.5j * lams * (a + b)) * sinc
            # sin of a large argument carries an absolute error ~ eps * |argument|
            err = 4 * eps * abs(self.scale) * (b - a) * (1 + np.abs(half) * np.abs(sinc)) \
                + 4 * eps * np.abs(vals)
            return vals, err
        if self.kind == "bump":
            c = self.shape["center"]
            h = self.shape["halfwidth"]
            factor = 2 * h * abs(self.scale)
            integral, diff = _adaptive_bump(np.abs(lams) * h, self.tol / factor, self.max_panels)
            # the accepted estimate is the finer one; the disagreement bounds
            # the coarser, and rounding of a positive-weight sum adds ~eps*f0
            err = factor * (diff + 16 * eps * _BUMP_MASS)
            return self.scale * 2 * h * np.exp(1j * lams * c) * integral, err
        t, y = self.shape["t"], self.shape["y"]
        vals = self.scale * _accel.pwl_fourier(lams, t, y)
        mass = abs(self.scale) * float(np.sum(np.diff(t) * 0.5 * (y[1:] + y[:-1])))
        err = 16 * eps * mass * math.sqrt(t.size) * (1 + np.abs(lams) * (t[-1] - t[0]) / t.size)
        return vals, err

    # -- derived objects ------------------------------------------------------
    def scaled(self, factor, allow_signed=False):
        """The same profile multiplied by ``factor`` (fresh cache)."""
        if factor == 0 or (factor < 0 and not allow_signed):
            raise InvalidParams("scale factor must be positive (pass allow_signed for f <= 0)")
        return SofteningFunction(self.kind, self.support, dict(self.shape),
                                 self.scale * float(factor), self.tol, self.max_panels)

    def descriptor(self):
        if self.kind == "indicator":
            text = f"indicator(a={self.support[0]!r},b={self.support[1]!r})"
        elif self.kind == "bump":
            text = f"bump(center={self.shape['center']!r},halfwidth={self.shape['halfwidth']!r})"
        else:
            text = f"tabulated(n={len(self.shape['t'])},support=[{self.support[0]!r},{self.support[1]!r}])"
        if self.scale != 1.0:
            text += f"*{self.scale!r}"
        return text


def _adaptive_bump(omegas, tol, max_panels):
    """``int_0^1 exp(-1/(1-x^2)) cos(w x) dx`` for each ``w`` to absolute ``tol``.

    Panel counts start at ``max(8, ceil(w / pi))`` and double until two
    successive estimates agree.  Returns the finer estimates and the final
    disagreements.
    """
    nodes, weights = np.polynomial.legendre.leggauss(_GL_ORDER)
    omegas = np.asarray(omegas, dtype=float)
    panels = np.maximum(8, np.ceil(omegas / math.pi)).astype(np.int64)
    coarse = _accel.bump_cos_integrals(omegas, panels, nodes, weights)
    result = np.empty_like(coarse)
    diff = np.empty_like(coarse)
    pending = np.arange(omegas.size)
    while pending.size:
        panels[pending] *= 2
        if np.any(panels[pending] > max_panels):
            bad = float(omegas[pending][panels[pending] > max_panels][0])
            raise QuadratureFailure(f"bump transform at omega={bad} did not reach tol={tol}")
        fine = _accel.bump_cos_integrals(omegas[pending], panels[pending], nodes, weights)
        gap = np.abs(fine - coarse[pending])
        done = gap <= tol
        result[pending[done]] = fine[done]
        diff[pending[done]] = gap[done]
        coarse[pending] = fine
        pending = pending[~done]
    return result, diff


def indicator(a, b):
    """Characteristic function of ``(a, b)`` (the unsoftened weight)."""
    a, b = float(a), float(b)
    if not a < b:
        raise InvalidInterval(f"indicator needs a < b, got ({a}, {b})")
    return SofteningFunction("indicator", (a, b), {})


def bump(center, halfwidth, tol=1e-10):
    """``exp(-1/(1 - ((t-center)/halfwidth)^2))`` on its open support, 0 outside."""
    if not halfwidth > 0:
        raise InvalidParams(f"halfwidth must be positive, got {halfwidth}")
    center, halfwidth = float(center), float(halfwidth)
    return SofteningFunction("bump", (center - halfwidth, center + halfwidth),
                             {"center": center, "halfwidth": halfwidth}, tol=float(tol))


def tabulated(t, y):
    """Linear interpolation through samples, zero outside ``[t[0], t[-1]]``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape or t.size < 2:
        raise InvalidParams("tabulated weight needs matching 1-d arrays with at least two samples")
    if np.any(np.diff(t) <= 0):
        raise InvalidParams("sample times must be strictly increasing")
    if np.any(y < 0):
        raise InvalidParams("softening samples must be nonnegative")
    if not np.any(y > 0):
        raise InvalidParams("softening weight is identically zero")
    t.setflags(write=False)
    y.setflags(write=False)
    return SofteningFunction("tabulated", (float(t[0]), float(t[-1])), {"t": t, "y": y})


def read_tabulated(path):
    """Read lines ``t f(t)`` (``#`` comments allowed)."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidParams(f"{path}:{lineno}: expected 't f(t)'")
        rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise InvalidParams(f"{path}: no samples")
    data = np.array(rows)
    return tabulated(data[:, 0], data[:, 1])


def fourier_at(f, lam):
    """``fhat(lam) = int f(t) exp(i lam t) dt``."""
    return f.fourier_at(lam)


def from_descriptor(kind, params):
    """Build a softening function from CLI-style ``kind`` and parameter list/path."""
    if kind == "indicator":
        a, b = (float(v) for v in params)
        return indicator(a, b)
    if kind == "bump":
        center, halfwidth = (float(v) for v in params)
        return bump(center, halfwidth)
    if kind in ("file", "tabulated"):
        (path,) = params
        return read_tabulated(path)
    raise InvalidParams(f"unknown softening kind {kind!r}")
