"""Per-mode 2x2 blocks of A_f, their spectral projectors, and assembled states.

Every positive index ``z`` owns the two-dimensional solution space spanned by
the positive and negative frequency modes ``(kappa+_z, kappa-_z)``.  On it
``A_f`` acts as

    [[fhat(0) m/lam,                     fhat(2 lam) sqrt(1 - m^2/lam^2)],
     [conj(fhat(2 lam)) sqrt(1 - m^2/lam^2), -fhat(0) m/lam             ]]

which is parameterised as ``xi * [[cos 2t, e^{i phi} sin 2t], [.., -cos 2t]]``.
States are stored as flat arrays over ``z``; per-mode objects are produced
on demand through read-only mappings.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BelowMassGap,
    CutoffMismatch,
    EmptySpectrum,
    IndexOutOfRange,
    InvalidParams,
    NonPositiveSoftening,
)
from .softening import SlabConfig, SofteningFunction
from .spectrum import Spectrum, synthetic_spectrum

TWO_PI = 2 * math.pi
# a transform value counts as resolved when it exceeds its error estimate this many times
RESOLUTION_MARGIN = 10.0


@dataclass(frozen=True)
class ModeBlock:
    z: int | None
    lam: float
    xi: float
    theta: float
    phi: float
    matrix: np.ndarray

    @property
    def sin_theta(self):
        return math.sin(self.theta)


@dataclass(frozen=True)
class ProjectorBlock:
    """``Q`` in the ordered basis ``(kappa+_z, kappa-_z)``."""

    z: int | None
    matrix: np.ndarray

    def cosp_view(self):
        """The cospinor block ``1 - dagger Q dagger`` in its own positive-first basis.

        The conjugation map sends the spinor pair ``(kappa+, kappa-)`` to the
        cospinor pair ``(kappa-^dag, kappa+^dag)``; in that ordering the block
        is ``swap(1 - conj(Q))``.
        """
        return _swap(np.eye(2) - self.matrix.conj())


@dataclass(frozen=True)
class ModeVector:
    z: int | None
    alpha: complex
    beta: complex

    @property
    def coefficients(self):
        return np.array([self.alpha, self.beta], dtype=complex)

    def norm(self):
        return math.hypot(abs(self.alpha), abs(self.beta))


def _swap(m):
    return m[..., ::-1, ::-1]


def conjugate_swap(q):
    """``conj(swap(q))`` on one block or a stack of blocks."""
    return _swap(np.asarray(q)).conj()


# ---------------------------------------------------------------------------
# Closed-form block data
# ---------------------------------------------------------------------------

def block_angles(f0, fhat2, lam, mass, err=None):
    """Vectorised ``(xi, theta, phi, diag, off)`` for blocks with the given data.

    ``theta`` comes from ``atan2(|off|, diag) / 2``, which is accurate for
    small angles; ``phi`` is the argument of the off-diagonal entry and is set
    to 0 where that entry vanishes.  Transforms no larger than their error
    estimate ``err`` are treated as exact zeros.
    """
    lam = np.asarray(lam, dtype=float)
    fhat2 = np.asarray(fhat2, dtype=complex)
    if err is not None:
        fhat2 = np.where(np.abs(fhat2) <= err, 0.0, fhat2)
    ratio = mass / lam
    diag = f0 * ratio
    off = fhat2 * np.sqrt(np.maximum(0.0, 1.0 - ratio * ratio))
    mag = np.abs(off)
    xi = np.hypot(mag, diag)
    theta = 0.5 * np.arctan2(mag, diag)
    phi = np.where(mag > 0, np.mod(np.angle(off), TWO_PI), 0.0)
    # mod can return exactly 2 pi for tiny negative angles
    phi = np.where(phi >= TWO_PI, 0.0, phi)
    return xi, theta, phi, diag, off


def _block_matrix(diag, off):
    return np.array([[diag, off], [np.conj(off), -diag]], dtype=complex)


def projector_matrices(theta, phi):
    """Stack of ``[[c^2, e^{i phi} s c], [e^{-i phi} s c, s^2]]``."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    s = np.sin(theta)
    sc = s * c
    q = np.empty(theta.shape + (2, 2), dtype=complex)
    q[..., 0, 0] = c * c
    q[..., 0, 1] = np.exp(1j * np.asarray(phi)) * sc
    q[..., 1, 0] = np.conj(q[..., 0, 1])
    q[..., 1, 1] = s * s
    return q


def mode_block(f, lam, m, z=None, allow_signed=False):
    """The 2x2 block of ``A_f`` at eigenvalue ``lam``."""
    lam = float(lam)
    if lam < m:
        raise BelowMassGap(f"eigenvalue {lam} lies below the mass {m}")
    f0 = f.f0
    if f0 == 0 or (f0 < 0 and not allow_signed):
        raise NonPositiveSoftening(f"fhat(0) = {f0}; a positive weight is required")
    fhat2, err = f.fourier_many(np.array([2 * lam]), with_error=True)
    xi, theta, phi, diag, off = block_angles(f0, fhat2[0], lam, m, err[0])
    return ModeBlock(z, lam, float(xi), float(theta), float(phi), _block_matrix(complex(diag), complex(off)))


def diagonalize_block(block):
    """Unit eigenvectors for ``+xi`` and ``-xi`` as mode coefficient pairs."""
    c, s = math.cos(block.theta), math.sin(block.theta)
    e = complex(math.cos(block.phi), math.sin(block.phi))
    plus = ModeVector(block.z, complex(c), e.conjugate() * s)
    minus = ModeVector(block.z, -e * s, complex(c))
    return plus, minus


def fp_projector_block(block):
    """Spectral projector of the block onto its positive eigenvalue."""
    return ProjectorBlock(block.z, projector_matrices(block.theta, block.phi))


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

class _IndexedView(Mapping):
    """Read-only ``z -> item`` mapping over positive indices ``1..n``."""

    def __init__(self, n, make):
        self._n = n
        self._make = make

    def __getitem__(self, z):
        if not isinstance(z, (int, np.integer)) or not 1 <= z <= self._n:
            raise KeyError(z)
        return self._make(int(z))

    def __iter__(self):
        return iter(range(1, self._n + 1))

    def __len__(self):
        return self._n


@dataclass(frozen=True, eq=False)
class FPState:
    """Mode data of an FP, reference or ceiling state.

    Arrays are indexed by ``z - 1`` and cover every positive index with
    ``lambda_z <= cutoff``.  ``kind`` is ``"fp"``, ``"reference"`` or
    ``"ceiling"``.  ``resolved[i]`` is False where ``fhat(2 lambda)`` is not
    clearly above its error estimate, so the angle there is noise.
    """

    spectrum: Spectrum
    kind: str
    lam: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    cutoff: float
    slab: SlabConfig | None = None
    softening: SofteningFunction | None = None
    softening_descriptor: str = ""
    f0: float | None = None
    anti_hadamard: bool = False
    resolved: np.ndarray | None = None

    def __post_init__(self):
        for name in ("lam", "xi", "theta", "phi"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        res = np.ones(self.lam.shape, dtype=bool) if self.resolved is None else np.array(self.resolved, dtype=bool)
        res.setflags(write=False)
        object.__setattr__(self, "resolved", res)
        if self.softening is not None and not self.softening_descriptor:
            object.__setattr__(self, "softening_descriptor", self.softening.descriptor())

    def __len__(self):
        return self.lam.shape[0]

    @property
    def mass(self):
        return self.spectrum.mass

    @property
    def indices(self):
        return np.arange(1, len(self) + 1)

    def sin_theta(self):
        if self.kind == "ceiling":
            return np.ones(len(self))
        return np.sin(self.theta)

    def projectors(self):
        """``(n, 2, 2)`` array of ``Q_z``."""
        if self.kind == "reference":
            return np.broadcast_to(np.diag([1.0, 0.0]).astype(complex), (len(self), 2, 2)).copy()
        if self.kind == "ceiling":
            return np.broadcast_to(np.diag([0.0, 1.0]).astype(complex), (len(self), 2, 2)).copy()
        return projector_matrices(self.theta, self.phi)

    def _check_z(self, z):
        if not 1 <= z <= len(self):
            raise IndexOutOfRange(f"index {z} outside 1..{len(self)}")

    def projector(self, z):
        self._check_z(z)
        if self.kind in ("reference", "ceiling"):
            return ProjectorBlock(z, self.projectors()[0])
        return ProjectorBlock(z, projector_matrices(self.theta[z - 1], self.phi[z - 1]))

    def mode(self, z):
        self._check_z(z)
        i = z - 1
        t, p, x = float(self.theta[i]), float(self.phi[i]), float(self.xi[i])
        off = x * math.sin(2 * t) * complex(math.cos(p), math.sin(p))
        diag = x * math.cos(2 * t)
        if self.kind == "ceiling":
            diag, off = -x, 0j
        return ModeBlock(z, float(self.lam[i]), x, t, p, _block_matrix(diag, off))

    @property
    def blocks(self):
        return _IndexedView(len(self), self.projector)

    @property
    def mode_data(self):
        return _IndexedView(len(self), self.mode)


def _restrict(spectrum, cutoff):
    if len(spectrum) == 0:
        raise EmptySpectrum("spectrum has no modes")
    if cutoff is None:
        return spectrum, float(spectrum.positive[-1])
    return spectrum.truncate(cutoff), float(cutoff)


def build_fp_state(spectrum, slab, f, cutoff=None, anti_hadamard=False):
    """FP-state data for every positive index with ``lambda_z <= cutoff``.

    With ``anti_hadamard`` a negative weight (``fhat(0) < 0``) is accepted;
    its angles then lie in ``(pi/4, pi/2]`` and the ceiling state is the
    natural comparison.
    """
    if not isinstance(slab, SlabConfig):
        raise InvalidParams("slab must be a SlabConfig")
    s0, s1 = f.support
    if s0 < slab.a or s1 > slab.b:
        raise InvalidParams(f"softening support [{s0}, {s1}] leaves the slab ({slab.a}, {slab.b})")
    spec, cutoff = _restrict(spectrum, cutoff)
    f0 = f.f0
    if f0 == 0 or (f0 < 0 and not anti_hadamard):
        raise NonPositiveSoftening(f"fhat(0) = {f0}; pass anti_hadamard to allow f <= 0")
    if f0 > 0 and anti_hadamard:
        raise NonPositiveSoftening("anti_hadamard construction needs fhat(0) < 0")
    lam = np.asarray(spec.positive)
    uniq, inverse = np.unique(lam, return_inverse=True)
    fhat2, err = f.fourier_many(2 * uniq, with_error=True)
    fhat2, err = fhat2[inverse], err[inverse]
    xi, theta, phi, _, _ = block_angles(f0, fhat2, lam, spec.mass, err)
    resolved = np.abs(fhat2) > RESOLUTION_MARGIN * err
    return FPState(spec, "fp", lam, xi, theta, phi, cutoff, slab, f, f0=f0,
                   anti_hadamard=anti_hadamard, resolved=resolved)


def reference_state(spectrum, cutoff=None):
    """Projection onto positive frequency modes: every block is ``diag(1, 0)``."""
    spec, cutoff = _restrict(spectrum, cutoff)
    n = len(spec)
    return FPState(spec, "reference", spec.positive, np.ones(n), np.zeros(n), np.zeros(n), cutoff)


def ceiling_state(spectrum, cutoff=None):
    """Frequency roles swapped: every block is ``diag(0, 1)``."""
    spec, cutoff = _restrict(spectrum, cutoff)
    n = len(spec)
    return FPState(spec, "ceiling", spec.positive, np.ones(n), np.full(n, math.pi / 2),
                   np.zeros(n), cutoff)


def projector_difference(state, ref):
    """``Q_z(state) - Q_z(ref)`` for all modes, as an ``(n, 2, 2)`` array (row ``z - 1``)."""
    if len(state) != len(ref) or not np.array_equal(state.lam, ref.lam):
        raise CutoffMismatch(f"states cover different modes ({len(state)} vs {len(ref)})")
    return state.projectors() - ref.projectors()


# ---------------------------------------------------------------------------
# Text dump
# ---------------------------------------------------------------------------

def format_state(state, header_lines=()):
    """Text form of a state: ``z lambda xi theta phi`` per mode under a header."""
    lines = [f"# kind={state.kind}", f"# mass={state.mass!r}", f"# cutoff={state.cutoff!r}"]
    if state.slab is not None:
        lines.append(f"# slab={state.slab.a!r},{state.slab.b!r}")
    if state.softening_descriptor:
        lines.append(f"# softening={state.softening_descriptor}")
    lines += [f"# {h}" for h in header_lines]
    lines.append("# z lambda xi theta phi")
    for z, (lam, xi, th, ph) in enumerate(zip(state.lam, state.xi, state.theta, state.phi), start=1):
        lines.append(f"{z} {float(lam)!r} {float(xi)!r} {float(th)!r} {float(ph)!r}")
    return "\n".join(lines) + "\n"


def dump_state(state, path, header_lines=()):
    Path(path).write_text(format_state(state, header_lines), encoding="utf-8")


def load_state(path):
    """Read a dump back; the softening survives only as its descriptor."""
    meta = {}
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta.setdefault(key.strip(), value.strip())
            continue
        parts = line.split()
        if len(parts) != 5:
            raise InvalidParams(f"{path}:{lineno}: expected 'z lambda xi theta phi'")
        if int(parts[0]) != len(rows) + 1:
            raise InvalidParams(f"{path}:{lineno}: indices must run 1, 2, ...")
        rows.append([float(v) for v in parts[1:]])
    if "mass" not in meta:
        raise InvalidParams(f"{path}: missing '# mass=' header")
    if not rows:
        raise EmptySpectrum(f"{path}: no modes")
    data = np.array(rows)
    spec = synthetic_spectrum(float(meta["mass"]), data[:, 0])
    slab = None
    if "slab" in meta:
        a, b = (float(v) for v in meta["slab"].split(","))
        slab = SlabConfig(a, b)
    kind = meta.get("kind", "fp")
    return FPState(spec, kind, data[:, 0], data[:, 1], data[:, 2], data[:, 3],
                   float(meta.get("cutoff", data[-1, 0])), slab,
                   softening_descriptor=meta.get("softening", ""))
