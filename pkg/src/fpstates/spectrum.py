"""Spatial Dirac operator spectra and plane-wave eigenspinor bases.

Indices follow the symmetric labelling used throughout the package: positive
indices ``z = 1, 2, ...`` carry the nondecreasing positive branch and
``-z`` carries the mirrored eigenvalue ``-lambda_z``.  Degenerate
eigenvalues on a torus are ordered by lattice vector (lexicographic) and then
by spin index, so indices are reproducible across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptySpectrum,
    IndexOutOfRange,
    InvalidParams,
    MassGapViolation,
    NotSorted,
    SpectrumMismatch,
)

# Dirac representation, signature (+,-,-,-)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
GAMMA0 = np.diag([1, 1, -1, -1]).astype(complex)
GAMMA = tuple(np.block([[np.zeros((2, 2)), s], [-s, np.zeros((2, 2))]]) for s in SIGMA)
GAMMA5 = 1j * GAMMA0 @ GAMMA[0] @ GAMMA[1] @ GAMMA[2]
ALPHA = tuple(GAMMA0 @ g for g in GAMMA)

WEYL_EXPONENT = 21.0 / 2.0


def dirac_symbol(kphys, mass):
    """Fourier symbol ``gamma0 gamma^i k_i + m gamma0`` for one or many momenta.

    ``kphys`` has shape ``(3,)`` or ``(n, 3)``; the result is ``(4, 4)`` or
    ``(n, 4, 4)``.
    """
    k = np.asarray(kphys, dtype=float)
    single = k.ndim == 1
    k = np.atleast_2d(k)
    h = mass * GAMMA0[None] + np.einsum("ni,iab->nab", k, np.array(ALPHA))
    return h[0] if single else h


@dataclass(frozen=True)
class ModelParams:
    mass: float
    lengths: tuple = (2 * math.pi, 2 * math.pi, 2 * math.pi)

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        if len(lengths) != 3:
            raise InvalidParams(f"need three torus side lengths, got {len(lengths)}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "mass", float(self.mass))
        if not self.mass > 0:
            raise InvalidParams(f"mass must be positive, got {self.mass}")
        if any(not v > 0 for v in lengths):
            raise InvalidParams(f"torus lengths must be positive, got {lengths}")

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    def momentum(self, k):
        """Physical momentum ``2 pi k_i / L_i`` for integer lattice vectors."""
        return 2 * np.pi * np.asarray(k, dtype=float) / np.asarray(self.lengths)


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Symmetric eigenvalue list; only the positive branch is stored.

    ``lattice`` and ``spin`` are present for torus spectra and ``None`` for
    synthetic ones.
    """

    mass: float
    positive: np.ndarray
    lattice: np.ndarray | None = None
    spin: np.ndarray | None = None
    params: ModelParams | None = None
    cutoff: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "positive", _frozen(np.asarray(self.positive, dtype=float)))
        if self.lattice is not None:
            object.__setattr__(self, "lattice", _frozen(np.asarray(self.lattice, dtype=np.int64)))
            object.__setattr__(self, "spin", _frozen(np.asarray(self.spin, dtype=np.int8)))

    def __len__(self):
        return self.positive.shape[0]

    @property
    def is_torus(self):
        return self.lattice is not None

    def eigenvalue(self, z):
        z = int(z)
        n = len(self)
        if z == 0 or abs(z) > n:
            raise IndexOutOfRange(f"index {z} outside 1..{n} (and negatives)")
        lam = float(self.positive[abs(z) - 1])
        return lam if z > 0 else -lam

    def indices(self):
        """Positive indices ``1..N`` as an array."""
        return np.arange(1, len(self) + 1)

    def entries(self):
        """All ``(z, lambda_z)`` pairs, negative branch first, in increasing eigenvalue order."""
        n = len(self)
        neg = [(-z, -float(self.positive[z - 1])) for z in range(n, 0, -1)]
        pos = [(z, float(self.positive[z - 1])) for z in range(1, n + 1)]
        return neg + pos

    def truncate(self, cutoff):
        """Keep the modes with ``lambda_z <= cutoff``."""
        n = int(np.searchsorted(self.positive, cutoff, side="right"))
        if n == 0:
            raise EmptySpectrum(f"no eigenvalue below cutoff {cutoff} (mass {self.mass})")
        if self.lattice is None:
            return Spectrum(self.mass, self.positive[:n], cutoff=cutoff)
        return Spectrum(self.mass, self.positive[:n], self.lattice[:n], self.spin[:n],
                        self.params, cutoff)

    def multiplicity_tags(self):
        """``i/n`` labels: position within a degenerate group of size ``n``."""
        lam = self.positive
        tags = []
        start = 0
        while start < lam.size:
            stop = start
            while stop + 1 < lam.size and lam[stop + 1] == lam[start]:
                stop += 1
            size = stop - start + 1
            tags.extend(f"{i + 1}/{size}" for i in range(size))
            start = stop + 1
        return tags


def _lattice_key(params, k):
    """|k_phys|^2 computed so that mathematically equal shells give equal floats."""
    lengths = np.asarray(params.lengths)
    if np.all(lengths == lengths[0]):
        scale = (2 * np.pi / lengths[0]) ** 2
        return scale * np.sum(k * k, axis=1).astype(float)
    terms = np.sort((2 * np.pi * k / lengths) ** 2, axis=1)
    return terms[:, 0] + terms[:, 1] + terms[:, 2]


def torus_spectrum(params, cutoff):
    """All eigenvalues of the flat-torus Dirac operator with ``|lambda| <= cutoff``.

    Each lattice vector contributes two positive modes (spin 0 and 1) and
    their two mirrored partners.  Periodic spin structure only.
    """
    if not isinstance(params, ModelParams):
        raise InvalidParams("params must be a ModelParams")
    m = params.mass
    if cutoff < m:
        raise EmptySpectrum(f"cutoff {cutoff} is inside the mass gap (mass {m})")
    kmax2 = cutoff * cutoff - m * m
    bounds = [int(math.floor(math.sqrt(kmax2) * L / (2 * math.pi))) for L in params.lengths]
    axes = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    k2 = _lattice_key(params, grid)
    lam = np.sqrt(m * m + k2)
    keep = lam <= cutoff
    grid, lam = grid[keep], lam[keep]
    # two spins per lattice vector
    grid = np.repeat(grid, 2, axis=0)
    lam = np.repeat(lam, 2)
    spin = np.tile(np.array([0, 1], dtype=np.int8), lam.size // 2)
    order = np.lexsort((spin, grid[:, 2], grid[:, 1], grid[:, 0], lam))
    return Spectrum(m, lam[order], grid[order], spin[order], params, float(cutoff))


def synthetic_spectrum(mass, positive_branch):
    """Mirrored spectrum from a user-supplied positive branch."""
    if not mass > 0:
        raise InvalidParams(f"mass must be positive, got {mass}")
    values = np.asarray(positive_branch, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise EmptySpectrum("positive branch is empty")
    if np.any(values < mass):
        bad = float(values[values < mass][0])
        raise MassGapViolation(f"eigenvalue {bad} lies inside the mass gap (mass {mass})")
    if np.any(np.diff(values) < 0):
        raise NotSorted("positive branch must be nondecreasing")
    return Spectrum(float(mass), values)


# ---------------------------------------------------------------------------
# Eigenspinors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Eigenspinor:
    k: tuple
    u: np.ndarray
    eigenvalue: float


@dataclass(frozen=True, eq=False)
class EigenspinorBasis:
    """Plane-wave eigenspinors ``chi_z(x) = u_z exp(i k.x) / sqrt(V)``.

    ``u_pos[z-1]`` belongs to ``lambda_z`` and ``u_neg[z-1]`` to its mirrored
    partner ``-lambda_z``; both share the lattice vector ``k[z-1]``.
    """

    params: ModelParams
    spectrum: Spectrum
    k: np.ndarray
    kphys: np.ndarray
    u_pos: np.ndarray
    u_neg: np.ndarray

    def __len__(self):
        return self.k.shape[0]

    def spinor(self, z):
        z = int(z)
        if z == 0 or abs(z) > len(self):
            raise IndexOutOfRange(f"index {z} outside the basis (size {len(self)})")
        i = abs(z) - 1
        u = self.u_pos[i] if z > 0 else self.u_neg[i]
        lam = float(self.spectrum.positive[i])
        return Eigenspinor(tuple(int(v) for v in self.k[i]), u.copy(), lam if z > 0 else -lam)

    def members(self):
        """All basis elements as ``Eigenspinor`` records (positive then negative)."""
        return [self.spinor(z) for z in range(1, len(self) + 1)] + \
               [self.spinor(-z) for z in range(1, len(self) + 1)]

    def residuals(self):
        """Max over each member of ``|H(k) u - lambda u|``, as ``(pos, neg)`` arrays."""
        h = dirac_symbol(self.kphys, self.params.mass)
        lam = np.asarray(self.spectrum.positive[: len(self)])
        rp = np.einsum("nab,nb->na", h, self.u_pos) - lam[:, None] * self.u_pos
        rn = np.einsum("nab,nb->na", h, self.u_neg) + lam[:, None] * self.u_neg
        return np.linalg.norm(rp, axis=1), np.linalg.norm(rn, axis=1)


def positive_spinors(kphys, mass):
    """Closed-form positive-energy spinors for spins 0 and 1; shape ``(n, 2, 4)``."""
    kphys = np.atleast_2d(np.asarray(kphys, dtype=float))
    energy = np.sqrt(mass * mass + np.sum(kphys * kphys, axis=1))
    norm = np.sqrt((energy + mass) / (2 * energy))
    sk = np.einsum("ni,iab->nab", kphys, np.array(SIGMA))   # sigma . k
    out = np.zeros((kphys.shape[0], 2, 4), dtype=complex)
    for s in (0, 1):
        xi = np.zeros(2, dtype=complex)
        xi[s] = 1.0
        out[:, s, :2] = norm[:, None] * xi[None]
        out[:, s, 2:] = norm[:, None] * (sk @ xi) / (energy + mass)[:, None]
    return out


def partner_spinors(u, lam, mass, kphys=None):
    """Mirrored partners of positive spinors ``u`` (shape ``(n, 4)``).

    Uses ``(1 - m^2/lam^2)^{-1/2} (gamma0 - m/lam) u``; at the bottom of the
    mass shell that vector vanishes and ``gamma5 u`` is used instead.  When
    the momenta are known the same vector is formed without cancellation:
    upper components times ``|k|/(lam+m)``, lower ones times ``-(lam+m)/|k|``.
    """
    u = np.asarray(u)
    lam = np.asarray(lam, dtype=float)
    if kphys is not None:
        knorm = np.linalg.norm(np.atleast_2d(kphys), axis=1)
        at_bottom = knorm == 0
        safe = np.where(at_bottom, 1.0, knorm)
        eta = np.empty_like(u)
        eta[:, :2] = u[:, :2] * (safe / (lam + mass))[:, None]
        eta[:, 2:] = -u[:, 2:] * ((lam + mass) / safe)[:, None]
    else:
        ratio = mass / lam
        gap = 1.0 - ratio * ratio
        at_bottom = gap <= 1e-14
        safe = np.where(at_bottom, 1.0, gap)
        eta = (u @ GAMMA0.T - ratio[:, None] * u) / np.sqrt(safe)[:, None]
    eta[at_bottom] = u[at_bottom] @ GAMMA5.T
    return eta


def build_eigenspinor_basis(params, spectrum, n_modes=None):
    """Eigenspinors for the first ``n_modes`` positive indices and their partners."""
    if not spectrum.is_torus or spectrum.params != params:
        raise SpectrumMismatch("spectrum was not produced by torus_spectrum with these params")
    n = len(spectrum) if n_modes is None else int(n_modes)
    if n < 1 or n > len(spectrum):
        raise IndexOutOfRange(f"cannot build {n} modes from a spectrum of size {len(spectrum)}")
    k = np.asarray(spectrum.lattice[:n])
    kphys = params.momentum(k)
    lam = np.asarray(spectrum.positive[:n])
    expected = np.sqrt(params.mass ** 2 + np.sum(kphys * kphys, axis=1))
    if not np.allclose(expected, lam, rtol=1e-12, atol=0):
        raise SpectrumMismatch("spectrum eigenvalues do not match the torus momenta")
    spins = positive_spinors(kphys, params.mass)
    u_pos = spins[np.arange(n), np.asarray(spectrum.spin[:n], dtype=int)]
    u_neg = partner_spinors(u_pos, lam, params.mass, kphys)
    return EigenspinorBasis(params, spectrum, k, kphys, u_pos, u_neg)


def pairing_value(basis, w, z):
    """``<chi_w | gamma0 chi_z>`` evaluated from the stored spinors.

    Distinct lattice vectors give exactly zero (plane-wave orthogonality on
    the torus); otherwise the spinor contraction is returned.
    """
    a = basis.spinor(w)
    b = basis.spinor(z)
    if a.k != b.k:
        return 0j
    return complex(np.vdot(a.u, GAMMA0 @ b.u))


def expected_pairing(mass, lam_w, lam_z, w, z):
    """Closed-form pairing table: ``m/lam_z`` on the diagonal, the partner value on ``w = -z``."""
    if w == z:
        return mass / lam_z
    if w == -z:
        return math.sqrt(max(0.0, 1.0 - mass * mass / (lam_z * lam_z)))
    return 0.0


def pairing_table_deviation(basis):
    """Largest deviation from the closed-form pairing table over all index pairs.

    Pairs with different lattice vectors vanish identically, so only the
    4x4 block of each lattice vector (two spins, both signs) is evaluated.
    Returns ``(max_deviation, n_pairs_checked)``.
    """
    n = len(basis)
    m = basis.params.mass
    lam = np.asarray(basis.spectrum.positive[:n])
    # group the two spin states sharing a lattice vector
    key = {tuple(v): [] for v in basis.k}
    for i, v in enumerate(basis.k):
        key[tuple(v)].append(i)
    worst = 0.0
    checked = 0
    for idx in key.values():
        idx = np.array(idx)
        vecs = np.concatenate([basis.u_pos[idx], basis.u_neg[idx]])
        lams = np.concatenate([lam[idx], -lam[idx]])
        labels = np.concatenate([idx + 1, -(idx + 1)])
        got = vecs.conj() @ GAMMA0 @ vecs.T
        want = np.array([[expected_pairing(m, lams[a], lams[b], labels[a], labels[b])
                          for b in range(len(labels))] for a in range(len(labels))])
        worst = max(worst, float(np.max(np.abs(got - want))))
        checked += len(labels) ** 2
    return worst, checked


# ---------------------------------------------------------------------------
# Counting function and the polynomial counting bound
# ---------------------------------------------------------------------------

def counting_function(spectrum, cutoff):
    """``d(cutoff) = #{z : |lambda_z| <= cutoff}``, counting both signs."""
    return 2 * int(np.searchsorted(spectrum.positive, cutoff, side="right"))


def counting_constant(spectrum, exponent=WEYL_EXPONENT):
    """Smallest ``c`` with ``d(L) <= c L**exponent`` over the stored eigenvalues.

    ``d`` only jumps at eigenvalues, so the supremum over ``L`` is attained
    there.
    """
    lam = np.asarray(spectrum.positive)
    counts = 2 * np.searchsorted(lam, lam, side="right")
    return float(np.max(counts / lam ** exponent))


def check_counting_bound(spectrum, exponent=WEYL_EXPONENT, c=None):
    """Check ``|lambda_z| >= k |z|**(1/exponent)`` with ``k = c**(-1/exponent)``.

    Returns ``(ok, c, k, worst_margin)``; ``worst_margin`` is the minimum of
    ``lambda_z - k z**(1/exponent)`` over stored indices.
    """
    if c is None:
        c = counting_constant(spectrum, exponent)
    k = c ** (-1.0 / exponent)
    z = np.arange(1, len(spectrum) + 1)
    margin = np.asarray(spectrum.positive) - k * z ** (1.0 / exponent)
    worst = float(np.min(margin))
    return worst >= -1e-12 * float(spectrum.positive[-1]), c, k, worst


# ---------------------------------------------------------------------------
# Text serialization
# ---------------------------------------------------------------------------

def format_spectrum(spectrum, header_lines=()):
    """One line per positive-branch entry: ``z lambda multiplicity_tag``."""
    lines = [f"# mass={spectrum.mass!r}"]
    lines += [f"# {h}" for h in header_lines]
    for z, (lam, tag) in enumerate(zip(spectrum.positive, spectrum.multiplicity_tags()), start=1):
        lines.append(f"{z} {float(lam)!r} {tag}")
    return "\n".join(lines) + "\n"


def write_spectrum(spectrum, path, header_lines=()):
    Path(path).write_text(format_spectrum(spectrum, header_lines), encoding="utf-8")


def read_spectrum(path):
    """Read the text format back into a synthetic spectrum."""
    mass = None
    values = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("mass="):
                mass = float(body[len("mass="):])
            continue
        parts = line.split()
        if len(parts) < 2:
            raise InvalidParams(f"{path}:{lineno}: expected 'z lambda [tag]'")
        z = int(parts[0])
        if z != len(values) + 1:
            raise InvalidParams(f"{path}:{lineno}: indices must run 1, 2, ... (got {z})")
        values.append(float(parts[1]))
    if mass is None:
        raise InvalidParams(f"{path}: missing '# mass=<value>' header")
    return synthetic_spectrum(mass, values)
