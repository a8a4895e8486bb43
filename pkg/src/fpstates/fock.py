"""Brute-force fermionic Fock space on a handful of modes.

Each selected positive index ``z`` contributes a particle mode ``b_z`` and an
antiparticle mode ``d_z``; with ``n`` indices the space has dimension
``4**n``.  Ladder operators come from the Jordan-Wigner construction in the
order ``(b_z1, d_z1, b_z2, d_z2, ...)`` and the state's vacuum is the Fock
vacuum, so everything here is built without reference to the projector
formulas it is meant to check.

Smearings are given in mode space.  A spinor test function ``u`` enters
through ``x_u[z] = (<kappa+_z, u>, <kappa-_z, u>)`` and a cospinor ``v``
through ``y_v[z] = (v kappa+_z, v kappa-_z)``; both are stacked as length
``2n`` vectors.  The fields are

    Psi[v]    = sum_z (k+_f . y_v) b_z + (k-_f . y_v) d_z^dag
    Psi^+[u]  = sum_z conj(k+_f) . x_u b_z^dag + conj(k-_f) . x_u d_z

where ``k+-_f`` are the coefficient pairs of the rotated modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .errors import IndexOutOfRange, ModeMismatch, TooManyModes
from .fpstate import conjugate_swap, projector_matrices

MAX_MODES = 6

_LOWER = sparse.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))  # |0><1|
_PARITY = sparse.csr_matrix(np.diag([1.0, -1.0]))
_ID2 = sparse.identity(2, format="csr")


def jordan_wigner(n_sites):
    """Annihilators ``c_0 .. c_{n-1}`` on ``2**n_sites`` dimensions."""
    ops = []
    for j in range(n_sites):
        factors = [_PARITY] * j + [_LOWER] + [_ID2] * (n_sites - j - 1)
        op = factors[0]
        for f in factors[1:]:
            op = sparse.kron(op, f, format="csr")
        ops.append(op.astype(complex).tocsr())
    return ops


@dataclass(frozen=True, eq=False)
class FockOracle:
    modes: tuple
    lam: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    b: tuple
    d: tuple
    vacuum: np.ndarray

    @property
    def n_modes(self):
        return len(self.modes)

    @property
    def dim(self):
        return self.vacuum.shape[0]

    def rotated_modes(self):
        """Coefficient pairs of ``kappa+_f`` and ``kappa-_f`` per mode, shape ``(n, 2, 2)``."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        e = np.exp(1j * self.phi)
        out = np.empty((self.n_modes, 2, 2), dtype=complex)
        out[:, 0] = np.stack([c, e.conj() * s], axis=1)
        out[:, 1] = np.stack([-e * s, c + 0j], axis=1)
        return out

    def ladder(self):
        """All ladder annihilators in Jordan-Wigner order."""
        return [op for pair in zip(self.b, self.d) for op in pair]

    def field(self, y, gauge=0.0):
        """``Psi[v]`` for mode coefficients ``y`` (length ``2n``)."""
        y = self._coeffs(y)
        rot = self.rotated_modes()
        phase = complex(math.cos(gauge), math.sin(gauge))
        op = sparse.csr_matrix((self.dim, self.dim), dtype=complex)
        for j in range(self.n_modes):
            yz = y[2 * j:2 * j + 2]
            op = op + (rot[j, 0] @ yz) * phase * self.b[j] \
                    + (rot[j, 1] @ yz) * phase * self.d[j].conj().T
        return op.tocsr()

    def field_adjoint(self, x, gauge=0.0):
        """``Psi^+[u]`` for mode coefficients ``x`` (length ``2n``)."""
        x = self._coeffs(x)
        rot = self.rotated_modes()
        phase = complex(math.cos(gauge), -math.sin(gauge))
        op = sparse.csr_matrix((self.dim, self.dim), dtype=complex)
        for j in range(self.n_modes):
            xz = x[2 * j:2 * j + 2]
            op = op + (rot[j, 0].conj() @ xz) * phase * self.b[j].conj().T \
                    + (rot[j, 1].conj() @ xz) * phase * self.d[j]
        return op.tocsr()

    def _coeffs(self, v):
        v = np.asarray(v, dtype=complex).ravel()
        if v.size != 2 * self.n_modes:
            raise ModeMismatch(f"expected {2 * self.n_modes} mode coefficients, got {v.size}")
        return v

    def expectation(self, op):
        return complex(np.vdot(self.vacuum, op @ self.vacuum))


def build_fock(state, mode_indices):
    """Oracle for the listed positive indices of ``state`` (at most six)."""
    modes = tuple(int(z) for z in mode_indices)
    if len(modes) > MAX_MODES:
        raise TooManyModes(f"{len(modes)} modes requested; the oracle supports at most {MAX_MODES}")
    if not modes:
        raise ModeMismatch("at least one mode is required")
    if len(set(modes)) != len(modes):
        raise ModeMismatch("mode indices must be distinct")
    for z in modes:
        if not 1 <= z <= len(state):
            raise IndexOutOfRange(f"index {z} outside 1..{len(state)}")
    idx = np.array(modes) - 1
    theta = np.array(state.theta[idx], dtype=float)
    if state.kind == "ceiling":
        theta = np.full(len(modes), math.pi / 2)
    ops = jordan_wigner(2 * len(modes))
    vacuum = np.zeros(4 ** len(modes), dtype=complex)
    vacuum[0] = 1.0
    return FockOracle(modes, np.array(state.lam[idx]), theta, np.array(state.phi[idx]),
                      tuple(ops[0::2]), tuple(ops[1::2]), vacuum)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def car_residual(oracle):
    """Largest deviation from the canonical anticommutation relations."""
    ladder = oracle.ladder()
    ident = sparse.identity(oracle.dim, dtype=complex, format="csr")
    worst = 0.0
    for i, a in enumerate(ladder):
        for j, c in enumerate(ladder):
            anti_dag = a @ c.conj().T + c.conj().T @ a
            if i == j:
                anti_dag = anti_dag - ident
            anti = a @ c + c @ a
            for m in (anti_dag, anti):
                if m.nnz:
                    worst = max(worst, float(np.max(np.abs(m.data))))
    return worst


def vacuum_residual(oracle):
    """``max |c Omega|`` over all annihilators."""
    return max(float(np.linalg.norm(a @ oracle.vacuum)) for a in oracle.ladder())


def block_projectors(oracle):
    """``Q_z`` for the oracle's modes from the stored angles."""
    return projector_matrices(oracle.theta, oracle.phi)


def block_two_point(q_blocks, x_u, y_v, x_u2, y_v2):
    """``y_v^T Q x_u' + y_v'^T (1 - Q) x_u`` summed over blocks.

    ``1 - Q`` is written as the conjugate swap of the cospinor block, which
    is how the doubled projector reaches the second ordering.
    """
    total = 0j
    for j, q in enumerate(q_blocks):
        sl = slice(2 * j, 2 * j + 2)
        cosp = np.eye(2) - q.conj()
        cosp = cosp[::-1, ::-1]
        total += y_v[sl] @ q @ x_u2[sl] + y_v2[sl] @ conjugate_swap(cosp) @ x_u[sl]
    return total


def _basis(n):
    return np.eye(2 * n, dtype=complex)


def _smeared(oracle, vectors, gauge):
    """``(Psi^+[e], Psi[e])`` for each coefficient vector ``e``."""
    return [(oracle.field_adjoint(e, gauge), oracle.field(e, gauge)) for e in vectors]


def two_point_check(oracle, state=None, smearings=None, gauge=0.0):
    """Max deviation between oracle matrix elements and the block formula.

    ``smearings`` is an iterable of ``(x_u, y_v, x_u', y_v')`` tuples; by
    default the exhaustive product of basis vectors is used.  The oracle
    side evaluates the full ``<Omega|(Psi^+[u] + Psi[v])(Psi^+[u'] + Psi[v'])Omega>``
    so any gauge-violating pieces would show up as deviations.
    """
    if state is not None:
        _check_modes(oracle, state)
    n = oracle.n_modes
    q = block_projectors(oracle) if state is None else state.projectors()[np.array(oracle.modes) - 1]
    omega = oracle.vacuum
    worst = 0.0
    if smearings is None:
        basis = _basis(n)
        fields = _smeared(oracle, basis, gauge)
        # F(u, v) Omega and F(u, v)^dag Omega decompose linearly over u and v
        right = {}
        for i, (pa, pf) in enumerate(fields):
            right[("a", i)] = pa @ omega
            right[("f", i)] = pf @ omega
        left = {}
        for i, (pa, pf) in enumerate(fields):
            left[("a", i)] = pa.conj().T @ omega
            left[("f", i)] = pf.conj().T @ omega
        m = 2 * n
        for iu in range(m):
            for iv in range(m):
                lvec = left[("a", iu)] + left[("f", iv)]
                for iu2 in range(m):
                    for iv2 in range(m):
                        rvec = right[("a", iu2)] + right[("f", iv2)]
                        got = np.vdot(lvec, rvec)
                        want = block_two_point(q, basis[iu], basis[iv], basis[iu2], basis[iv2])
                        worst = max(worst, abs(got - want))
        return float(worst)
    for x_u, y_v, x_u2, y_v2 in smearings:
        f1 = oracle.field_adjoint(x_u, gauge) + oracle.field(y_v, gauge)
        f2 = oracle.field_adjoint(x_u2, gauge) + oracle.field(y_v2, gauge)
        got = np.vdot(f1.conj().T @ omega, f2 @ omega)
        want = block_two_point(q, *(np.asarray(v, dtype=complex) for v in (x_u, y_v, x_u2, y_v2)))
        worst = max(worst, abs(got - want))
    return float(worst)


def smeared_car_residual(oracle, smearings=None):
    """``{Psi[v], Psi^+[u]} - (y_v . x_u) 1`` over basis (or given) smearings."""
    n = oracle.n_modes
    pairs = smearings
    if pairs is None:
        basis = _basis(n)
        pairs = [(basis[i], basis[j]) for i in range(2 * n) for j in range(2 * n)]
    ident = sparse.identity(oracle.dim, dtype=complex, format="csr")
    worst = 0.0
    for x_u, y_v in pairs:
        pa = oracle.field_adjoint(x_u)
        pf = oracle.field(y_v)
        m = pf @ pa + pa @ pf - (np.asarray(y_v) @ np.asarray(x_u)) * ident
        if m.nnz:
            worst = max(worst, float(np.max(np.abs(m.data))))
    return worst


@dataclass(frozen=True)
class PurityGaugeReport:
    idempotence: float
    hermiticity: float
    doubling: float
    gauge: dict
    trace: float
    purity: float

    def ok(self, tol=1e-12):
        return (max(self.idempotence, self.hermiticity, self.doubling,
                    max(self.gauge.values(), default=0.0)) < tol
                and abs(self.trace - 1) < tol and abs(self.purity - 1) < tol)


def purity_gauge_check(oracle, state=None, alphas=(0.0, math.pi / 3, 1.234)):
    """Projector laws, the doubling identity, gauge invariance and vacuum purity."""
    q = block_projectors(oracle) if state is None else state.projectors()[np.array(oracle.modes) - 1]
    if state is not None:
        _check_modes(oracle, state)
    idem = float(np.max(np.abs(q @ q - q)))
    herm = float(np.max(np.abs(q - np.conj(np.swapaxes(q, -1, -2)))))
    cosp = np.eye(2) - q.conj()
    cosp = cosp[..., ::-1, ::-1]
    doubling = float(np.max(np.abs(q + conjugate_swap(cosp) - np.eye(2))))
    base = _two_point_table(oracle, 0.0)
    gauge = {float(a): float(np.max(np.abs(_two_point_table(oracle, a) - base))) for a in alphas}
    rho = np.outer(oracle.vacuum, oracle.vacuum.conj())
    return PurityGaugeReport(idem, herm, doubling, gauge, float(np.trace(rho).real),
                             float(np.trace(rho @ rho).real))


def _two_point_table(oracle, gauge):
    """All ``<Omega| X_i Y_j |Omega>`` with ``X, Y`` ranging over smeared basis fields."""
    omega = oracle.vacuum
    ops = []
    for e in _basis(oracle.n_modes):
        ops.append(oracle.field_adjoint(e, gauge))
        ops.append(oracle.field(e, gauge))
    left = np.array([op.conj().T @ omega for op in ops])
    right = np.array([op @ omega for op in ops])
    return left.conj() @ right.T


def _check_modes(oracle, state):
    idx = np.array(oracle.modes) - 1
    if np.any(idx >= len(state)) or not np.array_equal(state.lam[idx], oracle.lam):
        raise ModeMismatch("oracle modes do not belong to this state")


def energy_operator(oracle, p):
    """Truncated ``rho^(p)(h x 1)`` with ``hhat(0) = 1``, before normal ordering.

    Writing the field in the reference modes as ``kappa+ A_z + kappa- B_z``
    with ``A_z = a+_1 b_z + a-_1 d_z^dag`` and ``B_z = a+_2 b_z + a-_2 d_z^dag``,
    ``n = 2p - 1`` time derivatives give the weights
    ``(i/2)((-i lam)^n - (i lam)^n)`` on ``A^dag A`` and the opposite on
    ``B^dag B``.
    """
    if p < 1:
        raise ValueError("p must be positive")
    n = 2 * p - 1
    rot = oracle.rotated_modes()
    op = sparse.csr_matrix((oracle.dim, oracle.dim), dtype=complex)
    for j in range(oracle.n_modes):
        lam = oracle.lam[j]
        w_plus = 0.5j * ((-1j * lam) ** n - (1j * lam) ** n)
        w_minus = -w_plus
        b, d_dag = oracle.b[j], oracle.d[j].conj().T
        a_op = rot[j, 0, 0] * b + rot[j, 1, 0] * d_dag
        b_op = rot[j, 0, 1] * b + rot[j, 1, 1] * d_dag
        op = op + w_plus * (a_op.conj().T @ a_op) + w_minus * (b_op.conj().T @ b_op)
    return op.tocsr()


def energy_fluctuation_oracle(oracle, p):
    """``|| :rho^(p): Omega ||^2`` and ``<Omega| :rho^(p): |Omega>``.

    Normal ordering relative to the vacuum of a quadratic operator is the
    subtraction of its vacuum expectation value.
    """
    op = energy_operator(oracle, p)
    vev = oracle.expectation(op)
    vec = op @ oracle.vacuum - vev * oracle.vacuum
    normal_vev = complex(np.vdot(oracle.vacuum, vec))
    return float(np.vdot(vec, vec).real), normal_vev


def analytic_fluctuation(oracle, p):
    """``sum lam^(4p-2) sin^2 2 theta`` over the oracle's modes."""
    return float(np.sum(oracle.lam ** (4 * p - 2) * np.sin(2 * oracle.theta) ** 2))
