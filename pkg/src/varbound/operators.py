"""Measurements and their moment operators.

A measurement enters the solver only through its first and second moment
operators (m1, m2): for a projective observable A these are A and A^2, for a
POVM with outcomes a_i and effects E_i they are sum_i a_i E_i and
sum_i a_i^2 E_i.  Everything downstream (bounds, witnesses, regions) is
expressed in terms of MomentPair values.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    InvalidPovm,
    InvalidSpin,
    NotHermitian,
    NotSquare,
)

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10


class HermitianOperator:
    """Hermitian matrix on a finite-dimensional Hilbert space.

    Entries are validated against the hermiticity tolerance (relative to the
    largest entry), symmetrized via (M + M^dagger)/2, and frozen.
    """

    __slots__ = ("dim", "entries")

    def __init__(self, entries) -> None:
        mat = np.array(entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise NotSquare(f"expected a square matrix, got shape {mat.shape}")
        if mat.shape[0] < 1:
            raise NotSquare("dimension must be at least 1")
        scale = max(1.0, float(np.abs(mat).max()))
        asym = float(np.abs(mat - mat.conj().T).max())
        if asym > HERMITICITY_TOL * scale:
            raise NotHermitian(
                f"asymmetry {asym:.3e} exceeds {HERMITICITY_TOL:.0e} * {scale:.3e}")
        mat = (mat + mat.conj().T) / 2
        mat.setflags(write=False)
        object.__setattr__(self, "dim", mat.shape[0])
        object.__setattr__(self, "entries", mat)

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOperator is immutable")

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


def hermitian_from_matrix(entries) -> HermitianOperator:
    """Validate, symmetrize, and wrap a raw matrix."""
    return HermitianOperator(entries)


def spin_component(s: float, phi: float) -> HermitianOperator:
    """Spin component cos(phi) L_z + sin(phi) L_x for spin quantum number s.

    Basis is |s, m> with m = s, s-1, ..., -s, so L_z = diag(s, ..., -s) and
    L_x is built from the standard ladder operators.
    """
    twice = 2 * s
    if not math.isfinite(twice) or abs(twice - round(twice)) > 1e-9 or s < 0:
        raise InvalidSpin(f"s must be a nonnegative half-integer, got {s}")
    d = int(round(twice)) + 1
    m = s - np.arange(d)
    lz = np.diag(m).astype(complex)
    # L+ |s,m> = sqrt(s(s+1) - m(m+1)) |s,m+1>; column m feeds row m+1
    mm = m[1:]
    lplus = np.zeros((d, d), dtype=complex)
    lplus[np.arange(d - 1), np.arange(1, d)] = np.sqrt(s * (s + 1) - mm * (mm + 1))
    lx = (lplus + lplus.conj().T) / 2
    return HermitianOperator(math.cos(phi) * lz + math.sin(phi) * lx)


class Povm:
    """Discrete POVM: real outcomes a_i with effects E_i >= 0 summing to 1."""

    __slots__ = ("outcomes", "effects", "dim")

    def __init__(self, outcomes, effects) -> None:
        outs = [float(a) for a in outcomes]
        effs = [e if isinstance(e, HermitianOperator) else HermitianOperator(e)
                for e in effects]
        if len(outs) == 0:
            raise InvalidPovm("POVM needs at least one outcome")
        if len(outs) != len(effs):
            raise InvalidPovm(
                f"{len(outs)} outcomes but {len(effs)} effects")
        d = effs[0].dim
        for e in effs:
            if e.dim != d:
                raise DimensionMismatch("POVM effects have mixed dimensions")
            low = float(np.linalg.eigvalsh(e.entries)[0])
            if low < -PSD_TOL:
                raise InvalidPovm(f"effect has eigenvalue {low:.3e} < -{PSD_TOL:.0e}")
        total = sum(e.entries for e in effs)
        if float(np.abs(total - np.eye(d)).max()) > COMPLETENESS_TOL:
            raise InvalidPovm("effects do not sum to the identity")
        object.__setattr__(self, "outcomes", tuple(outs))
        object.__setattr__(self, "effects", tuple(effs))
        object.__setattr__(self, "dim", d)

    def __setattr__(self, name, value):
        raise AttributeError("Povm is immutable")

    def __repr__(self) -> str:
        return f"Povm(dim={self.dim}, n_outcomes={len(self.outcomes)})"


class MomentPair:
    """First and second moment operators of one measurement."""

    __slots__ = ("m1", "m2")

    def __init__(self, m1, m2) -> None:
        a = m1 if isinstance(m1, HermitianOperator) else HermitianOperator(m1)
        b = m2 if isinstance(m2, HermitianOperator) else HermitianOperator(m2)
        if a.dim != b.dim:
            raise DimensionMismatch(f"m1 dim {a.dim} != m2 dim {b.dim}")
        object.__setattr__(self, "m1", a)
        object.__setattr__(self, "m2", b)

    @property
    def dim(self) -> int:
        return self.m1.dim

    def __setattr__(self, name, value):
        raise AttributeError("MomentPair is immutable")

    def __repr__(self) -> str:
        return f"MomentPair(dim={self.dim})"


def moment_pair_from_observable(a: HermitianOperator) -> MomentPair:
    """Moments of a projective measurement of the observable a: (A, A^2)."""
    if not isinstance(a, HermitianOperator):
        a = HermitianOperator(a)
    return MomentPair(a, HermitianOperator(a.entries @ a.entries))


def moment_pair_from_povm(p: Povm) -> MomentPair:
    """Moments sum_i a_i^n E_i of a POVM, n = 1, 2."""
    d = p.dim
    m1 = np.zeros((d, d), dtype=complex)
    m2 = np.zeros((d, d), dtype=complex)
    for a, e in zip(p.outcomes, p.effects):
        m1 += a * e.entries
        m2 += (a * a) * e.entries
    return MomentPair(HermitianOperator(m1), HermitianOperator(m2))


def depolarize(mp: MomentPair, alpha: float) -> MomentPair:
    """Moments seen after depolarizing noise of strength alpha.

    Each moment operator M maps to (1 - alpha) M + alpha tr(M)/d * 1, the
    Heisenberg picture of mixing the state with the maximally mixed one.
    """
    if not (0.0 <= alpha <= 1.0):
        raise AlphaOutOfRange(f"alpha must lie in [0, 1], got {alpha}")
    d = mp.dim
    eye = np.eye(d)

    def dep(m):
        return (1.0 - alpha) * m.entries + alpha * (np.trace(m.entries).real / d) * eye

    return MomentPair(HermitianOperator(dep(mp.m1)), HermitianOperator(dep(mp.m2)))


def sum_observable(mp_a: MomentPair, mp_b: MomentPair) -> MomentPair:
    """Moments of the sum of two measurements on a bipartite system.

    With the first factor acting on the left tensor slot:
    M1 = A1 x 1 + 1 x B1 and M2 = A2 x 1 + 2 A1 x B1 + 1 x B2.
    """
    a1, a2 = mp_a.m1.entries, mp_a.m2.entries
    b1, b2 = mp_b.m1.entries, mp_b.m2.entries
    eye_a = np.eye(mp_a.dim)
    eye_b = np.eye(mp_b.dim)
    m1 = np.kron(a1, eye_b) + np.kron(eye_a, b1)
    m2 = np.kron(a2, eye_b) + 2.0 * np.kron(a1, b1) + np.kron(eye_a, b2)
    return MomentPair(HermitianOperator(m1), HermitianOperator(m2))


def scale(mp: MomentPair, mu: float) -> MomentPair:
    """Moments after rescaling every outcome by mu: (mu m1, mu^2 m2)."""
    mu = float(mu)
    if not math.isfinite(mu):
        raise ValueError(f"scale factor must be finite, got {mu}")
    return MomentPair(HermitianOperator(mu * mp.m1.entries),
                      HermitianOperator(mu * mu * mp.m2.entries))


def build_H(mp_a: MomentPair, mp_b: MomentPair, r) -> HermitianOperator:
    """Direction operator r1 m1_A + r2 m1_B + r3 (m2_A + m2_B).

    Its smallest eigenvalue is the supporting offset of the expectation set
    in direction r.
    """
    if mp_a.dim != mp_b.dim:
        raise DimensionMismatch(f"dim {mp_a.dim} != dim {mp_b.dim}")
    r0, r1, r2 = (float(c) for c in r)
    if not (math.isfinite(r0) and math.isfinite(r1) and math.isfinite(r2)):
        raise ValueError("direction entries must be finite")
    mat = (r0 * mp_a.m1.entries + r1 * mp_b.m1.entries
           + r2 * (mp_a.m2.entries + mp_b.m2.entries))
    return HermitianOperator(mat)
