"""Lowest eigenpairs and expectation values of moment operators."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NotNormalized, NumericalFailure
from .operators import HermitianOperator, MomentPair

DEFAULT_TOL = 1e-11
DENSE_DIM_LIMIT = 512
NORM_TOL = 1e-10
IMAG_TOL = 1e-10


class EigenResult(NamedTuple):
    value: float
    vector: np.ndarray
    residual: float  # ||H v - value v|| relative to ||H||_F


class ExpectationTriple(NamedTuple):
    x: float
    y: float
    z: float

    @property
    def mu(self) -> float:
        """Variance-sum functional z - x^2 - y^2 at this point."""
        return self.z - self.x * self.x - self.y * self.y


def lowest_eigenpair(h: HermitianOperator, tol: float = DEFAULT_TOL) -> EigenResult:
    """Smallest eigenvalue and a unit eigenvector of a Hermitian operator.

    Dense diagonalization up to DENSE_DIM_LIMIT, a Krylov solve with a
    deterministic start vector above it, falling back to dense if the
    iteration stalls.  The returned residual is checked against tol.
    """
    mat = h.entries if isinstance(h, HermitianOperator) else HermitianOperator(h).entries
    return solve_lowest(mat, tol)


def solve_lowest(mat: np.ndarray, tol: float = DEFAULT_TOL) -> EigenResult:
    """lowest_eigenpair on a raw ndarray already known to be Hermitian."""
    d = mat.shape[0]
    if d == 1:
        v = np.ones(1, dtype=complex)
        return EigenResult(float(mat[0, 0].real), v, 0.0)
    if d == 2:
        lam, v0, v1 = _lowest_2x2(mat[0, 0].real, mat[0, 1], mat[1, 1].real)
        vec = np.array([v0, v1], dtype=complex)
        return _checked(mat, lam, vec, tol)
    if d <= DENSE_DIM_LIMIT:
        w, vecs = np.linalg.eigh(mat)
        return _checked(mat, float(w[0]), np.ascontiguousarray(vecs[:, 0]), tol)
    try:
        lam, vec = _iterative_lowest(mat, tol)
        return _checked(mat, lam, vec, tol)
    except (ConvergenceFailure, NumericalFailure):
        w, vecs = np.linalg.eigh(mat)
        return _checked(mat, float(w[0]), np.ascontiguousarray(vecs[:, 0]), tol)


def _lowest_2x2(a: float, b: complex, c: float) -> tuple[float, complex, complex]:
    """Closed-form lowest eigenpair of [[a, b], [conj(b), c]]."""
    half = 0.5 * (a + c)
    dl = 0.5 * (a - c)
    b2 = (b.real * b.real + b.imag * b.imag)
    s = math.sqrt(dl * dl + b2)
    lam = half - s
    if s <= 1e-18 * (abs(a) + abs(c) + 1.0):
        return lam, 1.0 + 0.0j, 0.0j
    # (b, lam - a) and (lam - c, conj(b)) both solve (H - lam) v = 0;
    # pick the better conditioned one.
    if dl >= 0.0:
        v0, v1 = b, complex(lam - a)
    else:
        v0, v1 = complex(lam - c), b.conjugate()
    n = math.sqrt(v0.real ** 2 + v0.imag ** 2 + v1.real ** 2 + v1.imag ** 2)
    if n == 0.0:
        return lam, 1.0 + 0.0j, 0.0j
    return lam, v0 / n, v1 / n


def _iterative_lowest(mat: np.ndarray, tol: float) -> tuple[float, np.ndarray]:
    from scipy.sparse.linalg import ArpackNoConvergence, eigsh

    d = mat.shape[0]
    v0 = np.full(d, 1.0 / math.sqrt(d))
    try:
        w, vecs = eigsh(mat, k=1, which="SA", v0=v0, tol=tol)
    except ArpackNoConvergence as exc:
        raise ConvergenceFailure("Krylov iteration did not converge") from exc
    return float(w[0]), np.ascontiguousarray(vecs[:, 0])


def _checked(mat: np.ndarray, lam: float, vec: np.ndarray, tol: float) -> EigenResult:
    hnorm = float(np.linalg.norm(mat))
    res = float(np.linalg.norm(mat @ vec - lam * vec))
    rel = res / hnorm if hnorm > 0.0 else res
    if rel > tol:
        raise NumericalFailure(
            f"eigenpair residual {rel:.3e} exceeds tol {tol:.0e}")
    return EigenResult(lam, vec, rel)


def expectation_triple(mp_a: MomentPair, mp_b: MomentPair, psi: np.ndarray) -> ExpectationTriple:
    """Point (<m1_A>, <m1_B>, <m2_A + m2_B>) of the state psi."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] != mp_a.dim or mp_a.dim != mp_b.dim:
        raise DimensionMismatch(
            f"state length {psi.shape} does not match dims {mp_a.dim}, {mp_b.dim}")
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > NORM_TOL:
        raise NotNormalized(f"state norm {nrm} differs from 1 beyond {NORM_TOL:.0e}")
    x = np.vdot(psi, mp_a.m1.entries @ psi)
    y = np.vdot(psi, mp_b.m1.entries @ psi)
    z = np.vdot(psi, (mp_a.m2.entries + mp_b.m2.entries) @ psi)
    worst = max(abs(x.imag), abs(y.imag), abs(z.imag))
    if worst > IMAG_TOL:
        raise NumericalFailure(f"imaginary part {worst:.3e} exceeds {IMAG_TOL:.0e}")
    return ExpectationTriple(float(x.real), float(y.real), float(z.real))
