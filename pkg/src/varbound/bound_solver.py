"""Certified lower bounds on the variance sum of two measurements.

The reachable set C of expectation triples (<m1_A>, <m1_B>, <m2_A + m2_B>)
is convex and compact, and the best state-independent constant is the
minimum of mu(x, y, z) = z - x^2 - y^2 over C.  Each direction r yields the
supporting halfspace r . x >= lambda_min(r1 m1_A + r2 m1_B + r3 (m2_A + m2_B)),
so any finite direction set R gives an outer polytope P(R) whose mu-minimal
vertex certifies a lower bound.  The solver refines P(R) by cutting at the
gradient of mu at the current worst vertex; the ground state reached by each
eigenvalue solve supplies a matching upper bound.
"""

from __future__ import annotations

import gc
import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .eigensolver import DEFAULT_TOL as EIG_TOL
from .eigensolver import solve_lowest
from .errors import DimensionMismatch, EmptyPolytope
from .operators import MomentPair
from .polytope import DEFAULT_TOL as CUT_TOL
from .polytope import Polytope3

DEFAULT_EPS = 1e-6
DEFAULT_MAX_STEPS = 5000
_EPS_MACH = float(np.finfo(float).eps)
# width below which a box axis counts as degenerate and gets padded so the
# vertex enumeration stays three-dimensional; padding only enlarges the
# outer approximation, so lower bounds remain valid
_PAD_SCALE = 1e-12


class SolveStatus(Enum):
    CONVERGED = "converged"
    MAX_STEPS_REACHED = "max_steps_reached"
    STALLED_AT_OPTIMUM = "stalled_at_optimum"


class StepRecord(NamedTuple):
    step: int
    vertex_count: int
    c_lower: float
    c_upper: float
    direction: tuple[float, float, float] | None
    vstar: tuple[float, float, float] | None
    vstar_removed: bool


@dataclass
class BoundResult:
    """Outcome of one cutting-plane solve.

    directions holds every (r, h) pair with h the smallest eigenvalue of the
    direction operator, recomputable independently of this run.
    """
    c_lower: float
    c_upper: float
    gap: float
    steps: int
    directions: list[tuple[tuple[float, float, float], float]]
    trace: list[StepRecord]
    status: SolveStatus
    polytope: Polytope3 | None = field(default=None, repr=False)


def _engine(mp_a: MomentPair, mp_b: MomentPair, tol: float):
    """Per-instance closure mapping a direction r to
    (h, h minus a residual allowance, the ground-state expectation triple)."""
    a1 = mp_a.m1.entries
    b1 = mp_b.m1.entries
    k = mp_a.m2.entries + mp_b.m2.entries
    d = a1.shape[0]

    if d == 2:
        a00, a11 = a1[0, 0].real, a1[1, 1].real
        a01r, a01i = a1[0, 1].real, a1[0, 1].imag
        b00, b11 = b1[0, 0].real, b1[1, 1].real
        b01r, b01i = b1[0, 1].real, b1[0, 1].imag
        k00, k11 = k[0, 0].real, k[1, 1].real
        k01r, k01i = k[0, 1].real, k[0, 1].imag
        na = abs(a00) + abs(a11) + 2.0 * math.hypot(a01r, a01i)
        nb = abs(b00) + abs(b11) + 2.0 * math.hypot(b01r, b01i)
        nk = abs(k00) + abs(k11) + 2.0 * math.hypot(k01r, k01i)
        floor = 64.0 * _EPS_MACH
        sqrt = math.sqrt

        def solve2(r0: float, r1: float, r2: float):
            h00 = r0 * a00 + r1 * b00 + r2 * k00
            h11 = r0 * a11 + r1 * b11 + r2 * k11
            h01r = r0 * a01r + r1 * b01r + r2 * k01r
            h01i = r0 * a01i + r1 * b01i + r2 * k01i
            dl = 0.5 * (h00 - h11)
            s = sqrt(dl * dl + h01r * h01r + h01i * h01i)
            lam = 0.5 * (h00 + h11) - s
            slack = floor * (1.0 + abs(r0) * na + abs(r1) * nb + abs(r2) * nk)
            if s <= slack:
                return lam, lam - slack, (a00, b00, k00)
            if dl >= 0.0:
                v0r, v0i = h01r, h01i
                v1r, v1i = lam - h00, 0.0
            else:
                v0r, v0i = lam - h11, 0.0
                v1r, v1i = h01r, -h01i
            q0 = v0r * v0r + v0i * v0i
            q1 = v1r * v1r + v1i * v1i
            n2 = q0 + q1
            p0 = q0 / n2
            p1 = q1 / n2
            crr = (v0r * v1r + v0i * v1i) / n2
            cri = (v0r * v1i - v0i * v1r) / n2
            x = a00 * p0 + a11 * p1 + 2.0 * (a01r * crr - a01i * cri)
            y = b00 * p0 + b11 * p1 + 2.0 * (b01r * crr - b01i * cri)
            z = k00 * p0 + k11 * p1 + 2.0 * (k01r * crr - k01i * cri)
            return lam, lam - slack, (x, y, z)

        return solve2

    def solve_nd(r0: float, r1: float, r2: float):
        h = r0 * a1 + r1 * b1 + r2 * k
        res = solve_lowest(h, tol)
        v = res.vector
        hnorm = float(np.linalg.norm(h))
        slack = res.residual * hnorm + 64.0 * _EPS_MACH * (1.0 + hnorm)
        x = np.vdot(v, a1 @ v).real
        y = np.vdot(v, b1 @ v).real
        z = np.vdot(v, k @ v).real
        return res.value, res.value - slack, (float(x), float(y), float(z))

    return solve_nd


_INIT_DIRS = ((1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0),
              (0.0, -1.0, 0.0), (0.0, 0.0, 1.0), (0.0, 0.0, -1.0))


def optimal_bound(mp_a: MomentPair, mp_b: MomentPair,
                  eps_target: float = DEFAULT_EPS,
                  max_steps: int = DEFAULT_MAX_STEPS,
                  *, eig_tol: float = EIG_TOL,
                  keep_polytope: bool = False) -> BoundResult:
    """Certified two-sided bound on min over states of var_A + var_B.

    Args:
        mp_a, mp_b: moment pairs of the two measurements (same dimension).
        eps_target: stop once c_upper - c_lower <= eps_target.
        max_steps: cap on cutting-plane iterations.
        eig_tol: residual tolerance handed to the eigensolver.
        keep_polytope: attach the final outer polytope to the result.

    Returns:
        BoundResult with c_lower <= c <= c_upper, the full direction
        certificate, and a per-step trace.
    """
    if mp_a.dim != mp_b.dim:
        raise DimensionMismatch(f"dim {mp_a.dim} != dim {mp_b.dim}")
    if not (eps_target > 0.0) or not math.isfinite(eps_target):
        raise ValueError(f"eps_target must be positive, got {eps_target}")
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")

    solve_dir = _engine(mp_a, mp_b, eig_tol)
    directions: list[tuple[tuple[float, float, float], float]] = []
    used = []
    c_up = math.inf
    for r in _INIT_DIRS:
        h_true, h_used, xs = solve_dir(*r)
        directions.append((r, h_true))
        used.append(h_used)
        m = xs[2] - xs[0] * xs[0] - xs[1] * xs[1]
        if m < c_up:
            c_up = m
    lo = [used[0], used[2], used[4]]
    hi = [-used[1], -used[3], -used[5]]
    for axis in range(3):
        pad = _PAD_SCALE * (1.0 + abs(lo[axis]) + abs(hi[axis]))
        if hi[axis] - lo[axis] < pad:
            lo[axis] -= pad
            hi[axis] += pad
    p = Polytope3.box(lo, hi)

    # min-heap over (mu, x, y, z, id) with lazy deletion against the live
    # vertex table; the key's lexicographic order fixes tie-breaking
    live = p._pos
    heap = [(pt[2] - pt[0] * pt[0] - pt[1] * pt[1], pt[0], pt[1], pt[2], vid)
            for vid, pt in p.vertex_items()]
    heapq.heapify(heap)
    push = heapq.heappush
    pop = heapq.heappop
    cut = p._cut_impl
    record = StepRecord

    while heap and heap[0][4] not in live:
        pop(heap)
    if not heap:
        raise EmptyPolytope("no vertices left")
    top = heap[0]
    c_lo = top[0]
    trace = [record(0, len(live), c_lo, c_up, None, None, False)]
    status = SolveStatus.MAX_STEPS_REACHED
    steps = 0
    # nothing below creates reference cycles, while the live heap, trace,
    # and vertex tables keep growing; pausing collection keeps generational
    # scans from rescanning them every few hundred steps
    gc_on = gc.isenabled()
    if gc_on:
        gc.disable()
    try:
        if c_up - c_lo <= eps_target:
            status = SolveStatus.CONVERGED
        else:
            for step in range(1, max_steps + 1):
                steps = step
                mu, x, y, z, vid = top
                rx = -2.0 * x
                ry = -2.0 * y
                h_true, h_used, xs = solve_dir(rx, ry, 1.0)
                mx = xs[2] - xs[0] * xs[0] - xs[1] * xs[1]
                if mx < c_up:
                    c_up = mx
                removed, added = cut(rx, ry, 1.0, h_used, CUT_TOL, vid,
                                     rx * x + ry * y + z - h_used)
                directions.append(((rx, ry, 1.0), h_true))
                for nv, pt in added:
                    push(heap, (pt[2] - pt[0] * pt[0] - pt[1] * pt[1],
                                pt[0], pt[1], pt[2], nv))
                while heap and heap[0][4] not in live:
                    pop(heap)
                if not heap:
                    raise EmptyPolytope("no vertices left")
                top = heap[0]
                c_lo = top[0]
                trace.append(record(step, len(live), c_lo, c_up,
                                    (rx, ry, 1.0), (x, y, z),
                                    vid not in live))
                if c_up - c_lo <= eps_target:
                    status = SolveStatus.CONVERGED
                    break
                if not removed and not added:
                    # tangent no-op cut: the worst vertex lies on the
                    # boundary of C, so its mu value is the optimum
                    # (supporting-plane equality)
                    status = SolveStatus.STALLED_AT_OPTIMUM
                    break
    finally:
        if gc_on:
            gc.enable()

    return BoundResult(
        c_lower=c_lo, c_upper=c_up, gap=c_up - c_lo, steps=steps,
        directions=directions, trace=trace, status=status,
        polytope=p if keep_polytope else None)


def seesaw(mp_a: MomentPair, mp_b: MomentPair,
           a0: float = 0.0, b0: float = 0.0, iters: int = 50,
           *, eig_tol: float = EIG_TOL) -> float:
    """Alternating upper bound on the optimal variance-sum constant.

    Holding offsets (a, b) fixed, the ground state of
    m2_A - 2a m1_A + a^2 + m2_B - 2b m1_B + b^2 minimizes the shifted sum;
    updating (a, b) to that state's first moments never increases the value.
    Returns the variance sum of the final state.
    """
    if mp_a.dim != mp_b.dim:
        raise DimensionMismatch(f"dim {mp_a.dim} != dim {mp_b.dim}")
    if iters < 1:
        raise ValueError("iters must be at least 1")
    a1, a2 = mp_a.m1.entries, mp_a.m2.entries
    b1, b2 = mp_b.m1.entries, mp_b.m2.entries
    eye = np.eye(mp_a.dim)
    a, b = float(a0), float(b0)
    value = math.inf
    for _ in range(iters):
        h = a2 - 2.0 * a * a1 + (a * a) * eye + b2 - 2.0 * b * b1 + (b * b) * eye
        v = solve_lowest(h, eig_tol).vector
        a = float(np.vdot(v, a1 @ v).real)
        b = float(np.vdot(v, b1 @ v).real)
        value = (float(np.vdot(v, a2 @ v).real) - a * a
                 + float(np.vdot(v, b2 @ v).real) - b * b)
    return value


def oracle_grid(mp_a: MomentPair, mp_b: MomentPair, n_grid: int = 201) -> float:
    """Upper bound on the optimal constant from an offset grid.

    Minimizes lambda_min(m2_A - 2a m1_A + a^2 + m2_B - 2b m1_B + b^2) over an
    n_grid x n_grid grid of (a, b) spanning the spectral ranges of the first
    moments.  Independent of the cutting-plane machinery.
    """
    if mp_a.dim != mp_b.dim:
        raise DimensionMismatch(f"dim {mp_a.dim} != dim {mp_b.dim}")
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    a1 = mp_a.m1.entries
    b1 = mp_b.m1.entries
    c = mp_a.m2.entries + mp_b.m2.entries
    d = a1.shape[0]
    wa = np.linalg.eigvalsh(a1)
    wb = np.linalg.eigvalsh(b1)
    avals = np.linspace(float(wa[0]), float(wa[-1]), n_grid)
    bvals = np.linspace(float(wb[0]), float(wb[-1]), n_grid)
    chunk = max(1, int(2_000_000 / (d * d)))
    best = math.inf
    for a in avals:
        base = c - 2.0 * a * a1
        for i in range(0, n_grid, chunk):
            bs = bvals[i:i + chunk]
            mats = base[None, :, :] - 2.0 * bs[:, None, None] * b1[None, :, :]
            w = np.linalg.eigvalsh(mats)[:, 0] + a * a + bs * bs
            m = float(w.min())
            if m < best:
                best = m
    return best


def oracle_grid_error_bound(mp_a: MomentPair, mp_b: MomentPair, n_grid: int) -> float:
    """Worst-case excess of oracle_grid over the true optimum.

    The inner eigenvalue is a minimum over states of quadratics in (a, b)
    with |d/da| = |2(a - <m1_A>)| <= 2 * spread(m1_A) on the grid range, so
    it is Lipschitz and the nearest grid point is off by at most half a
    spacing per axis.
    """
    if n_grid < 2:
        raise ValueError("n_grid must be at least 2")
    wa = np.linalg.eigvalsh(mp_a.m1.entries)
    wb = np.linalg.eigvalsh(mp_b.m1.entries)
    sa = float(wa[-1] - wa[0])
    sb = float(wb[-1] - wb[0])
    return (sa * sa + sb * sb) / (n_grid - 1)
