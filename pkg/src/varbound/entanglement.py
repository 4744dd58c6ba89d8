"""Entanglement detection from local variance-sum bounds.

For collective observables M1 = A1 x 1 + 1 x B1 and M2 = A2 x 1 + 1 x B2,
every separable state obeys var M1 + var M2 >= c_A + c_B, the sum of the
single-party optimal constants (variances are concave, so the product-state
bound survives mixing).  Entangled states can dip below that floor, down to
the unrestricted constant c_M of the pair (M1, M2), so a certified gap
c_A + c_B > c_M is a noise-robust entanglement witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .bound_solver import (DEFAULT_EPS, DEFAULT_MAX_STEPS, BoundResult,
                           optimal_bound)
from .errors import ThetaOutOfRange
from .operators import MomentPair, depolarize, scale, sum_observable


def _weighted_pair(mp1: MomentPair, mp2: MomentPair,
                   alpha: float, beta: float) -> tuple[MomentPair, MomentPair]:
    # weight w multiplies the variance, so it enters the moments as sqrt(w)
    if alpha < 0.0 or beta < 0.0:
        raise ValueError(f"weights must be nonnegative, got ({alpha}, {beta})")
    return scale(mp1, math.sqrt(alpha)), scale(mp2, math.sqrt(beta))


def _party_bound(mp1: MomentPair, mp2: MomentPair, alpha: float, beta: float,
                 eps_target: float, max_steps: int) -> BoundResult:
    s1, s2 = _weighted_pair(mp1, mp2, alpha, beta)
    return optimal_bound(s1, s2, eps_target, max_steps)


def _sum_bound(mp_a1: MomentPair, mp_a2: MomentPair,
               mp_b1: MomentPair, mp_b2: MomentPair,
               alpha: float, beta: float,
               eps_target: float, max_steps: int) -> BoundResult:
    m1 = sum_observable(mp_a1, mp_b1)
    m2 = sum_observable(mp_a2, mp_b2)
    s1, s2 = _weighted_pair(m1, m2, alpha, beta)
    return optimal_bound(s1, s2, eps_target, max_steps)


def separable_bound(mp_a1: MomentPair, mp_a2: MomentPair,
                    mp_b1: MomentPair, mp_b2: MomentPair,
                    alpha: float = 1.0, beta: float = 1.0,
                    *, eps_target: float = DEFAULT_EPS,
                    max_steps: int = DEFAULT_MAX_STEPS) -> float:
    """Certified floor of alpha var M1 + beta var M2 over separable states.

    Equals c_A + c_B where c_A bounds the first party's weighted pair
    (mp_a1, mp_a2) and c_B the second party's.  Lower bounds of the two
    solves are summed, so the floor is itself certified.
    """
    res_a = _party_bound(mp_a1, mp_a2, alpha, beta, eps_target, max_steps)
    res_b = _party_bound(mp_b1, mp_b2, alpha, beta, eps_target, max_steps)
    return res_a.c_lower + res_b.c_lower


def global_bound(mp_a1: MomentPair, mp_a2: MomentPair,
                 mp_b1: MomentPair, mp_b2: MomentPair,
                 alpha: float = 1.0, beta: float = 1.0,
                 *, eps_target: float = DEFAULT_EPS,
                 max_steps: int = DEFAULT_MAX_STEPS) -> float:
    """Certified floor of alpha var M1 + beta var M2 over all bipartite states."""
    return _sum_bound(mp_a1, mp_a2, mp_b1, mp_b2, alpha, beta,
                      eps_target, max_steps).c_lower


@dataclass
class WitnessReport:
    """One evaluation of the variance witness.

    c_sep floors the variance sum of separable states, c_global that of all
    states; both are certified lower bounds whose solver gaps are listed per
    sub-solve, so c_global <= c_sep + gaps always holds.  A positive margin
    means some state beats the separable floor by more than the numerics.
    """
    c_sep: float
    c_global: float
    weights: tuple[float, float]
    alpha_noise: tuple[float, float]
    gaps: dict[str, float]
    solves: dict[str, BoundResult] = field(repr=False)

    @property
    def margin(self) -> float:
        """Certified violation: separable floor minus an attained variance sum."""
        return self.c_sep - self.solves["global"].c_upper

    @property
    def detects(self) -> bool:
        return self.margin > 0.0


def evaluate_witness(mp_a1: MomentPair, mp_a2: MomentPair,
                     mp_b1: MomentPair, mp_b2: MomentPair,
                     alpha: float = 1.0, beta: float = 1.0,
                     alpha_noise: tuple[float, float] = (0.0, 0.0),
                     *, eps_target: float = DEFAULT_EPS,
                     max_steps: int = DEFAULT_MAX_STEPS) -> WitnessReport:
    """Separable and global floors after per-side depolarizing noise.

    alpha_noise = (noise on the first party, noise on the second); both
    observables of a side share its level.
    """
    na, nb = alpha_noise
    a1, a2 = depolarize(mp_a1, na), depolarize(mp_a2, na)
    b1, b2 = depolarize(mp_b1, nb), depolarize(mp_b2, nb)
    res_a = _party_bound(a1, a2, alpha, beta, eps_target, max_steps)
    res_b = _party_bound(b1, b2, alpha, beta, eps_target, max_steps)
    res_g = _sum_bound(a1, a2, b1, b2, alpha, beta, eps_target, max_steps)
    solves = {"alice": res_a, "bob": res_b, "global": res_g}
    return WitnessReport(
        c_sep=res_a.c_lower + res_b.c_lower,
        c_global=res_g.c_lower,
        weights=(alpha, beta),
        alpha_noise=(na, nb),
        gaps={k: v.gap for k, v in solves.items()},
        solves=solves)


def noise_sweep(mp_a1: MomentPair, mp_a2: MomentPair,
                mp_b1: MomentPair, mp_b2: MomentPair,
                alphas: Sequence[float],
                *, eps_target: float = DEFAULT_EPS,
                max_steps: int = DEFAULT_MAX_STEPS,
                ) -> list[tuple[float, float, float]]:
    """Equal-weight (alpha, c_sep, c_global) rows over a noise schedule.

    The same depolarizing level is applied to both sides at each point;
    rows follow the input order, ready for plotting.
    """
    rows = []
    for a in alphas:
        rep = evaluate_witness(mp_a1, mp_a2, mp_b1, mp_b2,
                               alpha_noise=(a, a),
                               eps_target=eps_target, max_steps=max_steps)
        rows.append((float(a), rep.c_sep, rep.c_global))
    return rows


class RegionSample(NamedTuple):
    theta: float
    c_lower: float
    c_upper: float
    steps: int
    status: str


def weighted_bound(mp_a: MomentPair, mp_b: MomentPair, theta: float,
                   eps_target: float = DEFAULT_EPS,
                   max_steps: int = DEFAULT_MAX_STEPS) -> BoundResult:
    """Bound on min over states of cos(theta) var_A + sin(theta) var_B.

    theta must lie strictly inside (0, pi/2); the endpoints make one weight
    vanish and the supporting half-plane degenerate.
    """
    if not (0.0 < theta < 0.5 * math.pi):
        raise ThetaOutOfRange(f"theta must be in (0, pi/2), got {theta}")
    sa, sb = _weighted_pair(mp_a, mp_b, math.cos(theta), math.sin(theta))
    return optimal_bound(sa, sb, eps_target, max_steps)


@dataclass
class UncertaintyRegion:
    """Outer approximation of the attainable (var_A, var_B) pairs.

    Each sample certifies the half-plane cos(theta) u + sin(theta) v >=
    c_lower, so the attainable set lies inside their intersection with the
    nonnegative quadrant.  hull lists the corners of that intersection with
    increasing u, starting and ending on the axes.
    """
    samples: list[RegionSample]
    hull: list[tuple[float, float]]

    def boundary_value(self, u: float) -> float:
        """Certified lower edge: no state reaches var_B below this at var_A = u."""
        best = 0.0
        for s in self.samples:
            v = (s.c_lower - u * math.cos(s.theta)) / math.sin(s.theta)
            if v > best:
                best = v
        return best


def _halfplane_corners(planes: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Corners of {(u, v) : u cos t + v sin t >= c for all (t, c)}.

    planes must be sorted by angle with no near-duplicates.  Normal angles
    increase, so the usual convex stack applies: the middle plane of a
    triple is redundant when the corner of the outer two already satisfies
    it.
    """
    def corner(p1: tuple[float, float], p2: tuple[float, float]) -> tuple[float, float]:
        (t1, c1), (t2, c2) = p1, p2
        det = math.cos(t1) * math.sin(t2) - math.cos(t2) * math.sin(t1)
        u = (c1 * math.sin(t2) - c2 * math.sin(t1)) / det
        v = (math.cos(t1) * c2 - math.cos(t2) * c1) / det
        return u, v

    keep: list[tuple[float, float]] = []
    for p in planes:
        while len(keep) >= 2:
            u, v = corner(keep[-2], p)
            if u * math.cos(keep[-1][0]) + v * math.sin(keep[-1][0]) >= keep[-1][1]:
                keep.pop()
            else:
                break
        keep.append(p)
    return [corner(keep[i], keep[i + 1]) for i in range(len(keep) - 1)]


def region_trace(mp_a: MomentPair, mp_b: MomentPair,
                 thetas: Sequence[float],
                 *, eps_target: float = DEFAULT_EPS,
                 max_steps: int = DEFAULT_MAX_STEPS) -> UncertaintyRegion:
    """Trace the lower boundary of the attainable variance region.

    Solves the weighted problem at every angle in thetas (each strictly
    inside (0, pi/2)) and intersects the certified half-planes with the
    nonnegative quadrant.
    """
    samples = []
    for theta in thetas:
        res = weighted_bound(mp_a, mp_b, float(theta), eps_target, max_steps)
        samples.append(RegionSample(float(theta), res.c_lower, res.c_upper,
                                    res.steps, res.status.value))

    by_angle: dict[float, float] = {}
    for s in sorted(samples, key=lambda t: t.theta):
        if by_angle and abs(s.theta - next(reversed(by_angle))) < 1e-12:
            last = next(reversed(by_angle))
            by_angle[last] = max(by_angle[last], s.c_lower)
        else:
            by_angle[s.theta] = s.c_lower
    # the quadrant walls are the limiting half-planes at theta = 0 and pi/2
    planes = [(0.0, 0.0)] + list(by_angle.items()) + [(0.5 * math.pi, 0.0)]
    return UncertaintyRegion(samples=samples, hull=_halfplane_corners(planes))
