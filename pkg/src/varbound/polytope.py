"""Bounded convex polytopes in R^3 as halfspace intersections.

The solver maintains an outer approximation of the reachable expectation set
as an intersection of halfspaces r . x >= h and refines it one cut at a time.
Vertices, edges, and vertex/halfspace incidence are updated incrementally:
the set of vertices strictly below a cutting plane is edge-connected, so a
search seeded anywhere inside it touches only the region that changes.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Iterable, NamedTuple

import numpy as np

from .errors import EmptyBox, EmptyPolytope, NumericalFailure

DEFAULT_TOL = 1e-9
VERTEX_MATCH_TOL = 1e-8


class HalfSpace(NamedTuple):
    """Feasible side is r . x >= h; r need not be normalized."""
    r: tuple[float, float, float]
    h: float


def mu_value(point) -> float:
    """Variance-sum functional mu(x, y, z) = z - x^2 - y^2."""
    x, y, z = point
    return z - x * x - y * y


class Polytope3:
    """Vertex/edge/incidence view of a bounded 3D halfspace intersection.

    cut() updates the structure in place and reports what changed; use
    copy() first if the previous geometry must stay reachable.  Vertex ids
    are assigned once and never reused.
    """

    __slots__ = ("halfspaces", "_pos", "_adj", "_inc", "_next_id")

    def __init__(self) -> None:
        # _pos values are (x, y, z, 1 + |v|): the norm factor of the cut
        # tolerance band is fixed per vertex, so it is cached at creation
        self.halfspaces: list[HalfSpace] = []
        self._pos: dict[int, tuple[float, float, float, float]] = {}
        self._adj: dict[int, set[int]] = {}
        self._inc: dict[int, set[int]] = {}
        self._next_id = 0

    # -- construction -----------------------------------------------------

    @classmethod
    def box(cls, lo, hi) -> "Polytope3":
        """Axis-aligned box given per-axis lower and upper bounds."""
        lo = tuple(float(c) for c in lo)
        hi = tuple(float(c) for c in hi)
        if len(lo) != 3 or len(hi) != 3:
            raise EmptyBox("box bounds must have three components")
        for axis in range(3):
            if not (lo[axis] < hi[axis]):
                raise EmptyBox(
                    f"axis {axis}: need lo < hi, got [{lo[axis]}, {hi[axis]}]")
        p = cls()
        p.halfspaces = [
            HalfSpace((1.0, 0.0, 0.0), lo[0]), HalfSpace((-1.0, 0.0, 0.0), -hi[0]),
            HalfSpace((0.0, 1.0, 0.0), lo[1]), HalfSpace((0.0, -1.0, 0.0), -hi[1]),
            HalfSpace((0.0, 0.0, 1.0), lo[2]), HalfSpace((0.0, 0.0, -1.0), -hi[2]),
        ]
        bits = []
        for ix in (0, 1):
            for iy in (0, 1):
                for iz in (0, 1):
                    vid = p._next_id
                    p._next_id += 1
                    x = (lo[0], hi[0])[ix]
                    y = (lo[1], hi[1])[iy]
                    z = (lo[2], hi[2])[iz]
                    p._pos[vid] = (x, y, z, 1.0 + math.sqrt(x * x + y * y + z * z))
                    p._inc[vid] = {ix, 2 + iy, 4 + iz}
                    p._adj[vid] = set()
                    bits.append((vid, ix, iy, iz))
        for i, (v, ix, iy, iz) in enumerate(bits):
            for w, jx, jy, jz in bits[i + 1:]:
                if (ix != jx) + (iy != jy) + (iz != jz) == 1:
                    p._adj[v].add(w)
                    p._adj[w].add(v)
        return p

    def copy(self) -> "Polytope3":
        q = Polytope3()
        q.halfspaces = list(self.halfspaces)
        q._pos = dict(self._pos)
        q._adj = {v: set(a) for v, a in self._adj.items()}
        q._inc = {v: set(s) for v, s in self._inc.items()}
        q._next_id = self._next_id
        return q

    # -- read access ------------------------------------------------------

    @property
    def vertices(self) -> list[tuple[float, float, float]]:
        """Vertex coordinates in id order."""
        return [self._pos[v][:3] for v in sorted(self._pos)]

    @property
    def edges(self) -> list[tuple[int, int]]:
        """Edges as index pairs into the vertices list."""
        order = {v: i for i, v in enumerate(sorted(self._pos))}
        out = []
        for v in sorted(self._adj):
            for w in self._adj[v]:
                if v < w:
                    out.append((order[v], order[w]))
        return out

    @property
    def incidence(self) -> list[list[int]]:
        """Active halfspace indices per vertex, aligned with vertices."""
        return [sorted(self._inc[v]) for v in sorted(self._pos)]

    def vertex_count(self) -> int:
        return len(self._pos)

    def has_vertex(self, vid: int) -> bool:
        return vid in self._pos

    def vertex_items(self) -> Iterable[tuple[int, tuple[float, float, float]]]:
        return [(v, p[:3]) for v, p in self._pos.items()]

    def counts(self) -> tuple[int, int, int]:
        """(V, E, F) with F counting halfspaces active at >= 3 vertices."""
        nv = len(self._pos)
        ne = sum(len(a) for a in self._adj.values()) // 2
        active = [0] * len(self.halfspaces)
        for s in self._inc.values():
            for k in s:
                active[k] += 1
        nf = sum(1 for c in active if c >= 3)
        return nv, ne, nf

    def min_mu_vertex(self) -> tuple[tuple[float, float, float], float]:
        """Vertex minimizing mu, ties broken lexicographically on (x, y, z)."""
        if not self._pos:
            raise EmptyPolytope("polytope has no vertices")
        best = None
        for p in self._pos.values():
            key = (p[2] - p[0] * p[0] - p[1] * p[1], p[0], p[1], p[2])
            if best is None or key < best:
                best = key
        return (best[1], best[2], best[3]), best[0]

    # -- cutting ----------------------------------------------------------

    def cut(self, hs: HalfSpace, tol: float = DEFAULT_TOL, seed: int | None = None):
        """Intersect with hs in place.

        Returns (removed, added), each a list of (vertex id, point).  The
        halfspace is recorded even when the cut removes nothing.  Vertices
        within tol * (1 + |vertex|) * |r| of the plane are retained and
        marked incident instead of being cut.
        """
        r = hs.r
        return self._cut_impl(float(r[0]), float(r[1]), float(r[2]),
                              float(hs.h), tol, seed, None)

    def _cut_impl(self, rx: float, ry: float, rz: float, h: float,
                  tol: float, seed: int | None, seed_val: float | None):
        sqrt = math.sqrt
        rnorm = sqrt(rx * rx + ry * ry + rz * rz)
        if rnorm == 0.0 or not math.isfinite(rnorm) or not math.isfinite(h):
            raise ValueError("halfspace needs a finite nonzero normal")
        pos = self._pos
        adj = self._adj
        inc = self._inc
        if not pos:
            raise EmptyPolytope("polytope has no vertices")
        k = len(self.halfspaces)
        self.halfspaces.append(HalfSpace((rx, ry, rz), h))
        tolr = tol * rnorm

        if seed in pos:
            cur = seed
            p = pos[cur]
            # callers tracking plane values may hand the seed's in; it must
            # round identically to the dot product below
            cv = seed_val if seed_val is not None else (
                rx * p[0] + ry * p[1] + rz * p[2] - h)
        else:
            cur = next(iter(pos))
            p = pos[cur]
            cv = rx * p[0] + ry * p[1] + rz * p[2] - h
        # per-vertex absolute band: tol * |r| * (1 + |vertex|)
        if cv >= -tolr * p[3]:
            # walk downhill in r . x to a vertex of minimal value; a linear
            # functional has no strict local minima on a polytope graph
            while True:
                best, bv = cur, cv
                for n in adj[cur]:
                    q = pos[n]
                    nv = rx * q[0] + ry * q[1] + rz * q[2] - h
                    if nv < bv:
                        best, bv = n, nv
                if best == cur:
                    break
                cur, cv = best, bv
            bcur = tolr * pos[cur][3]
            if cv >= -bcur:
                # tangent or redundant: no vertex is strictly below
                if cv <= bcur:
                    seen = {cur}
                    stack = [cur]
                    while stack:
                        v = stack.pop()
                        inc[v].add(k)
                        for n in adj[v]:
                            if n not in seen:
                                q = pos[n]
                                nv = rx * q[0] + ry * q[1] + rz * q[2] - h
                                if abs(nv) <= tolr * q[3]:
                                    seen.add(n)
                                    stack.append(n)
                return [], []

        # search the connected region val <= band, classifying its frontier;
        # a cached value can only belong to a frontier vertex (in-band
        # neighbors enter seen when first touched), so it never enqueues
        vals: dict[int, float] = {cur: cv}
        seen = {cur}
        stack = [cur]
        below: list[int] = []
        onset: list[int] = []
        crossing: list[tuple[int, int]] = []
        while stack:
            v = stack.pop()
            if vals[v] < -tolr * pos[v][3]:
                is_below = True
                below.append(v)
            else:
                is_below = False
                onset.append(v)
            for n in adj[v]:
                if n in seen:
                    continue
                nv = vals.get(n)
                if nv is None:
                    q = pos[n]
                    nv = rx * q[0] + ry * q[1] + rz * q[2] - h
                    vals[n] = nv
                    if nv <= tolr * q[3]:
                        seen.add(n)
                        stack.append(n)
                        continue
                if is_below:
                    crossing.append((v, n))
        if not below:
            for v in onset:
                inc[v].add(k)
            return [], []
        if len(below) == len(pos):
            raise EmptyPolytope("cut removed every vertex")
        if not crossing and not onset:
            raise NumericalFailure("cut region has no boundary")

        nid = self._next_id
        added: list[tuple[int, tuple[float, float, float]]] = []
        nsets: list[set[int]] = []
        for u, w in crossing:
            vu = vals[u]
            vw = vals[w]
            t = vw / (vw - vu)  # in (0, 1]; exact line-plane intersection
            pu = pos[u]
            pw = pos[w]
            x = pw[0] + t * (pu[0] - pw[0])
            y = pw[1] + t * (pu[1] - pw[1])
            z = pw[2] + t * (pu[2] - pw[2])
            pos[nid] = (x, y, z, 1.0 + sqrt(x * x + y * y + z * z))
            # parent walls only; the cut index joins after face linking so
            # new-vertex adjacency can be read off these sets directly
            s = inc[u] & inc[w]
            inc[nid] = s
            nsets.append(s)
            adj[nid] = {w}
            adj[w].add(nid)
            added.append((nid, (x, y, z)))
            nid += 1
        self._next_id = nid

        removed = []
        for u in below:
            pu = pos[u]
            removed.append((u, (pu[0], pu[1], pu[2])))
            for n in adj[u]:
                adj[n].discard(u)
            del pos[u], adj[u], inc[u]
        for v in onset:
            inc[v].add(k)

        face = [nv for nv, _ in added] + sorted(onset)
        m = len(face)
        if m == 2:
            a, b = face
            adj[a].add(b)
            adj[b].add(a)
        elif m == 3:
            # a triangle has only one cycle, no ordering needed
            a, b, c = face
            adj[a].add(b)
            adj[a].add(c)
            adj[b].add(a)
            adj[b].add(c)
            adj[c].add(a)
            adj[c].add(b)
        elif m == 4 and not onset:
            # adjacency on the new face means sharing a parent wall; four
            # vertices of degree 2 in a simple graph force one 4-cycle, so
            # the edge set alone settles the linking
            fa, fb, fc, fd = face
            ia, ib, ic, id_ = nsets
            eab = not ia.isdisjoint(ib)
            eac = not ia.isdisjoint(ic)
            ead = not ia.isdisjoint(id_)
            ebc = not ib.isdisjoint(ic)
            ebd = not ib.isdisjoint(id_)
            ecd = not ic.isdisjoint(id_)
            if (eab + eac + ead == 2 and eab + ebc + ebd == 2
                    and eac + ebc + ecd == 2 and ead + ebd + ecd == 2):
                if eab:
                    adj[fa].add(fb)
                    adj[fb].add(fa)
                if eac:
                    adj[fa].add(fc)
                    adj[fc].add(fa)
                if ead:
                    adj[fa].add(fd)
                    adj[fd].add(fa)
                if ebc:
                    adj[fb].add(fc)
                    adj[fc].add(fb)
                if ebd:
                    adj[fb].add(fd)
                    adj[fd].add(fb)
                if ecd:
                    adj[fc].add(fd)
                    adj[fd].add(fc)
            else:
                self._link_face_cycle(face, (rx, ry, rz))
        elif m > 3:
            if m > 8 or not self._link_face_pairs(face, k):
                self._link_face_cycle(face, (rx, ry, rz))
        for s in nsets:
            s.add(k)
        return removed, added

    def _link_face_pairs(self, face: list[int], k: int) -> bool:
        """Link a new face combinatorially; False if the pattern is unclear.

        Two vertices of face k are edge-adjacent exactly when they share a
        second halfspace.  Applied only when that rule yields a single
        cycle through all face vertices; degenerate incidence falls back to
        the geometric sort.
        """
        inc = self._inc
        m = len(face)
        links: list[list[int]] = [[] for _ in range(m)]
        for i in range(m - 1):
            si = inc[face[i]]
            for j in range(i + 1, m):
                sj = inc[face[j]]
                for e in si:
                    if e != k and e in sj:
                        links[i].append(j)
                        links[j].append(i)
                        break
        for l in links:
            if len(l) != 2:
                return False
        prev, cur = -1, 0
        count = 1
        while True:
            a, b = links[cur]
            nxt = b if a == prev else a
            if nxt == 0:
                break
            prev, cur = cur, nxt
            count += 1
            if count > m:
                return False
        if count != m:
            return False
        adj = self._adj
        for i in range(m):
            a = face[i]
            sa = adj[a]
            for j in links[i]:
                if j > i:
                    b = face[j]
                    sa.add(b)
                    adj[b].add(a)
        return True

    def _link_face_cycle(self, face: list[int], r) -> None:
        """Connect the vertices of one planar convex face in cyclic order."""
        pos = self._pos
        adj = self._adj
        m = len(face)
        cx = cy = cz = 0.0
        for v in face:
            p = pos[v]
            cx += p[0]
            cy += p[1]
            cz += p[2]
        cx /= m
        cy /= m
        cz /= m
        (ux, uy, uz), (wx, wy, wz) = _plane_basis(r)
        atan2 = math.atan2

        def angle(v):
            p = pos[v]
            dx, dy, dz = p[0] - cx, p[1] - cy, p[2] - cz
            return atan2(dx * wx + dy * wy + dz * wz,
                         dx * ux + dy * uy + dz * uz)
        face.sort(key=angle)
        for i in range(m):
            a = face[i]
            b = face[(i + 1) % m]
            adj[a].add(b)
            adj[b].add(a)

    # -- export -----------------------------------------------------------

    def face_cycles(self) -> list[tuple[int, list[int]]]:
        """(halfspace index, cyclic vertex ids) for each face with >= 3 vertices."""
        members: dict[int, list[int]] = {}
        for v in sorted(self._pos):
            for k in self._inc[v]:
                members.setdefault(k, []).append(v)
        pos = self._pos
        out = []
        for k in sorted(members):
            vs = members[k]
            if len(vs) < 3:
                continue
            r = self.halfspaces[k].r
            m = len(vs)
            cx = sum(pos[v][0] for v in vs) / m
            cy = sum(pos[v][1] for v in vs) / m
            cz = sum(pos[v][2] for v in vs) / m
            u1, u2 = _plane_basis(r)
            def angle(v):
                p = pos[v]
                dx, dy, dz = p[0] - cx, p[1] - cy, p[2] - cz
                return math.atan2(dx * u2[0] + dy * u2[1] + dz * u2[2],
                                  dx * u1[0] + dy * u1[1] + dz * u1[2])
            vs = sorted(vs, key=angle)
            # orient outward: r is the inward normal, so the cycle seen from
            # outside (along -r) must run counterclockwise
            vs.reverse()
            out.append((k, vs))
        return out

    def to_off(self) -> str:
        """OFF mesh of the current polytope (vertices and oriented faces)."""
        order = {v: i for i, v in enumerate(sorted(self._pos))}
        faces = self.face_cycles()
        lines = ["OFF", f"{len(order)} {len(faces)} {sum(len(a) for a in self._adj.values()) // 2}"]
        for v in sorted(self._pos):
            p = self._pos[v]
            lines.append(f"{p[0]!r} {p[1]!r} {p[2]!r}")
        for _, cyc in faces:
            lines.append(" ".join([str(len(cyc))] + [str(order[v]) for v in cyc]))
        return "\n".join(lines) + "\n"


def _plane_basis(r) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """Orthonormal basis of the plane orthogonal to r."""
    rx, ry, rz = r
    ax, ay, az = abs(rx), abs(ry), abs(rz)
    if ax <= ay and ax <= az:
        a = (1.0, 0.0, 0.0)
    elif ay <= az:
        a = (0.0, 1.0, 0.0)
    else:
        a = (0.0, 0.0, 1.0)
    ux = a[1] * rz - a[2] * ry
    uy = a[2] * rx - a[0] * rz
    uz = a[0] * ry - a[1] * rx
    n1 = math.sqrt(ux * ux + uy * uy + uz * uz)
    ux, uy, uz = ux / n1, uy / n1, uz / n1
    wx = ry * uz - rz * uy
    wy = rz * ux - rx * uz
    wz = rx * uy - ry * ux
    n2 = math.sqrt(wx * wx + wy * wy + wz * wz)
    return (ux, uy, uz), (wx / n2, wy / n2, wz / n2)


# -- module-level operation names ----------------------------------------

def init_box(lo, hi) -> Polytope3:
    """Bounding box polytope; errors EmptyBox on degenerate or inverted bounds."""
    return Polytope3.box(lo, hi)


def cut(p: Polytope3, hs: HalfSpace, tol: float = DEFAULT_TOL):
    """Add one halfspace. Returns (p, removed points, added points).

    The input polytope is updated in place and returned; take p.copy()
    beforehand if the uncut geometry is still needed.
    """
    removed, added = p.cut(hs, tol)
    return p, [pt for _, pt in removed], [pt for _, pt in added]


def min_mu_vertex(p: Polytope3) -> tuple[tuple[float, float, float], float]:
    """Vertex minimizing mu(x, y, z) = z - x^2 - y^2 with lexicographic ties."""
    return p.min_mu_vertex()


def vertices_from_halfspaces(halfspaces, tol: float = DEFAULT_TOL) -> list[tuple[float, float, float]]:
    """Brute-force vertex enumeration: all triple-plane intersections that
    satisfy every halfspace, deduplicated.  Reference oracle for cut()."""
    hs = [HalfSpace((float(r[0]), float(r[1]), float(r[2])), float(h))
          for r, h in halfspaces]
    m = len(hs)
    if m < 3:
        return []
    normals = np.array([h.r for h in hs])
    offsets = np.array([h.h for h in hs])
    rnorms = np.linalg.norm(normals, axis=1)
    trip = np.array(list(combinations(range(m), 3)))
    mats = normals[trip]
    dets = np.abs(np.linalg.det(mats))
    scale = rnorms[trip].prod(axis=1)
    ok = dets > 1e-12 * np.maximum(scale, 1e-30)
    if not ok.any():
        return []
    sols = np.linalg.solve(mats[ok], offsets[trip[ok]][:, :, None])[:, :, 0]
    slack = tol * (1.0 + np.linalg.norm(sols, axis=1))[:, None] * rnorms[None, :]
    feas = (sols @ normals.T - offsets[None, :]) >= -slack
    pts = sols[feas.all(axis=1)]
    out: list[tuple[float, float, float]] = []
    for p in pts[np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))]:
        q = (float(p[0]), float(p[1]), float(p[2]))
        match = False
        for r in reversed(out):
            if (abs(q[0] - r[0]) <= VERTEX_MATCH_TOL
                    and abs(q[1] - r[1]) <= VERTEX_MATCH_TOL
                    and abs(q[2] - r[2]) <= VERTEX_MATCH_TOL):
                match = True
                break
            if q[0] - r[0] > VERTEX_MATCH_TOL:
                break
        if not match:
            out.append(q)
    return out
