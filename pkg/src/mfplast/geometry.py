"""Planar computational domains with uniform boundary discretization.

Two domain shapes are supported: a quarter annulus restricted to the first
quadrant (the pressurized-cylinder benchmark) and an axis-aligned rectangle
(used by patch tests).  Either shape may be pierced by circular cut-outs;
cut-outs intersecting the walls trim the corresponding boundary arcs into
composite boundary curves.

All lengths are millimetres.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TAG_INNER = "inner-pressure"
TAG_OUTER = "outer-free"
TAG_SYM_X = "symmetry-x"  # x = 0 edge: u_x constrained, tangential traction free
TAG_SYM_Y = "symmetry-y"  # y = 0 edge: u_y constrained, tangential traction free
TAG_CUTOUT = "cutout-free"

_TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Invalid domain description or boundary discretization request."""


@dataclass(frozen=True)
class Cutout:
    """Circular cut-out removed from the domain.

    A pressurized cut-out belongs to the pressurized cavity surface and its
    boundary nodes carry the inner-pressure tag.
    """

    center: tuple[float, float]
    radius: float
    pressurized: bool = False

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError("cut-out radius must be positive")

    @property
    def tag(self) -> str:
        return TAG_INNER if self.pressurized else TAG_CUTOUT


@dataclass(frozen=True)
class QuarterAnnulus:
    """Quarter of an annulus a < r < b in the first quadrant."""

    a: float
    b: float
    cutouts: tuple[Cutout, ...] = ()

    def __post_init__(self):
        if not (self.a > 0 and self.b > self.a):
            raise GeometryError(f"need 0 < a < b, got a={self.a}, b={self.b}")

    @property
    def scale(self) -> float:
        return self.b

    def area(self) -> float:
        return 0.25 * math.pi * (self.b**2 - self.a**2)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        # relative pad keeps exact boundary samples out despite roundoff
        pad = 1e-12
        ok = (
            (pts[:, 0] > 0)
            & (pts[:, 1] > 0)
            & (r2 > self.a**2 * (1 + pad))
            & (r2 < self.b**2 * (1 - pad))
        )
        return ok & _outside_cutouts(pts, self.cutouts)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [x0, x1] x [y0, y1].

    Edge tags are (bottom, right, top, left); each edge owns its starting
    corner walking counterclockwise.
    """

    x0: float
    y0: float
    x1: float
    y1: float
    cutouts: tuple[Cutout, ...] = ()
    edge_tags: tuple[str, str, str, str] = ("bottom", "right", "top", "left")

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError("rectangle must have positive extent")

    @property
    def scale(self) -> float:
        return max(self.x1 - self.x0, self.y1 - self.y0)

    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = (
            (pts[:, 0] > self.x0)
            & (pts[:, 0] < self.x1)
            & (pts[:, 1] > self.y0)
            & (pts[:, 1] < self.y1)
        )
        return ok & _outside_cutouts(pts, self.cutouts)


Domain = QuarterAnnulus | Rectangle


@dataclass(frozen=True)
class BoundaryNode:
    """A boundary sample: position, outward unit normal and BC tag."""

    position: np.ndarray
    normal: np.ndarray
    tag: str


def contains(domain: Domain, p) -> bool:
    """True iff p lies strictly inside the domain (outside all cut-outs)."""
    return bool(domain.contains(np.asarray(p, dtype=float))[0])


def contains_mask(domain: Domain, pts: np.ndarray) -> np.ndarray:
    """Vectorized strict-interior test for an (M, 2) array of points."""
    return domain.contains(pts)


def _outside_cutouts(pts: np.ndarray, cutouts) -> np.ndarray:
    ok = np.ones(len(pts), dtype=bool)
    for c in cutouts:
        dx = pts[:, 0] - c.center[0]
        dy = pts[:, 1] - c.center[1]
        ok &= dx * dx + dy * dy > c.radius**2 * (1 + 1e-12)
    return ok


# ---------------------------------------------------------------------------
# Boundary pieces
# ---------------------------------------------------------------------------


@dataclass
class _Piece:
    """One parametrized boundary curve, parametrized by arc length t in [0, L].

    Endpoint policies: "node" places a node at the endpoint (this piece owns
    the corner), "shared" spaces nodes as if the endpoint node existed but
    leaves it to the owning piece, "trim" keeps a half-spacing margin (cut-out
    trim points carry no unique normal and get no node).
    """

    name: str
    tag: str
    length: float
    closed: bool = False
    start_policy: str = "node"
    end_policy: str = "node"

    def point(self, t: np.ndarray) -> np.ndarray:  # (m,) -> (m, 2)
        raise NotImplementedError

    def normal(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def split_params(self, domain: Domain) -> list[float]:
        """Arc-length values where the piece may enter/leave the domain boundary."""
        raise NotImplementedError

    def keep_midpoint(self, domain: Domain, q: np.ndarray) -> bool:
        """Whether the sub-piece whose midpoint is q belongs to the boundary."""
        raise NotImplementedError


@dataclass
class _Segment(_Piece):
    p0: np.ndarray = field(default=None)
    p1: np.ndarray = field(default=None)
    n: np.ndarray = field(default=None)
    # corner nodes owned by this edge may carry the adjoining arc's normal so
    # their traction row can impose the arc condition (the essential row of
    # the edge needs no normal)
    corner_normals: dict = field(default_factory=dict)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        u = (self.p1 - self.p0) / self.length
        return self.p0[None, :] + t[:, None] * u[None, :]

    def normal(self, t):
        t = np.asarray(t, dtype=float)
        out = np.broadcast_to(self.n, (t.size, 2)).copy()
        for t_corner, n_corner in self.corner_normals.items():
            out[np.abs(t - t_corner) <= 1e-12 * max(self.length, 1.0)] = n_corner
        return out

    def split_params(self, domain):
        u = (self.p1 - self.p0) / self.length
        out = []
        for c in domain.cutouts:
            w = self.p0 - np.asarray(c.center, dtype=float)
            # |w + t u|^2 = R^2
            bq = 2.0 * float(w @ u)
            cq = float(w @ w) - c.radius**2
            disc = bq * bq - 4.0 * cq
            if disc <= 0:
                continue
            sq = math.sqrt(disc)
            for t in ((-bq - sq) / 2.0, (-bq + sq) / 2.0):
                if 1e-12 * self.length < t < self.length * (1 - 1e-12):
                    out.append(t)
        return out

    def keep_midpoint(self, domain, q):
        return bool(_outside_cutouts(q[None, :], domain.cutouts)[0])


@dataclass
class _OriginArc(_Piece):
    """Arc of the circle r = radius centered at the origin, theta0 -> theta1."""

    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0
    outward: bool = True  # normal points away from the origin

    def _theta(self, t):
        return self.theta0 + np.asarray(t, dtype=float) / self.radius

    def point(self, t):
        th = self._theta(t)
        return self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def normal(self, t):
        th = self._theta(t)
        n = np.stack([np.cos(th), np.sin(th)], axis=-1)
        return n if self.outward else -n

    def split_params(self, domain):
        out = []
        for c in domain.cutouts:
            cc = np.asarray(c.center, dtype=float)
            d = float(np.hypot(*cc))
            if d == 0.0:
                continue
            q = (self.radius**2 + d * d - c.radius**2) / (2.0 * self.radius * d)
            if abs(q) >= 1.0:
                continue
            phi = math.atan2(cc[1], cc[0])
            da = math.acos(q)
            for th in (phi - da, phi + da):
                t = (th - self.theta0) * self.radius
                if 1e-12 * self.length < t < self.length * (1 - 1e-12):
                    out.append(t)
        return out

    def keep_midpoint(self, domain, q):
        return bool(_outside_cutouts(q[None, :], domain.cutouts)[0])


@dataclass
class _CutoutArc(_Piece):
    """Full circle of a cut-out; kept sub-arcs are the domain-facing parts."""

    center: np.ndarray = field(default=None)
    radius: float = 0.0
    index: int = 0  # position in domain.cutouts

    def _psi(self, t):
        return np.asarray(t, dtype=float) / self.radius

    def point(self, t):
        ps = self._psi(t)
        return self.center[None, :] + self.radius * np.stack(
            [np.cos(ps), np.sin(ps)], axis=-1
        )

    def normal(self, t):
        ps = self._psi(t)
        # outward from the material = toward the cut-out center
        return -np.stack([np.cos(ps), np.sin(ps)], axis=-1)

    def _angle_splits(self, cos_val, phi):
        if abs(cos_val) >= 1.0:
            return []
        da = math.acos(cos_val)
        return [phi - da, phi + da]

    def split_params(self, domain):
        angles = []
        cc = self.center
        d0 = float(np.hypot(*cc))
        if isinstance(domain, QuarterAnnulus):
            for rho in (domain.a, domain.b):
                if d0 > 0:
                    q = (rho**2 - d0 * d0 - self.radius**2) / (2.0 * self.radius * d0)
                    angles += self._angle_splits(q, math.atan2(cc[1], cc[0]))
            # sector edges x = 0 and y = 0
            for val, comp in ((cc[0], 0), (cc[1], 1)):
                q = -val / self.radius
                if abs(q) < 1.0:
                    base = math.acos(q) if comp == 0 else math.asin(q)
                    if comp == 0:
                        angles += [base, -base]
                    else:
                        angles += [base, math.pi - base]
        else:
            for val, comp in (
                (domain.x0 - cc[0], 0),
                (domain.x1 - cc[0], 0),
                (domain.y0 - cc[1], 1),
                (domain.y1 - cc[1], 1),
            ):
                q = val / self.radius
                if abs(q) < 1.0:
                    if comp == 0:
                        base = math.acos(q)
                        angles += [base, -base]
                    else:
                        base = math.asin(q)
                        angles += [base, math.pi - base]
        for j, other in enumerate(domain.cutouts):
            if j == self.index:
                continue
            oc = np.asarray(other.center, dtype=float)
            dd = float(np.hypot(*(cc - oc)))
            if dd == 0:
                continue
            q = (other.radius**2 - dd * dd - self.radius**2) / (2.0 * self.radius * dd)
            angles += self._angle_splits(q, math.atan2(oc[1] - cc[1], oc[0] - cc[0]))
        return [(a % _TWO_PI) * self.radius for a in angles]

    def keep_midpoint(self, domain, q):
        # strictly inside the base shape (ignoring this cut-out), outside others
        others = tuple(
            c for j, c in enumerate(domain.cutouts) if j != self.index
        )
        if isinstance(domain, QuarterAnnulus):
            r2 = q[0] ** 2 + q[1] ** 2
            base = q[0] > 0 and q[1] > 0 and domain.a**2 < r2 < domain.b**2
        else:
            base = domain.x0 < q[0] < domain.x1 and domain.y0 < q[1] < domain.y1
        return bool(base) and bool(_outside_cutouts(q[None, :], others)[0])


def _base_pieces(domain: Domain) -> list[_Piece]:
    if isinstance(domain, QuarterAnnulus):
        a, b = domain.a, domain.b
        # sector corners are owned by the essential (symmetry) edges but carry
        # the arc normal for their traction component
        pieces: list[_Piece] = [
            _Segment(
                "edge-bottom", TAG_SYM_Y, b - a,
                p0=np.array([a, 0.0]), p1=np.array([b, 0.0]), n=np.array([0.0, -1.0]),
                corner_normals={0.0: np.array([-1.0, 0.0]), b - a: np.array([1.0, 0.0])},
            ),
            _Segment(
                "edge-left", TAG_SYM_X, b - a,
                p0=np.array([0.0, a]), p1=np.array([0.0, b]), n=np.array([-1.0, 0.0]),
                corner_normals={0.0: np.array([0.0, -1.0]), b - a: np.array([0.0, 1.0])},
            ),
            _OriginArc(
                "arc-inner", TAG_INNER, 0.5 * math.pi * a,
                start_policy="shared", end_policy="shared",
                radius=a, theta0=0.0, theta1=0.5 * math.pi, outward=False,
            ),
            _OriginArc(
                "arc-outer", TAG_OUTER, 0.5 * math.pi * b,
                start_policy="shared", end_policy="shared",
                radius=b, theta0=0.0, theta1=0.5 * math.pi, outward=True,
            ),
        ]
    else:
        x0, y0, x1, y1 = domain.x0, domain.y0, domain.x1, domain.y1
        corners = [
            np.array([x0, y0]), np.array([x1, y0]),
            np.array([x1, y1]), np.array([x0, y1]),
        ]
        normals = [
            np.array([0.0, -1.0]), np.array([1.0, 0.0]),
            np.array([0.0, 1.0]), np.array([-1.0, 0.0]),
        ]
        pieces = []
        for k in range(4):
            p0, p1 = corners[k], corners[(k + 1) % 4]
            pieces.append(
                _Segment(
                    f"edge-{k}", domain.edge_tags[k], float(np.hypot(*(p1 - p0))),
                    closed=False, start_policy="node", end_policy="shared",
                    p0=p0, p1=p1, n=normals[k],
                )
            )
    for j, c in enumerate(domain.cutouts):
        pieces.append(
            _CutoutArc(
                f"cutout-{j}", c.tag, _TWO_PI * c.radius, closed=True,
                center=np.asarray(c.center, dtype=float), radius=c.radius, index=j,
            )
        )
    return pieces


def _kept_intervals(piece: _Piece, domain: Domain) -> list[tuple[float, float, bool, bool]]:
    """Sub-intervals of the piece on the domain boundary.

    Returns (t0, t1, at_piece_start, at_piece_end) per kept interval; the
    two flags mark whether the interval endpoint is the piece's own endpoint
    (as opposed to a trim point).
    """
    splits = sorted(piece.split_params(domain))
    if piece.closed:
        if not splits:
            q = piece.point(np.array([0.0]))[0]
            if piece.keep_midpoint(domain, q):
                return [(0.0, piece.length, True, True)]
            return []
        # wrap: intervals between consecutive splits, cyclically
        ts = splits + [splits[0] + piece.length]
        out = []
        for t0, t1 in zip(ts[:-1], ts[1:]):
            tm = 0.5 * (t0 + t1)
            q = piece.point(np.array([tm % piece.length]))[0]
            if piece.keep_midpoint(domain, q):
                out.append((t0, t1, False, False))
        return out
    ts = [0.0] + splits + [piece.length]
    out = []
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 <= 1e-12 * piece.length:
            continue
        q = piece.point(np.array([0.5 * (t0 + t1)]))[0]
        if piece.keep_midpoint(domain, q):
            out.append((t0, t1, t0 == 0.0, t1 == piece.length))
    return out


def _interval_offsets(length: float, h: float, start: str, end: str) -> np.ndarray:
    """Uniform arc-length offsets with spacing ~h under the endpoint policies."""
    if "trim" not in (start, end):
        n = max(1, round(length / h))
        knots = np.linspace(0.0, length, n + 1)
        lo = 0 if start == "node" else 1
        hi = len(knots) if end == "node" else len(knots) - 1
        return knots[lo:hi]
    if start == "trim" and end == "trim":
        n = max(1, round(length / h))
        s = length / n
        return s * (np.arange(n) + 0.5)
    # one trimmed end: half-spacing margin there, knot at/near the other end
    k = max(1, round(length / h + 0.5))
    s = length / (k - 0.5)
    off = s * np.arange(k)
    off = off if end == "trim" else length - off[::-1]
    if start == "shared":
        off = off[1:]
    if end == "shared":
        off = off[:-1]
    return off


def discretize_boundary(domain: Domain, h: float) -> list[BoundaryNode]:
    """Distribute nodes uniformly along every boundary piece.

    Consecutive spacing along a piece stays within [0.5h, 1.5h]; sector
    corners appear exactly once and are owned (tag/normal) by the essential
    piece; trim corners of cut-out arcs get no node.
    """
    if h <= 0:
        raise GeometryError("h must be positive")

    pieces = _base_pieces(domain)

    for piece in pieces:
        n_int = round(piece.length / h)
        if piece.closed and n_int < 3:
            raise GeometryError(f"boundary under-resolved on piece {piece.name}")
        if not piece.closed and n_int < 2:
            raise GeometryError(f"boundary under-resolved on piece {piece.name}")

    nodes: list[BoundaryNode] = []
    kept_positions: list[np.ndarray] = []
    piece_ids: list[int] = []
    # cross-piece thinning grid (cell size h)
    grid: dict[tuple[int, int], list[int]] = {}

    def near_other_piece(p: np.ndarray, pid: int, radius: float) -> bool:
        ix, iy = int(math.floor(p[0] / h)), int(math.floor(p[1] / h))
        for cx in range(ix - 1, ix + 2):
            for cy in range(iy - 1, iy + 2):
                for j in grid.get((cx, cy), ()):
                    if piece_ids[j] == pid:
                        continue
                    d = kept_positions[j] - p
                    if d[0] * d[0] + d[1] * d[1] < radius * radius:
                        return True
        return False

    thin_radius = 0.7 * h
    for pid, piece in enumerate(pieces):
        intervals = _kept_intervals(piece, domain)
        if not intervals:
            raise GeometryError(
                f"cut-outs erase the entire boundary piece {piece.name}"
            )
        for (t0, t1, at_start, at_end) in intervals:
            if piece.closed and at_start and at_end:
                n = max(3, round(piece.length / h))
                offs = piece.length * np.arange(n) / n
            else:
                start = piece.start_policy if at_start else "trim"
                end = piece.end_policy if at_end else "trim"
                offs = t0 + _interval_offsets(t1 - t0, h, start, end)
            pts = piece.point(offs % piece.length if piece.closed else offs)
            nrm = piece.normal(offs % piece.length if piece.closed else offs)
            for p, nv in zip(pts, nrm):
                if near_other_piece(p, pid, thin_radius):
                    continue
                j = len(kept_positions)
                kept_positions.append(p)
                piece_ids.append(pid)
                grid.setdefault(
                    (int(math.floor(p[0] / h)), int(math.floor(p[1] / h))), []
                ).append(j)
                nodes.append(BoundaryNode(position=p.copy(), normal=nv.copy(), tag=piece.tag))

    return nodes
